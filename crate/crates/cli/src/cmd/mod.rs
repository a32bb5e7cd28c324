pub mod bohm;
pub mod bridge;
pub mod metrics;
pub mod mfg;
pub mod wavepacket;
