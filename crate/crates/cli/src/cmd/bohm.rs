//! `qsb bohm`: Bohm potential of a Gaussian mixture on a rectangular grid.

use std::path::{Path, PathBuf};

use qsb_core::bohm::bohm_generic_fd;
use qsb_core::gmm::{bohm_mixture_with, GaussianMixture, MixtureJson};
use qsb_core::io::fmt_float;
use serde::Deserialize;
use serde_json::json;

use crate::config::{check, load_config, print_summary, resolve, OutDir};
use crate::error::{CliError, CliResult};

/// Relative agreement required between the closed form and finite differences.
pub const FD_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-4;
const FD_SPOT_CHECKS: usize = 16;
const MAX_GRID_POINTS: usize = 4_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    min: Vec<f64>,
    max: Vec<f64>,
    points: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BohmConfig {
    mixture: Option<MixtureJson>,
    mixture_file: Option<PathBuf>,
    beta: f64,
    grid: GridSpec,
    /// Lower display clamp; off unless given.
    clamp: Option<f64>,
    #[serde(default = "yes")]
    include_mixing: bool,
}

fn yes() -> bool {
    true
}

fn load_mixture(config_path: &Path, cfg: &BohmConfig) -> CliResult<GaussianMixture<f64>> {
    match (&cfg.mixture, &cfg.mixture_file) {
        (Some(m), None) => Ok(m.to_mixture()?),
        (None, Some(p)) => {
            let path = resolve(config_path, p);
            let m: MixtureJson = load_config(&path)?;
            Ok(m.to_mixture()?)
        }
        _ => Err(CliError::config(
            config_path,
            "give exactly one of `mixture` and `mixture_file`",
        )),
    }
}

fn axes(config_path: &Path, g: &GridSpec, dim: usize) -> CliResult<Vec<Vec<f64>>> {
    if g.min.len() != dim || g.max.len() != dim || g.points.len() != dim {
        return Err(CliError::config(
            config_path,
            format!("grid min, max and points need one entry per dimension ({dim})"),
        ));
    }
    let total = g.points.iter().try_fold(1usize, |acc, &p| acc.checked_mul(p));
    if g.points.contains(&0) || total.is_none_or(|t| t > MAX_GRID_POINTS) {
        return Err(CliError::config(
            config_path,
            format!("grid needs between 1 and {MAX_GRID_POINTS} points"),
        ));
    }
    Ok((0..dim)
        .map(|a| {
            let (lo, hi, p) = (g.min[a], g.max[a], g.points[a]);
            if p == 1 {
                vec![lo]
            } else {
                (0..p).map(|i| lo + (hi - lo) * i as f64 / (p - 1) as f64).collect()
            }
        })
        .collect())
}

/// Grid points in row-major order, last axis fastest.
fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::new()];
    for axis in axes {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    pts
}

pub fn run(config_path: &Path, out: &Path, verify: bool) -> CliResult<()> {
    let cfg: BohmConfig = load_config(config_path)?;
    let mix = load_mixture(config_path, &cfg)?;
    let pts = grid_points(&axes(config_path, &cfg.grid, mix.dim())?);
    let q: Vec<f64> = pts
        .iter()
        .map(|x| bohm_mixture_with(&mix, cfg.beta, x, cfg.include_mixing))
        .collect();
    let shown: Vec<f64> = match cfg.clamp {
        Some(c) => q.iter().map(|&v| v.max(c)).collect(),
        None => q.clone(),
    };

    let out = OutDir::create(out)?;
    let mut header: Vec<String> = (0..mix.dim()).map(|i| format!("x{i}")).collect();
    header.push("Q".into());
    let rows = pts
        .iter()
        .zip(&shown)
        .map(|(x, &v)| x.iter().copied().chain([v]).map(fmt_float).collect())
        .collect();
    out.table("bohm.csv", (header, rows))?;

    let fold = |f: fn(f64, f64) -> f64, init: f64| shown.iter().copied().fold(init, f);
    let mut summary = json!({
        "points": pts.len(),
        "min_q": fold(f64::min, f64::INFINITY),
        "max_q": fold(f64::max, f64::NEG_INFINITY),
        "clamped": q.iter().zip(&shown).filter(|(a, b)| a != b).count(),
    });
    if !verify {
        print_summary(&summary);
        return Ok(());
    }
    if !cfg.include_mixing {
        return Err(CliError::Usage(
            "--verify compares against the full potential; drop include_mixing = false".into(),
        ));
    }
    let logp = |x: &[f64]| mix.log_pdf(x);
    let stride = pts.len().div_ceil(FD_SPOT_CHECKS).max(1);
    let mut worst = 0.0f64;
    for (x, &exact) in pts.iter().zip(&q).step_by(stride) {
        let fd = bohm_generic_fd(&logp, cfg.beta, x, FD_STEP)?;
        worst = worst.max((exact - fd).abs() / exact.abs().max(1.0));
    }
    summary["max_fd_relative_error"] = json!(worst);
    print_summary(&summary);
    let mut failures = Vec::new();
    if !(worst <= FD_TOL) {
        failures.push(format!("finite-difference mismatch {worst:e} > {FD_TOL:e}"));
    }
    check(failures)
}
