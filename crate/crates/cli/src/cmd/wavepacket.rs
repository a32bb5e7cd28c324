//! `qsb wavepacket`: train a mixture bridge on sample files and evaluate it on
//! held-out splits.

use std::path::{Path, PathBuf};

use qsb_core::gmm::MixtureJson;
use qsb_core::io::read_points_file;
use qsb_core::metrics::{emd_samples, subsample, EMD_MAX_POINTS};
use qsb_core::mfg::derive_seed;
use qsb_core::wavepacket::{paths_table, train_bridge, NoiseConvention, TrainConfig, TrainReport};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{check, effective_seed, from_value, print_summary, read_json_value, resolve, OutDir, TimeGrid};
use crate::error::{CliError, CliResult};

const TAG_SPLIT0: u64 = 101;
const TAG_SPLIT1: u64 = 102;
const TAG_EVAL0: u64 = 103;
const TAG_EVAL1: u64 = 104;
const TAG_BASE: u64 = 105;
const TAG_PROPAGATE: u64 = 106;
const TAG_GENERATE: u64 = 107;
const TAG_PATHS: u64 = 108;

/// Slack allowed when checking that an EM objective trace never increases.
const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathsSpec {
    samples: usize,
    #[serde(default)]
    t_grid: TimeGrid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WavepacketConfig {
    samples0: PathBuf,
    samples1: PathBuf,
    /// Fraction of each file held out for evaluation.
    #[serde(default = "default_holdout")]
    holdout: f64,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default = "default_t_values")]
    t_values: Vec<f64>,
    #[serde(default)]
    noise: NoiseConvention,
    /// Points per side in each exact EMD.
    #[serde(default = "default_eval_points")]
    eval_points: usize,
    paths: Option<PathsSpec>,
    seed: Option<u64>,
}

fn default_holdout() -> f64 {
    0.5
}

fn default_t_values() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_eval_points() -> usize {
    EMD_MAX_POINTS
}

#[derive(Serialize)]
struct MarginalJson {
    t: f64,
    mixture: MixtureJson,
}

/// Shuffles and splits into (train, held-out).
fn split(x: Vec<Vec<f64>>, holdout: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut x = x;
    x.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((x.len() as f64) * holdout).round() as usize;
    let test = x.split_off(x.len() - n_test);
    (x, test)
}

fn monotone(report: &TrainReport) -> bool {
    report.phases.iter().all(|p| {
        p.objective
            .windows(2)
            .all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].abs().max(1.0))
    })
}

pub fn run(config_path: &Path, seed: Option<u64>, out: &Path, verify: bool) -> CliResult<()> {
    let raw = read_json_value(config_path)?;
    if raw.get("train").and_then(|t| t.get("seed")).is_some() {
        return Err(CliError::config(
            config_path,
            "set `seed` at the top level, not inside `train`",
        ));
    }
    let mut cfg: WavepacketConfig = from_value(config_path, raw)?;
    let seed = effective_seed(seed, cfg.seed);
    cfg.train.seed = seed;
    if !(cfg.holdout > 0.0 && cfg.holdout < 1.0) {
        return Err(CliError::config(config_path, "holdout must lie in (0, 1)"));
    }
    if cfg.t_values.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(CliError::config(config_path, "t_values must lie in [0, 1]"));
    }
    if cfg.eval_points == 0 || cfg.eval_points > EMD_MAX_POINTS {
        return Err(CliError::config(
            config_path,
            format!("eval_points must lie in 1..={EMD_MAX_POINTS}"),
        ));
    }
    let load = |p: &Path| -> CliResult<Vec<Vec<f64>>> {
        let path = resolve(config_path, p);
        read_points_file(&path).map_err(|e| match e {
            qsb_core::Error::Io(io) => CliError::io(&path, io),
            other => CliError::config(&path, other.to_string()),
        })
    };
    let (train0, test0) = split(load(&cfg.samples0)?, cfg.holdout, derive_seed(seed, TAG_SPLIT0));
    let (train1, test1) = split(load(&cfg.samples1)?, cfg.holdout, derive_seed(seed, TAG_SPLIT1));
    if [&train0, &test0, &train1, &test1].iter().any(|s| s.is_empty()) {
        return Err(CliError::config(
            config_path,
            "both splits of both sample files must be nonempty",
        ));
    }

    let (bridge, report) = train_bridge(&train0, &train1, &cfg.train)?;

    let n_eval = cfg.eval_points.min(test0.len()).min(test1.len()).min(train1.len());
    let x0 = subsample(&test0, n_eval, derive_seed(seed, TAG_EVAL0));
    let x1 = subsample(&test1, n_eval, derive_seed(seed, TAG_EVAL1));
    let base = subsample(&train1, n_eval, derive_seed(seed, TAG_BASE));
    let propagated: Vec<Vec<f64>> = bridge
        .propagate_samples(&x0, &[0.0, 1.0], derive_seed(seed, TAG_PROPAGATE), cfg.noise)?
        .into_iter()
        .map(|mut p| p.points.pop().expect("two time points"))
        .collect();
    let generated = bridge
        .mixture_marginal(1.0)?
        .sample(n_eval, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_GENERATE)));
    let emd_t0 = emd_samples(&x0, &x1)?;
    let emd_t1 = emd_samples(&propagated, &x1)?;
    let emd_generated = emd_samples(&generated, &x1)?;
    let emd_baseline = emd_samples(&base, &x1)?;
    let is_monotone = monotone(&report);

    let out = OutDir::create(out)?;
    out.text("bridge.json", &bridge.to_json())?;
    let marginals = cfg
        .t_values
        .iter()
        .map(|&t| {
            Ok(MarginalJson {
                t,
                mixture: MixtureJson::from_mixture(&bridge.mixture_marginal(t)?),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    out.json("marginals.json", &marginals)?;
    out.json("train_report.json", &report)?;
    if let Some(spec) = &cfg.paths {
        let grid = spec.t_grid.values(config_path)?;
        let starts = subsample(&test0, spec.samples, derive_seed(seed, TAG_PATHS));
        let paths = bridge.propagate_samples(&starts, &grid, derive_seed(seed, TAG_PATHS), cfg.noise)?;
        out.table("paths.csv", paths_table(&paths, &grid))?;
    }
    let summary = json!({
        "n_train": [train0.len(), train1.len()],
        "n_eval": n_eval,
        "emd_t0": emd_t0,
        "emd_t1": emd_t1,
        "emd_generated_t1": emd_generated,
        "emd_baseline": emd_baseline,
        "ratio_t1": emd_t1 / emd_t0,
        "objective_monotone": is_monotone,
        "outer_iterations": report.parameter_change.len(),
        "converged": report.converged,
        "clamped_components": report.clamped_components,
    });
    out.json("report.json", &summary)?;
    print_summary(&summary);

    if !verify {
        return Ok(());
    }
    let mut failures = Vec::new();
    if !(emd_t1 < emd_t0) {
        failures.push(format!("EMD at t=1 ({emd_t1}) is not below EMD at t=0 ({emd_t0})"));
    }
    if !is_monotone {
        failures.push("a per-phase EM objective increased".into());
    }
    check(failures)
}
