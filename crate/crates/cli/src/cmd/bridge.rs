//! `qsb bridge`: closed-form marginals on a time grid, optional PDE residuals.

use std::path::Path;

use qsb_core::bridge::{BridgeKind, BridgeProblem, FdSteps};
use qsb_core::gmm::GaussianJson;
use qsb_core::io::fmt_float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use crate::config::{check, effective_seed, load_config, print_summary, OutDir, TimeGrid};
use crate::error::CliResult;

/// Residual bound checked by `--verify`.
pub const RESIDUAL_TOL: f64 = 1e-4;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BridgeConfig {
    g0: GaussianJson,
    g1: GaussianJson,
    beta: f64,
    #[serde(default = "default_kind")]
    kind: BridgeKind,
    #[serde(default)]
    t_grid: TimeGrid,
    /// Marginal draws per time at which the pointwise residuals are taken.
    #[serde(default = "default_verify_points")]
    verify_points: usize,
    seed: Option<u64>,
}

fn default_kind() -> BridgeKind {
    BridgeKind::Quantum
}

fn default_verify_points() -> usize {
    16
}

pub fn run(config_path: &Path, seed: Option<u64>, out: &Path, verify: bool) -> CliResult<()> {
    let cfg: BridgeConfig = load_config(config_path)?;
    let seed = effective_seed(seed, cfg.seed);
    let ts = cfg.t_grid.values(config_path)?;
    let problem = BridgeProblem::new(cfg.g0.to_gaussian::<f64>()?, cfg.g1.to_gaussian()?, cfg.beta, cfg.kind)?;
    let n = problem.dim();
    let out = OutDir::create(out)?;

    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("mean{i}")));
    for i in 0..n {
        header.extend((i..n).map(|j| format!("cov{i}{j}")));
    }
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let cov = problem.covariance(t)?;
        let mut r = vec![fmt_float(t)];
        r.extend(problem.mean(t).into_iter().map(fmt_float));
        for i in 0..n {
            r.extend((i..n).map(|j| fmt_float(cov.get(i, j))));
        }
        rows.push(r);
    }
    out.table("marginals.csv", (header, rows))?;

    let mut summary = json!({
        "kind": cfg.kind.name(),
        "beta": cfg.beta,
        "beta_max": problem.beta_max(),
        "rows": ts.len(),
    });
    if !verify {
        print_summary(&summary);
        return Ok(());
    }

    let steps = FdSteps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut worst = [0.0f64; 3];
    for &t in ts.iter().filter(|&&t| t - steps.time >= 0.0 && t + steps.time <= 1.0) {
        let mut r = [0.0f64; 3];
        for x in problem.sample_marginal(t, cfg.verify_points.max(1), &mut rng)? {
            r[0] = r[0].max(problem.continuity_residual(&x, t, steps)?);
            r[1] = r[1].max(problem.hje_residual(&x, t, steps)?);
        }
        r[2] = problem.riccati_residual(t, steps.time)?;
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
        rows.push(std::iter::once(t).chain(r).map(fmt_float).collect());
    }
    let header = ["t", "continuity", "hje", "riccati"].map(String::from).to_vec();
    let checked = rows.len();
    out.table("residuals.csv", (header, rows))?;

    summary["max_residual"] = json!({ "continuity": worst[0], "hje": worst[1], "riccati": worst[2] });
    print_summary(&summary);
    let mut failures = Vec::new();
    if checked == 0 {
        failures.push("no interior time in t_grid to check".to_string());
    }
    for (name, v) in ["continuity", "hje", "riccati"].iter().zip(worst) {
        if !(v < RESIDUAL_TOL) {
            failures.push(format!("{name} residual {v:e} >= {RESIDUAL_TOL:e}"));
        }
    }
    check(failures)
}
