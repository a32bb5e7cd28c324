//! `qsb mfg`: crowd navigation through a built-in or custom environment.

use std::path::Path;

use qsb_core::io::fmt_float;
use qsb_core::mfg::{
    builtin_scenario, collision_fraction, derive_seed, loss_table, optimize, path_length, sample_paths,
    trajectory_table, MfgConfig, Scenario, ScenarioJson,
};
use qsb_core::wavepacket::NoiseConvention;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{check, effective_seed, from_value, merge, print_summary, read_json_value, OutDir};
use crate::error::{CliError, CliResult};

const TAG_PATHS: u64 = 201;

/// Collision share allowed by `--verify`.
pub const COLLISION_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, Deserialize)]
enum Preset {
    /// T = 50, batch 300, tuned obstacle weight.
    #[default]
    #[serde(rename = "desk")]
    Desk,
    /// T = 100, batch 1000, obstacle weight 5000.
    #[serde(rename = "paper")]
    Paper,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MfgFile {
    env: Option<String>,
    scenario: Option<ScenarioJson>,
    #[serde(default)]
    preset: Preset,
    /// Fields overriding the preset.
    #[serde(default)]
    mfg: Value,
    /// Sampled paths written to `paths.csv`.
    #[serde(default = "default_path_samples")]
    path_samples: usize,
    #[serde(default)]
    noise: NoiseConvention,
    seed: Option<u64>,
}

fn default_path_samples() -> usize {
    100
}

impl Default for MfgFile {
    fn default() -> Self {
        Self {
            env: None,
            scenario: None,
            preset: Preset::Desk,
            mfg: Value::Null,
            path_samples: default_path_samples(),
            noise: NoiseConvention::Covariance,
            seed: None,
        }
    }
}

fn build_config(path: &Path, file: &MfgFile, seed: u64) -> CliResult<MfgConfig> {
    if file.mfg.get("seed").is_some() {
        return Err(CliError::config(path, "set `seed` at the top level, not inside `mfg`"));
    }
    let base = match file.preset {
        Preset::Desk => MfgConfig::desk_scale(),
        Preset::Paper => MfgConfig::default(),
    };
    let mut value = serde_json::to_value(base).expect("config serializes");
    if !file.mfg.is_null() {
        merge(&mut value, file.mfg.clone());
    }
    let mut cfg: MfgConfig = from_value(path, value)?;
    cfg.seed = seed;
    Ok(cfg)
}

pub fn run(
    config_path: Option<&Path>,
    env: Option<&str>,
    seed: Option<u64>,
    out: &Path,
    verify: bool,
) -> CliResult<()> {
    let (file, path) = match config_path {
        Some(p) => (from_value::<MfgFile>(p, read_json_value(p)?)?, p),
        None => (MfgFile::default(), Path::new("<defaults>")),
    };
    let seed = effective_seed(seed, file.seed);
    let cfg = build_config(path, &file, seed)?;
    // --env wins over whatever the config names
    let scenario: Scenario<f64> = match (env, file.env.as_deref(), &file.scenario) {
        (Some(name), _, _) | (None, Some(name), None) => builtin_scenario(name)?,
        (None, None, Some(s)) => s.to_scenario()?,
        (None, Some(_), Some(_)) => return Err(CliError::config(path, "give either `env` or `scenario`, not both")),
        (None, None, None) => {
            return Err(CliError::Usage(
                "pick an environment with --env or a config file".into(),
            ))
        }
    };

    let result = optimize(&scenario, &cfg)?;
    let eval_paths = sample_paths(
        &result.params,
        cfg.eval_batch.max(file.path_samples),
        cfg.beta,
        derive_seed(seed, TAG_PATHS),
        file.noise,
    )?;
    let collisions = collision_fraction(
        &scenario.env,
        &eval_paths[..cfg.eval_batch.max(1).min(eval_paths.len())],
    );

    let out = OutDir::create(out)?;
    out.table("trajectory.csv", trajectory_table(&result.params))?;
    out.table("init_trajectory.csv", trajectory_table(&result.init))?;
    out.table("loss.csv", loss_table(&result.history))?;
    let dt = result.params.dt();
    let mut rows = Vec::new();
    for (s, path) in eval_paths.iter().take(file.path_samples).enumerate() {
        for (i, p) in path.iter().enumerate() {
            rows.push(vec![
                s.to_string(),
                i.to_string(),
                fmt_float(dt * i as f64),
                fmt_float(p[0]),
                fmt_float(p[1]),
            ]);
        }
    }
    let header = ["sample_id", "i", "t", "x", "y"].map(String::from).to_vec();
    out.table("paths.csv", (header, rows))?;
    let rrt_rows = result
        .rrt
        .path
        .iter()
        .map(|p| vec![fmt_float(p[0]), fmt_float(p[1])])
        .collect();
    out.table("rrt_path.csv", (vec!["x".into(), "y".into()], rrt_rows))?;

    let steps = result.params.steps();
    let endpoints_exact = result.params.mu[0] == scenario.start.mean && result.params.mu[steps] == scenario.goal.mean;
    let summary = json!({
        "config": cfg,
        "rrt_path_length": path_length(&result.rrt.path),
        "initial_loss": result.initial_eval,
        "final_loss": result.final_eval,
        "reverted": result.reverted,
        "endpoints_exact": endpoints_exact,
        "collision_fraction": collisions,
    });
    out.json("summary.json", &summary)?;
    print_summary(&summary);

    if !verify {
        return Ok(());
    }
    let mut failures = Vec::new();
    if !(result.final_eval.total < result.initial_eval.total) {
        failures.push(format!(
            "final loss {} is not below initial loss {}",
            result.final_eval.total, result.initial_eval.total
        ));
    }
    if !endpoints_exact {
        failures.push("endpoint means moved".into());
    }
    if !(collisions < COLLISION_TOL) {
        failures.push(format!("collision fraction {collisions} >= {COLLISION_TOL}"));
    }
    check(failures)
}
