//! `qsb metrics`: exact EMD between two sample files.
//!
//! The assignment is exact, so both sets are cut to a common size `n`: the
//! smaller file size, capped by `--subsample` and by the solver limit. Larger
//! sets are subsampled uniformly without replacement with seeded draws; sets
//! already of size `n` are used as given.

use std::path::Path;

use qsb_core::io::read_points_file;
use qsb_core::metrics::{emd_samples, gaussian_fit, subsample, w2_gaussian, EMD_MAX_POINTS};
use qsb_core::mfg::derive_seed;
use serde_json::json;

use crate::config::{effective_seed, print_summary, OutDir};
use crate::error::{CliError, CliResult};

const TAG_A: u64 = 301;
const TAG_B: u64 = 302;

fn load(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    read_points_file(path).map_err(|e| match e {
        qsb_core::Error::Io(io) => CliError::io(path, io),
        other => CliError::config(path, other.to_string()),
    })
}

pub fn run(
    a: &Path,
    b: &Path,
    limit: Option<usize>,
    gaussian: bool,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let seed = effective_seed(seed, None);
    let xa = load(a)?;
    let xb = load(b)?;
    if xa.is_empty() || xb.is_empty() {
        return Err(CliError::Usage("sample files must hold at least one point".into()));
    }
    let n = xa
        .len()
        .min(xb.len())
        .min(limit.unwrap_or(EMD_MAX_POINTS))
        .min(EMD_MAX_POINTS);
    if n == 0 {
        return Err(CliError::Usage("--subsample must be positive".into()));
    }
    let sa = subsample(&xa, n, derive_seed(seed, TAG_A));
    let sb = subsample(&xb, n, derive_seed(seed, TAG_B));
    let mut summary = json!({ "n": n, "emd": emd_samples(&sa, &sb)? });
    if gaussian {
        summary["w2_gaussian"] = json!(w2_gaussian(&gaussian_fit(&xa)?, &gaussian_fit(&xb)?)?);
    }
    if let Some(dir) = out {
        OutDir::create(dir)?.json("metrics.json", &summary)?;
    }
    print_summary(&summary);
    Ok(())
}
