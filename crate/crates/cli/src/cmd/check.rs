//! `sbc check`: sampled verification of a certificate file.

use std::path::{Path, PathBuf};

use clap::Args;
use sbc_core::certificates::{check_certificate, evaluate_bound, BarrierCertificate, BoundAt};
use serde::{Deserialize, Serialize};

use crate::common::{format_point, load_model, sampling};
use crate::config::{self, overlay_fields, Overlay};
use crate::error::{CliError, CliResult, Outcome};

/// Margins below `-CHECK_TOL` fail the check.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckArgs {
    /// Model file (JSON).
    pub model: Option<PathBuf>,
    /// Certificate file (JSON).
    pub certificate: Option<PathBuf>,
    /// Sample points per region.
    #[arg(long)]
    pub samples_per_region: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

overlay_fields!(CheckArgs; model, certificate, samples_per_region, seed);

pub fn run(args: CheckArgs, config: Option<&Path>) -> CliResult<Outcome> {
    let s = args.overlay(config::load(config, "check")?);
    let model = load_model(s.model.as_deref())?;
    let cfg = sampling(s.samples_per_region, s.seed);
    let s = s.overlay(CheckArgs {
        samples_per_region: Some(cfg.samples_per_region),
        seed: Some(cfg.seed),
        ..Default::default()
    });
    let path = s
        .certificate
        .as_deref()
        .ok_or_else(|| CliError::Config("no certificate file given".into()))?;
    let cert = BarrierCertificate::read_file(path, model.space)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let report = check_certificate(&cert, &model, &cfg)?;

    print!("{}", config::header("check", &s)?);
    print!("{report}");
    let what = if cert.kind.is_safety() {
        "upper bound on 1-SA"
    } else {
        "lower bound on RA"
    };
    if let Some(x0) = &model.initial_state {
        let b = evaluate_bound(&cert, model.horizon, BoundAt::Point(x0))?;
        println!("{what} at x0 = [{}]: {:.6}", format_point(x0), b.raw);
    }
    if let Some(d) = cert.delta {
        let b = evaluate_bound(&cert, model.horizon, BoundAt::Delta(d))?;
        println!("{what} over X0 (delta = {d:.6e}): {:.6}", b.raw);
    }
    let worst = report.worst_margin();
    if report.passes(CHECK_TOL) {
        println!("result PASS (worst margin {worst:.3e})");
        Ok(Outcome::Pass)
    } else {
        let failed: Vec<&str> = report
            .conditions
            .iter()
            .filter(|c| c.worst_margin < -CHECK_TOL)
            .map(|c| c.name.as_str())
            .collect();
        println!(
            "result FAIL (worst margin {worst:.3e}); violated: {}",
            failed.join("; ")
        );
        Ok(Outcome::CheckFailed)
    }
}
