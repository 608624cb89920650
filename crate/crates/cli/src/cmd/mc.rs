//! `sbc mc`: Monte-Carlo trajectory simulation.

use std::path::{Path, PathBuf};

use clap::Args;
use sbc_core::dp::{monte_carlo, Spec};
use serde::{Deserialize, Serialize};

use crate::common::{aligned, csv_text, format_point, initial_state, load_model, Format, SpecArg};
use crate::config::{self, overlay_fields, Overlay};
use crate::error::{CliError, CliResult, Outcome};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McArgs {
    /// Model file (JSON).
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub spec: Option<SpecArg>,
    /// Initial state, comma separated; defaults to the model's initial state.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Number of trajectories.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

overlay_fields!(McArgs; model, spec, x0, samples, seed, format);

pub fn run(args: McArgs, config: Option<&Path>) -> CliResult<Outcome> {
    let s = args.overlay(config::load(config, "mc")?);
    let model = load_model(s.model.as_deref())?;
    let x0 = initial_state(s.x0.clone(), &model)?;
    let s = s.overlay(McArgs {
        spec: Some(SpecArg::Safety),
        x0: Some(x0.clone()),
        samples: Some(1_000_000),
        seed: Some(0),
        format: Some(Format::Human),
        ..Default::default()
    });
    let specs = s.spec.unwrap().specs(&model);
    let (n, seed) = (s.samples.unwrap(), s.seed.unwrap());
    if n == 0 {
        return Err(CliError::Config("--samples must be positive".into()));
    }
    let mut estimates = Vec::new();
    for &spec in &specs {
        estimates.push(monte_carlo(&model, &x0, spec, n, seed)?);
    }

    print!("{}", config::header("mc", &s)?);
    let mut rows = Vec::new();
    for e in &estimates {
        let (bad, bad_ci) = e.complement();
        let (good_name, bad_name) = match e.spec {
            Spec::Safety => ("safe", "unsafe"),
            Spec::ReachAvoid => ("reach-avoid", "fail"),
        };
        rows.push((e, good_name, e.estimate, e.ci));
        rows.push((e, bad_name, bad, bad_ci));
    }
    match s.format.unwrap() {
        Format::Human => {
            println!(
                "model {} horizon {} x0 = [{}] samples {n} seed {seed}",
                model.name,
                model.horizon,
                format_point(&x0)
            );
            let mut table = vec![vec![
                "spec".into(),
                "event".into(),
                "estimate".into(),
                "99% interval".into(),
            ]];
            for (e, name, p, (lo, hi)) in &rows {
                table.push(vec![
                    e.spec.to_string(),
                    name.to_string(),
                    format!("{p:.6}"),
                    format!("[{lo:.6}, {hi:.6}]"),
                ]);
            }
            print!("{}", aligned(&table));
        }
        Format::Csv => {
            let mut table = vec![vec![
                "spec".into(),
                "event".into(),
                "samples".into(),
                "estimate".into(),
                "ci_low".into(),
                "ci_high".into(),
            ]];
            for (e, name, p, (lo, hi)) in &rows {
                table.push(vec![
                    e.spec.to_string(),
                    name.to_string(),
                    e.samples.to_string(),
                    p.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                ]);
            }
            print!("{}", csv_text(&table)?);
        }
    }
    Ok(Outcome::Pass)
}
