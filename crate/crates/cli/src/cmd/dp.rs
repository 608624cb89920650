//! `sbc dp`: grid value iteration.

use std::path::{Path, PathBuf};

use clap::Args;
use sbc_core::certificates::SamplingConfig;
use sbc_core::dp::{DpOperator, DpResult, GridSpec, Spec};
use sbc_core::model::{RegionName, SystemModel};
use serde::{Deserialize, Serialize};

use crate::common::{aligned, csv_text, format_point, initial_state, load_model, Format, SpecArg};
use crate::config::{self, overlay_fields, Overlay};
use crate::error::{CliResult, Outcome};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpArgs {
    /// Model file (JSON).
    pub model: Option<PathBuf>,
    /// Specification; `all` evaluates every one the model supports.
    #[arg(long, value_enum)]
    pub spec: Option<SpecArg>,
    /// Initial state, comma separated; defaults to the model's initial state.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Also report the worst value over this many sampled points of X0.
    #[arg(long)]
    pub x0_samples: Option<usize>,
    /// Grid nodes per state axis.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Gauss-Legendre nodes per noise dimension.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Nodes per axis of the grid used for the convergence check; 0 skips it.
    #[arg(long)]
    pub refine_nodes: Option<usize>,
    /// Write all stage value tables to this CSV file.
    #[arg(long)]
    pub value_csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

overlay_fields!(DpArgs; model, spec, x0, x0_samples, nodes, quad_nodes, refine_nodes, value_csv, format);

struct SpecRun {
    spec: Spec,
    value: f64,
    refined: Option<(usize, f64)>,
    worst_x0: Option<(usize, f64)>,
}

fn quantity(spec: Spec) -> &'static str {
    match spec {
        Spec::Safety => "unsafe probability 1-SA(x0)",
        Spec::ReachAvoid => "reach-avoid probability RA(x0)",
    }
}

fn csv_path(base: &Path, spec: Spec, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    base.with_file_name(format!("{stem}_{spec}.csv"))
}

pub fn run(args: DpArgs, config: Option<&Path>) -> CliResult<Outcome> {
    let s = args.overlay(config::load(config, "dp")?);
    let model = load_model(s.model.as_deref())?;
    let nodes = s.nodes.unwrap_or(GridSpec::default_nodes(model.space.state_dim));
    let x0 = initial_state(s.x0.clone(), &model)?;
    let s = s.overlay(DpArgs {
        spec: Some(SpecArg::All),
        x0: Some(x0.clone()),
        nodes: Some(nodes),
        quad_nodes: Some(GridSpec::DEFAULT_QUAD_NODES),
        refine_nodes: Some((2 * nodes).saturating_sub(1)),
        format: Some(Format::Human),
        ..Default::default()
    });
    let grid = GridSpec::with_nodes(&model, nodes, s.quad_nodes.unwrap())?;
    let refine = s.refine_nodes.filter(|&n| n > 0);
    let x0_points = match s.x0_samples {
        Some(n) if model.has_region(RegionName::X0) => {
            let cfg = SamplingConfig {
                samples_per_region: n,
                ..Default::default()
            };
            Some(cfg.sample_region(&model, RegionName::X0)?)
        }
        _ => None,
    };

    let specs = s.spec.unwrap().specs(&model);
    let mut runs = Vec::new();
    for &spec in &specs {
        let result = DpOperator::new(&model, grid.clone(), spec)?.run();
        let value = result.value_at(&x0)?;
        if let Some(path) = &s.value_csv {
            result.write_csv(&csv_path(path, spec, specs.len() > 1))?;
        }
        let refined = match refine {
            Some(n) => {
                let fine = GridSpec::with_nodes(&model, n, grid.quad_nodes)?;
                Some((n, DpOperator::new(&model, fine, spec)?.run().value_at(&x0)?))
            }
            None => None,
        };
        let worst_x0 = match &x0_points {
            Some(pts) => Some((pts.len(), worst_over(&result, spec, pts)?)),
            None => None,
        };
        runs.push(SpecRun {
            spec,
            value,
            refined,
            worst_x0,
        });
    }

    print!("{}", config::header("dp", &s)?);
    match s.format.unwrap() {
        Format::Human => print_human(&model, &x0, nodes, &runs),
        Format::Csv => print_csv(nodes, &runs)?,
    }
    Ok(Outcome::Pass)
}

/// Highest unsafe or lowest reach-avoid probability over `pts`.
fn worst_over(result: &DpResult, spec: Spec, pts: &[Vec<f64>]) -> CliResult<f64> {
    let mut worst: Option<f64> = None;
    for p in pts {
        let v = result.value_at(p)?;
        worst = Some(match (worst, spec) {
            (None, _) => v,
            (Some(w), Spec::Safety) => w.max(v),
            (Some(w), Spec::ReachAvoid) => w.min(v),
        });
    }
    Ok(worst.unwrap_or(f64::NAN))
}

fn print_human(model: &SystemModel, x0: &[f64], nodes: usize, runs: &[SpecRun]) {
    println!(
        "model {} horizon {} x0 = [{}]",
        model.name,
        model.horizon,
        format_point(x0)
    );
    let mut rows = Vec::new();
    for r in runs {
        rows.push(vec![
            r.spec.to_string(),
            quantity(r.spec).into(),
            format!("{nodes} nodes"),
            format!("{:.6}", r.value),
            String::new(),
        ]);
        if let Some((n, v)) = r.refined {
            rows.push(vec![
                String::new(),
                "grid check".into(),
                format!("{n} nodes"),
                format!("{v:.6}"),
                format!("change {:.2e}", (v - r.value).abs()),
            ]);
        }
        if let Some((n, v)) = r.worst_x0 {
            let what = if r.spec == Spec::Safety {
                "max over X0"
            } else {
                "min over X0"
            };
            rows.push(vec![
                String::new(),
                what.into(),
                format!("{n} points"),
                format!("{v:.6}"),
                String::new(),
            ]);
        }
    }
    print!("{}", aligned(&rows));
}

fn print_csv(nodes: usize, runs: &[SpecRun]) -> CliResult<()> {
    let mut rows = vec![vec![
        "spec".into(),
        "quantity".into(),
        "points".into(),
        "nodes".into(),
        "value".into(),
    ]];
    for r in runs {
        let spec = r.spec.to_string();
        rows.push(vec![
            spec.clone(),
            "x0".into(),
            "1".into(),
            nodes.to_string(),
            r.value.to_string(),
        ]);
        if let Some((n, v)) = r.refined {
            rows.push(vec![
                spec.clone(),
                "x0".into(),
                "1".into(),
                n.to_string(),
                v.to_string(),
            ]);
        }
        if let Some((n, v)) = r.worst_x0 {
            rows.push(vec![
                spec.clone(),
                "worst over X0".into(),
                n.to_string(),
                nodes.to_string(),
                v.to_string(),
            ]);
        }
    }
    print!("{}", csv_text(&rows)?);
    Ok(())
}
