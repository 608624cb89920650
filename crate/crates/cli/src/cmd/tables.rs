//! `sbc tables`: regenerate the four published tables as CSV.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use sbc_core::certificates::{CertificateKind, SamplingConfig};
use sbc_core::model::SystemModel;
use sbc_core::sos::{alpha_sweep, synthesize, SosOptions, SweepRow, SweepTable, SynthesisResult};
use sbc_sdp::InteriorPoint;
use serde::{Deserialize, Serialize};

use crate::cmd::synth::NOT_APPLICABLE;
use crate::common::{aligned, csv_text, sampling};
use crate::config::{self, overlay_fields, Overlay};
use crate::error::{CliError, CliResult, Outcome};
use crate::published::*;

use CertificateKind::{Dsbc, Msbc, Rabc, Ssbc};

/// Cell shown when a run fails or yields an invalid certificate.
pub const FAILED: &str = "FAILED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum Which {
    I,
    II,
    III,
    IV,
    #[serde(rename = "all")]
    All,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesArgs {
    /// Table to regenerate.
    #[arg(value_enum, ignore_case = true)]
    pub which: Option<Which>,
    /// Directory for the CSV files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Sample points per region for the validity checks.
    #[arg(long)]
    pub samples_per_region: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

overlay_fields!(TablesArgs; which, out_dir, samples_per_region, seed);

/// Safety sweeps of one example, in DSBC, MSBC, SSBC order.
struct SafetyTables {
    sweeps: Vec<SweepTable>,
}

impl SafetyTables {
    fn run(model: &SystemModel, alphas: &[f64], degree: u32, cfg: &SamplingConfig) -> Self {
        let backend = InteriorPoint::default();
        let sweeps = [Dsbc, Msbc, Ssbc]
            .iter()
            .map(|&k| alpha_sweep(model, k, alphas, SosOptions::degree(degree), &backend, cfg))
            .collect();
        Self { sweeps }
    }

    fn dsbc(&self) -> &SweepTable {
        &self.sweeps[0]
    }
}

struct Cells {
    rows: Vec<Vec<String>>,
    failures: usize,
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn published_cell(p: Option<f64>) -> String {
    p.map_or(NOT_APPLICABLE.into(), |v| v.to_string())
}

/// Bound of a sweep row, `Err` for not-applicable cells, `Ok(None)` for
/// failures.
fn row_bound(row: &SweepRow) -> Result<Option<f64>, ()> {
    if !row.applicable() {
        return Err(());
    }
    Ok(row.result.as_ref().and_then(SynthesisResult::valid_bound))
}

fn safety_table(t: &SafetyTables, alphas: &[f64], published: [&[Option<f64>; 11]; 3]) -> Cells {
    let mut rows = vec![header("alpha value", alphas.iter().map(|a| a.to_string()))];
    let mut failures = 0;
    for (sweep, pubs) in t.sweeps.iter().zip(published) {
        let name = sweep.kind.to_string();
        let (mut got, mut dev) = (vec![name.clone()], vec![format!("{name} abs deviation")]);
        for (row, p) in sweep.rows.iter().zip(pubs) {
            match row_bound(row) {
                Err(()) => {
                    got.push(NOT_APPLICABLE.into());
                    dev.push(NOT_APPLICABLE.into());
                }
                Ok(None) => {
                    failures += 1;
                    got.push(FAILED.into());
                    dev.push(FAILED.into());
                }
                Ok(Some(b)) => {
                    got.push(num(b));
                    dev.push(p.map_or(NOT_APPLICABLE.into(), |p| num((b - p).abs())));
                }
            }
        }
        let mut pub_row = vec![format!("{name} published")];
        pub_row.extend(pubs.iter().map(|&p| published_cell(p)));
        rows.extend([got, pub_row, dev]);
    }
    Cells { rows, failures }
}

fn header(first: &str, rest: impl Iterator<Item = String>) -> Vec<String> {
    std::iter::once(first.to_string()).chain(rest).collect()
}

fn gamma_table(ex: [(&str, &SafetyTables, &[f64; 11], &[f64; 11]); 2]) -> Cells {
    let mut rows = vec![header("value index", (1..=11).map(|i| i.to_string()))];
    let mut failures = 0;
    for (name, t, alphas, published) in ex {
        let mut a_row = vec![format!("{name} alpha")];
        let mut g_row = vec![format!("{name} gamma")];
        let mut p_row = vec![format!("{name} gamma published")];
        let mut d_row = vec![format!("{name} abs deviation")];
        let mut s_row = vec![format!("{name} sign match")];
        for ((row, a), p) in t.dsbc().rows.iter().zip(alphas).zip(published) {
            a_row.push(a.to_string());
            p_row.push(p.to_string());
            let g = row
                .result
                .as_ref()
                .filter(|r| r.valid)
                .and_then(|r| r.certificate.as_ref())
                .map(|c| c.gamma());
            match g {
                Some(g) => {
                    g_row.push(format!("{g:.6}"));
                    d_row.push(format!("{:.6}", (g - p).abs()));
                    // Entries below 1e-3 in magnitude carry no reliable sign.
                    let sign = if g.abs() < 1e-3 || p.abs() < 1e-3 {
                        "-"
                    } else if g.signum() == p.signum() {
                        "yes"
                    } else {
                        "no"
                    };
                    s_row.push(sign.into());
                }
                None => {
                    failures += 1;
                    for r in [&mut g_row, &mut d_row, &mut s_row] {
                        r.push(FAILED.into());
                    }
                }
            }
        }
        rows.extend([a_row, g_row, p_row, d_row, s_row]);
    }
    Cells { rows, failures }
}

fn reach_avoid_table(results: &[Result<SynthesisResult, String>]) -> Cells {
    let mut rows = vec![header(
        "degree of polynomials",
        TABLE4_DEGREES.iter().map(|d| d.to_string()),
    )];
    let mut failures = 0;
    let (mut got, mut dev) = (vec!["RABC".to_string()], vec!["RABC abs deviation".to_string()]);
    for (r, p) in results.iter().zip(TABLE4_RABC) {
        match r.as_ref().ok().and_then(SynthesisResult::valid_bound) {
            Some(b) => {
                got.push(num(b));
                dev.push(num((b - p).abs()));
            }
            None => {
                failures += 1;
                got.push(FAILED.into());
                dev.push(FAILED.into());
            }
        }
    }
    let mut p_row = vec!["RABC published".to_string()];
    p_row.extend(TABLE4_RABC.iter().map(|p| p.to_string()));
    let mut c_row = vec!["comparison method published".to_string()];
    c_row.extend(TABLE4_COMPARISON.iter().map(|p| p.to_string()));
    rows.extend([got, p_row, dev, c_row]);
    Cells { rows, failures }
}

pub fn run(args: TablesArgs, config: Option<&Path>) -> CliResult<Outcome> {
    let s = args.overlay(config::load(config, "tables")?);
    let cfg = sampling(s.samples_per_region, s.seed);
    let s = s.overlay(TablesArgs {
        which: Some(Which::All),
        out_dir: Some(PathBuf::from("tables")),
        samples_per_region: Some(cfg.samples_per_region),
        seed: Some(cfg.seed),
    });
    let which = s.which.unwrap();
    let want = |w: Which| which == w || which == Which::All;
    let dir = s.out_dir.clone().unwrap();
    std::fs::create_dir_all(&dir)?;
    let header_text = config::header("tables", &s)?;
    std::fs::write(dir.join("run_config.txt"), &header_text)?;
    print!("{header_text}");

    let m1 = SystemModel::example1();
    let m2 = SystemModel::example2();
    let t1 = (want(Which::I) || want(Which::III)).then(|| SafetyTables::run(&m1, &TABLE1_ALPHAS, TABLE1_DEGREE, &cfg));
    let t2 = (want(Which::II) || want(Which::III)).then(|| SafetyTables::run(&m2, &TABLE2_ALPHAS, TABLE2_DEGREE, &cfg));

    let mut outputs: Vec<(&str, Cells)> = Vec::new();
    if want(Which::I) {
        let t = t1.as_ref().unwrap();
        outputs.push((
            "I",
            safety_table(t, &TABLE1_ALPHAS, [&TABLE1_DSBC, &TABLE1_MSBC, &TABLE1_SSBC]),
        ));
    }
    if want(Which::II) {
        let t = t2.as_ref().unwrap();
        outputs.push((
            "II",
            safety_table(t, &TABLE2_ALPHAS, [&TABLE2_DSBC, &TABLE2_MSBC, &TABLE2_SSBC]),
        ));
    }
    if want(Which::III) {
        outputs.push((
            "III",
            gamma_table([
                ("example1", t1.as_ref().unwrap(), &TABLE1_ALPHAS, &TABLE3_EXAMPLE1),
                ("example2", t2.as_ref().unwrap(), &TABLE2_ALPHAS, &TABLE3_EXAMPLE2),
            ]),
        ));
    }
    if want(Which::IV) {
        let backend = InteriorPoint::default();
        let results: Vec<Result<SynthesisResult, String>> = TABLE4_DEGREES
            .par_iter()
            .map(|&d| {
                synthesize(&m1, Rabc, TABLE4_ALPHA, SosOptions::degree(d), &backend, &cfg).map_err(|e| e.to_string())
            })
            .collect();
        outputs.push(("IV", reach_avoid_table(&results)));
    }

    let mut failures = 0;
    for (name, cells) in &outputs {
        let path = dir.join(format!("table_{name}.csv"));
        std::fs::write(&path, csv_text(&cells.rows)?)?;
        println!("\ntable {name} -> {}", path.display());
        print!("{}", aligned(&cells.rows));
        failures += cells.failures;
    }
    if failures > 0 {
        return Err(CliError::Numerical(format!("{failures} table cells failed")));
    }
    Ok(Outcome::Pass)
}
