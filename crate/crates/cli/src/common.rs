use std::path::Path;

use clap::ValueEnum;
use sbc_core::certificates::{CertificateKind, SamplingConfig};
use sbc_core::dp::Spec;
use sbc_core::model::SystemModel;
use sbc_core::sos::BasisKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecArg {
    Safety,
    ReachAvoid,
    /// Every specification the model supports.
    All,
}

impl SpecArg {
    pub fn specs(self, model: &SystemModel) -> Vec<Spec> {
        match self {
            Self::Safety => vec![Spec::Safety],
            Self::ReachAvoid => vec![Spec::ReachAvoid],
            Self::All if model.has_region(sbc_core::model::RegionName::G) => vec![Spec::Safety, Spec::ReachAvoid],
            Self::All => vec![Spec::Safety],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Dsbc,
    Msbc,
    Ssbc,
    Rabc,
}

impl From<KindArg> for CertificateKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dsbc => Self::Dsbc,
            KindArg::Msbc => Self::Msbc,
            KindArg::Ssbc => Self::Ssbc,
            KindArg::Rabc => Self::Rabc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    Legendre,
    Monomial,
}

impl From<BasisArg> for BasisKind {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Legendre => Self::Legendre,
            BasisArg::Monomial => Self::Monomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Human,
    Csv,
}

pub fn load_model(path: Option<&Path>) -> CliResult<SystemModel> {
    let path = path.ok_or_else(|| CliError::Config("no model file given".into()))?;
    let model = SystemModel::from_file(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    model.validate()?;
    Ok(model)
}

pub fn initial_state(x0: Option<Vec<f64>>, model: &SystemModel) -> CliResult<Vec<f64>> {
    let x0 = x0
        .or_else(|| model.initial_state.clone())
        .ok_or_else(|| CliError::Config("no x0 given and the model has no initial_state".into()))?;
    if x0.len() != model.space.state_dim {
        return Err(CliError::Config(format!(
            "x0 has {} coordinates, the model has {} states",
            x0.len(),
            model.space.state_dim
        )));
    }
    Ok(x0)
}

pub fn sampling(samples_per_region: Option<usize>, seed: Option<u64>) -> SamplingConfig {
    let d = SamplingConfig::default();
    SamplingConfig {
        samples_per_region: samples_per_region.unwrap_or(d.samples_per_region),
        seed: seed.unwrap_or(d.seed),
        ..d
    }
}

/// Render rows as CSV text.
pub fn csv_text(rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(e.to_string()))
}

/// Render rows as left-aligned columns.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn format_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
