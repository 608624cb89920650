//! `sbc synthesize`: SOS synthesis over a list of `α`.

use std::path::{Path, PathBuf};

use clap::Args;
use sbc_core::certificates::CertificateKind;
use sbc_core::sos::{alpha_sweep, build, compile, export_sdp, SosOptions, SweepRow, SweepTable};
use sbc_sdp::InteriorPoint;
use serde::{Deserialize, Serialize};

use crate::common::{aligned, csv_text, load_model, sampling, BasisArg, Format, KindArg};
use crate::config::{self, overlay_fields, AlphaList, Overlay};
use crate::error::{CliError, CliResult, Outcome};

/// Cell shown for `α` outside the kind's domain.
pub const NOT_APPLICABLE: &str = "\\";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    /// Model file (JSON).
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Values of alpha: `a,b,c` or `start:stop:step`. Defaults to 1.06 for
    /// RABC and 1 otherwise.
    #[arg(long)]
    pub alphas: Option<AlphaList>,
    /// Degree of the certificate polynomial.
    #[arg(long)]
    pub deg: Option<u32>,
    /// Fixed multiplier degree; by default each multiplier is matched to its
    /// constraint.
    #[arg(long)]
    pub multiplier_deg: Option<u32>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    /// Sample points per region for the validity check.
    #[arg(long)]
    pub samples_per_region: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the best certificate to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write each SDP in SDPA sparse format into this directory.
    #[arg(long)]
    pub export_sdp: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

overlay_fields!(
    SynthArgs;
    model, kind, alphas, deg, multiplier_deg, basis, samples_per_region, seed, out, export_sdp, format
);

pub fn run(args: SynthArgs, config: Option<&Path>) -> CliResult<Outcome> {
    let s = args.overlay(config::load(config, "synthesize")?);
    let model = load_model(s.model.as_deref())?;
    let kind_arg = s.kind.unwrap_or(KindArg::Dsbc);
    let cfg = sampling(s.samples_per_region, s.seed);
    let s = s.overlay(SynthArgs {
        kind: Some(kind_arg),
        alphas: Some(AlphaList(vec![if kind_arg == KindArg::Rabc { 1.06 } else { 1.0 }])),
        deg: Some(6),
        basis: Some(BasisArg::Legendre),
        samples_per_region: Some(cfg.samples_per_region),
        seed: Some(cfg.seed),
        format: Some(Format::Human),
        ..Default::default()
    });
    let kind = CertificateKind::from(kind_arg);
    let alphas = s.alphas.clone().unwrap().0;
    if alphas.is_empty() {
        return Err(CliError::Config("no alpha values given".into()));
    }
    let opts = SosOptions {
        degree: s.deg.unwrap(),
        multiplier_degree: s.multiplier_deg,
        basis: s.basis.unwrap().into(),
    };

    if let Some(dir) = &s.export_sdp {
        std::fs::create_dir_all(dir)?;
        for &a in alphas.iter().filter(|&&a| kind.alpha_in_domain(a)) {
            let c = compile(&build(&model, kind, a, opts)?).map_err(sbc_core::certificates::CertError::from)?;
            let name = format!("{}_deg{}_alpha{a}.dat-s", kind.to_string().to_lowercase(), opts.degree);
            export_sdp(&c.sdp, &dir.join(name))?;
        }
    }

    let table = alpha_sweep(&model, kind, &alphas, opts, &InteriorPoint::default(), &cfg);

    print!("{}", config::header("synthesize", &s)?);
    let rows = table_rows(&table);
    match s.format.unwrap() {
        Format::Human => {
            println!("{} degree {} on {}", kind, opts.degree, model.name);
            print!("{}", aligned(&rows));
            match table.best {
                Some((a, b)) => println!("best alpha = {a} bound = {b:.6}"),
                None => println!("no valid certificate"),
            }
        }
        Format::Csv => print!("{}", csv_text(&rows)?),
    }

    let Some((best_alpha, _)) = table.best else {
        if table.rows.iter().all(|r| !r.applicable()) {
            return Err(CliError::Config(format!("no alpha lies in the domain of {kind}")));
        }
        return Err(CliError::Numerical("synthesis failed for every alpha".into()));
    };
    if let Some(out) = &s.out {
        let row = table.rows.iter().find(|r| r.alpha == best_alpha).unwrap();
        let cert = row.result.as_ref().and_then(|r| r.certificate.as_ref()).unwrap();
        cert.write_file(out)?;
        if s.format == Some(Format::Human) {
            println!("certificate written to {}", out.display());
        }
    }
    Ok(Outcome::Pass)
}

fn row_cells(row: &SweepRow) -> Vec<String> {
    let a = row.alpha.to_string();
    if let Some(e) = &row.error {
        return vec![a, "error".into(), e.clone()];
    }
    let Some(r) = &row.result else {
        return vec![a, NOT_APPLICABLE.into()];
    };
    let num = |v: Option<f64>, prec: usize| v.map_or("-".into(), |v| format!("{v:.prec$}"));
    let cert = r.certificate.as_ref();
    vec![
        a,
        r.status.to_string(),
        num(r.objective, 6),
        if r.valid { "yes" } else { "no" }.into(),
        num(cert.map(|c| c.gamma()), 6),
        num(cert.map(|c| c.beta), 9),
        num(r.delta, 6),
        sci(r.gram_min_eigenvalue),
        sci(r.residual_norm),
    ]
}

fn sci(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.1e}"))
}

pub fn table_rows(t: &SweepTable) -> Vec<Vec<String>> {
    let mut rows = vec![[
        "alpha",
        "status",
        "bound",
        "valid",
        "gamma",
        "beta",
        "delta",
        "gram min eig",
        "residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect::<Vec<_>>()];
    rows.extend(t.rows.iter().map(row_cells));
    rows
}
