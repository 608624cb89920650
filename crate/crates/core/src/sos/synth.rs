//! Solve, extract and validate.

use std::path::Path;

use rayon::prelude::*;
use sbc_sdp::{sdpa, Backend, SdpProblem, Status};
use serde::Serialize;

use crate::certificates::{
    check_certificate, evaluate_bound, BarrierCertificate, BoundAt, BoundReport, CertError, CertificateKind,
    CheckReport, ConditionReport, SamplingConfig,
};
use crate::model::{RegionName, SystemModel};

use super::{build, compile, SosOptions, SosProgram};

/// Sampled condition margins must be at least `-VALID_MARGIN_TOL`.
pub const VALID_MARGIN_TOL: f64 = 1e-6;
/// Gram blocks must have minimum eigenvalue at least `-VALID_GRAM_TOL`.
pub const VALID_GRAM_TOL: f64 = 1e-8;
/// Reconstructed SOS identities must hold to this coefficient norm.
pub const VALID_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

impl std::fmt::Display for SynthesisStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub backend: String,
    pub solver_status: String,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub free_vars: usize,
    pub psd_blocks: usize,
    pub equality_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisResult {
    pub kind: CertificateKind,
    pub alpha: f64,
    pub degree: u32,
    pub status: SynthesisStatus,
    #[serde(skip)]
    pub certificate: Option<BarrierCertificate>,
    pub delta: Option<f64>,
    /// `δα^{-T} + (Σα^{-i})β` at the solution.
    pub objective: Option<f64>,
    pub bound: Option<BoundReport>,
    pub diagnostics: SolverDiagnostics,
    /// Sampled check, extended by the `X0` bound on `ṽ`.
    pub check: Option<CheckReport>,
    pub gram_min_eigenvalue: Option<f64>,
    /// Largest coefficient norm of `expr − mᵀQm` over constraints.
    pub residual_norm: Option<f64>,
    pub valid: bool,
}

impl SynthesisResult {
    /// Probability bound if the result is valid.
    pub fn valid_bound(&self) -> Option<f64> {
        if self.valid {
            self.objective
        } else {
            None
        }
    }
}

fn status_of(s: Status) -> SynthesisStatus {
    match s {
        Status::Optimal => SynthesisStatus::Optimal,
        Status::PrimalInfeasible => SynthesisStatus::Infeasible,
        Status::DualInfeasible | Status::NumericalFailure => SynthesisStatus::NumericalFailure,
    }
}

/// Build, compile and solve; then extract `ṽ, β, δ`, check the certificate
/// on samples, check Gram eigenvalues and coefficient residuals.
pub fn synthesize(
    model: &SystemModel,
    kind: CertificateKind,
    alpha: f64,
    opts: SosOptions,
    backend: &dyn Backend,
    cfg: &SamplingConfig,
) -> Result<SynthesisResult, CertError> {
    let program = build(model, kind, alpha, opts)?;
    solve_program(&program, model, opts, backend, cfg)
}

fn solve_program(
    program: &SosProgram,
    model: &SystemModel,
    opts: SosOptions,
    backend: &dyn Backend,
    cfg: &SamplingConfig,
) -> Result<SynthesisResult, CertError> {
    let compiled = compile(program)?;
    let sol = backend.solve(&compiled.sdp)?;
    let status = status_of(sol.status);
    let diagnostics = SolverDiagnostics {
        backend: backend.name().to_string(),
        solver_status: sol.status.to_string(),
        iterations: sol.iterations,
        primal_objective: sol.primal_objective,
        dual_objective: sol.dual_objective,
        primal_infeasibility: sol.primal_infeasibility,
        dual_infeasibility: sol.dual_infeasibility,
        relative_gap: sol.relative_gap,
        free_vars: compiled.sdp.n_free,
        psd_blocks: compiled.sdp.block_sizes.len(),
        equality_rows: compiled.sdp.num_constraints(),
    };
    let mut result = SynthesisResult {
        kind: program.kind,
        alpha: program.alpha,
        degree: opts.degree,
        status,
        certificate: None,
        delta: None,
        objective: None,
        bound: None,
        diagnostics,
        check: None,
        gram_min_eigenvalue: None,
        residual_norm: None,
        valid: false,
    };
    if status != SynthesisStatus::Optimal {
        return Ok(result);
    }

    let x = &sol.x_free;
    let beta = x[program.beta_var];
    let delta = x[program.delta_var];
    let v = program.v_poly(x);
    let cert = BarrierCertificate::new(program.kind, v, program.alpha, beta, Some(delta))?;

    let mult_grams: Vec<_> = compiled
        .multiplier_blocks
        .iter()
        .map(|&b| sol.blocks[b].clone())
        .collect();
    let mut residual = 0.0f64;
    for (k, con) in program.constraints.iter().enumerate() {
        let q = &sol.blocks[compiled.constraint_blocks[k]];
        let expr = con.expr.eval(program.space, x, &mult_grams);
        let gram = con.basis.gram_poly(q)?;
        residual = residual.max(expr.sub(&gram)?.coefficient_norm());
    }
    for (k, (_, a)) in program.scalar_nonneg.iter().enumerate() {
        let s = sol.blocks[compiled.slack_blocks[k]][(0, 0)];
        residual = residual.max((a.eval(x, &mult_grams) - s).abs());
    }
    let gram_min = sol.block_min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);

    let mut check = check_certificate(&cert, model, cfg)?;
    check.conditions.push(initial_condition(&cert, model, cfg, delta)?);
    let objective = program.objective.eval(x, &[]);
    let bound = evaluate_bound(&cert, model.horizon, BoundAt::Delta(delta))?;

    result.valid = check.passes(VALID_MARGIN_TOL) && gram_min >= -VALID_GRAM_TOL && residual <= VALID_RESIDUAL_TOL;
    result.certificate = Some(cert);
    result.delta = Some(delta);
    result.objective = Some(objective);
    result.bound = Some(bound);
    result.check = Some(check);
    result.gram_min_eigenvalue = Some(gram_min);
    result.residual_norm = Some(residual);
    Ok(result)
}

/// `ṽ <= δ` (safety) or `ṽ >= δ` (RABC) on `X0` samples.
fn initial_condition(
    cert: &BarrierCertificate,
    model: &SystemModel,
    cfg: &SamplingConfig,
    delta: f64,
) -> Result<ConditionReport, CertError> {
    let pts = cfg.sample_region(model, RegionName::X0)?;
    let sign = if cert.kind.is_safety() { 1.0 } else { -1.0 };
    let (name, mut worst, mut witness) = (
        if cert.kind.is_safety() {
            "v <= delta on X0"
        } else {
            "v >= delta on X0"
        },
        f64::INFINITY,
        Vec::new(),
    );
    for p in &pts {
        let m = sign * (delta - cert.v.eval_unchecked(p));
        if m < worst || witness.is_empty() {
            worst = worst.min(m);
            witness = p.clone();
        }
    }
    Ok(ConditionReport {
        name: name.into(),
        regions: vec![RegionName::X0],
        worst_margin: worst,
        witness,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    /// `None` when `alpha` lies outside the kind's domain.
    pub result: Option<SynthesisResult>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn applicable(&self) -> bool {
        self.result.is_some() || self.error.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub kind: CertificateKind,
    pub degree: u32,
    pub rows: Vec<SweepRow>,
    /// Best valid bound and its `α`: smallest for safety kinds, largest for
    /// RABC.
    pub best: Option<(f64, f64)>,
}

/// One synthesis per `α`, solved in parallel.
pub fn alpha_sweep(
    model: &SystemModel,
    kind: CertificateKind,
    alphas: &[f64],
    opts: SosOptions,
    backend: &dyn Backend,
    cfg: &SamplingConfig,
) -> SweepTable {
    let rows: Vec<SweepRow> = alphas
        .par_iter()
        .map(|&alpha| {
            if !alpha.is_finite() || !kind.alpha_in_domain(alpha) {
                return SweepRow {
                    alpha,
                    result: None,
                    error: None,
                };
            }
            match synthesize(model, kind, alpha, opts, backend, cfg) {
                Ok(r) => SweepRow {
                    alpha,
                    result: Some(r),
                    error: None,
                },
                Err(e) => SweepRow {
                    alpha,
                    result: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for row in &rows {
        let Some(b) = row.result.as_ref().and_then(|r| r.valid_bound()) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((_, cur)) if kind.is_safety() => b < cur,
            Some((_, cur)) => b > cur,
        };
        if better {
            best = Some((row.alpha, b));
        }
    }
    SweepTable {
        kind,
        degree: opts.degree,
        rows,
        best,
    }
}

/// Write `sdp` in SDPA sparse format.
pub fn export_sdp(sdp: &SdpProblem, path: &Path) -> Result<(), CertError> {
    sdpa::write_file(sdp, path)?;
    Ok(())
}
