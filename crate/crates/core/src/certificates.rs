//! Barrier certificates: parameter domains, probability bounds, sampled
//! condition checks and the stage-wise envelope check against DP tables.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::{DpResult, Spec};
use crate::model::{ModelError, RegionName, SemialgebraicSet, SystemModel};
use crate::poly::{Monomial, PolyError, Polynomial, TermRecord, VarSpace};
use crate::sampling::halton_box;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("parameter domain: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("certificate file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sdp(#[from] sbc_sdp::SdpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Msbc,
    Ssbc,
    Dsbc,
    Rabc,
}

impl CertificateKind {
    pub const ALL: [CertificateKind; 4] = [Self::Msbc, Self::Ssbc, Self::Dsbc, Self::Rabc];

    pub fn is_safety(self) -> bool {
        self != Self::Rabc
    }

    pub fn spec(self) -> Spec {
        if self.is_safety() {
            Spec::Safety
        } else {
            Spec::ReachAvoid
        }
    }

    /// Whether `alpha` lies in the kind's parameter domain.
    pub fn alpha_in_domain(self, alpha: f64) -> bool {
        match self {
            Self::Msbc => alpha >= 1.0,
            Self::Ssbc => alpha > 0.0 && alpha <= 1.0,
            Self::Dsbc | Self::Rabc => alpha > 0.0,
        }
    }

    pub fn check_alpha(self, alpha: f64) -> Result<(), CertError> {
        if !alpha.is_finite() || !self.alpha_in_domain(alpha) {
            let need = match self {
                Self::Msbc => "alpha >= 1",
                Self::Ssbc => "0 < alpha <= 1",
                Self::Dsbc | Self::Rabc => "alpha > 0",
            };
            return Err(CertError::Domain(format!("{self} needs {need}, got {alpha}")));
        }
        Ok(())
    }
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Msbc => "MSBC",
            Self::Ssbc => "SSBC",
            Self::Dsbc => "DSBC",
            Self::Rabc => "RABC",
        })
    }
}

impl std::str::FromStr for CertificateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "msbc" => Ok(Self::Msbc),
            "ssbc" => Ok(Self::Ssbc),
            "dsbc" => Ok(Self::Dsbc),
            "rabc" => Ok(Self::Rabc),
            _ => Err(format!("unknown certificate kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCertificate {
    pub kind: CertificateKind,
    pub v: Polynomial,
    pub alpha: f64,
    pub beta: f64,
    /// Bound on `v` over `X0` (upper for safety kinds, lower for RABC).
    pub delta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct CertificateFile {
    kind: CertificateKind,
    alpha: f64,
    beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    v: Vec<TermRecord>,
}

impl BarrierCertificate {
    pub fn new(
        kind: CertificateKind,
        v: Polynomial,
        alpha: f64,
        beta: f64,
        delta: Option<f64>,
    ) -> Result<Self, CertError> {
        kind.check_alpha(alpha)?;
        if !beta.is_finite() || delta.is_some_and(|d| !d.is_finite()) {
            return Err(CertError::Domain("beta and delta must be finite".into()));
        }
        if v.uses_noise() {
            return Err(PolyError::Invalid("certificate depends on noise variables".into()).into());
        }
        Ok(Self {
            kind,
            v,
            alpha,
            beta,
            delta,
        })
    }

    pub fn gamma(&self) -> f64 {
        gamma(self.alpha, self.beta)
    }

    pub fn to_json(&self) -> Result<String, CertError> {
        let file = CertificateFile {
            kind: self.kind,
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
            v: self.v.to_state_records()?,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str, space: VarSpace) -> Result<Self, CertError> {
        let file: CertificateFile = serde_json::from_str(text)?;
        let v = Polynomial::from_records(space, &file.v)?;
        Self::new(file.kind, v, file.alpha, file.beta, file.delta)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), CertError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_file(path: &Path, space: VarSpace) -> Result<Self, CertError> {
        Self::from_json(&std::fs::read_to_string(path)?, space)
    }

    /// `η_t^x = α^{t−T} v(x) + (Σ_{i<T−t} α^{−i}) β`.
    pub fn eta(&self, v_at_x: f64, t: usize, horizon: usize) -> f64 {
        let k = horizon - t;
        self.alpha.powi(-(k as i32)) * v_at_x + geometric_sum(self.alpha, k) * self.beta
    }
}

pub fn gamma(alpha: f64, beta: f64) -> f64 {
    alpha * beta - alpha + 1.0
}

/// `Σ_{i=0}^{T−1} α^{−i}` by direct summation.
pub fn geometric_sum(alpha: f64, horizon: usize) -> f64 {
    let r = 1.0 / alpha;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..horizon {
        sum += term;
        term *= r;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundBranch {
    /// `v (1−β)^T + 1 − (1−β)^T`, used by MSBC/SSBC when `γ < 0`.
    OneMinusBeta,
    /// `v α^{−T} + (Σ α^{−i}) β`.
    AlphaPower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundAt<'a> {
    Point(&'a [f64]),
    /// Evaluate with `v = δ` (bound over `X0`).
    Delta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: CertificateKind,
    pub gamma: f64,
    pub branch: BoundBranch,
    pub v_value: f64,
    /// Value of the bound formula.
    pub raw: f64,
    /// `raw` clamped into `[0, 1]`.
    pub probability: f64,
}

pub fn evaluate_bound(cert: &BarrierCertificate, horizon: usize, at: BoundAt) -> Result<BoundReport, CertError> {
    cert.kind.check_alpha(cert.alpha)?;
    let v = match at {
        BoundAt::Point(x) => cert.v.eval(x)?,
        BoundAt::Delta(d) => d,
    };
    let g = cert.gamma();
    let use_beta_branch = matches!(cert.kind, CertificateKind::Msbc | CertificateKind::Ssbc) && g < 0.0;
    let (branch, raw) = if use_beta_branch {
        if cert.beta >= 1.0 {
            return Err(CertError::Domain(format!(
                "gamma < 0 branch needs beta < 1, got {}",
                cert.beta
            )));
        }
        let q = (1.0 - cert.beta).powi(horizon as i32);
        (BoundBranch::OneMinusBeta, v * q + 1.0 - q)
    } else {
        (
            BoundBranch::AlphaPower,
            v * cert.alpha.powi(-(horizon as i32)) + geometric_sum(cert.alpha, horizon) * cert.beta,
        )
    };
    Ok(BoundReport {
        kind: cert.kind,
        gamma: g,
        branch,
        v_value: v,
        raw,
        probability: raw.clamp(0.0, 1.0),
    })
}

/// Parameters with `γ' = 0` carrying the same bound as `(α, β)` with `γ < 0`.
pub fn msbc_normalize(alpha: f64, beta: f64) -> Result<(f64, f64), CertError> {
    let g = gamma(alpha, beta);
    if g >= 0.0 {
        return Err(CertError::Domain(format!("gamma = {g} >= 0, nothing to normalize")));
    }
    Ok((1.0 / (1.0 - beta), beta))
}

/// Where sampled checks draw their points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingConfig {
    pub samples_per_region: usize,
    pub seed: u64,
    /// Box for unbounded regions; falls back to the model's `sample_box`,
    /// then to `[-default_half_width, default_half_width]^n`.
    pub sample_box: Option<Vec<(f64, f64)>>,
    pub default_half_width: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples_per_region: 10_000,
            seed: 0,
            sample_box: None,
            default_half_width: Some(5.0),
        }
    }
}

const MAX_CANDIDATE_FACTOR: usize = 20;

impl SamplingConfig {
    fn unbounded_box(&self, model: &SystemModel) -> Result<Vec<(f64, f64)>, CertError> {
        let n = model.space.state_dim;
        if let Some(b) = self.sample_box.clone().or_else(|| model.sample_box.clone()) {
            if b.len() != n {
                return Err(CertError::Config(format!("sample box needs {n} intervals")));
            }
            return Ok(b);
        }
        self.default_half_width
            .map(|h| vec![(-h, h); n])
            .ok_or_else(|| CertError::Config("no bounding box configured for unbounded regions".into()))
    }

    fn bounded_box(&self, model: &SystemModel) -> Result<Vec<(f64, f64)>, CertError> {
        match &model.safe_box {
            Some(b) => Ok(b.clone()),
            None => self.unbounded_box(model),
        }
    }

    /// Deterministic sample of `region`: Halton candidates filtered by the
    /// region's polynomials, plus the model's initial state for `X0`.
    pub fn sample_region(&self, model: &SystemModel, region: RegionName) -> Result<Vec<Vec<f64>>, CertError> {
        let set = region_set(model, region)?;
        let bounds = match region {
            RegionName::XminusS | RegionName::XminusG => self.unbounded_box(model)?,
            _ => self.bounded_box(model)?,
        };
        let mut pts = Vec::new();
        if region == RegionName::X0 {
            if let Some(x0) = &model.initial_state {
                pts.push(x0.clone());
            }
        }
        let seed = self.seed ^ (region as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let candidates = halton_box(&bounds, self.samples_per_region * MAX_CANDIDATE_FACTOR, seed);
        for p in candidates {
            if pts.len() >= self.samples_per_region {
                break;
            }
            if set.contains(&p) {
                pts.push(p);
            }
        }
        // Box corners and midpoints of faces often carry the extremes.
        for p in box_landmarks(&bounds) {
            if set.contains(&p) {
                pts.push(p);
            }
        }
        Ok(pts)
    }
}

fn box_landmarks(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi) in bounds {
        out = out
            .into_iter()
            .flat_map(|p| {
                [lo, 0.5 * (lo + hi), hi].into_iter().map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// The set for `region`, derived from `S` and `G` when not given explicitly.
fn region_set(model: &SystemModel, region: RegionName) -> Result<Region, CertError> {
    if let Ok(set) = model.region(region) {
        return Ok(Region::Set(set.clone()));
    }
    let s = || model.region(RegionName::S).cloned();
    let g = || model.region(RegionName::G).cloned();
    Ok(match region {
        RegionName::XminusS => Region::Not(s()?),
        RegionName::SminusG => Region::Diff(s()?, g()?),
        RegionName::XminusG => Region::Not(g()?),
        _ => return Err(model.region(region).unwrap_err().into()),
    })
}

enum Region {
    Set(SemialgebraicSet),
    Not(SemialgebraicSet),
    Diff(SemialgebraicSet, SemialgebraicSet),
}

impl Region {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Set(s) => s.contains(x),
            Region::Not(s) => !s.contains(x),
            Region::Diff(a, b) => a.contains(x) && !b.contains(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub regions: Vec<RegionName>,
    /// `min` of the signed margin; non-negative means satisfied on the sample.
    pub worst_margin: f64,
    pub witness: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub kind: CertificateKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub conditions: Vec<ConditionReport>,
    /// Minimum over sampled unit directions of the top-degree form of the
    /// polynomial that must stay non-negative off `S`; `None` if that
    /// polynomial is constant.
    pub leading_form_min: Option<f64>,
}

impl CheckReport {
    pub fn worst_margin(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.worst_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst_margin() >= -tol
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} alpha={} beta={:.6e} gamma={:.6e}",
            self.kind, self.alpha, self.beta, self.gamma
        )?;
        writeln!(
            f,
            "{:<34} {:>14} {:>8}  witness",
            "condition", "worst margin", "samples"
        )?;
        for c in &self.conditions {
            writeln!(
                f,
                "{:<34} {:>14.6e} {:>8}  {:?}",
                c.name, c.worst_margin, c.samples, c.witness
            )?;
        }
        if let Some(l) = self.leading_form_min {
            writeln!(f, "leading form min (off S): {l:.6e}")?;
        }
        Ok(())
    }
}

/// Accumulates the worst margin of one condition over several regions.
struct Worst {
    report: ConditionReport,
}

impl Worst {
    fn new(name: &str) -> Self {
        Self {
            report: ConditionReport {
                name: name.into(),
                regions: Vec::new(),
                worst_margin: f64::INFINITY,
                witness: Vec::new(),
                samples: 0,
            },
        }
    }

    fn over(mut self, region: RegionName, pts: &[Vec<f64>], margin: impl Fn(&[f64]) -> f64) -> Self {
        self.report.regions.push(region);
        self.report.samples += pts.len();
        for p in pts {
            let m = margin(p);
            if m < self.report.worst_margin || self.report.witness.is_empty() {
                self.report.worst_margin = m.min(self.report.worst_margin);
                self.report.witness = p.clone();
            }
        }
        self
    }
}

/// Sampled falsification of the certificate's defining conditions. The
/// expectation term is evaluated exactly through the noise moments.
pub fn check_certificate(
    cert: &BarrierCertificate,
    model: &SystemModel,
    cfg: &SamplingConfig,
) -> Result<CheckReport, CertError> {
    if cert.v.space() != model.space {
        return Err(PolyError::Space(cert.v.space(), model.space).into());
    }
    let t = model.horizon;
    let ev = model.noise.expect(&cert.v.compose(&model.dynamics)?)?;
    let v = |x: &[f64]| cert.v.eval_unchecked(x);
    let e = |x: &[f64]| ev.eval_unchecked(x);
    let a = cert.alpha;
    let b = cert.beta;
    let eta0 = |x: &[f64]| cert.eta(v(x), 0, t);
    let mut conditions = Vec::new();
    let leading_poly;
    if cert.kind.is_safety() {
        let s = cfg.sample_region(model, RegionName::S)?;
        let xs = cfg.sample_region(model, RegionName::XminusS)?;
        conditions.push(
            Worst::new("(1) v >= 1_{X\\S}")
                .over(RegionName::S, &s, v)
                .over(RegionName::XminusS, &xs, |x| v(x) - 1.0)
                .report,
        );
        conditions.push(
            Worst::new("(2) E[v(f)] <= v/alpha + beta on S")
                .over(RegionName::S, &s, |x| v(x) / a + b - e(x))
                .report,
        );
        match cert.kind {
            CertificateKind::Dsbc => conditions.push(
                Worst::new("(3) eta_0 >= 1 on X\\S")
                    .over(RegionName::XminusS, &xs, |x| eta0(x) - 1.0)
                    .report,
            ),
            CertificateKind::Msbc => conditions.push(ConditionReport {
                name: "beta in [0, 1)".into(),
                regions: Vec::new(),
                worst_margin: b.min(1.0 - b),
                witness: Vec::new(),
                samples: 0,
            }),
            _ => {}
        }
        leading_poly = cert.v.clone();
    } else {
        let g = cfg.sample_region(model, RegionName::G)?;
        let sg = cfg.sample_region(model, RegionName::SminusG)?;
        let xs = cfg.sample_region(model, RegionName::XminusS)?;
        conditions.push(
            Worst::new("(1) v <= 1_G")
                .over(RegionName::G, &g, |x| 1.0 - v(x))
                .over(RegionName::SminusG, &sg, |x| -v(x))
                .over(RegionName::XminusS, &xs, |x| -v(x))
                .report,
        );
        conditions.push(
            Worst::new("(2) E[v(f)] >= v/alpha + beta on S\\G")
                .over(RegionName::SminusG, &sg, |x| e(x) - v(x) / a - b)
                .report,
        );
        conditions.push(
            Worst::new("(3) eta_0 <= 0 on X\\S")
                .over(RegionName::XminusS, &xs, |x| -eta0(x))
                .report,
        );
        conditions.push(
            Worst::new("(4) eta_0 <= 1 on G")
                .over(RegionName::G, &g, |x| 1.0 - eta0(x))
                .report,
        );
        leading_poly = cert.v.neg();
    }
    Ok(CheckReport {
        kind: cert.kind,
        alpha: a,
        beta: b,
        gamma: cert.gamma(),
        conditions,
        leading_form_min: leading_form_min(&leading_poly, cfg.seed),
    })
}

fn leading_form_min(p: &Polynomial, seed: u64) -> Option<f64> {
    let d = p.degree();
    if d == 0 || p.is_zero() {
        return None;
    }
    let top = Polynomial::from_monomials(
        p.space(),
        p.terms()
            .filter(|(m, _)| m.degree() == d)
            .map(|(m, c)| (Monomial::clone(m), c)),
    );
    let n = p.space().state_dim;
    if n == 1 {
        return Some(
            [-1.0, 1.0]
                .iter()
                .map(|&x| top.eval_unchecked(&[x]))
                .fold(f64::INFINITY, f64::min),
        );
    }
    let dirs = halton_box(&vec![(-1.0, 1.0); n], 2000, seed);
    Some(
        dirs.iter()
            .filter_map(|u| {
                let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
                (norm > 1e-3).then(|| {
                    let unit: Vec<f64> = u.iter().map(|c| c / norm).collect();
                    top.eval_unchecked(&unit)
                })
            })
            .fold(f64::INFINITY, f64::min),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeViolation {
    /// Signed gap; non-negative means the envelope holds.
    pub gap: f64,
    pub stage: usize,
    pub point: Vec<f64>,
}

/// Checks `v_t <= η_t` (safety) or `v̂_t >= η_t` (RABC) at every stage on the
/// grid nodes and on exterior samples, returning the worst gap.
pub fn induction_envelope_check(
    cert: &BarrierCertificate,
    model: &SystemModel,
    dp: &DpResult,
    cfg: &SamplingConfig,
) -> Result<EnvelopeViolation, CertError> {
    let t_max = model.horizon;
    if dp.horizon() != t_max {
        return Err(CertError::Config(format!(
            "DP horizon {} does not match model horizon {t_max}",
            dp.horizon()
        )));
    }
    if dp.spec != cert.kind.spec() {
        return Err(CertError::Config(format!(
            "{} needs {} tables",
            cert.kind,
            cert.kind.spec()
        )));
    }
    let nodes: Vec<Vec<f64>> = (0..dp.grid.num_nodes()).map(|i| dp.grid.point(i)).collect();
    let node_v: Vec<f64> = nodes.iter().map(|x| cert.v.eval_unchecked(x)).collect();
    let exterior = cfg.sample_region(model, RegionName::XminusS)?;
    let ext_v: Vec<f64> = exterior.iter().map(|x| cert.v.eval_unchecked(x)).collect();
    let goal = if cert.kind.is_safety() {
        Vec::new()
    } else {
        cfg.sample_region(model, RegionName::G)?
    };
    let goal_v: Vec<f64> = goal.iter().map(|x| cert.v.eval_unchecked(x)).collect();
    let safe = model.region(RegionName::S)?;
    let sign = if cert.kind.is_safety() { 1.0 } else { -1.0 };

    let mut worst = EnvelopeViolation {
        gap: f64::INFINITY,
        stage: 0,
        point: Vec::new(),
    };
    let mut consider = |gap: f64, stage: usize, x: &[f64]| {
        if gap < worst.gap {
            worst = EnvelopeViolation {
                gap,
                stage,
                point: x.to_vec(),
            };
        }
    };
    for (t, table) in dp.tables.iter().enumerate() {
        for (i, x) in nodes.iter().enumerate() {
            let value = if safe.contains(x) {
                table.values[i]
            } else {
                table.outside
            };
            consider(sign * (cert.eta(node_v[i], t, t_max) - value), t, x);
        }
        for (x, &vx) in exterior.iter().zip(&ext_v) {
            consider(sign * (cert.eta(vx, t, t_max) - table.outside), t, x);
        }
        for (x, &vx) in goal.iter().zip(&goal_v) {
            consider(sign * (cert.eta(vx, t, t_max) - table.target), t, x);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaExtremes {
    pub eta0_min: f64,
    pub eta0_max: f64,
    pub eta_t_min: f64,
    pub eta_t_max: f64,
    /// `min_x min(η_0, η_T)`.
    pub min_of_ends: f64,
    /// `max_x max(η_0, η_T)`.
    pub max_of_ends: f64,
    pub samples: usize,
}

pub fn eta_extremes(
    cert: &BarrierCertificate,
    model: &SystemModel,
    region: RegionName,
    cfg: &SamplingConfig,
) -> Result<EtaExtremes, CertError> {
    if cert.kind.is_safety() && cert.kind != CertificateKind::Dsbc {
        return Err(CertError::Config(format!(
            "eta extremes are defined for DSBC and RABC, not {}",
            cert.kind
        )));
    }
    let t = model.horizon;
    let pts = cfg.sample_region(model, region)?;
    let mut r = EtaExtremes {
        eta0_min: f64::INFINITY,
        eta0_max: f64::NEG_INFINITY,
        eta_t_min: f64::INFINITY,
        eta_t_max: f64::NEG_INFINITY,
        min_of_ends: f64::INFINITY,
        max_of_ends: f64::NEG_INFINITY,
        samples: pts.len(),
    };
    for x in &pts {
        let vx = cert.v.eval_unchecked(x);
        let e0 = cert.eta(vx, 0, t);
        let et = vx;
        r.eta0_min = r.eta0_min.min(e0);
        r.eta0_max = r.eta0_max.max(e0);
        r.eta_t_min = r.eta_t_min.min(et);
        r.eta_t_max = r.eta_t_max.max(et);
        r.min_of_ends = r.min_of_ends.min(e0.min(et));
        r.max_of_ends = r.max_of_ends.max(e0.max(et));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_cert(kind: CertificateKind, c: f64, alpha: f64, beta: f64) -> BarrierCertificate {
        let m = SystemModel::example1();
        BarrierCertificate::new(kind, Polynomial::constant(m.space, c), alpha, beta, None).unwrap()
    }

    #[test]
    fn geometric_sums() {
        assert_eq!(geometric_sum(1.0, 50), 50.0);
        assert_eq!(geometric_sum(2.0, 3), 1.75);
        let direct: f64 = (0..50).map(|i| 1.002f64.powi(-i)).sum();
        assert!((geometric_sum(1.002, 50) - direct).abs() < 1e-12);
        assert!((geometric_sum(1.002, 50) - 47.6).abs() < 0.1);
    }

    #[test]
    fn normalization_examples() {
        let (a, b) = msbc_normalize(2.0, 0.25).unwrap();
        assert!((a - 4.0 / 3.0).abs() < 1e-15 && b == 0.25);
        assert!(gamma(a, b).abs() < 1e-15);
        assert_eq!(msbc_normalize(1.01, 0.0).unwrap(), (1.0, 0.0));
        assert!(msbc_normalize(1.0, 0.0).is_err());
    }

    #[test]
    fn trivial_bound_is_one() {
        let c = constant_cert(CertificateKind::Dsbc, 1.0, 1.0, 0.0);
        let r = evaluate_bound(&c, 50, BoundAt::Point(&[-0.9])).unwrap();
        assert_eq!(r.raw, 1.0);
    }

    #[test]
    fn domains_are_enforced() {
        let m = SystemModel::example1();
        let v = Polynomial::constant(m.space, 1.0);
        assert!(BarrierCertificate::new(CertificateKind::Msbc, v.clone(), 0.99, 0.0, None).is_err());
        assert!(BarrierCertificate::new(CertificateKind::Ssbc, v.clone(), 1.01, 0.0, None).is_err());
        assert!(BarrierCertificate::new(CertificateKind::Dsbc, v.clone(), 0.0, 0.0, None).is_err());
        assert!(BarrierCertificate::new(CertificateKind::Ssbc, v, 1.0, -3.0, None).is_ok());
        let c = constant_cert(CertificateKind::Msbc, 0.5, 2.0, 1.5);
        // γ = 2·1.5 − 2 + 1 = 2 ≥ 0: α-power branch, no domain error.
        assert!(evaluate_bound(&c, 5, BoundAt::Delta(0.5)).is_ok());
        let c = constant_cert(CertificateKind::Msbc, 0.5, 5.0, 0.5);
        assert_eq!(
            evaluate_bound(&c, 5, BoundAt::Delta(0.5)).unwrap().branch,
            BoundBranch::OneMinusBeta
        );
    }

    #[test]
    fn constant_certificates_on_example1() {
        let m = SystemModel::example1();
        let cfg = SamplingConfig {
            samples_per_region: 500,
            ..Default::default()
        };
        let one = constant_cert(CertificateKind::Dsbc, 1.0, 1.0, 0.0);
        let r = check_certificate(&one, &m, &cfg).unwrap();
        assert_eq!(r.conditions.len(), 3);
        for c in &r.conditions {
            assert!(c.worst_margin.abs() < 1e-15, "{c:?}");
        }
        assert!(r.passes(1e-6));
        let zero = constant_cert(CertificateKind::Dsbc, 0.0, 1.0, 0.0);
        let r = check_certificate(&zero, &m, &cfg).unwrap();
        assert_eq!(r.conditions[0].worst_margin, -1.0);
        assert!(!m.region(RegionName::S).unwrap().contains(&r.conditions[0].witness));
    }

    #[test]
    fn certificate_json_round_trip() {
        let m = SystemModel::example1();
        let v = Polynomial::from_terms(m.space, vec![(vec![2], 0.7), (vec![0], 0.1)]).unwrap();
        let c = BarrierCertificate::new(CertificateKind::Rabc, v, 1.06, -0.01, Some(0.2)).unwrap();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"kind\": \"rabc\""));
        assert_eq!(BarrierCertificate::from_json(&text, m.space).unwrap(), c);
    }

    #[test]
    fn missing_box_is_a_configuration_error() {
        let m = SystemModel::example1();
        let cfg = SamplingConfig {
            default_half_width: None,
            ..Default::default()
        };
        let one = constant_cert(CertificateKind::Dsbc, 1.0, 1.0, 0.0);
        assert!(matches!(check_certificate(&one, &m, &cfg), Err(CertError::Config(_))));
    }
}
