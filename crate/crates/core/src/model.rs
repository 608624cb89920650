//! Verification instances: dynamics, noise, horizon and regions.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseVector;
use crate::poly::{state_monomials, Monomial, PolyError, Polynomial, TermRecord, VarSpace};
use crate::sampling::halton_box;

pub const EXAMPLE1_JSON: &str = include_str!("../fixtures/example1.json");
pub const EXAMPLE2_JSON: &str = include_str!("../fixtures/example2.json");

/// Default box used when sampling unbounded regions.
pub const DEFAULT_SAMPLE_HALF_WIDTH: f64 = 5.0;
const CONTAINMENT_SAMPLES: usize = 10_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("G is not contained in S: sample {point:?} lies in G but not in S")]
    Containment { point: Vec<f64> },
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionName {
    X0,
    S,
    XminusS,
    G,
    SminusG,
    XminusG,
}

impl RegionName {
    pub const ALL: [RegionName; 6] = [
        RegionName::X0,
        RegionName::S,
        RegionName::XminusS,
        RegionName::G,
        RegionName::SminusG,
        RegionName::XminusG,
    ];
}

impl fmt::Display for RegionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionName::X0 => "X0",
            RegionName::S => "S",
            RegionName::XminusS => "X\\S",
            RegionName::G => "G",
            RegionName::SminusG => "S\\G",
            RegionName::XminusG => "X\\G",
        };
        f.write_str(s)
    }
}

/// `{x : s_i(x) >= 0 for all i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemialgebraicSet {
    pub name: RegionName,
    pub polys: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(name: RegionName, polys: Vec<Polynomial>) -> Result<Self, ModelError> {
        if polys.is_empty() {
            return Err(ModelError::Config(format!("region {name} has no defining polynomial")));
        }
        if polys.iter().any(Polynomial::uses_noise) {
            return Err(PolyError::Invalid(format!("region {name} uses noise variables")).into());
        }
        Ok(Self { name, polys })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.margin(x) >= 0.0
    }

    /// `min_i s_i(x)`; non-negative exactly on the set.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.polys
            .iter()
            .map(|p| p.eval_unchecked(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_single_polynomial(&self) -> bool {
        self.polys.len() == 1
    }

    /// The point `c` if the set is `{x : −Σ a_i (x_i − c_i)² ≥ 0}` with all
    /// `a_i > 0`.
    pub fn as_point(&self) -> Option<Vec<f64>> {
        let [p] = self.polys.as_slice() else {
            return None;
        };
        let n = p.space().state_dim;
        if p.uses_noise() || p.degree() != 2 {
            return None;
        }
        let mut quad = vec![0.0; n];
        let mut lin = vec![0.0; n];
        for (m, c) in p.terms() {
            let e = m.exps();
            match m.degree() {
                0 => {}
                1 => lin[e.iter().position(|&k| k == 1)?] = c,
                _ => {
                    let i = e.iter().position(|&k| k == 2)?;
                    quad[i] = c;
                }
            }
        }
        if quad.iter().any(|&q| q >= 0.0) {
            return None;
        }
        let center: Vec<f64> = (0..n).map(|i| -lin[i] / (2.0 * quad[i])).collect();
        let scale = p.max_abs_coefficient().max(1.0);
        (p.eval_unchecked(&center).abs() <= 1e-12 * scale).then_some(center)
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.iter().map(Polynomial::degree).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    space: VarSpace,
    dynamics: Vec<Vec<TermRecord>>,
    noise: NoiseVector,
    horizon: usize,
    regions: BTreeMap<RegionName, Vec<Vec<TermRecord>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_state: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    safe_box: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_box: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct SystemModel {
    pub name: String,
    pub space: VarSpace,
    pub dynamics: Vec<Polynomial>,
    pub noise: NoiseVector,
    pub horizon: usize,
    pub regions: BTreeMap<RegionName, SemialgebraicSet>,
    /// Representative initial state used by the oracle and the CLI.
    pub initial_state: Option<Vec<f64>>,
    /// Box containing S, used for DP grids and sampling S-type regions.
    pub safe_box: Option<Vec<(f64, f64)>>,
    /// Box used to sample unbounded regions such as X\S.
    pub sample_box: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub state_dim: usize,
    pub noise_dim: usize,
    pub horizon: usize,
    pub dynamics_degree: u32,
    pub dynamics_state_degree: u32,
    pub region_degrees: BTreeMap<RegionName, u32>,
    /// Regions given by a single polynomial.
    pub single_polynomial_regions: Vec<RegionName>,
    pub containment_samples: usize,
    pub reach_avoid_ready: bool,
}

impl SystemModel {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        let space = VarSpace::new(file.space.state_dim, file.space.noise_dim)?;
        let dynamics = file
            .dynamics
            .iter()
            .map(|recs| Polynomial::from_records(space, recs))
            .collect::<Result<Vec<_>, _>>()?;
        let mut regions = BTreeMap::new();
        for (name, polys) in &file.regions {
            let polys = polys
                .iter()
                .map(|recs| Polynomial::from_records(space, recs))
                .collect::<Result<Vec<_>, _>>()?;
            regions.insert(*name, SemialgebraicSet::new(*name, polys)?);
        }
        let model = Self {
            name: file.name.unwrap_or_else(|| "model".into()),
            space,
            dynamics,
            noise: file.noise,
            horizon: file.horizon,
            regions,
            initial_state: file.initial_state,
            safe_box: file.safe_box,
            sample_box: file.sample_box,
        };
        model.check_structure()?;
        Ok(model)
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let file = ModelFile {
            name: Some(self.name.clone()),
            space: self.space,
            dynamics: self.dynamics.iter().map(Polynomial::to_records).collect(),
            noise: self.noise.clone(),
            horizon: self.horizon,
            regions: self
                .regions
                .iter()
                .map(|(k, set)| {
                    let polys = set
                        .polys
                        .iter()
                        .map(Polynomial::to_state_records)
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok((*k, polys))
                })
                .collect::<Result<_, PolyError>>()?,
            initial_state: self.initial_state.clone(),
            safe_box: self.safe_box.clone(),
            sample_box: self.sample_box.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn example1() -> Self {
        Self::from_json(EXAMPLE1_JSON).expect("bundled fixture parses")
    }

    pub fn example2() -> Self {
        Self::from_json(EXAMPLE2_JSON).expect("bundled fixture parses")
    }

    fn check_structure(&self) -> Result<(), ModelError> {
        let n = self.space.state_dim;
        if self.dynamics.len() != n {
            return Err(PolyError::Dimension {
                expected: n,
                found: self.dynamics.len(),
            }
            .into());
        }
        if self.noise.dim() != self.space.noise_dim {
            return Err(PolyError::Dimension {
                expected: self.space.noise_dim,
                found: self.noise.dim(),
            }
            .into());
        }
        if self.horizon == 0 {
            return Err(ModelError::Config("horizon must be at least 1".into()));
        }
        let polys = self
            .dynamics
            .iter()
            .chain(self.regions.values().flat_map(|s| s.polys.iter()));
        for p in polys {
            if p.space() != self.space {
                return Err(PolyError::Space(self.space, p.space()).into());
            }
        }
        for (what, b) in [("safe_box", &self.safe_box), ("sample_box", &self.sample_box)] {
            if let Some(b) = b {
                if b.len() != n || b.iter().any(|&(lo, hi)| !(lo < hi)) {
                    return Err(ModelError::Config(format!("{what} must hold {n} intervals lo < hi")));
                }
            }
        }
        if let Some(x0) = &self.initial_state {
            if x0.len() != n {
                return Err(PolyError::Dimension {
                    expected: n,
                    found: x0.len(),
                }
                .into());
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<ValidationReport, ModelError> {
        self.check_structure()?;
        let mut containment_samples = 0;
        if let (Some(g), Some(s)) = (self.region(RegionName::G).ok(), self.region(RegionName::S).ok()) {
            let bounds = self.sampling_box();
            for p in halton_box(&bounds, CONTAINMENT_SAMPLES, 0x5eed) {
                containment_samples += 1;
                if g.contains(&p) && !s.contains(&p) {
                    return Err(ModelError::Containment { point: p });
                }
            }
        }
        let n = self.space.state_dim;
        Ok(ValidationReport {
            state_dim: n,
            noise_dim: self.space.noise_dim,
            horizon: self.horizon,
            dynamics_degree: self.dynamics.iter().map(Polynomial::degree).max().unwrap_or(0),
            dynamics_state_degree: self.state_degree_of_dynamics(),
            region_degrees: self.regions.iter().map(|(k, s)| (*k, s.max_degree())).collect(),
            single_polynomial_regions: self
                .regions
                .iter()
                .filter(|(_, s)| s.is_single_polynomial())
                .map(|(k, _)| *k)
                .collect(),
            containment_samples,
            reach_avoid_ready: [RegionName::G, RegionName::SminusG, RegionName::XminusG]
                .iter()
                .all(|r| self.regions.contains_key(r)),
        })
    }

    pub fn region(&self, name: RegionName) -> Result<&SemialgebraicSet, ModelError> {
        self.regions
            .get(&name)
            .ok_or_else(|| ModelError::Config(format!("model has no region {name}")))
    }

    pub fn has_region(&self, name: RegionName) -> bool {
        self.regions.contains_key(&name)
    }

    pub fn state_degree_of_dynamics(&self) -> u32 {
        self.dynamics.iter().map(Polynomial::state_degree).max().unwrap_or(0)
    }

    /// Box for sampling unbounded regions: `sample_box`, else `[-5, 5]^n`.
    pub fn sampling_box(&self) -> Vec<(f64, f64)> {
        self.sample_box
            .clone()
            .unwrap_or_else(|| vec![(-DEFAULT_SAMPLE_HALF_WIDTH, DEFAULT_SAMPLE_HALF_WIDTH); self.space.state_dim])
    }

    /// `f(x, w)` written into `out`; `buf` is scratch of length `n + m`.
    pub fn step_into(&self, x: &[f64], w: &[f64], buf: &mut Vec<f64>, out: &mut [f64]) {
        buf.clear();
        buf.extend_from_slice(x);
        buf.extend_from_slice(w);
        for (o, f) in out.iter_mut().zip(&self.dynamics) {
            *o = f.eval_unchecked(buf);
        }
    }

    pub fn pushforward(&self, degree: u32) -> Result<PushforwardMap, ModelError> {
        PushforwardMap::new(self, degree)
    }

    /// Same system in coordinates `y` with `x = c + D y`, where the affine map
    /// sends `[-1, 1]^n` onto `bounds`.
    pub fn rescaled(&self, bounds: &[(f64, f64)]) -> Result<SystemModel, ModelError> {
        let n = self.space.state_dim;
        if bounds.len() != n || bounds.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(ModelError::Config(format!("rescale needs {n} intervals lo < hi")));
        }
        let sp = self.space;
        let centre: Vec<f64> = bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect();
        let half: Vec<f64> = bounds.iter().map(|&(lo, hi)| 0.5 * (hi - lo)).collect();
        let mut subst = Vec::with_capacity(sp.nvars());
        for i in 0..n {
            subst.push(Polynomial::var(sp, i)?.scale(half[i]).add_constant(centre[i]));
        }
        for j in 0..sp.noise_dim {
            subst.push(Polynomial::noise(sp, j)?);
        }
        let dynamics = self
            .dynamics
            .iter()
            .enumerate()
            .map(|(i, f)| Ok(f.substitute(&subst)?.add_constant(-centre[i]).scale(1.0 / half[i])))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let mut regions = BTreeMap::new();
        for (k, set) in &self.regions {
            let polys = set
                .polys
                .iter()
                .map(|p| p.substitute(&subst))
                .collect::<Result<Vec<_>, _>>()?;
            regions.insert(*k, SemialgebraicSet::new(*k, polys)?);
        }
        let to_y = |x: &[f64]| -> Vec<f64> { x.iter().enumerate().map(|(i, v)| (v - centre[i]) / half[i]).collect() };
        let map_box = |b: &Vec<(f64, f64)>| -> Vec<(f64, f64)> {
            b.iter()
                .enumerate()
                .map(|(i, &(lo, hi))| ((lo - centre[i]) / half[i], (hi - centre[i]) / half[i]))
                .collect()
        };
        Ok(SystemModel {
            name: format!("{} (rescaled)", self.name),
            space: sp,
            dynamics,
            noise: self.noise.clone(),
            horizon: self.horizon,
            regions,
            initial_state: self.initial_state.as_deref().map(to_y),
            safe_box: self.safe_box.as_ref().map(map_box),
            sample_box: self.sample_box.as_ref().map(map_box),
        })
    }
}

/// Linear map from coefficients of a degree-`d` state polynomial `v` to the
/// coefficients of `E_w[v(f(x, w))]`.
#[derive(Debug, Clone)]
pub struct PushforwardMap {
    pub source_degree: u32,
    pub source_basis: Vec<Monomial>,
    pub target_basis: Vec<Monomial>,
    /// `target_basis.len() x source_basis.len()`.
    pub matrix: DMatrix<f64>,
    space: VarSpace,
}

impl PushforwardMap {
    pub fn new(model: &SystemModel, degree: u32) -> Result<Self, ModelError> {
        let space = model.space;
        let source_basis = state_monomials(space, degree);
        let target_degree = degree * model.state_degree_of_dynamics().max(1);
        let target_basis = state_monomials(space, target_degree);
        let index: BTreeMap<&Monomial, usize> = target_basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let columns: Vec<Polynomial> = source_basis
            .par_iter()
            .map(|m| {
                let b = Polynomial::from_monomials(space, [(m.clone(), 1.0)]);
                let composed = b.compose(&model.dynamics)?;
                Ok(model.noise.expect(&composed)?)
            })
            .collect::<Result<_, ModelError>>()?;
        let mut matrix = DMatrix::zeros(target_basis.len(), source_basis.len());
        for (j, col) in columns.iter().enumerate() {
            for (m, c) in col.terms() {
                let i = index
                    .get(m)
                    .ok_or_else(|| ModelError::Config("pushforward image outside the target basis".into()))?;
                matrix[(*i, j)] = c;
            }
        }
        Ok(Self {
            source_degree: degree,
            source_basis,
            target_basis,
            matrix,
            space,
        })
    }

    pub fn apply(&self, coeffs: &[f64]) -> Polynomial {
        let out = &self.matrix * DVector::from_column_slice(coeffs);
        Polynomial::from_monomials(self.space, self.target_basis.iter().cloned().zip(out.iter().copied()))
    }

    /// Coefficients of `v` in the source basis; fails if `v` has higher degree.
    pub fn coefficients(&self, v: &Polynomial) -> Result<Vec<f64>, ModelError> {
        if v.uses_noise() || v.degree() > self.source_degree {
            return Err(ModelError::Config(
                "polynomial outside the pushforward source space".into(),
            ));
        }
        Ok(self.source_basis.iter().map(|m| v.coefficient(m)).collect())
    }

    pub fn apply_poly(&self, v: &Polynomial) -> Result<Polynomial, ModelError> {
        Ok(self.apply(&self.coefficients(v)?))
    }
}
