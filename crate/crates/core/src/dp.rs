//! Gridded value iteration for safety and reach-avoid probabilities, and a
//! seeded Monte-Carlo estimator for cross-checks.
//!
//! Tables store the value function at grid nodes together with the constant
//! values it takes off `S` (`outside`) and on `G` (`target`). A Bellman step
//! integrates the next table over the transition kernel: each quadrature
//! image `f(x, w_q)` either leaves `S`, lands in `G` (reach-avoid only), or is
//! looked up by multilinear interpolation. Those lookups depend only on the
//! grid, so they are precomputed once per node as a sparse stencil.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, RegionName, SemialgebraicSet, SystemModel};
use crate::noise::NoiseComponent;
use crate::quadrature::{noise_rule, GaussLegendre};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;
const WEIGHT_SUM_TOL: f64 = 1e-9;
const ROOT_SCAN_POINTS: usize = 512;

#[derive(Debug, Error)]
pub enum DpError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("x0 = {point:?} lies in S but outside the grid")]
    Extrapolation { point: Vec<f64> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Spec {
    Safety,
    ReachAvoid,
}

impl std::str::FromStr for Spec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "safety" => Ok(Spec::Safety),
            "reach-avoid" | "reach_avoid" | "reachavoid" => Ok(Spec::ReachAvoid),
            _ => Err(format!("unknown spec {s:?} (expected safety or reach-avoid)")),
        }
    }
}

impl std::fmt::Display for Spec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Spec::Safety => "safety",
            Spec::ReachAvoid => "reach-avoid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.nodes {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    /// Gauss–Legendre points per noise dimension (per piece when splitting).
    pub quad_nodes: usize,
    /// Normal noise is integrated over `±normal_truncation·σ`.
    pub normal_truncation: f64,
    /// Cut one-dimensional noise intervals where the image crosses a region
    /// boundary, so each piece integrates a smooth function.
    pub split_at_boundaries: bool,
}

impl GridSpec {
    pub const DEFAULT_QUAD_NODES: usize = 201;
    pub const DEFAULT_TRUNCATION: f64 = 8.0;

    pub fn default_nodes(state_dim: usize) -> usize {
        match state_dim {
            1 => 2001,
            2 => 201,
            _ => 41,
        }
    }

    /// Default grid over the model's `safe_box`.
    pub fn for_model(model: &SystemModel) -> Result<Self, DpError> {
        Self::with_nodes(
            model,
            Self::default_nodes(model.space.state_dim),
            Self::DEFAULT_QUAD_NODES,
        )
    }

    pub fn with_nodes(model: &SystemModel, nodes: usize, quad_nodes: usize) -> Result<Self, DpError> {
        let bounds = model
            .safe_box
            .as_ref()
            .ok_or_else(|| DpError::Config("model has no safe_box to grid".into()))?;
        let g = Self {
            axes: bounds.iter().map(|&(lo, hi)| Axis { lo, hi, nodes }).collect(),
            quad_nodes,
            normal_truncation: Self::DEFAULT_TRUNCATION,
            split_at_boundaries: true,
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<(), DpError> {
        if self.axes.is_empty() {
            return Err(DpError::Config("grid has no axes".into()));
        }
        for a in &self.axes {
            if a.nodes < 2 || !(a.lo < a.hi) {
                return Err(DpError::Config(format!(
                    "grid axis [{}, {}] with {} nodes is invalid",
                    a.lo, a.hi, a.nodes
                )));
            }
        }
        if self.quad_nodes == 0 {
            return Err(DpError::Config("quadrature needs at least one node".into()));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    /// Coordinates of flat node `idx` (first axis varies slowest).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for (d, a) in self.axes.iter().enumerate().rev() {
            p[d] = a.node(idx % a.nodes);
            idx /= a.nodes;
        }
        p
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(x)
            .all(|(a, &v)| v >= a.lo - 1e-12 && v <= a.hi + 1e-12)
    }

    /// Multilinear interpolation weights: `(flat index, weight)` for the
    /// `2^n` corners of the cell containing `x` (clamped to the box).
    fn corners(&self, x: &[f64], out: &mut Vec<(u32, f64)>) {
        out.clear();
        out.push((0, 1.0));
        for (a, &v) in self.axes.iter().zip(x) {
            let u = ((v - a.lo) / a.step()).clamp(0.0, (a.nodes - 1) as f64);
            let cell = (u.floor() as usize).min(a.nodes - 2);
            let frac = u - cell as f64;
            let len = out.len();
            for k in 0..len {
                let (idx, w) = out[k];
                let base = idx * a.nodes as u32;
                out[k] = (base + cell as u32, w * (1.0 - frac));
                out.push((base + cell as u32 + 1, w * frac));
            }
        }
        out.retain(|&(_, w)| w != 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Active,
    Outside,
    Target,
}

/// Value function at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub stage: usize,
    pub values: Vec<f64>,
    /// Value taken everywhere off `S`.
    pub outside: f64,
    /// Value taken everywhere on `G` (reach-avoid).
    pub target: f64,
}

impl ValueTable {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ValueTable {
        ValueTable {
            stage: self.stage,
            values: self.values.iter().map(|&v| f(v)).collect(),
            outside: f(self.outside),
            target: f(self.target),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Stencil {
    p_out: f64,
    p_target: f64,
    entries: Vec<(u32, f64)>,
}

/// Diagnostics gathered while building stencils.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StencilStats {
    pub active_nodes: usize,
    pub quadrature_points_per_node_max: usize,
    pub worst_weight_sum_error: f64,
    /// Images inside `S` but outside the grid box (clamped to the box).
    pub clamped_lookups: usize,
}

/// Precomputed Bellman operator for one model, grid and specification.
pub struct DpOperator<'a> {
    pub model: &'a SystemModel,
    pub grid: GridSpec,
    pub spec: Spec,
    safe: &'a SemialgebraicSet,
    goal: Option<&'a SemialgebraicSet>,
    kinds: Vec<NodeKind>,
    stencils: Vec<Stencil>,
    pub stats: StencilStats,
}

impl<'a> DpOperator<'a> {
    pub fn new(model: &'a SystemModel, grid: GridSpec, spec: Spec) -> Result<Self, DpError> {
        grid.check()?;
        let n = model.space.state_dim;
        if grid.axes.len() != n {
            return Err(DpError::Config(format!(
                "grid has {} axes, model has {n} states",
                grid.axes.len()
            )));
        }
        let safe = model.region(RegionName::S)?;
        let goal = match spec {
            Spec::Safety => None,
            Spec::ReachAvoid => Some(model.region(RegionName::G)?),
        };
        let kinds: Vec<NodeKind> = (0..grid.num_nodes())
            .map(|i| {
                let x = grid.point(i);
                if !safe.contains(&x) {
                    NodeKind::Outside
                } else if goal.is_some_and(|g| g.contains(&x)) {
                    NodeKind::Target
                } else {
                    NodeKind::Active
                }
            })
            .collect();

        let mut op = Self {
            model,
            grid,
            spec,
            safe,
            goal,
            kinds,
            stencils: Vec::new(),
            stats: StencilStats::default(),
        };
        let gl = GaussLegendre::new(op.grid.quad_nodes);
        let built: Vec<Result<(Stencil, f64, usize, usize), DpError>> = (0..op.grid.num_nodes())
            .into_par_iter()
            .map(|i| {
                if op.kinds[i] != NodeKind::Active {
                    return Ok((Stencil::default(), 0.0, 0, 0));
                }
                op.build_stencil(&op.grid.point(i), &gl)
            })
            .collect();
        let mut stencils = Vec::with_capacity(built.len());
        for r in built {
            let (s, err, npts, clamped) = r?;
            op.stats.worst_weight_sum_error = op.stats.worst_weight_sum_error.max(err);
            op.stats.quadrature_points_per_node_max = op.stats.quadrature_points_per_node_max.max(npts);
            op.stats.clamped_lookups += clamped;
            stencils.push(s);
        }
        op.stats.active_nodes = op.kinds.iter().filter(|k| **k == NodeKind::Active).count();
        op.stencils = stencils;
        Ok(op)
    }

    /// Probability-weighted noise points for the kernel at `x`.
    fn noise_points(&self, x: &[f64], gl: &GaussLegendre) -> Vec<(Vec<f64>, f64)> {
        let comps = &self.model.noise.components;
        let trunc = self.grid.normal_truncation;
        if comps.is_empty() {
            return vec![(Vec::new(), 1.0)];
        }
        if comps.len() == 1 {
            let breaks = if self.grid.split_at_boundaries {
                self.crossings(x, &comps[0])
            } else {
                Vec::new()
            };
            return noise_rule(&comps[0], gl, trunc, &breaks)
                .into_iter()
                .map(|(z, w)| (vec![z], w))
                .collect();
        }
        let rules: Vec<Vec<(f64, f64)>> = comps.iter().map(|c| noise_rule(c, gl, trunc, &[])).collect();
        let mut pts = vec![(Vec::new(), 1.0)];
        for rule in &rules {
            let mut next = Vec::with_capacity(pts.len() * rule.len());
            for (p, w) in &pts {
                for &(z, wz) in rule {
                    let mut q: Vec<f64> = p.clone();
                    q.push(z);
                    next.push((q, w * wz));
                }
            }
            pts = next;
        }
        pts
    }

    /// Noise values where `f(x, ·)` crosses the boundary of `S` (and `G`).
    fn crossings(&self, x: &[f64], comp: &NoiseComponent) -> Vec<f64> {
        let (lo, hi) = comp.support(self.grid.normal_truncation);
        let sets = std::iter::once(self.safe).chain(self.goal);
        let mut buf = Vec::new();
        let mut img = vec![0.0; x.len()];
        let mut g = |w: f64, s: &crate::poly::Polynomial| {
            self.model.step_into(x, &[w], &mut buf, &mut img);
            s.eval_unchecked(&img)
        };
        let mut roots = Vec::new();
        for set in sets {
            for s in &set.polys {
                let h = (hi - lo) / ROOT_SCAN_POINTS as f64;
                let mut a = lo;
                let mut ga = g(a, s);
                for k in 1..=ROOT_SCAN_POINTS {
                    let b = if k == ROOT_SCAN_POINTS { hi } else { lo + k as f64 * h };
                    let gb = g(b, s);
                    if ga == 0.0 {
                        roots.push(a);
                    } else if ga * gb < 0.0 {
                        let (mut l, mut r, mut gl) = (a, b, ga);
                        for _ in 0..80 {
                            let m = 0.5 * (l + r);
                            let gm = g(m, s);
                            if gm == 0.0 {
                                l = m;
                                r = m;
                                break;
                            }
                            if gl * gm < 0.0 {
                                r = m;
                            } else {
                                l = m;
                                gl = gm;
                            }
                        }
                        roots.push(0.5 * (l + r));
                    }
                    a = b;
                    ga = gb;
                }
            }
        }
        roots
    }

    fn build_stencil(&self, x: &[f64], gl: &GaussLegendre) -> Result<(Stencil, f64, usize, usize), DpError> {
        let pts = self.noise_points(x, gl);
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let err = (total - 1.0).abs();
        if err > WEIGHT_SUM_TOL {
            return Err(DpError::Config(format!(
                "quadrature weights sum to {total} at x = {x:?}"
            )));
        }
        let mut st = Stencil::default();
        let mut buf = Vec::new();
        let mut img = vec![0.0; x.len()];
        let mut corners = Vec::new();
        let mut clamped = 0;
        let mut raw: Vec<(u32, f64)> = Vec::with_capacity(pts.len() * 2);
        for (w, weight) in &pts {
            self.model.step_into(x, w, &mut buf, &mut img);
            if !self.safe.contains(&img) {
                st.p_out += weight;
            } else if self.goal.is_some_and(|g| g.contains(&img)) {
                st.p_target += weight;
            } else {
                if !self.grid.contains(&img) {
                    clamped += 1;
                }
                self.grid.corners(&img, &mut corners);
                raw.extend(corners.iter().map(|&(i, c)| (i, c * weight)));
            }
        }
        raw.sort_unstable_by_key(|e| e.0);
        for (i, w) in raw {
            match st.entries.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => st.entries.push((i, w)),
            }
        }
        Ok((st, err, pts.len(), clamped))
    }

    /// `v_T`: the indicator of `X\S` (safety) or of `G` (reach-avoid).
    pub fn terminal(&self) -> ValueTable {
        let (outside, target) = self.fixed_values();
        ValueTable {
            stage: self.model.horizon,
            values: self
                .kinds
                .iter()
                .map(|k| match k {
                    NodeKind::Active => 0.0,
                    NodeKind::Outside => outside,
                    NodeKind::Target => target,
                })
                .collect(),
            outside,
            target,
        }
    }

    fn fixed_values(&self) -> (f64, f64) {
        match self.spec {
            Spec::Safety => (1.0, 1.0),
            Spec::ReachAvoid => (0.0, 1.0),
        }
    }

    /// One application of the Bellman operator, clamped to `[0, 1]`.
    pub fn step(&self, next: &ValueTable) -> ValueTable {
        self.apply(next, true)
    }

    /// As [`step`](Self::step) without clamping, so that the operator is
    /// exactly affine in the table.
    pub fn step_unclamped(&self, next: &ValueTable) -> ValueTable {
        self.apply(next, false)
    }

    fn apply(&self, next: &ValueTable, clamp: bool) -> ValueTable {
        let (outside, target) = self.fixed_values();
        let values = self
            .kinds
            .par_iter()
            .zip(self.stencils.par_iter())
            .map(|(k, st)| match k {
                NodeKind::Outside => outside,
                NodeKind::Target => target,
                NodeKind::Active => {
                    let mut v = st.p_out * next.outside + st.p_target * next.target;
                    for &(i, w) in &st.entries {
                        v += w * next.values[i as usize];
                    }
                    if clamp {
                        v.clamp(0.0, 1.0)
                    } else {
                        v
                    }
                }
            })
            .collect();
        ValueTable {
            stage: next.stage.saturating_sub(1),
            values,
            outside,
            target,
        }
    }

    /// All tables `v_0 … v_T` for the model horizon.
    pub fn run(&self) -> DpResult {
        self.run_for(self.model.horizon)
    }

    pub fn run_for(&self, horizon: usize) -> DpResult {
        let mut tables = Vec::with_capacity(horizon + 1);
        let mut t = self.terminal();
        t.stage = horizon;
        tables.push(t);
        for _ in 0..horizon {
            let next = self.step(tables.last().unwrap());
            tables.push(next);
        }
        tables.reverse();
        DpResult {
            spec: self.spec,
            grid: self.grid.clone(),
            tables,
            stats: self.stats,
            safe: self.safe.clone(),
            goal: self.goal.cloned(),
        }
    }

    /// Whether flat node `i` is integrated (in `S`, and not in `G`).
    pub fn is_active(&self, i: usize) -> bool {
        self.kinds[i] == NodeKind::Active
    }
}

/// Tables for all stages of one value iteration.
#[derive(Debug, Clone)]
pub struct DpResult {
    pub spec: Spec,
    pub grid: GridSpec,
    /// `tables[t]` is stage `t`.
    pub tables: Vec<ValueTable>,
    pub stats: StencilStats,
    safe: SemialgebraicSet,
    goal: Option<SemialgebraicSet>,
}

impl DpResult {
    pub fn horizon(&self) -> usize {
        self.tables.len() - 1
    }

    /// Stage-`t` value at `x`: analytic off `S` and on `G`, interpolated
    /// otherwise.
    pub fn value_at_stage(&self, t: usize, x: &[f64]) -> Result<f64, DpError> {
        let table = self
            .tables
            .get(t)
            .ok_or_else(|| DpError::Config(format!("stage {t} beyond horizon {}", self.horizon())))?;
        if x.len() != self.grid.axes.len() {
            return Err(DpError::Config(format!("x0 has {} coordinates", x.len())));
        }
        if !self.safe.contains(x) {
            return Ok(table.outside);
        }
        if self.goal.as_ref().is_some_and(|g| g.contains(x)) {
            return Ok(table.target);
        }
        if !self.grid.contains(x) {
            return Err(DpError::Extrapolation { point: x.to_vec() });
        }
        let mut corners = Vec::new();
        self.grid.corners(x, &mut corners);
        let v: f64 = corners.iter().map(|&(i, w)| w * table.values[i as usize]).sum();
        Ok(v.clamp(0.0, 1.0))
    }

    pub fn value_at(&self, x: &[f64]) -> Result<f64, DpError> {
        self.value_at_stage(0, x)
    }

    /// Write `stage, x1..xn, value` rows for every stage and node.
    pub fn write_csv(&self, path: &Path) -> Result<(), DpError> {
        let mut w = csv::Writer::from_path(path)?;
        let n = self.grid.axes.len();
        let mut header = vec!["stage".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("value".into());
        w.write_record(&header)?;
        for t in &self.tables {
            for (i, v) in t.values.iter().enumerate() {
                let mut row = vec![t.stage.to_string()];
                row.extend(self.grid.point(i).iter().map(|c| c.to_string()));
                row.push(v.to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn bellman_safety_step(model: &SystemModel, grid: &GridSpec, next: &ValueTable) -> Result<ValueTable, DpError> {
    Ok(DpOperator::new(model, grid.clone(), Spec::Safety)?.step(next))
}

pub fn bellman_reach_avoid_step(
    model: &SystemModel,
    grid: &GridSpec,
    next: &ValueTable,
) -> Result<ValueTable, DpError> {
    Ok(DpOperator::new(model, grid.clone(), Spec::ReachAvoid)?.step(next))
}

/// `1 - SA_{x0}(S)`.
pub fn safety_unsafe_probability(model: &SystemModel, grid: &GridSpec, x0: &[f64]) -> Result<f64, DpError> {
    if !model.region(RegionName::S)?.contains(x0) {
        return Ok(1.0);
    }
    DpOperator::new(model, grid.clone(), Spec::Safety)?.run().value_at(x0)
}

/// `RA_{x0}(G, S)`.
pub fn reach_avoid_probability(model: &SystemModel, grid: &GridSpec, x0: &[f64]) -> Result<f64, DpError> {
    if !model.region(RegionName::S)?.contains(x0) {
        return Ok(0.0);
    }
    if model.region(RegionName::G)?.contains(x0) {
        return Ok(1.0);
    }
    DpOperator::new(model, grid.clone(), Spec::ReachAvoid)?
        .run()
        .value_at(x0)
}

/// Monte-Carlo estimate of the probability of satisfying the specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub spec: Spec,
    pub samples: u64,
    pub successes: u64,
    pub estimate: f64,
    /// Wilson 99% interval for `estimate`.
    pub ci: (f64, f64),
}

impl McEstimate {
    /// Estimate and interval for the complementary event (violation).
    pub fn complement(&self) -> (f64, (f64, f64)) {
        (1.0 - self.estimate, (1.0 - self.ci.1, 1.0 - self.ci.0))
    }
}

pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

const MC_SHARD: u64 = 1 << 14;

/// Simulates `samples` trajectories of length `T` from `x0`. Shard `k` draws
/// from ChaCha stream `k` of `seed`, so results do not depend on threading.
pub fn monte_carlo(
    model: &SystemModel,
    x0: &[f64],
    spec: Spec,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, DpError> {
    if samples == 0 {
        return Err(DpError::Config("Monte-Carlo needs at least one sample".into()));
    }
    let n = model.space.state_dim;
    if x0.len() != n {
        return Err(DpError::Config(format!(
            "x0 has {} coordinates, expected {n}",
            x0.len()
        )));
    }
    let safe = model.region(RegionName::S)?;
    let goal = match spec {
        Spec::Safety => None,
        Spec::ReachAvoid => Some(model.region(RegionName::G)?),
    };
    let shards = samples.div_ceil(MC_SHARD);
    let successes: u64 = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = MC_SHARD.min(samples - k * MC_SHARD);
            let mut x = vec![0.0; n];
            let mut next = vec![0.0; n];
            let mut w = vec![0.0; model.space.noise_dim];
            let mut buf = Vec::new();
            let mut ok = 0;
            for _ in 0..count {
                x.copy_from_slice(x0);
                let mut success = spec == Spec::Safety;
                for t in 0..=model.horizon {
                    if !safe.contains(&x) {
                        success = false;
                        break;
                    }
                    if goal.is_some_and(|g| g.contains(&x)) {
                        success = true;
                        break;
                    }
                    if t == model.horizon {
                        break;
                    }
                    model.noise.sample(&mut rng, &mut w);
                    model.step_into(&x, &w, &mut buf, &mut next);
                    std::mem::swap(&mut x, &mut next);
                }
                ok += u64::from(success);
            }
            ok
        })
        .sum();
    Ok(McEstimate {
        spec,
        samples,
        successes,
        estimate: successes as f64 / samples as f64,
        ci: wilson_interval(successes, samples, Z99),
    })
}
