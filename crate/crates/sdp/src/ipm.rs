//! Infeasible primal-dual path-following interior-point method.
//!
//! HKM search direction with Mehrotra predictor-corrector. Free variables are
//! kept as free variables: each Newton step solves the saddle-point system
//!
//! ```text
//! [ M    A_f ] [ dy  ]   [ h   ]
//! [ A_fᵀ  0  ] [ dxf ] = [ r_f ]
//! ```
//!
//! with `M_ik = Σ_j tr(A_ij X_j A_kj Z_j⁻¹)`. Everything is dense; the solver
//! targets the small, structured programs produced by sum-of-squares
//! compilation (tens of blocks of order ≤ ~30, a few hundred rows).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::problem::SdpProblem;
use crate::{Backend, SdpError, Solution, Status};

#[derive(Debug, Clone)]
pub struct IpmSettings {
    /// Target for relative primal/dual infeasibility and relative gap.
    pub tol: f64,
    /// When progress stalls, a point meeting this accuracy is still reported
    /// as optimal. Anything worse is a numerical failure.
    pub accept_tol: f64,
    /// Relative gap accepted together with `accept_tol` feasibility.
    pub accept_gap: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    /// Threshold on the normalized Farkas residual for infeasibility claims.
    pub infeasibility_tol: f64,
    pub verbose: bool,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            accept_tol: 1e-8,
            accept_gap: 1e-6,
            max_iter: 150,
            step_fraction: 0.98,
            infeasibility_tol: 1e-8,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InteriorPoint {
    pub settings: IpmSettings,
}

impl InteriorPoint {
    pub fn new(settings: IpmSettings) -> Self {
        Self { settings }
    }
}

impl Backend for InteriorPoint {
    fn name(&self) -> &str {
        "interior-point"
    }

    fn solve(&self, problem: &SdpProblem) -> Result<Solution, SdpError> {
        problem.validate()?;
        // Free variables absent from every row would make the Newton system
        // singular. They are fixed at zero, or make the problem unbounded if
        // they carry cost.
        let mut used = vec![false; problem.n_free];
        for c in &problem.constraints {
            for &(k, _) in &c.free {
                used[k] = true;
            }
        }
        if used.iter().all(|&u| u) {
            return Ok(Solver::new(problem, &self.settings).run());
        }
        let mut map = vec![None; problem.n_free];
        let mut reduced = problem.clone();
        reduced.n_free = 0;
        reduced.c_free.clear();
        for k in 0..problem.n_free {
            if used[k] {
                map[k] = Some(reduced.add_free());
                reduced.c_free[reduced.n_free - 1] = problem.c_free[k];
            }
        }
        for c in &mut reduced.constraints {
            for f in &mut c.free {
                f.0 = map[f.0].expect("used variable");
            }
        }
        let mut sol = Solver::new(&reduced, &self.settings).run();
        if (0..problem.n_free).any(|k| !used[k] && problem.c_free[k] != 0.0) {
            sol.status = Status::DualInfeasible;
        }
        sol.x_free = map.iter().map(|m| m.map_or(0.0, |j| sol.x_free[j])).collect();
        Ok(sol)
    }
}

/// Dense copy of the problem with every row scaled to unit norm.
struct Data {
    m: usize,
    nf: usize,
    sizes: Vec<usize>,
    /// `rows[j]` lists the constraints touching block j with their dense matrix.
    rows: Vec<Vec<(usize, DMatrix<f64>)>>,
    a_free: DMatrix<f64>,
    c_blocks: Vec<DMatrix<f64>>,
    c_free: DVector<f64>,
    b: DVector<f64>,
    row_scale: DVector<f64>,
}

impl Data {
    fn new(p: &SdpProblem) -> Self {
        let m = p.constraints.len();
        let nf = p.n_free;
        let sizes = p.block_sizes.clone();

        let mut row_scale = DVector::from_element(m, 1.0);
        for (i, c) in p.constraints.iter().enumerate() {
            let mut sq = c.free.iter().map(|&(_, v)| v * v).sum::<f64>();
            for e in &c.entries {
                let w = if e.row == e.col { 1.0 } else { 2.0 };
                sq += w * e.value * e.value;
            }
            if sq > 0.0 {
                row_scale[i] = 1.0 / sq.sqrt();
            }
        }

        let mut rows: Vec<Vec<(usize, DMatrix<f64>)>> = vec![Vec::new(); sizes.len()];
        let mut a_free = DMatrix::zeros(m, nf);
        let mut b = DVector::zeros(m);
        for (i, c) in p.constraints.iter().enumerate() {
            let s = row_scale[i];
            b[i] = c.rhs * s;
            for &(k, v) in &c.free {
                a_free[(i, k)] += v * s;
            }
            let mut by_block: Vec<(usize, DMatrix<f64>)> = Vec::new();
            for e in &c.entries {
                let pos = match by_block.iter().position(|(j, _)| *j == e.block) {
                    Some(pos) => pos,
                    None => {
                        let n = sizes[e.block];
                        by_block.push((e.block, DMatrix::zeros(n, n)));
                        by_block.len() - 1
                    }
                };
                let mat = &mut by_block[pos].1;
                mat[(e.row, e.col)] += e.value * s;
                if e.row != e.col {
                    mat[(e.col, e.row)] += e.value * s;
                }
            }
            for (j, mat) in by_block {
                rows[j].push((i, mat));
            }
        }

        let mut c_blocks: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for e in &p.c_blocks {
            let mat = &mut c_blocks[e.block];
            mat[(e.row, e.col)] += e.value;
            if e.row != e.col {
                mat[(e.col, e.row)] += e.value;
            }
        }
        let c_free = DVector::from_column_slice(&p.c_free);

        Self {
            m,
            nf,
            sizes,
            rows,
            a_free,
            c_blocks,
            c_free,
            b,
            row_scale,
        }
    }

    /// `A(X) + A_f x`.
    fn apply_a(&self, xs: &[DMatrix<f64>], xf: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.a_free * xf;
        for (j, rows) in self.rows.iter().enumerate() {
            for (i, a) in rows {
                out[*i] += a.dot(&xs[j]);
            }
        }
        out
    }

    /// `A*(y)` for every block.
    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.sizes
            .iter()
            .zip(&self.rows)
            .map(|(&n, rows)| {
                let mut out = DMatrix::zeros(n, n);
                for (i, a) in rows {
                    out += a * y[*i];
                }
                out
            })
            .collect()
    }

    fn primal_objective(&self, xs: &[DMatrix<f64>], xf: &DVector<f64>) -> f64 {
        self.c_blocks.iter().zip(xs).map(|(c, x)| c.dot(x)).sum::<f64>() + self.c_free.dot(xf)
    }

    fn c_norm(&self) -> f64 {
        (self.c_blocks.iter().map(|c| c.norm_squared()).sum::<f64>() + self.c_free.norm_squared()).sqrt()
    }
}

struct Iterate {
    xs: Vec<DMatrix<f64>>,
    zs: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    xf: DVector<f64>,
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: DVector<f64>,
    pinf: f64,
    dinf: f64,
    gap: f64,
    pobj: f64,
    dobj: f64,
}

struct Direction {
    dxs: Vec<DMatrix<f64>>,
    dzs: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dxf: DVector<f64>,
}

struct Solver<'a> {
    data: Data,
    settings: &'a IpmSettings,
    b_norm: f64,
    c_norm: f64,
    order: f64,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factor of a dual slack block.
struct Factor {
    chol: Cholesky<f64, Dyn>,
    l: DMatrix<f64>,
}

impl Factor {
    fn new(z: &DMatrix<f64>) -> Option<Self> {
        let chol = Cholesky::new(z.clone())?;
        let l = chol.l();
        Some(Self { chol, l })
    }

    /// `W Z⁻¹`.
    fn right_solve(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(&w.transpose()).transpose()
    }
}

/// Largest step `t` with `x + t dx ⪰ 0` (may be infinite).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let w = sym(&(&linv * dx * linv.transpose()));
    let lmin = SymmetricEigen::new(w).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

impl<'a> Solver<'a> {
    fn new(p: &SdpProblem, settings: &'a IpmSettings) -> Self {
        let data = Data::new(p);
        let b_norm = data.b.norm();
        let c_norm = data.c_norm();
        let order = data.sizes.iter().sum::<usize>().max(1) as f64;
        Self {
            data,
            settings,
            b_norm,
            c_norm,
            order,
        }
    }

    fn initial_point(&self) -> Iterate {
        let d = &self.data;
        let mut xs = Vec::with_capacity(d.sizes.len());
        let mut zs = Vec::with_capacity(d.sizes.len());
        for (j, &n) in d.sizes.iter().enumerate() {
            let nf = n as f64;
            let mut xi: f64 = 10.0f64.max(nf.sqrt());
            let mut zeta: f64 = 10.0f64.max(nf.sqrt()).max(d.c_blocks[j].norm());
            for (i, a) in &d.rows[j] {
                let an = a.norm();
                xi = xi.max(nf * (1.0 + d.b[*i].abs()) / (1.0 + an));
                zeta = zeta.max(an);
            }
            xs.push(DMatrix::identity(n, n) * xi);
            zs.push(DMatrix::identity(n, n) * zeta);
        }
        Iterate {
            xs,
            zs,
            y: DVector::zeros(d.m),
            xf: DVector::zeros(d.nf),
        }
    }

    fn residuals(&self, it: &Iterate) -> Residuals {
        let d = &self.data;
        let rp = &d.b - d.apply_a(&it.xs, &it.xf);
        let aty = d.apply_at(&it.y);
        let rd: Vec<DMatrix<f64>> = d
            .c_blocks
            .iter()
            .zip(&it.zs)
            .zip(&aty)
            .map(|((c, z), a)| c - z - a)
            .collect();
        let rf = &d.c_free - d.a_free.transpose() * &it.y;
        let pobj = d.primal_objective(&it.xs, &it.xf);
        let dobj = d.b.dot(&it.y);
        let pinf = rp.norm() / (1.0 + self.b_norm);
        let dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rf.norm_squared()).sqrt() / (1.0 + self.c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        Residuals {
            rp,
            rd,
            rf,
            pinf,
            dinf,
            gap,
            pobj,
            dobj,
        }
    }

    fn mu(&self, it: &Iterate) -> f64 {
        it.xs.iter().zip(&it.zs).map(|(x, z)| x.dot(z)).sum::<f64>() / self.order
    }

    /// Normalized Farkas residuals: (primal infeasibility, dual infeasibility).
    fn infeasibility_certificates(&self, it: &Iterate) -> (f64, f64) {
        let d = &self.data;
        let by = d.b.dot(&it.y);
        let primal = if by > 0.0 {
            let aty = d.apply_at(&it.y);
            // A ray needs A*(y) ⪯ 0; measure the positive part.
            let viol = aty
                .iter()
                .map(|a| SymmetricEigen::new(a.clone()).eigenvalues.max().max(0.0))
                .fold(0.0f64, f64::max);
            let free = (d.a_free.transpose() * &it.y).norm();
            (viol + free) / by
        } else {
            f64::INFINITY
        };
        let cx = d.primal_objective(&it.xs, &it.xf);
        let dual = if cx < 0.0 {
            d.apply_a(&it.xs, &it.xf).norm() / (-cx)
        } else {
            f64::INFINITY
        };
        (primal, dual)
    }

    /// Saddle-point matrix for the current iterate. The Schur block is
    /// assembled as `M_ik = Σ_j ⟨L⁻¹ A_ij R, L⁻¹ A_kj R⟩` with `Z = L Lᵀ` and
    /// `X = R Rᵀ`, which keeps it symmetric positive semidefinite in floating
    /// point.
    fn newton_matrix(&self, it: &Iterate, fz: &[Factor]) -> Option<DMatrix<f64>> {
        let d = &self.data;
        let dim = d.m + d.nf;
        let mut k = DMatrix::zeros(dim, dim);
        for (j, rows) in d.rows.iter().enumerate() {
            let rx = Cholesky::new(it.xs[j].clone())?.l();
            let g: Vec<(usize, DMatrix<f64>)> = rows
                .iter()
                .map(|(i, a)| {
                    (
                        *i,
                        fz[j]
                            .l
                            .solve_lower_triangular(&(a * &rx))
                            .unwrap_or_else(|| a.clone() * f64::NAN),
                    )
                })
                .collect();
            for (a, (i, gi)) in g.iter().enumerate() {
                for (kk, gk) in &g[a..] {
                    let v = gi.dot(gk);
                    k[(*i, *kk)] += v;
                    if i != kk {
                        k[(*kk, *i)] += v;
                    }
                }
            }
        }
        for i in 0..d.m {
            for f in 0..d.nf {
                let v = d.a_free[(i, f)];
                k[(i, d.m + f)] = v;
                k[(d.m + f, i)] = v;
            }
        }
        k.iter().all(|v| v.is_finite()).then_some(k)
    }

    fn direction(
        &self,
        it: &Iterate,
        res: &Residuals,
        fz: &[Factor],
        lu: &nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        kmat: &DMatrix<f64>,
        rc: &[DMatrix<f64>],
    ) -> Option<Direction> {
        let d = &self.data;
        // h = r_p − A(R_c Z⁻¹ − X R_d Z⁻¹)
        let tmp: Vec<DMatrix<f64>> = (0..d.sizes.len())
            .map(|j| fz[j].right_solve(&(&rc[j] - &it.xs[j] * &res.rd[j])))
            .collect();
        let h = &res.rp - d.apply_a(&tmp, &DVector::zeros(d.nf));
        let mut rhs = DVector::zeros(d.m + d.nf);
        rhs.rows_mut(0, d.m).copy_from(&h);
        rhs.rows_mut(d.m, d.nf).copy_from(&res.rf);
        let mut sol = lu.solve(&rhs)?;
        let r = &rhs - kmat * &sol;
        if let Some(corr) = lu.solve(&r) {
            sol += corr;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut dy = sol.rows(0, d.m).into_owned();
        let mut dxf = sol.rows(d.m, d.nf).into_owned();
        let build = |dy: &DVector<f64>| {
            let atdy = d.apply_at(dy);
            let dzs: Vec<DMatrix<f64>> = res.rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dxs: Vec<DMatrix<f64>> = (0..d.sizes.len())
                .map(|j| sym(&fz[j].right_solve(&(&rc[j] - &it.xs[j] * &dzs[j]))))
                .collect();
            (dzs, dxs)
        };
        let (mut dzs, mut dxs) = build(&dy);
        // Refine against the operator itself: the assembled Schur matrix
        // drifts from `dy -> A(X A*(dy) Z⁻¹)` as Z becomes ill-conditioned.
        let scale = 1.0 + res.rp.norm();
        let mut err = &res.rp - d.apply_a(&dxs, &dxf);
        for _ in 0..4 {
            if err.norm() <= 1e-14 * scale {
                break;
            }
            let mut r = DVector::zeros(d.m + d.nf);
            r.rows_mut(0, d.m).copy_from(&err);
            let Some(corr) = lu.solve(&r) else { break };
            let cand_dy = &dy + corr.rows(0, d.m);
            let cand_dxf = &dxf + corr.rows(d.m, d.nf);
            let (cz, cx) = build(&cand_dy);
            let cand_err = &res.rp - d.apply_a(&cx, &cand_dxf);
            if cand_err.norm() >= err.norm() {
                break;
            }
            (dy, dxf, dzs, dxs, err) = (cand_dy, cand_dxf, cz, cx, cand_err);
        }
        if self.settings.verbose {
            eprintln!(
                "      direction primal error {:.2e} |dy| {:.2e} |dxf| {:.2e}",
                err.norm(),
                dy.norm(),
                dxf.norm()
            );
        }
        Some(Direction { dxs, dzs, dy, dxf })
    }

    /// Reduces the primal residual of a near-optimal iterate. With
    /// `X_j = R_j R_jᵀ`, the correction is `ΔX_j = R_j W_j R_jᵀ` and `Δx`
    /// where `(W, Δx)` is the minimum-norm solution of
    /// `⟨R_jᵀ A_ij R_j, W_j⟩ + A_f Δx = r_p`, computed by SVD. `X + ΔX`
    /// stays positive definite whenever `‖W‖ < 1`; corrections that break
    /// definiteness or do not reduce the residual are discarded.
    fn polish(&self, it: &mut Iterate) {
        let d = &self.data;
        let offsets: Vec<usize> = d
            .sizes
            .iter()
            .scan(d.nf, |acc, &n| {
                let o = *acc;
                *acc += n * n;
                Some(o)
            })
            .collect();
        let cols = d.nf + d.sizes.iter().map(|n| n * n).sum::<usize>();
        for _ in 0..3 {
            let rp = &d.b - d.apply_a(&it.xs, &it.xf);
            let before = rp.norm();
            if before == 0.0 {
                return;
            }
            let mut factors = Vec::with_capacity(d.sizes.len());
            for x in &it.xs {
                let Some(chol) = Cholesky::new(x.clone()) else {
                    return;
                };
                factors.push(chol.l());
            }
            let mut g = DMatrix::zeros(d.m, cols);
            g.columns_mut(0, d.nf).copy_from(&d.a_free);
            for (j, rows) in d.rows.iter().enumerate() {
                let r = &factors[j];
                for (i, a) in rows {
                    let gij = r.transpose() * a * r;
                    for (k, v) in gij.iter().enumerate() {
                        g[(*i, offsets[j] + k)] = *v;
                    }
                }
            }
            let svd = g.svd(true, true);
            let cutoff = 1e-14 * svd.singular_values.max();
            let Ok(w) = svd.solve(&rp, cutoff) else {
                return;
            };
            let xf = &it.xf + w.rows(0, d.nf);
            let xs: Vec<DMatrix<f64>> = (0..d.sizes.len())
                .map(|j| {
                    let n = d.sizes[j];
                    let wj = DMatrix::from_column_slice(n, n, w.rows(offsets[j], n * n).as_slice());
                    sym(&(&it.xs[j] + &factors[j] * wj * factors[j].transpose()))
                })
                .collect();
            let after = (&d.b - d.apply_a(&xs, &xf)).norm();
            if xs.iter().any(|x| Cholesky::new(x.clone()).is_none()) || !(after < 0.5 * before) {
                return;
            }
            it.xs = xs;
            it.xf = xf;
        }
    }

    fn step_lengths(&self, it: &Iterate, dir: &Direction) -> (f64, f64) {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for j in 0..it.xs.len() {
            ap = ap.min(max_step(&it.xs[j], &dir.dxs[j]));
            ad = ad.min(max_step(&it.zs[j], &dir.dzs[j]));
        }
        (ap, ad)
    }

    fn run(&self) -> Solution {
        let d = &self.data;
        let s = self.settings;
        let mut it = self.initial_point();
        let mut status = Status::NumericalFailure;
        let mut iterations = 0;
        let mut best: Option<(f64, Iterate)> = None;
        let mut stall = 0;

        for k in 0..s.max_iter {
            iterations = k;
            let res = self.residuals(&it);
            let worst = res.pinf.max(res.dinf).max(res.gap);
            if s.verbose {
                eprintln!(
                    "{k:3} pobj {:+.10e} dobj {:+.10e} pinf {:.2e} dinf {:.2e} gap {:.2e} mu {:.2e}",
                    res.pobj,
                    res.dobj,
                    res.pinf,
                    res.dinf,
                    res.gap,
                    self.mu(&it)
                );
            }
            if worst <= s.tol {
                status = Status::Optimal;
                best = None;
                break;
            }
            match &best {
                Some((b, _)) if *b <= worst => stall += 1,
                _ => {
                    stall = 0;
                    best = Some((
                        worst,
                        Iterate {
                            xs: it.xs.clone(),
                            zs: it.zs.clone(),
                            y: it.y.clone(),
                            xf: it.xf.clone(),
                        },
                    ));
                }
            }
            let (pcert, dcert) = self.infeasibility_certificates(&it);
            if pcert < s.infeasibility_tol && res.pinf > s.accept_tol {
                status = Status::PrimalInfeasible;
                best = None;
                break;
            }
            if dcert < s.infeasibility_tol && res.dinf > s.accept_tol {
                status = Status::DualInfeasible;
                best = None;
                break;
            }
            if stall >= 8 {
                break;
            }

            let Some(fz) = it.zs.iter().map(Factor::new).collect::<Option<Vec<_>>>() else {
                break;
            };
            let Some(kmat) = self.newton_matrix(&it, &fz) else {
                break;
            };
            let lu = kmat.clone().lu();
            let mu = self.mu(&it);

            // Predictor.
            let rc_aff: Vec<DMatrix<f64>> = it.xs.iter().zip(&it.zs).map(|(x, z)| -(x * z)).collect();
            let Some(aff) = self.direction(&it, &res, &fz, &lu, &kmat, &rc_aff) else {
                break;
            };
            let (ap, ad) = self.step_lengths(&it, &aff);
            let ap = ap.min(1.0);
            let ad = ad.min(1.0);
            let mu_aff = it
                .xs
                .iter()
                .zip(&it.zs)
                .zip(aff.dxs.iter().zip(&aff.dzs))
                .map(|((x, z), (dx, dz))| (x + dx * ap).dot(&(z + dz * ad)))
                .sum::<f64>()
                / self.order;
            let ratio = (mu_aff / mu).max(0.0);
            let sigma = if res.pinf.max(res.dinf) > 1e-3 {
                ratio.powi(2).clamp(0.0, 1.0).max(0.1 * ratio)
            } else {
                ratio.powi(3).clamp(0.0, 1.0)
            };

            // Corrector.
            let rc: Vec<DMatrix<f64>> = (0..d.sizes.len())
                .map(|j| {
                    let n = d.sizes[j];
                    DMatrix::identity(n, n) * (sigma * mu) - &it.xs[j] * &it.zs[j] - &aff.dxs[j] * &aff.dzs[j]
                })
                .collect();
            let Some(dir) = self.direction(&it, &res, &fz, &lu, &kmat, &rc) else {
                break;
            };
            let (ap, ad) = self.step_lengths(&it, &dir);
            let ap = (s.step_fraction * ap).min(1.0);
            let ad = (s.step_fraction * ad).min(1.0);
            if !(ap > 1e-12 && ad > 1e-12) {
                break;
            }
            for j in 0..it.xs.len() {
                it.xs[j] = sym(&(&it.xs[j] + &dir.dxs[j] * ap));
                it.zs[j] = sym(&(&it.zs[j] + &dir.dzs[j] * ad));
            }
            it.xf += &dir.dxf * ap;
            it.y += &dir.dy * ad;
        }

        if status == Status::NumericalFailure {
            // Fall back to the most accurate iterate seen.
            let current = self.residuals(&it);
            let cur_worst = current.pinf.max(current.dinf).max(current.gap);
            if let Some((bw, b)) = best.take() {
                if bw < cur_worst {
                    it = b;
                }
            }
            self.polish(&mut it);
            let res = self.residuals(&it);
            if res.pinf.max(res.dinf) <= s.accept_tol && res.gap <= s.accept_gap {
                status = Status::Optimal;
            }
        }

        let res = self.residuals(&it);
        // Undo row scaling on the dual variables.
        let y: Vec<f64> = it.y.iter().zip(d.row_scale.iter()).map(|(y, s)| y * s).collect();
        Solution {
            status,
            x_free: it.xf.iter().copied().collect(),
            blocks: it.xs,
            dual_y: y,
            dual_slack: it.zs,
            primal_objective: res.pobj,
            dual_objective: res.dobj,
            primal_infeasibility: res.pinf,
            dual_infeasibility: res.dinf,
            relative_gap: res.gap,
            iterations,
        }
    }
}
