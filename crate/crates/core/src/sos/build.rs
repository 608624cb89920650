//! SOS program builders for the four certificate kinds.

use crate::certificates::{geometric_sum, CertError, CertificateKind};
use crate::model::{RegionName, SystemModel};
use crate::poly::{Monomial, Polynomial};

use super::{AffinePoly, AffineScalar, BasisKind, Multiplier, PolyBasis, Sense, SosConstraint, SosProgram, Var};

/// Template degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SosOptions {
    /// Degree of `ṽ`.
    pub degree: u32,
    /// Fixed multiplier degree; `None` balances each multiplier against its
    /// constraint's main expression.
    pub multiplier_degree: Option<u32>,
    /// Basis for `ṽ` and the Gram matrices. The certificate is always
    /// reported in monomials.
    pub basis: BasisKind,
}

impl SosOptions {
    pub fn degree(degree: u32) -> Self {
        Self {
            degree,
            multiplier_degree: None,
            basis: BasisKind::default(),
        }
    }
}

fn even_ceil(d: u32) -> u32 {
    d + d % 2
}

struct Builder<'a> {
    model: &'a SystemModel,
    opts: SosOptions,
    prog: SosProgram,
    /// `E_w[ṽ∘f]` as an affine polynomial.
    expected_v: AffinePoly,
    v_expr: AffinePoly,
    v_degree: u32,
    expected_degree: u32,
    basis_box: Vec<(f64, f64)>,
}

impl<'a> Builder<'a> {
    fn new(model: &'a SystemModel, kind: CertificateKind, alpha: f64, opts: SosOptions) -> Result<Self, CertError> {
        kind.check_alpha(alpha)?;
        let space = model.space;
        let pf = model.pushforward(opts.degree)?;

        let basis_box = model
            .safe_box
            .clone()
            .unwrap_or_else(|| vec![(-1.0, 1.0); space.state_dim]);
        let v_basis = PolyBasis::new(opts.basis, space, opts.degree, &basis_box)?;
        if v_basis.monomials != pf.source_basis {
            return Err(CertError::Config(
                "template basis does not match the pushforward source".into(),
            ));
        }
        let mut free_names: Vec<String> = (0..v_basis.len()).map(|k| format!("v{k}")).collect();
        let v_vars: Vec<usize> = (0..v_basis.len()).collect();
        let beta_var = free_names.len();
        free_names.push("beta".into());
        let delta_var = free_names.len();
        free_names.push("delta".into());

        let mut v_expr = AffinePoly::default();
        for (i, m) in v_basis.monomials.iter().enumerate() {
            let mut a = AffineScalar::default();
            for k in 0..v_basis.len() {
                a.add(Var::Free(k), v_basis.transform[(i, k)]);
            }
            v_expr.add_affine(m, &a, 1.0);
        }
        let image = &pf.matrix * &v_basis.transform;
        let mut expected_v = AffinePoly::default();
        for (i, m) in pf.target_basis.iter().enumerate() {
            let mut a = AffineScalar::default();
            for k in 0..v_basis.len() {
                a.add(Var::Free(k), image[(i, k)]);
            }
            expected_v.add_affine(m, &a, 1.0);
        }
        let expected_degree = expected_v.degree();
        let horizon = model.horizon;
        let g = geometric_sum(alpha, horizon);
        let mut objective = AffineScalar::default();
        objective.add(Var::Free(delta_var), alpha.powi(-(horizon as i32)));
        objective.add(Var::Free(beta_var), g);
        let sense = if kind.is_safety() {
            Sense::Minimize
        } else {
            Sense::Maximize
        };
        Ok(Self {
            model,
            opts,
            prog: SosProgram {
                space,
                kind,
                alpha,
                horizon,
                free_names,
                v_basis,
                v_vars,
                beta_var,
                delta_var,
                multipliers: Vec::new(),
                constraints: Vec::new(),
                scalar_nonneg: Vec::new(),
                objective,
                sense,
            },
            expected_v,
            v_expr,
            v_degree: opts.degree,
            expected_degree,
            basis_box,
        })
    }

    fn region_polys(&self, region: RegionName) -> Result<Vec<Polynomial>, CertError> {
        let set = self
            .model
            .region(region)
            .map_err(|_| CertError::Config(format!("{} program needs region {region} in the model", self.prog.kind)))?;
        Ok(set.polys.clone())
    }

    /// `main − Σ ξ_k s_k ∈ Σ` with one fresh multiplier per polynomial of
    /// `region`.
    fn constraint(
        &mut self,
        name: &str,
        mut expr: AffinePoly,
        main_degree: u32,
        region: RegionName,
    ) -> Result<(), CertError> {
        let target = main_degree.max(self.v_degree);
        for (k, s) in self.region_polys(region)?.iter().enumerate() {
            let ds = s.degree();
            let dm = self
                .opts
                .multiplier_degree
                .unwrap_or_else(|| even_ceil(target.saturating_sub(ds)));
            let basis = self.basis(dm / 2)?;
            let mult = self.prog.multipliers.len();
            expr.add_multiplier(mult, &basis, s, -1.0)?;
            self.prog.multipliers.push(Multiplier {
                name: format!("xi_{name}_{region}_{k}"),
                basis,
            });
        }
        let basis = self.basis(expr.degree().div_ceil(2))?;
        self.prog.constraints.push(SosConstraint {
            name: name.into(),
            basis,
            expr,
        });
        Ok(())
    }

    fn basis(&self, degree: u32) -> Result<PolyBasis, CertError> {
        Ok(PolyBasis::new(
            self.opts.basis,
            self.prog.space,
            degree,
            &self.basis_box,
        )?)
    }

    /// The `X0` constraint. A point set `{x0}` gives the scalar inequality
    /// `expr(x0) >= 0`; the SOS form would leave its multiplier unbounded.
    fn initial(&mut self, name: &str, expr: AffinePoly, main_degree: u32) -> Result<(), CertError> {
        let point = self.model.region(RegionName::X0).ok().and_then(|s| s.as_point());
        let Some(x0) = point else {
            return self.constraint(name, expr, main_degree, RegionName::X0);
        };
        let mut at = AffineScalar::default();
        for (m, a) in &expr.coeffs {
            at.add_scaled(a, m.eval(&x0));
        }
        self.prog.scalar_nonneg.push((name.into(), at));
        Ok(())
    }

    fn v(&self, scale: f64) -> AffinePoly {
        let mut e = AffinePoly::default();
        for (m, a) in &self.v_expr.coeffs {
            e.add_affine(m, a, scale);
        }
        e
    }

    fn scalar(&self, var: usize, coef: f64) -> AffineScalar {
        AffineScalar::var(Var::Free(var), coef)
    }

    /// `scale · (ṽ α^{-T} + G β) + c`.
    fn envelope(&self, scale: f64, c: f64) -> AffinePoly {
        let a = self.prog.alpha;
        let g = geometric_sum(a, self.prog.horizon);
        let mut e = self.v(scale * a.powi(-(self.prog.horizon as i32)));
        let one = Monomial::one(self.prog.space.nvars());
        e.add_affine(&one, &self.scalar(self.prog.beta_var, scale * g), 1.0);
        e.add_affine(&one, &AffineScalar::constant(c), 1.0);
        e
    }

    /// `sign · (E[ṽ∘f] − ṽ/α − β)`.
    fn decrease(&self, sign: f64) -> AffinePoly {
        let a = self.prog.alpha;
        let mut e = self.v(-sign / a);
        for (m, c) in &self.expected_v.coeffs {
            e.add_affine(m, c, sign);
        }
        let one = Monomial::one(self.prog.space.nvars());
        e.add_affine(&one, &self.scalar(self.prog.beta_var, -sign), 1.0);
        e
    }

    fn with_constant(&self, mut e: AffinePoly, var: Option<(usize, f64)>, c: f64) -> AffinePoly {
        let one = Monomial::one(self.prog.space.nvars());
        if let Some((k, coef)) = var {
            e.add_affine(&one, &self.scalar(k, coef), 1.0);
        }
        if c != 0.0 {
            e.add_affine(&one, &AffineScalar::constant(c), 1.0);
        }
        e
    }
}

fn safety_common(b: &mut Builder) -> Result<(), CertError> {
    let d = b.v_degree;
    let dv = b.expected_degree.max(d);
    b.constraint("nonneg_S", b.v(1.0), d, RegionName::S)?;
    let e = b.with_constant(b.v(1.0), None, -1.0);
    b.constraint("unsafe_ge_1", e, d, RegionName::XminusS)?;
    let e = b.with_constant(b.v(-1.0), Some((b.prog.delta_var, 1.0)), 0.0);
    b.initial("initial_le_delta", e, d)?;
    b.constraint("expected_decrease", b.decrease(-1.0), dv, RegionName::S)?;
    Ok(())
}

/// DSBC program: minimize `δα^{-T} + Gβ`.
pub fn build_dsbc(model: &SystemModel, alpha: f64, opts: SosOptions) -> Result<SosProgram, CertError> {
    let mut b = Builder::new(model, CertificateKind::Dsbc, alpha, opts)?;
    safety_common(&mut b)?;
    let e = b.envelope(1.0, -1.0);
    b.constraint("unsafe_envelope", e, opts.degree, RegionName::XminusS)?;
    Ok(b.prog)
}

fn gamma_program(
    model: &SystemModel,
    kind: CertificateKind,
    alpha: f64,
    opts: SosOptions,
) -> Result<SosProgram, CertError> {
    let mut b = Builder::new(model, kind, alpha, opts)?;
    safety_common(&mut b)?;
    // γ = αβ − α + 1 ≥ 0
    let mut gamma = AffineScalar::constant(1.0 - alpha);
    gamma.add(Var::Free(b.prog.beta_var), alpha);
    b.prog.scalar_nonneg.push(("gamma_nonneg".into(), gamma));
    Ok(b.prog)
}

/// MSBC program (`α ≥ 1`): the DSBC program without the unsafe-region
/// envelope, plus `αβ − α + 1 ≥ 0`.
pub fn build_msbc(model: &SystemModel, alpha: f64, opts: SosOptions) -> Result<SosProgram, CertError> {
    gamma_program(model, CertificateKind::Msbc, alpha, opts)
}

/// SSBC program (`0 < α ≤ 1`), same structure as [`build_msbc`].
pub fn build_ssbc(model: &SystemModel, alpha: f64, opts: SosOptions) -> Result<SosProgram, CertError> {
    gamma_program(model, CertificateKind::Ssbc, alpha, opts)
}

/// RABC program: maximize `δα^{-T} + Gβ`.
pub fn build_rabc(model: &SystemModel, alpha: f64, opts: SosOptions) -> Result<SosProgram, CertError> {
    let mut b = Builder::new(model, CertificateKind::Rabc, alpha, opts)?;
    let d = b.v_degree;
    let dv = b.expected_degree.max(d);
    b.constraint("outside_G_le_0", b.v(-1.0), d, RegionName::XminusG)?;
    let e = b.with_constant(b.v(-1.0), None, 1.0);
    b.constraint("G_le_1", e, d, RegionName::G)?;
    let e = b.with_constant(b.v(1.0), Some((b.prog.delta_var, -1.0)), 0.0);
    b.initial("initial_ge_delta", e, d)?;
    b.constraint("expected_increase", b.decrease(1.0), dv, RegionName::SminusG)?;
    let e = b.envelope(-1.0, 1.0);
    b.constraint("G_envelope", e, d, RegionName::G)?;
    let e = b.envelope(-1.0, 0.0);
    b.constraint("unsafe_envelope", e, d, RegionName::XminusS)?;
    Ok(b.prog)
}

pub fn build(
    model: &SystemModel,
    kind: CertificateKind,
    alpha: f64,
    opts: SosOptions,
) -> Result<SosProgram, CertError> {
    match kind {
        CertificateKind::Dsbc => build_dsbc(model, alpha, opts),
        CertificateKind::Msbc => build_msbc(model, alpha, opts),
        CertificateKind::Ssbc => build_ssbc(model, alpha, opts),
        CertificateKind::Rabc => build_rabc(model, alpha, opts),
    }
}
