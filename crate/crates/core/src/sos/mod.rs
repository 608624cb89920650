//! Sum-of-squares programs for certificate synthesis.
//!
//! A [`SosProgram`] holds decision scalars (the coefficients of `ṽ`, `β` and
//! `δ`), unknown SOS multipliers (each a Gram matrix over a polynomial basis),
//! and constraints "this expression, affine in the decisions, is SOS".
//! [`compile`] turns it into an [`SdpProblem`](sbc_sdp::SdpProblem);
//! [`synthesize`] solves it and validates the resulting certificate.

mod basis;
mod build;
mod compile;
mod synth;

use std::collections::BTreeMap;

use crate::poly::{Monomial, PolyError, Polynomial, VarSpace};

pub use basis::{BasisKind, PolyBasis};
pub use build::{build, build_dsbc, build_msbc, build_rabc, build_ssbc, SosOptions};
pub use compile::{compile, CompiledSos};
pub use synth::{
    alpha_sweep, export_sdp, synthesize, SolverDiagnostics, SweepRow, SweepTable, SynthesisResult, SynthesisStatus,
    VALID_GRAM_TOL, VALID_MARGIN_TOL, VALID_RESIDUAL_TOL,
};

/// A scalar unknown: a free decision variable or an entry of a multiplier
/// Gram matrix (`row <= col`; the symmetric partner is the same unknown).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Free(usize),
    Gram { mult: usize, row: usize, col: usize },
}

/// `constant + Σ coef · var`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineScalar {
    pub constant: f64,
    pub terms: BTreeMap<Var, f64>,
}

impl AffineScalar {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(v: Var, coef: f64) -> Self {
        let mut s = Self::default();
        s.add(v, coef);
        s
    }

    pub fn add(&mut self, v: Var, coef: f64) {
        if coef != 0.0 {
            *self.terms.entry(v).or_insert(0.0) += coef;
        }
    }

    pub fn add_scaled(&mut self, other: &AffineScalar, scale: f64) {
        self.constant += scale * other.constant;
        for (&v, &c) in &other.terms {
            self.add(v, scale * c);
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    pub fn eval(&self, free: &[f64], grams: &[nalgebra::DMatrix<f64>]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(v, c)| {
                    c * match *v {
                        Var::Free(i) => free[i],
                        Var::Gram { mult, row, col } => grams[mult][(row, col)],
                    }
                })
                .sum::<f64>()
    }
}

/// Polynomial whose coefficients are affine in the decisions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffinePoly {
    pub coeffs: BTreeMap<Monomial, AffineScalar>,
}

impl AffinePoly {
    fn entry(&mut self, m: &Monomial) -> &mut AffineScalar {
        self.coeffs.entry(m.clone()).or_default()
    }

    /// `+= scale · p`.
    pub fn add_poly(&mut self, p: &Polynomial, scale: f64) {
        for (m, c) in p.terms() {
            self.entry(m).constant += scale * c;
        }
    }

    /// `+= scale · var · p`.
    pub fn add_var_poly(&mut self, var: Var, p: &Polynomial, scale: f64) {
        for (m, c) in p.terms() {
            self.entry(m).add(var, scale * c);
        }
    }

    /// `+= scale · ξ · s` where `ξ = Σ_kl Q_kl b_k b_l` is multiplier `mult`.
    pub fn add_multiplier(
        &mut self,
        mult: usize,
        basis: &PolyBasis,
        s: &Polynomial,
        scale: f64,
    ) -> Result<(), PolyError> {
        for (k, l, p) in basis.products()? {
            // Q_kl and Q_lk are one unknown.
            let sym = if k == l { 1.0 } else { 2.0 };
            for (m, c) in p.mul(s)?.terms() {
                self.entry(m).add(Var::Gram { mult, row: k, col: l }, scale * sym * c);
            }
        }
        Ok(())
    }

    pub fn add_affine(&mut self, m: &Monomial, a: &AffineScalar, scale: f64) {
        self.entry(m).add_scaled(a, scale);
    }

    /// Highest degree among monomials with a nonzero dependence.
    pub fn degree(&self) -> u32 {
        self.coeffs
            .iter()
            .filter(|(_, a)| a.constant != 0.0 || !a.is_constant())
            .map(|(m, _)| m.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, space: VarSpace, free: &[f64], grams: &[nalgebra::DMatrix<f64>]) -> Polynomial {
        Polynomial::from_monomials(space, self.coeffs.iter().map(|(m, a)| (m.clone(), a.eval(free, grams))))
    }
}

/// Unknown SOS polynomial `b(x)ᵀ Q b(x)`, `Q ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub name: String,
    pub basis: PolyBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosConstraint {
    pub name: String,
    pub expr: AffinePoly,
    /// Gram basis of degree `ceil(deg expr / 2)`.
    pub basis: PolyBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosProgram {
    pub space: VarSpace,
    pub kind: crate::certificates::CertificateKind,
    pub alpha: f64,
    pub horizon: usize,
    pub free_names: Vec<String>,
    /// `ṽ = Σ_k x[v_vars[k]] · v_basis.polys[k]`.
    pub v_basis: PolyBasis,
    pub v_vars: Vec<usize>,
    pub beta_var: usize,
    pub delta_var: usize,
    pub multipliers: Vec<Multiplier>,
    pub constraints: Vec<SosConstraint>,
    /// Scalar inequalities `expr >= 0`.
    pub scalar_nonneg: Vec<(String, AffineScalar)>,
    pub objective: AffineScalar,
    pub sense: Sense,
}

impl SosProgram {
    /// Program with no template and zero objective whose only constraints
    /// are that each of `exprs` is SOS. `β` and `δ` are present but unused.
    pub fn feasibility(
        space: VarSpace,
        exprs: &[Polynomial],
        basis: BasisKind,
        box_: &[(f64, f64)],
    ) -> Result<Self, PolyError> {
        let mut constraints = Vec::with_capacity(exprs.len());
        for (k, p) in exprs.iter().enumerate() {
            let mut expr = AffinePoly::default();
            expr.add_poly(p, 1.0);
            constraints.push(SosConstraint {
                name: format!("sos_{k}"),
                basis: PolyBasis::new(basis, space, p.degree().div_ceil(2), box_)?,
                expr,
            });
        }
        Ok(Self {
            space,
            kind: crate::certificates::CertificateKind::Dsbc,
            alpha: 1.0,
            horizon: 0,
            free_names: vec!["beta".into(), "delta".into()],
            v_basis: PolyBasis::new(BasisKind::Monomial, space, 0, box_)?,
            v_vars: Vec::new(),
            beta_var: 0,
            delta_var: 1,
            multipliers: Vec::new(),
            constraints,
            scalar_nonneg: Vec::new(),
            objective: AffineScalar::default(),
            sense: Sense::Minimize,
        })
    }

    pub fn num_free(&self) -> usize {
        self.free_names.len()
    }

    /// Number of constraint groups: one per SOS expression, plus one for the
    /// multipliers when any exist, plus one per scalar inequality.
    pub fn num_constraint_groups(&self) -> usize {
        self.constraints.len() + usize::from(!self.multipliers.is_empty()) + self.scalar_nonneg.len()
    }

    /// PSD blocks of the compiled SDP.
    pub fn num_psd_blocks(&self) -> usize {
        self.constraints.len() + self.multipliers.len() + self.scalar_nonneg.len()
    }

    /// `ṽ` for given decision values.
    pub fn v_poly(&self, free: &[f64]) -> Polynomial {
        let c: Vec<f64> = self.v_vars.iter().map(|&k| free[k]).collect();
        self.v_basis.combine(&c)
    }
}
