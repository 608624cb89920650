//! Sparse multivariate polynomials over a declared variable space.
//!
//! Variables `0..n` are the state `x`, variables `n..n+m` the noise `w`.
//! Terms live in a `BTreeMap` keyed by [`Monomial`], whose ordering is graded
//! lexicographic, so iteration order (and therefore every basis built from
//! it) is deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients smaller than this are dropped after composition.
pub const CLEANUP_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("variable spaces differ: {0} vs {1}")]
    Space(VarSpace, VarSpace),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarSpace {
    pub state_dim: usize,
    pub noise_dim: usize,
}

impl VarSpace {
    pub fn new(state_dim: usize, noise_dim: usize) -> Result<Self, PolyError> {
        if state_dim == 0 {
            return Err(PolyError::Invalid("state dimension must be positive".into()));
        }
        Ok(Self { state_dim, noise_dim })
    }

    pub fn nvars(&self) -> usize {
        self.state_dim + self.noise_dim
    }
}

impl fmt::Display for VarSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, m={})", self.state_dim, self.noise_dim)
    }
}

/// Exponent vector over all variables of a space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Self(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    /// Degree restricted to the variables `range`.
    pub fn partial_degree(&self, range: std::ops::Range<usize>) -> u32 {
        self.0[range].iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of `nvars` variables with total degree `<= degree`,
/// in graded lexicographic order.
pub fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Monomial> {
    fn rec(prefix: &mut Vec<u32>, left: usize, budget: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for e in (0..=budget).rev() {
            prefix.push(e);
            rec(prefix, left - 1, budget - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut exact = Vec::new();
        rec(&mut Vec::new(), nvars, d, &mut exact);
        exact.retain(|e| e.iter().sum::<u32>() == d);
        out.extend(exact);
    }
    let mut monos: Vec<Monomial> = out.into_iter().map(Monomial).collect();
    monos.sort();
    monos
}

/// State-only monomials of degree `<= degree`, padded with zero noise exponents.
pub fn state_monomials(space: VarSpace, degree: u32) -> Vec<Monomial> {
    monomials_up_to(space.state_dim, degree)
        .into_iter()
        .map(|m| {
            let mut e = m.0;
            e.resize(space.nvars(), 0);
            Monomial(e)
        })
        .collect()
}

/// Serialized form of one term: `{"exps": [...], "coef": c}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub exps: Vec<u32>,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    space: VarSpace,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(space: VarSpace) -> Self {
        Self {
            space,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: VarSpace, c: f64) -> Self {
        let mut p = Self::zero(space);
        if c != 0.0 {
            p.terms.insert(Monomial::one(space.nvars()), c);
        }
        p
    }

    /// The variable with global index `i` (state first, then noise).
    pub fn var(space: VarSpace, i: usize) -> Result<Self, PolyError> {
        if i >= space.nvars() {
            return Err(PolyError::Dimension {
                expected: space.nvars(),
                found: i + 1,
            });
        }
        let mut p = Self::zero(space);
        p.terms.insert(Monomial::var(space.nvars(), i), 1.0);
        Ok(p)
    }

    pub fn state(space: VarSpace, i: usize) -> Result<Self, PolyError> {
        if i >= space.state_dim {
            return Err(PolyError::Dimension {
                expected: space.state_dim,
                found: i + 1,
            });
        }
        Self::var(space, i)
    }

    pub fn noise(space: VarSpace, j: usize) -> Result<Self, PolyError> {
        if j >= space.noise_dim {
            return Err(PolyError::Dimension {
                expected: space.noise_dim,
                found: j + 1,
            });
        }
        Self::var(space, space.state_dim + j)
    }

    /// Build from `(exponents, coefficient)` pairs. Exponent vectors may cover
    /// either all `n+m` variables or only the `n` state variables.
    pub fn from_terms<I>(space: VarSpace, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(space);
        for (mut exps, coef) in terms {
            if exps.len() != space.nvars() && exps.len() != space.state_dim {
                return Err(PolyError::Dimension {
                    expected: space.nvars(),
                    found: exps.len(),
                });
            }
            if !coef.is_finite() {
                return Err(PolyError::Invalid("non-finite coefficient".into()));
            }
            exps.resize(space.nvars(), 0);
            *p.terms.entry(Monomial(exps)).or_insert(0.0) += coef;
        }
        p.terms.retain(|_, c| *c != 0.0);
        Ok(p)
    }

    /// Build from monomials and coefficients already in this space.
    pub fn from_monomials<I>(space: VarSpace, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Self::zero(space);
        for (m, c) in terms {
            debug_assert_eq!(m.0.len(), space.nvars());
            *p.terms.entry(m).or_insert(0.0) += c;
        }
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    pub fn from_records(space: VarSpace, records: &[TermRecord]) -> Result<Self, PolyError> {
        Self::from_terms(space, records.iter().map(|r| (r.exps.clone(), r.coef)))
    }

    /// Records with full-length exponent vectors (state and noise).
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(m, &c)| TermRecord {
                exps: m.0.clone(),
                coef: c,
            })
            .collect()
    }

    /// Records with state exponents only; fails if any noise variable occurs.
    pub fn to_state_records(&self) -> Result<Vec<TermRecord>, PolyError> {
        if self.uses_noise() {
            return Err(PolyError::Invalid("polynomial depends on noise variables".into()));
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, &c)| TermRecord {
                exps: m.0[..self.space.state_dim].to_vec(),
                coef: c,
            })
            .collect())
    }

    pub fn space(&self) -> VarSpace {
        self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn state_degree(&self) -> u32 {
        let n = self.space.state_dim;
        self.terms.keys().map(|m| m.partial_degree(0..n)).max().unwrap_or(0)
    }

    pub fn uses_noise(&self) -> bool {
        let n = self.space.state_dim;
        self.terms.keys().any(|m| m.0[n..].iter().any(|&e| e > 0))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn same_space(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.space != other.space {
            return Err(PolyError::Space(self.space, other.space));
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        out.terms.retain(|_, c| *c != 0.0);
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Self::zero(self.space);
        }
        Self {
            space: self.space,
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        let one = Monomial::one(self.space.nvars());
        *out.terms.entry(one.clone()).or_insert(0.0) += c;
        if out.terms[&one] == 0.0 {
            out.terms.remove(&one);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.same_space(other)?;
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Ok(Self {
            space: self.space,
            terms,
        })
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Self::constant(self.space, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same space");
        }
        out
    }

    /// Evaluate at a point of length `n+m`, or of length `n` when the
    /// polynomial does not involve noise variables.
    pub fn eval(&self, point: &[f64]) -> Result<f64, PolyError> {
        let nv = self.space.nvars();
        if point.len() == nv {
            return Ok(self.eval_unchecked(point));
        }
        if point.len() == self.space.state_dim && !self.uses_noise() {
            return Ok(self.terms.iter().map(|(m, &c)| c * m.eval(point)).sum());
        }
        Err(PolyError::Dimension {
            expected: nv,
            found: point.len(),
        })
    }

    /// Evaluation without the length check; `point` must cover every variable
    /// that occurs with a nonzero exponent.
    pub fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(point)).sum()
    }

    /// Substitute every variable: `subst[i]` replaces variable `i`.
    pub fn substitute(&self, subst: &[Polynomial]) -> Result<Polynomial, PolyError> {
        let nv = self.space.nvars();
        if subst.len() != nv {
            return Err(PolyError::Dimension {
                expected: nv,
                found: subst.len(),
            });
        }
        let target = subst
            .first()
            .map(|p| p.space)
            .ok_or_else(|| PolyError::Invalid("empty substitution".into()))?;
        for s in subst {
            if s.space != target {
                return Err(PolyError::Space(target, s.space));
            }
        }
        // powers[i][e] = subst[i]^e, filled lazily.
        let mut powers: Vec<Vec<Polynomial>> = subst
            .iter()
            .map(|s| vec![Polynomial::constant(target, 1.0), s.clone()])
            .collect();
        let mut out: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (m, &c) in &self.terms {
            let mut term = Polynomial::constant(target, c);
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().mul(&subst[i])?;
                    powers[i].push(next);
                }
                term = term.mul(&powers[i][e as usize])?;
            }
            for (tm, tc) in term.terms {
                *out.entry(tm).or_insert(0.0) += tc;
            }
        }
        let mut p = Polynomial {
            space: target,
            terms: out,
        };
        p.cleanup(CLEANUP_THRESHOLD);
        Ok(p)
    }

    /// `p(f_1(x,w), …, f_n(x,w))` for a state-only `p`.
    pub fn compose(&self, subst: &[Polynomial]) -> Result<Polynomial, PolyError> {
        if self.uses_noise() {
            return Err(PolyError::Invalid(
                "composition source must not depend on noise variables".into(),
            ));
        }
        let n = self.space.state_dim;
        if subst.len() != n {
            return Err(PolyError::Dimension {
                expected: n,
                found: subst.len(),
            });
        }
        for s in subst {
            self.same_space(s)?;
        }
        let mut full: Vec<Polynomial> = subst.to_vec();
        for j in 0..self.space.noise_dim {
            full.push(Polynomial::noise(self.space, j)?);
        }
        self.substitute(&full)
    }

    /// Drop coefficients with `|c| < threshold`.
    pub fn cleanup(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.abs() >= threshold);
    }

    /// Same polynomial viewed in another space with the same state dimension
    /// (noise exponents must be zero when the noise dimension shrinks).
    pub fn with_space(&self, space: VarSpace) -> Result<Polynomial, PolyError> {
        if space.state_dim != self.space.state_dim {
            return Err(PolyError::Space(self.space, space));
        }
        let mut terms = BTreeMap::new();
        for (m, &c) in &self.terms {
            let mut e = m.0.clone();
            if e[space.nvars().min(e.len())..].iter().any(|&x| x > 0) {
                return Err(PolyError::Invalid("noise variable outside the target space".into()));
            }
            e.resize(space.nvars(), 0);
            terms.insert(Monomial(e), c);
        }
        Ok(Polynomial { space, terms })
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let n = self.space.state_dim;
        let mut first = true;
        for (m, &c) in self.terms.iter().rev() {
            if !first {
                f.write_str(if c < 0.0 { " - " } else { " + " })?;
            } else if c < 0.0 {
                f.write_str("-")?;
            }
            first = false;
            let a = c.abs();
            let vars: Vec<String> =
                m.0.iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        let name = if i < n {
                            format!("x{}", i + 1)
                        } else {
                            format!("w{}", i - n + 1)
                        };
                        if e == 1 {
                            name
                        } else {
                            format!("{name}^{e}")
                        }
                    })
                    .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a == 1.0 {
                f.write_str(&vars.join("*"))?;
            } else {
                write!(f, "{a}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}
