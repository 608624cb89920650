//! Polynomial bases for decision polynomials and Gram matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::poly::{state_monomials, Monomial, PolyError, Polynomial, VarSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Monomial,
    /// Products of Legendre polynomials scaled to a box. Spans the same space
    /// as the monomials of the same degree but is far better conditioned on
    /// the box.
    #[default]
    Legendre,
}

impl std::str::FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "monomial" => Ok(Self::Monomial),
            "legendre" => Ok(Self::Legendre),
            _ => Err(format!("unknown basis {s:?}")),
        }
    }
}

/// Basis polynomials `b_k` of all state polynomials of degree `<= degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBasis {
    pub kind: BasisKind,
    pub monomials: Vec<Monomial>,
    pub polys: Vec<Polynomial>,
    /// `transform[(i, k)]` is the coefficient of `monomials[i]` in `polys[k]`.
    pub transform: DMatrix<f64>,
}

impl PolyBasis {
    pub fn new(kind: BasisKind, space: VarSpace, degree: u32, box_: &[(f64, f64)]) -> Result<Self, PolyError> {
        let monomials = state_monomials(space, degree);
        let polys: Vec<Polynomial> = match kind {
            BasisKind::Monomial => monomials
                .iter()
                .map(|m| Polynomial::from_monomials(space, [(m.clone(), 1.0)]))
                .collect(),
            BasisKind::Legendre => {
                if box_.len() != space.state_dim {
                    return Err(PolyError::Dimension {
                        expected: space.state_dim,
                        found: box_.len(),
                    });
                }
                let per_var = box_
                    .iter()
                    .enumerate()
                    .map(|(i, &(lo, hi))| legendre_1d(space, i, lo, hi, degree as usize))
                    .collect::<Result<Vec<_>, _>>()?;
                monomials
                    .iter()
                    .map(|m| {
                        m.exps()[..space.state_dim]
                            .iter()
                            .enumerate()
                            .try_fold(Polynomial::constant(space, 1.0), |p, (i, &e)| {
                                p.mul(&per_var[i][e as usize])
                            })
                    })
                    .collect::<Result<_, _>>()?
            }
        };
        let mut transform = DMatrix::zeros(monomials.len(), polys.len());
        for (k, p) in polys.iter().enumerate() {
            for (i, m) in monomials.iter().enumerate() {
                transform[(i, k)] = p.coefficient(m);
            }
        }
        Ok(Self {
            kind,
            monomials,
            polys,
            transform,
        })
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// `(k, l, b_k b_l)` for `k <= l`.
    pub fn products(&self) -> Result<Vec<(usize, usize, Polynomial)>, PolyError> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            for l in k..self.len() {
                out.push((k, l, self.polys[k].mul(&self.polys[l])?));
            }
        }
        Ok(out)
    }

    /// `Σ_kl Q_kl b_k b_l`.
    pub fn gram_poly(&self, q: &DMatrix<f64>) -> Result<Polynomial, PolyError> {
        let space = self.polys.first().map(Polynomial::space);
        let Some(space) = space else {
            return Err(PolyError::Invalid("empty basis".into()));
        };
        let mut out = Polynomial::zero(space);
        for (k, l, p) in self.products()? {
            let w = if k == l { q[(k, k)] } else { q[(k, l)] + q[(l, k)] };
            out = out.add(&p.scale(w))?;
        }
        Ok(out)
    }

    /// Polynomial with coordinates `c` in this basis.
    pub fn combine(&self, c: &[f64]) -> Polynomial {
        let coeffs = &self.transform * nalgebra::DVector::from_column_slice(c);
        let space = self.polys[0].space();
        Polynomial::from_monomials(space, self.monomials.iter().cloned().zip(coeffs.iter().copied()))
    }
}

/// `P_0 .. P_degree` in variable `i`, mapped from `[lo, hi]` to `[-1, 1]`.
fn legendre_1d(space: VarSpace, i: usize, lo: f64, hi: f64, degree: usize) -> Result<Vec<Polynomial>, PolyError> {
    if !(hi > lo) {
        return Err(PolyError::Invalid(format!("empty interval [{lo}, {hi}]")));
    }
    let t = Polynomial::state(space, i)?
        .scale(2.0 / (hi - lo))
        .add_constant(-(lo + hi) / (hi - lo));
    let mut p = vec![Polynomial::constant(space, 1.0), t.clone()];
    for n in 1..degree {
        let nf = n as f64;
        let next = t
            .mul(&p[n])?
            .scale((2.0 * nf + 1.0) / (nf + 1.0))
            .sub(&p[n - 1].scale(nf / (nf + 1.0)))?;
        p.push(next);
    }
    p.truncate(degree + 1);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_values_and_triangularity() {
        let sp = VarSpace::new(1, 0).unwrap();
        let b = PolyBasis::new(BasisKind::Legendre, sp, 4, &[(-1.0, 1.0)]).unwrap();
        // P_n(1) = 1, P_2(0) = -1/2, P_4(0) = 3/8
        for p in &b.polys {
            assert!((p.eval(&[1.0]).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((b.polys[2].eval(&[0.0]).unwrap() + 0.5).abs() < 1e-15);
        assert!((b.polys[4].eval(&[0.0]).unwrap() - 0.375).abs() < 1e-15);
        for i in 0..5 {
            for k in 0..i {
                assert_eq!(b.transform[(i, k)], 0.0);
            }
        }
    }

    #[test]
    fn gram_poly_matches_quadratic_form() {
        let sp = VarSpace::new(2, 0).unwrap();
        let b = PolyBasis::new(BasisKind::Legendre, sp, 1, &[(-2.0, 1.0), (0.0, 3.0)]).unwrap();
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 1.5]);
        let g = b.gram_poly(&q).unwrap();
        let x = [0.7, -1.3];
        let bv: Vec<f64> = b.polys.iter().map(|p| p.eval(&x).unwrap()).collect();
        let mut want = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                want += q[(i, j)] * bv[i] * bv[j];
            }
        }
        assert!((g.eval(&x).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn monomial_basis_is_identity() {
        let sp = VarSpace::new(1, 1).unwrap();
        let b = PolyBasis::new(BasisKind::Monomial, sp, 3, &[]).unwrap();
        assert_eq!(b.transform, DMatrix::identity(4, 4));
        assert_eq!(
            b.combine(&[1.0, 0.0, 2.0, 0.0]).coefficient(&Monomial::new(vec![2, 0])),
            2.0
        );
    }
}
