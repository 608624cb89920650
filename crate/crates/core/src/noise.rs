//! Noise distributions and the expectation operator over noise variables.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::poly::{Monomial, PolyError, Polynomial};

/// One scalar noise component.
///
/// Serialized as `{"type":"uniform","a":…,"b":…}` or
/// `{"type":"normal","sigma":…}`; invalid parameters are rejected on parse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "RawComponent")]
pub enum NoiseComponent {
    Uniform { a: f64, b: f64 },
    Normal { sigma: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawComponent {
    Uniform { a: f64, b: f64 },
    Normal { sigma: f64 },
}

impl TryFrom<RawComponent> for NoiseComponent {
    type Error = String;

    fn try_from(raw: RawComponent) -> Result<Self, String> {
        match raw {
            RawComponent::Uniform { a, b } => Self::uniform(a, b),
            RawComponent::Normal { sigma } => Self::normal(sigma),
        }
        .map_err(|e| e.to_string())
    }
}

impl NoiseComponent {
    pub fn uniform(a: f64, b: f64) -> Result<Self, PolyError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(PolyError::Invalid(format!("uniform noise needs a < b, got [{a}, {b}]")));
        }
        Ok(Self::Uniform { a, b })
    }

    pub fn normal(sigma: f64) -> Result<Self, PolyError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(PolyError::Invalid(format!("normal noise needs sigma > 0, got {sigma}")));
        }
        Ok(Self::Normal { sigma })
    }

    /// Raw moment `E[z^k]`.
    pub fn moment(&self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match *self {
            Self::Uniform { a, b } => {
                let k1 = k as i32 + 1;
                (b.powi(k1) - a.powi(k1)) / ((k1 as f64) * (b - a))
            }
            Self::Normal { sigma } => {
                if k % 2 == 1 {
                    0.0
                } else {
                    let double_fact: f64 = (1..k).step_by(2).map(|i| i as f64).product();
                    double_fact * sigma.powi(k as i32)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            Self::Uniform { a, b } => (b - a) / 12f64.sqrt(),
            Self::Normal { sigma } => sigma,
        }
    }

    /// Integration interval; normal noise is truncated at `truncation`·σ.
    pub fn support(&self, truncation: f64) -> (f64, f64) {
        match *self {
            Self::Uniform { a, b } => (a, b),
            Self::Normal { sigma } => (-truncation * sigma, truncation * sigma),
        }
    }

    /// Probability density (unnormalized truncation is handled by callers).
    pub fn density(&self, z: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => {
                if (a..=b).contains(&z) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Self::Normal { sigma } => {
                let u = z / sigma;
                (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { a, b } => rng.random_range(a..b),
            Self::Normal { sigma } => Normal::new(0.0, sigma).expect("sigma > 0").sample(rng),
        }
    }
}

/// Independent noise components `w_1 … w_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NoiseVector {
    pub components: Vec<NoiseComponent>,
}

impl NoiseVector {
    pub fn new(components: Vec<NoiseComponent>) -> Self {
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `E[w^β]` for a noise exponent vector `β`, factorized by independence.
    pub fn monomial_moment(&self, exps: &[u32]) -> Result<f64, PolyError> {
        if exps.len() != self.dim() {
            return Err(PolyError::Dimension {
                expected: self.dim(),
                found: exps.len(),
            });
        }
        let mut m = 1.0;
        for (c, &k) in self.components.iter().zip(exps) {
            if k == 0 {
                continue;
            }
            let mk = c.moment(k);
            if mk == 0.0 {
                return Ok(0.0);
            }
            m *= mk;
        }
        Ok(m)
    }

    /// Replace every noise monomial by its moment. The result lives in the
    /// same variable space and has no noise exponents.
    pub fn expect(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        let space = p.space();
        if space.noise_dim != self.dim() {
            return Err(PolyError::Dimension {
                expected: space.noise_dim,
                found: self.dim(),
            });
        }
        let n = space.state_dim;
        let mut terms = Vec::with_capacity(p.num_terms());
        for (m, c) in p.terms() {
            let mom = self.monomial_moment(&m.exps()[n..])?;
            if mom == 0.0 {
                continue;
            }
            let mut e = m.exps().to_vec();
            e[n..].iter_mut().for_each(|x| *x = 0);
            terms.push((Monomial::new(e), c * mom));
        }
        Ok(Polynomial::from_monomials(space, terms))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.sample(rng);
        }
    }
}
