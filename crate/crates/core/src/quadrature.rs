//! Gauss–Legendre rules and their use as probability-weighted noise rules.

use crate::noise::NoiseComponent;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, roots of `P_n` found by Newton iteration from the
    /// Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&z, &w)| (mid + half * z, half * w))
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Probability-weighted rule for one noise component: points and weights
/// summing to one. `breaks` are interior cut points; each resulting piece
/// gets its own Gauss–Legendre rule. Normal weights are renormalized after
/// truncation.
pub fn noise_rule(component: &NoiseComponent, gl: &GaussLegendre, truncation: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let (lo, hi) = component.support(truncation);
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > lo && c < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (hi - lo));
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    let mut out = Vec::with_capacity(gl.len() * (edges.len() - 1));
    for win in edges.windows(2) {
        for (z, w) in gl.on_interval(win[0], win[1]) {
            out.push((z, w * component.density(z)));
        }
    }
    if matches!(component, NoiseComponent::Normal { .. }) {
        let total: f64 = out.iter().map(|p| p.1).sum();
        out.iter_mut().for_each(|p| p.1 /= total);
    }
    out
}
