//! Shared helpers for the integration tests: random states and the
//! time-domain reference for the exponential cut-off bath.

#![allow(dead_code)]

use cumulant::analysis::DensityMatrix;
use cumulant::linalg::CMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

/// Complex trigamma `ψ'(z)` for `Re z > 0`.
pub fn trigamma(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.norm() < 20.0 {
        acc += (z * z).inv();
        z += 1.0;
    }
    let w = z.inv();
    let w2 = w * w;
    // Bernoulli-number asymptotic series
    let series = 1.0 / 6.0
        + w2 * (-1.0 / 30.0
            + w2 * (1.0 / 42.0 + w2 * (-1.0 / 30.0 + w2 * (5.0 / 66.0 + w2 * (-691.0 / 2730.0 + w2 * (7.0 / 6.0))))));
    acc + w + 0.5 * w2 + w2 * w * series
}

/// Bath correlation `F(τ) = ∫ R(Ω) e^{-iΩτ} dΩ` for `J = αΩ e^{-Ω/ωc}`.
pub fn exp_cutoff_correlation(alpha: f64, omega_c: f64, t_eff: f64, tau: f64) -> Complex64 {
    let a = Complex64::new(1.0 / omega_c, tau);
    if t_eff == 0.0 {
        return alpha * (a * a).inv();
    }
    let b = Complex64::new(1.0 / omega_c, -tau);
    alpha * t_eff * t_eff * (trigamma(a * t_eff) + trigamma(1.0 + b * t_eff))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut r = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, r);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * r * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (r * p1 - p0) / (r * r - 1.0);
            let step = p1 / dp;
            r -= step;
            if step.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, r);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * r * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (r * q1 - q0) / (r * r - 1.0);
                x[i] = r;
                w[i] = 2.0 / ((1.0 - r * r) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[0, t]`.
pub fn composite_rule(t: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = t / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// `∫_0^t ∫_0^t e^{i(ω' s - ω w)} F(s - w) ds dw` for every `(ω, ω')` pair,
/// reusing one table of `F` at the node differences.
pub struct TimeDomainOracle {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    table: Vec<Complex64>,
}

impl TimeDomainOracle {
    pub fn new(f: impl Fn(f64) -> Complex64 + Sync, t: f64, panels: usize, order: usize) -> Self {
        use rayon::prelude::*;
        let (nodes, weights) = composite_rule(t, panels, order);
        let n = nodes.len();
        let table = (0..n * n)
            .into_par_iter()
            .map(|k| f(nodes[k / n] - nodes[k % n]))
            .collect();
        Self { nodes, weights, table }
    }

    pub fn gamma(&self, omega: f64, omega_p: f64) -> Complex64 {
        let n = self.nodes.len();
        let u: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| Complex64::from_polar(w, omega_p * s))
            .collect();
        let v: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| Complex64::from_polar(w, -omega * s))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            let row = &self.table[i * n..(i + 1) * n];
            let inner: Complex64 = row.iter().zip(&v).map(|(f, vj)| f * vj).sum();
            acc += ui * inner;
        }
        acc
    }
}
