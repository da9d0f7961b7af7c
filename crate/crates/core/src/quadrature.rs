//! Adaptive quadrature for the double-sinc frequency integrals.
//!
//! The kernel
//!
//! ```text
//! K(Ω) = [t sinc((ω' - Ω) t / 2)] [t sinc((ω - Ω) t / 2)]
//! ```
//!
//! oscillates with period `2π/t` and decays like `Ω^-2`. Near the two Bohr
//! frequencies it is integrated on panels whose ends sit on the sinc zeros.
//! Far from them the product is rewritten as
//!
//! ```text
//! K(Ω) = 2 [cos(Δt/2) - cos(Ωt - φ)] / ((Ω - ω)(Ω - ω')),   Δ = ω' - ω, φ = (ω + ω') t / 2
//! ```
//!
//! and the smooth and oscillatory parts are integrated separately; the
//! oscillatory part goes half-period by half-period, with Wynn's epsilon
//! algorithm accelerating the alternating series when the range is unbounded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerances for every numerically integrated rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisections allowed per adaptive panel.
    pub max_subdivisions: usize,
    /// Thermal tails are truncated where `N(Ω) ‖J(Ω)‖` falls below this.
    pub tail_epsilon: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 200,
            tail_epsilon: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("tail_epsilon", self.tail_epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if self.max_subdivisions == 0 {
            return Err(Error::param("max_subdivisions", "must be positive"));
        }
        Ok(())
    }
}

/// Value, error estimate, and the interval that contributed the largest error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub worst: (f64, f64),
    pub worst_error: f64,
    pub converged: bool,
}

impl Estimate {
    pub(crate) fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            worst: (0.0, 0.0),
            worst_error: 0.0,
            converged: true,
        }
    }

    fn absorb(&mut self, other: Estimate) {
        self.value += other.value;
        self.error += other.error;
        self.converged &= other.converged;
        if other.worst_error >= self.worst_error {
            self.worst = other.worst;
            self.worst_error = other.worst_error;
        }
    }

    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self.error *= s.abs();
        self.worst_error *= s.abs();
        self
    }

    pub fn into_result(self, cfg: &QuadratureConfig) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                lo: self.worst.0,
                hi: self.worst.1,
                achieved: self.error,
                requested: cfg.abs_tol.max(cfg.rel_tol * self.value.abs()),
            })
        }
    }
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525290496,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// 21-point Kronrod rule with its embedded 10-point Gauss rule; returns the
/// Kronrod value and `|K - G|`.
pub fn gauss_kronrod21(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[10] * fc;
    let mut gauss = 0.0;
    for k in 0..10 {
        let dx = h * XGK[k];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration over a finite interval.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadratureConfig) -> Estimate {
    if a == b {
        return Estimate::zero();
    }
    let (value, error) = gauss_kronrod21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut splits = 0;
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) && splits < cfg.max_subdivisions {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gauss_kronrod21(f, worst.a, mid);
        let (v2, e2) = gauss_kronrod21(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        splits += 1;
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (mut value, mut error) = (0.0, 0.0);
    let mut worst = (a, b);
    let mut worst_error = -1.0;
    for p in heap.iter() {
        value += p.value;
        error += p.error;
        if p.error > worst_error {
            worst_error = p.error;
            worst = (p.a, p.b);
        }
    }
    Estimate {
        value,
        error,
        worst,
        worst_error,
        converged: error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()),
    }
}

/// Adaptive integration over `[a, ∞)` through `Ω = a + u / (1 - u)`.
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, cfg: &QuadratureConfig) -> Estimate {
    let g = |u: f64| {
        let s = 1.0 - u;
        let w = f(a + u / s) / (s * s);
        if w.is_finite() {
            w
        } else {
            0.0
        }
    };
    let mut est = integrate(&g, 0.0, 1.0, cfg);
    let map = |u: f64| if u >= 1.0 { f64::INFINITY } else { a + u / (1.0 - u) };
    est.worst = (map(est.worst.0), map(est.worst.1));
    est
}

/// Adaptive integration over `[a, b]` (`b` may be infinite) split at the given
/// interior points.
pub fn integrate_with_breaks(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Estimate {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut est = Estimate::zero();
    for w in cuts.windows(2) {
        est.absorb(integrate(f, w[0], w[1], cfg));
    }
    let last = *cuts.last().expect("non-empty");
    if b.is_infinite() {
        est.absorb(integrate_to_infinity(f, last, cfg));
    } else {
        est.absorb(integrate(f, last, b, cfg));
    }
    est
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    if n < 3 {
        return *sums.last().unwrap_or(&0.0);
    }
    // e[k] holds column `col` of the epsilon table, prev holds column col - 1
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = sums[n - 1];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for k in 0..cur.len() - 1 {
            let diff = cur[k + 1] - cur[k];
            if diff == 0.0 {
                return cur[k + 1];
            }
            next.push(prev[k + 1] + 1.0 / diff);
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// `sin(x)/x`, exact at zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `[t sinc((ω' - Ω)t/2)] [t sinc((ω - Ω)t/2)]`.
pub fn sinc_pair_kernel(omega: f64, omega_p: f64, t: f64, x: f64) -> f64 {
    t * t * sinc(0.5 * (omega_p - x) * t) * sinc(0.5 * (omega - x) * t)
}

/// Panels around the Bohr frequencies extend this many sinc periods out.
const CORE_PERIODS: f64 = 4.0;
/// Cap on half-periods summed for one oscillatory tail.
const MAX_HALF_PERIODS: usize = 400_000;

/// `∫_lo^hi K(Ω) g(Ω) dΩ` for a real weight `g` that is smooth between
/// `breaks`. Either bound may be infinite.
pub fn sinc_pair_integral(
    omega: f64,
    omega_p: f64,
    t: f64,
    g: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Estimate {
    if t == 0.0 || lo >= hi {
        return Estimate::zero();
    }
    let period = 2.0 * PI / t;
    let core_lo = omega.min(omega_p) - CORE_PERIODS * period;
    let core_hi = omega.max(omega_p) + CORE_PERIODS * period;

    let mut total = Estimate::zero();
    let (a, b) = (lo.max(core_lo), hi.min(core_hi));
    if a < b {
        total.absorb(core(omega, omega_p, t, g, a, b, breaks, cfg));
    }
    if hi > core_hi {
        let start = lo.max(core_hi);
        total.absorb(tail(omega, omega_p, t, g, start, hi, breaks, cfg));
    }
    if lo < core_lo {
        let end = hi.min(core_lo);
        let mirrored = |x: f64| g(-x);
        let mbreaks: Vec<f64> = breaks.iter().map(|x| -x).collect();
        total.absorb(tail(-omega, -omega_p, t, &mirrored, -end, -lo, &mbreaks, cfg).mirror());
    }
    total
}

impl Estimate {
    fn mirror(mut self) -> Self {
        self.worst = (-self.worst.1, -self.worst.0);
        self
    }
}

#[allow(clippy::too_many_arguments)]
fn core(
    omega: f64,
    omega_p: f64,
    t: f64,
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Estimate {
    let period = 2.0 * PI / t;
    let mut cuts = vec![a, b];
    for center in [omega, omega_p] {
        let k0 = ((a - center) / period).ceil() as i64;
        let k1 = ((b - center) / period).floor() as i64;
        cuts.extend((k0..=k1).map(|k| center + k as f64 * period));
    }
    cuts.extend(breaks.iter().copied());
    cuts.retain(|&x| x >= a && x <= b);
    cuts.sort_by(f64::total_cmp);
    let min_width = 1e-12 * period;
    cuts.dedup_by(|x, y| (*x - *y).abs() < min_width);

    let f = |x: f64| sinc_pair_kernel(omega, omega_p, t, x) * g(x);
    let mut est = Estimate::zero();
    for w in cuts.windows(2) {
        est.absorb(integrate(&f, w[0], w[1], cfg));
    }
    est
}

/// Integral over `[start, end]` with `start` at least a few periods above both
/// frequencies; uses the split smooth/oscillatory form.
#[allow(clippy::too_many_arguments)]
fn tail(
    omega: f64,
    omega_p: f64,
    t: f64,
    g: &dyn Fn(f64) -> f64,
    start: f64,
    end: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Estimate {
    let f = |x: f64| 2.0 * g(x) / ((x - omega) * (x - omega_p));
    let delta = omega_p - omega;
    let phi = 0.5 * (omega + omega_p) * t;

    let mut est = Estimate::zero();
    let c = (0.5 * delta * t).cos();
    if c != 0.0 {
        est.absorb(integrate_with_breaks(&f, start, end, breaks, cfg).scaled(c));
    }
    est.absorb(oscillatory_tail(&f, t, phi, start, end, breaks, cfg).scaled(-1.0));
    est
}

/// `∫_start^end cos(Ωt - φ) f(Ω) dΩ` summed over half-periods between zeros of
/// the cosine.
fn oscillatory_tail(
    f: &dyn Fn(f64) -> f64,
    t: f64,
    phi: f64,
    start: f64,
    end: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Estimate {
    let h = |x: f64| (x * t - phi).cos() * f(x);
    let half = PI / t;
    // zeros at (φ + π/2 + mπ)/t
    let first_m = ((start * t - phi - 0.5 * PI) / PI).ceil();
    let zero = |m: f64| (phi + 0.5 * PI + m * PI) / t;

    let piece = |a: f64, b: f64| -> Estimate {
        let inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        if inner.is_empty() {
            integrate(&h, a, b, cfg)
        } else {
            integrate_with_breaks(&h, a, b, &inner, cfg)
        }
    };

    let mut est = Estimate::zero();
    let mut a = start;
    let mut m = first_m;
    let mut b = zero(m);
    if b - a > 1e-14 * half {
        est.absorb(piece(a, b.min(end)));
    }
    if b >= end {
        return est;
    }
    a = b;

    if end.is_finite() {
        while a < end {
            m += 1.0;
            b = zero(m).min(end);
            est.absorb(piece(a, b));
            a = b;
        }
        return est;
    }

    // unbounded: alternating series of half-period integrals
    let base = est.value;
    let mut sums: Vec<f64> = Vec::new();
    let mut running = 0.0;
    let mut err = est.error;
    let mut worst = est.worst;
    let mut worst_error = est.worst_error;
    let mut converged = est.converged;
    let mut last_extrapolation: Option<f64> = None;
    let mut stable = 0;
    for n in 0..MAX_HALF_PERIODS {
        m += 1.0;
        b = zero(m);
        let p = piece(a, b);
        running += p.value;
        err += p.error;
        converged &= p.converged;
        if p.worst_error > worst_error {
            worst = p.worst;
            worst_error = p.worst_error;
        }
        sums.push(running);
        a = b;

        let tol = cfg.abs_tol.max(cfg.rel_tol * (base + running).abs());
        if p.value.abs() < 0.01 * tol && f(a).abs() * half < 0.01 * tol {
            return Estimate {
                value: base + running,
                error: err,
                worst,
                worst_error,
                converged,
            };
        }
        if n >= 16 && n % 4 == 0 {
            let window = &sums[sums.len().saturating_sub(40)..];
            let ext = wynn_epsilon(window);
            if let Some(prev) = last_extrapolation {
                if (ext - prev).abs() <= 0.1 * tol {
                    stable += 1;
                    if stable >= 2 {
                        return Estimate {
                            value: base + ext,
                            error: err + (ext - prev).abs(),
                            worst,
                            worst_error,
                            converged,
                        };
                    }
                } else {
                    stable = 0;
                }
            }
            last_extrapolation = Some(ext);
        }
    }
    Estimate {
        value: base + running,
        error: f64::INFINITY,
        worst: (a, f64::INFINITY),
        worst_error: f64::INFINITY,
        converged: false,
    }
}
