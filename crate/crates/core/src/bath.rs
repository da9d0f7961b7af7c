//! Bosonic heat baths: spectral densities, Bose–Einstein occupation, and the
//! rate function `R(Ω)`.
//!
//! A bath couples to `n` system operators through one or more channels. Each
//! channel carries a Hermitian positive semi-definite coupling matrix `C` and a
//! scalar spectral profile `j(Ω)`, so that `J(Ω) = Σ C j(Ω)` for `Ω ≥ 0`. The
//! rate function then splits into emission and absorption parts:
//!
//! ```text
//! R(Ω)  = J(Ω) (N(Ω) + 1)        Ω > 0
//! R(-Ω) = J(Ω)^T N(Ω)            Ω > 0
//! ```
//!
//! Units: `ħ = k_B = 1`, frequencies in units of the reference system frequency.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, CMatrix, HERMITIAN_TOL};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralKind {
    Ohmic,
    ExponentialCutoff,
    SharpCutoff,
}

impl SpectralKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectralKind::Ohmic => "ohmic",
            SpectralKind::ExponentialCutoff => "ohmic-exponential-cutoff",
            SpectralKind::SharpCutoff => "ohmic-sharp-cutoff",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ohmic" => Some(SpectralKind::Ohmic),
            "ohmic-exponential-cutoff" => Some(SpectralKind::ExponentialCutoff),
            "ohmic-sharp-cutoff" => Some(SpectralKind::SharpCutoff),
            _ => None,
        }
    }
}

/// Ohmic spectral profile `α Ω`, optionally with an exponential or sharp cut-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    kind: SpectralKind,
    alpha: f64,
    omega_c: Option<f64>,
}

impl SpectralDensity {
    pub fn new(kind: SpectralKind, alpha: f64, omega_c: Option<f64>) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be finite and non-negative, got {alpha}")));
        }
        let omega_c = match (kind, omega_c) {
            (SpectralKind::Ohmic, _) => None,
            (_, None) => {
                return Err(Error::param(
                    "omega_c",
                    format!("required for spectral kind `{}`", kind.name()),
                ))
            }
            (_, Some(wc)) if !(wc > 0.0 && wc.is_finite()) => {
                return Err(Error::param("omega_c", format!("must be positive, got {wc}")))
            }
            (_, Some(wc)) => Some(wc),
        };
        Ok(Self { kind, alpha, omega_c })
    }

    pub fn ohmic(alpha: f64) -> Result<Self> {
        Self::new(SpectralKind::Ohmic, alpha, None)
    }

    pub fn exponential_cutoff(alpha: f64, omega_c: f64) -> Result<Self> {
        Self::new(SpectralKind::ExponentialCutoff, alpha, Some(omega_c))
    }

    pub fn sharp_cutoff(alpha: f64, omega_c: f64) -> Result<Self> {
        Self::new(SpectralKind::SharpCutoff, alpha, Some(omega_c))
    }

    pub fn kind(&self) -> SpectralKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega_c(&self) -> Option<f64> {
        self.omega_c
    }

    pub fn has_cutoff(&self) -> bool {
        self.omega_c.is_some()
    }

    /// `j(Ω)` for `Ω ≥ 0`, without argument checks.
    pub(crate) fn profile(&self, omega: f64) -> f64 {
        let base = self.alpha * omega;
        match (self.kind, self.omega_c) {
            (SpectralKind::ExponentialCutoff, Some(wc)) => base * (-omega.abs() / wc).exp(),
            (SpectralKind::SharpCutoff, Some(wc)) if omega > wc => 0.0,
            _ => base,
        }
    }

    pub fn value(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 || omega.is_nan() {
            return Err(Error::param("omega", format!("spectral density needs omega >= 0, got {omega}")));
        }
        Ok(self.profile(omega))
    }

    /// `dj/dΩ` at zero; every supported profile is linear there.
    fn slope_at_zero(&self) -> f64 {
        self.alpha
    }

    /// Frequency where the upper support ends, if finite.
    pub fn support_end(&self) -> Option<f64> {
        match self.kind {
            SpectralKind::SharpCutoff => self.omega_c,
            _ => None,
        }
    }
}

/// Bose–Einstein occupation `1 / (e^{ω/T} - 1)`.
pub fn occupation(t_eff: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::param("omega", format!("occupation needs omega > 0, got {omega}")));
    }
    if t_eff < 0.0 || t_eff.is_nan() {
        return Err(Error::param("t_eff", format!("must be non-negative, got {t_eff}")));
    }
    Ok(bose(t_eff, omega))
}

pub(crate) fn bose(t_eff: f64, omega: f64) -> f64 {
    if t_eff == 0.0 {
        0.0
    } else {
        1.0 / (omega / t_eff).exp_m1()
    }
}

/// Bath temperature. `Local` lets the temperature depend on frequency; it must
/// be even in `Ω`.
#[derive(Debug, Clone, Copy)]
pub enum Temperature {
    Constant(f64),
    Local(fn(f64) -> f64),
}

impl Temperature {
    pub fn at(&self, omega: f64) -> f64 {
        match *self {
            Temperature::Constant(t) => t,
            Temperature::Local(f) => f(omega.abs()),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match *self {
            Temperature::Constant(t) => Some(t),
            Temperature::Local(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathChannel {
    pub coupling: CMatrix,
    pub spectral: SpectralDensity,
}

#[derive(Debug, Clone)]
pub struct BathModel {
    channels: Vec<BathChannel>,
    temperature: Temperature,
    n_ops: usize,
}

impl BathModel {
    /// Single coupling operator with a scalar spectral density.
    pub fn scalar(spectral: SpectralDensity, t_eff: f64) -> Result<Self> {
        Self::new(
            vec![BathChannel {
                coupling: CMatrix::identity(1, 1),
                spectral,
            }],
            Temperature::Constant(t_eff),
        )
    }

    /// Matrix-valued bath. Each coupling matrix must be Hermitian PSD and all
    /// must share the same size.
    pub fn new(channels: Vec<BathChannel>, temperature: Temperature) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::param("channels", "at least one channel is required"))?;
        let n_ops = first.coupling.nrows();
        for ch in &channels {
            let c = &ch.coupling;
            if c.nrows() != n_ops || c.ncols() != n_ops {
                return Err(Error::DimensionMismatch {
                    expected: n_ops,
                    found: c.nrows().max(c.ncols()),
                });
            }
            let eig = hermitian_eig(c)?;
            let scale = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
            if eig.values[0] < -HERMITIAN_TOL * scale {
                return Err(Error::NotPsd {
                    min_eigenvalue: eig.values[0],
                });
            }
        }
        if let Temperature::Constant(t) = temperature {
            if !(t >= 0.0) || t.is_infinite() {
                return Err(Error::param("t_eff", format!("must be finite and non-negative, got {t}")));
            }
        }
        Ok(Self {
            channels,
            temperature,
            n_ops,
        })
    }

    pub fn channels(&self) -> &[BathChannel] {
        &self.channels
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    /// Number of system coupling operators the bath pairs with.
    pub fn n_ops(&self) -> usize {
        self.n_ops
    }

    pub fn all_have_cutoff(&self) -> bool {
        self.channels.iter().all(|c| c.spectral.has_cutoff())
    }

    /// Spectral density matrix `J(Ω)` for `Ω ≥ 0`.
    pub fn spectral_j(&self, omega: f64) -> Result<CMatrix> {
        if omega < 0.0 || omega.is_nan() {
            return Err(Error::param("omega", format!("spectral density needs omega >= 0, got {omega}")));
        }
        Ok(self.combine(|ch| (ch.spectral.profile(omega), false)))
    }

    /// Rate function `R(Ω)` for any finite `Ω`; `R(0)` is the continuous limit.
    pub fn rate_r(&self, omega: f64) -> CMatrix {
        self.combine(|ch| self.channel_rate(ch, omega))
    }

    /// Scalar rate of one channel and whether its coupling enters transposed.
    pub(crate) fn channel_rate(&self, ch: &BathChannel, omega: f64) -> (f64, bool) {
        let s = &ch.spectral;
        if omega > 0.0 {
            let n = bose(self.temperature.at(omega), omega);
            (s.profile(omega) * (n + 1.0), false)
        } else if omega < 0.0 {
            (self.channel_thermal(ch, omega), true)
        } else {
            (s.slope_at_zero() * self.temperature.at(0.0), false)
        }
    }

    /// `j(|Ω|) N(|Ω|)`: the stimulated (thermal) part of the rate, even in `Ω`.
    pub(crate) fn channel_thermal(&self, ch: &BathChannel, omega: f64) -> f64 {
        let w = omega.abs();
        let t = self.temperature.at(w);
        if w == 0.0 {
            return ch.spectral.slope_at_zero() * t;
        }
        let n = bose(t, w);
        if n == 0.0 {
            0.0
        } else {
            ch.spectral.profile(w) * n
        }
    }

    fn combine(&self, f: impl Fn(&BathChannel) -> (f64, bool)) -> CMatrix {
        let mut out = CMatrix::zeros(self.n_ops, self.n_ops);
        for ch in &self.channels {
            let (v, transposed) = f(ch);
            if v == 0.0 {
                continue;
            }
            let c = if transposed {
                ch.coupling.transpose()
            } else {
                ch.coupling.clone()
            };
            out += c * Complex64::new(v, 0.0);
        }
        out
    }

    /// Interior points where some channel's rate is not smooth.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for ch in &self.channels {
            if let Some(wc) = ch.spectral.omega_c() {
                pts.push(wc);
                pts.push(-wc);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Frequency beyond which the thermal part `‖C‖ j(Ω) N(Ω)` of every channel
    /// stays below `eps`. Zero at zero temperature.
    pub fn thermal_cutoff(&self, eps: f64) -> f64 {
        if self.temperature.constant() == Some(0.0) {
            return 0.0;
        }
        let mut best: f64 = 0.0;
        for ch in &self.channels {
            let weight = crate::linalg::max_abs(&ch.coupling);
            let g = |w: f64| weight * self.channel_thermal(ch, w);
            // walk out geometrically, then bisect the last bracket
            let mut hi = self.temperature.at(1.0).max(1e-3);
            let mut steps = 0;
            while g(hi) >= eps && steps < 200 {
                hi *= 2.0;
                steps += 1;
            }
            let mut lo = hi / 2.0;
            if g(lo) < eps {
                lo = 0.0;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(mid) >= eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if let Some(end) = ch.spectral.support_end() {
                hi = hi.min(end);
            }
            best = best.max(hi);
        }
        best
    }

    /// Checks `Ω j(Ω) N(Ω) → 0`, the condition under which the thermal part of
    /// the rate can be integrated without a cut-off.
    pub fn check_decay_condition(&self) -> Result<()> {
        // every supported profile grows polynomially, so a finite constant
        // temperature always decays exponentially
        if self.temperature.constant().is_some() {
            return Ok(());
        }
        for ch in &self.channels {
            let mut last = f64::INFINITY;
            for probe in [1e4, 1e6, 1e8] {
                let v = probe * self.channel_thermal(ch, probe);
                if !v.is_finite() || v > last || v > 1e-6 {
                    return Err(Error::DecayCondition {
                        reason: format!(
                            "Ω·J(Ω)·N(Ω) = {v:.3e} at Ω = {probe:e} for `{}`",
                            ch.spectral.kind().name()
                        ),
                    });
                }
                last = v;
            }
        }
        Ok(())
    }
}
