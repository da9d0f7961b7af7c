//! Time-dependent relaxation coefficients `γ_ij(ω, ω', t)`.
//!
//! All methods return the `n × n` matrix `G` with `G[(i, j)] = γ_ij(ω, ω', t)`,
//! paired with the bath rate as `γ_ij ↔ R_ji`. For a scalar bath this is a
//! `1 × 1` matrix.
//!
//! * `ExactCutoff` integrates `e^{iΔt/2} ∫ K(Ω) R_ji(Ω) dΩ` numerically and
//!   needs a spectral density with a cut-off.
//! * `Star` replaces both sinc filters by delta functions mode-wise:
//!   `2πt e^{iΔt/2} sinc(Δt/2) [R^{1/2}(ω') R^{1/2}(ω)]_ji`.
//! * `DoubleStar` keeps the thermal integral and regularizes only the vacuum
//!   part, which becomes `2πt H(ω) H(ω') e^{iΔt/2} sinc(Δt/2) [J^{1/2}(ω') J^{1/2}(ω)]_ji`.
//! * `Markov` is the Davies rate `2π R_ji(ω)`, without the factor `t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, CMatrix, ZERO};
pub use crate::quadrature::QuadratureConfig;
use crate::quadrature::{sinc, sinc_pair_integral, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateMethod {
    ExactCutoff,
    Star,
    DoubleStar,
    Markov,
}

impl RateMethod {
    pub fn name(self) -> &'static str {
        match self {
            RateMethod::ExactCutoff => "exact-cutoff",
            RateMethod::Star => "star",
            RateMethod::DoubleStar => "doublestar",
            RateMethod::Markov => "markov",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateKernel {
    method: RateMethod,
    bath: BathModel,
    quadrature: QuadratureConfig,
}

fn phase(delta: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * delta * t)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || t.is_infinite() {
        return Err(Error::param("t", format!("must be finite and non-negative, got {t}")));
    }
    Ok(())
}

impl RateKernel {
    pub fn new(method: RateMethod, bath: BathModel, quadrature: QuadratureConfig) -> Result<Self> {
        quadrature.validate()?;
        match method {
            RateMethod::ExactCutoff => {
                if let Some(ch) = bath.channels().iter().find(|c| !c.spectral.has_cutoff()) {
                    return Err(Error::CutoffRequired {
                        kind: ch.spectral.kind().name(),
                    });
                }
            }
            RateMethod::DoubleStar => bath.check_decay_condition()?,
            RateMethod::Star | RateMethod::Markov => {}
        }
        Ok(Self {
            method,
            bath,
            quadrature,
        })
    }

    pub fn method(&self) -> RateMethod {
        self.method
    }

    pub fn bath(&self) -> &BathModel {
        &self.bath
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quadrature
    }

    /// `γ(ω, ω', t)` for this kernel's method. `Markov` ignores `ω'` and `t`
    /// and returns the rate at `ω`.
    pub fn gamma(&self, omega: f64, omega_p: f64, t: f64) -> Result<CMatrix> {
        match self.method {
            RateMethod::ExactCutoff => self.gamma_exact_cutoff(omega, omega_p, t),
            RateMethod::Star => self.gamma_star(omega, omega_p, t),
            RateMethod::DoubleStar => self.gamma_doublestar(omega, omega_p, t),
            RateMethod::Markov => Ok(self.gamma_markov(omega)),
        }
    }

    /// Frequency-domain evaluation of the exact coefficient with the bath's cut-off.
    pub fn gamma_exact_cutoff(&self, omega: f64, omega_p: f64, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        if let Some(ch) = self.bath.channels().iter().find(|c| !c.spectral.has_cutoff()) {
            return Err(Error::CutoffRequired {
                kind: ch.spectral.kind().name(),
            });
        }
        let n = self.bath.n_ops();
        if t == 0.0 {
            return Ok(CMatrix::zeros(n, n));
        }
        let cfg = &self.quadrature;
        let breaks = self.bath.breakpoints();
        let lower = -self.bath.thermal_cutoff(cfg.tail_epsilon);
        let mut out = CMatrix::zeros(n, n);
        for ch in self.bath.channels() {
            let upper = ch.spectral.support_end().unwrap_or(f64::INFINITY);
            let emission = |x: f64| self.bath.channel_rate(ch, x).0;
            let pos = sinc_pair_integral(omega, omega_p, t, &emission, 0.0, upper, &breaks, cfg);
            let neg = if lower < 0.0 {
                sinc_pair_integral(omega, omega_p, t, &emission, lower, 0.0, &breaks, cfg)
            } else {
                Estimate::zero()
            };
            let (pos, neg) = (pos.into_result(cfg)?, neg.into_result(cfg)?);
            // R = C r(Ω) above zero and C^T r(Ω) below; γ_ij pairs with R_ji
            out += ch.coupling.transpose() * Complex64::from(pos) + &ch.coupling * Complex64::from(neg);
        }
        Ok(out * phase(omega_p - omega, t))
    }

    pub fn gamma_star(&self, omega: f64, omega_p: f64, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        let n = self.bath.n_ops();
        if t == 0.0 {
            return Ok(CMatrix::zeros(n, n));
        }
        let delta = omega_p - omega;
        let scale = 2.0 * PI * t * sinc(0.5 * delta * t);
        let product = if n == 1 {
            let r1 = self.bath.rate_r(omega_p)[(0, 0)].re.max(0.0);
            let r2 = self.bath.rate_r(omega)[(0, 0)].re.max(0.0);
            CMatrix::from_element(1, 1, Complex64::from((r1 * r2).sqrt()))
        } else {
            let s1 = psd_sqrt(&self.bath.rate_r(omega_p))?;
            let s2 = psd_sqrt(&self.bath.rate_r(omega))?;
            (s1 * s2).transpose()
        };
        Ok(product * (phase(delta, t) * scale))
    }

    pub fn gamma_doublestar(&self, omega: f64, omega_p: f64, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        let n = self.bath.n_ops();
        if t == 0.0 {
            return Ok(CMatrix::zeros(n, n));
        }
        let mut out = self.doublestar_thermal(omega, omega_p, t)?;
        if omega > 0.0 && omega_p > 0.0 {
            let delta = omega_p - omega;
            let scale = 2.0 * PI * t * sinc(0.5 * delta * t);
            let product = if n == 1 {
                let j1 = self.bath.spectral_j(omega_p)?[(0, 0)].re.max(0.0);
                let j2 = self.bath.spectral_j(omega)?[(0, 0)].re.max(0.0);
                CMatrix::from_element(1, 1, Complex64::from((j1 * j2).sqrt()))
            } else {
                let s1 = psd_sqrt(&self.bath.spectral_j(omega_p)?)?;
                let s2 = psd_sqrt(&self.bath.spectral_j(omega)?)?;
                (s1 * s2).transpose()
            };
            out += product * (phase(delta, t) * scale);
        }
        Ok(out)
    }

    /// The `N(Ω)`-weighted part of the double-star coefficient alone.
    pub fn doublestar_thermal(&self, omega: f64, omega_p: f64, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        let n = self.bath.n_ops();
        let cfg = &self.quadrature;
        let wmax = self.bath.thermal_cutoff(cfg.tail_epsilon);
        if t == 0.0 || wmax == 0.0 {
            return Ok(CMatrix::zeros(n, n));
        }
        let breaks = self.bath.breakpoints();
        let mut out = CMatrix::zeros(n, n);
        for ch in self.bath.channels() {
            let thermal = |x: f64| self.bath.channel_thermal(ch, x);
            let pos = sinc_pair_integral(omega, omega_p, t, &thermal, 0.0, wmax, &breaks, cfg).into_result(cfg)?;
            let neg = sinc_pair_integral(omega, omega_p, t, &thermal, -wmax, 0.0, &breaks, cfg).into_result(cfg)?;
            // J_ji weights the Ω > 0 branch and J_ij the mirrored one
            out += ch.coupling.transpose() * Complex64::from(pos) + &ch.coupling * Complex64::from(neg);
        }
        Ok(out * phase(omega_p - omega, t))
    }

    /// Davies rate matrix `2π R_ji(ω)`.
    pub fn gamma_markov(&self, omega: f64) -> CMatrix {
        self.bath.rate_r(omega).transpose() * Complex64::from(2.0 * PI)
    }

    /// Upper bound on the thermal weight discarded by truncating at the
    /// tail cut-off, summed over both half-lines.
    pub fn thermal_tail_bound(&self, omega: f64, omega_p: f64, t: f64) -> f64 {
        let w = self.bath.thermal_cutoff(self.quadrature.tail_epsilon);
        let Some(temp) = self.bath.temperature().constant() else {
            return f64::NAN;
        };
        if w == 0.0 || temp == 0.0 {
            return 0.0;
        }
        let far = (w - omega.abs()).max(0.0) * (w - omega_p.abs()).max(0.0);
        let kernel_max = if far > 0.0 { (4.0 / far).min(t * t) } else { t * t };
        let decay = (-w / temp).exp();
        self.bath
            .channels()
            .iter()
            .map(|ch| {
                let weight = crate::linalg::max_abs(&ch.coupling);
                // ∫_W^∞ αΩ e^{-Ω/T} / (1 - e^{-W/T}) dΩ
                let tail = ch.spectral.alpha() * temp * (w + temp) * decay / (1.0 - decay);
                2.0 * weight * kernel_max * tail
            })
            .sum()
    }
}

/// Matrix `Γ` over the composite index `(ω_a, i)`, flattened as `a * n + i`,
/// with `Γ[(a n + i, b n + j)] = γ_ij(ω_a, ω_b, t)`. For `Markov` the result is
/// block diagonal with the rates `2π R_ji(ω_a)` and no factor of `t`.
pub fn assemble_gamma_matrix(kernel: &RateKernel, omegas: &[f64], n_ops: usize, t: f64) -> Result<CMatrix> {
    if omegas.is_empty() {
        return Err(Error::param("omegas", "at least one Bohr frequency is required"));
    }
    if n_ops != kernel.bath.n_ops() {
        return Err(Error::DimensionMismatch {
            expected: kernel.bath.n_ops(),
            found: n_ops,
        });
    }
    for (k, w) in omegas.iter().enumerate() {
        if omegas[..k].contains(w) {
            return Err(Error::param("omegas", format!("duplicate frequency {w}")));
        }
    }
    check_time(t)?;
    let m = omegas.len();
    let size = m * n_ops;
    let mut gamma = CMatrix::from_element(size, size, ZERO);

    if kernel.method == RateMethod::Markov {
        for (a, &w) in omegas.iter().enumerate() {
            let block = kernel.gamma_markov(w);
            gamma.view_mut((a * n_ops, a * n_ops), (n_ops, n_ops)).copy_from(&block);
        }
        return Ok(gamma);
    }

    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
    let blocks: Vec<CMatrix> = pairs
        .par_iter()
        .map(|&(a, b)| kernel.gamma(omegas[a], omegas[b], t))
        .collect::<Result<_>>()?;
    for (&(a, b), block) in pairs.iter().zip(blocks) {
        gamma.view_mut((a * n_ops, b * n_ops), (n_ops, n_ops)).copy_from(&block);
        if a != b {
            gamma
                .view_mut((b * n_ops, a * n_ops), (n_ops, n_ops))
                .copy_from(&block.adjoint());
        }
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathChannel, SpectralDensity, Temperature};
    use crate::linalg::hermitian_eig;
    use std::f64::consts::E;

    fn kernel(method: RateMethod, spectral: SpectralDensity, t_eff: f64) -> RateKernel {
        RateKernel::new(method, BathModel::scalar(spectral, t_eff).unwrap(), QuadratureConfig::default()).unwrap()
    }

    fn ohmic(t_eff: f64, method: RateMethod) -> RateKernel {
        kernel(method, SpectralDensity::ohmic(0.05).unwrap(), t_eff)
    }

    fn s(m: CMatrix) -> Complex64 {
        assert_eq!(m.shape(), (1, 1));
        m[(0, 0)]
    }

    #[test]
    fn zero_time_gives_zero() {
        let exp = SpectralDensity::exponential_cutoff(0.05, 5.0).unwrap();
        for method in [RateMethod::ExactCutoff, RateMethod::Star, RateMethod::DoubleStar] {
            let k = kernel(method, exp, 1.0);
            assert_eq!(s(k.gamma(1.0, -1.0, 0.0).unwrap()), ZERO);
            assert_eq!(s(k.gamma(1.0, 1.0, 0.0).unwrap()), ZERO);
        }
        assert!(ohmic(1.0, RateMethod::Star).gamma(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn exact_cutoff_requires_a_cutoff() {
        let err = RateKernel::new(
            RateMethod::ExactCutoff,
            BathModel::scalar(SpectralDensity::ohmic(0.05).unwrap(), 1.0).unwrap(),
            QuadratureConfig::default(),
        );
        assert!(matches!(err, Err(Error::CutoffRequired { kind: "ohmic" })));
        let k = ohmic(1.0, RateMethod::Star);
        assert!(matches!(k.gamma_exact_cutoff(1.0, 1.0, 1.0), Err(Error::CutoffRequired { .. })));
    }

    #[test]
    fn exact_cutoff_long_time_rates() {
        // sharp cut-off: γ/t → 2π α ω0
        let k = kernel(RateMethod::ExactCutoff, SpectralDensity::sharp_cutoff(0.05, 5.0).unwrap(), 0.0);
        let t = 2000.0;
        let g = s(k.gamma(1.0, 1.0, t).unwrap());
        assert!(g.im.abs() < 1e-12);
        assert!((g.re / t - 2.0 * PI * 0.05).abs() < 2e-4, "{}", g.re / t);

        // exponential cut-off: γ/t → 2π α ω0 e^{-ω0/ωc}
        let k = kernel(RateMethod::ExactCutoff, SpectralDensity::exponential_cutoff(0.05, 5.0).unwrap(), 0.0);
        let g = s(k.gamma(1.0, 1.0, t).unwrap());
        let limit = 2.0 * PI * 0.05 * (-0.2f64).exp();
        assert!((limit - 0.25721).abs() < 1e-5);
        assert!((g.re / t - limit).abs() < 2e-4, "{}", g.re / t);
    }

    #[test]
    fn exact_cutoff_index_swap_symmetry() {
        let k = kernel(RateMethod::ExactCutoff, SpectralDensity::exponential_cutoff(0.05, 5.0).unwrap(), 1.0);
        for (w, wp, t) in [(1.0, -1.0, 3.0), (0.5, 2.0, 1.7)] {
            let a = s(k.gamma(w, wp, t).unwrap());
            let b = s(k.gamma(wp, w, t).unwrap());
            let rotated = a * Complex64::from_polar(1.0, (w - wp) * t);
            assert!((b - rotated).norm() < 1e-12 * a.norm().max(1.0));
            // Hermiticity of Γ
            assert!((b - a.conj()).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn star_examples() {
        let k = ohmic(1.0, RateMethod::Star);
        for (w, t) in [(1.0, 3.0), (-1.0, 0.2), (2.5, 40.0)] {
            let g = s(k.gamma(w, w, t).unwrap());
            let expected = 2.0 * PI * t * k.bath().rate_r(w)[(0, 0)].re;
            assert!((g.re - expected).abs() <= 1e-12 * expected);
            assert_eq!(g.im, 0.0);
        }
        let cold = ohmic(0.0, RateMethod::Star);
        assert_eq!(s(cold.gamma(1.0, -1.0, 2.0).unwrap()), ZERO);
    }

    #[test]
    fn star_short_time_limit() {
        let k = ohmic(1.0, RateMethod::Star);
        let (w, wp) = (1.0, 1.1);
        for t in [1e-3, 1e-2] {
            let g = s(k.gamma(w, wp, t).unwrap());
            let r = (k.bath().rate_r(w)[(0, 0)].re * k.bath().rate_r(wp)[(0, 0)].re).sqrt();
            let approx = 2.0 * PI * t * r;
            let dt = (wp - w) * t;
            assert!((g - approx).norm() <= approx * dt, "t={t}");
        }
    }

    #[test]
    fn doublestar_examples() {
        let k = ohmic(0.0, RateMethod::DoubleStar);
        for t in [0.5, 7.0, 100.0] {
            let g = s(k.gamma(1.0, 1.0, t).unwrap());
            assert!((g.re - 2.0 * PI * t * 0.05).abs() < 1e-13 * t);
            assert_eq!(g.im, 0.0);
        }
        // negative frequencies carry no vacuum part
        let k = ohmic(1.0, RateMethod::DoubleStar);
        let full = s(k.gamma(-1.0, -1.0, 4.0).unwrap());
        let thermal = s(k.doublestar_thermal(-1.0, -1.0, 4.0).unwrap());
        assert_eq!(full, thermal);
    }

    #[test]
    fn doublestar_long_time_rate() {
        let k = ohmic(1.0, RateMethod::DoubleStar);
        let t = 2000.0;
        let g = s(k.gamma(1.0, 1.0, t).unwrap());
        let limit = 2.0 * PI * 0.05 * (1.0 + 1.0 / (E - 1.0));
        assert!((limit - 0.49699).abs() < 1e-5);
        assert!((g.re / t - limit).abs() < 1e-3, "{}", g.re / t);
    }

    #[test]
    fn markov_examples() {
        let cold = ohmic(0.0, RateMethod::Markov);
        assert!((s(cold.gamma_markov(1.0)).re - 0.1 * PI).abs() < 1e-15);
        assert_eq!(s(cold.gamma_markov(-1.0)).re, 0.0);
        let warm = ohmic(1.0, RateMethod::Markov);
        assert!((s(warm.gamma_markov(1.0)).re - 2.0 * PI * 0.0790988).abs() < 1e-6);
    }

    #[test]
    fn assembled_matrices() {
        let k = ohmic(1.0, RateMethod::Star);
        let g = assemble_gamma_matrix(&k, &[-1.0, 1.0], 1, 5.0).unwrap();
        assert!((&g - g.adjoint()).norm() < 1e-15);
        assert!(hermitian_eig(&g).unwrap().values[0] >= -1e-10);

        let z = assemble_gamma_matrix(&k, &[-1.0, 1.0], 1, 0.0).unwrap();
        assert_eq!(z, CMatrix::zeros(2, 2));

        let m = ohmic(1.0, RateMethod::Markov);
        let g = assemble_gamma_matrix(&m, &[-1.0, 1.0], 1, 5.0).unwrap();
        assert_eq!(g[(0, 1)], ZERO);
        assert!((g[(1, 1)].re - 2.0 * PI * m.bath().rate_r(1.0)[(0, 0)].re).abs() < 1e-15);

        assert!(assemble_gamma_matrix(&k, &[], 1, 1.0).is_err());
        assert!(assemble_gamma_matrix(&k, &[1.0, 1.0], 1, 1.0).is_err());
    }

    #[test]
    fn assembled_matrices_are_psd_for_all_methods() {
        let omegas = [-1.0 - 0.0314, -1.0 + 0.0314, 1.0 - 0.0314, 1.0 + 0.0314];
        let kernels = [
            kernel(RateMethod::ExactCutoff, SpectralDensity::exponential_cutoff(0.05, 5.0).unwrap(), 1.0),
            ohmic(1.0, RateMethod::Star),
            ohmic(1.0, RateMethod::DoubleStar),
        ];
        for k in &kernels {
            for t in [0.1, 1.0, 10.0, 100.0] {
                let g = assemble_gamma_matrix(k, &omegas, 1, t).unwrap();
                let trace: f64 = (0..4).map(|i| g[(i, i)].re).sum();
                let min = hermitian_eig(&g).unwrap().values[0];
                assert!(min >= -1e-8 * trace, "{:?} t={t}: {min}", k.method());
            }
        }
    }

    #[test]
    fn matrix_bath_star_and_doublestar_are_psd() {
        let c = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.2, 0.5),
                Complex64::new(0.2, -0.5),
                Complex64::new(0.7, 0.0),
            ],
        );
        let bath = BathModel::new(
            vec![
                BathChannel {
                    coupling: c,
                    spectral: SpectralDensity::ohmic(0.05).unwrap(),
                },
                BathChannel {
                    coupling: crate::linalg::real_diagonal(&[0.0, 1.0]),
                    spectral: SpectralDensity::ohmic(0.03).unwrap(),
                },
            ],
            Temperature::Constant(1.0),
        )
        .unwrap();
        for method in [RateMethod::Star, RateMethod::DoubleStar] {
            let k = RateKernel::new(method, bath.clone(), QuadratureConfig::default()).unwrap();
            let g = assemble_gamma_matrix(&k, &[-1.0, 0.5, 1.0], 2, 3.0).unwrap();
            let min = hermitian_eig(&g).unwrap().values[0];
            let trace: f64 = (0..6).map(|i| g[(i, i)].re).sum();
            assert!(min >= -1e-8 * trace, "{method:?}: {min}");
        }
    }

    #[test]
    fn sinc_envelope_bounds_off_diagonal_rates() {
        let (w, wp) = (1.0, -1.0);
        let delta: f64 = 2.0;
        let k_sharp = kernel(RateMethod::ExactCutoff, SpectralDensity::sharp_cutoff(0.05, 5.0).unwrap(), 1.0);
        let kernels = [k_sharp, ohmic(1.0, RateMethod::Star), ohmic(1.0, RateMethod::DoubleStar)];
        let rmax = 2.0 * PI * ohmic(1.0, RateMethod::Markov).bath().rate_r(1.0)[(0, 0)].re;
        for k in &kernels {
            for t in [20.0, 50.0, 200.0] {
                let g = s(k.gamma(w, wp, t).unwrap());
                assert!(g.norm() / t <= 4.0 / (delta * t) * rmax, "{:?} t={t}", k.method());
            }
        }
    }

    #[test]
    fn thermal_tail_bound_is_tiny() {
        let k = ohmic(1.0, RateMethod::DoubleStar);
        let b = k.thermal_tail_bound(1.0, -1.0, 10.0);
        assert!(b > 0.0 && b < 1e-12, "{b}");
        assert_eq!(ohmic(0.0, RateMethod::DoubleStar).thermal_tail_bound(1.0, 1.0, 1.0), 0.0);
    }
}
