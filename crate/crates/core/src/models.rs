//! Prebuilt system-bath models in units of the transition frequency `ω0 = 1`.

use num_complex::Complex64;

use crate::analysis::DensityMatrix;
use crate::bath::{BathModel, SpectralDensity, SpectralKind};
use crate::error::{Error, Result};
use crate::generators::SystemModel;
use crate::linalg::{real_diagonal, CMatrix};

#[derive(Debug, Clone)]
pub struct Model {
    pub name: &'static str,
    pub system: SystemModel,
    pub bath: BathModel,
    /// Names of the basis states, in matrix order.
    pub basis: Vec<&'static str>,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn basis_index(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| *b == label)
    }

    pub fn preset_names(&self) -> &'static [&'static str] {
        match self.name {
            "spin_boson" => &["ground", "excited", "plus", "mixed", "y-plus", "y-minus"],
            _ => &["ground", "mixed"],
        }
    }

    /// Named initial states:
    ///
    /// * `ground`, `excited` (spin only), `mixed`: `|g⟩⟨g|`, `|e⟩⟨e|`, `I/d`.
    /// * `plus`: every entry `½`.
    /// * `y-plus`, `y-minus`: `½(I ± σ_y)`.
    pub fn preset(&self, name: &str) -> Result<DensityMatrix> {
        let unknown = || {
            Error::param(
                "initial_state",
                format!("unknown preset `{name}` for {}; expected one of {:?}", self.name, self.preset_names()),
            )
        };
        if !self.preset_names().contains(&name) {
            return Err(unknown());
        }
        let d = self.dim();
        let half = Complex64::new(0.5, 0.0);
        let ihalf = Complex64::new(0.0, 0.5);
        match name {
            "ground" => DensityMatrix::basis(d, self.basis_index("g").expect("every model has a ground state")),
            "excited" => DensityMatrix::basis(d, 0),
            "mixed" => Ok(DensityMatrix::maximally_mixed(d)),
            "plus" => DensityMatrix::new(CMatrix::from_element(2, 2, half)),
            "y-plus" => DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[half, -ihalf, ihalf, half])),
            "y-minus" => DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[half, ihalf, -ihalf, half])),
            _ => Err(unknown()),
        }
    }
}

fn cutoff_spectral(alpha: f64, kind: SpectralKind, omega_c: Option<f64>) -> Result<SpectralDensity> {
    match (kind, omega_c) {
        (SpectralKind::Ohmic, Some(_)) => Err(Error::param("omega_c", "plain ohmic bath takes no cut-off")),
        (SpectralKind::Ohmic, None) => SpectralDensity::ohmic(alpha),
        (_, None) => Err(Error::param(
            "omega_c",
            format!("`{}` requires a cut-off frequency", kind.name()),
        )),
        (_, Some(wc)) => SpectralDensity::new(kind, alpha, Some(wc)),
    }
}

/// Two-level system `H = σ_z / 2` coupled through `σ_x`, basis `(|e⟩, |g⟩)`.
pub fn spin_boson(alpha: f64, t_eff: f64, kind: SpectralKind, omega_c: Option<f64>) -> Result<Model> {
    let spectral = cutoff_spectral(alpha, kind, omega_c)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let sigma_x = CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
    Ok(Model {
        name: "spin_boson",
        system: SystemModel::new(real_diagonal(&[0.5, -0.5]), vec![sigma_x])?,
        bath: BathModel::scalar(spectral, t_eff)?,
        basis: vec!["e", "g"],
    })
}

/// V-type three-level system with excited levels `1 ± Δω/2` above the ground
/// state and an ohmic bath, basis `(|ω2⟩, |ω1⟩, |g⟩)`.
pub fn qutrit_boson(alpha: f64, t_eff: f64, delta_omega: f64) -> Result<Model> {
    if !(delta_omega > 0.0 && delta_omega < 2.0) {
        return Err(Error::param(
            "delta_omega",
            format!("must lie in (0, 2), got {delta_omega}"),
        ));
    }
    qutrit_with_splitting(alpha, t_eff, delta_omega)
}

/// [`qutrit_boson`] allowing `Δω = 0`, where the excited levels are degenerate.
pub fn qutrit_boson_degenerate(alpha: f64, t_eff: f64) -> Result<Model> {
    qutrit_with_splitting(alpha, t_eff, 0.0)
}

fn qutrit_with_splitting(alpha: f64, t_eff: f64, delta_omega: f64) -> Result<Model> {
    let mut a = CMatrix::zeros(3, 3);
    for k in 0..2 {
        a[(2, k)] = Complex64::new(1.0, 0.0);
        a[(k, 2)] = Complex64::new(1.0, 0.0);
    }
    let h = real_diagonal(&[1.0 + 0.5 * delta_omega, 1.0 - 0.5 * delta_omega, 0.0]);
    Ok(Model {
        name: "qutrit_boson",
        system: SystemModel::new(h, vec![a])?,
        bath: BathModel::scalar(SpectralDensity::ohmic(alpha)?, t_eff)?,
        basis: vec!["w2", "w1", "g"],
    })
}
