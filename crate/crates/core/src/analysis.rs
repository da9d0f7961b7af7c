//! Density matrices, time series and the quantities extracted from them.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, hermiticity_defect, max_abs, CMatrix, HermitianEig};

pub const STATE_HERMITIAN_TOL: f64 = 1e-10;
pub const STATE_TRACE_TOL: f64 = 1e-9;
pub const STATE_PSD_TOL: f64 = 1e-8;

/// Trace-distance increases at or below this count as monotone.
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at the state tolerances.
    /// The stored matrix is the Hermitian part of `matrix`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, STATE_HERMITIAN_TOL, STATE_TRACE_TOL, STATE_PSD_TOL)
    }

    pub fn with_tolerances(matrix: CMatrix, hermitian_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidState {
                reason: format!("shape {}x{} is not square and non-empty", matrix.nrows(), matrix.ncols()),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState {
                reason: "non-finite entries".into(),
            });
        }
        let defect = hermiticity_defect(&matrix);
        if defect > hermitian_tol {
            return Err(Error::InvalidState {
                reason: format!("Hermiticity defect {defect:.3e} exceeds {hermitian_tol:.1e}"),
            });
        }
        let matrix = hermitian_part(&matrix);
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > trace_tol {
            return Err(Error::InvalidState {
                reason: format!("trace {trace} differs from 1 by more than {trace_tol:.1e}"),
            });
        }
        let min = hermitian_eig(&matrix)?.values[0];
        if min < -psd_tol {
            return Err(Error::InvalidState {
                reason: format!("min eigenvalue {min:.3e} below -{psd_tol:.1e}"),
            });
        }
        Ok(Self { matrix })
    }

    /// Pure state `|ψ⟩⟨ψ|` of a normalized copy of `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidState {
                reason: "zero state vector".into(),
            });
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidState {
                reason: format!("basis index {k} out of range for dimension {dim}"),
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.matrix)
            .expect("density matrices are Hermitian")
            .values
    }

    pub fn trace_defect(&self) -> f64 {
        (self.matrix.trace() - 1.0).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Picture {
    Schrodinger,
    Interaction,
}

impl Picture {
    pub fn name(self) -> &'static str {
        match self {
            Picture::Schrodinger => "schrodinger",
            Picture::Interaction => "interaction",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    picture: Picture,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, states: Vec<DensityMatrix>, picture: Picture) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: states.len(),
            });
        }
        check_grid(&times)?;
        if let Some(first) = states.first() {
            if let Some(bad) = states.iter().find(|s| s.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: bad.dim(),
                });
            }
        }
        Ok(Self {
            times,
            states,
            picture,
            metadata: BTreeMap::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &DensityMatrix)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Requires a non-empty, finite, strictly ascending grid.
pub fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("times", "grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "grid contains non-finite values"));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "times",
            format!("grid is not strictly ascending at {} -> {}", w[0], w[1]),
        ));
    }
    Ok(())
}

fn canonical_order(a: &CMatrix, b: &CMatrix) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            std::cmp::Ordering::Equal => continue,
            other => return other.is_lt(),
        }
    }
    true
}

/// `½ ‖ρ - σ‖₁`, exactly symmetric in its arguments.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let (a, b) = if canonical_order(rho.matrix(), sigma.matrix()) {
        (rho, sigma)
    } else {
        (sigma, rho)
    };
    let diff = hermitian_part(&(a.matrix() - b.matrix()));
    let eig = hermitian_eig(&diff)?;
    Ok((0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>()).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub monotone: bool,
    pub total_increase: f64,
    /// Maximal runs `[t_k, t_m]` over which the distance kept increasing.
    pub increase_intervals: Vec<(f64, f64)>,
    pub distances: Vec<f64>,
}

/// Trace-distance witness of non-Markovianity over a shared time grid.
pub fn nonmarkovianity_witness(rho: &TimeSeries, sigma: &TimeSeries) -> Result<WitnessReport> {
    if rho.picture() != sigma.picture() {
        return Err(Error::param("series", "the two series are in different pictures"));
    }
    if rho.times() != sigma.times() {
        return Err(Error::param("series", "the two series use different time grids"));
    }
    let distances = rho
        .states()
        .iter()
        .zip(sigma.states())
        .map(|(a, b)| trace_distance(a, b))
        .collect::<Result<Vec<_>>>()?;
    let times = rho.times();
    let mut total_increase = 0.0;
    let mut increase_intervals: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for k in 1..distances.len() {
        let step = distances[k] - distances[k - 1];
        if step > 0.0 {
            total_increase += step;
            open.get_or_insert(times[k - 1]);
        } else if let Some(start) = open.take() {
            increase_intervals.push((start, times[k - 1]));
        }
    }
    if let Some(start) = open {
        increase_intervals.push((start, times[times.len() - 1]));
    }
    Ok(WitnessReport {
        monotone: total_increase <= MONOTONE_TOL,
        total_increase,
        increase_intervals,
        distances,
    })
}

/// `e^{-H/T} / Z`; at `T = 0` the normalized projector onto the ground space.
pub fn gibbs_state(hamiltonian: &CMatrix, t_eff: f64) -> Result<DensityMatrix> {
    if !(t_eff >= 0.0) {
        return Err(Error::param("t_eff", format!("must be non-negative, got {t_eff}")));
    }
    let eig: HermitianEig = hermitian_eig(hamiltonian)?;
    let e0 = eig.values[0];
    let rho = if t_eff == 0.0 {
        let tol = 1e-9 * max_abs(hamiltonian).max(1.0);
        let count = eig.values.iter().filter(|&&e| e - e0 <= tol).count() as f64;
        eig.map(|e| if e - e0 <= tol { 1.0 / count } else { 0.0 })
    } else {
        let z: f64 = eig.values.iter().map(|&e| (-(e - e0) / t_eff).exp()).sum();
        eig.map(|e| (-(e - e0) / t_eff).exp() / z)
    };
    DensityMatrix::new(rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTable {
    pub times: Vec<f64>,
    pub selectors: Vec<(usize, usize)>,
    /// `values[k][s]` is selector `s` at `times[k]`.
    pub values: Vec<Vec<Complex64>>,
}

impl ObservableTable {
    pub fn names(&self) -> Vec<String> {
        self.selectors.iter().map(|&(r, c)| selector_name(r, c)).collect()
    }

    pub fn column(&self, s: usize) -> Vec<Complex64> {
        self.values.iter().map(|row| row[s]).collect()
    }

    pub fn moduli(&self, s: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[s].norm()).collect()
    }
}

pub fn selector_name(row: usize, col: usize) -> String {
    format!("rho_{row}{col}")
}

/// Matrix elements `ρ[(row, col)]` at every time.
pub fn observables(series: &TimeSeries, selectors: &[(usize, usize)]) -> Result<ObservableTable> {
    let dim = series.states().first().map_or(0, DensityMatrix::dim);
    if let Some(&(r, c)) = selectors.iter().find(|&&(r, c)| r >= dim || c >= dim) {
        return Err(Error::param(
            "observables",
            format!("selector ({r}, {c}) out of range for dimension {dim}"),
        ));
    }
    let values = series
        .states()
        .iter()
        .map(|s| selectors.iter().map(|&(r, c)| s.element(r, c)).collect())
        .collect();
    Ok(ObservableTable {
        times: series.times().to_vec(),
        selectors: selectors.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diagonal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn y_pair() -> (DensityMatrix, DensityMatrix) {
        let plus = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)]);
        let minus = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.5, 0.0)]);
        (DensityMatrix::new(plus).unwrap(), DensityMatrix::new(minus).unwrap())
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(real_diagonal(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(real_diagonal(&[0.6, 0.5])).is_err());
        assert!(DensityMatrix::new(real_diagonal(&[1.5, -0.5])).is_err());
        let skew = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(skew).is_err());
        assert!(DensityMatrix::new(CMatrix::zeros(2, 3)).is_err());
        assert!(DensityMatrix::basis(2, 2).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let (rho, sigma) = y_pair();
        assert_eq!(trace_distance(&rho, &rho).unwrap(), 0.0);
        assert!((trace_distance(&rho, &sigma).unwrap() - 1.0).abs() < 1e-14);
        let e = DensityMatrix::basis(2, 0).unwrap();
        let g = DensityMatrix::basis(2, 1).unwrap();
        assert!((trace_distance(&e, &g).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance(&e, &DensityMatrix::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let h = real_diagonal(&[0.5, -0.5]);
        let rho = gibbs_state(&h, 1.0).unwrap();
        assert!((rho.element(0, 0).re - 1.0 / (1.0 + std::f64::consts::E)).abs() < 1e-15);
        assert!((rho.element(0, 0).re - 0.26894).abs() < 1e-5);
        let cold = gibbs_state(&h, 0.0).unwrap();
        assert_eq!(cold.element(1, 1).re, 1.0);
        let hot = gibbs_state(&real_diagonal(&[1.0, 0.2, 0.0]), 1e12).unwrap();
        for k in 0..3 {
            assert!((hot.element(k, k).re - 1.0 / 3.0).abs() < 1e-11);
        }
        let degenerate = gibbs_state(&real_diagonal(&[0.0, 0.0, 1.0]), 0.0).unwrap();
        assert_eq!(degenerate.element(0, 0).re, 0.5);
        assert!(gibbs_state(&h, -1.0).is_err());
    }

    #[test]
    fn witness_examples() {
        let (rho, sigma) = y_pair();
        let times = vec![0.0, 1.0, 2.0];
        let same = TimeSeries::new(times.clone(), vec![rho.clone(); 3], Picture::Interaction).unwrap();
        let r = nonmarkovianity_witness(&same, &same).unwrap();
        assert!(r.monotone && r.total_increase == 0.0 && r.increase_intervals.is_empty());

        let mixed = DensityMatrix::maximally_mixed(2);
        let other = TimeSeries::new(
            times.clone(),
            vec![sigma.clone(), mixed.clone(), sigma.clone()],
            Picture::Interaction,
        )
        .unwrap();
        let r = nonmarkovianity_witness(&same, &other).unwrap();
        assert!(!r.monotone);
        assert!((r.total_increase - 0.5).abs() < 1e-14);
        assert_eq!(r.increase_intervals, vec![(1.0, 2.0)]);

        let shifted = TimeSeries::new(vec![0.0, 1.0, 3.0], vec![rho; 3], Picture::Interaction).unwrap();
        assert!(nonmarkovianity_witness(&same, &shifted).is_err());
    }

    #[test]
    fn observable_examples() {
        let half = DensityMatrix::maximally_mixed(2);
        let series = TimeSeries::new(vec![0.0], vec![half], Picture::Schrodinger).unwrap();
        let table = observables(&series, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(table.values[0][0], c(0.5, 0.0));
        assert_eq!(table.names(), vec!["rho_00", "rho_01"]);
        assert!(observables(&series, &[(2, 0)]).is_err());
        assert!(TimeSeries::new(vec![1.0, 1.0], vec![DensityMatrix::maximally_mixed(2); 2], Picture::Schrodinger).is_err());
    }
}
