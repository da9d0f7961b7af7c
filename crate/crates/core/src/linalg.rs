//! Dense complex linear algebra used throughout the crate.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(A X B) = (B^T ⊗ A) vec(X)`. Every superoperator in the crate is
//! built under this convention; `nalgebra` stores matrices column-major, so
//! `vec` is just the storage slice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative Hermiticity tolerance accepted by the eigensolver entry points.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues above `-PSD_FLOOR * max(1, λ_max)` are clamped to zero by [`psd_sqrt`].
pub const PSD_FLOOR: f64 = 1e-10;

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn require_hermitian(m: &CMatrix) -> Result<()> {
    let deviation = hermiticity_defect(m);
    if deviation > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> CMatrix {
        &self.vectors * real_diagonal(&self.values) * self.vectors.adjoint()
    }

    /// `V f(Λ) V^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        &self.vectors * real_diagonal(&mapped) * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    let n = require_square(m)?;
    if n == 0 {
        return Err(Error::param("matrix", "dimension must be at least 1"));
    }
    require_hermitian(m)?;
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEig { values, vectors })
}

/// Principal square root of a positive semi-definite matrix.
pub fn psd_sqrt(r: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(r)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    let min = eig.values[0];
    if min < -PSD_FLOOR * top.abs().max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig.map(|v| v.max(0.0).sqrt()))
}

pub fn matrix_exp(m: &CMatrix) -> Result<CMatrix> {
    require_square(m)?;
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::param("matrix", "entries must be finite"));
    }
    Ok(m.exp())
}

/// Column-stacking vectorization.
pub fn vec(m: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<Complex64>, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// A linear map on `dim × dim` matrices, stored as its `dim² × dim²` matrix
/// acting on column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::identity(dim * dim, dim * dim),
        }
    }

    /// `X ↦ X^T`; not completely positive.
    pub fn transpose_map(dim: usize) -> Self {
        let mut matrix = CMatrix::zeros(dim * dim, dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                matrix[(j + i * dim, i + j * dim)] = ONE;
            }
        }
        Self { dim, matrix }
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Result<Self> {
        let d = require_square(a)?;
        if require_square(b)? != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: b.nrows(),
            });
        }
        Ok(Self {
            dim: d,
            matrix: b.transpose().kronecker(a),
        })
    }

    /// `X ↦ -i[H, X]`.
    pub fn hamiltonian(h: &CMatrix) -> Result<Self> {
        let d = require_square(h)?;
        let id = CMatrix::identity(d, d);
        let left = id.kronecker(h);
        let right = h.transpose().kronecker(&id);
        Ok(Self {
            dim: d,
            matrix: (left - right) * (-I),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec(&(&self.matrix * vec(rho)), self.dim)
    }

    pub fn exp(&self) -> Result<Self> {
        Ok(Self {
            dim: self.dim,
            matrix: matrix_exp(&self.matrix)?,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.scale(s),
        }
    }

    /// Composition `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn add_scaled(&mut self, other: &Superoperator, weight: Complex64) {
        self.matrix.zip_apply(&other.matrix, |a, b| *a += weight * b);
    }

    /// The row vector `vec(I)^H L`, returned as a column.
    pub fn trace_functional(&self) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim * self.dim);
        for col in 0..self.dim * self.dim {
            let mut acc = ZERO;
            for k in 0..self.dim {
                acc += self.matrix[(k + k * self.dim, col)];
            }
            out[col] = acc;
        }
        out
    }

    /// Norm of `vec(I)^H L`.
    pub fn trace_annihilation_defect(&self) -> f64 {
        self.trace_functional().norm()
    }

    /// Norm of `vec(I)^H Φ - vec(I)^H`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut f = self.trace_functional();
        for k in 0..self.dim {
            f[k + k * self.dim] -= ONE;
        }
        f.norm()
    }

    pub fn frobenius_distance(&self, other: &Superoperator) -> f64 {
        frobenius(&(&self.matrix - &other.matrix))
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.matrix)
    }
}

/// Superoperator of `ρ ↦ A ρ B^H - ½ {B^H A, ρ}`.
pub fn dissipator_super(a: &CMatrix, b: &CMatrix) -> Result<Superoperator> {
    let d = require_square(a)?;
    if require_square(b)? != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: b.nrows(),
        });
    }
    let id = CMatrix::identity(d, d);
    let bda = b.adjoint() * a;
    let jump = b.conjugate().kronecker(a);
    let anti = id.kronecker(&bda) + bda.transpose().kronecker(&id);
    Ok(Superoperator {
        dim: d,
        matrix: jump - anti.scale(0.5),
    })
}

/// Choi matrix `Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|`, output factor first.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        hermitian_eig(&h)
            .expect("Hermitian part is Hermitian")
            .values
    }

    /// Trace over the output factor.
    pub fn partial_trace_output(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |c, e| {
            (0..d).map(|a| self.matrix[(a * d + c, a * d + e)]).sum()
        })
    }
}

pub fn choi_of(map: &Superoperator) -> ChoiMatrix {
    let d = map.dim;
    let m = &map.matrix;
    let matrix = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (a, c) = (row / d, row % d);
        let (b, e) = (col / d, col % d);
        m[(a + b * d, c + e * d)]
    });
    ChoiMatrix { dim: d, matrix }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    pub cptp: bool,
    pub min_eigenvalue: f64,
    /// Frobenius norm of `Tr_out J - I`.
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
}

pub fn is_cptp(map: &Superoperator, tol: f64) -> CptpReport {
    let choi = choi_of(map);
    let min_eigenvalue = choi.eigenvalues()[0];
    let pt = choi.partial_trace_output();
    let trace_defect = frobenius(&(pt - CMatrix::identity(map.dim, map.dim)));
    let hermiticity_defect = hermiticity_defect(choi.matrix());
    CptpReport {
        cptp: min_eigenvalue >= -tol && trace_defect <= tol,
        min_eigenvalue,
        trace_defect,
        hermiticity_defect,
    }
}
