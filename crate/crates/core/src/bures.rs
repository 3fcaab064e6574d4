//! Gaussian measures under the 2-Wasserstein metric.
//!
//! Covariances live in [`SymPsdMatrix`], which guarantees symmetry and
//! positive semidefiniteness (up to a small eigenvalue tolerance). Every
//! matrix product that yields a covariance is re-symmetrized.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance on `|A_ij - A_ji|`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues below `-PSD_TOL` reject a matrix as not PSD.
pub const PSD_TOL: f64 = 1e-10;
/// A Gaussian is non-degenerate iff its smallest covariance eigenvalue exceeds this.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Symmetric positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPsdMatrix(DMatrix<f64>);

impl SymPsdMatrix {
    /// Validates symmetry and positive semidefiniteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = m.nrows();
        let mut worst = 0.0f64;
        let mut bad = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > SYMMETRY_TOL * m[(i, j)].abs().max(1.0) {
                    bad = true;
                }
                worst = worst.max(diff);
            }
        }
        if bad {
            return Err(Error::NonSymmetric(worst));
        }
        let s = Self(symmetrize(m));
        let lmin = s.min_eigenvalue();
        if lmin < -PSD_TOL {
            return Err(Error::NotPsd(lmin));
        }
        Ok(s)
    }

    /// Symmetrizes `m` without validating definiteness. Used for products of
    /// the form `A Σ Aᵀ`, which are PSD in exact arithmetic.
    pub(crate) fn from_product(m: DMatrix<f64>) -> Self {
        Self(symmetrize(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return f64::INFINITY;
        }
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Principal square root, with negative eigenvalues clamped to zero.
    pub fn sqrt(&self) -> SymPsdMatrix {
        self.spectral_map(|l| l.max(0.0).sqrt())
    }

    /// Inverse principal square root. Fails when the matrix is degenerate.
    pub fn inv_sqrt(&self) -> Result<DMatrix<f64>> {
        let lmin = self.min_eigenvalue();
        if lmin <= DEGENERACY_TOL {
            return Err(Error::DegenerateSource(lmin));
        }
        Ok(self.spectral_map(|l| 1.0 / l.sqrt()).0)
    }

    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymPsdMatrix {
        let eig = SymmetricEigen::new(self.0.clone());
        let q = &eig.eigenvectors;
        let mapped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
        SymPsdMatrix(symmetrize(q * DMatrix::from_diagonal(&mapped) * q.transpose()))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Principal square root of a symmetric PSD matrix given as a raw matrix.
pub fn sqrtm_psd(a: &DMatrix<f64>) -> Result<SymPsdMatrix> {
    Ok(SymPsdMatrix::new(a.clone())?.sqrt())
}

/// Gaussian measure `N(mean, cov)` on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    cov: SymPsdMatrix,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: SymPsdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { mean, cov })
    }

    /// Convenience constructor from a mean slice and a row-major covariance.
    pub fn from_parts(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let d = mean.len();
        if cov_row_major.len() != d * d {
            return Err(Error::LengthMismatch {
                expected: d * d,
                found: cov_row_major.len(),
            });
        }
        let cov = SymPsdMatrix::new(DMatrix::from_row_slice(d, d, cov_row_major))?;
        Self::new(DVector::from_column_slice(mean), cov)
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            cov: SymPsdMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &SymPsdMatrix {
        &self.cov
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.cov.min_eigenvalue() > DEGENERACY_TOL
    }
}

/// Affine map `x ↦ matrix·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl LinearMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            offset: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> LinearMap {
        LinearMap {
            matrix: &self.matrix * &inner.matrix,
            offset: &self.matrix * &inner.offset + &self.offset,
        }
    }

    pub fn inverse(&self) -> Result<LinearMap> {
        let inv = self.matrix.clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let offset = -(&inv * &self.offset);
        Ok(LinearMap { matrix: inv, offset })
    }
}

/// Closed-form Monge map between two Gaussians:
/// `T(x) = m₂ + A(x − m₁)` with `A = Σ₁^{-1/2}(Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2} Σ₁^{-1/2}`.
pub fn gaussian_monge_map(src: &GaussianMeasure, dst: &GaussianMeasure) -> Result<LinearMap> {
    if src.dim() != dst.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: dst.dim(),
        });
    }
    let inv_half = src.cov.inv_sqrt()?;
    let half = src.cov.sqrt();
    let middle = SymPsdMatrix::from_product(half.as_matrix() * dst.cov.as_matrix() * half.as_matrix()).sqrt();
    let a = symmetrize(&inv_half * middle.as_matrix() * &inv_half);
    let offset = dst.mean() - &a * src.mean();
    Ok(LinearMap { matrix: a, offset })
}

/// 2-Wasserstein distance between two Gaussians.
pub fn bures_wasserstein_distance(a: &GaussianMeasure, b: &GaussianMeasure) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let mean_term = (a.mean() - b.mean()).norm_squared();
    let ha = a.cov.sqrt();
    let cross = SymPsdMatrix::from_product(ha.as_matrix() * b.cov.as_matrix() * ha.as_matrix()).sqrt();
    let bures2 = a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
    Ok((mean_term + bures2.max(0.0)).sqrt())
}

/// Image of a Gaussian under an affine map.
pub fn pushforward(map: &LinearMap, g: &GaussianMeasure) -> Result<GaussianMeasure> {
    if map.matrix.ncols() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.matrix.ncols(),
            found: g.dim(),
        });
    }
    if map.matrix.nrows() != map.offset.len() {
        return Err(Error::DimensionMismatch {
            expected: map.matrix.nrows(),
            found: map.offset.len(),
        });
    }
    let mean = map.apply(g.mean());
    let cov = SymPsdMatrix::from_product(&map.matrix * g.cov.as_matrix() * map.matrix.transpose());
    Ok(GaussianMeasure { mean, cov })
}

/// Relative Frobenius error `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
