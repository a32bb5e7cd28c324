//! Symmetric and symmetric-positive-definite matrix kernel.
//!
//! Every [`SpdMatrix`] carries its eigendecomposition, so square roots,
//! inverses and Lyapunov solves reuse one factorization.

mod eigen;
mod matrix;

pub use eigen::SymEigen;
pub use matrix::Matrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues below `-REJECT_REL * λ_max` make a matrix non-SPD.
pub const SPD_REJECT_REL: f64 = 1e-10;
/// Eigenvalues in `[-REJECT_REL * λ_max, FLOOR]` are lifted to `FLOOR`.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;

/// Square matrix with exactly symmetric storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<T>(Matrix<T>);

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_diag(diag: &[T]) -> Self {
        Self(Matrix::from_diag(diag))
    }

    /// Builds from the upper triangle `f(i, j)`, `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = f(i, j);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        Self(m)
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrize(m: &Matrix<T>) -> Self {
        assert!(m.is_square(), "symmetrize needs a square matrix");
        let half = T::lit(0.5);
        Self::from_upper_fn(m.rows(), |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                half * (m[(i, j)] + m[(j, i)])
            }
        })
    }

    /// Accepts a matrix that is symmetric up to `1e-10` relative to its largest entry.
    pub fn try_from_matrix(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix columns",
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let tol = T::lit(1e-10) * m.max_abs().max(T::min_positive_value());
        for i in 0..m.rows() {
            for j in i + 1..m.cols() {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > tol || !gap.is_finite() {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        gap: gap.as_f64(),
                    });
                }
            }
        }
        Ok(Self::symmetrize(&m))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::try_from_matrix(Matrix::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> T {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.frobenius_norm()
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn add_identity(&self, s: T) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.rows() {
            m[(i, i)] += s;
        }
        Self(m)
    }

    /// `A S A` for symmetric `A`; symmetrized to remove rounding asymmetry.
    pub fn congruence(&self, a: &SymMatrix<T>) -> Self {
        Self::symmetrize(&(&(&a.0 * &self.0) * &a.0))
    }

    pub fn eigen(&self) -> Result<SymEigen<T>> {
        eigen::symmetric_eigen(&self.0)
    }

    /// `Tr(M⁻¹)` through a Cholesky factorization; `None` if not positive definite.
    pub fn trace_of_inverse(&self) -> Option<T> {
        let l = self.0.cholesky()?;
        let n = self.dim();
        // Tr(M⁻¹) = ‖L⁻¹‖_F²; solve L X = I column by column.
        let mut total = T::zero();
        let mut col = vec![T::zero(); n];
        for c in 0..n {
            for i in 0..n {
                let mut s = if i == c { T::one() } else { T::zero() };
                for k in 0..i {
                    s -= l[(i, k)] * col[k];
                }
                col[i] = s / l[(i, i)];
            }
            total += col.iter().map(|&x| x * x).sum::<T>();
        }
        Some(total)
    }
}

/// Symmetric positive-definite matrix together with its eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix<T> {
    sym: SymMatrix<T>,
    eig: SymEigen<T>,
}

impl<T: Scalar> SpdMatrix<T> {
    /// Validates positive definiteness, applying the eigenvalue floor.
    pub fn new(sym: SymMatrix<T>) -> Result<Self> {
        let eig = sym.eigen()?;
        Self::from_eigen_checked(sym, eig)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(SymMatrix::from_rows(rows)?)
    }

    pub fn from_diag(diag: &[T]) -> Result<Self> {
        Self::new(SymMatrix::from_diag(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts_unchecked(
            SymMatrix::identity(n),
            SymEigen {
                values: vec![T::one(); n],
                vectors: Matrix::identity(n),
            },
        )
    }

    fn from_eigen_checked(sym: SymMatrix<T>, mut eig: SymEigen<T>) -> Result<Self> {
        let n = eig.values.len();
        if n == 0 {
            return Ok(Self { sym, eig });
        }
        for (index, l) in eig.values.iter().enumerate() {
            if !l.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    index,
                    eigenvalue: l.as_f64(),
                });
            }
        }
        let lmax = eig.values[n - 1];
        if lmax <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                index: n - 1,
                eigenvalue: lmax.as_f64(),
            });
        }
        let reject = -T::lit(SPD_REJECT_REL) * lmax;
        let floor = T::lit(SPD_EIGEN_FLOOR);
        let mut clamped = false;
        for (index, l) in eig.values.iter_mut().enumerate() {
            if *l < reject {
                return Err(Error::NotPositiveDefinite {
                    index,
                    eigenvalue: l.as_f64(),
                });
            }
            if *l < floor {
                *l = floor;
                clamped = true;
            }
        }
        let sym = if clamped {
            SymMatrix::symmetrize(&eig.reconstruct())
        } else {
            sym
        };
        Ok(Self { sym, eig })
    }

    /// Caller guarantees `eig` decomposes `sym` with positive eigenvalues.
    fn from_parts_unchecked(sym: SymMatrix<T>, eig: SymEigen<T>) -> Self {
        Self { sym, eig }
    }

    /// Spectral function `V diag(f(λ)) Vᵀ`; `f` must map positives to positives.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> Self {
        let values: Vec<T> = self.eig.values.iter().map(|&l| f(l)).collect();
        let eig = SymEigen {
            values,
            vectors: self.eig.vectors.clone(),
        };
        let sym = SymMatrix::symmetrize(&eig.reconstruct());
        // f need not be monotone; keep the ascending-order contract.
        let mut order: Vec<usize> = (0..eig.values.len()).collect();
        order.sort_by(|&i, &j| {
            eig.values[i]
                .partial_cmp(&eig.values[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let n = order.len();
        let eig = SymEigen {
            values: order.iter().map(|&k| eig.values[k]).collect(),
            vectors: Matrix::from_fn(n, n, |i, j| eig.vectors[(i, order[j])]),
        };
        Self::from_parts_unchecked(sym, eig)
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix<T> {
        &self.sym
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        self.sym.as_matrix()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.sym.get(i, j)
    }

    pub fn eigen(&self) -> &SymEigen<T> {
        &self.eig
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eig.values[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eig.values[self.eig.values.len() - 1]
    }

    pub fn sqrt(&self) -> Self {
        self.map_spectrum(|l| l.sqrt())
    }

    pub fn inverse(&self) -> Self {
        self.map_spectrum(|l| l.recip())
    }

    pub fn inv_sqrt(&self) -> Self {
        self.map_spectrum(|l| l.sqrt().recip())
    }

    pub fn scale(&self, c: T) -> Self {
        assert!(c > T::zero(), "SPD matrices scale by positive factors only");
        self.map_spectrum(|l| l * c)
    }

    pub fn trace(&self) -> T {
        self.sym.trace()
    }

    pub fn log_det(&self) -> T {
        self.eig.values.iter().map(|l| l.ln()).sum()
    }

    /// Solves `C Σ + Σ C = R` for symmetric `C` (Σ = `self`).
    pub fn solve_sym_lyapunov(&self, r: &SymMatrix<T>) -> SymMatrix<T> {
        let v = &self.eig.vectors;
        let lam = &self.eig.values;
        let rt = &(&v.transpose() * r.as_matrix()) * v;
        let n = self.dim();
        let ct = Matrix::from_fn(n, n, |i, j| rt[(i, j)] / (lam[i] + lam[j]));
        SymMatrix::symmetrize(&(&(v * &ct) * &v.transpose()))
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of an SPD matrix.
pub fn spd_eigen<T: Scalar>(m: &SpdMatrix<T>) -> (Vec<T>, Matrix<T>) {
    let e = m.eigen();
    (e.values.clone(), e.vectors.clone())
}

/// Principal (SPD) square root.
pub fn spd_sqrt<T: Scalar>(m: &SpdMatrix<T>) -> SpdMatrix<T> {
    m.sqrt()
}

/// Symmetric solution of `C Σ + Σ C = R`, solved in the eigenbasis of `Σ`.
pub fn spd_solve_sym_lyapunov<T: Scalar>(sigma: &SpdMatrix<T>, r: &SymMatrix<T>) -> SymMatrix<T> {
    sigma.solve_sym_lyapunov(r)
}

/// `‖A − B‖_F / ‖B‖_F`.
pub fn relative_frobenius<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    (a - b).frobenius_norm() / b.frobenius_norm()
}
