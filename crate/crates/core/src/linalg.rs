//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are [`nalgebra::DMatrix`] over [`Complex64`]. Indices are
//! zero-based; the column-stacking operator [`vec_col`] places entry
//! `(i, j)` of a `d x d` matrix at position `j * d + i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERM_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITERS: usize = 10_000;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Diagonal matrix with the given (real) entries.
pub fn diag_real(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| c(x, 0.0)),
    ))
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

/// Builds a matrix from real row-major nested rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

/// Kronecker product `A ⊗ B = [a_ij B]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(a.nrows() * br, a.ncols() * bc);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for l in 0..bc {
                for k in 0..br {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column stacking: the columns of `z` one below the other.
pub fn vec_col(z: &CMatrix) -> CVector {
    // nalgebra storage is column-major, which is exactly the stacking order.
    CVector::from_column_slice(z.as_slice())
}

/// Inverse of [`vec_col`].
pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot be reshaped to {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_sqr(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `max(1, ||m||_F)`, the reference magnitude for relative tolerances.
pub fn scale_of(m: &CMatrix) -> f64 {
    frobenius(m).max(1.0)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(A^H B)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Entrywise complex conjugate.
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

pub fn require_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Checks `||A^H A - I||_F <= tol * n`.
pub fn require_unitary(a: &CMatrix, tol: f64) -> Result<()> {
    let n = require_square(a, "unitary")?;
    let dev = frobenius(&(a.adjoint() * a - identity(n)));
    if dev > tol * n.max(1) as f64 {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Validates Hermiticity and returns the symmetrized copy `(M + M^H)/2`.
fn symmetrized(m: &CMatrix) -> Result<CMatrix> {
    require_square(m, "Hermitian input")?;
    let residual = hermitian_residual(m);
    let bound = HERM_TOL * scale_of(m);
    if residual > bound {
        return Err(Error::NotHermitian { residual, bound });
    }
    Ok((m + m.adjoint()) * c(0.5, 0.0))
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl EigenResult {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_vector(&self) -> CVector {
        self.eigenvectors.column(0).into_owned()
    }
}

pub fn hermitian_eig(m: &CMatrix) -> Result<EigenResult> {
    let n = m.nrows();
    let sym = symmetrized(m)?;
    if n == 0 {
        return Ok(EigenResult {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(sym, EIG_EPS, EIG_MAX_ITERS).ok_or(Error::NoConvergence(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending. Cheaper than [`hermitian_eig`].
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    let sym = symmetrized(m)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let eig = SymmetricEigen::try_new(sym, EIG_EPS, EIG_MAX_ITERS).ok_or(Error::NoConvergence(n))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub lambda_min: f64,
}

/// PSD iff `lambda_min >= -tol * max(1, ||M||_F)`.
pub fn is_psd(m: &CMatrix, tol: f64) -> Result<PsdReport> {
    let lambda_min = min_eigenvalue(m)?;
    Ok(PsdReport {
        is_psd: lambda_min >= -tol * scale_of(m),
        lambda_min,
    })
}

/// Determinant of a Hermitian matrix as the product of its eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianDet {
    /// Plain product; may overflow to infinity for large orders.
    pub value: f64,
    /// `ln |det|`, `-inf` when an eigenvalue is exactly zero.
    pub log_abs: f64,
    pub sign: i8,
}

pub fn det_hermitian(m: &CMatrix) -> Result<HermitianDet> {
    Ok(det_from_eigenvalues(&hermitian_eigenvalues(m)?))
}

pub fn det_from_eigenvalues(values: &[f64]) -> HermitianDet {
    let mut value = 1.0;
    let mut log_abs = 0.0;
    let mut sign: i8 = 1;
    for &l in values {
        value *= l;
        if l == 0.0 {
            sign = 0;
        } else if l < 0.0 {
            sign = -sign;
        }
        log_abs += l.abs().ln();
    }
    HermitianDet {
        value,
        log_abs,
        sign,
    }
}

/// Hermitian quadratic form evaluation `v^H M v`, with the imaginary part
/// kept as a health check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub value: f64,
    pub imag_residual: f64,
}

pub fn quadratic_form(m: &CMatrix, v: &CVector) -> FormValue {
    let z = v.dotc(&(m * v));
    FormValue {
        value: z.re,
        imag_residual: z.im.abs(),
    }
}

/// Principal submatrix on the given (zero-based) index list, in list order.
pub fn principal_submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// `P M P^T` for the permutation sending position `k` to `perm[k]`, i.e.
/// `(P M P^T)[a, b] = M[perm[a], perm[b]]`.
pub fn permute_symmetric(m: &CMatrix, perm: &[usize]) -> CMatrix {
    principal_submatrix(m, perm)
}

/// Orthonormal basis of the column span of `cols` by modified Gram-Schmidt;
/// columns whose residual falls below `tol` times their original norm are
/// dropped.
pub fn orthonormalize(cols: &[CVector], tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(cols.len());
    for col in cols {
        let norm0 = col.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > tol * norm0 {
            basis.push(v / c(norm, 0.0));
        }
    }
    basis
}
