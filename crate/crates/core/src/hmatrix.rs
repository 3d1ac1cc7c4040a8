//! The matrix `H(X, Y)` of Φ viewed as a hermitian quadratic form in the
//! stacked entries `[vec U; vec V]`, so that `Φ = z^H H(X, Y) z`.
//!
//! `H = H1 - (H2 + H3)/2 + H4/4` with
//!
//! ```text
//! H1 = [[||X||^2, tr(X^H Y)], [tr(Y^H X), ||Y||^2]] ⊗ I_{d^2}
//! H2 = [[X^H X, X^H Y], [Y^H X, Y^H Y]] ⊗ I_d
//! H3 = [[I_d ⊗ X* X^T, I_d ⊗ X* Y^T], [I_d ⊗ Y* X^T, I_d ⊗ Y* Y^T]]
//! H4 = [vec X*; vec Y*] [vec X^T, vec Y^T]
//! ```
//!
//! Under column stacking `z^H H2 z` reproduces Φ3 (`||U X^T + V Y^T||^2`) and
//! `z^H H3 z` reproduces Φ2 (`||X^T U + Y^T V||^2`); only their sum enters `H`.

use num_complex::Complex64;
use serde::Serialize;

use crate::biquadratic::{phi_matrix, MatrixQuadruple};
use crate::error::{Error, Result};
use crate::linalg::{
    c, conj, frobenius, frobenius_sqr, hermitian_eigenvalues, identity, inner, kron, principal_submatrix,
    quadratic_form, require_unitary, scale_of, unvec, vec_col, CMatrix, CVector, FormValue, I, ONE,
};

/// Numerical PSD tolerance for `H`, relative to `||H||_F`.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct HForm {
    pub d: usize,
    pub x: CMatrix,
    pub y: CMatrix,
    pub h: CMatrix,
    /// `H1, H2, H3, H4`.
    pub components: [CMatrix; 4],
}

impl HForm {
    pub fn order(&self) -> usize {
        2 * self.d * self.d
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.h)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.h)?[0])
    }
}

fn block2(a: &CMatrix, b: &CMatrix, cc: &CMatrix, d: &CMatrix) -> CMatrix {
    let (r, k) = a.shape();
    let mut m = CMatrix::zeros(2 * r, 2 * k);
    m.view_mut((0, 0), (r, k)).copy_from(a);
    m.view_mut((0, k), (r, k)).copy_from(b);
    m.view_mut((r, 0), (r, k)).copy_from(cc);
    m.view_mut((r, k), (r, k)).copy_from(d);
    m
}

fn require_pair(x: &CMatrix, y: &CMatrix) -> Result<usize> {
    let d = x.nrows();
    if d == 0 || x.shape() != (d, d) || y.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "X and Y must be square of equal order, got {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    Ok(d)
}

pub fn build_h(x: &CMatrix, y: &CMatrix) -> Result<HForm> {
    let d = require_pair(x, y)?;
    let id_d = identity(d);
    let id_d2 = identity(d * d);

    let gram = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(frobenius_sqr(x), 0.0),
            inner(x, y),
            inner(y, x),
            c(frobenius_sqr(y), 0.0),
        ],
    );
    let h1 = kron(&gram, &id_d2);

    let (xa, ya) = (x.adjoint(), y.adjoint());
    let h2 = kron(&block2(&(&xa * x), &(&xa * y), &(&ya * x), &(&ya * y)), &id_d);

    let (xc, yc) = (conj(x), conj(y));
    let (xt, yt) = (x.transpose(), y.transpose());
    let h3 = block2(
        &kron(&id_d, &(&xc * &xt)),
        &kron(&id_d, &(&xc * &yt)),
        &kron(&id_d, &(&yc * &xt)),
        &kron(&id_d, &(&yc * &yt)),
    );

    let mut w = CVector::zeros(2 * d * d);
    w.rows_mut(0, d * d).copy_from(&vec_col(x));
    w.rows_mut(d * d, d * d).copy_from(&vec_col(y));
    let h4 = w.conjugate() * w.transpose();

    let h = &h1 - (&h2 + &h3) * c(0.5, 0.0) + &h4 * c(0.25, 0.0);
    Ok(HForm {
        d,
        x: x.clone(),
        y: y.clone(),
        h,
        components: [h1, h2, h3, h4],
    })
}

/// `[vec U; vec V]`.
pub fn stack(u: &CMatrix, v: &CMatrix) -> CVector {
    let n = u.len();
    let mut z = CVector::zeros(2 * n);
    z.rows_mut(0, n).copy_from(&vec_col(u));
    z.rows_mut(n, n).copy_from(&vec_col(v));
    z
}

/// Inverse of [`stack`] for `d x d` blocks.
pub fn unstack(z: &CVector, d: usize) -> Result<(CMatrix, CMatrix)> {
    let n = d * d;
    if z.len() != 2 * n {
        return Err(Error::DimensionMismatch(format!("stacked vector of length {} for d = {d}", z.len())));
    }
    Ok((unvec(&z.as_slice()[..n], d, d)?, unvec(&z.as_slice()[n..], d, d)?))
}

/// `[vec U; vec V]^H H(X, Y) [vec U; vec V]`.
pub fn quadratic_eval(h: &HForm, u: &CMatrix, v: &CMatrix) -> Result<FormValue> {
    if u.shape() != (h.d, h.d) || v.shape() != (h.d, h.d) {
        return Err(Error::DimensionMismatch(format!("U and V must be {0}x{0}", h.d)));
    }
    Ok(quadratic_form(&h.h, &stack(u, v)))
}

/// Matrix of a hermitian form on `C^n` recovered by polarization. Off-diagonal
/// entries come from `q(e_p + e_q)` and `q(e_p + i e_q)`.
pub fn polarize(n: usize, mut q: impl FnMut(&CVector) -> f64) -> CMatrix {
    let mut g = CMatrix::zeros(n, n);
    let mut e = CVector::zeros(n);
    let mut diag = vec![0.0; n];
    for (p, slot) in diag.iter_mut().enumerate() {
        e[p] = ONE;
        *slot = q(&e);
        e[p] = Complex64::default();
        g[(p, p)] = c(*slot, 0.0);
    }
    for p in 0..n {
        for r in (p + 1)..n {
            e[p] = ONE;
            e[r] = ONE;
            let re = 0.5 * (q(&e) - diag[p] - diag[r]);
            e[r] = I;
            let im = -0.5 * (q(&e) - diag[p] - diag[r]);
            e[p] = Complex64::default();
            e[r] = Complex64::default();
            g[(p, r)] = c(re, im);
            g[(r, p)] = c(re, -im);
        }
    }
    g
}

/// `G(U, V)` with `Φ(X, Y, U, V) = [vec X; vec Y]^H G(U, V) [vec X; vec Y]`,
/// built by polarization of [`phi_matrix`].
pub fn build_g_polarized(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let d = require_pair(u, v)?;
    let n = d * d;
    let mut q = MatrixQuadruple {
        x: CMatrix::zeros(d, d),
        y: CMatrix::zeros(d, d),
        u: u.clone(),
        v: v.clone(),
    };
    Ok(polarize(2 * n, |w| {
        q.x.copy_from_slice(&w.as_slice()[..n]);
        q.y.copy_from_slice(&w.as_slice()[n..]);
        phi_matrix(&q).phi
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceReport {
    /// Relative residual for `H`.
    pub h: f64,
    /// Relative residuals for `H1..H4`.
    pub components: [f64; 4],
}

impl CovarianceReport {
    pub fn max(&self) -> f64 {
        self.components.iter().copied().fold(self.h, f64::max)
    }
}

fn congruence_residuals(lhs: &HForm, base: &HForm, left: &CMatrix, right: &CMatrix) -> CovarianceReport {
    let rel = |a: &CMatrix, b: &CMatrix| frobenius(&(a - left * b * right)) / scale_of(b);
    CovarianceReport {
        h: rel(&lhs.h, &base.h),
        components: std::array::from_fn(|k| rel(&lhs.components[k], &base.components[k])),
    }
}

/// Residual of `H(AXB, AYB) = (I2 ⊗ B^H ⊗ A*) H(X, Y) (I2 ⊗ B ⊗ A^T)`,
/// for `H` and each component.
pub fn check_transform_ab(x: &CMatrix, y: &CMatrix, a: &CMatrix, b: &CMatrix) -> Result<CovarianceReport> {
    let d = require_pair(x, y)?;
    if a.shape() != (d, d) || b.shape() != (d, d) {
        return Err(Error::DimensionMismatch("A and B must be d x d".into()));
    }
    require_unitary(a, 1e-10)?;
    require_unitary(b, 1e-10)?;
    let base = build_h(x, y)?;
    let moved = build_h(&(a * x * b), &(a * y * b))?;
    let right = kron(&identity(2), &kron(b, &a.transpose()));
    let left = right.adjoint();
    Ok(congruence_residuals(&moved, &base, &left, &right))
}

/// Entries of a mixing matrix `Λ = [[α, β], [γ, δ]]` acting on `(X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoebiusParam {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl MoebiusParam {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Self {
        MoebiusParam {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    pub fn real(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self::new(c(alpha, 0.0), c(beta, 0.0), c(gamma, 0.0), c(delta, 0.0))
    }

    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> Complex64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[self.alpha, self.beta, self.gamma, self.delta])
    }

    pub fn max_entry(&self) -> f64 {
        [self.alpha, self.beta, self.gamma, self.delta]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_singular(&self) -> bool {
        self.det().norm() < 1e-12 * self.max_entry().powi(2)
    }

    /// `(αX + βY, γX + δY)`.
    pub fn apply(&self, x: &CMatrix, y: &CMatrix) -> (CMatrix, CMatrix) {
        (x * self.alpha + y * self.beta, x * self.gamma + y * self.delta)
    }
}

/// Residual of `H(αX + βY, γX + δY) = (Λ* ⊗ I) H(X, Y) (Λ^T ⊗ I)`.
pub fn check_transform_lambda(x: &CMatrix, y: &CMatrix, lam: &MoebiusParam) -> Result<CovarianceReport> {
    let d = require_pair(x, y)?;
    if lam.is_singular() {
        return Err(Error::SingularLambda(lam.det().norm()));
    }
    let base = build_h(x, y)?;
    let (x2, y2) = lam.apply(x, y);
    let moved = build_h(&x2, &y2)?;
    let id = identity(d * d);
    let l = lam.matrix();
    let left = kron(&conj(&l), &id);
    let right = kron(&l.transpose(), &id);
    Ok(congruence_residuals(&moved, &base, &left, &right))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalBlocksReport {
    pub upper_psd: bool,
    pub lower_psd: bool,
    pub upper_min: f64,
    pub lower_min: f64,
}

/// PSD test of the two `d^2 x d^2` diagonal blocks of `H` at `1e-10 ||H||`.
pub fn diagonal_blocks_psd(h: &HForm) -> Result<DiagonalBlocksReport> {
    let n = h.d * h.d;
    let upper: Vec<usize> = (0..n).collect();
    let lower: Vec<usize> = (n..2 * n).collect();
    let upper_min = hermitian_eigenvalues(&principal_submatrix(&h.h, &upper))?[0];
    let lower_min = hermitian_eigenvalues(&principal_submatrix(&h.h, &lower))?[0];
    let tol = 1e-10 * scale_of(&h.h);
    Ok(DiagonalBlocksReport {
        upper_psd: upper_min >= -tol,
        lower_psd: lower_min >= -tol,
        upper_min,
        lower_min,
    })
}

/// Smallest eigenvalue of the leading principal submatrix of the given order.
pub fn leading_minor_check(h: &HForm, order: usize) -> Result<f64> {
    if order == 0 || order > h.order() {
        return Err(Error::IndexError(format!("order {order} outside 1..={}", h.order())));
    }
    let idx: Vec<usize> = (0..order).collect();
    Ok(hermitian_eigenvalues(&principal_submatrix(&h.h, &idx))?[0])
}
