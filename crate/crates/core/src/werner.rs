//! Werner states on `C^d ⊗ C^d` and the direct operator evaluation of the
//! distillability test form, which every other formulation is checked against.
//!
//! Product basis `|i, j>` (Alice `i`, Bob `j`) sits at index `i * d + j`.
//! For two copies the basis `|i, j>|a, b>` sits at `((i * d + j) * d + a) * d + b`,
//! with Alice holding `(i, a)` and Bob holding `(j, b)`.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, kron, quadratic_form, CMatrix, CVector, FormValue, ONE, ZERO};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerFamily {
    pub d: usize,
    pub t: f64,
}

impl WernerFamily {
    pub fn new(d: usize, t: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [-1, 1]")));
        }
        Ok(WernerFamily { d, t })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WernerClass {
    Separable,
    NptNotOneDistillable,
    OneDistillable,
}

/// A possibly unnormalized vector on `k` copies of `C^d ⊗ C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVector {
    pub copies: usize,
    pub d: usize,
    pub amplitudes: CVector,
}

impl PureStateVector {
    pub fn new(copies: usize, d: usize, amplitudes: CVector) -> Result<Self> {
        let expected = d.pow(2 * copies as u32);
        if copies == 0 || amplitudes.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{copies}-copy state for d = {d} needs {expected} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        Ok(PureStateVector {
            copies,
            d,
            amplitudes,
        })
    }

    /// Single-copy product basis vector `|i, j>` (zero-based).
    pub fn product_basis(d: usize, i: usize, j: usize) -> Self {
        let mut a = CVector::zeros(d * d);
        a[i * d + j] = ONE;
        PureStateVector {
            copies: 1,
            d,
            amplitudes: a,
        }
    }

    /// Normalized maximally entangled vector `(1/sqrt d) sum_i |i, i>`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut a = CVector::zeros(d * d);
        let w = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            a[i * d + i] = c(w, 0.0);
        }
        PureStateVector {
            copies: 1,
            d,
            amplitudes: a,
        }
    }

    /// Single-copy vector `x ⊗ u + y ⊗ v` for `x, y` on Alice and `u, v` on Bob.
    pub fn one_copy_rank2(x: &CVector, u: &CVector, y: &CVector, v: &CVector) -> Result<Self> {
        let d = x.len();
        if u.len() != d || y.len() != d || v.len() != d {
            return Err(Error::DimensionMismatch("vectors must share the dimension d".into()));
        }
        let a = CVector::from_fn(d * d, |k, _| {
            let (i, j) = (k / d, k % d);
            x[i] * u[j] + y[i] * v[j]
        });
        Ok(PureStateVector {
            copies: 1,
            d,
            amplitudes: a,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

/// `F = sum_{i,j} |i, j><j, i|`.
pub fn flip_operator(d: usize) -> CMatrix {
    let mut f = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(i * d + j, j * d + i)] = ONE;
        }
    }
    f
}

/// `P = (1/d) sum_{i,j} |i, i><j, j|`.
pub fn me_projector(d: usize) -> CMatrix {
    let mut p = CMatrix::zeros(d * d, d * d);
    let w = c(1.0 / d as f64, 0.0);
    for i in 0..d {
        for j in 0..d {
            p[(i * d + i, j * d + j)] = w;
        }
    }
    p
}

/// Transpose on Bob's factor: `<i, j|M'|r, s> = <i, s|M|r, j>`.
pub fn partial_transpose(m: &CMatrix, d: usize) -> Result<CMatrix> {
    let n = d * d;
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "partial transpose needs a {n}x{n} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / d, row % d);
        let (r, s) = (col / d, col % d);
        m[(i * d + s, r * d + j)]
    }))
}

/// `(rho, sigma) = (1 - tF, 1 - t d P)`.
pub fn werner_pair(fam: WernerFamily) -> (CMatrix, CMatrix) {
    let d = fam.d;
    let id = identity(d * d);
    let rho = &id - flip_operator(d) * c(fam.t, 0.0);
    let sigma = &id - me_projector(d) * c(fam.t * d as f64, 0.0);
    (rho, sigma)
}

/// Separable for `t <= 1/d`, one-distillable for `t > 1/2`, otherwise NPT but
/// not one-distillable. Both boundary points belong to the lower class.
pub fn classify(fam: WernerFamily) -> WernerClass {
    if fam.t <= 1.0 / fam.d as f64 {
        WernerClass::Separable
    } else if fam.t > 0.5 {
        WernerClass::OneDistillable
    } else {
        WernerClass::NptNotOneDistillable
    }
}

/// `<psi| sigma^{⊗k} |psi>` by explicit construction of the tensor power.
pub fn eval_sigma_form(psi: &PureStateVector, fam: WernerFamily, k: usize) -> Result<FormValue> {
    if k == 0 || k > 2 {
        return Err(Error::UnsupportedCopies(k));
    }
    if psi.copies != k || psi.d != fam.d {
        return Err(Error::DimensionMismatch(format!(
            "state has {} copies of d = {}, form expects {k} copies of d = {}",
            psi.copies, psi.d, fam.d
        )));
    }
    let (_, sigma) = werner_pair(fam);
    let op = if k == 1 { sigma } else { kron(&sigma, &sigma) };
    Ok(quadratic_form(&op, &psi.amplitudes))
}

/// True when the imaginary part of a form value stays within
/// `1e-10 ||psi||^2 ||sigma||^k`.
pub fn form_is_healthy(v: &FormValue, psi: &PureStateVector, fam: WernerFamily) -> bool {
    let (_, sigma) = werner_pair(fam);
    let s = crate::linalg::frobenius(&sigma).powi(psi.copies as i32);
    v.imag_residual <= 1e-10 * psi.norm_sqr().max(1.0) * s
}

/// Coefficient matrix across the Alice|Bob split of all copies.
pub fn coefficient_matrix(psi: &PureStateVector) -> CMatrix {
    let d = psi.d;
    let k = psi.copies;
    let side = d.pow(k as u32);
    let mut m = CMatrix::zeros(side, side);
    for (idx, amp) in psi.amplitudes.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        // Digits of idx in base d, most significant first: i1 j1 i2 j2 ...
        let mut digits = vec![0usize; 2 * k];
        let mut rest = idx;
        for slot in digits.iter_mut().rev() {
            *slot = rest % d;
            rest /= d;
        }
        let (mut row, mut col) = (0, 0);
        for copy in 0..k {
            row = row * d + digits[2 * copy];
            col = col * d + digits[2 * copy + 1];
        }
        m[(row, col)] = *amp;
    }
    m
}

pub fn schmidt_rank(psi: &PureStateVector) -> usize {
    let m = coefficient_matrix(psi);
    let sv = SVD::new(m, false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Two-copy vector `psi_1 + psi_2` with `psi_1 = sum_{i,j} |i, j, x_i, u_j>` and
/// `psi_2 = sum_{i,j} |i, j, y_i, v_j>`, where `x_i` is column `i` of `x`.
pub fn rank2_vector(x: &CMatrix, u: &CMatrix, y: &CMatrix, v: &CMatrix) -> Result<PureStateVector> {
    let d = x.nrows();
    for m in [x, u, y, v] {
        if m.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "rank-2 vector needs four {d}x{d} matrices, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let n = d * d * d * d;
    let mut amps = CVector::zeros(n);
    for i in 0..d {
        for j in 0..d {
            for a in 0..d {
                for b in 0..d {
                    amps[((i * d + j) * d + a) * d + b] = x[(a, i)] * u[(b, j)] + y[(a, i)] * v[(b, j)];
                }
            }
        }
    }
    PureStateVector::new(2, d, amps)
}
