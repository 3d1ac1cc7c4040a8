//! The hermitian biquadratic form `Φ(X, Y, U, V) = <psi| σ_W^{⊗2} |psi>` at
//! `t = 1/2`, split as `Φ = Φ1 - (Φ2 + Φ3)/2 + Φ4/4`.
//!
//! [`phi_vector`] sums over the columns `x_i, y_i, u_j, v_j` and
//! [`phi_matrix`] uses matrix norms and traces. [`phi_oracle`] builds the
//! explicit two-copy operator. Inner products are
//! conjugate-linear in the first argument and `u*` is the entrywise
//! conjugate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sqr, kron, require_unitary, trace, CMatrix, CVector};
use crate::werner::{eval_sigma_form, rank2_vector, WernerFamily};

/// Largest `d` accepted by [`phi_oracle`]; the operator has order `d^4`.
pub const ORACLE_MAX_D: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixQuadruple {
    pub x: CMatrix,
    pub y: CMatrix,
    pub u: CMatrix,
    pub v: CMatrix,
}

impl MatrixQuadruple {
    pub fn new(x: CMatrix, y: CMatrix, u: CMatrix, v: CMatrix) -> Result<Self> {
        let d = x.nrows();
        if d == 0 {
            return Err(Error::DimensionMismatch("quadruple matrices must be non-empty".into()));
        }
        for (name, m) in [("X", &x), ("Y", &y), ("U", &u), ("V", &v)] {
            if m.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(MatrixQuadruple { x, y, u, v })
    }

    pub fn zeros(d: usize) -> Self {
        let z = CMatrix::zeros(d, d);
        MatrixQuadruple {
            x: z.clone(),
            y: z.clone(),
            u: z.clone(),
            v: z,
        }
    }

    pub fn d(&self) -> usize {
        self.x.nrows()
    }

    /// `(||X||^2 + ||Y||^2)(||U||^2 + ||V||^2)`, the natural magnitude of Φ.
    pub fn scale(&self) -> f64 {
        (frobenius_sqr(&self.x) + frobenius_sqr(&self.y)) * (frobenius_sqr(&self.u) + frobenius_sqr(&self.v))
    }

    /// The quadruple with the roles of `(X, Y)` and `(U, V)` exchanged.
    pub fn swapped(&self) -> Self {
        MatrixQuadruple {
            x: self.u.clone(),
            y: self.v.clone(),
            u: self.x.clone(),
            v: self.y.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiBreakdown {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
    pub phi: f64,
}

impl PhiBreakdown {
    pub fn from_parts(phi1: f64, phi2: f64, phi3: f64, phi4: f64) -> Self {
        PhiBreakdown {
            phi1,
            phi2,
            phi3,
            phi4,
            phi: phi1 - 0.5 * (phi2 + phi3) + 0.25 * phi4,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.phi1, self.phi2, self.phi3, self.phi4]
    }
}

fn columns(m: &CMatrix) -> Vec<CVector> {
    m.column_iter().map(|c| c.into_owned()).collect()
}

/// Φ1..Φ4 by the closed-form sums over columns.
pub fn phi_vector(q: &MatrixQuadruple) -> PhiBreakdown {
    let d = q.d();
    let (x, y, u, v) = (columns(&q.x), columns(&q.y), columns(&q.u), columns(&q.v));
    let ip = |a: &CVector, b: &CVector| a.dotc(b);
    // <a|b*> = sum_k conj(a_k) conj(b_k)
    let ip_conj = |a: &CVector, b: &CVector| a.dotc(&b.conjugate());

    let sum = |f: &dyn Fn(usize) -> Complex64| (0..d).map(f).sum::<Complex64>();
    let sum2 = |f: &dyn Fn(usize, usize) -> Complex64| {
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| f(i, j)).sum::<Complex64>()
    };

    let nx = sum(&|i| ip(&x[i], &x[i]));
    let ny = sum(&|i| ip(&y[i], &y[i]));
    let nu = sum(&|j| ip(&u[j], &u[j]));
    let nv = sum(&|j| ip(&v[j], &v[j]));
    let xy = sum(&|i| ip(&x[i], &y[i]));
    let uv = sum(&|j| ip(&u[j], &v[j]));
    let yx = sum(&|i| ip(&y[i], &x[i]));
    let vu = sum(&|j| ip(&v[j], &u[j]));
    let phi1 = nx * nu + xy * uv + yx * vu + ny * nv;

    let a = |i: usize, j: usize| ip_conj(&x[i], &u[j]);
    let b = |i: usize, j: usize| ip_conj(&y[i], &v[j]);
    let phi2 = sum2(&|i, j| a(i, j) * a(i, j).conj())
        + sum2(&|i, j| a(i, j) * b(i, j).conj())
        + sum2(&|i, j| b(i, j) * a(i, j).conj())
        + sum2(&|i, j| b(i, j) * b(i, j).conj());

    let phi3 = sum2(&|i, j| ip(&x[i], &x[j]) * ip(&u[i], &u[j]))
        + sum2(&|i, j| ip(&x[i], &y[j]) * ip(&u[i], &v[j]))
        + sum2(&|i, j| ip(&y[j], &x[i]) * ip(&v[j], &u[i]))
        + sum2(&|i, j| ip(&y[i], &y[j]) * ip(&v[i], &v[j]));

    // The squared modulus applies to the whole diagonal sum.
    let sx = sum(&|i| a(i, i));
    let sy = sum(&|j| b(j, j));
    let phi4 = sx * sx.conj() + sx * sy.conj() + sx.conj() * sy + sy * sy.conj();

    PhiBreakdown::from_parts(phi1.re, phi2.re, phi3.re, phi4.re)
}

/// Φ1..Φ4 through matrix norms:
/// `||X⊗U + Y⊗V||^2`, `||X^T U + Y^T V||^2`, `||U X^T + V Y^T||^2`,
/// `|tr(X^T U + Y^T V)|^2`.
pub fn phi_matrix(q: &MatrixQuadruple) -> PhiBreakdown {
    let (x, y, u, v) = (&q.x, &q.y, &q.u, &q.v);
    let phi1 = frobenius_sqr(&(kron(x, u) + kron(y, v)));
    let m2 = x.transpose() * u + y.transpose() * v;
    let phi2 = frobenius_sqr(&m2);
    let phi3 = frobenius_sqr(&(u * x.transpose() + v * y.transpose()));
    let phi4 = trace(&m2).norm_sqr();
    PhiBreakdown::from_parts(phi1, phi2, phi3, phi4)
}

/// Φ as `<psi| σ_W(1/2)^{⊗2} |psi>` with the operator built explicitly.
pub fn phi_oracle(q: &MatrixQuadruple) -> Result<f64> {
    let d = q.d();
    if d > ORACLE_MAX_D {
        return Err(Error::DimensionTooLarge { d, max: ORACLE_MAX_D });
    }
    let psi = rank2_vector(&q.x, &q.u, &q.y, &q.v)?;
    Ok(eval_sigma_form(&psi, WernerFamily { d, t: 0.5 }, 2)?.value)
}

/// Largest relative change of Φ and each Φk under
/// `(AX, AY, A*U, A*V)` and under `(XB, YB, UB*, VB*)`.
pub fn check_unitary_invariance(q: &MatrixQuadruple, a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let d = q.d();
    if a.shape() != (d, d) || b.shape() != (d, d) {
        return Err(Error::DimensionMismatch("A and B must be d x d".into()));
    }
    require_unitary(a, 1e-10)?;
    require_unitary(b, 1e-10)?;
    let a_conj = a.map(|z| z.conj());
    let b_conj = b.map(|z| z.conj());
    let left = MatrixQuadruple {
        x: a * &q.x,
        y: a * &q.y,
        u: &a_conj * &q.u,
        v: &a_conj * &q.v,
    };
    let right = MatrixQuadruple {
        x: &q.x * b,
        y: &q.y * b,
        u: &q.u * &b_conj,
        v: &q.v * &b_conj,
    };
    let base = phi_matrix(q);
    let rel = |new: f64, old: f64| (new - old).abs() / old.abs().max(1.0);
    let mut worst = 0.0f64;
    for t in [phi_matrix(&left), phi_matrix(&right)] {
        worst = worst.max(rel(t.phi, base.phi));
        for (n, o) in t.components().iter().zip(base.components()) {
            worst = worst.max(rel(*n, o));
        }
    }
    Ok(worst)
}

/// Maximum pairwise relative deviation between formulation values, relative
/// to `max(1, |Φ|, scale)`.
pub fn max_relative_spread(values: &[f64], scale: f64) -> f64 {
    let reference = values.iter().fold(scale.max(1.0), |m, v| m.max(v.abs()));
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / reference
}
