//! JSON wire formats.
//!
//! Matrices: `{"rows": n, "cols": m, "re": [[..]], "im": [[..]]}` with
//! row-major nested arrays. Quadruples: `{"d": d, "X": .., "Y": .., "U": ..,
//! "V": ..}`.

use serde::{Deserialize, Serialize};

use crate::biquadratic::MatrixQuadruple;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let part = |f: fn(&num_complex::Complex64) -> f64| {
            (0..rows)
                .map(|i| (0..cols).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            rows,
            cols,
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<CMatrix> {
        let bad = |what: String| Err(Error::DimensionMismatch(what));
        if j.rows == 0 || j.cols == 0 {
            return bad(format!("matrix must be non-empty, got {}x{}", j.rows, j.cols));
        }
        for (name, part) in [("re", &j.re), ("im", &j.im)] {
            if part.len() != j.rows {
                return bad(format!("{name} has {} rows, expected {}", part.len(), j.rows));
            }
            if let Some(row) = part.iter().find(|row| row.len() != j.cols) {
                return bad(format!("{name} row has {} entries, expected {}", row.len(), j.cols));
            }
            if part.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} contains non-finite entries")));
            }
        }
        Ok(CMatrix::from_fn(j.rows, j.cols, |r, k| c(j.re[r][k], j.im[r][k])))
    }
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("matrix serialization is infallible")
}

pub fn matrix_from_json(s: &str) -> Result<CMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    CMatrix::try_from(&j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleJson {
    pub d: usize,
    #[serde(rename = "X")]
    pub x: MatrixJson,
    #[serde(rename = "Y")]
    pub y: MatrixJson,
    #[serde(rename = "U")]
    pub u: MatrixJson,
    #[serde(rename = "V")]
    pub v: MatrixJson,
}

impl From<&MatrixQuadruple> for QuadrupleJson {
    fn from(q: &MatrixQuadruple) -> Self {
        QuadrupleJson {
            d: q.d(),
            x: (&q.x).into(),
            y: (&q.y).into(),
            u: (&q.u).into(),
            v: (&q.v).into(),
        }
    }
}

impl TryFrom<&QuadrupleJson> for MatrixQuadruple {
    type Error = Error;

    fn try_from(j: &QuadrupleJson) -> Result<MatrixQuadruple> {
        let q = MatrixQuadruple::new(
            CMatrix::try_from(&j.x)?,
            CMatrix::try_from(&j.y)?,
            CMatrix::try_from(&j.u)?,
            CMatrix::try_from(&j.v)?,
        )?;
        if q.d() != j.d {
            return Err(Error::DimensionMismatch(format!(
                "quadruple declares d = {} but matrices are {}x{}",
                j.d,
                q.d(),
                q.d()
            )));
        }
        Ok(q)
    }
}
