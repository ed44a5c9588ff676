use nalgebra::{DMatrix, SVD};
use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Orthogonal map `W*` minimising `‖B·W − A‖_F`, with the attained residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcrustesSolution {
    pub rotation: Array2<f64>,
    pub residual: f64,
}

impl ProcrustesSolution {
    /// `‖WᵀW − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let gram = self.rotation.t().dot(&self.rotation);
        let mut err = 0.0;
        for ((i, j), v) in gram.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            err += (v - target).powi(2);
        }
        err.sqrt()
    }
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves the orthogonal Procrustes problem for index-matched rows of `a`
/// and `b`: with `BᵀA = UΣVᵀ`, `W* = UVᵀ`.
pub fn solve_procrustes(a: &Array2<f64>, b: &Array2<f64>) -> Result<ProcrustesSolution> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Procrustes input"));
    }
    let d = a.ncols();
    let cross = b.t().dot(a);
    let m = DMatrix::from_fn(d, d, |i, j| cross[[i, j]]);
    let svd = SVD::try_new(m, true, true, f64::EPSILON, 0).ok_or(Error::Svd)?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Svd),
    };
    let w = u * v_t;
    let rotation = Array2::from_shape_fn((d, d), |(i, j)| w[(i, j)]);
    let residual = frobenius(&(b.dot(&rotation) - a));
    if !residual.is_finite() {
        return Err(Error::NonFinite("Procrustes solution"));
    }
    Ok(ProcrustesSolution { rotation, residual })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessOptions {
    /// Normalise rows again after centering.
    pub renormalize: bool,
}

/// Scales every row to unit length, then shifts each column to zero mean.
/// Column means are taken over `center_rows` (all rows when `None`) and
/// subtracted from every row.
///
/// All-zero rows among `center_rows` are an error carrying the row index;
/// all-zero rows outside it are left at zero.
pub fn preprocess_rows(
    matrix: &Array2<f64>,
    center_rows: Option<&[usize]>,
    options: PreprocessOptions,
) -> std::result::Result<Array2<f64>, usize> {
    let mut out = matrix.to_owned();
    let required: Vec<bool> = match center_rows {
        None => vec![true; out.nrows()],
        Some(rows) => {
            let mut mask = vec![false; out.nrows()];
            for &r in rows {
                mask[r] = true;
            }
            mask
        }
    };
    normalise_rows(&mut out, &required)?;
    let mean = match center_rows {
        None => out.mean_axis(Axis(0)),
        Some(rows) => out.select(Axis(0), rows).mean_axis(Axis(0)),
    };
    if let Some(mean) = mean {
        out -= &mean;
    }
    if options.renormalize {
        normalise_rows(&mut out, &required)?;
    }
    Ok(out)
}

fn normalise_rows(m: &mut Array2<f64>, required: &[bool]) -> std::result::Result<(), usize> {
    for (i, mut row) in m.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 {
            if required[i] {
                return Err(i);
            }
            continue;
        }
        row /= norm;
    }
    Ok(())
}

/// Unit-length rows followed by zero-mean columns over all rows.
pub fn preprocess(matrix: &Array2<f64>) -> Result<Array2<f64>> {
    preprocess_rows(matrix, None, PreprocessOptions::default())
        .map_err(|row| Error::ZeroVector(format!("row {row}")))
}
