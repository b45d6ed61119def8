//! Per-column scaling fitted on a training split and replayed at inference.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::math::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    /// Zero mean, unit variance.
    Standard,
    /// Training range mapped onto [0, 1]; values outside are clamped.
    MinMax,
    /// Standardized, then squashed onto (0, 1) by the logistic function.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub kind: ScaleKind,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(kind: ScaleKind, rows: ArrayView2<f64>) -> Scaler {
        let d = rows.ncols();
        let n = rows.nrows();
        let mut offset = vec![0.0; d];
        let mut scale = vec![1.0; d];
        if n > 0 {
            for (j, col) in rows.axis_iter(Axis(1)).enumerate() {
                let (o, s) = match kind {
                    ScaleKind::Standard | ScaleKind::Logistic => {
                        let mean = col.sum() / n as f64;
                        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
                        (mean, var.sqrt())
                    }
                    ScaleKind::MinMax => {
                        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        (lo, hi - lo)
                    }
                };
                offset[j] = o;
                scale[j] = if s > 0.0 { s } else { 1.0 };
            }
        }
        Scaler { kind, offset, scale }
    }

    /// Identity scaling over `d` columns.
    pub fn identity(kind: ScaleKind, d: usize) -> Scaler {
        Scaler { kind, offset: vec![0.0; d], scale: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn apply(&self, j: usize, x: f64) -> f64 {
        let z = (x - self.offset[j]) / self.scale[j];
        match self.kind {
            ScaleKind::Standard => z,
            ScaleKind::MinMax => z.clamp(0.0, 1.0),
            ScaleKind::Logistic => sigmoid(z),
        }
    }

    pub fn transform(&self, rows: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.dim(), rows.ncols())?;
        let mut out = rows.to_owned();
        for mut row in out.rows_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.apply(j, *x);
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, x: ArrayView1<f64>) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter().enumerate().map(|(j, &v)| self.apply(j, v)).collect())
    }
}
