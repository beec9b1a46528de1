use crate::error::{dim_err, Error, Result};
use crate::linalg::DenseMatrix;

/// Per-coordinate min-max map onto `[0, 1]`; constant coordinates keep scale 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub scale: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits on the rows of `x` (one sample per row).
    pub fn fit(x: &DenseMatrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::InvalidArgument("cannot fit a scaler on zero samples".into()));
        }
        let d = x.cols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for s in 0..x.rows() {
            for (j, &v) in x.row(s).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let scale = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h > l { h - l } else { 1.0 })
            .collect();
        Ok(Self { min: lo, scale })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            min: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    fn check(&self, x: &DenseMatrix) -> Result<()> {
        if x.cols() != self.dim() {
            return dim_err(format!("scaler has {} coordinates, data {}", self.dim(), x.cols()));
        }
        Ok(())
    }

    pub fn transform(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        let mut out = x.clone();
        for s in 0..out.rows() {
            for (j, v) in out.row_mut(s).iter_mut().enumerate() {
                *v = (*v - self.min[j]) / self.scale[j];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        let mut out = x.clone();
        for s in 0..out.rows() {
            for (j, v) in out.row_mut(s).iter_mut().enumerate() {
                *v = *v * self.scale[j] + self.min[j];
            }
        }
        Ok(out)
    }
}
