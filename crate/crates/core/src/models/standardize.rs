use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Columns with a training spread below this are treated as constant.
const CONSTANT_STD: f64 = 1e-12;

/// Per-feature affine standardisation fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant feature.
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on the rows where `mask` is true; the mask must select at least one row.
    pub fn fit(features: &Array2<f64>, mask: &[bool]) -> Standardizer {
        let rows: Vec<usize> = (0..features.nrows()).filter(|&i| mask[i]).collect();
        let n = rows.len().max(1) as f64;
        let d = features.ncols();
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for j in 0..d {
            let m = rows.iter().map(|&i| features[[i, j]]).sum::<f64>() / n;
            let var = rows.iter().map(|&i| (features[[i, j]] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            std[j] = if var.sqrt() < CONSTANT_STD { 0.0 } else { var.sqrt() };
        }
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Constant features map to 0.
    pub fn apply(&self, features: &Array2<f64>) -> Array2<f64> {
        let mut out = features.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| if s == 0.0 { 0.0 } else { (v - m) / s });
        }
        out
    }
}
