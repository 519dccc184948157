use serde::{Deserialize, Serialize};

use super::AffordanceError;

/// Affine map from grid coordinates `(row, col)` to metric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMapping {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
}

impl Default for GridMapping {
    fn default() -> Self {
        GridMapping {
            origin: [0.0, 0.0],
            spacing: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major scores.
    pub values: Vec<f64>,
    #[serde(default)]
    pub mapping: GridMapping,
}

impl Heatmap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, AffordanceError> {
        let h = Heatmap {
            rows,
            cols,
            values,
            mapping: GridMapping::default(),
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), AffordanceError> {
        if self.rows == 0 || self.cols == 0 || self.values.len() != self.rows * self.cols {
            return Err(AffordanceError::InvalidInput(
                "heatmap shape mismatch".into(),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(AffordanceError::InvalidInput(
                "heatmap scores must be finite and non-negative".into(),
            ));
        }
        if !self.values.iter().any(|v| *v > 0.0) {
            return Err(AffordanceError::InvalidInput(
                "heatmap has no positive cell".into(),
            ));
        }
        Ok(())
    }

    pub fn to_metric(&self, grid: [f64; 2]) -> [f64; 2] {
        let m = &self.mapping;
        [
            m.origin[0] + m.spacing[0] * grid[0],
            m.origin[1] + m.spacing[1] * grid[1],
        ]
    }
}

/// Expected grid coordinate `(row, col)` under `softmax(scores / temperature)`.
pub fn spatial_softargmax(h: &Heatmap, temperature: f64) -> Result<[f64; 2], AffordanceError> {
    h.validate()?;
    softargmax_unchecked(h.rows, h.cols, &h.values, temperature)
}

/// Same expectation over arbitrary real scores (log-domain inputs allowed).
pub fn softargmax_unchecked(
    rows: usize,
    cols: usize,
    scores: &[f64],
    temperature: f64,
) -> Result<[f64; 2], AffordanceError> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(AffordanceError::InvalidInput(
            "temperature must be positive".into(),
        ));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut acc = [0.0; 2];
    for i in 0..rows {
        for j in 0..cols {
            let w = ((scores[i * cols + j] - max) / temperature).exp();
            total += w;
            acc[0] += w * i as f64;
            acc[1] += w * j as f64;
        }
    }
    Ok([acc[0] / total, acc[1] / total])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, cells: &[(usize, usize, f64)]) -> Heatmap {
        let mut v = vec![0.0; rows * cols];
        for &(i, j, s) in cells {
            v[i * cols + j] = s;
        }
        Heatmap::new(rows, cols, v).unwrap()
    }

    #[test]
    fn delta_heatmap_low_temperature() {
        let h = grid(12, 16, &[(4, 9, 1.0)]);
        let p = spatial_softargmax(&h, 1e-3).unwrap();
        assert!((p[0] - 4.0).abs() < 1e-6 && (p[1] - 9.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_heatmap_centers() {
        let h = Heatmap::new(11, 11, vec![0.5; 121]).unwrap();
        let p = spatial_softargmax(&h, 1.0).unwrap();
        assert!((p[0] - 5.0).abs() < 1e-12 && (p[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_peaks() {
        let h = grid(11, 11, &[(0, 0, 2.0), (10, 10, 2.0)]);
        for t in [1e-3, 0.1, 1.0, 50.0] {
            let p = spatial_softargmax(&h, t).unwrap();
            assert!((p[0] - 5.0).abs() < 1e-9 && (p[1] - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(Heatmap::new(2, 2, vec![0.0; 4]).is_err());
        assert!(Heatmap::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Heatmap::new(1, 2, vec![1.0, -1.0]).is_err());
        let h = grid(2, 2, &[(0, 0, 1.0)]);
        assert!(spatial_softargmax(&h, 0.0).is_err());
    }

    #[test]
    fn metric_mapping() {
        let mut h = grid(3, 3, &[(1, 1, 1.0)]);
        h.mapping = GridMapping {
            origin: [0.1, -0.2],
            spacing: [0.01, 0.02],
        };
        let m = h.to_metric([2.0, 5.0]);
        assert!((m[0] - 0.12).abs() < 1e-15 && (m[1] + 0.1).abs() < 1e-15);
    }
}
