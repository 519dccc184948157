use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::affordance::{GraspParams, PARAM_DIM};
use crate::finetune::{rank_elites, Residual, SessionLog};

/// One elite episode: the residual that was executed and the context it was
/// executed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElitePair {
    pub residual: Residual,
    pub features: Vec<f64>,
    pub prior: GraspParams,
}

impl ElitePair {
    /// Features followed by the flattened prior.
    pub fn context(&self) -> Vec<f64> {
        context_vector(&self.features, &self.prior)
    }

    pub fn executed(&self) -> GraspParams {
        self.prior.offset(&self.residual.0)
    }
}

pub fn context_vector(features: &[f64], prior: &GraspParams) -> Vec<f64> {
    let mut c = features.to_vec();
    c.extend_from_slice(&prior.to_array());
    c
}

/// The `k` best episodes of a log, best first.
pub fn elites_from_log(log: &SessionLog, k: usize) -> Vec<ElitePair> {
    rank_elites(log, k)
        .into_iter()
        .map(|i| {
            let r = &log.records[i];
            ElitePair {
                residual: r.residual,
                features: r.features.clone(),
                prior: r.prior,
            }
        })
        .collect()
}

pub(crate) fn check_elites(elites: &[ElitePair]) -> Result<usize, PolicyError> {
    let first = elites.first().ok_or(PolicyError::EmptyElites)?;
    let dim = first.features.len();
    for e in elites {
        if e.features.len() != dim {
            return Err(PolicyError::DimensionMismatch {
                expected: dim,
                got: e.features.len(),
            });
        }
        if e.features.iter().any(|v| !v.is_finite())
            || !e.prior.is_finite()
            || e.residual.0.iter().any(|v| !v.is_finite())
        {
            return Err(PolicyError::InvalidInput("non-finite elite".into()));
        }
    }
    Ok(dim + PARAM_DIM)
}

/// Affine per-dimension rescaling `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Training-set statistics; near-constant columns are centered only.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let (mean, std) = crate::nn::column_stats(rows, 1e-6);
        Normalizer { mean, std }
    }

    pub fn scale_only(std: Vec<f64>) -> Self {
        Normalizer {
            mean: vec![0.0; std.len()],
            std,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizer_roundtrip() {
        let rows = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, -2.0]];
        let n = Normalizer::fit(&rows);
        assert_eq!(n.std[1], 1.0);
        for r in &rows {
            let back = n.invert(&n.apply(r));
            assert!(back.iter().zip(r).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        assert_eq!(n.apply(&rows[0]), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_elites() {
        assert!(matches!(check_elites(&[]), Err(PolicyError::EmptyElites)));
    }
}
