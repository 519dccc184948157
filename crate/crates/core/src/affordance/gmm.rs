use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AffordanceError;

/// Lower bound on every diagonal variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Pixel coordinates, 2-D.
    Image,
    /// Workspace coordinates in meters, 3-D.
    Workspace,
}

impl Frame {
    pub fn dim(self) -> usize {
        match self {
            Frame::Image => 2,
            Frame::Workspace => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    pub frame: Frame,
    pub points: Vec<Vec<f64>>,
}

impl ContactSet {
    pub fn new(frame: Frame, points: Vec<Vec<f64>>) -> Result<Self, AffordanceError> {
        let set = ContactSet { frame, points };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), AffordanceError> {
        if self.points.is_empty() {
            return Err(AffordanceError::InvalidInput("contact set is empty".into()));
        }
        let dim = self.frame.dim();
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != dim || p.iter().any(|x| !x.is_finite()) {
                return Err(AffordanceError::InvalidInput(format!(
                    "point {i} must have {dim} finite coordinates"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GmmComponent {
    fn log_density(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((xi, m), v) in x.iter().zip(&self.mean).zip(&self.variance) {
            let d = xi - m;
            s += d * d / v + v.ln() + (2.0 * PI).ln();
        }
        self.weight.ln() - 0.5 * s
    }
}

/// Diagonal-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub frame: Frame,
    pub components: Vec<GmmComponent>,
}

/// A fitted model with its log-likelihood after initialization and after
/// each EM iteration.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    pub log_likelihood: Vec<f64>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl GmmModel {
    pub fn log_likelihood(&self, points: &[Vec<f64>]) -> f64 {
        let mut buf = vec![0.0; self.components.len()];
        points
            .iter()
            .map(|x| {
                for (b, c) in buf.iter_mut().zip(&self.components) {
                    *b = c.log_density(x);
                }
                log_sum_exp(&buf)
            })
            .sum()
    }

    /// Weighted mean of the component centers; the single contact point.
    pub fn contact_point(&self) -> Vec<f64> {
        let dim = self.frame.dim();
        let mut out = vec![0.0; dim];
        for c in &self.components {
            out.iter_mut()
                .zip(&c.mean)
                .for_each(|(o, m)| *o += c.weight * m);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centers.push(points[next].clone());
        let c = centers.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, c));
        }
    }
    centers
}

/// Fits a `k`-component mixture with EM from a k-means++ start.
///
/// Runs at most `iters` iterations and stops early once the log-likelihood
/// gain falls below `1e-12` relative.
pub fn fit_gmm(
    points: &ContactSet,
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<GmmFit, AffordanceError> {
    points.validate()?;
    if k == 0 {
        return Err(AffordanceError::InvalidInput("k must be at least 1".into()));
    }
    let data = &points.points;
    let n = data.len();
    if n < k {
        return Err(AffordanceError::InsufficientPoints { points: n, k });
    }
    let dim = points.frame.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mean_all: Vec<f64> = (0..dim)
        .map(|d| data.iter().map(|p| p[d]).sum::<f64>() / n as f64)
        .collect();
    let var_all: Vec<f64> = (0..dim)
        .map(|d| {
            let v = data
                .iter()
                .map(|p| (p[d] - mean_all[d]).powi(2))
                .sum::<f64>()
                / n as f64;
            v.max(VARIANCE_FLOOR)
        })
        .collect();
    let mut model = GmmModel {
        frame: points.frame,
        components: kmeans_plus_plus(data, k, &mut rng)
            .into_iter()
            .map(|mean| GmmComponent {
                weight: 1.0 / k as f64,
                mean,
                variance: var_all.clone(),
            })
            .collect(),
    };

    let mut trace = vec![model.log_likelihood(data)];
    let mut resp = vec![vec![0.0; k]; n];
    for _ in 0..iters {
        // E-step
        for (x, r) in data.iter().zip(resp.iter_mut()) {
            for (rk, c) in r.iter_mut().zip(&model.components) {
                *rk = c.log_density(x);
            }
            let norm = log_sum_exp(r);
            r.iter_mut().for_each(|v| *v = (*v - norm).exp());
        }
        // M-step
        for (j, comp) in model.components.iter_mut().enumerate() {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            comp.weight = nk / n as f64;
            if nk < 1e-300 {
                // empty component: mean and variance do not enter the objective
                continue;
            }
            for d in 0..dim {
                let m = resp.iter().zip(data).map(|(r, x)| r[j] * x[d]).sum::<f64>() / nk;
                comp.mean[d] = m;
            }
            for d in 0..dim {
                let v = resp
                    .iter()
                    .zip(data)
                    .map(|(r, x)| r[j] * (x[d] - comp.mean[d]).powi(2))
                    .sum::<f64>()
                    / nk;
                comp.variance[d] = v.max(VARIANCE_FLOOR);
            }
        }
        let ll = model.log_likelihood(data);
        let prev = *trace.last().expect("non-empty");
        trace.push(ll);
        if (ll - prev).abs() <= 1e-12 * ll.abs().max(1.0) {
            break;
        }
    }
    Ok(GmmFit {
        model,
        log_likelihood: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn degenerate_cluster_hits_floor() {
        let set = ContactSet::new(Frame::Image, vec![vec![2.0, 3.0]; 100]).unwrap();
        let fit = fit_gmm(&set, 1, 50, 0).unwrap();
        let c = &fit.model.components[0];
        assert_eq!(c.mean, vec![2.0, 3.0]);
        assert_eq!(c.variance, vec![VARIANCE_FLOOR; 2]);
        assert_eq!(c.weight, 1.0);
        assert_eq!(fit.model.contact_point(), vec![2.0, 3.0]);
    }

    #[test]
    fn two_cluster_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut points = Vec::new();
        for center in [[0.0, 0.0], [10.0, 10.0]] {
            for _ in 0..200 {
                points.push(vec![
                    center[0] + noise.sample(&mut rng),
                    center[1] + noise.sample(&mut rng),
                ]);
            }
        }
        let set = ContactSet::new(Frame::Image, points).unwrap();
        let fit = fit_gmm(&set, 2, 200, 7).unwrap();
        let mut comps = fit.model.components.clone();
        comps.sort_by(|a, b| a.mean[0].total_cmp(&b.mean[0]));
        for (c, truth) in comps.iter().zip([0.0, 10.0]) {
            assert!(
                c.mean.iter().all(|m| (m - truth).abs() < 0.2),
                "{:?}",
                c.mean
            );
            assert!((c.weight - 0.5).abs() < 0.05);
        }
        assert!(fit.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn too_few_points() {
        let set = ContactSet::new(Frame::Image, vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            fit_gmm(&set, 3, 10, 0),
            Err(AffordanceError::InsufficientPoints { points: 2, k: 3 })
        ));
    }

    #[test]
    fn workspace_frame_and_json() {
        let set = ContactSet::new(
            Frame::Workspace,
            vec![
                vec![0.1, 0.2, 0.3],
                vec![0.1, 0.25, 0.3],
                vec![0.12, 0.2, 0.31],
            ],
        )
        .unwrap();
        let fit = fit_gmm(&set, 1, 20, 1).unwrap();
        let back: GmmModel = serde_json::from_str(&fit.model.to_json()).unwrap();
        assert_eq!(back, fit.model);
        assert!(ContactSet::new(Frame::Workspace, vec![vec![0.0, 1.0]]).is_err());
    }
}
