use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cvae::residual_norm;
use super::data::{check_elites, context_vector, ElitePair, Normalizer};
use super::{PolicyConfig, PolicyError, Trained};
use crate::affordance::{GraspParams, PARAM_DIM};
use crate::finetune::Residual;
use crate::nn::{Adam, Mlp};
use crate::seeds;

/// Deterministic regression head from context to residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHead {
    pub net: Mlp,
    pub context_norm: Normalizer,
    pub target_norm: Normalizer,
}

fn mse(net: &Mlp, xs: &[Vec<f64>], ys: &[Vec<f64>], grad: Option<&mut [f64]>) -> f64 {
    let n = xs.len() as f64;
    let mut total = 0.0;
    let mut grad = grad;
    for (x, y) in xs.iter().zip(ys) {
        let trace = net.forward(x);
        let err: Vec<f64> = trace.output.iter().zip(y).map(|(a, b)| a - b).collect();
        total += err.iter().map(|e| e * e).sum::<f64>() / n;
        if let Some(g) = grad.as_deref_mut() {
            let g_out: Vec<f64> = err.iter().map(|e| 2.0 * e / n).collect();
            net.backward(x, &trace, &g_out, g);
        }
    }
    total
}

/// Least-squares fit of residuals on contexts.
pub fn train_mlp_head(
    elites: &[ElitePair],
    cfg: &PolicyConfig,
) -> Result<Trained<MlpHead>, PolicyError> {
    cfg.validate()?;
    check_elites(elites)?;
    let contexts: Vec<Vec<f64>> = elites.iter().map(ElitePair::context).collect();
    let context_norm = Normalizer::fit(&contexts);
    let target_norm = residual_norm(cfg);
    let xs: Vec<Vec<f64>> = contexts.iter().map(|c| context_norm.apply(c)).collect();
    let ys: Vec<Vec<f64>> = elites
        .iter()
        .map(|e| target_norm.apply(&e.residual.0))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, 0x3e1b, 0));
    let mut net = Mlp::new(xs[0].len(), cfg.hidden, PARAM_DIM, &mut rng);
    let mut opt = Adam::new(net.params.len(), cfg.lr);
    let mut losses = vec![mse(&net, &xs, &ys, None)];
    for _ in 0..cfg.epochs {
        let mut grad = vec![0.0; net.params.len()];
        mse(&net, &xs, &ys, Some(&mut grad));
        opt.step(&mut net.params, &grad);
        losses.push(mse(&net, &xs, &ys, None));
    }
    Ok(Trained {
        model: MlpHead {
            net,
            context_norm,
            target_norm,
        },
        losses,
    })
}

pub fn act_mlp(
    head: &MlpHead,
    features: &[f64],
    prior: &GraspParams,
) -> Result<Residual, PolicyError> {
    let expected = head.context_norm.dim() - PARAM_DIM;
    if features.len() != expected {
        return Err(PolicyError::DimensionMismatch {
            expected,
            got: features.len(),
        });
    }
    let x = head.context_norm.apply(&context_vector(features, prior));
    let y = head.target_norm.invert(&head.net.forward(&x).output);
    Ok(Residual(y.try_into().expect("fixed width")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elite(residual: Residual) -> ElitePair {
        ElitePair {
            residual,
            features: vec![0.3, -0.7, 0.1],
            prior: GraspParams::ZERO,
        }
    }

    #[test]
    fn bimodal_elites_average_out() {
        let r: [f64; PARAM_DIM] = std::array::from_fn(|i| if i < 3 { 0.03 } else { 0.1 });
        let mut elites = Vec::new();
        for k in 0..10 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            elites.push(elite(Residual(r.map(|v| sign * v))));
        }
        let head = train_mlp_head(&elites, &PolicyConfig::default())
            .unwrap()
            .model;
        let pred = act_mlp(&head, &elites[0].features, &GraspParams::ZERO).unwrap();
        for (p, v) in pred.0.iter().zip(&r) {
            assert!(p.abs() < 0.05 * v, "{p} vs {v}");
        }
    }

    #[test]
    fn reproduces_single_elite() {
        let e = elite(Residual(std::array::from_fn(|i| {
            0.01 * (i as f64 % 5.0) - 0.02
        })));
        let head = train_mlp_head(std::slice::from_ref(&e), &PolicyConfig::default())
            .unwrap()
            .model;
        let pred = act_mlp(&head, &e.features, &e.prior).unwrap();
        assert!(pred
            .0
            .iter()
            .zip(&e.residual.0)
            .all(|(a, b)| (a - b).abs() < 1e-3));
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(
            train_mlp_head(&[], &PolicyConfig::default()),
            Err(PolicyError::EmptyElites)
        ));
        let e = elite(Residual::ZERO);
        let cfg = PolicyConfig {
            epochs: 2,
            ..Default::default()
        };
        let head = train_mlp_head(std::slice::from_ref(&e), &cfg)
            .unwrap()
            .model;
        assert!(act_mlp(&head, &[0.0; 2], &e.prior).is_err());
    }
}
