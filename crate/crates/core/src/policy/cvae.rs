use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::data::{check_elites, context_vector, ElitePair, Normalizer};
use super::{PolicyConfig, PolicyError, Trained};
use crate::affordance::{GraspParams, PARAM_DIM};
use crate::finetune::Residual;
use crate::nn::{Adam, Mlp};
use crate::seeds;

/// Antithetic noise pairs per training pair.
const NOISE_PAIRS: usize = 8;

/// Conditional VAE over targets `y` given context `c`.
///
/// Encoder `[y; c] -> [mean; log-variance]` (latent width each), decoder
/// `[z; c] -> y`, both one tanh hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cvae {
    pub latent: usize,
    pub beta: f64,
    pub encoder: Mlp,
    pub decoder: Mlp,
}

/// One ELBO evaluation with gradients.
#[derive(Debug, Clone)]
pub struct ElboTerms {
    pub loss: f64,
    pub recon: f64,
    pub kl: f64,
    /// Encoder parameters followed by decoder parameters.
    pub grad_params: Vec<f64>,
    pub grad_target: Vec<f64>,
    pub grad_context: Vec<f64>,
}

/// `KL(N(mean, exp(logvar)) || N(0, I))`.
pub fn kl_standard_normal(mean: &[f64], logvar: &[f64]) -> f64 {
    mean.iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum()
}

impl Cvae {
    pub fn new<R: Rng>(
        target_dim: usize,
        context_dim: usize,
        latent: usize,
        hidden: usize,
        beta: f64,
        rng: &mut R,
    ) -> Self {
        Cvae {
            latent,
            beta,
            encoder: Mlp::new(target_dim + context_dim, hidden, 2 * latent, rng),
            decoder: Mlp::new(latent + context_dim, hidden, target_dim, rng),
        }
    }

    pub fn target_dim(&self) -> usize {
        self.decoder.outputs
    }

    pub fn context_dim(&self) -> usize {
        self.decoder.inputs - self.latent
    }

    pub fn param_count(&self) -> usize {
        self.encoder.params.len() + self.decoder.params.len()
    }

    pub fn posterior(&self, target: &[f64], context: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut x = target.to_vec();
        x.extend_from_slice(context);
        let out = self.encoder.forward(&x).output;
        let (m, lv) = out.split_at(self.latent);
        (m.to_vec(), lv.to_vec())
    }

    pub fn decode(&self, z: &[f64], context: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        x.extend_from_slice(context);
        self.decoder.forward(&x).output
    }

    /// Negative ELBO for one pair with reparameterization noise `noise`:
    /// `|y - decode(mean + exp(logvar / 2) * noise, c)|^2 + beta * KL`.
    ///
    /// # Panics
    /// If the slice lengths do not match the model.
    pub fn elbo_loss(&self, target: &[f64], context: &[f64], noise: &[f64]) -> ElboTerms {
        let (ty, cx, l) = (self.target_dim(), self.context_dim(), self.latent);
        assert_eq!(target.len(), ty, "target width");
        assert_eq!(context.len(), cx, "context width");
        assert_eq!(noise.len(), l, "noise width");

        let mut enc_in = target.to_vec();
        enc_in.extend_from_slice(context);
        let enc = self.encoder.forward(&enc_in);
        let (mean, logvar) = enc.output.split_at(l);
        let sd: Vec<f64> = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
        let z: Vec<f64> = (0..l).map(|i| mean[i] + sd[i] * noise[i]).collect();

        let mut dec_in = z.clone();
        dec_in.extend_from_slice(context);
        let dec = self.decoder.forward(&dec_in);
        let err: Vec<f64> = dec.output.iter().zip(target).map(|(y, t)| y - t).collect();
        let recon: f64 = err.iter().map(|e| e * e).sum();
        let kl = kl_standard_normal(mean, logvar);

        let ne = self.encoder.params.len();
        let mut grad_params = vec![0.0; self.param_count()];
        let g_out: Vec<f64> = err.iter().map(|e| 2.0 * e).collect();
        let g_dec_in = self
            .decoder
            .backward(&dec_in, &dec, &g_out, &mut grad_params[ne..]);
        let mut g_enc_out = vec![0.0; 2 * l];
        for i in 0..l {
            let gz = g_dec_in[i];
            g_enc_out[i] = gz + self.beta * mean[i];
            g_enc_out[l + i] =
                gz * noise[i] * 0.5 * sd[i] + self.beta * 0.5 * (logvar[i].exp() - 1.0);
        }
        let g_enc_in = self
            .encoder
            .backward(&enc_in, &enc, &g_enc_out, &mut grad_params[..ne]);

        let grad_target = (0..ty).map(|i| g_enc_in[i] - g_out[i]).collect();
        let grad_context = (0..cx)
            .map(|i| g_enc_in[ty + i] + g_dec_in[l + i])
            .collect();
        ElboTerms {
            loss: recon + self.beta * kl,
            recon,
            kl,
            grad_params,
            grad_target,
            grad_context,
        }
    }
}

impl Cvae {
    /// Negative ELBO of one pair averaged over several noise draws; equal to
    /// the mean of [`Cvae::elbo_loss`] over `draws`. The encoder pass and the
    /// decoder's context projection are shared across draws.
    pub fn elbo_loss_multi(
        &self,
        target: &[f64],
        context: &[f64],
        draws: &[Vec<f64>],
    ) -> ElboTerms {
        let (ty, cx, l) = (self.target_dim(), self.context_dim(), self.latent);
        assert_eq!(target.len(), ty, "target width");
        assert_eq!(context.len(), cx, "context width");
        assert!(!draws.is_empty(), "at least one noise draw");
        let d = draws.len() as f64;

        let mut enc_in = target.to_vec();
        enc_in.extend_from_slice(context);
        let enc = self.encoder.forward(&enc_in);
        let (mean, logvar) = enc.output.split_at(l);
        let sd: Vec<f64> = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();

        let dec = &self.decoder;
        let (hn, din) = (dec.hidden, dec.inputs);
        let (b1, w2, b2) = (hn * din, hn * din + hn, hn * din + hn + ty * hn);
        let p = &dec.params;
        let pre_c: Vec<f64> = (0..hn)
            .map(|h| {
                p[b1 + h]
                    + (0..cx)
                        .map(|j| p[h * din + l + j] * context[j])
                        .sum::<f64>()
            })
            .collect();

        let ne = self.encoder.params.len();
        let mut grad_params = vec![0.0; self.param_count()];
        let gd = &mut grad_params[ne..];
        let mut g_mean = vec![0.0; l];
        let mut g_logvar = vec![0.0; l];
        let mut g_pre_sum = vec![0.0; hn];
        let mut g_target = vec![0.0; ty];
        let mut recon = 0.0;
        let mut z = vec![0.0; l];
        let mut a = vec![0.0; hn];
        let mut g_out = vec![0.0; ty];
        let mut g_pre = vec![0.0; hn];
        for eps in draws {
            assert_eq!(eps.len(), l, "noise width");
            for i in 0..l {
                z[i] = mean[i] + sd[i] * eps[i];
            }
            for h in 0..hn {
                let row = &p[h * din..h * din + l];
                a[h] = (pre_c[h] + row.iter().zip(&z).map(|(w, zi)| w * zi).sum::<f64>()).tanh();
            }
            for o in 0..ty {
                let row = &p[w2 + o * hn..w2 + (o + 1) * hn];
                let y = p[b2 + o] + row.iter().zip(&a).map(|(w, ai)| w * ai).sum::<f64>();
                let e = y - target[o];
                recon += e * e / d;
                g_out[o] = 2.0 * e / d;
                g_target[o] -= g_out[o];
            }
            g_pre.iter_mut().for_each(|g| *g = 0.0);
            for o in 0..ty {
                let g = g_out[o];
                gd[b2 + o] += g;
                let base = w2 + o * hn;
                let (gw, w) = (&mut gd[base..base + hn], &p[base..base + hn]);
                for ((gw, w), (ah, gp)) in gw.iter_mut().zip(w).zip(a.iter().zip(g_pre.iter_mut()))
                {
                    *gw += g * ah;
                    *gp += g * w;
                }
            }
            for (h, (gp, ah)) in g_pre.iter_mut().zip(&a).enumerate() {
                *gp *= 1.0 - ah * ah;
                g_pre_sum[h] += *gp;
                for (gw, zi) in gd[h * din..h * din + l].iter_mut().zip(&z) {
                    *gw += *gp * zi;
                }
            }
            for i in 0..l {
                let gz: f64 = (0..hn).map(|h| p[h * din + i] * g_pre[h]).sum();
                g_mean[i] += gz;
                g_logvar[i] += gz * eps[i] * 0.5 * sd[i];
            }
        }
        let mut grad_context: Vec<f64> = vec![0.0; cx];
        for h in 0..hn {
            let g = g_pre_sum[h];
            gd[b1 + h] += g;
            let base = h * din + l;
            for j in 0..cx {
                gd[base + j] += g * context[j];
                grad_context[j] += g * p[base + j];
            }
        }

        let kl = kl_standard_normal(mean, logvar);
        let mut g_enc_out = vec![0.0; 2 * l];
        for i in 0..l {
            g_enc_out[i] = g_mean[i] + self.beta * mean[i];
            g_enc_out[l + i] = g_logvar[i] + self.beta * 0.5 * (logvar[i].exp() - 1.0);
        }
        let g_enc_in = self
            .encoder
            .backward(&enc_in, &enc, &g_enc_out, &mut grad_params[..ne]);
        for i in 0..ty {
            g_target[i] += g_enc_in[i];
        }
        for j in 0..cx {
            grad_context[j] += g_enc_in[ty + j];
        }
        ElboTerms {
            loss: recon + self.beta * kl,
            recon,
            kl,
            grad_params,
            grad_target: g_target,
            grad_context,
        }
    }
}

fn normal_vec<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Mean over pairs of the draw-averaged negative ELBO, with the parameter gradient.
fn batch_elbo(
    model: &Cvae,
    targets: &[Vec<f64>],
    contexts: &[Vec<f64>],
    noise: &[Vec<Vec<f64>>],
) -> (f64, Vec<f64>) {
    let n = targets.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; model.param_count()];
    for ((t, c), draws) in targets.iter().zip(contexts).zip(noise) {
        let terms = model.elbo_loss_multi(t, c, draws);
        total += terms.loss / n;
        grad.iter_mut()
            .zip(&terms.grad_params)
            .for_each(|(g, v)| *g += v / n);
    }
    (total, grad)
}

/// A cVAE with the normalization it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvaePolicy {
    pub model: Cvae,
    pub context_norm: Normalizer,
    pub target_norm: Normalizer,
}

impl CvaePolicy {
    fn check(&self, features: &[f64]) -> Result<(), PolicyError> {
        let expected = self.context_norm.dim() - PARAM_DIM;
        if features.len() != expected {
            return Err(PolicyError::DimensionMismatch {
                expected,
                got: features.len(),
            });
        }
        Ok(())
    }

    /// Decodes latent `z` in the given context, in target units.
    pub fn decode_at(
        &self,
        features: &[f64],
        prior: &GraspParams,
        z: &[f64],
    ) -> Result<[f64; PARAM_DIM], PolicyError> {
        self.check(features)?;
        if z.len() != self.model.latent {
            return Err(PolicyError::DimensionMismatch {
                expected: self.model.latent,
                got: z.len(),
            });
        }
        let c = self.context_norm.apply(&context_vector(features, prior));
        let y = self.target_norm.invert(&self.model.decode(z, &c));
        Ok(y.try_into().expect("target width is PARAM_DIM"))
    }

    /// Decodes a standard-normal latent draw.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        features: &[f64],
        prior: &GraspParams,
        rng: &mut R,
    ) -> Result<[f64; PARAM_DIM], PolicyError> {
        let z: Vec<f64> = (0..self.model.latent)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        self.decode_at(features, prior, &z)
    }

    /// Decodes the latent origin.
    pub fn mean(
        &self,
        features: &[f64],
        prior: &GraspParams,
    ) -> Result<[f64; PARAM_DIM], PolicyError> {
        self.decode_at(features, prior, &vec![0.0; self.model.latent])
    }

    /// Squared reconstruction error, in normalized units, of `target` decoded
    /// at its posterior mean.
    pub fn reconstruction_error(
        &self,
        features: &[f64],
        prior: &GraspParams,
        target: &[f64],
    ) -> Result<f64, PolicyError> {
        self.check(features)?;
        let c = self.context_norm.apply(&context_vector(features, prior));
        let t = self.target_norm.apply(target);
        let (m, _) = self.model.posterior(&t, &c);
        Ok(self
            .model
            .decode(&m, &c)
            .iter()
            .zip(&t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Target reconstructed through the posterior mean.
    pub fn reconstruct(
        &self,
        features: &[f64],
        prior: &GraspParams,
        target: &[f64],
    ) -> Result<[f64; PARAM_DIM], PolicyError> {
        self.check(features)?;
        let c = self.context_norm.apply(&context_vector(features, prior));
        let (m, _) = self.model.posterior(&self.target_norm.apply(target), &c);
        self.decode_at(features, prior, &m)
    }
}

/// Antithetic noise set: the origin plus `pairs` draws and their negations,
/// rescaled to unit second moment.
fn noise_set<R: Rng>(latent: usize, pairs: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let k = (2 * pairs + 1) as f64;
    let c = (k / (k - 1.0)).sqrt();
    let mut out = vec![vec![0.0; latent]];
    for _ in 0..pairs {
        let e: Vec<f64> = normal_vec(latent, rng).into_iter().map(|x| c * x).collect();
        out.push(e.iter().map(|x| -x).collect());
        out.push(e);
    }
    out
}

/// Full-batch Adam on the mean negative ELBO over a fixed antithetic noise
/// set per pair. A step that raises the loss is rejected and the step scale
/// halved, so the loss curve is monotone.
pub(crate) fn fit_cvae(
    contexts: &[Vec<f64>],
    targets: &[Vec<f64>],
    target_norm: Normalizer,
    cfg: &PolicyConfig,
) -> Trained<CvaePolicy> {
    let context_norm = Normalizer::fit(contexts);
    let cs: Vec<Vec<f64>> = contexts.iter().map(|c| context_norm.apply(c)).collect();
    let ts: Vec<Vec<f64>> = targets.iter().map(|t| target_norm.apply(t)).collect();
    let mut init_rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, 0xc7ae, 0));
    let mut model = Cvae::new(
        PARAM_DIM,
        cs[0].len(),
        cfg.latent,
        cfg.hidden,
        cfg.beta,
        &mut init_rng,
    );
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, 0xc7ae, 1));
    let noise: Vec<Vec<Vec<f64>>> = (0..ts.len())
        .map(|_| noise_set(cfg.latent, NOISE_PAIRS, &mut noise_rng))
        .collect();

    let ne = model.encoder.params.len();
    let mut enc_opt = Adam::new(ne, cfg.lr);
    let mut dec_opt = Adam::new(model.decoder.params.len(), cfg.lr);
    let mut scale = 1.0;
    let (mut loss, mut grad) = batch_elbo(&model, &ts, &cs, &noise);
    let mut losses = vec![loss];
    for _ in 0..cfg.epochs {
        enc_opt.set_lr(cfg.lr * scale);
        dec_opt.set_lr(cfg.lr * scale);
        let mut trial = model.clone();
        enc_opt.step(&mut trial.encoder.params, &grad[..ne]);
        dec_opt.step(&mut trial.decoder.params, &grad[ne..]);
        let (l, g) = batch_elbo(&trial, &ts, &cs, &noise);
        if l <= loss {
            model = trial;
            loss = l;
            grad = g;
            scale = (scale * 1.1).min(1.0);
        } else {
            scale *= 0.5;
        }
        losses.push(loss);
    }
    Trained {
        model: CvaePolicy {
            model,
            context_norm,
            target_norm,
        },
        losses,
    }
}

/// Per-dimension residual scale from the configured block spreads.
pub(crate) fn residual_norm(cfg: &PolicyConfig) -> Normalizer {
    let [m, t, p] = cfg.residual_scale;
    let mut std = vec![m; 3];
    std.extend([t; 3]);
    std.extend([p; PARAM_DIM - 6]);
    Normalizer::scale_only(std)
}

/// Trains the residual cVAE on elite (residual, context) pairs.
pub fn train_policy(
    elites: &[ElitePair],
    cfg: &PolicyConfig,
) -> Result<Trained<CvaePolicy>, PolicyError> {
    cfg.validate()?;
    check_elites(elites)?;
    let contexts: Vec<Vec<f64>> = elites.iter().map(ElitePair::context).collect();
    let targets: Vec<Vec<f64>> = elites.iter().map(|e| e.residual.0.to_vec()).collect();
    Ok(fit_cvae(&contexts, &targets, residual_norm(cfg), cfg))
}

/// Samples a residual for a new observation.
pub fn act<R: Rng + ?Sized>(
    policy: &CvaePolicy,
    features: &[f64],
    prior: &GraspParams,
    rng: &mut R,
) -> Result<Residual, PolicyError> {
    policy.sample(features, prior, rng).map(Residual)
}

/// Trains a cVAE whose target is the executed grasp itself rather than the
/// residual on top of the prior.
pub fn train_direct_vae(
    elites: &[ElitePair],
    cfg: &PolicyConfig,
) -> Result<Trained<CvaePolicy>, PolicyError> {
    cfg.validate()?;
    check_elites(elites)?;
    let contexts: Vec<Vec<f64>> = elites.iter().map(ElitePair::context).collect();
    let targets: Vec<Vec<f64>> = elites
        .iter()
        .map(|e| e.executed().to_array().to_vec())
        .collect();
    let norm = Normalizer::fit(&targets);
    Ok(fit_cvae(&contexts, &targets, norm, cfg))
}

pub fn act_direct<R: Rng + ?Sized>(
    policy: &CvaePolicy,
    features: &[f64],
    prior: &GraspParams,
    rng: &mut R,
) -> Result<GraspParams, PolicyError> {
    let y = policy.sample(features, prior, rng)?;
    Ok(GraspParams::from_slice(&y).expect("fixed width"))
}
