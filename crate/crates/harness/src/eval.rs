//! Success-rate evaluation on fresh test-split placements.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgrasp_core::affordance::{GraspParams, PriorSource};
use rgrasp_core::kinematics::HandLayout;
use rgrasp_core::policy::Policy;
use rgrasp_core::seeds::{self, Split};
use rgrasp_core::simenv::{rollout, Observation, SimEnv, Task};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::HarnessError;

const NO_PRIOR_STREAM: u64 = 0x0b1a5;
const POLICY_STREAM: u64 = 0x9011c;

pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Prior grasp with zero residual.
    PriorOnly,
    /// Object center, uniformly random wrist rotation, half-closed hand.
    NoPrior,
    /// Prior plus a residual sampled from the trained policy.
    Finetuned,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::PriorOnly => "prior-only",
            Method::NoPrior => "no-prior",
            Method::Finetuned => "finetuned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: usize,
    pub observation_id: String,
    pub reward: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub method: Method,
    pub successes: usize,
    pub trials: usize,
    pub records: Vec<TrialRecord>,
}

impl EvalReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Pools reports for the same task and method.
    pub fn combine(reports: Vec<EvalReport>) -> Result<EvalReport, HarnessError> {
        let mut it = reports.into_iter();
        let mut out = it
            .next()
            .ok_or_else(|| HarnessError::Config("nothing to combine".into()))?;
        for r in it {
            if r.task != out.task || r.method != out.method {
                return Err(HarnessError::Config(
                    "reports differ in task or method".into(),
                ));
            }
            out.successes += r.successes;
            out.trials += r.trials;
            out.records.extend(r.records);
        }
        Ok(out)
    }
}

/// No-prior baseline grasp for an observation.
pub fn no_prior_grasp<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> GraspParams {
    let mut theta = [0.0; 3];
    theta
        .iter_mut()
        .for_each(|t| *t = rng.random_range(-PI..PI));
    GraspParams {
        mu: obs.object_position(),
        theta_wrist: theta,
        hand_pose: HandLayout::default_layout().half_closed().joint_angles,
    }
}

/// Runs `trials` episodes for one session seed. `policy` is required for
/// [`Method::Finetuned`] and ignored otherwise.
pub fn evaluate_seed(
    task: &Arc<Task>,
    prior: &PriorSource,
    method: Method,
    policy: Option<&Policy>,
    trials: usize,
    seed: u64,
) -> Result<EvalReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".into()));
    }
    if method == Method::Finetuned && policy.is_none() {
        return Err(HarnessError::Config(
            "finetuned evaluation needs policy weights".into(),
        ));
    }
    let env = SimEnv::new(task.clone(), RunConfig::synth_for(seed), seed, Split::Test);
    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let obs = env.observation(trial);
        let xi = match method {
            Method::PriorOnly => prior.predict(&obs)?,
            Method::NoPrior => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeds::derive(seed, NO_PRIOR_STREAM, trial as u64));
                no_prior_grasp(&obs, &mut rng)
            }
            Method::Finetuned => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeds::derive(seed, POLICY_STREAM, trial as u64));
                let p = prior.predict(&obs)?;
                policy
                    .expect("checked above")
                    .act(&obs.features, &p, &mut rng)?
            }
        };
        let out = rollout(obs.instance(), &xi, &task.demo, env.synth());
        records.push(TrialRecord {
            seed,
            trial,
            observation_id: obs.id.clone(),
            reward: out.reward,
            success: out.success,
        });
    }
    Ok(EvalReport {
        task: task.spec.id.clone(),
        method,
        successes: records.iter().filter(|r| r.success).count(),
        trials,
        records,
    })
}

/// [`evaluate_seed`] over several seeds with one shared policy.
pub fn evaluate(
    task: &Arc<Task>,
    prior: &PriorSource,
    method: Method,
    policy: Option<&Policy>,
    trials: usize,
    seeds: &[u64],
) -> Result<EvalReport, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Config("at least one seed is required".into()));
    }
    let reports = seeds
        .iter()
        .map(|&s| evaluate_seed(task, prior, method, policy, trials, s))
        .collect::<Result<Vec<_>, _>>()?;
    EvalReport::combine(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> Arc<Task> {
        Task::builtin("pick-cup").unwrap()
    }

    #[test]
    fn zero_trials_rejected() {
        let err = evaluate_seed(
            &task(),
            &PriorSource::task_bias(),
            Method::PriorOnly,
            None,
            0,
            0,
        )
        .unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn finetuned_needs_weights() {
        let err = evaluate(
            &task(),
            &PriorSource::task_bias(),
            Method::Finetuned,
            None,
            3,
            &[0],
        )
        .unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn unbiased_prior_always_succeeds() {
        let prior = PriorSource::Synthetic {
            bias: Some(GraspParams::ZERO),
        };
        let r = evaluate(&task(), &prior, Method::PriorOnly, None, 5, &[1, 2]).unwrap();
        assert_eq!((r.successes, r.trials, r.records.len()), (10, 10, 10));
    }

    #[test]
    fn instances_are_test_split() {
        let r = evaluate(
            &task(),
            &PriorSource::task_bias(),
            Method::NoPrior,
            None,
            4,
            &[7],
        )
        .unwrap();
        for rec in &r.records {
            assert!(
                rec.observation_id.contains("/test/"),
                "{}",
                rec.observation_id
            );
        }
        assert!(r.successes <= r.trials);
    }

    #[test]
    fn no_prior_targets_object_center() {
        let env = SimEnv::new(task(), RunConfig::synth_for(0), 0, Split::Test);
        let obs = env.observation(0);
        let xi = no_prior_grasp(&obs, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(xi.mu, obs.object_position());
        assert!(xi.theta_wrist.iter().all(|t| (-PI..PI).contains(t)));
    }
}
