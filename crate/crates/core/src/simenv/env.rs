use std::sync::Arc;

use super::features::{FeatureSynth, OUTCOME_DIM};
use super::reward::{rollout, Outcome};
use super::schematic::{render_schematic, Schematic};
use super::task::{make_instance, Task, TaskInstance};
use crate::affordance::GraspParams;
use crate::finetune::Environment;
use crate::seeds::{instance_seed, Split};

/// Default distance scale for embedding rewards.
pub const DEFAULT_EMBEDDING_SCALE: f64 = 2.0;

/// What a policy sees at the start of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub id: String,
    pub features: Vec<f64>,
    pub(crate) instance: TaskInstance,
}

impl Observation {
    pub fn new(instance: TaskInstance, synth: &FeatureSynth) -> Self {
        let split = match crate::seeds::split_of(instance.seed) {
            Split::Train => "train",
            Split::Test => "test",
        };
        Observation {
            id: format!("{}/{split}/{:016x}", instance.task.spec.id, instance.seed),
            features: synth.synth_features(&instance),
            instance,
        }
    }

    pub fn task_id(&self) -> &str {
        &self.instance.task.spec.id
    }

    /// Object location as a detector bounding-box center would report it.
    /// Used by the object-center baseline and the schematic only.
    pub fn object_position(&self) -> [f64; 3] {
        self.instance.object_position
    }

    pub fn instance(&self) -> &TaskInstance {
        &self.instance
    }
}

/// Object placed at the center of the task's box, the reference scene for goals.
pub fn canonical_instance(task: &Arc<Task>) -> TaskInstance {
    TaskInstance::at_position(task, task.spec.object_box.center(), 0)
}

/// Final embedding of the optimal grasp and demonstrated trajectory on the
/// canonical instance.
pub fn goal_embedding(task: &Arc<Task>, synth: &FeatureSynth) -> Vec<f64> {
    let inst = canonical_instance(task);
    rollout(&inst, &inst.optimum, &task.demo, synth).final_features
}

/// One task with a fixed feature map; episode `k` of a session uses the
/// instance seeded by `(session_seed, k, split)`.
#[derive(Debug, Clone)]
pub struct SimEnv {
    task: Arc<Task>,
    synth: FeatureSynth,
    session_seed: u64,
    split: Split,
}

impl SimEnv {
    pub fn new(task: Arc<Task>, synth: FeatureSynth, session_seed: u64, split: Split) -> Self {
        SimEnv {
            task,
            synth,
            session_seed,
            split,
        }
    }

    pub fn task(&self) -> &Arc<Task> {
        &self.task
    }

    pub fn synth(&self) -> &FeatureSynth {
        &self.synth
    }

    pub fn instance(&self, episode: usize) -> TaskInstance {
        make_instance(
            &self.task,
            instance_seed(self.session_seed, episode as u64, self.split),
        )
    }

    pub fn observation(&self, episode: usize) -> Observation {
        Observation::new(self.instance(episode), &self.synth)
    }

    pub fn goal_embedding(&self) -> Vec<f64> {
        goal_embedding(&self.task, &self.synth)
    }

    /// Final embedding of a perfect episode; equal to the goal by construction.
    pub fn perfect_embedding(&self, obs: &Observation) -> Vec<f64> {
        self.synth
            .final_features(&obs.instance, &[0.0; OUTCOME_DIM])
    }
}

impl Environment for SimEnv {
    fn observe(&mut self, episode: usize) -> Observation {
        self.observation(episode)
    }

    fn execute(&mut self, obs: &Observation, xi: &GraspParams) -> Outcome {
        rollout(&obs.instance, xi, &self.task.demo, &self.synth)
    }

    fn schematic(&self, obs: &Observation, xi: &GraspParams) -> Option<Schematic> {
        Some(render_schematic(&obs.instance, xi))
    }
}
