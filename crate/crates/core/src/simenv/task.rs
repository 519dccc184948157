use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::affordance::GraspParams;
use crate::kinematics::{extract_post_grasp, read_pose_jsonl, WristDelta, ROBOT_DOF};

/// The nine tabletop tasks, in one-hot order.
pub const TASK_IDS: [&str; 9] = [
    "pick-cup",
    "pour-cup",
    "open-drawer",
    "pick-spoon",
    "stir-spoon",
    "scoop-grape",
    "pick-grape",
    "flip-bagel",
    "squeeze-lemon",
];

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl WorkspaceBox {
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> [f64; 3] {
        std::array::from_fn(|i| 0.5 * (self.min[i] + self.max[i]))
    }
}

/// Reward length-scales per parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthScales {
    pub mu: f64,
    pub theta: f64,
    pub pose: f64,
}

impl Default for LengthScales {
    fn default() -> Self {
        LengthScales {
            mu: 0.03,
            theta: 0.3,
            pose: 0.4,
        }
    }
}

/// Tolerances on the endpoint of the replayed post-grasp trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScales {
    pub position: f64,
    pub rotation: f64,
}

impl Default for TrajectoryScales {
    fn default() -> Self {
        TrajectoryScales {
            position: 0.02,
            rotation: 0.2,
        }
    }
}

fn default_threshold() -> f64 {
    0.6
}

fn default_radius() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// Contact location relative to the object position.
    pub grasp_offset: [f64; 3],
    /// Target wrist Euler angles (intrinsic XYZ).
    pub theta: [f64; 3],
    pub hand_pose: [f64; ROBOT_DOF],
    #[serde(default)]
    pub length_scales: LengthScales,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub trajectory_scales: TrajectoryScales,
    /// Demonstration wrist poses (JSONL), relative to the task file.
    pub demo: String,
    /// Offset the synthetic prior adds to the hidden optimum.
    #[serde(default)]
    pub prior_bias: GraspParams,
    /// Region the object position is drawn from.
    pub object_box: WorkspaceBox,
    /// Reachable workspace; bounds the hidden optimum and the schematic.
    pub workspace: WorkspaceBox,
    #[serde(default = "default_radius")]
    pub footprint_radius: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidTask(format!("{}: {m}", self.id)));
        let ls = &self.length_scales;
        if !(ls.mu > 0.0 && ls.theta > 0.0 && ls.pose > 0.0) {
            return bad("length-scales must be positive".into());
        }
        let ts = &self.trajectory_scales;
        if !(ts.position > 0.0 && ts.rotation > 0.0) {
            return bad("trajectory scales must be positive".into());
        }
        if !(self.success_threshold > 0.0 && self.success_threshold < 1.0) {
            return bad("success threshold must lie in (0, 1)".into());
        }
        for b in [&self.object_box, &self.workspace] {
            if (0..3).any(|i| !(b.min[i] <= b.max[i])) {
                return bad("box min must not exceed max".into());
            }
        }
        for corner in [self.object_box.min, self.object_box.max] {
            let contact = std::array::from_fn(|i| corner[i] + self.grasp_offset[i]);
            if !self.workspace.contains(&contact) || !self.workspace.contains(&corner) {
                return bad("object box plus grasp offset leaves the workspace".into());
            }
        }
        if !(self.footprint_radius >= 0.0) {
            return bad("footprint radius must be non-negative".into());
        }
        let finite = self
            .grasp_offset
            .iter()
            .chain(&self.theta)
            .chain(&self.hand_pose)
            .all(|v| v.is_finite());
        if !finite || !self.prior_bias.is_finite() {
            return bad("non-finite canonical values".into());
        }
        Ok(())
    }

    /// Position of this task in [`TASK_IDS`], if it is one of the library tasks.
    pub fn one_hot_index(&self) -> Option<usize> {
        TASK_IDS.iter().position(|t| *t == self.id)
    }
}

/// A task spec together with its loaded demonstration deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub spec: TaskSpec,
    pub demo: Vec<WristDelta>,
}

impl Task {
    pub fn new(spec: TaskSpec, demo: Vec<WristDelta>) -> Result<Arc<Self>, SimError> {
        spec.validate()?;
        Ok(Arc::new(Task { spec, demo }))
    }

    /// Reads a task JSON file and the demonstration it names.
    pub fn load(path: &Path) -> Result<Arc<Self>, SimError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| SimError::Io(path.to_path_buf(), e))?;
        let spec: TaskSpec = serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidTask(format!("{}: {e}", path.display())))?;
        let demo_path: PathBuf = path.parent().unwrap_or(Path::new(".")).join(&spec.demo);
        let demo_text =
            std::fs::read_to_string(&demo_path).map_err(|e| SimError::Io(demo_path.clone(), e))?;
        let demo = parse_demo(&demo_text)?;
        Task::new(spec, demo)
    }

    /// One of the tasks bundled with the crate.
    pub fn builtin(id: &str) -> Result<Arc<Self>, SimError> {
        let (_, spec_text, demo_text) = BUILTIN
            .iter()
            .find(|(name, _, _)| *name == id)
            .ok_or_else(|| SimError::UnknownTask(id.to_string()))?;
        let spec: TaskSpec =
            serde_json::from_str(spec_text).map_err(|e| SimError::InvalidTask(e.to_string()))?;
        Task::new(spec, parse_demo(demo_text)?)
    }

    pub fn builtin_all() -> Vec<Arc<Self>> {
        TASK_IDS
            .iter()
            .map(|id| Task::builtin(id).expect("bundled tasks are valid"))
            .collect()
    }
}

fn parse_demo(text: &str) -> Result<Vec<WristDelta>, SimError> {
    let poses = read_pose_jsonl(text.as_bytes())?;
    Ok(extract_post_grasp(&poses)?)
}

macro_rules! builtin_task {
    ($id:literal) => {
        (
            $id,
            include_str!(concat!("../../data/tasks/", $id, ".json")),
            include_str!(concat!("../../data/tasks/demos/", $id, ".jsonl")),
        )
    };
}

const BUILTIN: [(&str, &str, &str); 9] = [
    builtin_task!("pick-cup"),
    builtin_task!("pour-cup"),
    builtin_task!("open-drawer"),
    builtin_task!("pick-spoon"),
    builtin_task!("stir-spoon"),
    builtin_task!("scoop-grape"),
    builtin_task!("pick-grape"),
    builtin_task!("flip-bagel"),
    builtin_task!("squeeze-lemon"),
];

/// One randomized placement of a task's object. The optimum is hidden: only
/// the environment and the synthetic prior read it.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub(crate) task: Arc<Task>,
    pub(crate) object_position: [f64; 3],
    pub(crate) optimum: GraspParams,
    pub seed: u64,
}

impl TaskInstance {
    pub fn task(&self) -> &Arc<Task> {
        &self.task
    }

    /// Places the object explicitly (seed still drives feature noise).
    pub fn at_position(task: &Arc<Task>, object_position: [f64; 3], seed: u64) -> Self {
        let spec = &task.spec;
        let mut optimum = GraspParams::ZERO;
        optimum.mu = std::array::from_fn(|i| object_position[i] + spec.grasp_offset[i]);
        optimum.theta_wrist = spec.theta;
        optimum.hand_pose = spec.hand_pose;
        TaskInstance {
            task: Arc::clone(task),
            object_position,
            optimum,
            seed,
        }
    }

    pub fn object_position(&self) -> [f64; 3] {
        self.object_position
    }

    pub fn optimum(&self) -> &GraspParams {
        &self.optimum
    }
}

/// Draws the object position uniformly in the task's object box.
pub fn make_instance(task: &Arc<Task>, seed: u64) -> TaskInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &task.spec.object_box;
    let pos = std::array::from_fn(|i| {
        let u: f64 = rng.random();
        b.min[i] + u * (b.max[i] - b.min[i])
    });
    TaskInstance::at_position(task, pos, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_loads() {
        let tasks = Task::builtin_all();
        assert_eq!(tasks.len(), 9);
        for t in &tasks {
            assert_eq!(t.demo.len(), 40);
            assert!(t.spec.one_hot_index().is_some());
        }
        assert!(matches!(
            Task::builtin("juggle"),
            Err(SimError::UnknownTask(_))
        ));
    }

    #[test]
    fn load_from_disk_matches_builtin() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/tasks/pour-cup.json");
        let t = Task::load(&dir).unwrap();
        assert_eq!(*t, *Task::builtin("pour-cup").unwrap());
    }

    #[test]
    fn zero_size_box_pins_object() {
        let mut spec = Task::builtin("pick-cup").unwrap().spec.clone();
        spec.object_box.max = spec.object_box.min;
        let task = Task::new(spec.clone(), vec![]).unwrap();
        let a = make_instance(&task, 1);
        let b = make_instance(&task, 99);
        assert_eq!(a.object_position(), spec.object_box.min);
        assert_eq!(a.optimum(), b.optimum());
    }

    #[test]
    fn same_seed_same_instance() {
        let task = Task::builtin("pick-spoon").unwrap();
        assert_eq!(make_instance(&task, 42), make_instance(&task, 42));
        assert_ne!(make_instance(&task, 42), make_instance(&task, 43));
    }

    #[test]
    fn uniform_placement_mean() {
        let task = Task::builtin("pick-cup").unwrap();
        let n = 10_000;
        let mean_x: f64 = (0..n)
            .map(|s| make_instance(&task, s).object_position()[0])
            .sum::<f64>()
            / n as f64;
        let center = task.spec.object_box.center()[0];
        assert!((mean_x - center).abs() < 0.02 * center);
    }

    #[test]
    fn validation() {
        let mut spec = Task::builtin("pick-cup").unwrap().spec.clone();
        spec.success_threshold = 1.0;
        assert!(spec.validate().is_err());
        let mut spec = Task::builtin("pick-cup").unwrap().spec.clone();
        spec.length_scales.theta = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = Task::builtin("pick-cup").unwrap().spec.clone();
        spec.grasp_offset[0] = 5.0;
        assert!(spec.validate().is_err());
    }
}
