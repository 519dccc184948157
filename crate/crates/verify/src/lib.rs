//! Shared fixtures for the acceptance suite in `tests/acceptance.rs`.

use std::io::Write;

use rgrasp_core::affordance::{GraspParams, PriorSource};
use rgrasp_core::seeds::Split;
use rgrasp_core::simenv::{SimEnv, Task};
use rgrasp_harness::config::RunConfig;

pub const TASK: &str = "pick-cup";
pub const SEEDS: u64 = 10;

pub fn verdict(name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{tag} {name}: {detail}");
    assert!(pass, "{name}: {detail}");
}

/// The biased prior: +3 cm along x and -0.15 rad about z.
pub fn biased_prior() -> PriorSource {
    let mut b = GraspParams::ZERO;
    b.mu[0] = 0.03;
    b.theta_wrist[2] = -0.15;
    PriorSource::Synthetic { bias: Some(b) }
}

pub fn env(seed: u64, split: Split) -> SimEnv {
    SimEnv::new(
        Task::builtin(TASK).unwrap(),
        RunConfig::synth_for(seed),
        seed,
        split,
    )
}
