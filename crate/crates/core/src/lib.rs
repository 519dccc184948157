//! Grasp-prior modeling, residual cross-entropy fine-tuning, and residual
//! policy distillation against a synthetic grasp environment.

pub mod affordance;
pub mod finetune;
pub mod kinematics;
pub mod nn;
pub mod policy;
pub mod seeds;
pub mod simenv;
