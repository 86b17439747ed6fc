//! Desk-scale human-to-robot imitation: synthetic demonstrations are turned
//! into waypoint priors, and conditional-VAE task and exploration policies
//! improve manipulation success through sampling-based optimization scored
//! by an agent-agnostic trajectory-alignment cost.

pub mod action;
pub mod align;
pub mod demo;
pub mod math;
pub mod nn;
pub mod optim;
pub mod prior;
pub mod rng;
pub mod sim;
pub mod tasks;

pub use action::{Prior, Schedule};
pub use math::{Aabb, Mat3, Pose, Vec3};
