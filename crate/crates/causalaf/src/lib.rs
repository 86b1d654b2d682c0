//! Causally constrained autoregressive-flow generation of safety-critical
//! traffic scenarios.
//!
//! The pipeline in one breath: a type-level causal graph supplied by an
//! expert constrains an autoregressive normalizing flow that emits
//! graph-structured scenarios (objects plus attributed interactions); a
//! deterministic occlusion-aware 2D simulator executes each scenario under a
//! rule-based autonomous-vehicle policy; and a score-function policy
//! gradient pushes the flow toward scenarios whose minimal AV-to-object
//! distance drops below a collision threshold.
//!
//! Crate layout:
//!
//! - [`graph`] — causal graphs, behavioral graphs, the order and visibility
//!   masks, validation.
//! - [`flow`] — the affine autoregressive flow: conditioners, sampling
//!   records, exact likelihoods and gradients, checkpoints.
//! - [`generate`] — the sampling loop tying masks and flow together, with
//!   conditional generation and graph serialization.
//! - [`sim`] — the 2D micro-simulator: instantiation, radar, AV policy,
//!   kinematics, traces.
//! - [`scenarios`] — the built-in traffic-light, pedestrian and
//!   lane-changing scenario families.
//! - [`train`] — policy-gradient training and the likelihood probe.
//! - [`agent`] — a small learning driving agent for the robustness study.
//! - [`experiments`] — the ablation, sweep and robustness harnesses.
//! - [`render`] — SVG rendering of graphs and traces.
//!
//! See the crate examples for runnable entry points covering each
//! capability.

pub mod agent;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod generate;
pub mod graph;
pub mod nn;
pub mod render;
pub mod scenarios;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
