//! A small learning driving agent used by the robustness study.
//!
//! The agent replaces the rule-based braking decision: a compact network
//! maps frontal radar sectors plus ego state to a longitudinal acceleration,
//! while steering stays on the scripted route. It trains with the same
//! score-function estimator as the scenario generator, rewarded for
//! finishing episodes without collision while still making progress.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::FlowModel;
use crate::generate::{sample_bg, MaskMode, SamplerConfig};
use crate::graph::BehavioralGraph;
use crate::nn::{Adam, Mlp};
use crate::sim::scenario::encode_attr;
use crate::sim::{execute_with_policy, Action, AvObservation, AvPolicy, ScenarioSpec};
use crate::train::episode_seed;

/// Number of frontal radar sectors in the feature vector.
const SECTORS: usize = 10;
/// Sector span: +-60 degrees.
const SECTOR_HALF_FOV: f64 = std::f64::consts::PI / 3.0;
const FEATURES: usize = SECTORS + 4;

const ACCEL_MIN: f64 = -6.0;
const ACCEL_MAX: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub training_episodes: usize,
    /// Exploration noise on the pre-squash acceleration command.
    pub exploration: f64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            hidden: vec![32],
            learning_rate: 0.02,
            batch_size: 16,
            training_episodes: 600,
            exploration: 0.6,
            seed: 0,
        }
    }
}

/// Policy network: features -> mean pre-squash acceleration command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingAgent {
    net: Mlp,
    pub config: AgentConfig,
}

impl DrivingAgent {
    pub fn new(config: AgentConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sizes = vec![FEATURES];
        sizes.extend(&config.hidden);
        sizes.push(1);
        DrivingAgent {
            net: Mlp::new(&sizes, &mut rng),
            config,
        }
    }

    fn features(obs: &AvObservation) -> Array1<f64> {
        let mut f = Array1::zeros(FEATURES);
        for d in &obs.detections {
            if d.bearing.abs() > SECTOR_HALF_FOV {
                continue;
            }
            let frac = (d.bearing + SECTOR_HALF_FOV) / (2.0 * SECTOR_HALF_FOV);
            let sector = ((frac * SECTORS as f64) as usize).min(SECTORS - 1);
            let proximity = (1.0 - d.range / 40.0).clamp(0.0, 1.0);
            if proximity > f[sector] {
                f[sector] = proximity;
            }
        }
        f[SECTORS] = obs.speed / 15.0;
        f[SECTORS + 1] = obs.target_speed / 15.0;
        f[SECTORS + 2] = match obs.light_green {
            Some(true) => 1.0,
            Some(false) => -1.0,
            None => 0.0,
        };
        f[SECTORS + 3] = obs
            .dist_to_stop
            .map_or(1.0, |d| (d / 30.0).clamp(0.0, 1.0));
        f
    }

    fn accel_from_command(u: f64) -> f64 {
        ACCEL_MIN + (ACCEL_MAX - ACCEL_MIN) * 0.5 * ((u).tanh() + 1.0)
    }

    /// Deterministic controller for evaluation.
    pub fn policy(&self) -> AgentPolicy<'_> {
        AgentPolicy {
            agent: self,
            rng: None,
            tape: Vec::new(),
        }
    }

    /// Stochastic controller that records `(features, command)` pairs for
    /// the policy-gradient update.
    pub fn exploring_policy(&self, seed: u64) -> AgentPolicy<'_> {
        AgentPolicy {
            agent: self,
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
            tape: Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }
}

/// Live controller bound to an agent; optionally exploring and recording.
pub struct AgentPolicy<'a> {
    agent: &'a DrivingAgent,
    rng: Option<ChaCha8Rng>,
    tape: Vec<(Array1<f64>, f64)>,
}

impl AvPolicy for AgentPolicy<'_> {
    fn act(&mut self, obs: &AvObservation) -> Action {
        let f = DrivingAgent::features(obs);
        let mean = self.agent.net.forward(&f)[0];
        let u = match &mut self.rng {
            Some(rng) => {
                let eps: f64 = rng.sample(rand_distr::StandardNormal);
                mean + self.agent.config.exploration * eps
            }
            None => mean,
        };
        if self.rng.is_some() {
            self.tape.push((f, u));
        }
        Action {
            accel: DrivingAgent::accel_from_command(u),
            steer: obs.route_steer,
        }
    }
}

/// Where training/evaluation scenarios come from.
pub enum ScenarioSource<'a> {
    /// Structure fixed to a canonical causal order; attributes uniform over
    /// each type's bounds.
    Random,
    /// Sampled from a trained generator checkpoint.
    Generated {
        flow: &'a FlowModel,
        mask_mode: MaskMode,
        temperature: f64,
    },
}

impl ScenarioSource<'_> {
    pub fn sample(&self, spec: &ScenarioSpec, seed: u64) -> Result<BehavioralGraph> {
        match self {
            ScenarioSource::Random => Ok(random_scenario(spec, seed)),
            ScenarioSource::Generated {
                flow,
                mask_mode,
                temperature,
            } => {
                let cfg = SamplerConfig {
                    cg: spec.cg.clone(),
                    dims: spec.dims,
                    temperature: *temperature,
                    mask_mode: *mask_mode,
                    condition: None,
                    seed,
                };
                Ok(sample_bg(flow, &cfg)?.0)
            }
        }
    }
}

/// Builds a structurally fixed behavioral graph with attributes drawn
/// uniformly from each type's decode windows.
pub fn random_scenario(spec: &ScenarioSpec, seed: u64) -> BehavioralGraph {
    uniform_graph(spec, None, seed)
}

/// A partial graph holding uniformly attributed instances of the named
/// types, in causal order; used to condition generation on externally
/// chosen placements.
pub fn random_prefix(spec: &ScenarioSpec, labels: &[String], seed: u64) -> BehavioralGraph {
    uniform_graph(spec, Some(labels), seed)
}

fn uniform_graph(
    spec: &ScenarioSpec,
    only_labels: Option<&[String]>,
    seed: u64,
) -> BehavioralGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cg = &spec.cg;
    let mut bg = BehavioralGraph::new(spec.dims);

    // canonical topological order: repeatedly take the lowest-id valid type
    let mut counts = crate::graph::TypeCounts::new(cg.type_count());
    for _ in 0..spec.dims.max_nodes {
        let queue = crate::graph::valid_type_queue(cg, &counts);
        let pick = match only_labels {
            None => queue.iter().next().copied(),
            Some(labels) => queue
                .iter()
                .copied()
                .find(|&t| labels.iter().any(|l| l == cg.type_name(t))),
        };
        let Some(t) = pick else {
            break;
        };
        let i = bg.node_count();
        bg.push_node(t);
        counts.record(t);

        let tmpl = spec.template(t).expect("physical type has template");
        let mut slice = Array1::zeros(spec.dims.edge_dim());
        slice[1] = 1.0; // independent action
        let windows = [
            tmpl.bounds.x,
            tmpl.bounds.y,
            match tmpl.green_switch {
                Some(w) if tmpl.kind == crate::sim::ObjectKind::TrafficLight => w,
                _ => tmpl.bounds.vx,
            },
            tmpl.bounds.vy,
        ];
        for (k, w) in windows.iter().enumerate() {
            let value = if w.1 > w.0 {
                rng.random_range(w.0..w.1)
            } else {
                w.0
            };
            slice[spec.dims.edge_types + k] = encode_attr(value, *w, spec.decode_scale);
        }
        bg.set_edge(i, i, &slice);

        if let Some(labels) = only_labels {
            // stop once every requested instance is placed
            let done = labels.iter().all(|l| {
                let id = cg.type_id(l).expect("known label");
                counts.count(id) >= labels.iter().filter(|x| *x == l).count()
            });
            if done {
                break;
            }
        }
    }
    bg
}

/// Shaped episode return: zero on collision, otherwise a survival floor plus
/// progress along the route.
pub fn episode_return(trace: &crate::sim::ScenarioTrace, spec: &ScenarioSpec) -> f64 {
    if trace.collided || trace.ran_red_light {
        return 0.0;
    }
    let (start, end) = match (trace.states.first(), trace.states.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return 0.0,
    };
    let av_start = start.iter().find(|s| s.kind == crate::sim::ObjectKind::Av);
    let av_end = end.iter().find(|s| s.kind == crate::sim::ObjectKind::Av);
    match (av_start, av_end) {
        (Some(a), Some(b)) => {
            let travelled = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
            let expected = 8.0 * spec.max_step as f64 * spec.decision_period;
            0.1 + 0.9 * (travelled / expected).clamp(0.0, 1.0)
        }
        _ => 1.0,
    }
}

/// Outcome of an agent training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentTrainResult {
    pub mean_return_history: Vec<f64>,
}

/// Trains the agent in scenarios drawn from `source`.
pub fn train_agent(
    agent: &mut DrivingAgent,
    spec: &ScenarioSpec,
    source: &ScenarioSource<'_>,
    config: &AgentConfig,
) -> Result<AgentTrainResult> {
    let mut optimizer = Adam::new(config.learning_rate, agent.param_count());
    let mut baseline = 0.0f64;
    let mut history = Vec::new();
    let mut episode: u64 = 0;

    while (episode as usize) < config.training_episodes {
        let count = config
            .batch_size
            .min(config.training_episodes - episode as usize);
        let rollouts: Result<Vec<(Vec<(Array1<f64>, f64)>, f64)>> = (0..count as u64)
            .into_par_iter()
            .map(|k| {
                let seed = episode_seed(config.seed, episode + k);
                let bg = source.sample(spec, seed)?;
                let mut policy = agent.exploring_policy(episode_seed(seed, 1));
                let trace = execute_with_policy(&bg, spec, &mut policy)?;
                let ret = episode_return(&trace, spec);
                Ok((policy.tape, ret))
            })
            .collect();
        let rollouts = rollouts?;
        episode += count as u64;

        let mean_ret = rollouts.iter().map(|(_, r)| r).sum::<f64>() / count as f64;
        history.push(mean_ret);

        // score-function gradient through the Gaussian command noise
        let mut grad = agent.net.zero_grad();
        for (tape, ret) in &rollouts {
            let advantage = ret - baseline;
            if advantage == 0.0 {
                continue;
            }
            for (features, u) in tape {
                let (out, cache) = agent.net.forward_cached(features);
                let mean = out[0];
                let sigma = agent.config.exploration;
                let d_mean = (u - mean) / (sigma * sigma) * advantage;
                agent
                    .net
                    .backward(&cache, &Array1::from_vec(vec![d_mean]), &mut grad);
            }
        }
        let mut flat = Vec::with_capacity(agent.param_count());
        grad.write_flat(&mut flat);
        let scale = 1.0 / count as f64;
        for v in &mut flat {
            *v *= scale;
        }
        let mut params = Vec::with_capacity(agent.param_count());
        agent.net.write_flat(&mut params);
        optimizer.ascend(&mut params, &flat);
        let mut off = 0;
        agent.net.read_flat(&params, &mut off);

        baseline = 0.95 * baseline + 0.05 * mean_ret;
    }
    Ok(AgentTrainResult {
        mean_return_history: history,
    })
}

/// No-collision rate of the (deterministic) agent over an evaluation set.
pub fn evaluate_agent(
    agent: &DrivingAgent,
    spec: &ScenarioSpec,
    scenarios: &[BehavioralGraph],
) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(crate::error::Error::EmptyEvaluationSet);
    }
    let survived: Result<Vec<f64>> = scenarios
        .par_iter()
        .map(|bg| {
            let mut policy = agent.policy();
            let trace = execute_with_policy(bg, spec, &mut policy)?;
            Ok(if trace.collided { 0.0 } else { 1.0 })
        })
        .collect();
    let survived = survived?;
    Ok(survived.iter().sum::<f64>() / survived.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn random_scenarios_are_cg_valid() {
        let spec = scenarios::pedestrian_scenario(1);
        for seed in 0..50 {
            let bg = random_scenario(&spec, seed);
            assert!(crate::graph::validate_bg(&bg, &spec.cg).is_empty());
            assert_eq!(bg.node_count(), spec.dims.max_nodes);
        }
    }

    #[test]
    fn evaluation_rejects_empty_set() {
        let spec = scenarios::pedestrian_scenario(0);
        let agent = DrivingAgent::new(AgentConfig::default());
        assert!(matches!(
            evaluate_agent(&agent, &spec, &[]),
            Err(crate::error::Error::EmptyEvaluationSet)
        ));
    }

    #[test]
    fn fresh_agent_outputs_midrange_accel() {
        let agent = DrivingAgent::new(AgentConfig::default());
        let mut policy = agent.policy();
        let obs = AvObservation {
            detections: vec![],
            speed: 5.0,
            target_speed: 10.0,
            route_steer: 0.1,
            route_lateral: 0.0,
            dist_to_stop: None,
            light_green: None,
            time: 0.0,
        };
        let a = policy.act(&obs);
        assert!((a.accel - (ACCEL_MIN + ACCEL_MAX) / 2.0).abs() < 1e-9);
        assert_eq!(a.steer, 0.1);
    }
}
