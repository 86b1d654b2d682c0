//! Experiment harness: the mask ablation, temperature and irrelevant-node
//! sweeps, the agent robustness study and the causal-structure probe. Each
//! run writes columnar results, an SVG where curves are involved, and a
//! manifest sufficient to reproduce it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{self, AgentConfig, DrivingAgent, ScenarioSource};
use crate::error::{Error, Result};
use crate::flow::checkpoint::FlowCheckpoint;
use crate::generate::MaskMode;
use crate::graph::BehavioralGraph;
use crate::render::curves_to_svg;
use crate::scenarios;
use crate::train::{
    episode_seed, likelihood_probe, train, ProbeReport, RunManifest, TrainConfig,
};

/// The three generator configurations compared throughout.
pub const ABLATION_MODES: [MaskMode; 3] =
    [MaskMode::Baseline, MaskMode::OrderMask, MaskMode::Causal];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ablation,
    TemperatureSweep,
    NodeSweep,
    Robustness,
    Probe,
}

/// Declarative description of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub scenarios: Vec<String>,
    pub seeds: Vec<u64>,
    /// Generator training episodes per configuration.
    pub episodes: usize,
    /// Temperature sweep points.
    pub temperatures: Vec<f64>,
    /// Irrelevant-vehicle counts for the node sweep.
    pub node_counts: Vec<usize>,
    /// Driving-agent training episodes (robustness).
    pub agent_episodes: usize,
    /// Evaluation scenarios per robustness cell.
    pub eval_count: usize,
    /// Sampling temperature for generated scenarios in the robustness study
    /// (elevated for diversity).
    pub eval_temperature: f64,
    /// Post-training samples for the probe.
    pub probe_samples: usize,
    /// Irrelevant vehicles present in each scenario.
    pub irrelevant: usize,
    /// Trained generator checkpoints per scenario (robustness).
    pub checkpoints: BTreeMap<String, PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Base training configuration; seed and mask mode are overridden per
    /// cell.
    pub train: TrainConfig,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, scenarios: &[&str], seeds: &[u64]) -> Self {
        ExperimentPlan {
            kind,
            scenarios: scenarios.iter().map(|s| s.to_string()).collect(),
            seeds: seeds.to_vec(),
            episodes: 2000,
            temperatures: vec![5.0, 10.0],
            node_counts: vec![0, 1, 2, 3],
            agent_episodes: 600,
            eval_count: 60,
            eval_temperature: 2.5,
            probe_samples: 500,
            irrelevant: 3,
            checkpoints: BTreeMap::new(),
            out_dir: None,
            train: TrainConfig::default(),
        }
    }

    fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Config(format!(
                "plan kind {:?} does not match requested {:?}",
                self.kind, kind
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("plan needs at least one seed".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("plan needs at least one scenario".into()));
        }
        Ok(())
    }

    fn config_for(&self, seed: u64, mode: MaskMode) -> TrainConfig {
        TrainConfig {
            seed,
            mask_mode: mode,
            total_episodes: self.episodes,
            ..self.train.clone()
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }

    fn write_manifest(&self, scenario: &str) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            RunManifest::new(scenario, &self.train, &self.seeds).save(dir)?;
        }
        Ok(())
    }
}

/// One trained cell of the ablation: scenario x mode x seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationCell {
    pub scenario: String,
    pub mode: String,
    pub seed: u64,
    /// Mean objective over the final 100 training episodes.
    pub final_mean: f64,
    /// Standard deviation over the same window (across-episode spread).
    pub final_std: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AblationTable {
    pub cells: Vec<AblationCell>,
}

impl AblationTable {
    pub fn cell(&self, scenario: &str, mode: &str, seed: u64) -> Option<&AblationCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.mode == mode && c.seed == seed)
    }

    /// Across-seed mean and standard deviation of the final objective.
    pub fn seed_stats(&self, scenario: &str, mode: &str) -> (f64, f64) {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.scenario == scenario && c.mode == mode)
            .map(|c| c.final_mean)
            .collect();
        mean_std(&vals)
    }
}

pub fn mean_std(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
    (mean, var.sqrt())
}

/// Trains the three generator configurations per scenario and seed and
/// collects the final objectives.
pub fn run_ablation(plan: &ExperimentPlan) -> Result<AblationTable> {
    plan.validate(ExperimentKind::Ablation)?;
    let mut cells = Vec::new();
    for scenario in &plan.scenarios {
        plan.write_manifest(scenario)?;
        // cells are independent; fan out across (mode, seed)
        let jobs: Vec<(MaskMode, u64)> = ABLATION_MODES
            .iter()
            .flat_map(|&m| plan.seeds.iter().map(move |&s| (m, s)))
            .collect();
        let results: Result<Vec<AblationCell>> = jobs
            .par_iter()
            .map(|&(mode, seed)| {
                let spec = scenarios::by_name(scenario, plan.irrelevant)?;
                let config = plan.config_for(seed, mode);
                let (_, metrics) = train(config, &spec)?;
                let (final_mean, final_std) = metrics.final_window(100);
                Ok(AblationCell {
                    scenario: scenario.clone(),
                    mode: mode.label().to_string(),
                    seed,
                    final_mean,
                    final_std,
                })
            })
            .collect();
        cells.extend(results?);
    }
    let table = AblationTable { cells };
    plan.write("ablation.csv", &ablation_csv(&table))?;
    plan.write("ablation.txt", &format_ablation_table(&table))?;
    Ok(table)
}

/// Columnar form of the ablation results.
pub fn ablation_csv(table: &AblationTable) -> String {
    let mut out = String::from("scenario,mode,seed,final_mean,final_std\n");
    for c in &table.cells {
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4}",
            c.scenario, c.mode, c.seed, c.final_mean, c.final_std
        );
    }
    out
}

/// Human-readable summary shaped like the mask-ablation comparison: one row
/// per scenario, one column per configuration, `mean+-std` across seeds with
/// the across-episode spread in parentheses.
pub fn format_ablation_table(table: &AblationTable) -> String {
    let scenarios: Vec<String> = {
        let mut v: Vec<String> = table.cells.iter().map(|c| c.scenario.clone()).collect();
        v.dedup();
        v
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>22} {:>22} {:>22}",
        "scenario", "baseline", "order-mask", "causal"
    );
    for s in &scenarios {
        let mut row = format!("{s:<14}");
        for mode in ABLATION_MODES {
            let (m, sd) = table.seed_stats(s, mode.label());
            let ep_sd = {
                let vals: Vec<f64> = table
                    .cells
                    .iter()
                    .filter(|c| &c.scenario == s && c.mode == mode.label())
                    .map(|c| c.final_std)
                    .collect();
                mean_std(&vals).0
            };
            let _ = write!(row, " {:>10.2}+-{:<4.2}({:.2})", m, sd, ep_sd);
        }
        let _ = writeln!(out, "{row}");
    }
    out
}

/// One training curve of the temperature sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCurve {
    pub temperature: f64,
    pub mode: String,
    pub seed: u64,
    /// Batch-mean objective per update.
    pub curve: Vec<f64>,
    pub final_mean: f64,
    /// Mean absolute successive difference of the curve (instability).
    pub roughness: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TemperatureSweep {
    pub scenario: String,
    pub curves: Vec<SweepCurve>,
}

/// Trains every mask mode at each sweep temperature and emits the training
/// curves with variance statistics.
pub fn run_temperature_sweep(plan: &ExperimentPlan) -> Result<TemperatureSweep> {
    plan.validate(ExperimentKind::TemperatureSweep)?;
    if plan.temperatures.len() < 2 {
        return Err(Error::TooFewTemperatures(plan.temperatures.len()));
    }
    let scenario = plan.scenarios[0].clone();
    plan.write_manifest(&scenario)?;
    let jobs: Vec<(f64, MaskMode, u64)> = plan
        .temperatures
        .iter()
        .flat_map(|&t| {
            ABLATION_MODES
                .iter()
                .flat_map(move |&m| plan.seeds.iter().map(move |&s| (t, m, s)))
        })
        .collect();
    let curves: Result<Vec<SweepCurve>> = jobs
        .par_iter()
        .map(|&(temperature, mode, seed)| {
            let spec = scenarios::by_name(&scenario, plan.irrelevant)?;
            let mut config = plan.config_for(seed, mode);
            config.temperature = crate::train::TemperatureSchedule::Constant(temperature);
            let (_, metrics) = train(config, &spec)?;
            let curve: Vec<f64> = metrics.rows.iter().map(|r| r.mean_objective).collect();
            let roughness = if curve.len() > 1 {
                curve.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
                    / (curve.len() - 1) as f64
            } else {
                0.0
            };
            let (final_mean, _) = metrics.final_window(100);
            Ok(SweepCurve {
                temperature,
                mode: mode.label().to_string(),
                seed,
                curve,
                final_mean,
                roughness,
            })
        })
        .collect();
    let sweep = TemperatureSweep {
        scenario,
        curves: curves?,
    };

    let mut csv = String::from("temperature,mode,seed,update,objective\n");
    for c in &sweep.curves {
        for (k, v) in c.curve.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{},{},{:.4}", c.temperature, c.mode, c.seed, k, v);
        }
    }
    plan.write("temperature_sweep.csv", &csv)?;
    let series: Vec<(String, Vec<f64>)> = sweep
        .curves
        .iter()
        .map(|c| {
            (
                format!("T={} {} seed {}", c.temperature, c.mode, c.seed),
                c.curve.clone(),
            )
        })
        .collect();
    plan.write(
        "temperature_sweep.svg",
        &curves_to_svg(&series, &format!("{} training objective", sweep.scenario)),
    )?;
    Ok(sweep)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSweepCell {
    pub irrelevant: usize,
    pub mode: String,
    pub seed: u64,
    pub final_mean: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NodeSweep {
    pub cells: Vec<NodeSweepCell>,
}

impl NodeSweep {
    /// Across-seed mean of the final objective for a (count, mode) cell.
    pub fn mean_for(&self, irrelevant: usize, mode: &str) -> f64 {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.irrelevant == irrelevant && c.mode == mode)
            .map(|c| c.final_mean)
            .collect();
        mean_std(&vals).0
    }
}

/// Trains the causal and baseline configurations at each irrelevant-vehicle
/// count on the pedestrian scenario.
pub fn run_node_sweep(plan: &ExperimentPlan) -> Result<NodeSweep> {
    plan.validate(ExperimentKind::NodeSweep)?;
    if plan.scenarios[0] != "pedestrian" {
        return Err(Error::Config(
            "the irrelevant-node sweep runs on the pedestrian scenario".into(),
        ));
    }
    plan.write_manifest("pedestrian")?;
    let modes = [MaskMode::Causal, MaskMode::Baseline];
    let jobs: Vec<(usize, MaskMode, u64)> = plan
        .node_counts
        .iter()
        .flat_map(|&n| {
            modes
                .iter()
                .flat_map(move |&m| plan.seeds.iter().map(move |&s| (n, m, s)))
        })
        .collect();
    let cells: Result<Vec<NodeSweepCell>> = jobs
        .par_iter()
        .map(|&(irrelevant, mode, seed)| {
            let spec = scenarios::pedestrian_scenario(irrelevant);
            let config = plan.config_for(seed, mode);
            let (_, metrics) = train(config, &spec)?;
            Ok(NodeSweepCell {
                irrelevant,
                mode: mode.label().to_string(),
                seed,
                final_mean: metrics.final_window(100).0,
            })
        })
        .collect();
    let sweep = NodeSweep { cells: cells? };
    let mut csv = String::from("irrelevant,mode,seed,final_mean\n");
    for c in &sweep.cells {
        let _ = writeln!(csv, "{},{},{},{:.4}", c.irrelevant, c.mode, c.seed, c.final_mean);
    }
    plan.write("node_sweep.csv", &csv)?;
    Ok(sweep)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub scenario: String,
    pub seed: u64,
    /// No-collision rate on generated scenarios after training on random
    /// scenarios.
    pub random_trained: f64,
    /// Same, after training on generated scenarios.
    pub generated_trained: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub cells: Vec<RobustnessCell>,
}

impl RobustnessTable {
    /// Seeds on which the generated-trained agent beat the random-trained
    /// one, per scenario.
    pub fn wins(&self, scenario: &str) -> (usize, usize) {
        let cells: Vec<&RobustnessCell> = self
            .cells
            .iter()
            .filter(|c| c.scenario == scenario)
            .collect();
        let wins = cells
            .iter()
            .filter(|c| c.generated_trained > c.random_trained)
            .count();
        (wins, cells.len())
    }
}

/// Trains a driving agent under random and under generated scenarios and
/// evaluates both on generated scenarios. Requires a trained generator
/// checkpoint per scenario.
pub fn run_robustness(plan: &ExperimentPlan) -> Result<RobustnessTable> {
    plan.validate(ExperimentKind::Robustness)?;
    if plan.eval_count == 0 {
        return Err(Error::EmptyEvaluationSet);
    }
    let mut cells = Vec::new();
    for scenario in &plan.scenarios {
        let spec = scenarios::by_name(scenario, plan.irrelevant)?;
        let ckpt_path = plan
            .checkpoints
            .get(scenario)
            .ok_or_else(|| Error::MissingCheckpoint(format!("no checkpoint for {scenario}")))?;
        let ckpt = crate::flow::load_flow(ckpt_path)?;
        let flow = ckpt.restore();
        let generated = ScenarioSource::Generated {
            flow: &flow,
            mask_mode: MaskMode::Causal,
            temperature: plan.eval_temperature,
        };

        // fixed evaluation set per scenario: generated scenarios that are
        // confirmed safety-critical under the scripted AV policy
        let mut eval_set: Vec<BehavioralGraph> = Vec::new();
        let mut attempts: u64 = 0;
        while eval_set.len() < plan.eval_count && attempts < 50 * plan.eval_count as u64 {
            let bg = generated.sample(&spec, episode_seed(0xE7A1_5EED, attempts))?;
            attempts += 1;
            let trace = crate::sim::execute(&bg, &spec)?;
            if crate::sim::objective(&trace, spec.collision_threshold) > 0.5 {
                eval_set.push(bg);
            }
        }
        if eval_set.len() < plan.eval_count {
            return Err(Error::Config(format!(
                "checkpoint for {scenario} yields too few critical scenarios \
                 ({} of {} after {attempts} samples)",
                eval_set.len(),
                plan.eval_count
            )));
        }

        for &seed in &plan.seeds {
            let agent_config = AgentConfig {
                training_episodes: plan.agent_episodes,
                seed,
                ..AgentConfig::default()
            };
            let mut random_agent = DrivingAgent::new(agent_config.clone());
            agent::train_agent(&mut random_agent, &spec, &ScenarioSource::Random, &agent_config)?;
            let mut generated_agent = DrivingAgent::new(agent_config.clone());
            agent::train_agent(&mut generated_agent, &spec, &generated, &agent_config)?;

            cells.push(RobustnessCell {
                scenario: scenario.clone(),
                seed,
                random_trained: agent::evaluate_agent(&random_agent, &spec, &eval_set)?,
                generated_trained: agent::evaluate_agent(&generated_agent, &spec, &eval_set)?,
            });
        }
    }
    let table = RobustnessTable { cells };
    let mut csv = String::from("scenario,seed,random_trained,generated_trained\n");
    for c in &table.cells {
        let _ = writeln!(
            csv,
            "{},{},{:.4},{:.4}",
            c.scenario, c.seed, c.random_trained, c.generated_trained
        );
    }
    plan.write("robustness.csv", &csv)?;
    Ok(table)
}

/// Trains per causal-graph variant and reports collision likelihoods versus
/// structural distance (the monotonicity probe).
pub fn run_probe(plan: &ExperimentPlan) -> Result<Vec<ProbeReport>> {
    plan.validate(ExperimentKind::Probe)?;
    let scenario = &plan.scenarios[0];
    let spec = scenarios::by_name(scenario, plan.irrelevant)?;
    let (parent, child) = match scenario.as_str() {
        "pedestrian" | "lane-changing" => ("S", "A"),
        "traffic-light" => ("T", "A"),
        _ => ("S", "A"),
    };
    let reduced = spec.cg.without_edge(parent, child)?;
    let variants = vec![spec.cg.clone(), reduced];

    let reports: Result<Vec<ProbeReport>> = plan
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut config = plan.config_for(seed, MaskMode::Causal);
            // the deleted edge only binds when the parent's placement stays
            // externally randomized, so probe runs condition on it
            config.condition = crate::train::ConditionMode::UniformPrefix {
                types: vec![parent.to_string()],
            };
            likelihood_probe(&config, &spec, &variants, plan.probe_samples)
        })
        .collect();
    let reports = reports?;
    let mut csv = String::from("seed,variant,shd,collision_rate\n");
    for (seed, report) in plan.seeds.iter().zip(&reports) {
        for v in &report.variants {
            let _ = writeln!(csv, "{},{},{},{:.4}", seed, v.name, v.shd, v.collision_rate);
        }
    }
    plan.write("probe.csv", &csv)?;
    Ok(reports)
}

/// Trains a generator and writes its checkpoint; the entry point behind the
/// `train` CLI verb and the robustness prerequisite.
pub fn train_generator(
    scenario: &str,
    config: TrainConfig,
    out_dir: &Path,
) -> Result<(PathBuf, crate::train::TrainMetrics)> {
    train_generator_with(scenario, 3, config, out_dir)
}

/// [`train_generator`] with an explicit irrelevant-vehicle count.
pub fn train_generator_with(
    scenario: &str,
    irrelevant: usize,
    config: TrainConfig,
    out_dir: &Path,
) -> Result<(PathBuf, crate::train::TrainMetrics)> {
    let spec = scenarios::by_name(scenario, irrelevant)?;
    std::fs::create_dir_all(out_dir)?;
    let mut trainer = crate::train::ReinforceTrainer::new(config.clone(), &spec)?;
    let mut metrics = crate::train::TrainMetrics::default();
    trainer.train(&spec, &mut metrics, Some(out_dir))?;
    let ckpt_path = out_dir.join(format!("{scenario}.json"));
    crate::flow::save_flow(
        &FlowCheckpoint::capture(&trainer.flow, config.seed, trainer.episodes_done()),
        &ckpt_path,
    )?;
    metrics.export_csv(&out_dir.join("metrics.csv"))?;
    RunManifest::new(scenario, &config, &[config.seed]).save(out_dir)?;
    Ok((ckpt_path, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_kind_mismatch_is_rejected() {
        let plan = ExperimentPlan::new(ExperimentKind::Ablation, &["pedestrian"], &[0]);
        assert!(run_temperature_sweep(&plan).is_err());
    }

    #[test]
    fn sweep_needs_two_temperatures() {
        let mut plan =
            ExperimentPlan::new(ExperimentKind::TemperatureSweep, &["pedestrian"], &[0]);
        plan.temperatures = vec![5.0];
        assert!(matches!(
            run_temperature_sweep(&plan),
            Err(Error::TooFewTemperatures(1))
        ));
    }

    #[test]
    fn node_sweep_requires_pedestrian() {
        let plan = ExperimentPlan::new(ExperimentKind::NodeSweep, &["traffic-light"], &[0]);
        assert!(run_node_sweep(&plan).is_err());
    }

    #[test]
    fn robustness_requires_checkpoint() {
        let mut plan = ExperimentPlan::new(ExperimentKind::Robustness, &["pedestrian"], &[0]);
        plan.eval_count = 4;
        assert!(matches!(
            run_robustness(&plan),
            Err(Error::MissingCheckpoint(_))
        ));
    }

    #[test]
    fn ablation_table_formatting_is_stable() {
        let table = AblationTable {
            cells: vec![
                AblationCell {
                    scenario: "pedestrian".into(),
                    mode: "baseline".into(),
                    seed: 0,
                    final_mean: 0.25,
                    final_std: 0.43,
                },
                AblationCell {
                    scenario: "pedestrian".into(),
                    mode: "order-mask".into(),
                    seed: 0,
                    final_mean: 0.55,
                    final_std: 0.50,
                },
                AblationCell {
                    scenario: "pedestrian".into(),
                    mode: "causal".into(),
                    seed: 0,
                    final_mean: 0.85,
                    final_std: 0.36,
                },
            ],
        };
        let a = format_ablation_table(&table);
        let b = format_ablation_table(&table);
        assert_eq!(a, b);
        assert!(a.contains("pedestrian"));
        assert!(a.contains("0.85"));
    }
}
