//! Thin command-line front end over the library: train generators, sample
//! and simulate scenarios, render artifacts, run the experiment harness and
//! the causal-structure probe.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use causalaf::error::Result;
use causalaf::experiments::{self, ExperimentKind, ExperimentPlan};
use causalaf::flow::{load_flow, FlowConfig, FlowModel};
use causalaf::generate::{sample_bg, save_bg, MaskMode, SamplerConfig};
use causalaf::render::{render, Renderable};
use causalaf::scenarios;
use causalaf::sim::{execute, objective, ScenarioTrace};
use causalaf::train::{TemperatureSchedule, TrainConfig};

#[derive(Parser)]
#[command(name = "causalaf", version, about = "causal scenario generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario family: traffic-light | pedestrian | lane-changing.
    #[arg(long, default_value = "pedestrian")]
    scenario: String,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling temperature.
    #[arg(long, default_value_t = 5.0)]
    temperature: f64,
    /// Output directory or file.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Optional TOML file with training-config overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Irrelevant vehicles present in the scenario.
    #[arg(long, default_value_t = 3)]
    irrelevant: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a scenario generator and write its checkpoint and metrics.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        /// Mask mode: baseline | order-mask | causal.
        #[arg(long, default_value = "causal")]
        masks: String,
    },
    /// Sample behavioral graphs (from a checkpoint or a fresh flow).
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = "causal")]
        masks: String,
    },
    /// Sample (or load) a graph, run the simulator, export trace artifacts.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Simulate this saved behavioral graph instead of sampling.
        #[arg(long)]
        bg: Option<PathBuf>,
        #[arg(long, default_value = "causal")]
        masks: String,
    },
    /// Render a saved behavioral graph or trace to SVG/CSV.
    Render {
        /// Input file: a behavioral graph (.json) or trace (.json).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "svg")]
        format: String,
        #[arg(long, default_value = "pedestrian")]
        scenario: String,
        #[arg(long, default_value = "out.svg")]
        out: PathBuf,
    },
    /// Run an experiment: ablation | temperature-sweep | node-sweep | robustness.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        kind: String,
        /// Comma-separated seeds.
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        /// Comma-separated temperatures (temperature sweep).
        #[arg(long, default_value = "5,10")]
        temperatures: String,
        /// Comma-separated irrelevant-vehicle counts (node sweep).
        #[arg(long, default_value = "0,1,2,3")]
        counts: String,
        /// Checkpoint directory holding <scenario>.json files (robustness).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Driving-agent training episodes (robustness).
        #[arg(long, default_value_t = 600)]
        agent_episodes: usize,
    },
    /// Empirical monotonicity probe over causal-graph edge deletions.
    Probe {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
        #[arg(long, default_value_t = 800)]
        episodes: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| causalaf::Error::Config(format!("bad list entry `{p}`")))
        })
        .collect()
}

fn load_train_config(common: &CommonArgs, episodes: usize, masks: &str) -> Result<TrainConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text)
                .map_err(|e| causalaf::Error::Config(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    config.seed = common.seed;
    config.total_episodes = episodes;
    config.temperature = TemperatureSchedule::Constant(common.temperature);
    config.mask_mode = MaskMode::parse(masks)?;
    Ok(config)
}

fn flow_for(common: &CommonArgs, checkpoint: &Option<PathBuf>, spec_dims: causalaf::graph::GraphDims) -> Result<FlowModel> {
    match checkpoint {
        Some(path) => Ok(load_flow(path)?.restore()),
        None => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(common.seed);
            Ok(FlowModel::new(FlowConfig::new(spec_dims), &mut rng))
        }
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            common,
            episodes,
            masks,
        } => {
            let config = load_train_config(&common, episodes, &masks)?;
            let (ckpt, metrics) = experiments::train_generator_with(
                &common.scenario,
                common.irrelevant,
                config,
                &common.out,
            )?;
            let (mean, std) = metrics.final_window(100);
            println!("checkpoint: {}", ckpt.display());
            println!("final objective (last 100 episodes): {mean:.3} +- {std:.3}");
        }
        Command::Generate {
            common,
            checkpoint,
            count,
            masks,
        } => {
            let spec = scenarios::by_name(&common.scenario, common.irrelevant)?;
            let flow = flow_for(&common, &checkpoint, spec.dims)?;
            std::fs::create_dir_all(&common.out)?;
            for k in 0..count {
                let cfg = SamplerConfig {
                    cg: spec.cg.clone(),
                    dims: spec.dims,
                    temperature: common.temperature,
                    mask_mode: MaskMode::parse(&masks)?,
                    condition: None,
                    seed: causalaf::train::episode_seed(common.seed, k as u64),
                };
                let (bg, record) = sample_bg(&flow, &cfg)?;
                let path = common.out.join(format!("bg_{k:03}.json"));
                save_bg(&bg, &spec.cg, &path)?;
                let violations = causalaf::graph::validate_bg(&bg, &spec.cg);
                println!(
                    "{}: {} nodes, log-likelihood {:.2}, violations {}",
                    path.display(),
                    bg.node_count(),
                    record.log_likelihood(),
                    violations.len()
                );
            }
        }
        Command::Simulate {
            common,
            checkpoint,
            bg,
            masks,
        } => {
            let spec = scenarios::by_name(&common.scenario, common.irrelevant)?;
            let graph = match bg {
                Some(path) => causalaf::generate::load_bg(&path)?,
                None => {
                    let flow = flow_for(&common, &checkpoint, spec.dims)?;
                    let cfg = SamplerConfig {
                        cg: spec.cg.clone(),
                        dims: spec.dims,
                        temperature: common.temperature,
                        mask_mode: MaskMode::parse(&masks)?,
                        condition: None,
                        seed: common.seed,
                    };
                    sample_bg(&flow, &cfg)?.0
                }
            };
            let trace = execute(&graph, &spec)?;
            std::fs::create_dir_all(&common.out)?;
            trace.save_json(&common.out.join("trace.json"))?;
            trace.export_csv(&common.out.join("trace.csv"))?;
            render(
                &Renderable::Trace(&trace, Some(&spec)),
                "svg",
                &common.out.join("trace.svg"),
            )?;
            save_bg(&graph, &spec.cg, &common.out.join("bg.json"))?;
            println!(
                "steps {}, min distance {:.3} m, collided {}, objective {}",
                trace.step_count,
                trace.min_distance,
                trace.collided,
                objective(&trace, spec.collision_threshold)
            );
        }
        Command::Render {
            input,
            format,
            scenario,
            out,
        } => {
            let text = std::fs::read_to_string(&input)?;
            let spec = scenarios::by_name(&scenario, 1)?;
            if let Ok(trace) = serde_json::from_str::<ScenarioTrace>(&text) {
                render(&Renderable::Trace(&trace, Some(&spec)), &format, &out)?;
            } else {
                let bg = causalaf::generate::load_bg(&input)?;
                render(&Renderable::Graph(&bg, &spec.cg), &format, &out)?;
            }
            println!("wrote {}", out.display());
        }
        Command::Eval {
            common,
            kind,
            seeds,
            episodes,
            temperatures,
            counts,
            checkpoint,
            agent_episodes,
        } => {
            let seeds: Vec<u64> = parse_list(&seeds)?;
            let kind = match kind.as_str() {
                "ablation" => ExperimentKind::Ablation,
                "temperature-sweep" => ExperimentKind::TemperatureSweep,
                "node-sweep" => ExperimentKind::NodeSweep,
                "robustness" => ExperimentKind::Robustness,
                other => {
                    return Err(causalaf::Error::Config(format!(
                        "unknown experiment kind `{other}`"
                    )))
                }
            };
            let mut plan = ExperimentPlan::new(
                kind,
                &[common.scenario.as_str()],
                &seeds,
            );
            plan.episodes = episodes;
            plan.temperatures = parse_list(&temperatures)?;
            plan.node_counts = parse_list(&counts)?;
            plan.agent_episodes = agent_episodes;
            plan.irrelevant = common.irrelevant;
            plan.out_dir = Some(common.out.clone());
            plan.train = load_train_config(&common, episodes, "causal")?;
            if let Some(dir) = checkpoint {
                let mut map = BTreeMap::new();
                map.insert(common.scenario.clone(), dir.join(format!("{}.json", common.scenario)));
                plan.checkpoints = map;
            }
            match kind {
                ExperimentKind::Ablation => {
                    let table = experiments::run_ablation(&plan)?;
                    print!("{}", experiments::format_ablation_table(&table));
                }
                ExperimentKind::TemperatureSweep => {
                    let sweep = experiments::run_temperature_sweep(&plan)?;
                    for c in &sweep.curves {
                        println!(
                            "T={} {} seed {}: final {:.3}, roughness {:.3}",
                            c.temperature, c.mode, c.seed, c.final_mean, c.roughness
                        );
                    }
                }
                ExperimentKind::NodeSweep => {
                    let sweep = experiments::run_node_sweep(&plan)?;
                    for n in &plan.node_counts {
                        println!(
                            "I={n}: causal {:.3}, baseline {:.3}",
                            sweep.mean_for(*n, "causal"),
                            sweep.mean_for(*n, "baseline")
                        );
                    }
                }
                ExperimentKind::Robustness => {
                    let table = experiments::run_robustness(&plan)?;
                    for c in &table.cells {
                        println!(
                            "{} seed {}: random {:.3}, generated {:.3}",
                            c.scenario, c.seed, c.random_trained, c.generated_trained
                        );
                    }
                }
                ExperimentKind::Probe => unreachable!(),
            }
        }
        Command::Probe {
            common,
            seeds,
            episodes,
            samples,
        } => {
            let seeds: Vec<u64> = parse_list(&seeds)?;
            let mut plan = ExperimentPlan::new(
                ExperimentKind::Probe,
                &[common.scenario.as_str()],
                &seeds,
            );
            plan.episodes = episodes;
            plan.probe_samples = samples;
            plan.irrelevant = common.irrelevant;
            plan.out_dir = Some(common.out.clone());
            plan.train = load_train_config(&common, episodes, "causal")?;
            let reports = experiments::run_probe(&plan)?;
            for (seed, report) in seeds.iter().zip(&reports) {
                for v in &report.variants {
                    println!(
                        "seed {seed}: {} (shd {}) collision rate {:.3}",
                        v.name, v.shd, v.collision_rate
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
