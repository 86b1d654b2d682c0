use causalaf::experiments::{run_robustness, train_generator, ExperimentKind, ExperimentPlan};
use causalaf::train::TrainConfig;
use std::collections::BTreeMap;
use std::path::PathBuf;

fn main() {
    let tmp = PathBuf::from("/tmp/robust_ckpts");
    std::fs::create_dir_all(&tmp).unwrap();
    let mut checkpoints = BTreeMap::new();
    for scenario in ["traffic-light", "pedestrian", "lane-changing"] {
        let path = tmp.join(format!("{scenario}.json"));
        if !path.exists() {
            let config = TrainConfig { seed: 0, early_stop: false, ..TrainConfig::default() };
            let (p, m) = train_generator(scenario, config, &tmp).unwrap();
            println!("trained {scenario}: final {:.2} -> {}", m.final_window(100).0, p.display());
        }
        checkpoints.insert(scenario.to_string(), path);
    }
    let mut plan = ExperimentPlan::new(
        ExperimentKind::Robustness,
        &["traffic-light", "pedestrian", "lane-changing"],
        &[0, 1, 2],
    );
    plan.checkpoints = checkpoints;
    plan.eval_count = 60;
    plan.agent_episodes = 600;
    let table = run_robustness(&plan).unwrap();
    for c in &table.cells {
        println!(
            "{:<14} seed {}: random-trained {:.3} vs generated-trained {:.3}",
            c.scenario, c.seed, c.random_trained, c.generated_trained
        );
    }
    for s in ["traffic-light", "pedestrian", "lane-changing"] {
        let (w, n) = table.wins(s);
        println!("{s}: generated-trained wins on {w}/{n} seeds");
    }
}
