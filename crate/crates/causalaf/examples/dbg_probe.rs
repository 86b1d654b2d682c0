use causalaf::experiments::{run_probe, ExperimentKind, ExperimentPlan};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let episodes: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    let mut plan = ExperimentPlan::new(ExperimentKind::Probe, &[args.get(2).map(|s| s.as_str()).unwrap_or("pedestrian")], &[0, 1, 2]);
    plan.episodes = episodes;
    plan.probe_samples = 400;
    let reports = run_probe(&plan).unwrap();
    let mut wins = 0;
    for (seed, report) in [0, 1, 2].iter().zip(&reports) {
        let t = report.variants[0].collision_rate;
        let d = report.variants[1].collision_rate;
        println!(
            "seed {seed}: true-cg {:.3} vs deleted-edge {:.3} (ordered: {:?})",
            t, d, report.ordered_by_shd
        );
        if t > d {
            wins += 1;
        }
    }
    println!("true CG higher on {wins}/3 seeds");
}
