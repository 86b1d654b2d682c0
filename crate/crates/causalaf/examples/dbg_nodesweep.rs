use causalaf::experiments::{run_node_sweep, ExperimentKind, ExperimentPlan};

fn main() {
    let mut plan = ExperimentPlan::new(ExperimentKind::NodeSweep, &["pedestrian"], &[0, 1, 2]);
    plan.episodes = 2000;
    let sweep = run_node_sweep(&plan).unwrap();
    for n in [0usize, 1, 2, 3] {
        println!(
            "I={n}: causal {:.3}  baseline {:.3}",
            sweep.mean_for(n, "causal"),
            sweep.mean_for(n, "baseline")
        );
    }
    let causal: Vec<f64> = (0..4).map(|n| sweep.mean_for(n, "causal")).collect();
    let spread = causal.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - causal.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("causal spread across counts: {spread:.3}");
}
