use causalaf::agent::random_scenario;
use causalaf::flow::{FlowConfig, FlowModel};
use causalaf::generate::{sample_bg, MaskMode, SamplerConfig};
use causalaf::scenarios;
use causalaf::sim::{execute, objective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn main() {
    let n = 2000u64;
    for name in scenarios::SCENARIO_NAMES {
        let spec = scenarios::by_name(name, 3).unwrap();
        // uniform attributes, fixed valid structure
        let uniform_rate: f64 = (0..n).into_par_iter().map(|seed| {
            let bg = random_scenario(&spec, seed);
            let t = execute(&bg, &spec).unwrap();
            objective(&t, spec.collision_threshold)
        }).sum::<f64>() / n as f64;

        // untrained flow at T=5 under each mask mode
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let flow = FlowModel::new(FlowConfig::new(spec.dims), &mut rng);
        let mut line = format!("{name:<14} uniform {uniform_rate:.3}");
        for mode in [MaskMode::Causal, MaskMode::OrderMask, MaskMode::Baseline] {
            let rate: f64 = (0..n).into_par_iter().map(|seed| {
                let cfg = SamplerConfig {
                    cg: spec.cg.clone(), dims: spec.dims, temperature: 5.0,
                    mask_mode: mode, condition: None, seed,
                };
                let (bg, _) = sample_bg(&flow, &cfg).unwrap();
                let t = execute(&bg, &spec).unwrap();
                objective(&t, spec.collision_threshold)
            }).sum::<f64>() / n as f64;
            line += &format!("  {} {rate:.3}", mode.label());
        }
        println!("{line}");
    }
}
