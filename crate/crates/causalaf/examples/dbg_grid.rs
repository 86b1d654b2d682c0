use causalaf::generate::MaskMode;
use causalaf::scenarios;
use causalaf::train::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = args.get(1).map(|s| s.as_str()).unwrap_or("traffic-light");
    let n_i: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let spec = scenarios::by_name(scenario, n_i).unwrap();
    println!("== {scenario} n_I={n_i}");
    for mode in [MaskMode::Causal, MaskMode::OrderMask, MaskMode::Baseline] {
        let mut line = format!("  {:<10}", mode.label());
        for seed in 0..6u64 {
            let config = TrainConfig {
                mask_mode: mode,
                seed,
                early_stop: false,
                ..TrainConfig::default()
            };
            let (_, metrics) = train(config, &spec).unwrap();
            line += &format!(" {:.2}", metrics.final_window(100).0);
        }
        println!("{line}");
    }
}
