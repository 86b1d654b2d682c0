use causalaf::generate::MaskMode;
use causalaf::scenarios;
use causalaf::train::{train, BaselineMode, TemperatureSchedule, TrainConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = args.get(1).map(|s| s.as_str()).unwrap_or("pedestrian");
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let temp: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(5.0);

    let spec = scenarios::by_name(scenario, 1).unwrap();
    println!("{scenario}: episodes {episodes}, lr {lr}, T {temp}");
    for mode in [MaskMode::Causal, MaskMode::OrderMask, MaskMode::Baseline] {
        for seed in [0u64, 1, 2] {
            let t0 = Instant::now();
            let config = TrainConfig {
                learning_rate: lr,
                total_episodes: episodes,
                temperature: TemperatureSchedule::Constant(temp),
                baseline: BaselineMode::MovingAverage { decay: 0.9 },
                mask_mode: mode,
                seed,
                early_stop: false,
                ..TrainConfig::default()
            };
            let (_, metrics) = train(config, &spec).unwrap();
            let (final_mean, final_std) = metrics.final_window(100);
            // quarters of the curve for shape
            let rewards = &metrics.episode_rewards;
            let q = rewards.len() / 4;
            let quarter = |a: usize, b: usize| -> f64 {
                rewards[a..b].iter().sum::<f64>() / (b - a).max(1) as f64
            };
            println!(
                "  {:<10} seed {}: final {final_mean:.3}+-{final_std:.2} | quarters {:.2} {:.2} {:.2} {:.2} | {:.1}s",
                mode.label(), seed,
                quarter(0, q), quarter(q, 2 * q), quarter(2 * q, 3 * q), quarter(3 * q, rewards.len()),
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
