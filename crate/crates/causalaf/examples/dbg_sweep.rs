use causalaf::generate::MaskMode;
use causalaf::scenarios;
use causalaf::train::{train, BaselineMode, TemperatureSchedule, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = args.get(1).map(|s| s.as_str()).unwrap_or("pedestrian");
    let spec = scenarios::by_name(scenario, 1).unwrap();
    println!("== {scenario}");
    let combos: Vec<(f64, usize, TemperatureSchedule, &str)> = vec![
        (0.01, 16, TemperatureSchedule::Linear { from: 5.0, to: 0.7 }, "lr.01 b16 T5->0.7"),
        (0.015, 16, TemperatureSchedule::Linear { from: 5.0, to: 0.7 }, "lr.015 b16 T5->0.7"),
        (0.01, 16, TemperatureSchedule::Linear { from: 6.0, to: 0.8 }, "lr.01 b16 T6->0.8"),
        (0.015, 24, TemperatureSchedule::Linear { from: 6.0, to: 0.8 }, "lr.015 b24 T6->0.8"),
    ];
    for (lr, batch, temp, label) in combos {
        let mut line = format!("{label:<20}");
        for seed in [0u64, 1, 2] {
            let config = TrainConfig {
                learning_rate: lr,
                batch_size: batch,
                total_episodes: 2000,
                temperature: temp,
                baseline: BaselineMode::MovingAverage { decay: 0.9 },
                mask_mode: MaskMode::Causal,
                seed,
                early_stop: false,
                ..TrainConfig::default()
            };
            let (_, metrics) = train(config, &spec).unwrap();
            let (m, _) = metrics.final_window(100);
            line += &format!(" {m:.2}");
        }
        println!("{line}");
    }
}
