use causalaf::generate::{sample_bg, MaskMode, SamplerConfig};
use causalaf::scenarios;
use causalaf::sim::{execute, instantiate, objective, Behavior};
use causalaf::train::{episode_seed, train, BaselineMode, TemperatureSchedule, TrainConfig};

fn main() {
    let spec = scenarios::by_name("traffic-light", 1).unwrap();
    let config = TrainConfig {
        learning_rate: 0.01,
        batch_size: 16,
        total_episodes: 2000,
        temperature: TemperatureSchedule::Linear { from: 5.0, to: 1.5 },
        baseline: BaselineMode::MovingAverage { decay: 0.9 },
        mask_mode: MaskMode::Causal,
        seed: 0,
        early_stop: false,
        ..TrainConfig::default()
    };
    let (flow, metrics) = train(config, &spec).unwrap();
    println!("final {:.2}", metrics.final_window(100).0);
    let mut hits = 0;
    for k in 0..30u64 {
        let cfg = SamplerConfig {
            cg: spec.cg.clone(),
            dims: spec.dims,
            temperature: 1.5,
            mask_mode: MaskMode::Causal,
            condition: None,
            seed: episode_seed(777, k),
        };
        let (bg, _) = sample_bg(&flow, &cfg).unwrap();
        let objs = instantiate(&bg, &spec).unwrap();
        let trace = execute(&bg, &spec).unwrap();
        let hit = objective(&trace, spec.collision_threshold);
        hits += hit as u64;
        let mut green = f64::NAN;
        let mut a_x = f64::NAN;
        let mut a_v = f64::NAN;
        let mut r_y = f64::NAN;
        let mut r_v = f64::NAN;
        let mut order = String::new();
        for o in &objs {
            match o.behavior {
                Behavior::Light { green_at } => green = green_at,
                Behavior::Av => { a_x = o.pos.x; a_v = o.speed; }
                Behavior::Constant if o.kind == causalaf::sim::ObjectKind::Vehicle && o.pos.y > 5.0 => {
                    r_y = o.pos.y; r_v = o.speed;
                }
                _ => {}
            }
        }
        for i in 0..bg.node_count() { order += spec.cg.type_name(bg.type_of(i)); }
        let t_a = -a_x / a_v;           // unimpeded arrival at x=0
        let t_r = r_y / r_v.max(0.01);  // R arrival at y=0
        println!(
            "{k:>2} [{order}] green {green:.2} | A x {a_x:>6.1} v {a_v:.1} tA {t_a:.2} | R y {r_y:>5.1} v {r_v:.1} tR {t_r:.2} | min {:.2} hit {hit}",
            trace.min_distance
        );
    }
    println!("rate {}/30", hits);
}
