use causalaf::flow::load_flow;
use causalaf::generate::{sample_bg, MaskMode, SamplerConfig};
use causalaf::scenarios;
use causalaf::sim::{execute, execute_with_policy, AvObservation, AvPolicy, Action, objective};
use causalaf::train::episode_seed;
use std::path::PathBuf;

struct FixedAccel(f64);
impl AvPolicy for FixedAccel {
    fn act(&mut self, obs: &AvObservation) -> Action {
        Action { accel: self.0, steer: obs.route_steer }
    }
}

fn main() {
    for scenario in ["traffic-light", "pedestrian", "lane-changing"] {
        let spec = scenarios::by_name(scenario, 3).unwrap();
        let flow = load_flow(&PathBuf::from(format!("/tmp/robust_ckpts/{scenario}.json"))).unwrap().restore();
        for temp in [1.0, 2.0, 3.0] {
            // rejection-sample scenes that collide under the rule-based policy
            let mut scenes = Vec::new();
            let mut attempts = 0u64;
            while scenes.len() < 40 && attempts < 4000 {
                let cfg = SamplerConfig {
                    cg: spec.cg.clone(), dims: spec.dims, temperature: temp,
                    mask_mode: MaskMode::Causal, condition: None,
                    seed: episode_seed(99, attempts),
                };
                attempts += 1;
                let (bg, _) = sample_bg(&flow, &cfg).unwrap();
                let t = execute(&bg, &spec).unwrap();
                if objective(&t, spec.collision_threshold) > 0.5 {
                    scenes.push(bg);
                }
            }
            let yield_rate = scenes.len() as f64 / attempts as f64;
            let mut line = format!("{scenario:<14} T{temp}: yield {yield_rate:.2} |");
            for (name, accel) in [("full", 2.5), ("coast", 0.0), ("gentle-brake", -1.0)] {
                let mut collisions = 0;
                for bg in &scenes {
                    let mut p = FixedAccel(accel);
                    let t = execute_with_policy(bg, &spec, &mut p).unwrap();
                    if t.min_distance < spec.collision_threshold { collisions += 1; }
                }
                line += &format!(" {name} {:.2}", collisions as f64 / scenes.len().max(1) as f64);
            }
            println!("{line}");
        }
    }
}
