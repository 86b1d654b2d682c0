use causalaf::agent::{train_agent, AgentConfig, DrivingAgent, ScenarioSource, episode_return};
use causalaf::scenarios;
use causalaf::sim::{execute_with_policy, execute, objective};
use causalaf::train::episode_seed;

fn main() {
    let spec = scenarios::by_name("pedestrian", 3).unwrap();
    // how threatening is random training?
    let mut hits = 0;
    for k in 0..500u64 {
        let bg = causalaf::agent::random_scenario(&spec, k);
        let t = execute(&bg, &spec).unwrap();
        if objective(&t, spec.collision_threshold) > 0.5 { hits += 1; }
    }
    println!("rule-based collision rate on uniform scenes: {:.3}", hits as f64 / 500.0);

    let config = AgentConfig { training_episodes: 600, seed: 0, ..AgentConfig::default() };
    let mut agent = DrivingAgent::new(config.clone());
    let result = train_agent(&mut agent, &spec, &ScenarioSource::Random, &config).unwrap();
    let h = &result.mean_return_history;
    println!("random-agent return curve: start {:.2} mid {:.2} end {:.2}", h[0], h[h.len()/2], h[h.len()-1]);

    // behavior probe: average speed profile on a random scene
    for k in [3u64, 7] {
        let bg = causalaf::agent::random_scenario(&spec, episode_seed(1234, k));
        let mut p = agent.policy();
        let t = execute_with_policy(&bg, &spec, &mut p).unwrap();
        let speeds: Vec<f64> = t.states.iter().step_by(20)
            .map(|s| s.iter().find(|o| o.kind == causalaf::sim::ObjectKind::Av).map(|o| o.speed).unwrap_or(0.0))
            .collect();
        println!("scene {k}: collided {} speeds {:?}", t.collided, speeds.iter().map(|v| (v*10.0).round()/10.0).collect::<Vec<_>>());
    }
}
