use causalaf::generate::MaskMode;
use causalaf::scenarios;
use causalaf::train::{BaselineMode, ReinforceTrainer, TemperatureSchedule, TrainConfig};

fn main() {
    let spec = scenarios::by_name("pedestrian", 1).unwrap();
    let config = TrainConfig {
        learning_rate: 0.01,
        total_episodes: 2000,
        temperature: TemperatureSchedule::Constant(5.0),
        baseline: BaselineMode::MovingAverage { decay: 0.9 },
        mask_mode: MaskMode::Causal,
        seed: 1,
        early_stop: false,
        grad_clip: Some(5.0),
        ..TrainConfig::default()
    };
    let mut trainer = ReinforceTrainer::new(config, &spec).unwrap();
    for update in 0..125 {
        let batch = trainer.rollout_batch(&spec, 16).unwrap();
        let mean = batch.iter().map(|(_, r)| r).sum::<f64>() / 16.0;
        // sigma stats across one probe record
        let probe = &batch[0].0;
        let mut sig_min = f64::INFINITY;
        let mut sig_sum = 0.0;
        let mut sig_n = 0;
        let mut logp_mean = 0.0;
        for (rec, _) in &batch {
            logp_mean += rec.log_likelihood() / 16.0;
        }
        for step in &probe.steps {
            for layer in &step.layers {
                for s in layer.log_sigma.iter() {
                    sig_min = sig_min.min(s.exp());
                    sig_sum += s.exp();
                    sig_n += 1;
                }
            }
        }
        let grad = trainer.reinforce_update(&batch).unwrap();
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if update % 5 == 0 || (90..110).contains(&update) {
            println!(
                "upd {update:>3}: reward {mean:.2} | sigma min {sig_min:.4} mean {:.3} | logp {logp_mean:>8.1} | grad {gnorm:>9.2}",
                sig_sum / sig_n as f64
            );
        }
    }
}
