//! Flow correctness properties: invertibility, normalization by quadrature,
//! gradients against central finite differences, autoregressive causality of
//! the conditioners and visibility-mask effectiveness.

use causalaf::flow::{self, FlowConfig, FlowModel};
use causalaf::generate::{sample_bg, MaskMode, SamplerConfig};
use causalaf::graph::{BehavioralGraph, CausalGraph, GraphDims, TypeDecl};
use causalaf::scenarios;
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy_cg() -> CausalGraph {
    CausalGraph::build(
        "toy",
        vec![
            TypeDecl::new("X", &[]),
            TypeDecl::new("Y", &["X"]),
        ],
    )
    .unwrap()
}

fn toy_setup(seed: u64) -> (FlowModel, SamplerConfig) {
    let cg = toy_cg();
    let dims = GraphDims::new(2, 2, 2, 1);
    let config = FlowConfig::new(dims).with_hidden(&[6]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flow = FlowModel::new(config, &mut rng);
    // randomize every parameter so properties are tested off the origin
    let mut flat = flow.to_flat();
    for v in flat.iter_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    flow.set_flat(&flat);
    let cfg = SamplerConfig::new(cg, dims, 1.5, seed ^ 0xABCD);
    (flow, cfg)
}

#[test]
fn gradient_matches_finite_differences_over_random_draws() {
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let (flow, mut cfg) = toy_setup(draw);
        cfg.seed = draw.wrapping_mul(7919) + 13;
        let (_, record) = sample_bg(&flow, &cfg).unwrap();
        assert!(record.step_count() > 0);

        let grad = flow.grad_log_likelihood(&record).unwrap();
        let base = flow.to_flat();
        let h = 1e-5;
        // probe a deterministic subset of coordinates per draw plus the
        // largest-gradient coordinate
        let mut idx: Vec<usize> = (0..base.len()).step_by(17 + draw as usize % 5).collect();
        let (mx, _) = grad
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |acc, (k, g)| {
                if g.abs() > acc.1 {
                    (k, g.abs())
                } else {
                    acc
                }
            });
        idx.push(mx);
        for k in idx {
            let mut plus = base.clone();
            plus[k] += h;
            let mut minus = base.clone();
            minus[k] -= h;
            let mut fp = flow.clone();
            fp.set_flat(&plus);
            let mut fm = flow.clone();
            fm.set_flat(&minus);
            let fd = (fp.log_likelihood(&record).unwrap() - fm.log_likelihood(&record).unwrap())
                / (2.0 * h);
            let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
            assert!(
                rel < 1e-4,
                "draw {draw} coord {k}: grad {} vs fd {fd} (rel {rel:.2e})",
                grad[k]
            );
        }
    }
    println!("worst finite-difference relative error: {worst:.3e}");
}

#[test]
fn closed_form_gradient_at_zero_init() {
    // Zero-initialized output layers give mu = 0, sigma = 1 everywhere; the
    // gradient of the log-likelihood with respect to the final bias is then
    // x per mu coordinate and x^2 - 1 per log-sigma coordinate.
    let cg = toy_cg();
    let dims = GraphDims::new(2, 2, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let flow = FlowModel::new(FlowConfig::new(dims).with_hidden(&[6]), &mut rng);
    let cfg = SamplerConfig::new(cg, dims, 1.0, 99);
    let (_, record) = sample_bg(&flow, &cfg).unwrap();

    let grad = flow.grad_log_likelihood(&record).unwrap();
    // locate each network's final bias block within the flat layout
    let sizes = [16usize, 6, 6 * 4 + 4]; // node net: w0 (6x16), b0 (6), w1 (4x6), b1 (4)
    let node_params = 16 * 6 + 6 + 6 * 4 + 4;
    let edge_params = 16 * 6 + 6 + 6 * 6 + 6;
    assert_eq!(node_params + edge_params, grad.len());
    let _ = sizes;

    let node_bias = &grad[node_params - 4..node_params];
    let edge_bias = &grad[node_params + edge_params - 6..];

    let mut expected_node = vec![0.0f64; 4];
    let mut expected_edge = vec![0.0f64; 6];
    for step in &record.steps {
        let width = step.value.len();
        let expected = if width == 2 {
            &mut expected_node
        } else {
            &mut expected_edge
        };
        for (c, &x) in step.value.iter().enumerate() {
            expected[c] += x; // d logp / d mu_c
            expected[width + c] += x * x - 1.0; // d logp / d log sigma_c
        }
    }
    for (g, e) in node_bias.iter().zip(&expected_node) {
        assert!((g - e).abs() < 1e-9, "node bias grad {g} vs {e}");
    }
    for (g, e) in edge_bias.iter().zip(&expected_edge) {
        assert!((g - e).abs() < 1e-9, "edge bias grad {g} vs {e}");
    }
}

#[test]
fn sigma_bias_gradient_is_minus_one_when_value_matches_mean() {
    // A single-coordinate record with x = mu: d logp / d log sigma = -1.
    let layers = vec![flow::LayerMoments {
        mu: Array1::from_vec(vec![0.7]),
        log_sigma: Array1::from_vec(vec![0.3]),
    }];
    let (_, ys) = flow::step_log_density(&layers, &Array1::from_vec(vec![0.7]), 1.0);
    assert_eq!(ys[0][0], 0.0);
    // analytic: d/dlogsigma (-logsigma - z^2/2) with z = 0 gives -1
    let z = ys[0][0];
    let d_log_sigma = z * z - 1.0;
    assert_eq!(d_log_sigma, -1.0);
}

#[test]
fn invert_recovers_latents_and_roundtrips() {
    for seed in 0..20 {
        let (flow, cfg) = toy_setup(seed + 1000);
        let (_, record) = sample_bg(&flow, &cfg).unwrap();
        let latents = flow.invert(&record).unwrap();
        assert_eq!(latents.len(), record.step_count());
        for (step, z) in record.steps.iter().zip(&latents) {
            // recovered latent equals the recorded draw
            for (a, b) in z.iter().zip(step.latent.iter()) {
                assert!((a - b).abs() < 1e-9, "latent mismatch {a} vs {b}");
            }
            // and pushing it back through reproduces the value
            let moments = match step.kind {
                flow::StepKind::Node { .. } => flow.node_moments(&step.context),
                flow::StepKind::Edge { .. } => flow.edge_moments(&step.context),
            };
            let back = flow::apply_layers(&moments, z);
            for (a, b) in back.iter().zip(step.value.iter()) {
                assert!((a - b).abs() < 1e-9, "roundtrip mismatch {a} vs {b}");
            }
        }
    }
}

#[test]
fn stacked_layers_roundtrip_and_density() {
    let cg = toy_cg();
    let dims = GraphDims::new(2, 2, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut flow = FlowModel::new(
        FlowConfig::new(dims).with_hidden(&[6]).with_layers(3),
        &mut rng,
    );
    let mut flat = flow.to_flat();
    for v in flat.iter_mut() {
        *v += rng.random_range(-0.2..0.2);
    }
    flow.set_flat(&flat);
    let cfg = SamplerConfig::new(cg, dims, 2.0, 4242);
    let (_, record) = sample_bg(&flow, &cfg).unwrap();
    let recomputed = flow.log_likelihood(&record).unwrap();
    assert!((recomputed - record.log_likelihood()).abs() < 1e-9);
    let latents = flow.invert(&record).unwrap();
    for (step, z) in record.steps.iter().zip(&latents) {
        for (a, b) in z.iter().zip(step.latent.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn one_dimensional_density_integrates_to_one() {
    // m = 1, single type, no edge block: the flow defines a 1-D density.
    let cg = CausalGraph::build("line", vec![TypeDecl::new("X", &[])]).unwrap();
    let dims = GraphDims::new(1, 1, 0, 0);
    for (seed, temperature) in [(0u64, 1.0), (1, 1.0), (2, 2.5), (3, 0.7)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flow = FlowModel::new(FlowConfig::new(dims).with_hidden(&[8]), &mut rng);
        let mut flat = flow.to_flat();
        for v in flat.iter_mut() {
            *v += rng.random_range(-0.4..0.4);
        }
        flow.set_flat(&flat);

        let bg = BehavioralGraph::new(dims);
        let ctx = flow::context::node_context(&bg, 0);
        let moments = flow.node_moments(&ctx);

        let n = 8001;
        let (lo, hi) = (-20.0, 20.0);
        let dx = (hi - lo) / (n - 1) as f64;
        let mut integral = 0.0;
        for k in 0..n {
            let x = lo + k as f64 * dx;
            let (logp, _) =
                flow::step_log_density(&moments, &Array1::from_vec(vec![x]), temperature);
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            integral += w * logp.exp() * dx;
        }
        assert!(
            (0.999..=1.001).contains(&integral),
            "seed {seed} T {temperature}: integral {integral}"
        );
        let _ = cg;
    }
}

#[test]
fn conditioner_ignores_future_context_entries() {
    // The node conditioner for step i must not read anything at or after
    // node i: extending the graph leaves the step-i moments bitwise equal.
    let (flow, cfg) = toy_setup(31);
    let mut bg = BehavioralGraph::new(cfg.dims);
    bg.push_node(0);
    let mut self_loop = Array1::zeros(cfg.dims.edge_dim());
    self_loop[1] = 1.0;
    self_loop[2] = 0.37;
    bg.set_edge(0, 0, &self_loop);

    let before = flow.condition_node(&bg, 1).unwrap();
    let mut extended = bg.clone();
    extended.push_node(1);
    let mut e = Array1::zeros(cfg.dims.edge_dim());
    e[2] = 9.9;
    e[0] = 1.0;
    extended.set_edge(1, 0, &e);
    extended.set_edge(1, 1, &e);
    let after = flow.condition_node(&extended, 1).unwrap();

    assert_eq!(
        before.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        after.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(
        before.1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        after.1.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn masked_contexts_hide_non_parents_bitwise() {
    // Two pedestrian histories differing only in the irrelevant vehicle's
    // attributes give bitwise-identical masked edge contexts for the AV.
    let spec = scenarios::pedestrian_scenario(1);
    let cg = &spec.cg;
    let dims = spec.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let flow = FlowModel::new(FlowConfig::new(dims).with_hidden(&[16]), &mut rng);

    let build = |i_attr: f64| {
        let mut bg = BehavioralGraph::new(dims);
        bg.push_node(cg.type_id("S").unwrap());
        let mut s_loop = Array1::zeros(dims.edge_dim());
        s_loop[1] = 1.0;
        s_loop[3] = -0.41;
        bg.set_edge(0, 0, &s_loop);
        bg.push_node(cg.type_id("I").unwrap());
        let mut i_loop = Array1::zeros(dims.edge_dim());
        i_loop[1] = 1.0;
        i_loop[3] = i_attr;
        bg.set_edge(1, 1, &i_loop);
        bg.push_node(cg.type_id("A").unwrap());
        bg
    };

    let bg_a = build(0.11);
    let bg_b = build(-3.62);
    let masks_a = causalaf::graph::cvm_masks(cg, &bg_a, 2).unwrap();
    let masks_b = causalaf::graph::cvm_masks(cg, &bg_b, 2).unwrap();
    assert_eq!(masks_a.permutation, vec![0, 2]);
    assert_eq!(masks_a.permutation, masks_b.permutation);

    for target in 0..masks_a.permutation.len() {
        let ctx_a = flow::context::edge_context_masked(&bg_a, &masks_a, target);
        let ctx_b = flow::context::edge_context_masked(&bg_b, &masks_b, target);
        assert_eq!(
            ctx_a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            ctx_b.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            "contexts differ at target {target}"
        );
        let (mu_a, sig_a) = {
            let m = flow.edge_moments(&ctx_a);
            flow::compose_moments(&m)
        };
        let (mu_b, sig_b) = {
            let m = flow.edge_moments(&ctx_b);
            flow::compose_moments(&m)
        };
        assert_eq!(
            mu_a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            mu_b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(
            sig_a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            sig_b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn checkpoint_reproduces_samples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.json");
    let (flow, cfg) = toy_setup(123);
    let (bg1, rec1) = sample_bg(&flow, &cfg).unwrap();

    let ckpt = causalaf::flow::checkpoint::FlowCheckpoint::capture(&flow, cfg.seed, 0);
    causalaf::flow::save_flow(&ckpt, &path).unwrap();
    let restored = causalaf::flow::load_flow(&path).unwrap().restore();
    let (bg2, rec2) = sample_bg(&restored, &cfg).unwrap();

    assert_eq!(bg1, bg2);
    assert_eq!(rec1, rec2);
}
