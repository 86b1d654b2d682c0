//! Simulator checks against independent oracles: radar occlusion versus an
//! exhaustive segment-intersection oracle, braking kinematics versus closed
//! form, determinism, and the scenario-level collision mechanisms.

use causalaf::graph::BehavioralGraph;
use causalaf::scenarios;
use causalaf::sim::geometry::{OrientedRect, Vec2};
use causalaf::sim::scenario::{encode_attr, ObjectKind, RadarConfig};
use causalaf::sim::{
    execute, instantiate, objective, radar_scan, Behavior, Scene, SceneObject,
};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vehicle(id: usize, x: f64, y: f64, heading: f64, speed: f64) -> SceneObject {
    SceneObject {
        id,
        kind: ObjectKind::Vehicle,
        pos: Vec2::new(x, y),
        heading,
        speed,
        length: 4.6,
        width: 1.8,
        behavior: Behavior::Constant,
    }
}

/// Independent ray-rectangle oracle: intersect the ray with each of the four
/// corner segments by solving the 2x2 linear system, plus a half-plane
/// inside test for rays starting within the footprint.
fn oracle_ray_rect(origin: Vec2, dir: Vec2, rect: &OrientedRect) -> Option<f64> {
    let corners = rect.corners();
    let inside = {
        // point is inside iff it is on the same side of all four edges
        let mut sign = 0.0f64;
        let mut ok = true;
        for k in 0..4 {
            let a = corners[k];
            let b = corners[(k + 1) % 4];
            let cross = b.sub(a).cross(origin.sub(a));
            if cross.abs() > 1e-12 {
                if sign == 0.0 {
                    sign = cross.signum();
                } else if cross.signum() != sign {
                    ok = false;
                    break;
                }
            }
        }
        ok
    };
    if inside {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for k in 0..4 {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        // origin + t dir = a + u (b - a)
        let e = b.sub(a);
        let det = dir.x * (-e.x) - dir.y * (-e.y);
        let det = -det; // dir.x * e.y - dir.y * e.x, orientation fixed below
        let denom = dir.cross(e);
        if denom.abs() < 1e-12 {
            continue;
        }
        let diff = a.sub(origin);
        let t = diff.cross(e) / denom;
        let u = diff.cross(dir) / denom;
        let _ = det;
        if t >= 0.0 && (0.0..=1.0).contains(&u) {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    }
    best
}

#[test]
fn radar_single_obstacle_dead_ahead() {
    let agent = vehicle(0, 0.0, 0.0, 0.0, 0.0);
    let mut target = vehicle(1, 20.0, 0.0, 0.0, 0.0);
    target.length = 0.2; // nearly a wall at x = 20
    target.width = 6.0;
    let scene = Scene {
        objects: vec![agent, target],
        time: 0.0,
    };
    let config = RadarConfig {
        rays: 1,
        range: 40.0,
        fov: 0.1,
    };
    let hits = radar_scan(&scene, &scene.objects[0], &config);
    assert_eq!(hits.len(), 1);
    assert!((hits[0].range - 19.9).abs() < 1e-9);
    assert_eq!(hits[0].bearing, 0.0);
    assert_eq!(hits[0].object_id, 1);
}

#[test]
fn radar_occlusion_reports_blocker_only() {
    // pedestrian 30 m out, parked vehicle 15 m out on the same ray
    let agent = vehicle(0, 0.0, 0.0, 0.0, 0.0);
    let blocker = vehicle(1, 15.0, 0.0, 0.0, 0.0);
    let pedestrian = SceneObject {
        id: 2,
        kind: ObjectKind::Pedestrian,
        pos: Vec2::new(30.0, 0.0),
        heading: 0.0,
        speed: 0.0,
        length: 0.6,
        width: 0.6,
        behavior: Behavior::Constant,
    };
    let scene = Scene {
        objects: vec![agent, blocker, pedestrian],
        time: 0.0,
    };
    let config = RadarConfig {
        rays: 1,
        range: 40.0,
        fov: 0.1,
    };
    let hits = radar_scan(&scene, &scene.objects[0], &config);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].object_id, 1, "the parked vehicle occludes");
}

#[test]
fn radar_ignores_out_of_range() {
    let agent = vehicle(0, 0.0, 0.0, 0.0, 0.0);
    let far = vehicle(1, 100.0, 0.0, 0.0, 0.0);
    let scene = Scene {
        objects: vec![agent, far],
        time: 0.0,
    };
    let hits = radar_scan(&scene, &scene.objects[0], &RadarConfig::default());
    assert!(hits.is_empty());
}

#[test]
fn radar_matches_exhaustive_oracle_on_random_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let config = RadarConfig {
        rays: 64,
        range: 40.0,
        fov: std::f64::consts::TAU,
    };
    for scene_idx in 0..1000 {
        let n = rng.random_range(1..6);
        let mut objects = vec![vehicle(0, 0.0, 0.0, rng.random_range(-3.0..3.0), 0.0)];
        for id in 1..=n {
            objects.push(SceneObject {
                id,
                kind: ObjectKind::Vehicle,
                pos: Vec2::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)),
                heading: rng.random_range(-3.2..3.2),
                speed: 0.0,
                length: rng.random_range(0.5..8.0),
                width: rng.random_range(0.5..4.0),
                behavior: Behavior::Constant,
            });
        }
        let scene = Scene { objects, time: 0.0 };
        let agent = &scene.objects[0];
        let hits = radar_scan(&scene, agent, &config);

        // oracle: for every ray, min over all objects of the exhaustive
        // segment intersection, then compare
        for k in 0..config.rays {
            let bearing = -std::f64::consts::PI
                + config.fov * (k as f64) / (config.rays as f64);
            let dir = Vec2::from_angle(agent.heading + bearing);
            let mut expected: Option<(f64, usize)> = None;
            for obj in scene.objects.iter().skip(1) {
                if let Some(t) = oracle_ray_rect(agent.pos, dir, &obj.footprint_rect()) {
                    if t <= config.range && expected.map_or(true, |(b, _)| t < b) {
                        expected = Some((t, obj.id));
                    }
                }
            }
            let actual = hits.iter().find(|h| (h.bearing - bearing).abs() < 1e-12);
            match (expected, actual) {
                (None, None) => {}
                (Some((t, id)), Some(hit)) => {
                    assert!(
                        (hit.range - t).abs() < 1e-6,
                        "scene {scene_idx} ray {k}: {} vs oracle {t}",
                        hit.range
                    );
                    assert_eq!(hit.object_id, id, "scene {scene_idx} ray {k}");
                }
                (e, a) => panic!("scene {scene_idx} ray {k}: oracle {e:?} vs radar {a:?}"),
            }
        }
    }
}

/// Builds a pedestrian-scenario graph with hand-chosen physical attributes
/// (reverse-mapped through the decode windows).
fn pedestrian_bg(
    spec: &causalaf::sim::ScenarioSpec,
    s_xy: (f64, f64),
    a_x: f64,
    a_speed: f64,
    p_xyv: (f64, f64, f64),
) -> BehavioralGraph {
    let cg = &spec.cg;
    let mut bg = BehavioralGraph::new(spec.dims);
    let set_self = |bg: &mut BehavioralGraph, i: usize, vals: [f64; 4], tname: &str| {
        let tmpl = &spec.templates[tname];
        let windows = [tmpl.bounds.x, tmpl.bounds.y, tmpl.bounds.vx, tmpl.bounds.vy];
        let mut slice = Array1::zeros(spec.dims.edge_dim());
        slice[1] = 1.0;
        for (k, (v, w)) in vals.iter().zip(windows).enumerate() {
            slice[spec.dims.edge_types + k] = encode_attr(*v, w, spec.decode_scale);
        }
        bg.set_edge(i, i, &slice);
    };
    bg.push_node(cg.type_id("S").unwrap());
    set_self(&mut bg, 0, [s_xy.0, s_xy.1, 0.0, 0.0], "S");
    bg.push_node(cg.type_id("A").unwrap());
    set_self(&mut bg, 1, [a_x, 0.0, a_speed, 0.0], "A");
    bg.push_node(cg.type_id("P").unwrap());
    set_self(&mut bg, 2, [p_xyv.0, p_xyv.1, 0.0, p_xyv.2], "P");
    bg
}

#[test]
fn instantiate_decodes_static_vehicle_pose() {
    let spec = scenarios::pedestrian_scenario(0);
    let bg = pedestrian_bg(&spec, (-10.0, 3.0), -30.0, 10.0, (0.0, 6.0, -1.5));
    let objects = instantiate(&bg, &spec).unwrap();
    let s = &objects[0];
    assert_eq!(s.kind, ObjectKind::StaticVehicle);
    assert!((s.pos.x - -10.0).abs() < 1e-6);
    assert!((s.pos.y - 3.0).abs() < 1e-6);
    assert_eq!(s.speed, 0.0);
    let a = &objects[1];
    assert_eq!(a.kind, ObjectKind::Av);
    assert!((a.speed - 10.0).abs() < 1e-6);
}

#[test]
fn instantiate_empty_graph_runs_full_horizon() {
    let spec = scenarios::pedestrian_scenario(0);
    let bg = BehavioralGraph::new(spec.dims);
    let trace = execute(&bg, &spec).unwrap();
    assert!(!trace.collided);
    assert_eq!(trace.step_count, spec.max_step);
    assert!(trace.min_distance.is_infinite());
    assert_eq!(objective(&trace, spec.collision_threshold), 0.0);
}

#[test]
fn aim_edge_points_velocity_at_target_window() {
    // pedestrian with a directed interaction edge toward the AV: its
    // velocity ray must pass through the decoded aim point
    let spec = scenarios::pedestrian_scenario(0);
    let mut bg = pedestrian_bg(&spec, (-18.0, 3.2), -30.0, 10.0, (0.0, 6.0, -1.5));
    let aim = spec.templates["P"].aim.unwrap();
    let mut slice = Array1::zeros(spec.dims.edge_dim());
    slice[2] = 1.0; // interaction type
    slice[spec.dims.edge_types] = encode_attr(12.0, aim.dx, spec.decode_scale);
    slice[spec.dims.edge_types + 1] = encode_attr(0.5, aim.dy, spec.decode_scale);
    slice[spec.dims.edge_types + 2] = encode_attr(1.8, aim.speed, spec.decode_scale);
    bg.set_edge(2, 1, &slice); // P -> A

    let objects = instantiate(&bg, &spec).unwrap();
    let a = &objects[1];
    let p = &objects[2];
    let aim_point = Vec2::new(a.pos.x + 12.0, a.pos.y + 0.5);
    // line intersection oracle: the pedestrian's heading ray must cross the
    // horizontal line y = aim_point.y exactly at aim_point.x
    let dir = Vec2::from_angle(p.heading);
    assert!(dir.y.abs() > 1e-9);
    let t = (aim_point.y - p.pos.y) / dir.y;
    let x_at = p.pos.x + t * dir.x;
    assert!(
        (x_at - aim_point.x).abs() < 1e-6,
        "heading crosses y={} at x={x_at}, expected {}",
        aim_point.y,
        aim_point.x
    );
    assert!((p.speed - 1.8).abs() < 1e-6);
}

#[test]
fn execute_is_bitwise_deterministic() {
    let spec = scenarios::pedestrian_scenario(0);
    let bg = pedestrian_bg(&spec, (-8.0, 3.0), -26.0, 10.0, (0.0, 5.0, -1.6));
    let t1 = execute(&bg, &spec).unwrap();
    let t2 = execute(&bg, &spec).unwrap();
    assert_eq!(t1, t2);
}

#[test]
fn overlapping_footprints_at_start_collide_immediately() {
    let spec = {
        let mut s = scenarios::pedestrian_scenario(0);
        // let the pedestrian start inside the AV's lane
        let p = s.templates.get_mut("P").unwrap();
        p.bounds.x = (-34.0, -22.0);
        p.bounds.y = (0.0, 0.0);
        p.bounds.vy = (-0.1, 0.0);
        s
    };
    let bg = pedestrian_bg(&spec, (-8.0, 3.0), -30.0, 10.0, (-30.0, 0.0, -0.05));
    let trace = execute(&bg, &spec).unwrap();
    assert!(trace.collided);
    assert_eq!(trace.step_count, 0);
    assert_eq!(trace.min_distance, 0.0);
}

#[test]
fn detection_inside_stopping_distance_collides_despite_braking() {
    // closed form: from v = 10 with a_max = 6 the AV needs v^2 / (2 a) =
    // 8.33 m; a threat first seen closer than that cannot be avoided.
    let mut spec = scenarios::pedestrian_scenario(0);
    let p = spec.templates.get_mut("P").unwrap();
    p.bounds.x = (-8.0, 8.0);
    p.bounds.y = (0.0, 0.0);
    p.bounds.vy = (-0.1, 0.0);
    // late detection: brake only inside 6 m
    spec.policy.braking_range = 6.0;
    let bg = pedestrian_bg(&spec, (-18.0, 3.2), -24.0, 10.0, (0.0, 0.0, -0.05));
    let trace = execute(&bg, &spec).unwrap();
    assert!(trace.collided, "6 m < 8.33 m stopping distance");

    // control: a 14 m braking range leaves room to stop (the AV sits
    // exactly one decision period from the 14 m boundary)
    spec.policy.braking_range = 14.0;
    let trace = execute(&bg, &spec).unwrap();
    assert!(!trace.collided, "14 m > 8.33 m stopping distance");
    assert!(trace.min_distance > spec.collision_threshold);
}

#[test]
fn far_apart_objects_never_trigger_the_objective() {
    let spec = scenarios::pedestrian_scenario(0);
    // everything maximally spread: S far west, P far east barely moving
    let bg = pedestrian_bg(&spec, (-20.0, 3.4), -34.0, 8.0, (8.0, 7.0, -0.8));
    let trace = execute(&bg, &spec).unwrap();
    assert_eq!(objective(&trace, spec.collision_threshold), 0.0);
}

#[test]
fn min_distance_is_running_minimum() {
    let spec = scenarios::pedestrian_scenario(0);
    let bg = pedestrian_bg(&spec, (-10.0, 3.0), -30.0, 10.0, (2.0, 6.5, -1.2));
    let trace = execute(&bg, &spec).unwrap();
    // recompute the running minimum from the stored states using footprints
    let mut min_d = f64::INFINITY;
    for state in &trace.states {
        let av = state.iter().find(|s| s.kind == ObjectKind::Av).unwrap();
        let av_rect = OrientedRect::new(Vec2::new(av.x, av.y), 4.6, 1.8, av.heading);
        for other in state.iter().filter(|s| s.id != av.id) {
            let (l, w) = match other.kind {
                ObjectKind::Pedestrian => (0.6, 0.6),
                ObjectKind::StaticVehicle => (5.4, 2.2),
                _ => (4.6, 1.8),
            };
            let rect = OrientedRect::new(Vec2::new(other.x, other.y), l, w, other.heading);
            min_d = min_d.min(causalaf::sim::geometry::rect_distance(&av_rect, &rect));
        }
    }
    assert!((trace.min_distance - min_d).abs() < 1e-9);
}

#[test]
fn occlusion_enables_the_pedestrian_collision() {
    // the staged geometry: parked van on the sight line, pedestrian timed
    // into the AV's path
    let spec = scenarios::pedestrian_scenario(0);
    let bg = pedestrian_bg(&spec, (-7.0, 2.9), -26.0, 10.5, (0.6, 4.8, -1.35));
    let trace = execute(&bg, &spec).unwrap();
    assert_eq!(
        objective(&trace, spec.collision_threshold),
        1.0,
        "min distance {:.3}",
        trace.min_distance
    );

    // removing the van (parking it far away) lets the AV stop in time
    let bg_clear = pedestrian_bg(&spec, (-20.0, 3.4), -26.0, 10.5, (0.6, 4.8, -1.35));
    let trace_clear = execute(&bg_clear, &spec).unwrap();
    assert_eq!(
        objective(&trace_clear, spec.collision_threshold),
        0.0,
        "min distance {:.3}",
        trace_clear.min_distance
    );
}
