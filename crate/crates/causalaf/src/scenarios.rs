//! The three built-in scenario families and their causal graphs.
//!
//! Each scenario couples a causal graph over object types with the road
//! geometry and per-type attribute windows that make the cause-effect story
//! physically reachable:
//!
//! - **traffic-light**: the light `T` times both the autonomous vehicle `A`
//!   (waits for green) and the red-light runner `R`; a collision `C` needs
//!   their crossings to coincide inside the intersection.
//! - **pedestrian**: a parked van `S` blocks `A`'s radar line to the crossing
//!   pedestrian `P`; `A` brakes too late only when the occlusion window and
//!   `P`'s timing line up.
//! - **lane-changing**: `S` parks in `A`'s lane, forcing a pass through the
//!   opposite lane while also hiding the oncoming `R` from the lane-change
//!   gate.
//!
//! Irrelevant vehicles `I` exist in every family; they drive (or park) well
//! clear of the conflict geometry so they influence nothing but the
//! generative model's context.

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, GraphDims, TypeDecl};
use crate::sim::geometry::Vec2;
use crate::sim::scenario::{
    AimWindow, AttrBounds, Lane, ObjectKind, ObjectTemplate, PolicyParams, RadarConfig,
    RoadLayout, RoutePlan, ScenarioSpec,
};

pub const SCENARIO_NAMES: [&str; 3] = ["traffic-light", "pedestrian", "lane-changing"];

/// Number of edge types: 0 = no interaction, 1 = independent action
/// (self-loop semantics), 2 = directed interaction.
pub const EDGE_TYPES: usize = 3;
/// Edge attributes `[x, y, vx, vy]`.
pub const EDGE_ATTRS: usize = 4;

fn template_map<const N: usize>(entries: [(&str, ObjectTemplate); N]) -> std::collections::BTreeMap<String, ObjectTemplate> {
    entries
        .into_iter()
        .map(|(name, tmpl)| (name.to_string(), tmpl))
        .collect()
}

fn dims_for(cg: &CausalGraph) -> GraphDims {
    GraphDims::new(cg.max_nodes(), cg.type_count(), EDGE_TYPES, EDGE_ATTRS)
}

pub fn pedestrian_causal_graph(n_irrelevant: usize) -> CausalGraph {
    CausalGraph::build(
        "pedestrian",
        vec![
            TypeDecl::new("S", &[]),
            TypeDecl::new("A", &["S"]),
            TypeDecl::new("P", &[]),
            TypeDecl::new("I", &[]).optional(n_irrelevant),
            TypeDecl::new("C", &["A", "P"]).non_physical(),
        ],
    )
    .expect("builtin graph is valid")
}

/// Pedestrian types declared in the order (A, P, S, I, C); used by tests
/// that pin mask layouts against this ordering.
pub fn pedestrian_causal_graph_spec_order(n_irrelevant: usize) -> CausalGraph {
    CausalGraph::build(
        "pedestrian",
        vec![
            TypeDecl::new("A", &["S"]),
            TypeDecl::new("P", &[]),
            TypeDecl::new("S", &[]),
            TypeDecl::new("I", &[]).optional(n_irrelevant),
            TypeDecl::new("C", &["A", "P"]).non_physical(),
        ],
    )
    .expect("builtin graph is valid")
}

pub fn traffic_light_causal_graph(n_irrelevant: usize) -> CausalGraph {
    CausalGraph::build(
        "traffic-light",
        vec![
            TypeDecl::new("T", &[]),
            TypeDecl::new("A", &["T"]),
            TypeDecl::new("R", &["T"]),
            TypeDecl::new("I", &[]).optional(n_irrelevant),
            TypeDecl::new("C", &["A", "R"]).non_physical(),
        ],
    )
    .expect("builtin graph is valid")
}

pub fn lane_change_causal_graph(n_irrelevant: usize) -> CausalGraph {
    CausalGraph::build(
        "lane-changing",
        vec![
            TypeDecl::new("S", &[]),
            TypeDecl::new("A", &["S"]),
            TypeDecl::new("R", &[]),
            TypeDecl::new("I", &[]).optional(n_irrelevant),
            TypeDecl::new("C", &["A", "R"]).non_physical(),
        ],
    )
    .expect("builtin graph is valid")
}

fn car(kind: ObjectKind, bounds: AttrBounds) -> ObjectTemplate {
    ObjectTemplate::new(kind, 4.6, 1.8, bounds)
}

fn van(bounds: AttrBounds) -> ObjectTemplate {
    ObjectTemplate::new(ObjectKind::StaticVehicle, 5.4, 2.2, bounds)
}

/// A two-way east-west road; pedestrian crossing from the north sidewalk.
pub fn pedestrian_scenario(n_irrelevant: usize) -> ScenarioSpec {
    let cg = pedestrian_causal_graph(n_irrelevant);
    let dims = dims_for(&cg);
    let s = van(AttrBounds {
        x: (-20.0, 2.0),
        y: (2.7, 3.6),
        vx: (0.0, 0.0),
        vy: (0.0, 0.0),
    });
    let a = car(
        ObjectKind::Av,
        AttrBounds {
            x: (-48.0, -26.0),
            y: (0.0, 0.0),
            vx: (7.0, 11.0),
            vy: (0.0, 0.0),
        },
    );
    let mut p = ObjectTemplate::new(
        ObjectKind::Pedestrian,
        0.6,
        0.6,
        AttrBounds {
            x: (-6.0, 20.0),
            y: (4.5, 10.0),
            vx: (-0.5, 0.5),
            vy: (-2.4, -0.5),
        },
    );
    p.rest_heading = -std::f64::consts::FRAC_PI_2;
    p.aim = Some(AimWindow {
        dx: (4.0, 26.0),
        dy: (-1.0, 1.0),
        speed: (0.8, 2.5),
    });
    let mut i = car(
        ObjectKind::Vehicle,
        AttrBounds {
            x: (10.0, 50.0),
            y: (-3.5, -3.5),
            vx: (-11.0, -7.0),
            vy: (0.0, 0.0),
        },
    );
    i.rest_heading = std::f64::consts::PI;

    ScenarioSpec {
        name: "pedestrian".into(),
        cg,
        dims,
        templates: template_map([("S", s), ("A", a), ("P", p), ("I", i)]),
        layout: RoadLayout {
            lanes: vec![
                Lane {
                    start: Vec2::new(-40.0, 0.0),
                    end: Vec2::new(60.0, 0.0),
                    width: 3.5,
                },
                Lane {
                    start: Vec2::new(60.0, -3.5),
                    end: Vec2::new(-40.0, -3.5),
                    width: 3.5,
                },
            ],
            min: Vec2::new(-45.0, -10.0),
            max: Vec2::new(65.0, 10.0),
        },
        route: RoutePlan::Straight,
        stop_line: 0.0,
        pass_offset: 3.8,
        max_step: 15,
        dt: 0.1,
        decision_period: 1.0,
        collision_threshold: 0.5,
        decode_scale: 2.0,
        radar: RadarConfig::default(),
        policy: PolicyParams::default(),
        strict_placement: false,
    }
}

/// A signalled crossroad; `R` runs its red perpendicular to `A`.
pub fn traffic_light_scenario(n_irrelevant: usize) -> ScenarioSpec {
    let cg = traffic_light_causal_graph(n_irrelevant);
    let dims = dims_for(&cg);
    let mut t = ObjectTemplate::new(
        ObjectKind::TrafficLight,
        0.0,
        0.0,
        AttrBounds::fixed(2.0, 2.0),
    );
    t.green_switch = Some((0.0, 3.0));
    let a = car(
        ObjectKind::Av,
        AttrBounds {
            x: (-30.0, -12.0),
            y: (0.0, 0.0),
            vx: (8.0, 11.0),
            vy: (0.0, 0.0),
        },
    );
    let mut r = car(
        ObjectKind::Vehicle,
        AttrBounds {
            x: (-1.75, -1.75),
            y: (10.0, 70.0),
            vx: (0.0, 0.0),
            vy: (-13.0, -6.0),
        },
    );
    r.rest_heading = -std::f64::consts::FRAC_PI_2;
    r.aim = Some(AimWindow {
        dx: (-6.0, 2.0),
        dy: (-4.0, 4.0),
        speed: (6.0, 13.0),
    });
    let i = car(
        ObjectKind::Vehicle,
        AttrBounds {
            x: (8.0, 35.0),
            y: (-3.5, -3.5),
            vx: (6.0, 10.0),
            vy: (0.0, 0.0),
        },
    );

    ScenarioSpec {
        name: "traffic-light".into(),
        cg,
        dims,
        templates: template_map([("T", t), ("A", a), ("R", r), ("I", i)]),
        layout: RoadLayout {
            lanes: vec![
                Lane {
                    start: Vec2::new(-30.0, 0.0),
                    end: Vec2::new(40.0, 0.0),
                    width: 3.5,
                },
                Lane {
                    start: Vec2::new(40.0, -3.5),
                    end: Vec2::new(-30.0, -3.5),
                    width: 3.5,
                },
                Lane {
                    start: Vec2::new(-1.75, 125.0),
                    end: Vec2::new(-1.75, -38.0),
                    width: 3.5,
                },
                Lane {
                    start: Vec2::new(1.75, -38.0),
                    end: Vec2::new(1.75, 125.0),
                    width: 3.5,
                },
            ],
            min: Vec2::new(-35.0, -40.0),
            max: Vec2::new(45.0, 125.0),
        },
        route: RoutePlan::SignalledStraight,
        stop_line: -7.0,
        pass_offset: 3.8,
        max_step: 5,
        dt: 0.1,
        decision_period: 1.0,
        collision_threshold: 0.5,
        decode_scale: 4.0,
        radar: RadarConfig::default(),
        policy: PolicyParams::default(),
        strict_placement: false,
    }
}

/// A two-lane road with a badly parked van in the AV's lane and oncoming
/// traffic in the passing lane.
pub fn lane_change_scenario(n_irrelevant: usize) -> ScenarioSpec {
    let cg = lane_change_causal_graph(n_irrelevant);
    let dims = dims_for(&cg);
    let s = van(AttrBounds {
        x: (-12.0, 10.0),
        y: (0.1, 0.9),
        vx: (0.0, 0.0),
        vy: (0.0, 0.0),
    });
    let a = car(
        ObjectKind::Av,
        AttrBounds {
            x: (-46.0, -26.0),
            y: (0.0, 0.0),
            vx: (6.0, 10.0),
            vy: (0.0, 0.0),
        },
    );
    let mut r = car(
        ObjectKind::Vehicle,
        AttrBounds {
            x: (25.0, 500.0),
            y: (3.5, 3.5),
            vx: (-13.0, -5.0),
            vy: (0.0, 0.0),
        },
    );
    r.rest_heading = std::f64::consts::PI;
    let i = car(
        ObjectKind::Vehicle,
        AttrBounds {
            x: (-20.0, 20.0),
            y: (-5.4, -4.6),
            vx: (0.0, 0.0),
            vy: (0.0, 0.0),
        },
    );

    ScenarioSpec {
        name: "lane-changing".into(),
        cg,
        dims,
        templates: template_map([("S", s), ("A", a), ("R", r), ("I", i)]),
        layout: RoadLayout {
            lanes: vec![
                Lane {
                    start: Vec2::new(-50.0, 0.0),
                    end: Vec2::new(510.0, 0.0),
                    width: 3.5,
                },
                Lane {
                    start: Vec2::new(510.0, 3.5),
                    end: Vec2::new(-50.0, 3.5),
                    width: 3.5,
                },
            ],
            min: Vec2::new(-55.0, -8.0),
            max: Vec2::new(515.0, 9.0),
        },
        route: RoutePlan::LaneChange,
        stop_line: 0.0,
        pass_offset: 4.3,
        max_step: 30,
        dt: 0.1,
        decision_period: 1.0,
        collision_threshold: 0.5,
        decode_scale: 4.0,
        // the pass needs sight of oncoming traffic well beyond the default
        // radar horizon, so occlusion (not range) decides the commit
        radar: RadarConfig {
            rays: 64,
            range: 70.0,
            fov: std::f64::consts::TAU,
        },
        policy: PolicyParams {
            gate_range: 60.0,
            ..PolicyParams::default()
        },
        strict_placement: false,
    }
}

/// Scenario lookup by name with a configurable irrelevant-vehicle count.
pub fn by_name(name: &str, n_irrelevant: usize) -> Result<ScenarioSpec> {
    match name {
        "traffic-light" => Ok(traffic_light_scenario(n_irrelevant)),
        "pedestrian" => Ok(pedestrian_scenario(n_irrelevant)),
        "lane-changing" => Ok(lane_change_scenario(n_irrelevant)),
        other => Err(Error::Config(format!(
            "unknown scenario `{other}` (expected one of {SCENARIO_NAMES:?})"
        ))),
    }
}
