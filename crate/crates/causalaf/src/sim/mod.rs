//! Deterministic 2D traffic micro-simulator.
//!
//! A behavioral graph is instantiated into scene objects whose initial poses
//! and velocities come from its edge attributes. All agents move under a
//! unicycle model integrated at a fixed physics step; decisions (radar scan,
//! AV policy) happen at a coarser decision period. The run ends at the
//! scenario's decision-step budget or at the first footprint overlap, and
//! the safety objective fires when the minimal AV-to-object distance over
//! the run drops below the scenario's threshold.

pub mod geometry;
pub mod policy;
pub mod radar;
pub mod scenario;
pub mod trace;

pub use policy::{Action, AvObservation, AvPolicy, Detection, Navigator, RuleBasedAv};
pub use radar::{radar_scan, RadarReturn};
pub use scenario::{ObjectKind, ScenarioSpec};
pub use trace::ScenarioTrace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BehavioralGraph;
use crate::sim::geometry::{rect_distance, OrientedRect, Vec2};
use crate::sim::scenario::decode_attr;

/// Assigned action program of a scene object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Behavior {
    /// Never moves.
    Static,
    /// Holds its initial velocity (scripted agents do not brake).
    Constant,
    /// Controlled by an [`AvPolicy`] through the navigator.
    Av,
    /// Traffic light phase schedule: red for the AV direction until
    /// `green_at`, green afterwards.
    Light { green_at: f64 },
}

/// One concrete object in the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: usize,
    pub kind: ObjectKind,
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub length: f64,
    pub width: f64,
    pub behavior: Behavior,
}

impl SceneObject {
    pub fn footprint_rect(&self) -> OrientedRect {
        OrientedRect::new(self.pos, self.length, self.width, self.heading)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading).scale(self.speed)
    }
}

/// All objects plus the simulation clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub time: f64,
}

impl Scene {
    pub fn av(&self) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.kind == ObjectKind::Av)
    }

    /// Object lookup by id (ids are behavioral-graph node indices, not
    /// vector positions).
    pub fn object(&self, id: usize) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Phase of the scene's traffic light for the AV direction, if one
    /// exists.
    pub fn light_green(&self) -> Option<bool> {
        self.objects.iter().find_map(|o| match o.behavior {
            Behavior::Light { green_at } => Some(self.time >= green_at),
            _ => None,
        })
    }

    /// Minimum footprint distance from the AV to any other collidable
    /// object; infinite when the scene has no AV or no other objects.
    pub fn min_av_distance(&self) -> f64 {
        let Some(av) = self.av() else {
            return f64::INFINITY;
        };
        let av_rect = av.footprint_rect();
        self.objects
            .iter()
            .filter(|o| o.id != av.id)
            .map(|o| o.footprint_rect())
            .filter(|r| !r.is_degenerate())
            .map(|r| rect_distance(&av_rect, &r))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Instantiates a behavioral graph into scene objects.
///
/// One object is created per physical node, up to each type's instance cap
/// (mask-free baselines can emit extras; those are dropped, as are nodes of
/// non-physical types). A node's self-loop edge decodes its initial pose and
/// velocity through the type's bounds; a directed interaction edge re-aims
/// the object's velocity at a point near its target.
pub fn instantiate(bg: &BehavioralGraph, spec: &ScenarioSpec) -> Result<Vec<SceneObject>> {
    spec.validate()?;
    let cg = &spec.cg;
    let mut objects: Vec<SceneObject> = Vec::new();
    let mut placed: Vec<usize> = vec![0; cg.type_count()];
    // node index -> object slot, for aim-edge targets
    let mut object_of_node: Vec<Option<usize>> = vec![None; bg.node_count()];

    for i in 0..bg.node_count() {
        let t = bg.type_of(i);
        if !cg.is_physical(t) {
            continue;
        }
        if placed[t] >= cg.max_count(t) {
            continue;
        }
        let tmpl = spec
            .template(t)
            .expect("validated spec has templates for physical types");

        // Self-loop decode; an absent or "no interaction" self-loop leaves
        // the object at the middle of its windows.
        let self_attrs = match bg.edge_type(i, i) {
            Some(et) if et != 0 => Some(bg.edge_attrs(i, i)),
            _ => None,
        };
        let decode4 = |attrs: &Option<Vec<f64>>, k: usize, window: (f64, f64)| -> f64 {
            match attrs {
                Some(a) => decode_attr(a[k], window, spec.decode_scale),
                None => decode_attr(0.0, window, spec.decode_scale),
            }
        };
        let mut pos = Vec2::new(
            decode4(&self_attrs, 0, tmpl.bounds.x),
            decode4(&self_attrs, 1, tmpl.bounds.y),
        );
        let mut vel = Vec2::new(
            decode4(&self_attrs, 2, tmpl.bounds.vx),
            decode4(&self_attrs, 3, tmpl.bounds.vy),
        );

        // First directed interaction edge re-aims scripted moving agents.
        if tmpl.aim.is_some() {
            for j in 0..i {
                if bg.edge_type(i, j) != Some(2) {
                    continue;
                }
                let Some(target_slot) = object_of_node[j] else {
                    continue;
                };
                let aim = tmpl.aim.unwrap();
                let attrs = bg.edge_attrs(i, j);
                let target = objects[target_slot].pos;
                let aim_point = Vec2::new(
                    target.x + decode_attr(attrs[0], aim.dx, spec.decode_scale),
                    target.y + decode_attr(attrs[1], aim.dy, spec.decode_scale),
                );
                let speed = decode_attr(attrs[2], aim.speed, spec.decode_scale);
                let dir = aim_point.sub(pos).normalized();
                if dir.norm() > 0.0 {
                    vel = dir.scale(speed);
                }
                break;
            }
        }

        if !spec.layout.contains(pos) {
            if spec.strict_placement {
                return Err(Error::UnplaceableObject {
                    id: i,
                    x: pos.x,
                    y: pos.y,
                });
            }
            let clamped = Vec2::new(
                pos.x.clamp(spec.layout.min.x, spec.layout.max.x),
                pos.y.clamp(spec.layout.min.y, spec.layout.max.y),
            );
            log::warn!(
                "object {i} decoded outside the layout at ({:.1}, {:.1}); clamped",
                pos.x,
                pos.y
            );
            pos = clamped;
        }

        let (behavior, speed, heading) = match tmpl.kind {
            ObjectKind::Av => {
                let speed = vel.norm();
                let heading = if speed > 1e-9 {
                    vel.angle()
                } else {
                    tmpl.rest_heading
                };
                (Behavior::Av, speed, heading)
            }
            ObjectKind::StaticVehicle => (Behavior::Static, 0.0, tmpl.rest_heading),
            ObjectKind::TrafficLight => {
                let window = tmpl.green_switch.unwrap_or((0.0, 3.0));
                let green_at = decode4(&self_attrs, 2, window);
                (Behavior::Light { green_at }, 0.0, tmpl.rest_heading)
            }
            _ => {
                let speed = vel.norm();
                let heading = if speed > 1e-9 {
                    vel.angle()
                } else {
                    tmpl.rest_heading
                };
                (Behavior::Constant, speed, heading)
            }
        };

        object_of_node[i] = Some(objects.len());
        objects.push(SceneObject {
            id: i,
            kind: tmpl.kind,
            pos,
            heading,
            speed,
            length: tmpl.length,
            width: tmpl.width,
            behavior,
        });
        placed[t] += 1;
    }
    Ok(objects)
}

/// One physics tick: semi-implicit Euler under the unicycle model. Vehicles
/// and pedestrians integrate heading then position; speeds never go
/// negative; lights and parked vehicles stay put.
pub fn step(scene: &Scene, actions: &[Action], dt: f64) -> Scene {
    assert!(dt > 0.0, "dt must be positive");
    assert_eq!(actions.len(), scene.objects.len());
    let mut next = scene.clone();
    next.time += dt;
    for (obj, act) in next.objects.iter_mut().zip(actions) {
        match obj.behavior {
            Behavior::Static | Behavior::Light { .. } => continue,
            _ => {}
        }
        obj.speed = (obj.speed + act.accel * dt).max(0.0);
        obj.heading += act.steer * dt;
        let dir = Vec2::from_angle(obj.heading);
        obj.pos = obj.pos.add(dir.scale(obj.speed * dt));
    }
    next
}

/// Runs a scenario under the rule-based AV policy.
pub fn execute(bg: &BehavioralGraph, spec: &ScenarioSpec) -> Result<ScenarioTrace> {
    let mut policy = RuleBasedAv::new(spec.policy);
    execute_with_policy(bg, spec, &mut policy)
}

/// Runs a scenario with a caller-supplied AV controller. Steps until the
/// decision budget is exhausted or footprints overlap; the returned trace
/// carries the minimal-distance summary the objective is computed from.
pub fn execute_with_policy(
    bg: &BehavioralGraph,
    spec: &ScenarioSpec,
    policy: &mut dyn AvPolicy,
) -> Result<ScenarioTrace> {
    let objects = instantiate(bg, spec)?;
    let mut scene = Scene { objects, time: 0.0 };
    let mut nav = Navigator::for_scene(spec, &scene);

    let mut trace = ScenarioTrace {
        dt: spec.dt,
        decision_period: spec.decision_period,
        states: vec![ScenarioTrace::snapshot(&scene)],
        step_count: 0,
        min_distance: scene.min_av_distance(),
        collided: false,
        min_distance_tick: 0,
        ran_red_light: false,
    };
    if trace.min_distance <= 0.0 {
        trace.min_distance = 0.0;
        trace.collided = true;
        return Ok(trace);
    }

    let ticks = spec.ticks_per_decision();
    let speed_limit = scene.av().map(|av| av.speed.max(5.0) * 1.05);
    'outer: for step_idx in 0..spec.max_step {
        let av_action = match nav.observe(&scene, spec) {
            Some(obs) => {
                let a = policy.act(&obs);
                // actuator bounds plus a speed cap at the scenario's limit
                let max_accel = match speed_limit {
                    Some(limit) => ((limit - obs.speed) / spec.decision_period)
                        .clamp(0.0, spec.policy.a_cruise),
                    None => spec.policy.a_cruise,
                };
                Action {
                    accel: a.accel.clamp(-spec.policy.a_max, max_accel),
                    steer: a.steer.clamp(-spec.policy.steer_max, spec.policy.steer_max),
                }
            }
            None => Action::ZERO,
        };
        let actions: Vec<Action> = scene
            .objects
            .iter()
            .map(|o| match o.behavior {
                Behavior::Av => av_action,
                _ => Action::ZERO,
            })
            .collect();

        trace.step_count = step_idx + 1;
        for _ in 0..ticks {
            scene = step(&scene, &actions, spec.dt);
            trace.states.push(ScenarioTrace::snapshot(&scene));
            if spec.route == crate::sim::scenario::RoutePlan::SignalledStraight {
                if let (Some(av), Some(false)) = (scene.av(), scene.light_green()) {
                    if av.pos.x > spec.stop_line + 2.0 {
                        trace.ran_red_light = true;
                    }
                }
            }
            let d = scene.min_av_distance();
            if d < trace.min_distance {
                trace.min_distance = d;
                trace.min_distance_tick = trace.states.len() - 1;
            }
            if d <= 0.0 {
                trace.min_distance = 0.0;
                trace.collided = true;
                break 'outer;
            }
        }
    }
    Ok(trace)
}

/// The binary safety objective: 1 when the minimal distance dropped below
/// the threshold (strictly), else 0.
pub fn objective(trace: &ScenarioTrace, epsilon: f64) -> f64 {
    if trace.min_distance < epsilon {
        1.0
    } else {
        0.0
    }
}
