//! Route following and the rule-based AV braking policy.
//!
//! The navigator owns the scripted part of the AV's behavior: following the
//! route, stopping at a red light, and the lane-change commit gate that
//! holds behind a blocked lane while oncoming traffic is visible. The policy
//! owns the braking decision: it decelerates hard when a detection inside
//! the frontal cone and braking range either lies in the route corridor or
//! is a pedestrian closing on it laterally.

use serde::{Deserialize, Serialize};

use crate::sim::geometry::{wrap_angle, Polyline, Vec2};
use crate::sim::radar::radar_scan;
use crate::sim::scenario::{ObjectKind, PolicyParams, RoutePlan, ScenarioSpec};
use crate::sim::Scene;

/// One enriched radar return, as seen by the AV controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub object_id: usize,
    pub kind: ObjectKind,
    pub range: f64,
    pub bearing: f64,
    /// Ray hit point in world coordinates.
    pub position: Vec2,
    /// Signed lateral offset of the hit point from the active route.
    pub route_lateral: f64,
    /// Arclength of the hit point ahead of the ego projection.
    pub route_ahead: f64,
    /// Rate of change of the object's |lateral offset|; negative means the
    /// object is closing on the route line.
    pub lateral_closing: f64,
}

/// Everything the AV controller sees each decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct AvObservation {
    pub detections: Vec<Detection>,
    pub speed: f64,
    pub target_speed: f64,
    /// Scripted steering command from the route follower.
    pub route_steer: f64,
    /// Ego lateral offset from the active route.
    pub route_lateral: f64,
    /// Distance to an active scripted stop target (red light, lane-change
    /// hold), if any.
    pub dist_to_stop: Option<f64>,
    pub light_green: Option<bool>,
    pub time: f64,
}

/// Longitudinal and steering command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub accel: f64,
    pub steer: f64,
}

impl Action {
    pub const ZERO: Action = Action {
        accel: 0.0,
        steer: 0.0,
    };
}

/// An AV controller: maps observations to actions.
pub trait AvPolicy {
    fn act(&mut self, obs: &AvObservation) -> Action;
}

/// Scripted route state for one scenario run.
#[derive(Debug, Clone)]
pub struct Navigator {
    plan: RoutePlan,
    straight: Polyline,
    pass_route: Option<Polyline>,
    committed: bool,
    /// Arclength (on the straight route) to hold at while the gate is closed.
    hold_at: Option<f64>,
    /// Gate checks start once the ego passes this arclength.
    gate_from: f64,
    stop_line_s: f64,
    target_speed: f64,
    pass_lane_y: f64,
}

impl Navigator {
    /// Builds the route for a freshly instantiated scene. The lane-change
    /// plan wraps around the nearest static vehicle blocking the AV's lane.
    pub fn for_scene(spec: &ScenarioSpec, scene: &Scene) -> Self {
        let av = scene.av();
        let (start, heading, target_speed) = match av {
            Some(a) => (a.pos, a.heading, a.speed.max(1.0)),
            None => (Vec2::new(0.0, 0.0), 0.0, 1.0),
        };
        let dir = Vec2::from_angle(heading);
        let straight = Polyline::new(vec![start, start.add(dir.scale(500.0))]);

        let mut nav = Navigator {
            plan: spec.route,
            straight: straight.clone(),
            pass_route: None,
            committed: false,
            hold_at: None,
            gate_from: 0.0,
            stop_line_s: 0.0,
            target_speed,
            pass_lane_y: 0.0,
        };

        match spec.route {
            RoutePlan::Straight => {}
            RoutePlan::SignalledStraight => {
                let stop_point = Vec2::new(spec.stop_line, start.y);
                nav.stop_line_s = straight.project(stop_point).0;
            }
            RoutePlan::LaneChange => {
                // nearest static vehicle ahead in the ego corridor
                let blocker = scene
                    .objects
                    .iter()
                    .filter(|o| o.kind == ObjectKind::StaticVehicle)
                    .filter_map(|o| {
                        let (s, lat) = straight.project(o.pos);
                        (s > 0.0 && lat.abs() < 2.5).then_some((s, o.pos))
                    })
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((s_blk, blk_pos)) = blocker {
                    let y1 = start.y + spec.pass_offset;
                    nav.pass_lane_y = y1;
                    let pts = vec![
                        start,
                        straight.point_at((s_blk - 14.0).max(1.0)),
                        Vec2::new(blk_pos.x - 5.0, y1),
                        Vec2::new(blk_pos.x + 7.0, y1),
                        Vec2::new(blk_pos.x + 16.0, start.y),
                        Vec2::new(blk_pos.x + 200.0, start.y),
                    ];
                    nav.pass_route = Some(Polyline::new(pts));
                    nav.hold_at = Some((s_blk - 8.0).max(0.0));
                    // the commit decision happens close to the blocker,
                    // where sight lines into the oncoming lane matter
                    nav.gate_from = (s_blk - 16.0).max(0.0);
                }
            }
        }
        nav
    }

    fn active_route(&self) -> &Polyline {
        match (&self.pass_route, self.committed) {
            (Some(r), true) => r,
            _ => &self.straight,
        }
    }

    pub fn committed(&self) -> bool {
        self.committed
    }

    /// Scans the radar, updates the gate state and assembles the AV
    /// observation for this decision step.
    pub fn observe(&mut self, scene: &Scene, spec: &ScenarioSpec) -> Option<AvObservation> {
        let av = scene.av()?;
        // the AV concentrates its rays in the frontal attention cone
        let frontal = crate::sim::scenario::RadarConfig {
            rays: spec.radar.rays,
            range: spec.radar.range,
            fov: 2.0 * spec.policy.cone_half_angle,
        };
        let returns = radar_scan(scene, av, &frontal);

        // Gate: commit to the pass only when no oncoming vehicle is visible
        // in the target lane band within gate range.
        if self.plan == RoutePlan::LaneChange && !self.committed && self.pass_route.is_some() {
            let (s_ego, _) = self.straight.project(av.pos);
            if s_ego >= self.gate_from {
                let oncoming_visible = returns.iter().any(|r| {
                    scene.object(r.object_id).is_some_and(|obj| {
                        obj.kind == ObjectKind::Vehicle
                            && r.range <= spec.policy.gate_range
                            && (obj.pos.y - self.pass_lane_y).abs() < 1.8
                    })
                });
                if !oncoming_visible {
                    self.committed = true;
                }
            }
        }

        let route = self.active_route().clone();
        let (s_ego, lat_ego) = route.project(av.pos);

        let detections: Vec<Detection> = returns
            .iter()
            .map(|r| {
                let obj = scene
                    .object(r.object_id)
                    .expect("radar returns reference live objects");
                let hit = av
                    .pos
                    .add(Vec2::from_angle(av.heading + r.bearing).scale(r.range));
                let (s_hit, lat_hit) = route.project(hit);
                let normal = Vec2::from_angle(route.heading_at(s_hit) + std::f64::consts::FRAC_PI_2);
                let d_lat = obj.velocity().dot(normal);
                // rate of change of |lateral|
                let lateral_closing = if lat_hit >= 0.0 { d_lat } else { -d_lat };
                Detection {
                    object_id: r.object_id,
                    kind: obj.kind,
                    range: r.range,
                    bearing: r.bearing,
                    position: hit,
                    route_lateral: lat_hit,
                    route_ahead: s_hit - s_ego,
                    lateral_closing,
                }
            })
            .collect();

        // steering toward the lookahead point
        let look = route.point_at(s_ego + spec.policy.lookahead);
        let desired = look.sub(av.pos).angle();
        let err = wrap_angle(desired - av.heading);
        let route_steer = (1.5 * err).clamp(-spec.policy.steer_max, spec.policy.steer_max);

        // scripted stop targets
        let light_green = scene.light_green();
        let mut dist_to_stop: Option<f64> = None;
        if self.plan == RoutePlan::SignalledStraight {
            if let Some(false) = light_green {
                let d = self.stop_line_s - s_ego;
                if d > -1.0 {
                    dist_to_stop = Some(d);
                }
            }
        }
        if self.plan == RoutePlan::LaneChange && !self.committed {
            if let Some(hold) = self.hold_at {
                let d = hold - s_ego;
                if d > -1.0 {
                    dist_to_stop = Some(dist_to_stop.map_or(d, |x: f64| x.min(d)));
                }
            }
        }

        Some(AvObservation {
            detections,
            speed: av.speed,
            target_speed: self.target_speed,
            route_steer,
            route_lateral: lat_ego,
            dist_to_stop,
            light_green,
            time: scene.time,
        })
    }
}

/// The deterministic braking rule evaluated by the scripted AV.
#[derive(Debug, Clone)]
pub struct RuleBasedAv {
    params: PolicyParams,
}

impl RuleBasedAv {
    pub fn new(params: PolicyParams) -> Self {
        RuleBasedAv { params }
    }

    /// True when any detection demands an emergency brake.
    pub fn threat(&self, obs: &AvObservation) -> bool {
        obs.detections.iter().any(|d| self.is_threat(d))
    }

    fn is_threat(&self, d: &Detection) -> bool {
        let p = &self.params;
        if d.bearing.abs() > p.cone_half_angle || d.route_ahead < -0.5 {
            return false;
        }
        if d.range <= p.braking_range && d.route_lateral.abs() < p.corridor_half_width {
            return true;
        }
        d.kind == ObjectKind::Pedestrian
            && d.range <= p.pedestrian_watch_range
            && d.route_lateral.abs() < p.watch_half_width
            && d.lateral_closing < -p.lateral_speed_threshold
    }
}

impl AvPolicy for RuleBasedAv {
    fn act(&mut self, obs: &AvObservation) -> Action {
        let p = self.params;
        let accel = if self.threat(obs) {
            -p.a_max
        } else if let Some(accel) = stop_target_accel(obs.dist_to_stop, obs.speed, &p) {
            accel
        } else {
            cruise_accel(obs.speed, obs.target_speed, &p)
        };
        Action {
            accel,
            steer: obs.route_steer,
        }
    }
}

/// Deceleration profile for stopping at a scripted target, or None when the
/// target is still comfortably far.
pub fn stop_target_accel(dist: Option<f64>, speed: f64, p: &PolicyParams) -> Option<f64> {
    let d = dist?;
    if d <= 0.2 {
        return Some(if speed > 0.05 { -p.a_max } else { 0.0 });
    }
    let comfortable = speed * speed / (2.0 * 3.0);
    if d <= comfortable + 2.0 {
        Some(-(speed * speed / (2.0 * d)).clamp(0.0, p.a_max))
    } else {
        None
    }
}

fn cruise_accel(speed: f64, target: f64, p: &PolicyParams) -> f64 {
    ((target - speed) * 1.0).clamp(-p.a_cruise, p.a_cruise)
}
