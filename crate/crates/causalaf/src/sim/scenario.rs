//! Scenario specifications: road layout, per-type object templates with
//! attribute decode windows, simulation horizons and the AV policy
//! parameters. Specs are plain data and serialize to TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, GraphDims};
use crate::sim::geometry::Vec2;

/// Default scale of the bounded attribute decode; flow outputs are squashed
/// through `tanh(x / scale)` before the affine map into a bounds window.
pub const DECODE_SCALE: f64 = 4.0;

/// Maps an unbounded flow output into `[lo, hi]`.
pub fn decode_attr(raw: f64, (lo, hi): (f64, f64), scale: f64) -> f64 {
    lo + (hi - lo) * 0.5 * ((raw / scale).tanh() + 1.0)
}

/// Inverse of [`decode_attr`] for constructing graphs that decode to chosen
/// physical values (used by uniform scenario sampling).
pub fn encode_attr(value: f64, (lo, hi): (f64, f64), scale: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let frac = ((value - lo) / (hi - lo)).clamp(1e-6, 1.0 - 1e-6);
    scale * (2.0 * frac - 1.0).atanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Av,
    Vehicle,
    StaticVehicle,
    Pedestrian,
    TrafficLight,
}

/// Decode windows for a self-loop edge's `[x, y, vx, vy]` attributes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttrBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub vx: (f64, f64),
    pub vy: (f64, f64),
}

impl AttrBounds {
    pub fn fixed(x: f64, y: f64) -> Self {
        AttrBounds {
            x: (x, x),
            y: (y, y),
            vx: (0.0, 0.0),
            vy: (0.0, 0.0),
        }
    }
}

/// Decode windows for a directed interaction edge: an aim point relative to
/// the target object and a speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AimWindow {
    pub dx: (f64, f64),
    pub dy: (f64, f64),
    pub speed: (f64, f64),
}

/// How one node type becomes a simulator object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTemplate {
    pub kind: ObjectKind,
    pub length: f64,
    pub width: f64,
    pub bounds: AttrBounds,
    /// Heading when the decoded velocity is zero.
    pub rest_heading: f64,
    /// Interpretation of directed interaction edges from this type.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aim: Option<AimWindow>,
    /// Traffic lights only: decode window for the green-switch time, carried
    /// on the vx attribute channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_switch: Option<(f64, f64)>,
}

impl ObjectTemplate {
    pub fn new(kind: ObjectKind, length: f64, width: f64, bounds: AttrBounds) -> Self {
        ObjectTemplate {
            kind,
            length,
            width,
            bounds,
            rest_heading: 0.0,
            aim: None,
            green_switch: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub start: Vec2,
    pub end: Vec2,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadLayout {
    pub lanes: Vec<Lane>,
    /// Placement envelope (min corner, max corner).
    pub min: Vec2,
    pub max: Vec2,
}

impl RoadLayout {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x.is_finite()
            && p.y.is_finite()
            && p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub rays: usize,
    pub range: f64,
    /// Field of view in radians (full circle for scripted agents).
    pub fov: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        RadarConfig {
            rays: 64,
            range: 40.0,
            fov: std::f64::consts::TAU,
        }
    }
}

/// Rule-based AV policy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Brake when a threat is detected within this range.
    pub braking_range: f64,
    /// Half-angle of the frontal attention cone (radians).
    pub cone_half_angle: f64,
    /// Half-width of the corridor around the route that counts as "in front".
    pub corridor_half_width: f64,
    /// Pedestrians within this lateral band are watched for crossing motion.
    pub watch_half_width: f64,
    /// Crossing pedestrians trigger braking out to this range (vehicles use
    /// `braking_range`).
    pub pedestrian_watch_range: f64,
    /// Minimum lateral closing speed (m/s) that marks a pedestrian a threat.
    pub lateral_speed_threshold: f64,
    /// Maximal comfortable deceleration (m/s^2).
    pub a_max: f64,
    /// Cruise acceleration toward the target speed.
    pub a_cruise: f64,
    /// Steering-rate bound (rad/s).
    pub steer_max: f64,
    /// Pure-pursuit lookahead distance (m).
    pub lookahead: f64,
    /// Oncoming traffic within this range blocks a lane-change commit.
    pub gate_range: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            braking_range: 15.0,
            cone_half_angle: std::f64::consts::PI / 3.0,
            corridor_half_width: 1.4,
            watch_half_width: 8.0,
            pedestrian_watch_range: 25.0,
            lateral_speed_threshold: 0.3,
            a_max: 6.0,
            a_cruise: 2.5,
            steer_max: 0.6,
            lookahead: 6.0,
            gate_range: 38.0,
        }
    }
}

/// The scripted maneuver the AV follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutePlan {
    /// Keep the starting lane.
    Straight,
    /// Stop at `stop_line` while the light is red, then proceed straight.
    SignalledStraight,
    /// Pull around the parked vehicle ahead via the opposite lane, gated on
    /// oncoming traffic.
    LaneChange,
}

/// Full description of one scenario family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub cg: CausalGraph,
    pub dims: GraphDims,
    /// One template per physical type, keyed by type name.
    pub templates: std::collections::BTreeMap<String, ObjectTemplate>,
    pub layout: RoadLayout,
    pub route: RoutePlan,
    /// World x of the stop line used by `SignalledStraight`.
    pub stop_line: f64,
    /// Lateral offset of the passing lane used by `LaneChange`, relative to
    /// the AV's starting lane.
    pub pass_offset: f64,
    /// Decision steps per episode.
    pub max_step: usize,
    /// Physics integration step (s).
    pub dt: f64,
    /// Seconds per decision step.
    pub decision_period: f64,
    /// Near-miss threshold epsilon (m); the objective fires when the minimal
    /// AV-to-object distance drops below it.
    pub collision_threshold: f64,
    /// Attribute decode squash scale (higher = flatter response around the
    /// window center).
    pub decode_scale: f64,
    pub radar: RadarConfig,
    pub policy: PolicyParams,
    /// Error on out-of-layout placements instead of clamping.
    pub strict_placement: bool,
}

impl ScenarioSpec {
    pub fn ticks_per_decision(&self) -> usize {
        (self.decision_period / self.dt).round().max(1.0) as usize
    }

    pub fn template(&self, type_id: usize) -> Option<&ObjectTemplate> {
        self.templates.get(self.cg.type_name(type_id))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.type_count != self.cg.type_count() {
            return Err(Error::ShapeMismatch(
                "spec dims disagree with causal graph".into(),
            ));
        }
        for t in 0..self.cg.type_count() {
            let name = self.cg.type_name(t);
            match (self.cg.is_physical(t), self.templates.contains_key(name)) {
                (true, false) => {
                    return Err(Error::Config(format!(
                        "physical type {name} lacks a template"
                    )));
                }
                (false, true) => {
                    return Err(Error::Config(format!(
                        "non-physical type {name} has a template"
                    )));
                }
                _ => {}
            }
        }
        if self.collision_threshold <= 0.0 {
            return Err(Error::Config("collision threshold must be positive".into()));
        }
        if self.dt <= 0.0 || self.decision_period < self.dt {
            return Err(Error::Config("need dt > 0 and decision_period >= dt".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serialize scenario: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: ScenarioSpec = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }
}
