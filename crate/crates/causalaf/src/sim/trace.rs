//! Scenario traces: per-tick object states, the running minimum distance
//! summary, and columnar export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::scenario::ObjectKind;
use crate::sim::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjState {
    pub id: usize,
    pub kind: ObjectKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

/// Full record of one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTrace {
    pub dt: f64,
    pub decision_period: f64,
    /// Object states per physics tick; index 0 is the initial scene.
    pub states: Vec<Vec<ObjState>>,
    /// Decision steps completed (or entered when a collision cut one short).
    pub step_count: usize,
    /// Minimum over time of the minimum AV-to-object footprint distance.
    pub min_distance: f64,
    pub collided: bool,
    /// Tick index at which the minimum distance was attained.
    pub min_distance_tick: usize,
    /// The AV entered the signalled intersection against a red light.
    pub ran_red_light: bool,
}

impl ScenarioTrace {
    pub fn snapshot(scene: &Scene) -> Vec<ObjState> {
        scene
            .objects
            .iter()
            .map(|o| ObjState {
                id: o.id,
                kind: o.kind,
                x: o.pos.x,
                y: o.pos.y,
                heading: o.heading,
                speed: o.speed,
            })
            .collect()
    }

    /// Writes the trace as columnar text: one row per object per tick.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("tick,time,object,kind,x,y,heading,speed\n");
        for (tick, state) in self.states.iter().enumerate() {
            let t = tick as f64 * self.dt;
            for s in state {
                out.push_str(&format!(
                    "{tick},{t:.3},{},{:?},{:.4},{:.4},{:.4},{:.4}\n",
                    s.id, s.kind, s.x, s.y, s.heading, s.speed
                ));
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
