//! Occlusion-aware radar: rays swept across the field of view, each
//! reporting the nearest footprint it pierces. Objects behind another
//! footprint on the same ray are invisible, which is what makes parked
//! vehicles block the view of pedestrians and oncoming traffic.

use crate::sim::geometry::{ray_rect_intersection, Vec2};
use crate::sim::scenario::RadarConfig;
use crate::sim::{Scene, SceneObject};

/// One radar return. Bearing is relative to the agent's heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarReturn {
    pub range: f64,
    pub bearing: f64,
    pub object_id: usize,
}

/// Casts `config.rays` rays from the agent across `config.fov` and returns
/// the nearest hit per ray within range, ordered by ray. Zero-footprint
/// objects (traffic lights) are transparent.
pub fn radar_scan(scene: &Scene, agent: &SceneObject, config: &RadarConfig) -> Vec<RadarReturn> {
    let mut returns = Vec::new();
    if config.rays == 0 {
        return returns;
    }
    let full_circle = (config.fov - std::f64::consts::TAU).abs() < 1e-9;
    for k in 0..config.rays {
        let bearing = if full_circle {
            // spread over the circle without duplicating the seam
            -std::f64::consts::PI + config.fov * (k as f64) / (config.rays as f64)
        } else if config.rays == 1 {
            0.0
        } else {
            -config.fov / 2.0 + config.fov * (k as f64) / ((config.rays - 1) as f64)
        };
        let dir = Vec2::from_angle(agent.heading + bearing);
        let mut best: Option<(f64, usize)> = None;
        for obj in &scene.objects {
            if obj.id == agent.id {
                continue;
            }
            let rect = obj.footprint_rect();
            if rect.is_degenerate() {
                continue;
            }
            if let Some(dist) = ray_rect_intersection(agent.pos, dir, &rect) {
                if dist <= config.range && best.map_or(true, |(d, _)| dist < d) {
                    best = Some((dist, obj.id));
                }
            }
        }
        if let Some((range, object_id)) = best {
            returns.push(RadarReturn {
                range,
                bearing,
                object_id,
            });
        }
    }
    returns
}
