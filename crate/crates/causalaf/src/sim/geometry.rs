//! 2D geometry for the traffic simulator: vectors, oriented rectangles,
//! ray casting and footprint distances.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            Vec2::new(0.0, 0.0)
        } else {
            self.scale(1.0 / n)
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }

    /// Rotates by `theta` radians counterclockwise.
    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % std::f64::consts::TAU;
    if t > std::f64::consts::PI {
        t -= std::f64::consts::TAU;
    } else if t <= -std::f64::consts::PI {
        t += std::f64::consts::TAU;
    }
    t
}

/// Oriented rectangle footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub half_length: f64,
    pub half_width: f64,
    pub heading: f64,
}

impl OrientedRect {
    pub fn new(center: Vec2, length: f64, width: f64, heading: f64) -> Self {
        OrientedRect {
            center,
            half_length: length / 2.0,
            half_width: width / 2.0,
            heading,
        }
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let axis = Vec2::from_angle(self.heading);
        let perp = Vec2::new(-axis.y, axis.x);
        let l = axis.scale(self.half_length);
        let w = perp.scale(self.half_width);
        [
            self.center.add(l).add(w),
            self.center.add(l).sub(w),
            self.center.sub(l).sub(w),
            self.center.sub(l).add(w),
        ]
    }

    pub fn edges(&self) -> [(Vec2, Vec2); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let rel = p.sub(self.center).rotated(-self.heading);
        rel.x.abs() <= self.half_length && rel.y.abs() <= self.half_width
    }

    pub fn is_degenerate(&self) -> bool {
        self.half_length <= 0.0 || self.half_width <= 0.0
    }
}

/// Distance along the ray to the nearest intersection with the rectangle,
/// via the slab method in the box frame. Returns 0 for a ray starting
/// inside. `dir` must be a unit vector.
pub fn ray_rect_intersection(origin: Vec2, dir: Vec2, rect: &OrientedRect) -> Option<f64> {
    if rect.is_degenerate() {
        return None;
    }
    let rel = origin.sub(rect.center).rotated(-rect.heading);
    let d = dir.rotated(-rect.heading);
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for (p, v, half) in [
        (rel.x, d.x, rect.half_length),
        (rel.y, d.y, rect.half_width),
    ] {
        if v.abs() < 1e-12 {
            if p.abs() > half {
                return None;
            }
        } else {
            let t1 = (-half - p) / v;
            let t2 = (half - p) / v;
            t_min = t_min.max(t1.min(t2));
            t_max = t_max.min(t1.max(t2));
        }
    }
    if t_max < t_min || t_max < 0.0 {
        return None;
    }
    Some(t_min.max(0.0))
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.add(ab.scale(t)))
}

fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = d.sub(c).cross(a.sub(c));
    let d2 = d.sub(c).cross(b.sub(c));
    let d3 = b.sub(a).cross(c.sub(a));
    let d4 = b.sub(a).cross(d.sub(a));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn segment_segment_distance(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Separating-axis overlap test for two oriented rectangles.
pub fn rects_overlap(a: &OrientedRect, b: &OrientedRect) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    for rect in [a, b] {
        let axis1 = Vec2::from_angle(rect.heading);
        let axis2 = Vec2::new(-axis1.y, axis1.x);
        for axis in [axis1, axis2] {
            let pa: Vec<f64> = ca.iter().map(|p| p.dot(axis)).collect();
            let pb: Vec<f64> = cb.iter().map(|p| p.dot(axis)).collect();
            let (min_a, max_a) = (
                pa.iter().cloned().fold(f64::INFINITY, f64::min),
                pa.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            let (min_b, max_b) = (
                pb.iter().cloned().fold(f64::INFINITY, f64::min),
                pb.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            if max_a < min_b || max_b < min_a {
                return false;
            }
        }
    }
    true
}

/// Minimum distance between two oriented rectangle footprints; 0 when they
/// overlap or touch.
pub fn rect_distance(a: &OrientedRect, b: &OrientedRect) -> f64 {
    if rects_overlap(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (a1, a2) in a.edges() {
        for (b1, b2) in b.edges() {
            best = best.min(segment_segment_distance(a1, a2, b1, b2));
        }
    }
    best
}

/// A piecewise-linear path with projection helpers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Vec2>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Self {
        assert!(points.len() >= 2, "polyline needs at least two points");
        Polyline { points }
    }

    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .sum()
    }

    /// Projects a point onto the path: (arclength, signed lateral offset).
    /// Lateral is positive to the left of travel.
    pub fn project(&self, p: Vec2) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        let mut best_abs = f64::INFINITY;
        let mut s_acc = 0.0;
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let ab = b.sub(a);
            let len = ab.norm();
            if len == 0.0 {
                continue;
            }
            let t = (p.sub(a).dot(ab) / (len * len)).clamp(0.0, 1.0);
            let closest = a.add(ab.scale(t));
            let dist = p.distance(closest);
            if dist < best_abs {
                best_abs = dist;
                let side = ab.cross(p.sub(a)).signum();
                best = (s_acc + t * len, side * dist);
            }
            s_acc += len;
        }
        best
    }

    /// Point at the given arclength, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let len = w[0].distance(w[1]);
            if remaining <= len {
                let t = if len == 0.0 { 0.0 } else { remaining / len };
                return w[0].add(w[1].sub(w[0]).scale(t));
            }
            remaining -= len;
        }
        *self.points.last().unwrap()
    }

    /// Travel direction at the given arclength.
    pub fn heading_at(&self, s: f64) -> f64 {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let len = w[0].distance(w[1]);
            if remaining <= len {
                return w[1].sub(w[0]).angle();
            }
            remaining -= len;
        }
        let n = self.points.len();
        self.points[n - 1].sub(self.points[n - 2]).angle()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_axis_aligned_box() {
        let rect = OrientedRect::new(Vec2::new(20.0, 0.0), 4.0, 2.0, 0.0);
        let d = ray_rect_intersection(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &rect);
        assert!((d.unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn ray_misses_sideways() {
        let rect = OrientedRect::new(Vec2::new(20.0, 10.0), 4.0, 2.0, 0.0);
        let d = ray_rect_intersection(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &rect);
        assert!(d.is_none());
    }

    #[test]
    fn ray_hits_rotated_box() {
        let rect = OrientedRect::new(
            Vec2::new(10.0, 0.0),
            4.0,
            2.0,
            std::f64::consts::FRAC_PI_4,
        );
        let d = ray_rect_intersection(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &rect);
        assert!(d.is_some());
        assert!(d.unwrap() < 10.0);
    }

    #[test]
    fn ray_from_inside_reports_zero() {
        let rect = OrientedRect::new(Vec2::new(0.0, 0.0), 4.0, 2.0, 0.0);
        let d = ray_rect_intersection(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &rect);
        assert_eq!(d, Some(0.0));
    }

    #[test]
    fn overlapping_rect_distance_is_zero() {
        let a = OrientedRect::new(Vec2::new(0.0, 0.0), 4.0, 2.0, 0.0);
        let b = OrientedRect::new(Vec2::new(1.0, 0.5), 4.0, 2.0, 0.3);
        assert_eq!(rect_distance(&a, &b), 0.0);
    }

    #[test]
    fn separated_rect_distance() {
        let a = OrientedRect::new(Vec2::new(0.0, 0.0), 4.0, 2.0, 0.0);
        let b = OrientedRect::new(Vec2::new(10.0, 0.0), 4.0, 2.0, 0.0);
        assert!((rect_distance(&a, &b) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn polyline_projection() {
        let line = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)]);
        let (s, lat) = line.project(Vec2::new(3.0, 2.0));
        assert!((s - 3.0).abs() < 1e-12);
        assert!((lat - 2.0).abs() < 1e-12);
        let (_, lat) = line.project(Vec2::new(3.0, -2.0));
        assert!((lat + 2.0).abs() < 1e-12);
    }
}
