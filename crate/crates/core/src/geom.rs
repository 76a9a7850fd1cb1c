//! Plane geometry: arc-length parametrized polylines and convex polygons.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

/// A polyline with cumulative arc length.
///
/// Evaluation outside `[0, length]` extends the first / last segment in a
/// straight line, so agents that run past the end of a path keep moving along
/// its final heading.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point>,
    cum: Vec<f64>,
}

/// Position and heading at an arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Polyline {
    /// Returns `None` unless there are at least two points and every segment
    /// has positive length.
    pub fn new(points: Vec<Point>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for w in points.windows(2) {
            let d = w[0].dist(w[1]);
            if !d.is_finite() || d <= 0.0 {
                return None;
            }
            cum.push(cum.last().copied().unwrap_or(0.0) + d);
        }
        Some(Polyline { points, cum })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().expect("polyline has points")
    }

    fn segment_for(&self, s: f64) -> usize {
        let last = self.points.len() - 2;
        if s <= 0.0 {
            return 0;
        }
        // first cum strictly greater than s, minus one
        let idx = self.cum.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(last)
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        let i = self.segment_for(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg_len = self.cum[i + 1] - self.cum[i];
        let u = (s - self.cum[i]) / seg_len;
        Pose {
            x: a.x + u * (b.x - a.x),
            y: a.y + u * (b.y - a.y),
            theta: (b.y - a.y).atan2(b.x - a.x),
        }
    }

    pub fn point_at(&self, s: f64) -> Point {
        let p = self.pose_at(s);
        Point::new(p.x, p.y)
    }

    /// Closest point on the polyline; returns `(arc_length, distance)`.
    pub fn project(&self, p: Point) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for (i, w) in self.points.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let u = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
            let q = Point::new(a.x + u * dx, a.y + u * dy);
            let d = q.dist(p);
            if d < best.1 {
                best = (self.cum[i] + u * len2.sqrt(), d);
            }
        }
        best
    }

    /// All proper crossings with another polyline, as `(arc_self, arc_other, point)`.
    pub fn intersections(&self, other: &Polyline) -> Vec<(f64, f64, Point)> {
        let mut out = Vec::new();
        for (i, a) in self.points.windows(2).enumerate() {
            for (j, b) in other.points.windows(2).enumerate() {
                if let Some((u, v)) = segment_intersection(a[0], a[1], b[0], b[1]) {
                    let p = Point::new(
                        a[0].x + u * (a[1].x - a[0].x),
                        a[0].y + u * (a[1].y - a[0].y),
                    );
                    let sa = self.cum[i] + u * (self.cum[i + 1] - self.cum[i]);
                    let sb = other.cum[j] + v * (other.cum[j + 1] - other.cum[j]);
                    // shared vertices show up on two adjacent segments
                    if !out.iter().any(|&(s0, t0, _): &(f64, f64, Point)| {
                        (s0 - sa).abs() < 1e-9 && (t0 - sb).abs() < 1e-9
                    }) {
                        out.push((sa, sb, p));
                    }
                }
            }
        }
        out
    }
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Parameters `(u, v)` in `[0,1]²` where segment `p0p1` meets `q0q1`.
fn segment_intersection(p0: Point, p1: Point, q0: Point, q1: Point) -> Option<(f64, f64)> {
    let (rx, ry) = (p1.x - p0.x, p1.y - p0.y);
    let (sx, sy) = (q1.x - q0.x, q1.y - q0.y);
    let denom = cross(rx, ry, sx, sy);
    if denom.abs() < 1e-12 {
        return None;
    }
    let (qx, qy) = (q0.x - p0.x, q0.y - p0.y);
    let u = cross(qx, qy, sx, sy) / denom;
    let v = cross(qx, qy, rx, ry) / denom;
    ((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)).then_some((u, v))
}

/// Convex polygon, vertices in either winding order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Returns `None` for fewer than three vertices or a non-convex / degenerate outline.
    pub fn new(vertices: Vec<Point>) -> Option<Self> {
        if vertices.len() < 3 {
            return None;
        }
        let n = vertices.len();
        let mut sign = 0.0f64;
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            let z = cross(b.x - a.x, b.y - a.y, c.x - b.x, c.y - b.y);
            if z.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = z.signum();
            } else if z.signum() != sign {
                return None;
            }
        }
        (sign != 0.0).then_some(ConvexPolygon { vertices })
    }

    /// Axis-aligned rectangle.
    pub fn rect(min: Point, max: Point) -> Self {
        ConvexPolygon {
            vertices: vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)],
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Boundary counts as inside.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        let mut sign = 0.0f64;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let z = cross(b.x - a.x, b.y - a.y, p.x - a.x, p.y - a.y);
            if z.abs() < 1e-12 {
                continue;
            }
            if sign == 0.0 {
                sign = z.signum();
            } else if z.signum() != sign {
                return false;
            }
        }
        true
    }

    /// Arc-length interval `[enter, exit]` over which `path` is inside the
    /// polygon, sampled at `step`. `None` if the path never enters.
    pub fn path_span(&self, path: &Polyline, step: f64) -> Option<(f64, f64)> {
        let len = path.length();
        let n = (len / step).ceil() as usize;
        let mut span: Option<(f64, f64)> = None;
        for k in 0..=n {
            let s = (k as f64 * step).min(len);
            if self.contains(path.point_at(s)) {
                span = Some(match span {
                    None => (s, s),
                    Some((a, _)) => (a, s),
                });
            }
        }
        span
    }
}

/// Straight-arc-straight polyline: a lead-in segment, a circular turn, and a
/// lead-out segment. Positive `turn` is counter-clockwise (left).
pub fn turning_path(
    start: Point,
    heading: f64,
    lead_in: f64,
    radius: f64,
    turn: f64,
    lead_out: f64,
    arc_step_deg: f64,
) -> Vec<Point> {
    let mut pts = vec![start];
    let entry = Point::new(
        start.x + lead_in * heading.cos(),
        start.y + lead_in * heading.sin(),
    );
    pts.push(entry);
    let side = turn.signum();
    let normal = heading + side * std::f64::consts::FRAC_PI_2;
    let center = Point::new(
        entry.x + radius * normal.cos(),
        entry.y + radius * normal.sin(),
    );
    let steps = (turn.abs().to_degrees() / arc_step_deg).ceil().max(1.0) as usize;
    let start_angle = normal + std::f64::consts::PI;
    for k in 1..=steps {
        let a = start_angle + turn * k as f64 / steps as f64;
        pts.push(Point::new(
            center.x + radius * a.cos(),
            center.y + radius * a.sin(),
        ));
    }
    let out_heading = heading + turn;
    let exit = *pts.last().expect("non-empty");
    pts.push(Point::new(
        exit.x + lead_out * out_heading.cos(),
        exit.y + lead_out * out_heading.sin(),
    ));
    pts
}
