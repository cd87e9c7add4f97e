//! Planar and spatial primitives shared by the planners and the simulator.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Distance below which a point is considered to lie on a polygon boundary.
pub const BOUNDARY_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    /// Lexicographic (x, y) ordering used for deterministic tie-breaks.
    pub fn lex_cmp(&self, o: &Point2) -> std::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }

    pub fn with_z(self, z: f64) -> Point3 {
        Point3::new(self.x, self.y, z)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn dist(self, o: Point3) -> f64 {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x - BOUNDARY_EPS
            && p.x <= self.max.x + BOUNDARY_EPS
            && p.y >= self.min.y - BOUNDARY_EPS
            && p.y <= self.max.y + BOUNDARY_EPS
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.min.x < o.max.x && o.min.x < self.max.x && self.min.y < o.max.y && o.min.y < self.max.y
    }

    pub fn expanded(&self, m: f64) -> Rect {
        Rect::new(
            Point2::new(self.min.x - m, self.min.y - m),
            Point2::new(self.max.x + m, self.max.y + m),
        )
    }

    pub fn to_polygon(&self) -> Polygon2 {
        Polygon2::new(vec![
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ])
    }
}

/// Simple polygon given by its vertex ring (no repeated closing vertex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2 {
    pub vertices: Vec<Point2>,
}

impl Polygon2 {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect::new(Point2::new(x0, y0), Point2::new(x1, y1)).to_polygon()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        if self.vertices.len() < 3 {
            return 0.0;
        }
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point2 {
        let a = self.signed_area();
        if a.abs() < 1e-12 {
            let n = self.vertices.len().max(1) as f64;
            let s = self
                .vertices
                .iter()
                .fold(Point2::default(), |acc, &p| acc + p);
            return s * (1.0 / n);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn bbox(&self) -> Rect {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Rect::new(min, max)
    }

    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn crossing_parity(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        if self.vertices.len() < 3 {
            return self.vertices.len() > 0 && self.distance_to_boundary(p) <= BOUNDARY_EPS;
        }
        self.distance_to_boundary(p) <= BOUNDARY_EPS || self.crossing_parity(p)
    }

    /// Open containment: points on (or within `BOUNDARY_EPS` of) the boundary are outside.
    pub fn contains_strict(&self, p: Point2) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        self.distance_to_boundary(p) > BOUNDARY_EPS && self.crossing_parity(p)
    }

    /// True when the open segment `a`-`b` passes through the polygon interior.
    /// Grazing a vertex or running along an edge is allowed.
    pub fn segment_enters_interior(&self, a: Point2, b: Point2) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        let d = b - a;
        let len2 = d.dot(d);
        if len2 < 1e-18 {
            return self.contains_strict(a);
        }
        let bb = self.bbox();
        let seg_box = Rect::new(
            Point2::new(a.x.min(b.x), a.y.min(b.y)),
            Point2::new(a.x.max(b.x), a.y.max(b.y)),
        );
        if seg_box.min.x > bb.max.x + BOUNDARY_EPS
            || seg_box.max.x < bb.min.x - BOUNDARY_EPS
            || seg_box.min.y > bb.max.y + BOUNDARY_EPS
            || seg_box.max.y < bb.min.y - BOUNDARY_EPS
        {
            return false;
        }
        let mut ts = vec![0.0, 1.0];
        for (p, q) in self.edges() {
            let e = q - p;
            let denom = d.cross(e);
            let ap = p - a;
            if denom.abs() > 1e-12 * (len2.sqrt() * e.norm()).max(1e-300) {
                let t = ap.cross(e) / denom;
                let u = ap.cross(d) / denom;
                let tol = 1e-9;
                if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
                    ts.push(t.clamp(0.0, 1.0));
                }
            } else if point_line_distance(p, a, b) <= BOUNDARY_EPS {
                for v in [p, q] {
                    let t = (v - a).dot(d) / len2;
                    if (0.0..=1.0).contains(&t) {
                        ts.push(t);
                    }
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2)
            .any(|w| w[1] - w[0] > 1e-12 && self.contains_strict(a.lerp(b, 0.5 * (w[0] + w[1]))))
    }

    /// Nearest point on the boundary to `p`.
    pub fn nearest_boundary_point(&self, p: Point2) -> Point2 {
        let mut best = (f64::INFINITY, p);
        for (a, b) in self.edges() {
            let c = closest_point_on_segment(p, a, b);
            let d = c.dist(p);
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }
}

pub fn closest_point_on_segment(p: Point2, a: Point2, b: Point2) -> Point2 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    a.lerp(b, t)
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    closest_point_on_segment(p, a, b).dist(p)
}

fn point_line_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let n = d.norm();
    if n == 0.0 {
        return p.dist(a);
    }
    (d.cross(p - a) / n).abs()
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup_by(|a, b| a.dist(*b) < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point2, a: Point2, b: Point2| (a - o).cross(b - o);
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Number of sides of the polygon that stands in for the dilation disk.
const DILATION_SIDES: usize = 8;

/// Outer approximation of the Minkowski sum of `poly` with a disk of radius `margin`.
///
/// Each vertex is swept by a regular octagon circumscribing the disk and the
/// convex hull of the result is returned, so the output always contains the
/// exact rounded dilation (and the convex hull of the input). A zero margin
/// returns the polygon untouched.
pub fn dilate(poly: &Polygon2, margin: f64) -> Polygon2 {
    if margin <= 0.0 || poly.vertices.is_empty() {
        return poly.clone();
    }
    let step = std::f64::consts::TAU / DILATION_SIDES as f64;
    let r = margin / (0.5 * step).cos();
    let mut pts = Vec::with_capacity(poly.vertices.len() * DILATION_SIDES);
    for v in &poly.vertices {
        for k in 0..DILATION_SIDES {
            let th = (k as f64 + 0.5) * step;
            pts.push(Point2::new(v.x + r * th.cos(), v.y + r * th.sin()));
        }
    }
    Polygon2::new(convex_hull(&pts))
}
