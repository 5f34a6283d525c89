//! Planar convex polygons and the upright, layered poses they are extruded at.
//!
//! Every object is a convex base polygon extruded by a shared height `h`.
//! Poses rotate the base about the object-frame origin (yaw only) and then
//! translate it; the vertical position is always `layer * h`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Overlap area at or below which two footprints are considered disjoint.
pub const AREA_EPS: f64 = 1e-9;
/// Distance below which two vertices are merged.
pub const VERTEX_EPS: f64 = 1e-9;
/// Maximum gap between two faces that still counts as touching.
pub const GAP_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon area {0:e} is not above tolerance")]
    Degenerate(f64),
    #[error("polygon is not convex")]
    NotConvex,
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self.scale(1.0 / self.norm())
    }
}

/// Upright pose: yaw about the vertical axis, then planar translation.
/// The vertical offset is `layer * h` for the instance height `h`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub layer: u32,
    #[serde(default)]
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, layer: u32, yaw: f64) -> Self {
        Self { x, y, layer, yaw: yaw.rem_euclid(TAU) }
    }

    pub fn at(x: f64, y: f64, layer: u32) -> Self {
        Self::new(x, y, layer, 0.0)
    }

    pub fn z(&self, height: f64) -> f64 {
        self.layer as f64 * height
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    pub fn apply_inverse(&self, p: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        let d = Point2::new(p.x - self.x, p.y - self.y);
        Point2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    /// Equality within a position and an angular tolerance; yaw compares modulo 2π.
    pub fn approx_eq(&self, other: &Pose, pos_tol: f64, yaw_tol: f64) -> bool {
        if self.layer != other.layer {
            return false;
        }
        if (self.x - other.x).abs() > pos_tol || (self.y - other.y).abs() > pos_tol {
            return false;
        }
        let d = (self.yaw - other.yaw).rem_euclid(TAU);
        d.min(TAU - d) <= yaw_tol
    }
}

/// Strictly convex, counter-clockwise polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * acc
}

/// Drops repeated and collinear vertices in place.
fn simplify(v: &mut Vec<Point2>, tol: f64) {
    v.dedup_by(|a, b| a.dist(*b) <= tol);
    while v.len() > 1 && v[0].dist(v[v.len() - 1]) <= tol {
        v.pop();
    }
    let mut changed = true;
    while changed && v.len() >= 3 {
        changed = false;
        let n = v.len();
        for i in 0..n {
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let e = next.sub(prev);
            let len = e.norm();
            // Distance from `cur` to the chord prev→next.
            if len <= tol || cur.sub(prev).cross(e).abs() / len <= tol {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
}

impl Polygon {
    /// Builds a polygon, normalising orientation to counter-clockwise and
    /// removing repeated or collinear vertices.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        Self::with_tolerance(vertices, VERTEX_EPS, AREA_EPS)
    }

    pub fn with_tolerance(
        mut vertices: Vec<Point2>,
        vertex_tol: f64,
        area_tol: f64,
    ) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        simplify(&mut vertices, vertex_tol);
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let area = signed_area(&vertices);
        if area.abs() <= area_tol {
            return Err(GeometryError::Degenerate(area.abs()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if b.sub(a).cross(c.sub(b)) <= 0.0 {
                return Err(GeometryError::NotConvex);
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle with its minimum corner at `(x0, y0)`.
    pub fn rectangle(x0: f64, y0: f64, w: f64, h: f64) -> Self {
        Self::new(vec![
            Point2::new(x0, y0),
            Point2::new(x0 + w, y0),
            Point2::new(x0 + w, y0 + h),
            Point2::new(x0, y0 + h),
        ])
        .expect("rectangle with positive extent")
    }

    /// The unit square `[0,1]²`, the base used by every generated scenario.
    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 0.0, 1.0, 1.0)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let v = &self.vertices;
        let n = v.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        // Shift to the first vertex to keep the products small.
        let o = v[0];
        for i in 0..n {
            let p = v[i].sub(o);
            let q = v[(i + 1) % n].sub(o);
            let w = p.cross(q);
            a2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point2::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    pub fn transformed(&self, pose: &Pose) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&p| pose.apply(p)).collect() }
    }

    pub fn inverse_transformed(&self, pose: &Pose) -> Polygon {
        Polygon { vertices: self.vertices.iter().map(|&p| pose.apply_inverse(p)).collect() }
    }

    /// Point-in-polygon test with a signed-distance slack (positive slack grows the polygon).
    pub fn contains(&self, p: Point2, slack: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b.sub(a);
            e.cross(p.sub(a)) / e.norm() >= -slack
        })
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Rotates `base` by the pose yaw and translates it to the pose position.
pub fn transform_footprint(base: &Polygon, pose: &Pose) -> Polygon {
    base.transformed(pose)
}

pub fn polygon_area(p: &Polygon) -> f64 {
    p.area()
}

pub fn centroid(p: &Polygon) -> Point2 {
    p.centroid()
}

/// Convex intersection of `a` and `b` by Sutherland-Hodgman clipping, or `None`
/// when the overlap area does not exceed [`AREA_EPS`].
pub fn polygon_intersection(a: &Polygon, b: &Polygon) -> Option<Polygon> {
    intersection_with_tolerance(a, b, AREA_EPS)
}

pub fn intersection_with_tolerance(a: &Polygon, b: &Polygon, area_tol: f64) -> Option<Polygon> {
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    if alo.x > bhi.x || blo.x > ahi.x || alo.y > bhi.y || blo.y > ahi.y {
        return None;
    }
    let mut out: Vec<Point2> = a.vertices.clone();
    let n = b.vertices.len();
    for i in 0..n {
        if out.is_empty() {
            return None;
        }
        let p = b.vertices[i];
        let q = b.vertices[(i + 1) % n];
        let edge = q.sub(p);
        let side = |v: Point2| edge.cross(v.sub(p));
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let sc = side(cur);
            let sp = side(prev);
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(prev.add(cur.sub(prev).scale(sp / (sp - sc))));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(prev.add(cur.sub(prev).scale(sp / (sp - sc))));
            }
        }
    }
    simplify(&mut out, VERTEX_EPS);
    if out.len() < 3 {
        return None;
    }
    let area = signed_area(&out);
    if area <= area_tol {
        return None;
    }
    Some(Polygon { vertices: out })
}

/// Overlap area of two convex polygons (zero when disjoint or below tolerance).
pub fn overlap_area(a: &Polygon, b: &Polygon) -> f64 {
    polygon_intersection(a, b).map_or(0.0, |p| p.area())
}

/// A flush face-to-face contact between two same-layer footprints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchingSegment {
    pub start: Point2,
    pub end: Point2,
    /// Unit normal pointing from the second polygon into the first.
    pub normal: Point2,
}

impl TouchingSegment {
    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }
}

/// Finds the longest pair of anti-parallel edges of `a` and `b` lying within
/// `gap` of each other and overlapping by more than `min_len`.
pub fn touching_segment(a: &Polygon, b: &Polygon, gap: f64, min_len: f64) -> Option<TouchingSegment> {
    let mut best: Option<TouchingSegment> = None;
    let na = a.vertices.len();
    let nb = b.vertices.len();
    for i in 0..na {
        let p0 = a.vertices[i];
        let p1 = a.vertices[(i + 1) % na];
        let len = p1.dist(p0);
        let d = p1.sub(p0).scale(1.0 / len);
        // Outward normal of a CCW edge.
        let out = Point2::new(d.y, -d.x);
        for j in 0..nb {
            let q0 = b.vertices[j];
            let q1 = b.vertices[(j + 1) % nb];
            let e = q1.sub(q0);
            let elen = e.norm();
            let e = e.scale(1.0 / elen);
            if d.cross(e).abs() > 1e-9 || d.dot(e) >= 0.0 {
                continue;
            }
            if q0.sub(p0).dot(out).abs() > gap || q1.sub(p0).dot(out).abs() > gap {
                continue;
            }
            let t0 = q0.sub(p0).dot(d);
            let t1 = q1.sub(p0).dot(d);
            let lo = t0.min(t1).max(0.0);
            let hi = t0.max(t1).min(len);
            if hi - lo <= min_len {
                continue;
            }
            let seg = TouchingSegment {
                start: p0.add(d.scale(lo)),
                end: p0.add(d.scale(hi)),
                normal: out.scale(-1.0),
            };
            if best.is_none_or(|b| seg.length() > b.length()) {
                best = Some(seg);
            }
        }
    }
    best
}
