//! 3D primitives: points/vectors, segments, vertical cylinders (human
//! bodies) and oriented planes (mirror elements).
//!
//! Room coordinates: `x` and `y` span the floor, `z` points up from the floor.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or direction in room coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Positions use the same representation as directions.
pub type Point3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    pub const DOWN: Vec3 = Vec3::new(0.0, 0.0, -1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
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

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for a zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A straight segment between two distinct points, e.g. a LoS ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment3 {
    pub a: Point3,
    pub b: Point3,
}

impl Segment3 {
    pub fn new(a: Point3, b: Point3) -> Result<Self> {
        if a == b {
            return Err(Error::Domain("segment endpoints coincide".into()));
        }
        Ok(Segment3 { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Finite vertical cylinder standing on the floor (`z ∈ [0, height]`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalCylinder {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub height: f64,
}

impl VerticalCylinder {
    pub fn new(center_x: f64, center_y: f64, radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0) || !(height > 0.0) {
            return Err(Error::Domain(format!(
                "cylinder needs positive radius and height, got r={radius}, h={height}"
            )));
        }
        Ok(VerticalCylinder {
            center_x,
            center_y,
            radius,
            height,
        })
    }
}

/// Plane through `point` with unit normal `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedPlane {
    point: Point3,
    normal: Vec3,
}

impl OrientedPlane {
    /// Normalizes `normal`; fails on a zero normal.
    pub fn new(point: Point3, normal: Vec3) -> Result<Self> {
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::Domain("plane normal must be nonzero".into()))?;
        Ok(OrientedPlane { point, normal })
    }

    pub fn point(&self) -> Point3 {
        self.point
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    /// Signed distance of `p` from the plane, positive on the normal side.
    pub fn signed_distance(&self, p: Point3) -> f64 {
        (p - self.point).dot(self.normal)
    }
}

/// True iff some point of `seg` lies strictly inside `cyl`.
///
/// Solves the lateral quadratic exactly, then clips against the caps.
/// Grazing contact (distance equal to the radius, or touching a cap at a
/// single point) does not count.
pub fn segment_intersects_cylinder(seg: &Segment3, cyl: &VerticalCylinder) -> bool {
    let d = seg.b - seg.a;
    let ox = seg.a.x - cyl.center_x;
    let oy = seg.a.y - cyl.center_y;
    let r2 = cyl.radius * cyl.radius;

    // Parameter interval (lo, hi) ⊂ [0, 1] where the horizontal distance is < r.
    let qa = d.x * d.x + d.y * d.y;
    let qc = ox * ox + oy * oy - r2;
    let (mut lo, mut hi) = if qa == 0.0 {
        if qc >= 0.0 {
            return false;
        }
        (0.0_f64, 1.0_f64)
    } else {
        let qb = 2.0 * (ox * d.x + oy * d.y);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return false;
        }
        let sq = disc.sqrt();
        // Numerically stable root pair.
        let q = -0.5 * (qb + qb.signum() * sq);
        let (r1, r2) = if q == 0.0 {
            let s = (-qc / qa).sqrt();
            (-s, s)
        } else {
            let a = q / qa;
            let b = qc / q;
            (a.min(b), a.max(b))
        };
        (r1.max(0.0), r2.min(1.0))
    };

    // Clip against 0 <= z <= height.
    if d.z == 0.0 {
        if seg.a.z < 0.0 || seg.a.z > cyl.height {
            return false;
        }
    } else {
        let s0 = (0.0 - seg.a.z) / d.z;
        let s1 = (cyl.height - seg.a.z) / d.z;
        lo = lo.max(s0.min(s1));
        hi = hi.min(s0.max(s1));
    }
    lo < hi
}

/// Mirror image of `p` across `plane`.
pub fn reflect_point_across_plane(p: Point3, plane: &OrientedPlane) -> Point3 {
    p - plane.normal * (2.0 * plane.signed_distance(p))
}

/// Angle in `[0, π]` between two nonzero vectors.
pub fn angle_between(u: Vec3, v: Vec3) -> Result<f64> {
    let nu = u.norm();
    let nv = v.norm();
    if !(nu > 0.0) || !(nv > 0.0) {
        return Err(Error::Domain("angle_between needs nonzero vectors".into()));
    }
    // atan2 form is accurate near 0 and π, and symmetric in its arguments.
    let c = u.cross(v).norm();
    Ok(c.atan2(u.dot(v)))
}

/// Intersection of the line through `seg` with `plane`, as the segment
/// parameter `s` (point = a + s·(b−a)); `None` if parallel.
pub fn segment_plane_parameter(seg: &Segment3, plane: &OrientedPlane) -> Option<f64> {
    let d = seg.b - seg.a;
    let denom = d.dot(plane.normal);
    if denom == 0.0 {
        return None;
    }
    Some((plane.point - seg.a).dot(plane.normal) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn seg(a: (f64, f64, f64), b: (f64, f64, f64)) -> Segment3 {
        Segment3::new(Vec3::new(a.0, a.1, a.2), Vec3::new(b.0, b.1, b.2)).unwrap()
    }

    fn body() -> VerticalCylinder {
        VerticalCylinder::new(0.0, 0.0, 0.3, 1.8).unwrap()
    }

    #[test]
    fn vertical_segment_through_axis_is_blocked() {
        assert!(segment_intersects_cylinder(&seg((0., 0., 3.), (0., 0., 0.)), &body()));
    }

    #[test]
    fn distant_vertical_segment_is_clear() {
        assert!(!segment_intersects_cylinder(&seg((2., 2., 3.), (2., 2., 0.)), &body()));
    }

    #[test]
    fn segment_above_top_cap_is_clear() {
        assert!(!segment_intersects_cylinder(&seg((-1., 0., 2.9), (1., 0., 2.9)), &body()));
    }

    #[test]
    fn tangent_segment_is_not_blocking() {
        assert!(!segment_intersects_cylinder(&seg((-1., 0.3, 1.0), (1., 0.3, 1.0)), &body()));
        assert!(segment_intersects_cylinder(&seg((-1., 0.299, 1.0), (1., 0.299, 1.0)), &body()));
    }

    #[test]
    fn slanted_ray_clipped_by_cap() {
        // Passes over the axis at z = 2.0, above the 1.8 m top.
        assert!(!segment_intersects_cylinder(&seg((-1., 0., 2.5), (1., 0., 1.5)), &body()));
        // Same ray lowered enters through the lateral surface.
        assert!(segment_intersects_cylinder(&seg((-1., 0., 2.0), (1., 0., 1.0)), &body()));
        // Steep ray entering through the top cap.
        assert!(segment_intersects_cylinder(&seg((0.5, 0., 3.0), (0.1, 0., 0.85)), &body()));
    }

    #[test]
    fn segment_ending_before_cylinder_is_clear() {
        assert!(!segment_intersects_cylinder(&seg((-2., 0., 1.0), (-0.31, 0., 1.0)), &body()));
    }

    #[test]
    fn segment_endpoint_inside_is_blocked() {
        assert!(segment_intersects_cylinder(&seg((0.1, 0.1, 0.85), (2., 2., 3.0)), &body()));
    }

    #[test]
    fn reflection_examples() {
        let yz = OrientedPlane::new(Vec3::ZERO, Vec3::new(1., 0., 0.)).unwrap();
        assert_eq!(reflect_point_across_plane(Vec3::new(1., 0., 0.), &yz), Vec3::new(-1., 0., 0.));
        let on = Vec3::new(0., 4., -2.);
        assert_eq!(reflect_point_across_plane(on, &yz), on);
        let floor = OrientedPlane::new(Vec3::ZERO, Vec3::UP).unwrap();
        assert_eq!(reflect_point_across_plane(Vec3::new(2., 3., 1.), &floor), Vec3::new(2., 3., -1.));
    }

    #[test]
    fn angle_examples() {
        let x = Vec3::new(1., 0., 0.);
        assert!((angle_between(x, Vec3::new(0., 1., 0.)).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(angle_between(x, x).unwrap(), 0.0);
        assert!((angle_between(x, -x).unwrap() - PI).abs() < 1e-15);
        assert!(matches!(angle_between(x, Vec3::ZERO), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(Segment3::new(Vec3::ZERO, Vec3::ZERO).is_err());
        assert!(VerticalCylinder::new(0., 0., 0.0, 1.0).is_err());
        assert!(VerticalCylinder::new(0., 0., 0.3, -1.0).is_err());
        assert!(OrientedPlane::new(Vec3::ZERO, Vec3::ZERO).is_err());
    }
}
