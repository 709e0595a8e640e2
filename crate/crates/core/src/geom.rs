//! Shared geometric primitives: axis-aligned boxes, spheres, and planes.
//!
//! These back both the depth-camera simulation (ray intersection) and the
//! planner's obstacle clearance terms (signed point distance).

use nalgebra::{Point3, UnitVector3, Vector3};

use crate::scalar::Real;

/// Axis-aligned box given by its minimum and maximum corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T: Real> {
    pub min: Point3<T>,
    pub max: Point3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Point3<T>, max: Point3<T>) -> Self {
        Self { min, max }
    }

    /// Box centered at `center` with full edge lengths `extents`.
    pub fn from_center(center: Point3<T>, extents: Vector3<T>) -> Self {
        let half = extents * T::from_c(0.5);
        Self {
            min: center - half,
            max: center + half,
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point3<T>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Signed distance from `p` to the box surface (negative inside).
    pub fn signed_distance(&self, p: &Point3<T>) -> T {
        let mut outside_sq = T::zero();
        let mut max_inside = -T::INF;
        for a in 0..3 {
            let lo = self.min[a] - p[a];
            let hi = p[a] - self.max[a];
            let d = lo.max(hi);
            if d > T::zero() {
                outside_sq += d * d;
            } else {
                max_inside = max_inside.max(d);
            }
        }
        if outside_sq > T::zero() {
            outside_sq.sqrt()
        } else {
            max_inside
        }
    }

    /// Slab test: smallest `t >= 0` with `origin + t*dir` on the box, if any.
    pub fn ray_intersect(&self, origin: &Point3<T>, dir: &Vector3<T>) -> Option<T> {
        let mut t_enter = T::zero();
        let mut t_exit = T::INF;
        for a in 0..3 {
            if dir[a].abs() < T::from_c(1e-300) {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return None;
                }
            } else {
                let inv = T::one() / dir[a];
                let t0 = (self.min[a] - origin[a]) * inv;
                let t1 = (self.max[a] - origin[a]) * inv;
                let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
                t_enter = t_enter.max(t0);
                t_exit = t_exit.min(t1);
                if t_enter > t_exit {
                    return None;
                }
            }
        }
        Some(t_enter)
    }

    /// Smallest box containing both operands.
    pub fn union(&self, other: &Aabb<T>) -> Aabb<T> {
        let mut min = self.min;
        let mut max = self.max;
        for a in 0..3 {
            min[a] = min[a].min(other.min[a]);
            max[a] = max[a].max(other.max[a]);
        }
        Aabb { min, max }
    }

    pub fn translated(&self, v: &Vector3<T>) -> Aabb<T> {
        Aabb {
            min: self.min + v,
            max: self.max + v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere<T: Real> {
    pub center: Point3<T>,
    pub radius: T,
}

impl<T: Real> Sphere<T> {
    pub fn new(center: Point3<T>, radius: T) -> Self {
        Self { center, radius }
    }

    pub fn signed_distance(&self, p: &Point3<T>) -> T {
        (p - self.center).norm() - self.radius
    }

    pub fn ray_intersect(&self, origin: &Point3<T>, dir: &Vector3<T>) -> Option<T> {
        let oc = origin - self.center;
        let a = dir.dot(dir);
        let b = T::from_c(2.0) * oc.dot(dir);
        let c = oc.dot(&oc) - self.radius * self.radius;
        let disc = b * b - T::from_c(4.0) * a * c;
        if disc < T::zero() {
            return None;
        }
        let sqrt_d = disc.sqrt();
        let two_a = T::from_c(2.0) * a;
        let t0 = (-b - sqrt_d) / two_a;
        let t1 = (-b + sqrt_d) / two_a;
        if t0 >= T::zero() {
            Some(t0)
        } else if t1 >= T::zero() {
            Some(t1)
        } else {
            None
        }
    }
}

/// Infinite plane `normal . x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane<T: Real> {
    pub normal: UnitVector3<T>,
    pub offset: T,
}

impl<T: Real> Plane<T> {
    pub fn new(normal: UnitVector3<T>, offset: T) -> Self {
        Self { normal, offset }
    }

    pub fn from_point(normal: UnitVector3<T>, point: &Point3<T>) -> Self {
        let offset = normal.dot(&point.coords);
        Self { normal, offset }
    }

    /// Signed distance, positive on the normal side.
    pub fn signed_distance(&self, p: &Point3<T>) -> T {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn ray_intersect(&self, origin: &Point3<T>, dir: &Vector3<T>) -> Option<T> {
        let denom = self.normal.dot(dir);
        if denom.abs() < T::from_c(1e-12) {
            return None;
        }
        let t = (self.offset - self.normal.dot(&origin.coords)) / denom;
        if t >= T::zero() {
            Some(t)
        } else {
            None
        }
    }
}

/// Scene or obstacle primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive<T: Real> {
    Box(Aabb<T>),
    Sphere(Sphere<T>),
    Plane(Plane<T>),
}

impl<T: Real> Primitive<T> {
    /// Signed distance from a point (negative when inside / behind).
    pub fn signed_distance(&self, p: &Point3<T>) -> T {
        match self {
            Primitive::Box(b) => b.signed_distance(p),
            Primitive::Sphere(s) => s.signed_distance(p),
            Primitive::Plane(pl) => pl.signed_distance(p),
        }
    }

    /// Smallest non-negative ray parameter hitting the primitive.
    pub fn ray_intersect(&self, origin: &Point3<T>, dir: &Vector3<T>) -> Option<T> {
        match self {
            Primitive::Box(b) => b.ray_intersect(origin, dir),
            Primitive::Sphere(s) => s.ray_intersect(origin, dir),
            Primitive::Plane(pl) => pl.ray_intersect(origin, dir),
        }
    }

    pub fn translated(&self, v: &Vector3<T>) -> Primitive<T> {
        match self {
            Primitive::Box(b) => Primitive::Box(b.translated(v)),
            Primitive::Sphere(s) => Primitive::Sphere(Sphere::new(s.center + v, s.radius)),
            Primitive::Plane(pl) => Primitive::Plane(Plane {
                normal: pl.normal,
                offset: pl.offset + pl.normal.dot(v),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_signed_distance_inside_and_out() {
        let b: Aabb<f64> = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        assert_relative_eq!(b.signed_distance(&Point3::new(2.0, 0.5, 0.5)), 1.0);
        assert_relative_eq!(b.signed_distance(&Point3::new(0.5, 0.5, 0.5)), -0.5);
        assert_relative_eq!(
            b.signed_distance(&Point3::new(2.0, 2.0, 0.5)),
            2.0f64.sqrt()
        );
    }

    #[test]
    fn ray_box_hits_front_face() {
        let b: Aabb<f64> = Aabb::new(Point3::new(1.0, -1.0, -1.0), Point3::new(2.0, 1.0, 1.0));
        let t = b
            .ray_intersect(&Point3::origin(), &Vector3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert_relative_eq!(t, 1.0);
        assert!(b
            .ray_intersect(&Point3::origin(), &Vector3::new(-1.0, 0.0, 0.0))
            .is_none());
    }

    #[test]
    fn ray_starting_inside_box_returns_zero() {
        let b: Aabb<f64> = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0));
        let t = b
            .ray_intersect(&Point3::origin(), &Vector3::new(0.0, 1.0, 0.0))
            .unwrap();
        assert_relative_eq!(t, 0.0);
    }

    #[test]
    fn ray_sphere_tangent_cases() {
        let s: Sphere<f64> = Sphere::new(Point3::new(0.0, 0.0, 3.0), 1.0);
        let t = s
            .ray_intersect(&Point3::origin(), &Vector3::new(0.0, 0.0, 1.0))
            .unwrap();
        assert_relative_eq!(t, 2.0);
        assert!(s
            .ray_intersect(&Point3::origin(), &Vector3::new(1.0, 0.0, 0.0))
            .is_none());
    }

    #[test]
    fn ray_plane_facing_away_misses() {
        let p: Plane<f64> = Plane::new(UnitVector3::new_normalize(Vector3::x()), 2.0);
        assert_relative_eq!(
            p.ray_intersect(&Point3::origin(), &Vector3::new(1.0, 0.0, 0.0))
                .unwrap(),
            2.0
        );
        assert!(p
            .ray_intersect(&Point3::origin(), &Vector3::new(-1.0, 0.0, 0.0))
            .is_none());
    }

    #[test]
    fn plane_translation_shifts_offset() {
        let p: Plane<f64> = Plane::new(UnitVector3::new_normalize(Vector3::z()), 1.0);
        let q = Primitive::Plane(p).translated(&Vector3::new(5.0, 0.0, 2.0));
        match q {
            Primitive::Plane(pl) => assert_relative_eq!(pl.offset, 3.0),
            _ => unreachable!(),
        }
    }
}
