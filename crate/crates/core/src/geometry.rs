//! Rigid transforms, relative motions, cuboids and ray queries.
//!
//! Rotations are held as unit quaternions and only converted to an
//! axis-angle magnitude when a norm is requested. Angles are radians
//! everywhere except [`MotionNorms::rotation_deg`].

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// A proper rigid transform: rotate, then translate (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

/// On-disk form: translation in meters and a `[w, x, y, z]` quaternion.
#[derive(Serialize, Deserialize)]
struct PoseRepr {
    translation: [f64; 3],
    #[serde(default = "identity_wxyz")]
    rotation: [f64; 4],
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl From<PoseRepr> for Pose {
    fn from(r: PoseRepr) -> Self {
        let [w, x, y, z] = r.rotation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        // Already-unit quaternions are kept bit for bit so files round-trip.
        let rotation = if (q.norm() - 1.0).abs() < 1e-12 {
            UnitQuaternion::new_unchecked(q)
        } else {
            UnitQuaternion::from_quaternion(q)
        };
        Pose {
            rotation,
            translation: Vec3::from(r.translation),
        }
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRepr {
            translation: p.translation.into(),
            rotation: [q.w, q.i, q.j, q.k],
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(UnitQuaternion::identity(), Vec3::new(x, y, z))
    }

    pub fn from_axis_angle(axis: &Vec3, angle_rad: f64) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self::new(
            UnitQuaternion::from_axis_angle(&axis, angle_rad),
            Vec3::zeros(),
        )
    }

    pub fn rot_z(angle_rad: f64) -> Self {
        Self::from_axis_angle(&Vec3::z(), angle_rad)
    }

    pub fn with_translation(mut self, t: Vec3) -> Self {
        self.translation = t;
        self
    }

    /// `self * other`: apply `other` in the frame of `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse() * (p - self.translation)
    }

    pub fn rotation_matrix(&self) -> nalgebra::Matrix3<f64> {
        *self.rotation.to_rotation_matrix().matrix()
    }

    /// Largest absolute component difference between the two transforms'
    /// homogeneous matrices.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        let dr = (self.rotation_matrix() - other.rotation_matrix()).amax();
        let dt = (self.translation - other.translation).amax();
        dr.max(dt)
    }
}

/// A motion expressed in the frame of the pose it starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMotion {
    pub delta: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionNorms {
    pub translation_m: f64,
    pub rotation_deg: f64,
}

impl RelativeMotion {
    pub fn identity() -> Self {
        Self {
            delta: Pose::identity(),
        }
    }

    pub fn norms(&self) -> MotionNorms {
        motion_norms(self)
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

/// The motion `a⁻¹ b` that carries `a` onto `b`.
pub fn relative(a: &Pose, b: &Pose) -> RelativeMotion {
    RelativeMotion {
        delta: a.inverse().compose(b),
    }
}

pub fn motion_norms(m: &RelativeMotion) -> MotionNorms {
    let q = m.delta.rotation.quaternion();
    // 2·atan2(|v|, |w|) is well conditioned near 0 and π and picks the
    // shorter of the two equivalent rotations.
    let angle = 2.0 * q.vector().norm().atan2(q.w.abs());
    MotionNorms {
        translation_m: m.delta.translation.norm(),
        rotation_deg: angle.to_degrees(),
    }
}

/// Axis-aligned box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self {
            min: Vec3::from(min),
            max: Vec3::from(max),
        }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.max[i] > self.min[i])
    }

    /// Boundary inclusive.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] && other.max[i] <= self.max[i])
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }
}

/// Oriented box: `pose` places the box center, `half_extents` are per axis
/// in the box frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub pose: Pose,
    pub half_extents: Vec3,
}

impl Cuboid {
    pub fn new(pose: Pose, half_extents: Vec3) -> Self {
        Self { pose, half_extents }
    }

    pub fn axis_aligned(center: Vec3, half_extents: Vec3) -> Self {
        Self::new(Pose::identity().with_translation(center), half_extents)
    }

    pub fn center(&self) -> Vec3 {
        self.pose.translation
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        point_in_cuboid(p, self)
    }

    /// Same pose, every half extent grown by `pad`.
    pub fn padded(&self, pad: f64) -> Cuboid {
        Cuboid {
            pose: self.pose,
            half_extents: self.half_extents.add_scalar(pad),
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        self.half_extents.norm()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let h = self.half_extents;
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let local = Vec3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            );
            *c = self.pose.transform_point(&local);
        }
        out
    }

    pub fn aabb(&self) -> Aabb {
        let corners = self.corners();
        let mut min = corners[0];
        let mut max = corners[0];
        for c in &corners[1..] {
            min = min.inf(c);
            max = max.sup(c);
        }
        Aabb { min, max }
    }
}

/// Boundary inclusive.
pub fn point_in_cuboid(p: &Vec3, c: &Cuboid) -> bool {
    let local = c.pose.inverse_transform_point(p);
    (0..3).all(|i| local[i].abs() <= c.half_extents[i])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`; `None` for a zero or non-finite direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Option<Self> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return None;
        }
        Some(Self {
            origin,
            direction: direction / n,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Distance along `ray` to the first point of `c`, via the slab method in
/// the cuboid frame. An origin inside the cuboid reports 0.
pub fn ray_cuboid_intersect(ray: &Ray, c: &Cuboid) -> Option<f64> {
    let o = c.pose.inverse_transform_point(&ray.origin);
    let d = c.pose.rotation.inverse() * ray.direction;
    slab_intersect(&o, &d, &c.half_extents)
}

/// Slab test for an axis-aligned box centered at the origin; `o` and `d`
/// are already expressed in the box frame and `d` has unit length.
pub fn slab_intersect(o: &Vec3, d: &Vec3, half_extents: &Vec3) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for i in 0..3 {
        let h = half_extents[i];
        if d[i].abs() < 1e-15 {
            if o[i].abs() > h {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[i];
        let mut t0 = (-h - o[i]) * inv;
        let mut t1 = (h - o[i]) * inv;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    if t_far < 0.0 {
        return None;
    }
    Some(t_near.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn unit_cube() -> Cuboid {
        Cuboid::axis_aligned(Vec3::zeros(), Vec3::repeat(0.5))
    }

    #[test]
    fn compose_identity_and_translations() {
        let id = Pose::identity();
        assert!(compose(&id, &id).max_abs_diff(&id) < 1e-12);
        let c = compose(
            &Pose::from_translation(1.0, 0.0, 0.0),
            &Pose::from_translation(0.0, 2.0, 0.0),
        );
        assert!(c.max_abs_diff(&Pose::from_translation(1.0, 2.0, 0.0)) < 1e-12);
    }

    #[test]
    fn compose_rotation_then_translation() {
        let c = compose(&Pose::rot_z(FRAC_PI_2), &Pose::from_translation(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(c.translation, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        let r = c.rotation_matrix();
        // first column of rotZ(90°) is +y
        assert_abs_diff_eq!(r[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(1, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn relative_cases() {
        let p = Pose::rot_z(0.3).with_translation(Vec3::new(0.2, -1.0, 0.5));
        let n = relative(&p, &p).norms();
        assert!(n.translation_m < 1e-12 && n.rotation_deg < 1e-6);

        let m = relative(&Pose::identity(), &Pose::from_translation(0.1, 0.0, 0.0));
        assert_abs_diff_eq!(m.delta.translation, Vec3::new(0.1, 0.0, 0.0), epsilon = 1e-12);

        let a = Pose::rot_z(FRAC_PI_2).with_translation(Vec3::new(1.0, 0.0, 0.0));
        let b = Pose::rot_z(FRAC_PI_2).with_translation(Vec3::new(1.0, 1.0, 0.0));
        let m = relative(&a, &b);
        // world step +y seen from a frame yawed by 90° is +x
        assert_abs_diff_eq!(m.delta.translation, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert!(compose(&a, &m.delta).max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn norms_examples() {
        let n = RelativeMotion::identity().norms();
        assert_eq!((n.translation_m, n.rotation_deg), (0.0, 0.0));
        let n = RelativeMotion {
            delta: Pose::from_translation(0.003, 0.004, 0.0),
        }
        .norms();
        assert_abs_diff_eq!(n.translation_m, 0.005, epsilon = 1e-15);
        assert_eq!(n.rotation_deg, 0.0);
        let n = RelativeMotion {
            delta: Pose::rot_z(0.5f64.to_radians()),
        }
        .norms();
        assert_abs_diff_eq!(n.rotation_deg, 0.5, epsilon = 1e-9);
        assert_eq!(n.translation_m, 0.0);
    }

    #[test]
    fn rotation_norm_stays_within_half_turn() {
        let n = RelativeMotion {
            delta: Pose::rot_z(270f64.to_radians()),
        }
        .norms();
        assert_abs_diff_eq!(n.rotation_deg, 90.0, epsilon = 1e-9);
    }

    #[test]
    fn point_in_cuboid_cases() {
        let c = unit_cube();
        assert!(point_in_cuboid(&Vec3::zeros(), &c));
        assert!(point_in_cuboid(&Vec3::new(0.5, 0.5, -0.5), &c));
        assert!(!point_in_cuboid(&Vec3::new(0.501, 0.0, 0.0), &c));
    }

    #[test]
    fn rotated_cuboid_membership() {
        let c = Cuboid::new(Pose::rot_z(FRAC_PI_2), Vec3::new(1.0, 0.1, 0.1));
        assert!(c.contains(&Vec3::new(0.0, 0.9, 0.0)));
        assert!(!c.contains(&Vec3::new(0.9, 0.0, 0.0)));
    }

    #[test]
    fn ray_cases() {
        let c = unit_cube();
        let r = Ray::new(Vec3::new(-2.0, 0.0, 0.0), Vec3::x()).unwrap();
        assert_abs_diff_eq!(ray_cuboid_intersect(&r, &c).unwrap(), 1.5, epsilon = 1e-12);
        let away = Ray::new(Vec3::new(-2.0, 0.0, 0.0), -Vec3::x()).unwrap();
        assert_eq!(ray_cuboid_intersect(&away, &c), None);
        let inside = Ray::new(Vec3::new(0.1, 0.0, 0.0), Vec3::y()).unwrap();
        assert_eq!(ray_cuboid_intersect(&inside, &c), Some(0.0));
        let parallel_miss = Ray::new(Vec3::new(-2.0, 0.7, 0.0), Vec3::x()).unwrap();
        assert_eq!(ray_cuboid_intersect(&parallel_miss, &c), None);
    }

    #[test]
    fn ray_rejects_zero_direction() {
        assert!(Ray::new(Vec3::zeros(), Vec3::zeros()).is_none());
        let r = Ray::new(Vec3::zeros(), Vec3::new(0.0, 3.0, 4.0)).unwrap();
        assert_abs_diff_eq!(r.direction().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pose_json_roundtrip_is_exact() {
        let p = Pose::from_axis_angle(&Vec3::new(0.3, -1.0, 2.0), 1.234)
            .with_translation(Vec3::new(0.1, 0.2, 1.0 / 3.0));
        let s = serde_json::to_string(&p).unwrap();
        let back: Pose = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
