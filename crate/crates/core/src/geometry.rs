//! Pinhole cameras, rigid transforms, and cylinder primitives.
//!
//! Conventions: angles in radians, lengths in meters. Camera frames are
//! x right, y down, z forward; pixel origin is the top-left corner and a pixel
//! index `(u, v)` refers to the pixel center.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::math;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid depth {0}")]
    InvalidDepth(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("rotation is not orthonormal with determinant +1")]
    NonOrthonormal,
    #[error("degenerate cylinder: {0}")]
    DegenerateCylinder(&'static str),
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fx.is_finite()) || !(fy > 0.0 && fy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidIntrinsics("image size must be non-zero"));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(GeometryError::InvalidIntrinsics("principal point outside the image"));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Square-pixel camera with the principal point at the image center.
    pub fn centered(focal: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        Self::new(focal, focal, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0, width, height)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }

    /// The single focal length used for silhouette widths (`fx` by convention).
    pub fn focal(&self) -> f64 {
        self.fx
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Whether a (continuous) pixel coordinate lies on the image.
    pub fn contains(&self, pixel: &Vec2) -> bool {
        pixel.x >= -0.5 && pixel.y >= -0.5 && pixel.x < self.width as f64 - 0.5 && pixel.y < self.height as f64 - 0.5
    }

    /// Unnormalized camera-frame ray `K⁻¹ (u, v, 1)`.
    pub fn ray(&self, pixel: &Vec2) -> Vec3 {
        Vec3::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy, 1.0)
    }
}

/// Proper rigid motion `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Mat3,
    translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        if !is_rotation(&rotation, 1e-9) {
            return Err(GeometryError::NonOrthonormal);
        }
        Ok(Self { rotation, translation })
    }

    /// Builds a transform from a rotation that is orthonormal up to rounding,
    /// re-orthonormalizing it first.
    pub fn from_parts(rotation: Mat3, translation: Vec3) -> Self {
        Self { rotation: orthonormalize(&rotation), translation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self { rotation: Mat3::identity(), translation }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Camera pose (camera → world) at `eye` looking at `target`, with the image
    /// "up" direction as close to `up` as possible.
    pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Result<Self, GeometryError> {
        let forward = target - eye;
        let norm = forward.norm();
        if norm < 1e-12 {
            return Err(GeometryError::InvalidIntrinsics("eye and target coincide"));
        }
        let z = forward / norm;
        let right = z.cross(up);
        if right.norm() < 1e-9 {
            return Err(GeometryError::InvalidIntrinsics("view direction parallel to up"));
        }
        let x = right.normalize();
        let y = z.cross(&x);
        Ok(Self { rotation: Mat3::from_columns(&[x, y, z]), translation: *eye })
    }
}

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = (math::sin(angle), math::cos(angle));
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = (math::sin(angle), math::cos(angle));
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = (math::sin(angle), math::cos(angle));
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub fn rot_axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let k = axis.normalize();
    let kx = Mat3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Mat3::identity() + kx * math::sin(angle) + kx * kx * (1.0 - math::cos(angle))
}

/// Angle of a rotation matrix, in `[0, π]`.
pub fn rotation_angle(r: &Mat3) -> f64 {
    math::acos((r.trace() - 1.0) / 2.0)
}

/// Angle between two non-zero vectors, in `[0, π]`.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let cross = a.cross(b).norm();
    math::atan2(cross, a.dot(b))
}

pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    let err = (r.transpose() * r - Mat3::identity()).abs().max();
    err <= tol && math::abs(r.determinant() - 1.0) <= tol
}

/// Nearest rotation in the Frobenius sense.
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// Any unit vector perpendicular to `v`.
pub fn any_perpendicular(v: &Vec3) -> Vec3 {
    let helper = if math::abs(v.x) < 0.9 { Vec3::x() } else { Vec3::y() };
    v.cross(&helper).normalize()
}

/// Finite right circular cylinder: disc of `radius` at `base`, extruded `height` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    base: Vec3,
    axis: Vec3,
    height: f64,
    radius: f64,
}

impl Cylinder {
    /// `axis` is normalized; it must be non-zero.
    pub fn new(base: Vec3, axis: Vec3, height: f64, radius: f64) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(GeometryError::DegenerateCylinder("zero axis"));
        }
        if !(height > 0.0) || !(radius > 0.0) {
            return Err(GeometryError::DegenerateCylinder("height and radius must be positive"));
        }
        Ok(Self { base, axis: axis / n, height, radius })
    }

    pub fn from_endpoints(a: Vec3, b: Vec3, radius: f64) -> Result<Self, GeometryError> {
        let d = b - a;
        Self::new(a, d, d.norm(), radius)
    }

    pub fn base(&self) -> Vec3 {
        self.base
    }
    pub fn axis(&self) -> Vec3 {
        self.axis
    }
    pub fn height(&self) -> f64 {
        self.height
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn top(&self) -> Vec3 {
        self.base + self.axis * self.height
    }
    pub fn center(&self) -> Vec3 {
        self.base + self.axis * (self.height / 2.0)
    }

    pub fn with_base(&self, base: Vec3) -> Self {
        Self { base, ..*self }
    }

    pub fn with_axis(&self, axis: Vec3) -> Self {
        Self { axis: axis.normalize(), ..*self }
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self { base: t.apply(&self.base), axis: t.apply_vector(&self.axis).normalize(), ..*self }
    }

    /// Distance from `p` to the infinite axis line.
    pub fn distance_to_axis(&self, p: &Vec3) -> f64 {
        let w = p - self.base;
        (w - self.axis * w.dot(&self.axis)).norm()
    }

    /// Containment with the radius scaled by `radius_scale` and each cap pushed
    /// out by the extra radial margin.
    pub fn contains_inflated(&self, p: &Vec3, radius_scale: f64) -> bool {
        let margin = self.radius * (radius_scale - 1.0).max(0.0);
        let w = p - self.base;
        let s = w.dot(&self.axis);
        if s < -margin || s > self.height + margin {
            return false;
        }
        (w - self.axis * s).norm_squared() <= { let r = self.radius * radius_scale; r * r }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.contains_inflated(p, 1.0)
    }

    /// Radius of the sphere about `center()` enclosing the cylinder.
    pub fn bounding_radius(&self) -> f64 {
        math::sqrt(self.height * self.height / 4.0 + self.radius * self.radius)
    }
}

/// Projects a world point through a camera whose pose is `camera_to_world`.
pub fn project(point_world: &Vec3, camera_to_world: &RigidTransform, k: &Intrinsics) -> Result<(Vec2, f64), GeometryError> {
    let p = camera_to_world.inverse().apply(point_world);
    project_camera(&p, k)
}

/// Projects a camera-frame point: pixel `(fx x/z + cx, fy y/z + cy)` and depth `z`.
pub fn project_camera(p: &Vec3, k: &Intrinsics) -> Result<(Vec2, f64), GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::BehindCamera(p.z));
    }
    Ok((Vec2::new(k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy), p.z))
}

/// Lifts a pixel at camera-frame depth `depth` to `depth · K⁻¹ (u, v, 1)ᵀ`.
pub fn reproject(pixel: &Vec2, depth: f64, k: &Intrinsics) -> Result<Vec3, GeometryError> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(GeometryError::InvalidDepth(depth));
    }
    Ok(k.ray(pixel) * depth)
}

/// Smallest positive distance along the unit ray `origin + t·dir` at which it
/// meets the cylinder's lateral surface or either cap.
pub fn ray_cylinder_intersect(origin: &Vec3, dir: &Vec3, cyl: &Cylinder) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let w = origin - cyl.base;
    let a = dir.dot(&cyl.axis);
    let b = w.dot(&cyl.axis);
    let d_perp = dir - cyl.axis * a;
    let w_perp = w - cyl.axis * b;
    let r2 = cyl.radius * cyl.radius;
    let mut best = f64::INFINITY;

    let qa = d_perp.norm_squared();
    if qa > EPS {
        let qb = w_perp.dot(&d_perp);
        let qc = w_perp.norm_squared() - r2;
        let disc = qb * qb - qa * qc;
        if disc >= 0.0 {
            let root = math::sqrt(disc);
            for t in [(-qb - root) / qa, (-qb + root) / qa] {
                if t > EPS && t < best {
                    let s = b + t * a;
                    if (0.0..=cyl.height).contains(&s) {
                        best = t;
                    }
                }
            }
        }
    }
    if math::abs(a) > EPS {
        for cap in [0.0, cyl.height] {
            let t = (cap - b) / a;
            if t > EPS && t < best && (w_perp + d_perp * t).norm_squared() <= r2 {
                best = t;
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Closest distance between segments `[p0, p1]` and `[q0, q1]`.
pub fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-15 && e <= 1e-15 {
        return r.norm();
    }
    if a <= 1e-15 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-15 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-15 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Surface clearance between two cylinders, approximated by their capsules; 0 when they overlap.
pub fn cylinder_clearance(a: &Cylinder, b: &Cylinder) -> f64 {
    let d = segment_distance(&a.base, &a.top(), &b.base, &b.top());
    (d - a.radius - b.radius).max(0.0)
}
