//! Pan-tilt RGB-D camera rigs.

use crate::geometry::{rot_x, rot_y, Intrinsics, RigidTransform, Vec3};
use crate::math;

/// Closed angular interval in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleLimits {
    pub min: f64,
    pub max: f64,
}

impl AngleLimits {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.min, self.max)
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min && angle <= self.max
    }
}

/// A camera on a two-servo pan-tilt head.
///
/// The world pose is `mount ∘ Ry(pan) ∘ Rx(tilt)`: pan turns about the mount's
/// (downward) y axis, tilt about the panned x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    pub id: usize,
    pub intrinsics: Intrinsics,
    pub mount: RigidTransform,
    pub pan_limits: AngleLimits,
    pub tilt_limits: AngleLimits,
    /// Per-axis servo rate limit, rad/s.
    pub max_rate: f64,
    /// Fixed rigs ignore commands.
    pub active: bool,
    pan: f64,
    tilt: f64,
    command: (f64, f64),
}

impl CameraRig {
    pub fn new(
        id: usize,
        intrinsics: Intrinsics,
        mount: RigidTransform,
        pan_limits: AngleLimits,
        tilt_limits: AngleLimits,
        max_rate: f64,
        active: bool,
    ) -> Self {
        Self { id, intrinsics, mount, pan_limits, tilt_limits, max_rate, active, pan: 0.0, tilt: 0.0, command: (0.0, 0.0) }
            .with_angles(0.0, 0.0)
    }

    /// Places the head at `(pan, tilt)` (clamped to the limits) and commands it to stay there.
    pub fn with_angles(mut self, pan: f64, tilt: f64) -> Self {
        self.pan = self.pan_limits.clamp(pan);
        self.tilt = self.tilt_limits.clamp(tilt);
        self.command = (self.pan, self.tilt);
        self
    }

    pub fn pan(&self) -> f64 {
        self.pan
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    pub fn command(&self) -> (f64, f64) {
        self.command
    }

    /// Camera → world transform for the given head angles.
    pub fn pose_at(&self, pan: f64, tilt: f64) -> RigidTransform {
        self.mount.compose(&RigidTransform::from_parts(rot_y(pan) * rot_x(tilt), nalgebra::Vector3::zeros()))
    }

    /// Current camera → world transform.
    pub fn world_pose(&self) -> RigidTransform {
        self.pose_at(self.pan, self.tilt)
    }

    /// Head angles (clamped to the limits) that center `point` in the image
    /// as nearly as the limits allow.
    pub fn aim_at(&self, point: &Vec3) -> (f64, f64) {
        let v = self.mount.inverse().apply(point);
        let pan = math::atan2(v.x, v.z);
        let tilt = math::atan2(-v.y, math::sqrt(v.x * v.x + v.z * v.z));
        (self.pan_limits.clamp(pan), self.tilt_limits.clamp(tilt))
    }

    /// Sets the target angles; ignored by fixed rigs.
    pub fn set_command(&mut self, pan: f64, tilt: f64) {
        if self.active {
            self.command = (self.pan_limits.clamp(pan), self.tilt_limits.clamp(tilt));
        }
    }

    /// Moves toward the commanded angles by at most `max_rate · dt` per axis.
    pub fn advance(&mut self, dt: f64) {
        let step = self.max_rate * dt;
        self.pan = approach(self.pan, self.command.0, step);
        self.tilt = approach(self.tilt, self.command.1, step);
    }
}

/// Moves `from` toward `to` by at most `step`.
pub fn approach(from: f64, to: f64, step: f64) -> f64 {
    from + (to - from).clamp(-step, step)
}
