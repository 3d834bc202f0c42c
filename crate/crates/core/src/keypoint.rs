//! Per-camera keypoint observations, sliding-window presence, depth lifting,
//! and confidence-weighted multi-camera fusion.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::body::KeypointId;
use crate::geometry::{reproject, GeometryError, Intrinsics, RigidTransform, Vec2, Vec3};
use crate::image::{DepthImage, Grid};
use crate::math;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KeypointError {
    #[error("detector failure: {0}")]
    DetectorFailure(&'static str),
    #[error("no valid depth within the slice radius")]
    NoValidDepth,
    #[error("fusion needs at least one camera")]
    EmptyInput,
    #[error("invalid window parameters: {0}")]
    InvalidWindow(&'static str),
    #[error("invalid heatmap: {0}")]
    InvalidHeatmap(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Detector output for one keypoint in one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation2D {
    pub keypoint: KeypointId,
    /// Image coordinates in pixels.
    pub pixel: Vec2,
    pub confidence: f64,
    pub camera: usize,
    pub timestamp: f64,
}

/// Confidence map for one keypoint at detector resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    keypoint: KeypointId,
    values: Grid<f64>,
}

impl Heatmap {
    pub fn new(keypoint: KeypointId, values: Grid<f64>) -> Result<Self, KeypointError> {
        if values.is_empty() {
            return Err(KeypointError::InvalidHeatmap("empty grid"));
        }
        if values.data().iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(KeypointError::InvalidHeatmap("values must lie in (0, 1)"));
        }
        Ok(Self { keypoint, values })
    }

    pub fn keypoint(&self) -> KeypointId {
        self.keypoint
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    /// Location and value of the maximum; ties go to the lowest `(v, u)`.
    pub fn peak(&self) -> (u32, u32, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (u, v, &x) in self.values.iter() {
            if x > best.2 {
                best = (u, v, x);
            }
        }
        best
    }

    /// Peak location scaled to an image of `width × height` pixels.
    pub fn observe(&self, width: u32, height: u32, camera: usize, timestamp: f64) -> Observation2D {
        let (u, v, c) = self.peak();
        let sx = width as f64 / self.values.width() as f64;
        let sy = height as f64 / self.values.height() as f64;
        Observation2D { keypoint: self.keypoint, pixel: Vec2::new(u as f64 * sx, v as f64 * sy), confidence: c, camera, timestamp }
    }
}

/// Keypoint detector contract: one observation per keypoint, in keypoint order.
pub trait KeypointDetector {
    type Input: ?Sized;

    fn detect(&mut self, input: &Self::Input, camera: usize, timestamp: f64) -> Result<Vec<Observation2D>, KeypointError>;
}

/// Detector backed by precomputed heatmaps, e.g. from an external network.
#[derive(Debug, Clone, Copy)]
pub struct HeatmapDetector {
    pub image_width: u32,
    pub image_height: u32,
}

impl KeypointDetector for HeatmapDetector {
    type Input = [Heatmap];

    fn detect(&mut self, input: &[Heatmap], camera: usize, timestamp: f64) -> Result<Vec<Observation2D>, KeypointError> {
        if input.len() != KeypointId::COUNT {
            return Err(KeypointError::DetectorFailure("expected one heatmap per keypoint"));
        }
        Ok(input.iter().map(|h| h.observe(self.image_width, self.image_height, camera, timestamp)).collect())
    }
}

/// Discounted sliding-window parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    /// Window length `M`; the buffer holds `M + 1` samples.
    pub length: usize,
    /// Forgetting factor in (0, 1).
    pub gamma: f64,
    /// Threshold in (0, M).
    pub alpha: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self { length: 5, gamma: 0.7, alpha: 1.0 }
    }
}

impl WindowParams {
    pub fn validate(&self) -> Result<(), KeypointError> {
        if self.length == 0 {
            return Err(KeypointError::InvalidWindow("length must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(KeypointError::InvalidWindow("gamma must lie in (0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < self.length as f64) {
            return Err(KeypointError::InvalidWindow("alpha must lie in (0, length)"));
        }
        Ok(())
    }

    /// `Σ γᵐ c_m` over newest-first confidences; entries past the window are ignored.
    pub fn score(&self, newest_first: impl IntoIterator<Item = f64>) -> f64 {
        let mut weight = 1.0;
        let mut sum = 0.0;
        for c in newest_first.into_iter().take(self.length + 1) {
            sum += weight * c;
            weight *= self.gamma;
        }
        sum
    }

    /// Presence flag: strictly above threshold counts as present.
    pub fn decide(&self, score: f64) -> bool {
        score > self.alpha
    }
}

/// Ring buffer of the last `M + 1` confidences; missing history counts as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceWindow {
    params: WindowParams,
    history: VecDeque<f64>,
}

impl PresenceWindow {
    pub fn new(params: WindowParams) -> Self {
        Self { params, history: VecDeque::with_capacity(params.length + 1) }
    }

    pub fn params(&self) -> &WindowParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, confidence: f64) {
        if self.history.len() == self.params.length + 1 {
            self.history.pop_back();
        }
        self.history.push_front(confidence);
    }

    pub fn score(&self) -> f64 {
        self.params.score(self.history.iter().copied())
    }

    pub fn present(&self) -> bool {
        self.params.decide(self.score())
    }
}

/// Mean valid depth over integer pixel centers strictly within `radius` of `pixel`.
pub fn depth_slice(pixel: &Vec2, depth: &DepthImage, radius: f64) -> Option<f64> {
    let (w, h) = (depth.width() as i64, depth.height() as i64);
    let u0 = (math::floor(pixel.x - radius) as i64).max(0);
    let u1 = (math::ceil(pixel.x + radius) as i64).min(w - 1);
    let v0 = (math::floor(pixel.y - radius) as i64).max(0);
    let v1 = (math::ceil(pixel.y + radius) as i64).min(h - 1);
    let r2 = radius * radius;
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in v0..=v1 {
        for u in u0..=u1 {
            let (du, dv) = (u as f64 - pixel.x, v as f64 - pixel.y);
            if du * du + dv * dv >= r2 {
                continue;
            }
            if let Some(d) = depth.depth(u as u32, v as u32) {
                sum += d;
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Camera-frame position of an observation from its depth slice.
pub fn lift_depth(obs: &Observation2D, depth: &DepthImage, radius: f64, k: &Intrinsics) -> Result<Vec3, KeypointError> {
    let d = depth_slice(&obs.pixel, depth, radius).ok_or(KeypointError::NoValidDepth)?;
    Ok(reproject(&obs.pixel, d, k)?)
}

/// One camera's contribution to a fused keypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraEstimate {
    pub position_camera: Vec3,
    pub confidence: f64,
    pub camera_to_world: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedKeypoint {
    pub position_world: Vec3,
    pub confidence: f64,
    pub cameras: usize,
}

/// `(1 − e^{−n}) / (1 + e^{−n})`.
pub fn effectiveness(n: usize) -> f64 {
    let e = math::exp(-(n as f64));
    (1.0 - e) / (1.0 + e)
}

/// Confidence-weighted mean of the world-frame positions, the closed-form
/// minimizer of `Σ cᵢ ‖p − Tᵢ qᵢ‖²`.
pub fn fuse(estimates: &[CameraEstimate]) -> Result<FusedKeypoint, KeypointError> {
    if estimates.is_empty() {
        return Err(KeypointError::EmptyInput);
    }
    let mut weighted = Vec3::zeros();
    let mut total = 0.0;
    for e in estimates {
        weighted += e.camera_to_world.apply(&e.position_camera) * e.confidence;
        total += e.confidence;
    }
    let n = estimates.len();
    Ok(FusedKeypoint {
        position_world: weighted / total,
        confidence: effectiveness(n) * total / n as f64,
        cameras: n,
    })
}

/// The fusion objective `Σ cᵢ ‖p − Tᵢ qᵢ‖²`.
pub fn fusion_objective(estimates: &[CameraEstimate], p: &Vec3) -> f64 {
    estimates.iter().map(|e| e.confidence * (p - e.camera_to_world.apply(&e.position_camera)).norm_squared()).sum()
}
