//! Synthetic ground-truth world: scripted human and robot, depth rendering,
//! and an occlusion-aware keypoint detector.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::body::{BodyDimensions, BodyGeometry, BodyPose, KeypartId, KeypointId};
use crate::camera::CameraRig;
use crate::geometry::{project_camera, ray_cylinder_intersect, Cylinder, Intrinsics, RigidTransform, Vec2, Vec3};
use crate::image::DepthImage;
use crate::keypoint::{KeypointDetector, KeypointError, Observation2D};
use crate::scenario::{HumanWaypoint, NoiseParams, RobotScript, Scenario, ScenarioError};

/// Independent random stream for one `(seed, frame, camera, purpose)` tuple.
pub fn stream_rng(seed: u64, frame: u64, camera: u64, purpose: u64) -> ChaCha8Rng {
    let mut x = seed;
    for v in [frame, camera, purpose] {
        x = splitmix(x ^ splitmix(v.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    ChaCha8Rng::seed_from_u64(x)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Locates `t` in strictly increasing `times`: `(i, s)` with the value at `t`
/// being `lerp(i, i + 1, s)`; clamps outside the range.
fn segment(times: impl ExactSizeIterator<Item = f64> + Clone, t: f64) -> (usize, f64) {
    let n = times.len();
    let ts: Vec<f64> = times.collect();
    if n == 1 || t <= ts[0] {
        return (0, 0.0);
    }
    if t >= ts[n - 1] {
        return (n - 2, 1.0);
    }
    let i = ts.windows(2).position(|w| t < w[1]).unwrap();
    (i, (t - ts[i]) / (ts[i + 1] - ts[i]))
}

/// Piecewise-linear interpolation of the human waypoints.
pub fn human_pose_at(waypoints: &[HumanWaypoint], t: f64) -> BodyPose {
    if waypoints.len() == 1 {
        return waypoints[0].pose;
    }
    let (i, s) = segment(waypoints.iter().map(|w| w.time), t);
    waypoints[i].pose.lerp(&waypoints[i + 1].pose, s)
}

/// Robot link cylinders at time `t`; zero-length links are dropped.
pub fn robot_links_at(script: &RobotScript, t: f64) -> Vec<Cylinder> {
    let kfs = &script.keyframes;
    if kfs.is_empty() {
        return Vec::new();
    }
    let joints: Vec<Vec3> = if kfs.len() == 1 {
        kfs[0].joints.clone()
    } else {
        let (i, s) = segment(kfs.iter().map(|k| k.time), t);
        kfs[i].joints.iter().zip(&kfs[i + 1].joints).map(|(a, b)| a + (b - a) * s).collect()
    };
    joints
        .windows(2)
        .zip(&script.radii)
        .filter_map(|(j, r)| Cylinder::from_endpoints(j[0], j[1], *r).ok())
        .collect()
}

/// Ground truth at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSnapshot {
    pub time: f64,
    pub pose: BodyPose,
    pub human: BodyGeometry,
    pub robot: Vec<Cylinder>,
}

impl WorldSnapshot {
    pub fn at(human: &[HumanWaypoint], robot: &RobotScript, dims: &BodyDimensions, time: f64) -> Self {
        let pose = human_pose_at(human, time);
        Self { time, pose, human: dims.geometry(&pose), robot: robot_links_at(robot, time) }
    }

    /// Every cylinder in the scene, tagged with its keypart (robot links untagged).
    pub fn cylinders(&self) -> impl Iterator<Item = (Option<KeypartId>, &Cylinder)> {
        self.human.cylinders().map(|(p, c)| (Some(p), c)).chain(self.robot.iter().map(|c| (None, c)))
    }
}

/// Simulated world: time plus the camera rigs it steps.
#[derive(Debug, Clone)]
pub struct Scene {
    human: Vec<HumanWaypoint>,
    robot: RobotScript,
    dims: BodyDimensions,
    pub rigs: Vec<CameraRig>,
    time: f64,
}

impl Scene {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        Ok(Self {
            human: scenario.human.clone(),
            robot: scenario.robot.clone(),
            dims: scenario.dims,
            rigs: scenario.rigs()?,
            time: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn robot_script(&self) -> &RobotScript {
        &self.robot
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot::at(&self.human, &self.robot, &self.dims, self.time)
    }

    /// Advances time and moves every rig toward its command within its rate limit.
    pub fn step(&mut self, dt: f64) {
        debug_assert!(dt > 0.0);
        self.time += dt;
        for rig in &mut self.rigs {
            rig.advance(dt);
        }
    }
}

/// Camera-frame ray through a pixel center, unit length.
fn pixel_ray(k: &Intrinsics, u: f64, v: f64) -> Vec3 {
    k.ray(&Vec2::new(u, v)).normalize()
}

/// Conservative pixel bounding box of a cylinder in camera coordinates, or the
/// whole image when it reaches the camera plane.
fn screen_bounds(cyl: &Cylinder, k: &Intrinsics) -> Option<(u32, u32, u32, u32)> {
    let (w, h) = (k.width(), k.height());
    let c = cyl.center();
    let r = cyl.bounding_radius();
    if c.z + r <= 0.0 {
        return None;
    }
    if c.z - r <= 1e-3 {
        return Some((0, 0, w - 1, h - 1));
    }
    let (z0, z1) = (c.z - r, c.z + r);
    let range = |lo: f64, hi: f64| {
        let a = [lo / z0, lo / z1, hi / z0, hi / z1];
        (a.iter().cloned().fold(f64::INFINITY, f64::min), a.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    };
    let (x0, x1) = range(c.x - r, c.x + r);
    let (y0, y1) = range(c.y - r, c.y + r);
    let u0 = crate::math::floor(k.fx() * x0 + k.cx()).max(0.0);
    let u1 = crate::math::ceil(k.fx() * x1 + k.cx()).min(w as f64 - 1.0);
    let v0 = crate::math::floor(k.fy() * y0 + k.cy()).max(0.0);
    let v1 = crate::math::ceil(k.fy() * y1 + k.cy()).min(h as f64 - 1.0);
    (u0 <= u1 && v0 <= v1).then_some((u0 as u32, v0 as u32, u1 as u32, v1 as u32))
}

/// Noiseless depth image: camera-frame `z` of the nearest cylinder hit per
/// pixel center; misses and hits beyond `max_range` read 0.
pub fn render_depth<'a>(
    camera_to_world: &RigidTransform,
    k: &Intrinsics,
    cylinders: impl IntoIterator<Item = &'a Cylinder>,
    max_range: f64,
) -> DepthImage {
    let to_camera = camera_to_world.inverse();
    let (w, h) = (k.width(), k.height());
    let mut best = DepthImage::filled(w, h, f64::INFINITY);
    for cyl in cylinders {
        let local = cyl.transformed(&to_camera);
        let Some((u0, v0, u1, v1)) = screen_bounds(&local, k) else { continue };
        for v in v0..=v1 {
            for u in u0..=u1 {
                let dir = pixel_ray(k, u as f64, v as f64);
                if let Some(t) = ray_cylinder_intersect(&Vec3::zeros(), &dir, &local) {
                    let z = t * dir.z;
                    let cell = best.get_mut(u, v).unwrap();
                    if z < *cell {
                        *cell = z;
                    }
                }
            }
        }
    }
    for d in best.data_mut() {
        if !d.is_finite() || *d > max_range {
            *d = 0.0;
        }
    }
    best
}

/// Additive Gaussian depth noise and random dropout on valid pixels.
pub fn corrupt_depth(depth: &mut DepthImage, sigma: f64, dropout: f64, rng: &mut impl Rng) {
    let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).unwrap());
    for d in depth.data_mut() {
        if *d <= 0.0 {
            continue;
        }
        if dropout > 0.0 && rng.random_bool(dropout) {
            *d = 0.0;
            continue;
        }
        if let Some(n) = &normal {
            *d = (*d + n.sample(rng)).max(1e-3);
        }
    }
}

/// Rendered depth for one rig, with the scenario's sensor noise when `rng` is given.
pub fn render_rig(rig: &CameraRig, world: &WorldSnapshot, noise: &NoiseParams, rng: Option<&mut ChaCha8Rng>) -> DepthImage {
    let pose = rig.world_pose();
    let mut depth = render_depth(&pose, &rig.intrinsics, world.cylinders().map(|(_, c)| c), noise.max_range);
    if let Some(rng) = rng {
        corrupt_depth(&mut depth, noise.depth_sigma, noise.dropout, rng);
    }
    depth
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Visible,
    /// Line of sight blocked by another body part or a robot link.
    Occluded,
    /// Behind the camera, outside the image, or beyond sensor range.
    Outside,
}

/// Visibility and exact projection of one ground-truth keypoint.
pub fn keypoint_visibility(
    keypoint: KeypointId,
    world: &WorldSnapshot,
    camera_to_world: &RigidTransform,
    k: &Intrinsics,
    max_range: f64,
) -> (Visibility, Option<Vec2>) {
    let p = world.human.keypoints[keypoint.index()];
    let cam = camera_to_world.inverse().apply(&p);
    let Ok((pixel, z)) = project_camera(&cam, k) else { return (Visibility::Outside, None) };
    if !k.contains(&pixel) || z > max_range {
        return (Visibility::Outside, Some(pixel));
    }
    let origin = *camera_to_world.translation();
    let to = p - origin;
    let dist = to.norm();
    let dir = to / dist;
    let own: Vec<KeypartId> = keypoint.parts().collect();
    let blocked = world.cylinders().any(|(part, cyl)| {
        if part.is_some_and(|p| own.contains(&p)) {
            return false;
        }
        ray_cylinder_intersect(&origin, &dir, cyl).is_some_and(|t| t < dist - 1e-9)
    });
    (if blocked { Visibility::Occluded } else { Visibility::Visible }, Some(pixel))
}

fn clamp_to_image(p: Vec2, k: &Intrinsics) -> Vec2 {
    Vec2::new(p.x.clamp(0.0, k.width() as f64 - 1.0), p.y.clamp(0.0, k.height() as f64 - 1.0))
}

/// Per-keypoint synthetic detection: projected pixel plus Gaussian pixel
/// noise, confidence from visibility.
pub fn synthetic_detect(
    camera: usize,
    camera_to_world: &RigidTransform,
    k: &Intrinsics,
    world: &WorldSnapshot,
    noise: &NoiseParams,
    rng: &mut impl Rng,
) -> Vec<Observation2D> {
    let px = (noise.pixel_sigma > 0.0).then(|| Normal::new(0.0, noise.pixel_sigma).unwrap());
    KeypointId::all()
        .map(|kp| {
            let (vis, pixel) = keypoint_visibility(kp, world, camera_to_world, k, noise.max_range);
            let confidence = match vis {
                Visibility::Visible => noise.conf_visible,
                Visibility::Occluded => noise.conf_visible * noise.conf_occluded,
                Visibility::Outside => noise.conf_outside,
            };
            let mut pixel = pixel.unwrap_or(Vec2::new(k.cx(), k.cy()));
            if let Some(n) = &px {
                pixel += Vec2::new(n.sample(rng), n.sample(rng));
            }
            Observation2D { keypoint: kp, pixel: clamp_to_image(pixel, k), confidence, camera, timestamp: world.time }
        })
        .collect()
}

/// Synthetic detector implementing the keypoint-detector contract. The
/// pose and intrinsics of the camera it models are updated before each frame.
#[derive(Debug, Clone)]
pub struct SyntheticDetector {
    pub noise: NoiseParams,
    pub rng: ChaCha8Rng,
    pub camera_to_world: RigidTransform,
    pub intrinsics: Intrinsics,
}

impl KeypointDetector for SyntheticDetector {
    type Input = WorldSnapshot;

    fn detect(&mut self, world: &WorldSnapshot, camera: usize, _timestamp: f64) -> Result<Vec<Observation2D>, KeypointError> {
        Ok(synthetic_detect(camera, &self.camera_to_world, &self.intrinsics, world, &self.noise, &mut self.rng))
    }
}
