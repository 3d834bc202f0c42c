//! Declarative trial description and the three built-in templates.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::body::{BodyDimensions, BodyPose, KeypartId};
use crate::camera::{AngleLimits, CameraRig};
use crate::geometry::{Intrinsics, RigidTransform, Vec3};
use crate::keypart::ExtractionParams;
use crate::keypoint::WindowParams;
use crate::registration::IcpParams;
use crate::math;

/// A camera mount and its pan-tilt head.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraSpec {
    /// Mount position; the head at zero pan/tilt looks at `target`.
    pub eye: Vec3,
    pub target: Vec3,
    /// Focal length in pixels (square pixels).
    pub focal: f64,
    pub width: u32,
    pub height: u32,
    pub pan_limits: AngleLimits,
    pub tilt_limits: AngleLimits,
    /// rad/s per axis.
    pub max_rate: f64,
    pub active: bool,
}

impl CameraSpec {
    pub fn rig(&self, id: usize) -> Result<CameraRig, ScenarioError> {
        let k = Intrinsics::centered(self.focal, self.width, self.height).map_err(|_| ScenarioError::new("camera", "invalid intrinsics"))?;
        let mount = RigidTransform::look_at(&self.eye, &self.target, &Vec3::z())
            .map_err(|_| ScenarioError::new("camera", "eye and target must differ and not look straight up or down"))?;
        Ok(CameraRig::new(id, k, mount, self.pan_limits, self.tilt_limits, self.max_rate, self.active))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanWaypoint {
    pub time: f64,
    pub pose: BodyPose,
}

/// Robot arm as a polyline of joints; link `i` joins joints `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotKeyframe {
    pub time: f64,
    pub joints: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RobotScript {
    pub radii: Vec<f64>,
    pub keyframes: Vec<RobotKeyframe>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Additive depth noise std dev, m.
    pub depth_sigma: f64,
    /// Per-pixel probability of an invalid depth reading.
    pub dropout: f64,
    /// Detector pixel noise std dev, px.
    pub pixel_sigma: f64,
    /// Confidence of a clearly visible keypoint.
    pub conf_visible: f64,
    /// Factor applied to `conf_visible` when the keypoint is occluded.
    pub conf_occluded: f64,
    /// Confidence of a keypoint outside the image or sensor range.
    pub conf_outside: f64,
    /// Sensor range, m.
    pub max_range: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            depth_sigma: 0.005,
            dropout: 0.02,
            pixel_sigma: 2.0,
            conf_visible: 0.9,
            conf_occluded: 0.15,
            conf_outside: 0.05,
            max_range: 5.0,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self { depth_sigma: 0.0, dropout: 0.0, pixel_sigma: 0.0, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerParams {
    /// Horizon `M`; the objective sums intervals `0..=M`.
    pub horizon: usize,
    pub gamma: f64,
    pub pan_cells: usize,
    pub tilt_cells: usize,
    /// Positional uncertainty growth while unobserved, m/s.
    pub sigma_growth: f64,
    /// Uncertainty right after an observation, m.
    pub sigma_reset: f64,
    /// Uncertainty of a part never observed, m.
    pub sigma_unknown: f64,
    /// Longest time an unseen part is carried along the body velocity, s.
    pub extrapolation_limit: f64,
    /// Largest candidate-sequence space searched exhaustively.
    pub exhaustive_limit: usize,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            horizon: 3,
            gamma: 0.9,
            pan_cells: 7,
            tilt_cells: 5,
            sigma_growth: 0.1,
            sigma_reset: 0.02,
            sigma_unknown: 1.0,
            extrapolation_limit: 2.0,
            exhaustive_limit: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    /// Depth-slice radius, px.
    pub slice_radius: f64,
    /// Trapezoid width inflation.
    pub inflation: f64,
    pub extraction: ExtractionParams,
    pub icp: IcpParams,
    /// Merged clouds larger than this are thinned by an even stride before
    /// registration; 0 keeps every point.
    pub max_part_points: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            slice_radius: 5.0,
            inflation: 1.2,
            extraction: ExtractionParams::default(),
            icp: IcpParams { model_spacing: 0.015, grid_cell: 0.04, ..IcpParams::default() },
            max_part_points: 300,
        }
    }
}

/// Axis-aligned monitored region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub min: Vec3,
    pub max: Vec3,
}

impl Workspace {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub frame_rate: f64,
    pub cameras: Vec<CameraSpec>,
    pub human: Vec<HumanWaypoint>,
    pub robot: RobotScript,
    pub noise: NoiseParams,
    pub keypoint_window: WindowParams,
    pub part_window: WindowParams,
    pub dims: BodyDimensions,
    pub pipeline: PipelineParams,
    pub scheduler: SchedulerParams,
    pub workspace: Workspace,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ScenarioError {
    pub field: String,
    pub message: String,
}

impl ScenarioError {
    pub fn new(field: &str, message: &str) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

fn check(ok: bool, field: &str, message: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::new(field, message))
    }
}

fn finite(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Scenario {
    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// Number of frames in `[0, duration)`.
    pub fn frame_count(&self) -> usize {
        let n = self.duration * self.frame_rate;
        let r = crate::math::floor(n + 1e-9);
        if r <= 0.0 {
            0
        } else {
            r as usize
        }
    }

    pub fn rigs(&self) -> Result<Vec<CameraRig>, ScenarioError> {
        self.cameras.iter().enumerate().map(|(i, c)| c.rig(i)).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        check(self.duration >= 0.0 && self.duration.is_finite(), "duration", "must be a finite non-negative number of seconds")?;
        check(self.frame_rate > 0.0 && self.frame_rate.is_finite(), "frame_rate", "must be positive")?;
        check(!self.cameras.is_empty(), "camera", "at least one camera is required")?;
        for c in &self.cameras {
            check(finite(&c.eye) && finite(&c.target), "camera", "positions must be finite")?;
            check(c.focal > 0.0 && c.width > 0 && c.height > 0, "camera", "focal length and image size must be positive")?;
            check(c.pan_limits.min <= 0.0 && c.pan_limits.max >= 0.0, "camera.pan", "limits must contain 0")?;
            check(c.tilt_limits.min <= 0.0 && c.tilt_limits.max >= 0.0, "camera.tilt", "limits must contain 0")?;
            check(c.max_rate > 0.0, "camera.rate", "must be positive")?;
            c.rig(0)?;
        }
        check(!self.human.is_empty(), "waypoint", "at least one human waypoint is required")?;
        check(self.human.windows(2).all(|w| w[1].time > w[0].time), "waypoint", "times must increase strictly")?;
        for w in &self.human {
            check(finite(&w.pose.torso_position), "waypoint", "position must be finite")?;
        }
        check(self.robot.keyframes.windows(2).all(|w| w[1].time > w[0].time), "robot.keyframe", "times must increase strictly")?;
        for kf in &self.robot.keyframes {
            check(kf.joints.len() == self.robot.radii.len() + 1, "robot.keyframe", "needs one more joint than link radii")?;
            check(kf.joints.iter().all(finite), "robot.keyframe", "joints must be finite")?;
        }
        check(self.robot.radii.iter().all(|r| *r > 0.0), "robot.radii", "must be positive")?;
        let n = &self.noise;
        check(n.depth_sigma >= 0.0 && n.pixel_sigma >= 0.0, "noise", "std devs must be non-negative")?;
        check((0.0..1.0).contains(&n.dropout), "noise.dropout", "must lie in [0, 1)")?;
        check(n.conf_visible > 0.0 && n.conf_visible < 1.0, "noise.conf_visible", "must lie in (0, 1)")?;
        check(n.conf_occluded > 0.0 && n.conf_occluded <= 1.0, "noise.conf_occluded", "must lie in (0, 1]")?;
        check(n.conf_outside > 0.0 && n.conf_outside < 1.0, "noise.conf_outside", "must lie in (0, 1)")?;
        check(n.max_range > 0.0, "noise.max_range", "must be positive")?;
        self.keypoint_window.validate().map_err(|_| ScenarioError::new("keypoint_window", "gamma in (0,1), alpha in (0,M)"))?;
        self.part_window.validate().map_err(|_| ScenarioError::new("part_window", "gamma in (0,1), alpha in (0,M)"))?;
        self.dims.validate().map_err(|m| ScenarioError::new("dims", m))?;
        let p = &self.pipeline;
        check(p.slice_radius > 0.0, "pipeline.slice_radius", "must be positive")?;
        check(p.inflation >= 1.0, "pipeline.inflation", "must be at least 1")?;
        let e = &p.extraction;
        check(e.voxel_size > 0.0 && e.cluster_distance > 0.0, "pipeline.voxel", "sizes must be positive")?;
        check(e.near >= 0.0 && e.far > e.near, "pipeline.range", "need 0 <= near < far")?;
        check(e.robot_margin >= 1.0, "pipeline.robot_margin", "must be at least 1")?;
        check(p.icp.max_iterations > 0 && p.icp.tolerance > 0.0, "pipeline.icp", "iterations and tolerance must be positive")?;
        check((0.0..1.0).contains(&p.icp.trim), "pipeline.icp.trim", "must lie in [0, 1)")?;
        check(p.icp.grid_cell > 0.0 && p.icp.model_spacing > 0.0, "pipeline.icp", "grid cell and model spacing must be positive")?;
        let s = &self.scheduler;
        check(s.gamma > 0.0 && s.gamma < 1.0, "scheduler.gamma", "must lie in (0, 1)")?;
        check(s.pan_cells >= 1 && s.tilt_cells >= 1, "scheduler.grid", "must have at least one cell per axis")?;
        check(s.sigma_reset > 0.0 && s.sigma_growth >= 0.0 && s.sigma_unknown > 0.0, "scheduler.sigma", "must be positive")?;
        check(s.extrapolation_limit >= 0.0, "scheduler.extrapolation_limit", "must be non-negative")?;
        let w = &self.workspace;
        check((0..3).all(|i| w.min[i] < w.max[i]), "workspace", "min must be below max on every axis")?;
        Ok(())
    }
}

/// Standing pose at `(x, y)` facing `heading` (0 faces +y).
pub fn standing(x: f64, y: f64, heading: f64) -> BodyPose {
    let dims = BodyDimensions::default();
    let leg = dims.part(KeypartId::UpperLeftLeg).height + dims.part(KeypartId::LowerLeftLeg).height;
    let z = leg + dims.part(KeypartId::Torso).height / 2.0;
    let mut pose = BodyPose { torso_position: Vec3::new(x, y, z), torso_angles: [0.0, 0.0, heading], ..Default::default() };
    pose.set_angles(KeypartId::UpperLeftArm, [0.15, -0.1]);
    pose.set_angles(KeypartId::UpperRightArm, [0.15, 0.1]);
    pose.set_angles(KeypartId::LowerLeftArm, [0.3, 0.0]);
    pose.set_angles(KeypartId::LowerRightArm, [0.3, 0.0]);
    pose
}

/// Arms raised forward by `reach` radians, elbows bent by `bend`.
fn working(mut pose: BodyPose, left: (f64, f64), right: (f64, f64)) -> BodyPose {
    pose.set_angles(KeypartId::UpperLeftArm, [left.0, -0.15]);
    pose.set_angles(KeypartId::LowerLeftArm, [left.1, 0.0]);
    pose.set_angles(KeypartId::UpperRightArm, [right.0, 0.15]);
    pose.set_angles(KeypartId::LowerRightArm, [right.1, 0.0]);
    pose
}

fn lean(mut pose: BodyPose, forward: f64) -> BodyPose {
    pose.torso_angles[0] = -forward;
    pose
}

fn walking(mut pose: BodyPose, phase: f64) -> BodyPose {
    pose.set_angles(KeypartId::UpperLeftLeg, [phase, 0.0]);
    pose.set_angles(KeypartId::UpperRightLeg, [-phase, 0.0]);
    pose.set_angles(KeypartId::LowerLeftLeg, [-phase.abs() * 0.8, 0.0]);
    pose.set_angles(KeypartId::LowerRightLeg, [-phase.abs() * 0.8, 0.0]);
    pose
}

fn wp(time: f64, pose: BodyPose) -> HumanWaypoint {
    HumanWaypoint { time, pose }
}

fn default_cameras() -> Vec<CameraSpec> {
    let cam = |eye: Vec3, target: Vec3| CameraSpec {
        eye,
        target,
        focal: 300.0,
        width: 160,
        height: 120,
        pan_limits: AngleLimits::new(-1.0, 1.0),
        tilt_limits: AngleLimits::new(-0.5, 0.5),
        max_rate: 1.5,
        active: true,
    };
    vec![
        cam(Vec3::new(1.4, 2.6, 2.1), Vec3::new(0.2, 0.0, 1.0)),
        cam(Vec3::new(-2.6, 0.9, 2.1), Vec3::new(-0.2, 0.0, 1.0)),
    ]
}

/// Three-link arm with its base on a table at `y = 1.1`.
fn robot(keyframes: Vec<(f64, [Vec3; 4])>) -> RobotScript {
    RobotScript {
        radii: vec![0.07, 0.06, 0.05],
        keyframes: keyframes.into_iter().map(|(time, j)| RobotKeyframe { time, joints: j.to_vec() }).collect(),
    }
}

fn arm(shoulder_yaw: f64, reach: f64, height: f64) -> [Vec3; 4] {
    let base = Vec3::new(0.0, 1.1, 0.75);
    let up = base + Vec3::new(0.0, 0.0, 0.35);
    let dir = Vec3::new(-math::sin(shoulder_yaw), -math::cos(shoulder_yaw), 0.0);
    let elbow = up + dir * (reach * 0.5) + Vec3::new(0.0, 0.0, 0.25);
    let tool = up + dir * reach + Vec3::new(0.0, 0.0, height - 1.1);
    [base, up, elbow, tool]
}

fn base_scenario(name: &str, duration: f64, human: Vec<HumanWaypoint>, robot: RobotScript) -> Scenario {
    Scenario {
        name: name.into(),
        seed: 1,
        duration,
        frame_rate: 10.0,
        cameras: default_cameras(),
        human,
        robot,
        noise: NoiseParams::default(),
        keypoint_window: WindowParams::default(),
        part_window: WindowParams::default(),
        dims: BodyDimensions::default(),
        // The 160×120 sensor needs a tighter slice than the full-resolution default.
        pipeline: PipelineParams { slice_radius: 2.0, ..PipelineParams::default() },
        scheduler: SchedulerParams::default(),
        workspace: Workspace { min: Vec3::new(-2.0, -1.2, 0.0), max: Vec3::new(2.0, 1.6, 2.2) },
    }
}

/// Operator assembling at the bench in front of the arm, shifting along it.
pub fn scene_assembly() -> Scenario {
    let at = |x: f64| standing(x, -0.2, 0.0);
    let human = vec![
        wp(0.0, working(at(-0.9), (1.0, 0.9), (1.0, 0.9))),
        wp(3.0, working(lean(at(-0.6), 0.2), (1.2, 0.6), (0.9, 1.1))),
        wp(5.0, walking(working(at(0.2), (0.6, 0.5), (0.6, 0.5)), 0.3)),
        wp(7.0, working(lean(at(0.9), 0.25), (1.3, 0.4), (1.1, 0.8))),
        wp(10.0, working(lean(at(1.2), 0.1), (1.0, 1.0), (1.3, 0.5))),
        wp(12.0, walking(working(at(0.3), (0.5, 0.6), (0.5, 0.6)), -0.3)),
        wp(15.0, working(lean(at(-1.0), 0.2), (1.2, 0.7), (1.1, 0.9))),
    ];
    let robot = robot(vec![
        (0.0, arm(-0.6, 0.7, 1.0)),
        (4.0, arm(0.5, 0.8, 1.05)),
        (8.0, arm(0.9, 0.7, 1.1)),
        (12.0, arm(-0.2, 0.8, 1.0)),
        (15.0, arm(-0.8, 0.7, 1.05)),
    ]);
    base_scenario("assembly", 15.0, human, robot)
}

/// Intensive reach-in interaction: the operator repeatedly reaches into the
/// arm's working volume from changing positions.
pub fn scene_reach_in() -> Scenario {
    let at = |x: f64, y: f64| standing(x, y, 0.0);
    let reach = |p: BodyPose| working(lean(p, 0.35), (1.5, 0.1), (1.4, 0.2));
    let rest = |p: BodyPose| working(p, (0.4, 0.8), (0.4, 0.8));
    let human = vec![
        wp(0.0, rest(at(1.3, -0.4))),
        wp(2.0, reach(at(0.9, 0.05))),
        wp(3.5, rest(at(0.7, -0.4))),
        wp(5.0, walking(rest(at(-0.2, -0.5)), 0.3)),
        wp(6.5, reach(at(-0.6, 0.05))),
        wp(8.0, rest(at(-1.1, -0.4))),
        wp(9.5, reach(at(-0.9, 0.1))),
        wp(11.0, walking(rest(at(0.2, -0.6)), -0.3)),
        wp(13.0, reach(at(1.0, 0.1))),
        wp(15.0, rest(at(1.4, -0.4))),
    ];
    let robot = robot(vec![
        (0.0, arm(0.0, 0.8, 1.0)),
        (2.5, arm(0.9, 0.75, 0.95)),
        (5.0, arm(0.0, 0.8, 1.1)),
        (7.0, arm(-0.9, 0.75, 0.95)),
        (10.0, arm(-0.7, 0.75, 1.0)),
        (13.0, arm(0.9, 0.75, 1.0)),
        (15.0, arm(0.3, 0.8, 1.05)),
    ]);
    base_scenario("reach_in", 15.0, human, robot)
}

/// Operator repeatedly entering and leaving the workspace.
pub fn scene_enter_exit() -> Scenario {
    let side = |x: f64, heading: f64| walking(standing(x, -0.4, heading), 0.35);
    let work = |x: f64| working(lean(standing(x, -0.15, 0.0), 0.2), (1.1, 0.7), (1.1, 0.7));
    let human = vec![
        wp(0.0, side(-3.6, -PI / 2.0)),
        wp(2.5, side(-1.2, -PI / 2.0)),
        wp(3.5, work(-0.6)),
        wp(6.0, work(0.1)),
        wp(7.0, side(1.0, -PI / 2.0)),
        wp(9.0, side(3.6, -PI / 2.0)),
        wp(10.0, side(3.6, PI / 2.0)),
        wp(12.0, side(1.0, PI / 2.0)),
        wp(13.0, work(0.5)),
        wp(15.0, work(0.9)),
    ];
    let robot = robot(vec![
        (0.0, arm(-0.7, 0.75, 1.0)),
        (4.0, arm(-0.3, 0.8, 1.05)),
        (8.0, arm(0.6, 0.75, 1.0)),
        (12.0, arm(0.4, 0.8, 1.1)),
        (15.0, arm(0.8, 0.75, 1.0)),
    ]);
    base_scenario("enter_exit", 15.0, human, robot)
}

/// Built-in templates by name: `scene1`, `scene2`, `scene3`.
pub fn template(name: &str) -> Option<Scenario> {
    match name {
        "scene1" | "assembly" => Some(scene_assembly()),
        "scene2" | "reach_in" => Some(scene_reach_in()),
        "scene3" | "enter_exit" => Some(scene_enter_exit()),
        _ => None,
    }
}

pub const TEMPLATE_NAMES: [&str; 3] = ["scene1", "scene2", "scene3"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_validate() {
        for name in TEMPLATE_NAMES {
            let s = template(name).unwrap();
            s.validate().unwrap();
            assert_eq!(s.frame_count(), 150);
        }
        assert!(template("nope").is_none());
    }

    #[test]
    fn standing_feet_touch_the_floor() {
        let dims = BodyDimensions::default();
        let g = dims.geometry(&standing(0.0, 0.0, 0.0));
        assert!(g.keypoints[15].z.abs() < 1e-9 && g.keypoints[16].z.abs() < 1e-9);
    }

    #[test]
    fn validation_names_the_field() {
        let mut s = scene_assembly();
        s.frame_rate = 0.0;
        assert_eq!(s.validate().unwrap_err().field, "frame_rate");
        let mut s = scene_assembly();
        s.robot.radii.push(0.1);
        assert_eq!(s.validate().unwrap_err().field, "robot.keyframe");
        let mut s = scene_assembly();
        s.keypoint_window.alpha = 9.0;
        assert_eq!(s.validate().unwrap_err().field, "keypoint_window");
    }

    #[test]
    fn zero_duration_has_no_frames() {
        let mut s = scene_assembly();
        s.duration = 0.0;
        assert_eq!(s.frame_count(), 0);
    }
}
