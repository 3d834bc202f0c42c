//! Closed-loop trials: simulate, perceive, score, schedule, step.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::body::{KeypartId, KeypointId};
use crate::camera::CameraRig;
use crate::geometry::angle_between;
use crate::pipeline::{CameraFrame, FrameResult, Pipeline};
use crate::scenario::{Scenario, ScenarioError};
use crate::scheduler::{Plan, PlanProblem, UncertaintyTracker};
use crate::sim::{keypoint_visibility, render_rig, robot_links_at, stream_rng, synthetic_detect, Scene, Visibility, WorldSnapshot};

/// The four compared vision systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VisionConfig {
    MultiActive,
    MultiFixed,
    SingleActive,
    SingleFixed,
}

impl VisionConfig {
    pub const ALL: [VisionConfig; 4] =
        [VisionConfig::MultiActive, VisionConfig::MultiFixed, VisionConfig::SingleActive, VisionConfig::SingleFixed];

    pub fn name(self) -> &'static str {
        match self {
            VisionConfig::MultiActive => "multi-active",
            VisionConfig::MultiFixed => "multi-fixed",
            VisionConfig::SingleActive => "single-active",
            VisionConfig::SingleFixed => "single-fixed",
        }
    }

    pub fn is_multi(self) -> bool {
        matches!(self, VisionConfig::MultiActive | VisionConfig::MultiFixed)
    }

    pub fn is_active(self) -> bool {
        matches!(self, VisionConfig::MultiActive | VisionConfig::SingleActive)
    }

    /// The scenario as seen by this system: single systems keep the first
    /// camera only, fixed systems lock every head at its mount pose.
    pub fn apply(self, scenario: &Scenario) -> Scenario {
        let mut s = scenario.clone();
        if !self.is_multi() {
            s.cameras.truncate(1);
        }
        for c in &mut s.cameras {
            c.active = self.is_active();
        }
        s
    }
}

impl fmt::Display for VisionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VisionConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        VisionConfig::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| alloc::format!("unknown config '{s}' (expected multi-active, multi-fixed, single-active or single-fixed)"))
    }
}

/// Presence and pose scoring of one part in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartRecord {
    pub truth: bool,
    pub predicted: bool,
    /// Only for truly present parts that have an estimate.
    pub axis_error_deg: Option<f64>,
    pub position_error_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub time: f64,
    pub parts: [PartRecord; KeypartId::COUNT],
    /// Scheduler objective of the chosen plan, when any rig is active.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(TP + TN) / total`; 0 for an empty trial.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    /// `TP / (TP + FN)`; 0 when nothing was truly present.
    pub fn recall(&self) -> f64 {
        match self.tp + self.fn_ {
            0 => 0.0,
            n => self.tp as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub scenario: String,
    pub config: VisionConfig,
    pub seed: u64,
    pub frames: Vec<FrameMetrics>,
}

impl TrialMetrics {
    pub fn confusion(&self) -> Confusion {
        let mut c = Confusion::default();
        for f in &self.frames {
            for p in &f.parts {
                c.add(p.truth, p.predicted);
            }
        }
        c
    }

    pub fn part_confusion(&self, part: KeypartId) -> Confusion {
        let mut c = Confusion::default();
        for f in &self.frames {
            let p = &f.parts[part.index()];
            c.add(p.truth, p.predicted);
        }
        c
    }

    /// Mean axis and position error over every scored estimate.
    pub fn mean_pose_error(&self) -> Option<(f64, f64)> {
        let errs: Vec<(f64, f64)> =
            self.frames.iter().flat_map(|f| f.parts.iter()).filter_map(|p| p.axis_error_deg.zip(p.position_error_m)).collect();
        let n = errs.len() as f64;
        (!errs.is_empty()).then(|| (errs.iter().map(|e| e.0).sum::<f64>() / n, errs.iter().map(|e| e.1).sum::<f64>() / n))
    }
}

/// Everything produced for one frame, for dumps and inspection.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub metrics: FrameMetrics,
    pub world: WorldSnapshot,
    pub inputs: Vec<CameraFrame>,
    pub result: FrameResult,
    pub plan: Option<Plan>,
}

/// Stream purposes for the per-frame random generators.
const DEPTH_STREAM: u64 = 0;
const DETECT_STREAM: u64 = 1;

/// Frame-by-frame trial execution.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    scenario: Scenario,
    config: VisionConfig,
    seed: u64,
    scene: Scene,
    /// Every camera of the unconfigured scenario, used for ground truth.
    reference: Vec<CameraRig>,
    pipeline: Pipeline,
    tracker: UncertaintyTracker,
    frame: usize,
    frames: usize,
}

impl TrialRunner {
    /// `seed` overrides the scenario's own seed when given.
    pub fn new(scenario: &Scenario, config: VisionConfig, seed: Option<u64>) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let reference = scenario.rigs()?;
        let s = config.apply(scenario);
        let scene = Scene::new(&s)?;
        let pipeline = Pipeline::new(s.cameras.len(), s.dims, s.pipeline, s.keypoint_window, s.part_window);
        let tracker = UncertaintyTracker::new(s.scheduler, s.dims, s.workspace.center());
        Ok(Self { seed: seed.unwrap_or(s.seed), frames: s.frame_count(), scenario: s, config, scene, reference, pipeline, tracker, frame: 0 })
    }

    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn rigs(&self) -> &[CameraRig] {
        &self.scene.rigs
    }

    /// Runs the next frame, or `None` once the duration is exhausted.
    pub fn step(&mut self) -> Option<FrameRecord> {
        if self.frame >= self.frames {
            return None;
        }
        let s = &self.scenario;
        let dt = s.frame_period();
        let frame = self.frame as u64;
        let world = self.scene.snapshot();
        let inputs: Vec<CameraFrame> = self
            .scene
            .rigs
            .iter()
            .map(|rig| {
                let cam = rig.id as u64;
                let pose = rig.world_pose();
                let depth = render_rig(rig, &world, &s.noise, Some(&mut stream_rng(self.seed, frame, cam, DEPTH_STREAM)));
                let mut rng = stream_rng(self.seed, frame, cam, DETECT_STREAM);
                let observations = synthetic_detect(rig.id, &pose, &rig.intrinsics, &world, &s.noise, &mut rng);
                CameraFrame { camera: rig.id, camera_to_world: pose, intrinsics: rig.intrinsics, depth, observations }
            })
            .collect();
        let result = self.pipeline.process(&inputs, &world.robot);
        let parts = score(&self.reference, s.noise.max_range, &world, &result);

        self.tracker.update(&result.tree, result.present, dt);
        let plan = self.schedule(world.time, dt);
        if let Some(p) = &plan {
            let active: Vec<usize> = self.scene.rigs.iter().enumerate().filter(|(_, r)| r.active).map(|(i, _)| i).collect();
            if let Some(first) = p.trajectory.first() {
                for (i, (pan, tilt)) in active.into_iter().zip(first) {
                    self.scene.rigs[i].set_command(*pan, *tilt);
                }
            }
        }
        let metrics = FrameMetrics { frame: self.frame, time: world.time, parts, objective: plan.as_ref().map(|p| p.objective) };
        self.scene.step(dt);
        self.frame += 1;
        Some(FrameRecord { metrics, world, inputs, result, plan })
    }

    fn schedule(&self, time: f64, dt: f64) -> Option<Plan> {
        let rigs: Vec<CameraRig> = self.scene.rigs.iter().filter(|r| r.active).cloned().collect();
        if rigs.is_empty() {
            return None;
        }
        let p = self.scenario.scheduler;
        let robot: Vec<_> =
            (0..=p.horizon).map(|m| robot_links_at(self.scene.robot_script(), time + (m + 1) as f64 * dt)).collect();
        let problem = PlanProblem {
            rigs: &rigs,
            parts: self.tracker.predicted(),
            sigma: *self.tracker.sigma(),
            robot: &robot,
            dt,
            max_range: self.scenario.noise.max_range,
            params: p,
        };
        Some(problem.plan())
    }

    /// Runs every remaining frame and collects the metrics.
    pub fn run(mut self) -> TrialMetrics {
        let mut frames = Vec::with_capacity(self.frames);
        while let Some(r) = self.step() {
            frames.push(r.metrics);
        }
        TrialMetrics { scenario: self.scenario.name.clone(), config: self.config, seed: self.seed, frames }
    }
}

/// Ground truth: a part is present when at least one of its keypoints is
/// unoccluded and in range for some reference camera, with the head aimed at
/// it within its limits. Truth thus depends on the scene alone, never on
/// which cameras a configuration keeps or where they point. A part is
/// predicted present when any camera's window says so.
fn score(reference: &[CameraRig], max_range: f64, world: &WorldSnapshot, result: &FrameResult) -> [PartRecord; KeypartId::COUNT] {
    let mut observable = [false; KeypointId::COUNT];
    for kp in KeypointId::all() {
        observable[kp.index()] = reference.iter().any(|rig| {
            let (pan, tilt) = rig.aim_at(&world.human.keypoints[kp.index()]);
            keypoint_visibility(kp, world, &rig.pose_at(pan, tilt), &rig.intrinsics, max_range).0 == Visibility::Visible
        });
    }
    KeypartId::ALL.map(|part| {
        let t = part.keypoints().iter().any(|k| observable[k.index()]);
        let est = result.tree.state(part).filter(|_| t).map(|st| st.cylinder());
        let gt = world.human.cylinder(part);
        PartRecord {
            truth: t,
            predicted: result.present.contains(part),
            axis_error_deg: est.map(|c| angle_between(&c.axis(), &gt.axis()).to_degrees()),
            position_error_m: est.map(|c| (c.center() - gt.center()).norm()),
        }
    })
}
