//! Active viewpoint scheduling: pick pan-tilt trajectories that maximize the
//! discounted log-probability of staying collision-free over a short horizon.

use alloc::vec;
use alloc::vec::Vec;

use crate::body::{BodyDimensions, BodyTree, KeypartId, PartSet};
use crate::camera::{approach, CameraRig};
use crate::geometry::{cylinder_clearance, project_camera, Cylinder, Vec3};
use crate::math;
use crate::scenario::{standing, SchedulerParams};

const PARTS: usize = KeypartId::COUNT;
const P_MAX: f64 = 1.0 - 1e-9;

/// Discounted objective `Σ γ^m ln(1 − p̂_m)`, each `p̂_m` clamped below 1.
pub fn objective(gamma: f64, p_hat: &[f64]) -> f64 {
    let mut weight = 1.0;
    let mut sum = 0.0;
    for p in p_hat {
        sum += weight * math::ln_1p(-p.clamp(0.0, P_MAX));
        weight *= gamma;
    }
    sum
}

/// Collision-probability model for one keypart against the robot.
pub trait CollisionModel {
    /// Probability in `[0, 1]` given the part/robot clearance and the part's
    /// positional uncertainty.
    fn probability(&self, clearance: f64, sigma: f64) -> f64;
}

/// `exp(−c² / 2σ²)`; 1 on contact.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianClearance;

impl CollisionModel for GaussianClearance {
    fn probability(&self, clearance: f64, sigma: f64) -> f64 {
        if clearance <= 0.0 {
            return 1.0;
        }
        if !clearance.is_finite() {
            return 0.0;
        }
        math::exp(-clearance * clearance / (2.0 * sigma * sigma))
    }
}

/// Minimum clearance between a part and any robot link; infinite without links.
pub fn robot_clearance(part: &Cylinder, links: &[Cylinder]) -> f64 {
    links.iter().map(|l| cylinder_clearance(part, l)).fold(f64::INFINITY, f64::min)
}

/// Per-interval, per-part collision probabilities and the uncertainties used.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEstimate {
    pub per_part: Vec<[f64; PARTS]>,
    pub sigma: Vec<[f64; PARTS]>,
}

impl CollisionEstimate {
    /// Probability that any part collides during each interval.
    pub fn combined(&self) -> Vec<f64> {
        self.per_part
            .iter()
            .map(|ps| 1.0 - ps.iter().map(|p| 1.0 - p.clamp(0.0, P_MAX)).product::<f64>())
            .collect()
    }

    /// `ln(1 − combined)` per interval, summed in the log domain so that
    /// remote, tiny risks still rank candidates. Clamped like the objective.
    pub fn log_survival(&self) -> Vec<f64> {
        self.per_part
            .iter()
            .map(|ps| ps.iter().map(|p| math::ln_1p(-p.clamp(0.0, P_MAX))).sum::<f64>().max(math::ln_1p(-P_MAX)))
            .collect()
    }
}

/// Collision estimate for fixed per-interval uncertainties.
/// `robot[m]` holds the link cylinders at the end of interval `m`.
pub fn estimate_collision(
    parts: &[Option<Cylinder>; PARTS],
    sigma: &[[f64; PARTS]],
    robot: &[Vec<Cylinder>],
    model: &impl CollisionModel,
) -> CollisionEstimate {
    let per_part = robot
        .iter()
        .zip(sigma)
        .map(|(links, s)| {
            let mut out = [0.0; PARTS];
            for (j, part) in parts.iter().enumerate() {
                if let Some(c) = part {
                    out[j] = model.probability(robot_clearance(c, links), s[j]);
                }
            }
            out
        })
        .collect();
    CollisionEstimate { per_part, sigma: sigma.to_vec() }
}

/// Per-part positional uncertainty and last-known geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyTracker {
    params: SchedulerParams,
    dims: BodyDimensions,
    sigma: [f64; PARTS],
    last: [Option<Cylinder>; PARTS],
    /// Time since each part was last observed, s.
    age: [f64; PARTS],
    /// Smoothed body velocity from consecutive torso observations.
    velocity: Vec3,
    fallback_center: Vec3,
}

/// Fastest body motion the tracker will extrapolate, m/s.
const MAX_SPEED: f64 = 2.0;

impl UncertaintyTracker {
    /// `fallback_center` places a default standing body while no part has been seen.
    pub fn new(params: SchedulerParams, dims: BodyDimensions, fallback_center: Vec3) -> Self {
        Self {
            params,
            dims,
            sigma: [params.sigma_unknown; PARTS],
            last: [None; PARTS],
            age: [0.0; PARTS],
            velocity: Vec3::zeros(),
            fallback_center,
        }
    }

    pub fn sigma(&self) -> &[f64; PARTS] {
        &self.sigma
    }

    pub fn velocity(&self) -> Vec3 {
        self.velocity
    }

    /// Registers one frame: observed parts take the tree's state with reset
    /// uncertainty, the rest grow linearly up to the unknown level.
    pub fn update(&mut self, tree: &BodyTree, observed: PartSet, dt: f64) {
        let p = self.params;
        let torso = KeypartId::Torso.index();
        for part in KeypartId::ALL {
            let j = part.index();
            match tree.state(part) {
                Some(s) if observed.contains(part) => {
                    let c = *s.cylinder();
                    if j == torso {
                        if let Some(prev) = self.last[j].filter(|_| self.age[j] + dt <= p.extrapolation_limit) {
                            let v = (c.center() - prev.center()) / (self.age[j] + dt);
                            self.velocity = (self.velocity + v) * 0.5;
                            let speed = self.velocity.norm();
                            if speed > MAX_SPEED {
                                self.velocity *= MAX_SPEED / speed;
                            }
                        }
                    }
                    self.last[j] = Some(c);
                    self.age[j] = 0.0;
                    self.sigma[j] = p.sigma_reset;
                }
                _ => {
                    self.age[j] += dt;
                    self.sigma[j] = (self.sigma[j] + p.sigma_growth * dt).min(p.sigma_unknown);
                }
            }
        }
    }

    /// Best current guess of every part: last seen geometry carried along the
    /// body velocity for at most the extrapolation limit, else a default
    /// standing body placed under the torso (or at the fallback center).
    pub fn predicted(&self) -> [Option<Cylinder>; PARTS] {
        let torso = self.shifted(KeypartId::Torso).map(|c| c.center());
        let anchor = torso.unwrap_or(self.fallback_center);
        let default = self.dims.geometry(&standing(anchor.x, anchor.y, 0.0));
        let mut out = [None; PARTS];
        for part in KeypartId::ALL {
            out[part.index()] = Some(self.shifted(part).unwrap_or(*default.cylinder(part)));
        }
        out
    }

    fn shifted(&self, part: KeypartId) -> Option<Cylinder> {
        let j = part.index();
        let mut v = self.velocity * self.age[j].min(self.params.extrapolation_limit);
        v.z = 0.0;
        self.last[j].map(|c| c.with_base(c.base() + v))
    }
}

/// Reached `(pan, tilt)` per camera per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewpointTrajectory {
    pub steps: Vec<Vec<(f64, f64)>>,
}

impl ViewpointTrajectory {
    /// Angles each camera should be commanded to now.
    pub fn first(&self) -> Option<&[(f64, f64)]> {
        self.steps.first().map(|s| s.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    Hold,
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub trajectory: ViewpointTrajectory,
    pub objective: f64,
    pub hold_objective: f64,
    pub method: SearchMethod,
}

/// One planning instance: the rigs to steer, the predicted parts, their
/// current uncertainty, and the robot over the horizon.
#[derive(Debug, Clone)]
pub struct PlanProblem<'a> {
    pub rigs: &'a [CameraRig],
    pub parts: [Option<Cylinder>; PARTS],
    pub sigma: [f64; PARTS],
    /// Link cylinders at the end of each of the `horizon + 1` intervals.
    pub robot: &'a [Vec<Cylinder>],
    pub dt: f64,
    pub max_range: f64,
    pub params: SchedulerParams,
}

/// Evenly spaced `(pan, tilt)` candidates spanning a rig's limits.
pub fn candidate_grid(rig: &CameraRig, pan_cells: usize, tilt_cells: usize) -> Vec<(f64, f64)> {
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    };
    let pans = axis(rig.pan_limits.min, rig.pan_limits.max, pan_cells);
    let tilts = axis(rig.tilt_limits.min, rig.tilt_limits.max, tilt_cells);
    tilts.iter().flat_map(|t| pans.iter().map(move |p| (*p, *t))).collect()
}

/// Slot choice: `None` holds the previous step's angles.
type Choice = Option<usize>;

impl PlanProblem<'_> {
    fn steps(&self) -> usize {
        self.params.horizon + 1
    }

    /// Parts whose predicted center projects into the image at `(pan, tilt)`;
    /// occlusion is not modeled.
    pub fn parts_in_view(&self, rig: &CameraRig, pan: f64, tilt: f64) -> PartSet {
        let to_camera = rig.pose_at(pan, tilt).inverse();
        let mut seen = PartSet::empty();
        for part in KeypartId::ALL {
            let Some(c) = &self.parts[part.index()] else { continue };
            let local = to_camera.apply(&c.center());
            if let Ok((px, z)) = project_camera(&local, &rig.intrinsics) {
                if z <= self.max_range && rig.intrinsics.contains(&px) {
                    seen.insert(part);
                }
            }
        }
        seen
    }

    /// Reached angles for a choice sequence `choices[step][camera]`.
    fn rollout(&self, grids: &[Vec<(f64, f64)>], choices: &[Vec<Choice>]) -> ViewpointTrajectory {
        let mut current: Vec<(f64, f64)> = self.rigs.iter().map(|r| (r.pan(), r.tilt())).collect();
        let steps = choices
            .iter()
            .map(|step| {
                for (c, rig) in self.rigs.iter().enumerate() {
                    if let Some(i) = step[c] {
                        let (tp, tt) = grids[c][i];
                        let max = rig.max_rate * self.dt;
                        let (p, t) = current[c];
                        current[c] = (
                            rig.pan_limits.clamp(approach(p, tp, max)),
                            rig.tilt_limits.clamp(approach(t, tt, max)),
                        );
                    }
                }
                current.clone()
            })
            .collect();
        ViewpointTrajectory { steps }
    }

    /// Uncertainty per interval along a trajectory: reset at the last step a
    /// part was in some camera's view, growing linearly otherwise.
    pub fn sigma_along(&self, trajectory: &ViewpointTrajectory) -> Vec<[f64; PARTS]> {
        let p = self.params;
        let mut last_seen: [Option<usize>; PARTS] = [None; PARTS];
        trajectory
            .steps
            .iter()
            .enumerate()
            .map(|(m, angles)| {
                for (rig, (pan, tilt)) in self.rigs.iter().zip(angles) {
                    for part in self.parts_in_view(rig, *pan, *tilt).iter() {
                        last_seen[part.index()] = Some(m);
                    }
                }
                let mut s = [0.0; PARTS];
                for j in 0..PARTS {
                    s[j] = match last_seen[j] {
                        Some(seen) => p.sigma_reset + p.sigma_growth * (m - seen) as f64 * self.dt,
                        None => self.sigma[j] + p.sigma_growth * (m + 1) as f64 * self.dt,
                    }
                    .min(p.sigma_unknown.max(p.sigma_reset));
                }
                s
            })
            .collect()
    }

    pub fn estimate(&self, trajectory: &ViewpointTrajectory) -> CollisionEstimate {
        estimate_collision(&self.parts, &self.sigma_along(trajectory), &self.robot[..self.steps()], &GaussianClearance)
    }

    pub fn evaluate(&self, trajectory: &ViewpointTrajectory) -> f64 {
        let mut weight = 1.0;
        let mut sum = 0.0;
        for l in self.estimate(trajectory).log_survival() {
            sum += weight * l;
            weight *= self.params.gamma;
        }
        sum
    }

    pub fn hold(&self) -> ViewpointTrajectory {
        self.rollout(&[], &vec![vec![None; self.rigs.len()]; self.steps()])
    }

    /// Best trajectory over the candidate grid: exhaustive when the sequence
    /// space is small, otherwise greedy per step and camera. Hold wins ties.
    pub fn plan(&self) -> Plan {
        assert!(self.robot.len() >= self.steps(), "robot trajectory shorter than the horizon");
        let hold = self.hold();
        let hold_objective = self.evaluate(&hold);
        let grids: Vec<_> =
            self.rigs.iter().map(|r| candidate_grid(r, self.params.pan_cells, self.params.tilt_cells)).collect();
        if self.rigs.is_empty() || grids.iter().all(|g| g.is_empty()) {
            return Plan { trajectory: hold, objective: hold_objective, method: SearchMethod::Hold, hold_objective };
        }
        let slots = self.steps() * self.rigs.len();
        let space = grids
            .iter()
            .map(|g| g.len() + 1)
            .try_fold(1usize, |acc, n| acc.checked_mul(n))
            .and_then(|per_step| (0..self.steps()).try_fold(1usize, |acc, _| acc.checked_mul(per_step)));
        let (trajectory, objective, method) = match space {
            Some(n) if n <= self.params.exhaustive_limit => {
                let (t, o) = self.exhaustive(&grids, slots, hold_objective, &hold);
                (t, o, SearchMethod::Exhaustive)
            }
            _ => {
                let (t, o) = self.greedy(&grids, hold_objective);
                (t, o, SearchMethod::Greedy)
            }
        };
        Plan { trajectory, objective, hold_objective, method }
    }

    fn exhaustive(
        &self,
        grids: &[Vec<(f64, f64)>],
        slots: usize,
        hold_objective: f64,
        hold: &ViewpointTrajectory,
    ) -> (ViewpointTrajectory, f64) {
        let cams = self.rigs.len();
        let radix: Vec<usize> = (0..slots).map(|s| grids[s % cams].len() + 1).collect();
        let mut digits = vec![0usize; slots];
        let mut best = (hold.clone(), hold_objective);
        loop {
            // Advance the mixed-radix counter; the all-hold start was scored above.
            let mut i = 0;
            while i < slots {
                digits[i] += 1;
                if digits[i] < radix[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == slots {
                return best;
            }
            let choices: Vec<Vec<Choice>> = digits
                .chunks(cams)
                .map(|step| step.iter().map(|d| d.checked_sub(1)).collect())
                .collect();
            let t = self.rollout(grids, &choices);
            let o = self.evaluate(&t);
            if o > best.1 {
                best = (t, o);
            }
        }
    }

    fn greedy(&self, grids: &[Vec<(f64, f64)>], hold_objective: f64) -> (ViewpointTrajectory, f64) {
        let mut choices = vec![vec![None; self.rigs.len()]; self.steps()];
        let mut best = hold_objective;
        for step in 0..self.steps() {
            for cam in 0..self.rigs.len() {
                let mut pick = None;
                for i in 0..grids[cam].len() {
                    choices[step][cam] = Some(i);
                    let o = self.evaluate(&self.rollout(grids, &choices));
                    if o > best {
                        best = o;
                        pick = Some(i);
                    }
                }
                choices[step][cam] = pick;
            }
        }
        (self.rollout(grids, &choices), best)
    }
}
