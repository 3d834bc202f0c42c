//! Per-frame perception: presence windows, lifting and fusion, keypart masks,
//! cloud extraction, tree augmentation and registration.

use alloc::vec::Vec;

use crate::body::{BodyDimensions, BodyTree, KeypartId, KeypointId, KeypointPositions, PartSet};
use crate::geometry::{Cylinder, Intrinsics, RigidTransform, Vec3};
use crate::image::DepthImage;
use crate::keypart::{
    extract_clouds, paint_masks, part_confidence, part_endpoints, project_keypoints_to_mask, trapezoid_for_part, KeypartCloud,
    MaskImage, Trapezoid,
};
use crate::keypoint::{fuse, lift_depth, CameraEstimate, FusedKeypoint, Observation2D, PresenceWindow, WindowParams};
use crate::registration::{register_tree, PartModels, PartOutcome};
use crate::scenario::PipelineParams;

/// One camera's inputs for a frame.
#[derive(Debug, Clone)]
pub struct CameraFrame {
    pub camera: usize,
    pub camera_to_world: RigidTransform,
    pub intrinsics: Intrinsics,
    pub depth: DepthImage,
    pub observations: Vec<Observation2D>,
}

/// Everything the pipeline derived for one frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    /// Keypoint presence per camera.
    pub keypoint_present: Vec<[bool; KeypointId::COUNT]>,
    /// Keypart presence per camera.
    pub part_present: Vec<PartSet>,
    /// Union of the per-camera keypart presence.
    pub present: PartSet,
    pub fused: [Option<FusedKeypoint>; KeypointId::COUNT],
    pub trapezoids: Vec<Vec<(KeypartId, Trapezoid)>>,
    pub masks: Vec<MaskImage>,
    pub clouds: Vec<KeypartCloud>,
    pub tree: BodyTree,
    pub outcomes: [PartOutcome; KeypartId::COUNT],
}

/// Stateful pipeline: sliding windows per camera and the previous tree.
#[derive(Debug, Clone)]
pub struct Pipeline {
    dims: BodyDimensions,
    params: PipelineParams,
    models: PartModels,
    keypoint_windows: Vec<[PresenceWindow; KeypointId::COUNT]>,
    part_windows: Vec<[PresenceWindow; KeypartId::COUNT]>,
    previous: Option<BodyTree>,
}

impl Pipeline {
    pub fn new(cameras: usize, dims: BodyDimensions, params: PipelineParams, keypoint: WindowParams, part: WindowParams) -> Self {
        Self {
            dims,
            params,
            models: PartModels::new(&dims, params.icp.model_spacing),
            keypoint_windows: (0..cameras).map(|_| core::array::from_fn(|_| PresenceWindow::new(keypoint))).collect(),
            part_windows: (0..cameras).map(|_| core::array::from_fn(|_| PresenceWindow::new(part))).collect(),
            previous: None,
        }
    }

    pub fn previous(&self) -> Option<&BodyTree> {
        self.previous.as_ref()
    }

    /// Runs one frame. `frames[i].camera` indexes the windows; `robot_links`
    /// are removed from the extracted clouds.
    pub fn process(&mut self, frames: &[CameraFrame], robot_links: &[Cylinder]) -> FrameResult {
        let mut keypoint_present = Vec::with_capacity(frames.len());
        let mut part_present = Vec::with_capacity(frames.len());
        let mut estimates: [Vec<CameraEstimate>; KeypointId::COUNT] = Default::default();
        for f in frames {
            let mut raw = [0.0f64; KeypointId::COUNT];
            for o in &f.observations {
                raw[o.keypoint.index()] = raw[o.keypoint.index()].max(o.confidence);
            }
            let mut kp = [false; KeypointId::COUNT];
            for (i, w) in self.keypoint_windows[f.camera].iter_mut().enumerate() {
                w.push(raw[i]);
                kp[i] = w.present();
            }
            for o in &f.observations {
                if !kp[o.keypoint.index()] {
                    continue;
                }
                if let Ok(p) = lift_depth(o, &f.depth, self.params.slice_radius, &f.intrinsics) {
                    estimates[o.keypoint.index()].push(CameraEstimate {
                        position_camera: p,
                        confidence: o.confidence,
                        camera_to_world: f.camera_to_world,
                    });
                }
            }
            let mut parts = PartSet::empty();
            for part in KeypartId::ALL {
                let w = &mut self.part_windows[f.camera][part.index()];
                w.push(part_confidence(part, &raw));
                if w.present() {
                    parts.insert(part);
                }
            }
            keypoint_present.push(kp);
            part_present.push(parts);
        }
        let fused: [Option<FusedKeypoint>; KeypointId::COUNT] = core::array::from_fn(|i| fuse(&estimates[i]).ok());

        let mut trapezoids = Vec::with_capacity(frames.len());
        let mut masks = Vec::with_capacity(frames.len());
        let mut clouds = Vec::new();
        for (f, parts) in frames.iter().zip(&part_present) {
            let mut traps = Vec::new();
            for part in parts.iter() {
                let placed = project_keypoints_to_mask(
                    part,
                    &fused,
                    &f.observations,
                    &f.depth,
                    &f.camera_to_world,
                    &f.intrinsics,
                    self.params.slice_radius,
                );
                let Some((upper, lower)) = part_endpoints(part, &placed) else { continue };
                let radius = self.dims.part(part).radius;
                if let Ok(t) = trapezoid_for_part(radius, upper, lower, &f.intrinsics, self.params.inflation) {
                    traps.push((part, t));
                }
            }
            let mask = paint_masks(&traps, MaskImage::filled(f.intrinsics.width(), f.intrinsics.height(), None));
            clouds.extend(extract_clouds(
                &mask,
                &f.depth,
                f.camera,
                &f.camera_to_world,
                &f.intrinsics,
                robot_links,
                &self.params.extraction,
            ));
            trapezoids.push(traps);
            masks.push(mask);
        }

        let present: PartSet = part_present.iter().flat_map(|p| p.iter()).collect();
        let mut merged: [Vec<Vec3>; KeypartId::COUNT] = Default::default();
        for c in &clouds {
            if present.contains(c.part) {
                merged[c.part.index()].extend_from_slice(&c.points);
            }
        }
        let cap = self.params.max_part_points;
        for cloud in merged.iter_mut().filter(|c| cap > 0 && c.len() > cap) {
            let n = cloud.len();
            *cloud = (0..cap).map(|i| cloud[i * n / cap]).collect();
        }
        let positions: KeypointPositions = fused.map(|f| f.map(|f| f.position_world));
        let tree = BodyTree::new(present, self.dims).augment(&positions);
        let (tree, outcomes) = register_tree(tree, &merged, self.previous.as_ref(), &self.models, &self.params.icp);
        self.previous = Some(tree.clone());
        FrameResult { keypoint_present, part_present, present, fused, trapezoids, masks, clouds, tree, outcomes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_between;
    use crate::scenario::{scene_assembly, NoiseParams};
    use crate::sim::{render_rig, stream_rng, synthetic_detect, Scene};

    fn frames(scene: &Scene, noise: &NoiseParams, frame: u64) -> Vec<CameraFrame> {
        let world = scene.snapshot();
        scene
            .rigs
            .iter()
            .enumerate()
            .map(|(i, rig)| {
                let pose = rig.world_pose();
                let mut rng = stream_rng(3, frame, i as u64, 0);
                CameraFrame {
                    camera: i,
                    camera_to_world: pose,
                    intrinsics: rig.intrinsics,
                    depth: render_rig(rig, &world, noise, None),
                    observations: synthetic_detect(i, &pose, &rig.intrinsics, &world, noise, &mut rng),
                }
            })
            .collect()
    }

    #[test]
    fn noiseless_frames_converge_to_the_true_body() {
        let mut s = scene_assembly();
        // Wide lenses keep the whole operator in both views.
        for c in &mut s.cameras {
            c.focal = 150.0;
        }
        let noise = NoiseParams::noiseless();
        let mut scene = Scene::new(&s).unwrap();
        let mut pipe = Pipeline::new(scene.rigs.len(), s.dims, s.pipeline, s.keypoint_window, s.part_window);
        let mut last = None;
        for f in 0..6 {
            let world = scene.snapshot();
            last = Some((pipe.process(&frames(&scene, &noise, f), &world.robot), world));
            scene.step(s.frame_period());
        }
        let (r, world) = last.unwrap();
        assert!(r.present.contains(KeypartId::Torso));
        assert!(r.tree.is_connected());
        let (mut sum, mut n) = (0.0, 0.0);
        for part in r.tree.active().iter() {
            let est = r.tree.state(part).unwrap().cylinder();
            let truth = world.human.cylinder(part);
            let dist = (est.center() - truth.center()).norm();
            let ang = angle_between(&est.axis(), &truth.axis()).to_degrees();
            // Lifted keypoints sit on the visible surface and partial views let
            // cylinders slide along their axes, so individual parts stay loose.
            assert!(dist < 0.15 && ang < 30.0, "{part}: {dist} m, {ang} deg");
            sum += dist;
            n += 1.0;
        }
        assert!(sum / n < 0.09, "mean center error {}", sum / n);
        assert!(r.outcomes.iter().filter(|o| matches!(o, PartOutcome::Registered(_))).count() >= 8);
        assert!(!r.clouds.is_empty());
        assert_eq!(r.masks.len(), 2);
    }

    #[test]
    fn nothing_seen_means_nothing_present() {
        let s = scene_assembly();
        let scene = Scene::new(&s).unwrap();
        let mut pipe = Pipeline::new(2, s.dims, s.pipeline, s.keypoint_window, s.part_window);
        let mut fs = frames(&scene, &NoiseParams::noiseless(), 0);
        for f in &mut fs {
            for o in &mut f.observations {
                o.confidence = 0.05;
            }
        }
        let r = pipe.process(&fs, &[]);
        assert!(r.present.is_empty());
        assert!(r.tree.active().is_empty());
        assert!(r.fused.iter().all(|f| f.is_none()));
    }
}
