//! The 17-keypoint, 10-keypart cylinder body model and its hierarchically
//! connected tree.
//!
//! Every keypart is a cylinder. The torso is the root and carries a full 6-DOF
//! pose; every other part hangs off a joint of its parent and carries two
//! angles, for 24 DOF in total. Part frames are stored in world coordinates;
//! the angle parameterization is recovered on demand from parent and child frames.
//!
//! Frames:
//! - torso: x toward the right shoulder, y along the spine (hips → shoulders),
//!   z = x × y (pointing out of the back). The cylinder axis is local y.
//! - every other part: cylinder axis is local z. A child frame is
//!   `parent · rest · Rx(θx) · Ry(θy)` with a fixed rest rotation per part.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::fmt;

use crate::geometry::{rot_x, rot_y, rot_z, Cylinder, Mat3, Vec3};
use crate::math;

/// COCO keypoint index, `0..=16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeypointId(u8);

impl KeypointId {
    pub const COUNT: usize = 17;

    pub const NOSE: Self = Self(0);
    pub const LEFT_EYE: Self = Self(1);
    pub const RIGHT_EYE: Self = Self(2);
    pub const LEFT_EAR: Self = Self(3);
    pub const RIGHT_EAR: Self = Self(4);
    pub const LEFT_SHOULDER: Self = Self(5);
    pub const RIGHT_SHOULDER: Self = Self(6);
    pub const LEFT_ELBOW: Self = Self(7);
    pub const RIGHT_ELBOW: Self = Self(8);
    pub const LEFT_WRIST: Self = Self(9);
    pub const RIGHT_WRIST: Self = Self(10);
    pub const LEFT_HIP: Self = Self(11);
    pub const RIGHT_HIP: Self = Self(12);
    pub const LEFT_KNEE: Self = Self(13);
    pub const RIGHT_KNEE: Self = Self(14);
    pub const LEFT_ANKLE: Self = Self(15);
    pub const RIGHT_ANKLE: Self = Self(16);

    const NAMES: [&'static str; 17] = [
        "nose",
        "left_eye",
        "right_eye",
        "left_ear",
        "right_ear",
        "left_shoulder",
        "right_shoulder",
        "left_elbow",
        "right_elbow",
        "left_wrist",
        "right_wrist",
        "left_hip",
        "right_hip",
        "left_knee",
        "right_knee",
        "left_ankle",
        "right_ankle",
    ];

    pub fn new(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(Self(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = KeypointId> {
        (0..Self::COUNT as u8).map(Self)
    }

    /// Keyparts whose keypoint set contains this keypoint.
    pub fn parts(self) -> impl Iterator<Item = KeypartId> {
        KeypartId::ALL.into_iter().filter(move |p| p.keypoints().contains(&self))
    }
}

impl fmt::Display for KeypointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fixed-size table of optional per-keypoint positions.
pub type KeypointPositions = [Option<Vec3>; KeypointId::COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeypartId {
    Torso = 0,
    Head = 1,
    UpperLeftArm = 2,
    LowerLeftArm = 3,
    UpperRightArm = 4,
    LowerRightArm = 5,
    UpperLeftLeg = 6,
    LowerLeftLeg = 7,
    UpperRightLeg = 8,
    LowerRightLeg = 9,
}

/// Where a child part attaches to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    Keypoint(KeypointId),
    /// Midpoint of the two shoulders.
    Neck,
}

impl KeypartId {
    pub const COUNT: usize = 10;

    pub const ALL: [KeypartId; 10] = [
        KeypartId::Torso,
        KeypartId::Head,
        KeypartId::UpperLeftArm,
        KeypartId::LowerLeftArm,
        KeypartId::UpperRightArm,
        KeypartId::LowerRightArm,
        KeypartId::UpperLeftLeg,
        KeypartId::LowerLeftLeg,
        KeypartId::UpperRightLeg,
        KeypartId::LowerRightLeg,
    ];

    /// Parent-before-child order: root, then depth 1, then depth 2, index order within a depth.
    pub const TRAVERSAL: [KeypartId; 10] = [
        KeypartId::Torso,
        KeypartId::Head,
        KeypartId::UpperLeftArm,
        KeypartId::UpperRightArm,
        KeypartId::UpperLeftLeg,
        KeypartId::UpperRightLeg,
        KeypartId::LowerLeftArm,
        KeypartId::LowerRightArm,
        KeypartId::LowerLeftLeg,
        KeypartId::LowerRightLeg,
    ];

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short name used in files: `torso`, `head`, `ula`, `lla`, `ura`, `lra`, `ull`, `lll`, `url`, `lrl`.
    pub fn code(self) -> &'static str {
        ["torso", "head", "ula", "lla", "ura", "lra", "ull", "lll", "url", "lrl"][self.index()]
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.code() == code)
    }

    pub fn parent(self) -> Option<KeypartId> {
        use KeypartId::*;
        match self {
            Torso => None,
            Head | UpperLeftArm | UpperRightArm | UpperLeftLeg | UpperRightLeg => Some(Torso),
            LowerLeftArm => Some(UpperLeftArm),
            LowerRightArm => Some(UpperRightArm),
            LowerLeftLeg => Some(UpperLeftLeg),
            LowerRightLeg => Some(UpperRightLeg),
        }
    }

    pub fn children(self) -> impl Iterator<Item = KeypartId> {
        Self::ALL.into_iter().filter(move |c| c.parent() == Some(self))
    }

    pub fn depth(self) -> usize {
        match self.parent() {
            None => 0,
            Some(p) => 1 + p.depth(),
        }
    }

    /// Keypoints encompassed by this part. Each limb segment owns its two end
    /// joints, so a limb's two segments together cover its three keypoints.
    pub fn keypoints(self) -> &'static [KeypointId] {
        use KeypartId::*;
        const TORSO: [KeypointId; 4] = [KeypointId(5), KeypointId(6), KeypointId(11), KeypointId(12)];
        const HEAD: [KeypointId; 5] = [KeypointId(0), KeypointId(1), KeypointId(2), KeypointId(3), KeypointId(4)];
        const ULA: [KeypointId; 2] = [KeypointId(5), KeypointId(7)];
        const LLA: [KeypointId; 2] = [KeypointId(7), KeypointId(9)];
        const URA: [KeypointId; 2] = [KeypointId(6), KeypointId(8)];
        const LRA: [KeypointId; 2] = [KeypointId(8), KeypointId(10)];
        const ULL: [KeypointId; 2] = [KeypointId(11), KeypointId(13)];
        const LLL: [KeypointId; 2] = [KeypointId(13), KeypointId(15)];
        const URL: [KeypointId; 2] = [KeypointId(12), KeypointId(14)];
        const LRL: [KeypointId; 2] = [KeypointId(14), KeypointId(16)];
        match self {
            Torso => &TORSO,
            Head => &HEAD,
            UpperLeftArm => &ULA,
            LowerLeftArm => &LLA,
            UpperRightArm => &URA,
            LowerRightArm => &LRA,
            UpperLeftLeg => &ULL,
            LowerLeftLeg => &LLL,
            UpperRightLeg => &URL,
            LowerRightLeg => &LRL,
        }
    }

    pub fn dof(self) -> usize {
        if self == KeypartId::Torso {
            6
        } else {
            2
        }
    }

    /// Attachment point on the parent; `None` for the root.
    pub fn proximal_joint(self) -> Option<Joint> {
        use KeypartId::*;
        match self {
            Torso => None,
            Head => Some(Joint::Neck),
            _ => Some(Joint::Keypoint(self.keypoints()[0])),
        }
    }

    /// Keypoint at the far end of a limb segment.
    pub fn distal_keypoint(self) -> Option<KeypointId> {
        use KeypartId::*;
        match self {
            Torso | Head => None,
            _ => Some(self.keypoints()[1]),
        }
    }

    fn rest_rotation(self) -> Mat3 {
        use KeypartId::*;
        match self {
            Torso => Mat3::identity(),
            Head => rot_x(-FRAC_PI_2),
            UpperLeftArm | UpperRightArm | UpperLeftLeg | UpperRightLeg => rot_x(FRAC_PI_2),
            LowerLeftArm | LowerRightArm | LowerLeftLeg | LowerRightLeg => Mat3::identity(),
        }
    }

    /// Cylinder axis in the part's local frame.
    pub fn local_axis(self) -> Vec3 {
        if self == KeypartId::Torso {
            Vec3::y()
        } else {
            Vec3::z()
        }
    }
}

impl fmt::Display for KeypartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Bit set of keyparts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PartSet(u16);

impl PartSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    pub const fn all() -> Self {
        Self((1 << KeypartId::COUNT) - 1)
    }

    pub fn from_bits(bits: u16) -> Self {
        Self(bits & Self::all().0)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, part: KeypartId) {
        self.0 |= 1 << part.index();
    }

    pub fn remove(&mut self, part: KeypartId) {
        self.0 &= !(1 << part.index());
    }

    pub fn contains(self, part: KeypartId) -> bool {
        self.0 & (1 << part.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = KeypartId> {
        KeypartId::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

impl FromIterator<KeypartId> for PartSet {
    fn from_iter<I: IntoIterator<Item = KeypartId>>(iter: I) -> Self {
        let mut s = PartSet::empty();
        for p in iter {
            s.insert(p);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartDimensions {
    pub radius: f64,
    pub height: f64,
}

/// Predefined cylinder sizes plus the torso's joint offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyDimensions {
    pub parts: [PartDimensions; KeypartId::COUNT],
    /// Lateral offset of each shoulder joint from the spine.
    pub shoulder_half_width: f64,
    /// Lateral offset of each hip joint from the spine.
    pub hip_half_width: f64,
}

impl Default for BodyDimensions {
    fn default() -> Self {
        let limb = |height| PartDimensions { radius: 0.05, height };
        Self {
            parts: [
                PartDimensions { radius: 0.15, height: 0.50 },
                PartDimensions { radius: 0.10, height: 0.25 },
                limb(0.30),
                limb(0.28),
                limb(0.30),
                limb(0.28),
                limb(0.42),
                limb(0.42),
                limb(0.42),
                limb(0.42),
            ],
            shoulder_half_width: 0.20,
            hip_half_width: 0.10,
        }
    }
}

/// Static description of one keypart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypartModel {
    pub id: KeypartId,
    pub radius: f64,
    pub height: f64,
    pub proximal_joint: Option<Joint>,
    pub distal_joint: Option<KeypointId>,
}

impl BodyDimensions {
    pub fn part(&self, part: KeypartId) -> PartDimensions {
        self.parts[part.index()]
    }

    pub fn model(&self, part: KeypartId) -> KeypartModel {
        let d = self.part(part);
        KeypartModel {
            id: part,
            radius: d.radius,
            height: d.height,
            proximal_joint: part.proximal_joint(),
            distal_joint: part.distal_keypoint(),
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        for d in &self.parts {
            if !(d.radius > 0.0 && d.height > 0.0 && d.radius.is_finite() && d.height.is_finite()) {
                return Err("part radius and height must be positive");
            }
        }
        if !(self.shoulder_half_width > 0.0 && self.hip_half_width > 0.0) {
            return Err("joint offsets must be positive");
        }
        Ok(())
    }

    /// Head keypoints in head-local coordinates (x right, y forward, z along the axis).
    fn head_keypoint_local(&self, k: KeypointId) -> Vec3 {
        let PartDimensions { radius: r, height: h } = self.part(KeypartId::Head);
        let (x, y, z) = match k.index() {
            0 => (0.0, 0.6, 0.50),
            1 => (-0.35, 0.35, 0.62),
            2 => (0.35, 0.35, 0.62),
            3 => (-0.75, -0.65, 0.56),
            4 => (0.75, -0.65, 0.56),
            _ => unreachable!("not a head keypoint"),
        };
        Vec3::new(x * r, y * r, z * h)
    }
}

/// Table-1 parameters of one part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartParams {
    /// Torso centroid and world-fixed `(θx, θy, θz)`.
    Root { position: Vec3, angles: [f64; 3] },
    /// Rotation about the parent joint.
    Joint { angles: [f64; 2] },
}

/// Estimated or ground-truth state of one part: its world frame and cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypartState {
    frame: Mat3,
    cylinder: Cylinder,
}

/// Maps torso-local (x right, y up, z back) to the world (z up) when all torso angles are 0:
/// the body then faces world +y with its right side along +x.
fn torso_base_rotation() -> Mat3 {
    rot_x(FRAC_PI_2)
}

fn torso_rotation(angles: [f64; 3]) -> Mat3 {
    rot_z(angles[2]) * rot_y(angles[1]) * rot_x(angles[0]) * torso_base_rotation()
}

fn torso_angles(frame: &Mat3) -> [f64; 3] {
    let m = frame * torso_base_rotation().transpose();
    let theta_y = -math::asin(m[(2, 0)]);
    let theta_x = math::atan2(m[(2, 1)], m[(2, 2)]);
    let theta_z = math::atan2(m[(1, 0)], m[(0, 0)]);
    [theta_x, theta_y, theta_z]
}

fn joint_rotation(angles: [f64; 2]) -> Mat3 {
    rot_x(angles[0]) * rot_y(angles[1])
}

/// Angles taking `parent_rest`'s z axis onto `axis`.
fn joint_angles(parent_rest: &Mat3, axis: &Vec3) -> [f64; 2] {
    let l = parent_rest.transpose() * axis.normalize();
    [math::atan2(-l.y, l.z), math::asin(l.x)]
}

impl KeypartState {
    pub fn frame(&self) -> &Mat3 {
        &self.frame
    }

    pub fn cylinder(&self) -> &Cylinder {
        &self.cylinder
    }

    pub fn axis(&self) -> Vec3 {
        self.cylinder.axis()
    }

    /// Torso state from its centroid and frame.
    pub fn torso(dims: &BodyDimensions, centroid: Vec3, frame: Mat3) -> Self {
        let d = dims.part(KeypartId::Torso);
        let axis = frame.column(1).into_owned();
        let base = centroid - axis * (d.height / 2.0);
        Self { frame, cylinder: Cylinder::new(base, axis, d.height, d.radius).expect("valid dimensions") }
    }

    /// Torso state from a centroid, a spine direction, and an approximate right direction.
    pub fn torso_from_axes(dims: &BodyDimensions, centroid: Vec3, spine: Vec3, right: Vec3) -> Self {
        Self::torso(dims, centroid, frame_from_axes(&spine, &right))
    }

    /// Non-root state attached at `base`, with the frame derived from the
    /// parent frame (when known) so no spin about the axis is introduced.
    pub fn articulated(dims: &BodyDimensions, part: KeypartId, base: Vec3, axis: Vec3, parent_frame: Option<&Mat3>) -> Self {
        let d = dims.part(part);
        let axis = axis.normalize();
        let frame = match parent_frame {
            Some(pf) => {
                let rest = pf * part.rest_rotation();
                rest * joint_rotation(joint_angles(&rest, &axis))
            }
            None => {
                let x = crate::geometry::any_perpendicular(&axis);
                Mat3::from_columns(&[x, axis.cross(&x), axis])
            }
        };
        let axis = frame.column(2).into_owned();
        Self { frame, cylinder: Cylinder::new(base, axis, d.height, d.radius).expect("valid dimensions") }
    }

    fn from_params(dims: &BodyDimensions, part: KeypartId, base: Vec3, parent_frame: &Mat3, angles: [f64; 2]) -> Self {
        let d = dims.part(part);
        let frame = parent_frame * part.rest_rotation() * joint_rotation(angles);
        let axis = frame.column(2).into_owned();
        Self { frame, cylinder: Cylinder::new(base, axis, d.height, d.radius).expect("valid dimensions") }
    }

    pub fn with_base(&self, base: Vec3) -> Self {
        Self { frame: self.frame, cylinder: self.cylinder.with_base(base) }
    }

    /// Joint position of `joint` when it lies on this part.
    pub fn joint_position(&self, part: KeypartId, dims: &BodyDimensions, joint: Joint) -> Option<Vec3> {
        match (part, joint) {
            (KeypartId::Torso, Joint::Neck) => Some(self.cylinder.top()),
            (KeypartId::Torso, Joint::Keypoint(k)) => self.torso_anchor(dims, k),
            (_, Joint::Keypoint(k)) if part.distal_keypoint() == Some(k) => Some(self.cylinder.top()),
            (_, Joint::Keypoint(k)) if part.proximal_joint() == Some(Joint::Keypoint(k)) => Some(self.cylinder.base()),
            _ => None,
        }
    }

    fn torso_anchor(&self, dims: &BodyDimensions, k: KeypointId) -> Option<Vec3> {
        let half = dims.part(KeypartId::Torso).height / 2.0;
        let center = self.cylinder.center();
        let x = self.frame.column(0).into_owned();
        let y = self.frame.column(1).into_owned();
        let (side, vertical, width) = match k.index() {
            5 => (-1.0, half, dims.shoulder_half_width),
            6 => (1.0, half, dims.shoulder_half_width),
            11 => (-1.0, -half, dims.hip_half_width),
            12 => (1.0, -half, dims.hip_half_width),
            _ => return None,
        };
        Some(center + y * vertical + x * (side * width))
    }

    /// Model positions of the keypoints this part determines.
    pub fn keypoints(&self, part: KeypartId, dims: &BodyDimensions) -> Vec<(KeypointId, Vec3)> {
        match part {
            KeypartId::Torso => part.keypoints().iter().map(|&k| (k, self.torso_anchor(dims, k).unwrap())).collect(),
            KeypartId::Head => part
                .keypoints()
                .iter()
                .map(|&k| (k, self.cylinder.base() + self.frame * dims.head_keypoint_local(k)))
                .collect(),
            _ => {
                let ks = part.keypoints();
                alloc::vec![(ks[0], self.cylinder.base()), (ks[1], self.cylinder.top())]
            }
        }
    }
}

/// Right-handed frame with y = `spine` and x = `right` made orthogonal to it.
pub fn frame_from_axes(spine: &Vec3, right: &Vec3) -> Mat3 {
    let y = spine.normalize();
    let mut x = right - y * right.dot(&y);
    if x.norm() < 1e-9 {
        x = crate::geometry::any_perpendicular(&y);
    }
    let x = x.normalize();
    let z = x.cross(&y);
    Mat3::from_columns(&[x, y, z])
}

/// Torso pose from its four anchor keypoints: origin at their centroid, y from
/// the hip midpoint to the shoulder midpoint, x from the left to the right
/// shoulder projected onto the plane orthogonal to y.
pub fn torso_from_anchors(dims: &BodyDimensions, keypoints: &KeypointPositions) -> Option<KeypartState> {
    let ls = keypoints[5]?;
    let rs = keypoints[6]?;
    let lh = keypoints[11]?;
    let rh = keypoints[12]?;
    let centroid = (ls + rs + lh + rh) / 4.0;
    let spine = (ls + rs) / 2.0 - (lh + rh) / 2.0;
    if spine.norm() < 1e-9 {
        return None;
    }
    Some(KeypartState::torso_from_axes(dims, centroid, spine, rs - ls))
}

/// Full 24-DOF body configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyPose {
    pub torso_position: Vec3,
    /// World-fixed `(θx, θy, θz)`; `θz` is the heading about the vertical.
    pub torso_angles: [f64; 3],
    /// `(θx, θy)` per non-root part, indexed by `KeypartId::index() - 1`.
    pub joint_angles: [[f64; 2]; KeypartId::COUNT - 1],
}

impl BodyPose {
    pub fn angles(&self, part: KeypartId) -> [f64; 2] {
        self.joint_angles[part.index() - 1]
    }

    pub fn set_angles(&mut self, part: KeypartId, angles: [f64; 2]) {
        self.joint_angles[part.index() - 1] = angles;
    }

    /// Component-wise linear interpolation.
    pub fn lerp(&self, other: &BodyPose, s: f64) -> BodyPose {
        let mix = |a: f64, b: f64| a + (b - a) * s;
        let mut out = *self;
        out.torso_position = self.torso_position + (other.torso_position - self.torso_position) * s;
        for i in 0..3 {
            out.torso_angles[i] = mix(self.torso_angles[i], other.torso_angles[i]);
        }
        for (o, (a, b)) in out.joint_angles.iter_mut().zip(self.joint_angles.iter().zip(other.joint_angles.iter())) {
            *o = [mix(a[0], b[0]), mix(a[1], b[1])];
        }
        out
    }
}

/// World-frame body derived from a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyGeometry {
    pub states: [KeypartState; KeypartId::COUNT],
    pub keypoints: [Vec3; KeypointId::COUNT],
}

impl BodyGeometry {
    pub fn cylinder(&self, part: KeypartId) -> &Cylinder {
        self.states[part.index()].cylinder()
    }

    pub fn cylinders(&self) -> impl Iterator<Item = (KeypartId, &Cylinder)> {
        KeypartId::ALL.into_iter().map(move |p| (p, self.cylinder(p)))
    }
}

impl BodyDimensions {
    /// Forward kinematics.
    pub fn geometry(&self, pose: &BodyPose) -> BodyGeometry {
        let torso = KeypartState::torso(self, pose.torso_position, torso_rotation(pose.torso_angles));
        let mut states = [torso; KeypartId::COUNT];
        for part in KeypartId::TRAVERSAL.into_iter().skip(1) {
            let parent = states[part.parent().unwrap().index()];
            let joint = part.proximal_joint().unwrap();
            let base = parent.joint_position(part.parent().unwrap(), self, joint).unwrap();
            states[part.index()] = KeypartState::from_params(self, part, base, parent.frame(), pose.angles(part));
        }
        let mut keypoints = [Vec3::zeros(); KeypointId::COUNT];
        for part in KeypartId::TRAVERSAL {
            for (k, p) in states[part.index()].keypoints(part, self) {
                keypoints[k.index()] = p;
            }
        }
        BodyGeometry { states, keypoints }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub part: KeypartId,
    pub present: bool,
    /// Absent but inserted to keep the tree connected; its state comes from keypoints only.
    pub supplemented: bool,
    /// Present but impossible to connect to the root.
    pub unanchorable: bool,
    pub state: Option<KeypartState>,
}

impl TreeNode {
    pub fn is_active(&self) -> bool {
        (self.present && !self.unanchorable) || self.supplemented
    }
}

/// Directed tree over the ten keyparts; edges run parent → child and are
/// labeled by the joint the child attaches at.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyTree {
    nodes: [TreeNode; KeypartId::COUNT],
    dims: BodyDimensions,
    keypoints: KeypointPositions,
}

impl BodyTree {
    pub fn new(present: PartSet, dims: BodyDimensions) -> Self {
        let nodes = KeypartId::ALL.map(|part| TreeNode {
            part,
            present: present.contains(part),
            supplemented: false,
            unanchorable: false,
            state: None,
        });
        Self { nodes, dims, keypoints: [None; KeypointId::COUNT] }
    }

    pub fn dims(&self) -> &BodyDimensions {
        &self.dims
    }

    pub fn node(&self, part: KeypartId) -> &TreeNode {
        &self.nodes[part.index()]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn state(&self, part: KeypartId) -> Option<&KeypartState> {
        self.nodes[part.index()].state.as_ref()
    }

    pub fn set_state(&mut self, part: KeypartId, state: Option<KeypartState>) {
        self.nodes[part.index()].state = state;
    }

    pub fn keypoints(&self) -> &KeypointPositions {
        &self.keypoints
    }

    pub fn set_keypoints(&mut self, keypoints: KeypointPositions) {
        self.keypoints = keypoints;
    }

    pub fn present(&self) -> PartSet {
        self.nodes.iter().filter(|n| n.present).map(|n| n.part).collect()
    }

    pub fn active(&self) -> PartSet {
        self.nodes.iter().filter(|n| n.is_active()).map(|n| n.part).collect()
    }

    pub fn supplemented(&self) -> PartSet {
        self.nodes.iter().filter(|n| n.supplemented).map(|n| n.part).collect()
    }

    pub fn unanchorable(&self) -> PartSet {
        self.nodes.iter().filter(|n| n.unanchorable).map(|n| n.part).collect()
    }

    /// Edges `(parent, child, joint)` between active nodes.
    pub fn edges(&self) -> impl Iterator<Item = (KeypartId, KeypartId, Joint)> + '_ {
        let active = self.active();
        KeypartId::TRAVERSAL.into_iter().skip(1).filter_map(move |c| {
            let p = c.parent()?;
            (active.contains(p) && active.contains(c)).then(|| (p, c, c.proximal_joint().unwrap()))
        })
    }

    /// Active parts, parents before children.
    pub fn traversal(&self) -> impl Iterator<Item = KeypartId> + '_ {
        KeypartId::TRAVERSAL.into_iter().filter(move |p| self.nodes[p.index()].is_active())
    }

    /// True when the active nodes form a single tree rooted at the torso (or are empty).
    pub fn is_connected(&self) -> bool {
        let active = self.active();
        if active.is_empty() {
            return true;
        }
        active.contains(KeypartId::Torso) && active.iter().all(|p| p.parent().is_none_or(|q| active.contains(q)))
    }

    /// Whether an absent part can be given a state from keypoints alone.
    fn localizable(part: KeypartId, keypoints: &KeypointPositions) -> bool {
        match part {
            KeypartId::Torso => part.keypoints().iter().all(|k| keypoints[k.index()].is_some()),
            KeypartId::Head => false,
            _ => part.keypoints().iter().all(|k| keypoints[k.index()].is_some()),
        }
    }

    /// Inserts the minimal set of supplementary nodes needed for every present
    /// node to reach the root, localizing each from the fused keypoints. Present
    /// parts whose path to the root cannot be localized are marked unanchorable.
    pub fn augment(mut self, fused: &KeypointPositions) -> Self {
        self.keypoints = *fused;
        for node in &mut self.nodes {
            node.supplemented = false;
            node.unanchorable = false;
        }
        for part in KeypartId::TRAVERSAL {
            if !self.nodes[part.index()].present {
                continue;
            }
            let mut needed = PartSet::empty();
            let mut ok = true;
            let mut cursor = part.parent();
            while let Some(a) = cursor {
                let n = &self.nodes[a.index()];
                if n.is_active() {
                    break;
                }
                if n.present || !Self::localizable(a, fused) {
                    ok = false;
                    break;
                }
                needed.insert(a);
                cursor = a.parent();
            }
            if ok {
                for a in needed.iter() {
                    self.nodes[a.index()].supplemented = true;
                }
            } else {
                self.nodes[part.index()].unanchorable = true;
            }
        }
        for part in KeypartId::TRAVERSAL {
            if !self.nodes[part.index()].supplemented {
                continue;
            }
            let state = match part {
                KeypartId::Torso => torso_from_anchors(&self.dims, fused),
                _ => {
                    let (a, b) = (fused[part.keypoints()[0].index()], fused[part.keypoints()[1].index()]);
                    let parent_frame = part.parent().and_then(|p| self.state(p)).map(|s| *s.frame());
                    match (a, b) {
                        (Some(a), Some(b)) if (b - a).norm() > 1e-9 => {
                            Some(KeypartState::articulated(&self.dims, part, a, b - a, parent_frame.as_ref()))
                        }
                        _ => None,
                    }
                }
            };
            self.nodes[part.index()].state = state;
        }
        self
    }

    /// Position of the joint `child` attaches at, from its parent's state.
    pub fn parent_joint(&self, child: KeypartId) -> Option<Vec3> {
        let parent = child.parent()?;
        let state = self.state(parent)?;
        state.joint_position(parent, &self.dims, child.proximal_joint()?)
    }

    /// Snaps each child's proximal end onto its parent's joint, parents first,
    /// keeping the child's axis direction, and refreshes joint keypoints.
    pub fn enforce_joint_constraints(mut self) -> Self {
        for part in KeypartId::TRAVERSAL.into_iter().skip(1) {
            let Some(state) = self.nodes[part.index()].state else { continue };
            let Some(anchor) = self.parent_joint(part) else { continue };
            let parent_frame = *self.state(part.parent().unwrap()).unwrap().frame();
            let snapped = KeypartState::articulated(&self.dims, part, anchor, state.axis(), Some(&parent_frame));
            self.nodes[part.index()].state = Some(snapped);
        }
        self.refresh_keypoints();
        self
    }

    /// Overwrites keypoints with the positions implied by the part states.
    pub fn refresh_keypoints(&mut self) {
        for part in KeypartId::TRAVERSAL {
            if let Some(state) = self.nodes[part.index()].state {
                for (k, p) in state.keypoints(part, &self.dims) {
                    self.keypoints[k.index()] = Some(p);
                }
            }
        }
    }

    /// Table-1 parameters of `part`, relative to its parent where applicable.
    pub fn params(&self, part: KeypartId) -> Option<PartParams> {
        let state = self.state(part)?;
        match part.parent() {
            None => Some(PartParams::Root { position: state.cylinder.center(), angles: torso_angles(&state.frame) }),
            Some(p) => {
                let parent = self.state(p)?;
                let rest = parent.frame * part.rest_rotation();
                Some(PartParams::Joint { angles: joint_angles(&rest, &state.axis()) })
            }
        }
    }

    /// Total parameter count over parts that currently have a state.
    pub fn dof(&self) -> usize {
        KeypartId::ALL.into_iter().filter(|p| self.state(*p).is_some()).map(|p| p.dof()).sum()
    }
}

/// Tree with every part present and states taken from `geometry`.
pub fn tree_from_geometry(dims: BodyDimensions, geometry: &BodyGeometry) -> BodyTree {
    let mut tree = BodyTree::new(PartSet::all(), dims);
    for part in KeypartId::ALL {
        tree.set_state(part, Some(geometry.states[part.index()]));
    }
    tree.set_keypoints(geometry.keypoints.map(Some));
    tree
}
