//! Keypart presence, depth-ordered trapezoid masks, and per-part point-cloud
//! extraction.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::body::{KeypartId, KeypointId};
use crate::geometry::{project, reproject, Cylinder, GeometryError, Intrinsics, RigidTransform, Vec2, Vec3};
use crate::image::{DepthImage, Grid};
use crate::keypoint::{depth_slice, FusedKeypoint, Observation2D};
use crate::math;

/// Part confidence: the maximum over the part's keypoints.
pub fn part_confidence(part: KeypartId, confidences: &[f64; KeypointId::COUNT]) -> f64 {
    part.keypoints().iter().map(|k| confidences[k.index()]).fold(0.0, f64::max)
}

/// A keypoint placed on the mask canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskKeypoint {
    pub pixel: Vec2,
    /// Camera-frame depth used for paint ordering.
    pub depth: f64,
}

/// Places a part's keypoints on one camera's image: fused keypoints are
/// projected through the camera, the rest fall back to the raw detection with
/// a depth from the local depth slice. Keypoints behind the camera or without
/// any depth are skipped.
pub fn project_keypoints_to_mask(
    part: KeypartId,
    fused: &[Option<FusedKeypoint>; KeypointId::COUNT],
    raw: &[Observation2D],
    depth: &DepthImage,
    camera_to_world: &RigidTransform,
    k: &Intrinsics,
    slice_radius: f64,
) -> [Option<MaskKeypoint>; KeypointId::COUNT] {
    let mut out = [None; KeypointId::COUNT];
    for &kp in endpoint_keypoints(part) {
        out[kp.index()] = match fused[kp.index()] {
            Some(f) => match project(&f.position_world, camera_to_world, k) {
                Ok((pixel, d)) => Some(MaskKeypoint { pixel, depth: d }),
                Err(_) => None,
            },
            None => raw
                .iter()
                .find(|o| o.keypoint == kp)
                .and_then(|o| depth_slice(&o.pixel, depth, slice_radius).map(|d| MaskKeypoint { pixel: o.pixel, depth: d })),
        };
    }
    out
}

/// Keypoints `part_endpoints` reads: the part's own, plus the shoulders for the head.
pub fn endpoint_keypoints(part: KeypartId) -> &'static [KeypointId] {
    const HEAD: [KeypointId; 7] = [
        KeypointId::NOSE,
        KeypointId::LEFT_EYE,
        KeypointId::RIGHT_EYE,
        KeypointId::LEFT_EAR,
        KeypointId::RIGHT_EAR,
        KeypointId::LEFT_SHOULDER,
        KeypointId::RIGHT_SHOULDER,
    ];
    match part {
        KeypartId::Head => &HEAD,
        _ => part.keypoints(),
    }
}

fn mean_of(points: &[MaskKeypoint]) -> Option<MaskKeypoint> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let pixel = points.iter().map(|p| p.pixel).sum::<Vec2>() / n;
    let depth = points.iter().map(|p| p.depth).sum::<f64>() / n;
    Some(MaskKeypoint { pixel, depth })
}

/// The two axis endpoints used to draw a part: shoulder and hip midpoints for
/// the torso, the shoulder midpoint and the face extended to the crown for the
/// head (the face sits near mid-height), and the two joints of a limb segment.
pub fn part_endpoints(part: KeypartId, placed: &[Option<MaskKeypoint>; KeypointId::COUNT]) -> Option<(MaskKeypoint, MaskKeypoint)> {
    let pick = |ids: &[usize]| -> Vec<MaskKeypoint> { ids.iter().filter_map(|&i| placed[i]).collect() };
    match part {
        KeypartId::Torso => Some((mean_of(&pick(&[5, 6]))?, mean_of(&pick(&[11, 12]))?)),
        KeypartId::Head => {
            let face = placed[0].or_else(|| mean_of(&pick(&[1, 2, 3, 4])))?;
            let neck = mean_of(&pick(&[5, 6]))?;
            let depth = 2.0 * face.depth - neck.depth;
            let crown = MaskKeypoint { pixel: face.pixel * 2.0 - neck.pixel, depth: if depth > 0.0 { depth } else { face.depth } };
            Some((crown, neck))
        }
        _ => {
            let ks = part.keypoints();
            Some((placed[ks[0].index()]?, placed[ks[1].index()]?))
        }
    }
}

/// Isosceles trapezoid around an image-space segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub mid_upper: Vec2,
    pub mid_lower: Vec2,
    /// Half-length of the upper base in pixels.
    pub len_upper: f64,
    pub len_lower: f64,
    pub depth_upper: f64,
    pub depth_lower: f64,
}

/// Image-space half-width of a cylinder of `radius` at `depth`: `f · R / d`.
pub fn projected_half_width(focal: f64, depth: f64, radius: f64) -> f64 {
    focal / depth * radius
}

/// Trapezoid with base half-lengths `inflation · f · R / d` at each end.
///
/// When the endpoints coincide in the image the segment is replaced by a
/// vertical one spanning the larger base, so the part still covers its
/// foreshortened silhouette.
pub fn trapezoid_for_part(
    radius: f64,
    upper: MaskKeypoint,
    lower: MaskKeypoint,
    k: &Intrinsics,
    inflation: f64,
) -> Result<Trapezoid, GeometryError> {
    for d in [upper.depth, lower.depth] {
        if !(d > 0.0 && d.is_finite()) {
            return Err(GeometryError::InvalidDepth(d));
        }
    }
    let len_upper = inflation * projected_half_width(k.focal(), upper.depth, radius);
    let len_lower = inflation * projected_half_width(k.focal(), lower.depth, radius);
    let (mut mid_upper, mut mid_lower) = (upper.pixel, lower.pixel);
    if (mid_lower - mid_upper).norm() < 1e-6 {
        let half = Vec2::new(0.0, len_upper.max(len_lower));
        mid_upper -= half;
        mid_lower += half;
    }
    Ok(Trapezoid { mid_upper, mid_lower, len_upper, len_lower, depth_upper: upper.depth, depth_lower: lower.depth })
}

impl Trapezoid {
    pub fn mean_depth(&self) -> f64 {
        (self.depth_upper + self.depth_lower) / 2.0
    }

    /// Inclusive point-in-trapezoid test.
    pub fn contains(&self, p: &Vec2) -> bool {
        let axis = self.mid_lower - self.mid_upper;
        let len2 = axis.norm_squared();
        if len2 == 0.0 {
            return false;
        }
        let w = p - self.mid_upper;
        let t = w.dot(&axis) / len2;
        if !(0.0..=1.0).contains(&t) {
            return false;
        }
        let normal = Vec2::new(-axis.y, axis.x) / math::sqrt(len2);
        let half = self.len_upper + t * (self.len_lower - self.len_upper);
        math::abs(w.dot(&normal)) <= half
    }

    /// Corners in order upper+, upper−, lower−, lower+.
    pub fn corners(&self) -> [Vec2; 4] {
        let axis = self.mid_lower - self.mid_upper;
        let n = Vec2::new(-axis.y, axis.x).normalize();
        [
            self.mid_upper + n * self.len_upper,
            self.mid_upper - n * self.len_upper,
            self.mid_lower - n * self.len_lower,
            self.mid_lower + n * self.len_lower,
        ]
    }

    /// Inclusive integer pixel bounds clipped to `width × height`.
    fn pixel_bounds(&self, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
        let c = self.corners();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &c {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let x0 = math::floor(x0).max(0.0);
        let y0 = math::floor(y0).max(0.0);
        let x1 = math::ceil(x1).min(width as f64 - 1.0);
        let y1 = math::ceil(y1).min(height as f64 - 1.0);
        (x0 <= x1 && y0 <= y1).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
    }
}

/// Mask label with the depth it was painted at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskLabel {
    pub part: KeypartId,
    pub depth: f64,
}

pub type MaskImage = Grid<Option<MaskLabel>>;

/// Paints trapezoids far-to-near so nearer parts own contested pixels. Equal
/// depths resolve to the lower part index regardless of input order.
pub fn paint_masks(trapezoids: &[(KeypartId, Trapezoid)], mut canvas: MaskImage) -> MaskImage {
    let mut order: Vec<&(KeypartId, Trapezoid)> = trapezoids.iter().collect();
    order.sort_by(|a, b| b.1.mean_depth().total_cmp(&a.1.mean_depth()).then(b.0.cmp(&a.0)));
    let (w, h) = (canvas.width(), canvas.height());
    for (part, trap) in order {
        let Some((x0, y0, x1, y1)) = trap.pixel_bounds(w, h) else { continue };
        for v in y0..=y1 {
            for u in x0..=x1 {
                if trap.contains(&Vec2::new(u as f64, v as f64)) {
                    *canvas.get_mut(u, v).unwrap() = Some(MaskLabel { part: *part, depth: trap.mean_depth() });
                }
            }
        }
    }
    canvas
}

/// Filtering parameters for cloud extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionParams {
    pub voxel_size: f64,
    /// Camera-frame depth pass-through range.
    pub near: f64,
    pub far: f64,
    pub cluster_distance: f64,
    pub min_cluster: usize,
    /// Robot links are inflated radially by this factor before removal.
    pub robot_margin: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self { voxel_size: 0.02, near: 0.2, far: 5.0, cluster_distance: 0.05, min_cluster: 10, robot_margin: 1.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeypartCloud {
    pub part: KeypartId,
    /// World-frame points.
    pub points: Vec<Vec3>,
    pub camera: usize,
}

/// A labeled pixel lifted to the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub part: KeypartId,
    pub pixel: (u32, u32),
    pub world: Vec3,
}

/// Every labeled valid-depth pixel reprojected to the world, with robot-link
/// points and out-of-range depths removed; no downsampling.
pub fn labeled_points(
    mask: &MaskImage,
    depth: &DepthImage,
    camera_to_world: &RigidTransform,
    k: &Intrinsics,
    robot_links: &[Cylinder],
    params: &ExtractionParams,
) -> Vec<LabeledPoint> {
    let mut out = Vec::new();
    for (u, v, label) in mask.iter() {
        let Some(label) = label else { continue };
        let Some(d) = depth.depth(u, v) else { continue };
        if d < params.near || d > params.far {
            continue;
        }
        let Ok(cam) = reproject(&Vec2::new(u as f64, v as f64), d, k) else { continue };
        let world = camera_to_world.apply(&cam);
        if robot_links.iter().any(|l| l.contains_inflated(&world, params.robot_margin)) {
            continue;
        }
        out.push(LabeledPoint { part: label.part, pixel: (u, v), world });
    }
    out
}

fn cell_of(p: &Vec3, size: f64) -> (i64, i64, i64) {
    (math::floor(p.x / size) as i64, math::floor(p.y / size) as i64, math::floor(p.z / size) as i64)
}

/// One centroid per occupied voxel, in voxel-key order.
pub fn voxel_downsample(points: &[Vec3], size: f64) -> Vec<Vec3> {
    let mut cells: BTreeMap<(i64, i64, i64), (Vec3, usize)> = BTreeMap::new();
    for p in points {
        let e = cells.entry(cell_of(p, size)).or_insert((Vec3::zeros(), 0));
        e.0 += p;
        e.1 += 1;
    }
    cells.into_values().map(|(s, n)| s / n as f64).collect()
}

/// Connected components under the `distance` neighbor relation, largest first
/// (ties by smallest member index).
pub fn euclidean_clusters(points: &[Vec3], distance: f64) -> Vec<Vec<usize>> {
    let mut grid: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell_of(p, distance)).or_default().push(i);
    }
    let d2 = distance * distance;
    let mut seen = vec![false; points.len()];
    let mut clusters = Vec::new();
    for start in 0..points.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (cx, cy, cz) = cell_of(&points[i], distance);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(cell) = grid.get(&(cx + dx, cy + dy, cz + dz)) else { continue };
                        for &j in cell {
                            if !seen[j] && (points[j] - points[i]).norm_squared() <= d2 {
                                seen[j] = true;
                                members.push(j);
                                queue.push_back(j);
                            }
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    clusters
}

/// Voxel filter then keep the largest cluster, provided it reaches the minimum size.
pub fn filter_cloud(points: &[Vec3], params: &ExtractionParams) -> Vec<Vec3> {
    let voxels = voxel_downsample(points, params.voxel_size);
    let clusters = euclidean_clusters(&voxels, params.cluster_distance);
    match clusters.first() {
        Some(c) if c.len() >= params.min_cluster => c.iter().map(|&i| voxels[i]).collect(),
        _ => Vec::new(),
    }
}

/// Per-part filtered clouds for one camera; parts with no surviving points are omitted.
pub fn extract_clouds(
    mask: &MaskImage,
    depth: &DepthImage,
    camera: usize,
    camera_to_world: &RigidTransform,
    k: &Intrinsics,
    robot_links: &[Cylinder],
    params: &ExtractionParams,
) -> Vec<KeypartCloud> {
    let mut raw: [Vec<Vec3>; KeypartId::COUNT] = Default::default();
    for p in labeled_points(mask, depth, camera_to_world, k, robot_links, params) {
        raw[p.part.index()].push(p.world);
    }
    KeypartId::ALL
        .into_iter()
        .filter_map(|part| {
            let points = filter_cloud(&raw[part.index()], params);
            (!points.is_empty()).then_some(KeypartCloud { part, points, camera })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoint::{PresenceWindow, WindowParams};
    use rand::{Rng, SeedableRng};

    fn mk(x: f64, y: f64, d: f64) -> MaskKeypoint {
        MaskKeypoint { pixel: Vec2::new(x, y), depth: d }
    }

    fn k() -> Intrinsics {
        Intrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn part_confidence_takes_the_maximum() {
        let mut c = [0.0; 17];
        c[9] = 1.0;
        assert_eq!(part_confidence(KeypartId::LowerLeftArm, &c), 1.0);
        assert_eq!(part_confidence(KeypartId::Torso, &c), 0.0);
        let mut w = PresenceWindow::new(WindowParams::default());
        w.push(part_confidence(KeypartId::LowerLeftArm, &c));
        assert!(!w.present());
        w.push(1.0);
        assert!(w.present());
    }

    #[test]
    fn alternating_part_history_matches_direct_sum() {
        let mut w = PresenceWindow::new(WindowParams::default());
        let seq = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        for c in seq {
            w.push(c);
        }
        // newest first: 0,1,0,1,0,1
        let expected = 0.7 + 0.7f64.powi(3) + 0.7f64.powi(5);
        assert!((w.score() - expected).abs() < 1e-15);
        assert_eq!(w.present(), expected > 1.0);
    }

    #[test]
    fn fused_keypoint_on_axis_projects_to_principal_point() {
        let mut fused = [None; 17];
        fused[7] = Some(FusedKeypoint { position_world: Vec3::new(0.0, 0.0, 2.0), confidence: 0.5, cameras: 1 });
        let depth = DepthImage::empty(640, 480);
        let placed = project_keypoints_to_mask(KeypartId::LowerLeftArm, &fused, &[], &depth, &RigidTransform::identity(), &k(), 5.0);
        let m = placed[7].unwrap();
        assert!((m.pixel - Vec2::new(320.0, 240.0)).norm() < 1e-12);
        assert_eq!(m.depth, 2.0);
        assert!(placed[9].is_none());
    }

    #[test]
    fn raw_detection_fills_unfused_keypoints() {
        let fused = [None; 17];
        let depth = DepthImage::filled(640, 480, 1.7);
        let raw = [Observation2D { keypoint: KeypointId::LEFT_WRIST, pixel: Vec2::new(100.0, 50.0), confidence: 0.3, camera: 0, timestamp: 0.0 }];
        let placed = project_keypoints_to_mask(KeypartId::LowerLeftArm, &fused, &raw, &depth, &RigidTransform::identity(), &k(), 5.0);
        let m = placed[9].unwrap();
        assert_eq!(m.pixel, Vec2::new(100.0, 50.0));
        assert!((m.depth - 1.7).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_keypoints_are_skipped() {
        let mut fused = [None; 17];
        fused[7] = Some(FusedKeypoint { position_world: Vec3::new(0.0, 0.0, -2.0), confidence: 0.5, cameras: 1 });
        let depth = DepthImage::empty(640, 480);
        let placed = project_keypoints_to_mask(KeypartId::LowerLeftArm, &fused, &[], &depth, &RigidTransform::identity(), &k(), 5.0);
        assert!(placed[7].is_none());
    }

    #[test]
    fn base_width_follows_inverse_depth() {
        assert!((projected_half_width(500.0, 2.0, 0.1) - 25.0).abs() < 1e-12);
        let t = trapezoid_for_part(0.1, mk(100.0, 100.0, 2.0), mk(100.0, 200.0, 4.0), &k(), 1.0).unwrap();
        assert!((t.len_upper - 25.0).abs() < 1e-12);
        assert!((t.len_lower - 12.5).abs() < 1e-12);
        let r = trapezoid_for_part(0.1, mk(100.0, 100.0, 2.0), mk(100.0, 200.0, 2.0), &k(), 1.2).unwrap();
        assert_eq!(r.len_upper, r.len_lower);
        assert!((r.len_upper - 30.0).abs() < 1e-12);
        assert!(trapezoid_for_part(0.1, mk(0.0, 0.0, 0.0), mk(1.0, 1.0, 1.0), &k(), 1.0).is_err());
    }

    #[test]
    fn width_depth_product_is_constant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let (f, r) = (537.0, 0.07);
        let c = projected_half_width(f, 1.0, r);
        for _ in 0..1000 {
            let d = rng.random_range(0.1..10.0);
            assert!((projected_half_width(f, d, r) * d - c).abs() < 1e-9);
        }
    }

    #[test]
    fn trapezoid_containment_is_inclusive_on_edges() {
        let t = trapezoid_for_part(0.1, mk(10.0, 10.0, 5.0), mk(10.0, 30.0, 5.0), &Intrinsics::centered(50.0, 64, 64).unwrap(), 1.0).unwrap();
        assert_eq!(t.len_upper, 1.0);
        assert!(t.contains(&Vec2::new(11.0, 10.0)));
        assert!(t.contains(&Vec2::new(9.0, 30.0)));
        assert!(!t.contains(&Vec2::new(11.01, 20.0)));
        assert!(!t.contains(&Vec2::new(10.0, 30.01)));
    }

    #[test]
    fn nearer_part_wins_overlap() {
        let kk = Intrinsics::centered(100.0, 64, 64).unwrap();
        let a = trapezoid_for_part(0.1, mk(20.0, 10.0, 1.0), mk(20.0, 50.0, 1.0), &kk, 1.0).unwrap();
        let b = trapezoid_for_part(0.3, mk(10.0, 30.0, 3.0), mk(50.0, 30.0, 3.0), &kk, 1.0).unwrap();
        let traps = [(KeypartId::LowerLeftArm, a), (KeypartId::Torso, b)];
        let mask = paint_masks(&traps, MaskImage::filled(64, 64, None));
        assert_eq!(mask.get(20, 30).unwrap().unwrap().part, KeypartId::LowerLeftArm);
        assert_eq!(mask.get(40, 30).unwrap().unwrap().part, KeypartId::Torso);
        let rev = [traps[1], traps[0]];
        assert_eq!(paint_masks(&rev, MaskImage::filled(64, 64, None)), mask);
    }

    #[test]
    fn disjoint_trapezoids_are_order_independent() {
        let kk = Intrinsics::centered(100.0, 64, 64).unwrap();
        let a = trapezoid_for_part(0.05, mk(5.0, 5.0, 1.0), mk(5.0, 20.0, 1.0), &kk, 1.0).unwrap();
        let b = trapezoid_for_part(0.05, mk(40.0, 40.0, 2.0), mk(55.0, 55.0, 2.0), &kk, 1.0).unwrap();
        let one = paint_masks(&[(KeypartId::Head, a), (KeypartId::Torso, b)], MaskImage::filled(64, 64, None));
        let two = paint_masks(&[(KeypartId::Torso, b), (KeypartId::Head, a)], MaskImage::filled(64, 64, None));
        assert_eq!(one, two);
    }

    /// Brute-force oracle: per pixel, the covering trapezoid of least mean depth, lowest part index on ties.
    fn oracle(traps: &[(KeypartId, Trapezoid)], w: u32, h: u32) -> Grid<Option<KeypartId>> {
        let mut g = Grid::filled(w, h, None);
        for v in 0..h {
            for u in 0..w {
                let p = Vec2::new(u as f64, v as f64);
                let mut best: Option<(f64, KeypartId)> = None;
                for (part, t) in traps {
                    if t.contains(&p) {
                        let key = (t.mean_depth(), *part);
                        if best.is_none_or(|b| key.0 < b.0 || (key.0 == b.0 && key.1 < b.1)) {
                            best = Some(key);
                        }
                    }
                }
                *g.get_mut(u, v).unwrap() = best.map(|b| b.1);
            }
        }
        g
    }

    pub(crate) fn random_trapezoids(rng: &mut impl Rng, w: u32, h: u32) -> Vec<(KeypartId, Trapezoid)> {
        let kk = Intrinsics::centered(80.0, w, h).unwrap();
        let n = rng.random_range(2..=10usize);
        (0..n)
            .map(|i| {
                let part = KeypartId::from_index(i).unwrap();
                let a = mk(rng.random_range(-5.0..w as f64 + 5.0), rng.random_range(-5.0..h as f64 + 5.0), rng.random_range(0.5..4.0));
                let b = mk(rng.random_range(-5.0..w as f64 + 5.0), rng.random_range(-5.0..h as f64 + 5.0), rng.random_range(0.5..4.0));
                (part, trapezoid_for_part(rng.random_range(0.05..0.3), a, b, &kk, 1.2).unwrap())
            })
            .collect()
    }

    #[test]
    fn painted_labels_match_min_depth_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let traps = random_trapezoids(&mut rng, 48, 40);
            let mask = paint_masks(&traps, MaskImage::filled(48, 40, None));
            let want = oracle(&traps, 48, 40);
            let got: Vec<Option<KeypartId>> = mask.data().iter().map(|l| l.map(|l| l.part)).collect();
            assert_eq!(got, want.data());
        }
    }

    #[test]
    fn permuting_inputs_never_changes_the_mask() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let mut traps = random_trapezoids(&mut rng, 40, 40);
            let a = paint_masks(&traps, MaskImage::filled(40, 40, None));
            traps.reverse();
            traps.rotate_left(1);
            assert_eq!(paint_masks(&traps, MaskImage::filled(40, 40, None)), a);
        }
    }

    #[test]
    fn voxel_filter_merges_cells() {
        let pts = [Vec3::new(0.001, 0.001, 0.001), Vec3::new(0.009, 0.001, 0.001), Vec3::new(0.5, 0.5, 0.5)];
        let v = voxel_downsample(&pts, 0.02);
        assert_eq!(v.len(), 2);
        assert!((v[0] - Vec3::new(0.005, 0.001, 0.001)).norm() < 1e-15);
        assert!(v.len() <= pts.len());
    }

    #[test]
    fn clustering_separates_far_groups() {
        let mut pts = Vec::new();
        for i in 0..20 {
            pts.push(Vec3::new(i as f64 * 0.02, 0.0, 0.0));
        }
        for i in 0..5 {
            pts.push(Vec3::new(5.0 + i as f64 * 0.02, 0.0, 0.0));
        }
        let c = euclidean_clusters(&pts, 0.05);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].len(), 20);
        let kept = filter_cloud(&pts, &ExtractionParams { voxel_size: 0.001, ..Default::default() });
        assert_eq!(kept.len(), 20);
        let none = filter_cloud(&pts[20..], &ExtractionParams { voxel_size: 0.001, ..Default::default() });
        assert!(none.is_empty());
    }

    #[test]
    fn clusters_match_brute_force_components() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec3> = (0..200)
            .map(|_| Vec3::new(rng.random_range(0.0..0.6), rng.random_range(0.0..0.6), rng.random_range(0.0..0.1)))
            .collect();
        let d = 0.05;
        // Union-find over all pairs.
        let mut parent: Vec<usize> = (0..pts.len()).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if (pts[i] - pts[j]).norm() <= d {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let clusters = euclidean_clusters(&pts, d);
        for c in &clusters {
            let root = find(&mut parent, c[0]);
            assert!(c.iter().all(|&i| find(&mut parent, i) == root));
        }
        let roots: alloc::collections::BTreeSet<usize> = (0..pts.len()).map(|i| find(&mut parent, i)).collect();
        assert_eq!(roots.len(), clusters.len());
    }

    #[test]
    fn empty_mask_yields_no_clouds() {
        let mask = MaskImage::filled(32, 32, None);
        let depth = DepthImage::filled(32, 32, 1.0);
        let kk = Intrinsics::centered(30.0, 32, 32).unwrap();
        let clouds = extract_clouds(&mask, &depth, 0, &RigidTransform::identity(), &kk, &[], &ExtractionParams::default());
        assert!(clouds.is_empty());
    }

    #[test]
    fn pass_through_and_robot_removal() {
        let kk = Intrinsics::centered(30.0, 32, 32).unwrap();
        let mask = MaskImage::filled(32, 32, Some(MaskLabel { part: KeypartId::Torso, depth: 1.0 }));
        let mut depth = DepthImage::filled(32, 32, 1.0);
        *depth.get_mut(0, 0).unwrap() = 7.0;
        let all = labeled_points(&mask, &depth, &RigidTransform::identity(), &kk, &[], &ExtractionParams::default());
        assert_eq!(all.len(), 32 * 32 - 1);
        // A link covering the image's left half at the plane z = 1.
        let link = Cylinder::from_endpoints(Vec3::new(-0.26, -1.0, 1.0), Vec3::new(-0.26, 1.0, 1.0), 0.25).unwrap();
        let kept = labeled_points(&mask, &depth, &RigidTransform::identity(), &kk, &[link], &ExtractionParams::default());
        let removed = all.iter().filter(|p| link.contains_inflated(&p.world, 1.1)).count();
        assert!(removed > 0);
        assert_eq!(kept.len(), all.len() - removed);
    }
}
