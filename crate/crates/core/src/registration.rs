//! Cylinder-model ICP and hierarchical registration of the body tree.

use alloc::vec;
use alloc::vec::Vec;

use crate::body::{BodyDimensions, BodyTree, KeypartId, KeypartState, KeypointPositions, torso_from_anchors};
use crate::geometry::{any_perpendicular, Mat3, RigidTransform, Vec3};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop once the RMS residual changes by less than this many meters.
    pub tolerance: f64,
    /// Fraction of the worst correspondences dropped each iteration.
    pub trim: f64,
    /// Nearest-neighbor grid cell size in meters.
    pub grid_cell: f64,
    /// Target spacing between model samples in meters.
    pub model_spacing: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self { max_iterations: 50, tolerance: 1e-5, trim: 0.1, grid_cell: 0.02, model_spacing: 0.005 }
    }
}

/// Deterministic golden-angle helix on the lateral surface of a cylinder with
/// its base at the origin and its axis along +z.
pub fn sample_cylinder(radius: f64, height: f64, n: usize) -> Vec<Vec3> {
    let n = n.max(8);
    let golden = core::f64::consts::PI * (3.0 - math::sqrt(5.0));
    (0..n)
        .map(|i| {
            let s = height * i as f64 / (n - 1) as f64;
            let phi = golden * i as f64;
            Vec3::new(radius * math::cos(phi), radius * math::sin(phi), s)
        })
        .collect()
}

/// Sunflower-pattern samples on both end caps (`z = 0` and `z = height`).
pub fn sample_caps(radius: f64, height: f64, n_per_cap: usize) -> Vec<Vec3> {
    let golden = core::f64::consts::PI * (3.0 - math::sqrt(5.0));
    let disk: Vec<(f64, f64)> = (0..n_per_cap)
        .map(|i| {
            let rho = radius * math::sqrt((i as f64 + 0.5) / n_per_cap as f64);
            let phi = golden * i as f64;
            (rho * math::cos(phi), rho * math::sin(phi))
        })
        .collect();
    [0.0, height].iter().flat_map(|z| disk.iter().map(move |(x, y)| Vec3::new(*x, *y, *z))).collect()
}

/// Sample count giving roughly `spacing` between neighbouring model points.
pub fn model_size(radius: f64, height: f64, spacing: f64) -> usize {
    let area = 2.0 * core::f64::consts::PI * radius * height;
    ((area / (spacing * spacing)) as usize).clamp(64, 4000)
}

/// Uniform grid over a fixed point set for exact nearest-neighbor queries.
#[derive(Debug, Clone)]
pub struct NearestGrid<'a> {
    points: &'a [Vec3],
    cell: f64,
    origin: Vec3,
    dims: [usize; 3],
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> NearestGrid<'a> {
    pub fn new(points: &'a [Vec3], cell: f64) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        if points.is_empty() {
            lo = Vec3::zeros();
            hi = Vec3::zeros();
        }
        let dims = [0, 1, 2].map(|i| (math::floor((hi[i] - lo[i]) / cell) as usize) + 1);
        let mut grid = Self { points, cell, origin: lo, dims, starts: Vec::new(), order: Vec::new() };
        let total = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; total + 1];
        let cells: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell_of(p))).collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.order = order;
        grid
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|i| {
            let c = math::floor((p[i] - self.origin[i]) / self.cell);
            if c <= 0.0 {
                0
            } else {
                (c as usize).min(self.dims[i] - 1)
            }
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Index of and squared distance to the nearest point; `None` for an empty set.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let c = self.cell_of(q);
        let max_ring = *self.dims.iter().max().unwrap();
        let mut best: Option<(usize, f64)> = None;
        for ring in 0..=max_ring {
            let r = ring as i64;
            let lo = [0, 1, 2].map(|i| (c[i] as i64 - r).max(0));
            let hi = [0, 1, 2].map(|i| (c[i] as i64 + r).min(self.dims[i] as i64 - 1));
            let (cx, cy, cz) = (c[0] as i64, c[1] as i64, c[2] as i64);
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    // Only the shell of the ring: full rows on its faces, end cells elsewhere.
                    let face = (z - cz).abs() == r || (y - cy).abs() == r;
                    let xs: [Option<(i64, i64)>; 2] = if face || r == 0 {
                        [Some((lo[0], hi[0])), None]
                    } else {
                        [(cx - r >= 0).then_some((cx - r, cx - r)), (cx + r < self.dims[0] as i64).then_some((cx + r, cx + r))]
                    };
                    for (x0, x1) in xs.into_iter().flatten() {
                        let row = self.flat([0, y as usize, z as usize]);
                        let (a, b) = (self.starts[row + x0 as usize], self.starts[row + x1 as usize + 1]);
                        for &i in &self.order[a..b] {
                            let d = (self.points[i] - q).norm_squared();
                            if best.is_none_or(|b| d < b.1 || (d == b.1 && i < b.0)) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
            if let Some((_, d)) = best {
                // Unvisited cells lie beyond the searched box; stop once the
                // best match is nearer than every face of it.
                let mut reach = f64::INFINITY;
                for i in 0..3 {
                    if lo[i] > 0 {
                        reach = reach.min(q[i] - (self.origin[i] + lo[i] as f64 * self.cell));
                    }
                    if hi[i] < self.dims[i] as i64 - 1 {
                        reach = reach.min(self.origin[i] + (hi[i] + 1) as f64 * self.cell - q[i]);
                    }
                }
                if reach == f64::INFINITY || (reach > 0.0 && d <= reach * reach) {
                    break;
                }
            }
        }
        best
    }
}

/// Data point matched to its nearest model point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub model: usize,
    pub data: usize,
    pub distance_sq: f64,
}

/// Nearest-model correspondences for every data point, trimmed to the best
/// `1 − trim` fraction and returned in data order.
pub fn correspond(model_world: &[Vec3], data: &[Vec3], cell: f64, trim: f64) -> Vec<Correspondence> {
    correspond_grid(&NearestGrid::new(model_world, cell), data.iter().copied(), trim)
}

/// As [`correspond`], against a prebuilt grid with queries already in the grid's frame.
fn correspond_grid(grid: &NearestGrid, queries: impl Iterator<Item = Vec3>, trim: f64) -> Vec<Correspondence> {
    let mut all: Vec<Correspondence> = queries
        .enumerate()
        .filter_map(|(i, p)| grid.nearest(&p).map(|(m, d)| Correspondence { model: m, data: i, distance_sq: d }))
        .collect();
    let keep = keep_count(all.len(), trim);
    if keep < all.len() {
        all.select_nth_unstable_by(keep - 1, |a, b| a.distance_sq.total_cmp(&b.distance_sq).then(a.data.cmp(&b.data)));
        all.truncate(keep);
        all.sort_by_key(|c| c.data);
    }
    all
}

fn keep_count(n: usize, trim: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let drop = math::floor(n as f64 * trim) as usize;
    (n - drop).max(1)
}

/// Rotation `R` maximizing `Σ tᵢ · R sᵢ` (Kabsch, with reflection guard).
fn kabsch_rotation(h: &Mat3) -> Mat3 {
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let v = vt.transpose();
    let d = (v * u.transpose()).determinant();
    let s = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    v * s * u.transpose()
}

/// Closed-form rigid transform minimizing `Σ ‖T sᵢ − tᵢ‖²`. With an anchor
/// the transform is restricted to rotations fixing that point.
pub fn best_rigid(source: &[Vec3], target: &[Vec3], anchor: Option<&Vec3>) -> Option<RigidTransform> {
    if source.is_empty() || source.len() != target.len() {
        return None;
    }
    let n = source.len() as f64;
    let (cs, ct) = match anchor {
        Some(a) => (*a, *a),
        None => (source.iter().sum::<Vec3>() / n, target.iter().sum::<Vec3>() / n),
    };
    let mut h = Mat3::zeros();
    for (s, t) in source.iter().zip(target) {
        h += (s - cs) * (t - ct).transpose();
    }
    if h.norm() < 1e-18 {
        return None;
    }
    let r = kabsch_rotation(&h);
    Some(RigidTransform::from_parts(r, ct - r * cs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcpFlag {
    EmptyCloud,
    DegenerateCorrespondence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Final model → world transform.
    pub transform: RigidTransform,
    pub iterations: usize,
    /// Trimmed RMS point-to-model distance in meters.
    pub residual: f64,
    pub converged: bool,
    pub flag: Option<IcpFlag>,
    /// Trimmed mean squared residual after each accepted iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Correspondences are searched in the model frame so the model grid is built once.
fn trimmed_mse(grid: &NearestGrid, t: &RigidTransform, data: &[Vec3], params: &IcpParams) -> (f64, Vec<Correspondence>) {
    let to_model = t.inverse();
    let c = correspond_grid(grid, data.iter().map(|p| to_model.apply(p)), params.trim);
    let mse = c.iter().map(|c| c.distance_sq).sum::<f64>() / c.len().max(1) as f64;
    (mse, c)
}

/// ICP of `model` (in its own frame) against world-frame `data`, starting at
/// `init`. An anchor restricts each update to rotation about that point.
pub fn icp_register(model: &[Vec3], data: &[Vec3], init: RigidTransform, anchor: Option<Vec3>, params: &IcpParams) -> IcpResult {
    let fail = |flag| IcpResult { transform: init, iterations: 0, residual: f64::NAN, converged: false, flag: Some(flag), history: Vec::new() };
    if data.is_empty() || model.is_empty() {
        return fail(IcpFlag::EmptyCloud);
    }
    let mean = data.iter().sum::<Vec3>() / data.len() as f64;
    if data.iter().all(|p| (p - mean).norm() < 1e-9) {
        return fail(IcpFlag::DegenerateCorrespondence);
    }
    let grid = NearestGrid::new(model, params.grid_cell);
    let mut t = init;
    let (mut mse, mut corr) = trimmed_mse(&grid, &t, data, params);
    let mut history = vec![mse];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        let source: Vec<Vec3> = corr.iter().map(|c| t.apply(&model[c.model])).collect();
        let target: Vec<Vec3> = corr.iter().map(|c| data[c.data]).collect();
        let Some(step) = best_rigid(&source, &target, anchor.as_ref()) else { break };
        let candidate = step.compose(&t);
        let (next_mse, next_corr) = trimmed_mse(&grid, &candidate, data, params);
        iterations += 1;
        if next_mse > mse {
            converged = true;
            break;
        }
        let change = math::sqrt(mse) - math::sqrt(next_mse);
        t = candidate;
        mse = next_mse;
        corr = next_corr;
        history.push(mse);
        if change < params.tolerance {
            converged = true;
            break;
        }
    }
    IcpResult { transform: t, iterations, residual: math::sqrt(mse), converged, flag: None, history }
}

/// Transform placing the canonical model (base at origin, axis +z) at `base`
/// with its axis along `axis`; `x_hint` fixes the spin when given.
pub fn cylinder_pose(base: &Vec3, axis: &Vec3, x_hint: Option<&Vec3>) -> RigidTransform {
    let z = axis.normalize();
    let hint = x_hint.copied().unwrap_or_else(|| any_perpendicular(&z));
    let mut x = hint - z * hint.dot(&z);
    if x.norm() < 1e-9 {
        x = any_perpendicular(&z);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    RigidTransform::from_parts(Mat3::from_columns(&[x, y, z]), *base)
}

/// Outcome of registering one part.
#[derive(Debug, Clone, PartialEq)]
pub enum PartOutcome {
    /// Not in the active tree.
    Inactive,
    /// Supplementary node; state kept from keypoints.
    Supplemented,
    Registered(IcpResult),
    /// No points; the initialized state is kept.
    EmptyCloud,
    /// Points collapsed to a single location; the initialized state is kept.
    Degenerate,
    /// Neither keypoints, points, nor a previous estimate could place the part.
    Unplaced,
}

/// Initial axis endpoint for a non-root part from fused keypoints.
fn keypoint_target(part: KeypartId, keypoints: &KeypointPositions) -> Option<Vec3> {
    match part {
        KeypartId::Torso => None,
        KeypartId::Head => {
            let face: Vec<Vec3> = (0..5).filter_map(|i| keypoints[i]).collect();
            (!face.is_empty()).then(|| face.iter().sum::<Vec3>() / face.len() as f64)
        }
        _ => keypoints[part.distal_keypoint().unwrap().index()],
    }
}

/// Surface samples of every part's closed cylinder in its local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PartModels {
    models: [Vec<Vec3>; KeypartId::COUNT],
}

impl PartModels {
    pub fn new(dims: &BodyDimensions, spacing: f64) -> Self {
        Self {
            models: KeypartId::ALL.map(|p| {
                let d = dims.part(p);
                let n = model_size(d.radius, d.height, spacing);
                let mut pts = sample_cylinder(d.radius, d.height, n);
                pts.extend(sample_caps(d.radius, d.height, (n as f64 * d.radius / (2.0 * d.height)) as usize));
                pts
            }),
        }
    }

    pub fn get(&self, part: KeypartId) -> &[Vec3] {
        &self.models[part.index()]
    }
}

/// Registers every active part parents-first. Each part starts from its
/// keypoints (falling back to the cloud, then to `previous`), non-root parts
/// are anchored at their parent's joint, and supplemented parts skip ICP.
pub fn register_tree(
    mut tree: BodyTree,
    clouds: &[Vec<Vec3>; KeypartId::COUNT],
    previous: Option<&BodyTree>,
    models: &PartModels,
    params: &IcpParams,
) -> (BodyTree, [PartOutcome; KeypartId::COUNT]) {
    let mut outcomes: [PartOutcome; KeypartId::COUNT] = core::array::from_fn(|_| PartOutcome::Inactive);
    let dims = *tree.dims();
    let keypoints = *tree.keypoints();
    let order: Vec<KeypartId> = tree.traversal().collect();
    for part in order {
        let node = *tree.node(part);
        let cloud = &clouds[part.index()];
        if node.supplemented {
            if part != KeypartId::Torso {
                if let (Some(s), Some(anchor), Some(pf)) =
                    (node.state, tree.parent_joint(part), part.parent().and_then(|p| tree.state(p)).map(|s| *s.frame()))
                {
                    tree.set_state(part, Some(KeypartState::articulated(&dims, part, anchor, s.axis(), Some(&pf))));
                }
            }
            outcomes[part.index()] = PartOutcome::Supplemented;
            continue;
        }
        let d = dims.part(part);
        let model = models.get(part);
        let prev = previous.and_then(|p| p.state(part)).copied();
        if part == KeypartId::Torso {
            let init = torso_from_anchors(&dims, &keypoints)
                .or(prev)
                .or_else(|| {
                    (!cloud.is_empty()).then(|| {
                        let c = cloud.iter().sum::<Vec3>() / cloud.len() as f64;
                        KeypartState::torso_from_axes(&dims, c, Vec3::z(), Vec3::x())
                    })
                });
            let Some(init) = init else {
                tree.set_state(part, None);
                outcomes[part.index()] = PartOutcome::Unplaced;
                continue;
            };
            let right = init.frame().column(0).into_owned();
            let pose = cylinder_pose(&init.cylinder().base(), &init.axis(), Some(&right));
            let result = icp_register(model, cloud, pose, None, params);
            let state = match result.flag {
                None => {
                    let base = result.transform.apply(&Vec3::zeros());
                    let axis = result.transform.apply_vector(&Vec3::z());
                    let shoulders = keypoints[5].zip(keypoints[6]).map(|(l, r)| r - l);
                    KeypartState::torso_from_axes(&dims, base + axis * (d.height / 2.0), axis, shoulders.unwrap_or(right))
                }
                Some(_) => init,
            };
            tree.set_state(part, Some(state));
            outcomes[part.index()] = outcome_of(result);
            continue;
        }
        let parent_frame = part.parent().and_then(|p| tree.state(p)).map(|s| *s.frame());
        let (Some(anchor), Some(parent_frame)) = (tree.parent_joint(part), parent_frame) else {
            tree.set_state(part, None);
            outcomes[part.index()] = PartOutcome::Unplaced;
            continue;
        };
        let target = keypoint_target(part, &keypoints)
            .filter(|t| (t - anchor).norm() > 1e-6)
            .map(|t| t - anchor)
            .or_else(|| prev.map(|s| s.axis()))
            .or_else(|| {
                let c = (!cloud.is_empty()).then(|| cloud.iter().sum::<Vec3>() / cloud.len() as f64)?;
                ((c - anchor).norm() > 1e-6).then(|| c - anchor)
            });
        let Some(axis0) = target else {
            tree.set_state(part, None);
            outcomes[part.index()] = PartOutcome::Unplaced;
            continue;
        };
        let pose = cylinder_pose(&anchor, &axis0, None);
        let result = icp_register(model, cloud, pose, Some(anchor), params);
        let axis = match result.flag {
            None => result.transform.apply_vector(&Vec3::z()),
            Some(_) => axis0,
        };
        tree.set_state(part, Some(KeypartState::articulated(&dims, part, anchor, axis, Some(&parent_frame))));
        outcomes[part.index()] = outcome_of(result);
    }
    (tree.enforce_joint_constraints(), outcomes)
}

fn outcome_of(result: IcpResult) -> PartOutcome {
    match result.flag {
        None => PartOutcome::Registered(result),
        Some(IcpFlag::EmptyCloud) => PartOutcome::EmptyCloud,
        Some(IcpFlag::DegenerateCorrespondence) => PartOutcome::Degenerate,
    }
}
