//! Per-frame artifacts: depth and mask images as PGM, clouds and keypoints
//! as ASCII `x y z` lines, and the body tree as CSV.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use mvsense_core::body::{KeypartId, KeypointId};
use mvsense_core::geometry::Vec3;
use mvsense_core::image::DepthImage;
use mvsense_core::keypart::MaskImage;
use mvsense_core::registration::PartOutcome;
use mvsense_core::trial::FrameRecord;

/// One point per line, `x y z` in meters.
pub fn xyz(points: &[Vec3]) -> String {
    let mut s = String::with_capacity(points.len() * 32);
    for p in points {
        let _ = writeln!(s, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
    }
    s
}

/// Parses what [`xyz`] writes; blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str) -> Result<Vec<Vec3>, String> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = l.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|e| format!("line {}: {e}", i + 1))?;
        if v.len() != 3 {
            return Err(format!("line {}: expected 3 coordinates", i + 1));
        }
        out.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

/// Binary 16-bit PGM of depth in millimeters; invalid pixels are 0.
pub fn depth_pgm(depth: &DepthImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", depth.width(), depth.height()).into_bytes();
    for d in depth.data() {
        let mm = if *d > 0.0 && d.is_finite() { (d * 1000.0).round().min(65535.0) as u16 } else { 0 };
        out.extend_from_slice(&mm.to_be_bytes());
    }
    out
}

/// Binary PGM of mask labels: 0 for background, part index + 1 otherwise.
pub fn mask_pgm(mask: &MaskImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", mask.width(), mask.height(), KeypartId::COUNT).into_bytes();
    out.extend(mask.data().iter().map(|l| l.map_or(0, |l| l.part.index() as u8 + 1)));
    out
}

fn outcome(o: &PartOutcome) -> &'static str {
    match o {
        PartOutcome::Inactive => "inactive",
        PartOutcome::Supplemented => "supplemented",
        PartOutcome::Registered(_) => "registered",
        PartOutcome::EmptyCloud => "empty_cloud",
        PartOutcome::Degenerate => "degenerate",
        PartOutcome::Unplaced => "unplaced",
    }
}

fn tree_csv(rec: &FrameRecord) -> String {
    let mut s = String::from("part,truth,predicted,outcome,icp_iterations,icp_residual_m,base_x,base_y,base_z,axis_x,axis_y,axis_z,height,radius\n");
    for part in KeypartId::ALL {
        let m = &rec.metrics.parts[part.index()];
        let o = &rec.result.outcomes[part.index()];
        let (its, res) = match o {
            PartOutcome::Registered(r) => (r.iterations.to_string(), format!("{:.6}", r.residual)),
            _ => (String::new(), String::new()),
        };
        let _ = write!(s, "{},{},{},{},{its},{res}", part.code(), u8::from(m.truth), u8::from(m.predicted), outcome(o));
        match rec.result.tree.state(part) {
            Some(st) => {
                let c = st.cylinder();
                let (b, a) = (c.base(), c.axis());
                let _ = writeln!(
                    s,
                    ",{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    b.x,
                    b.y,
                    b.z,
                    a.x,
                    a.y,
                    a.z,
                    c.height(),
                    c.radius()
                );
            }
            None => s.push_str(",,,,,,,,\n"),
        }
    }
    s
}

fn keypoints_csv(rec: &FrameRecord) -> String {
    let mut s = String::from("keypoint,x,y,z,confidence,cameras,true_x,true_y,true_z\n");
    for kp in KeypointId::all() {
        let t = rec.world.human.keypoints[kp.index()];
        match &rec.result.fused[kp.index()] {
            Some(f) => {
                let p = f.position_world;
                let _ = write!(s, "{},{:.6},{:.6},{:.6},{:.6},{}", kp.name(), p.x, p.y, p.z, f.confidence, f.cameras);
            }
            None => {
                let _ = write!(s, "{},,,,,0", kp.name());
            }
        }
        let _ = writeln!(s, ",{:.6},{:.6},{:.6}", t.x, t.y, t.z);
    }
    s
}

/// Writes every artifact of one frame into `dir`, creating it.
pub fn write_frame(rec: &FrameRecord, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for f in &rec.inputs {
        fs::write(dir.join(format!("depth_cam{}.pgm", f.camera)), depth_pgm(&f.depth))?;
    }
    for (f, mask) in rec.inputs.iter().zip(&rec.result.masks) {
        fs::write(dir.join(format!("mask_cam{}.pgm", f.camera)), mask_pgm(mask))?;
    }
    for part in KeypartId::ALL {
        let pts: Vec<Vec3> = rec.result.clouds.iter().filter(|c| c.part == part).flat_map(|c| c.points.iter().copied()).collect();
        if !pts.is_empty() {
            fs::write(dir.join(format!("cloud_{}.xyz", part.code())), xyz(&pts))?;
        }
    }
    let fused: Vec<Vec3> = rec.result.fused.iter().flatten().map(|f| f.position_world).collect();
    fs::write(dir.join("keypoints.xyz"), xyz(&fused))?;
    fs::write(dir.join("keypoints.csv"), keypoints_csv(rec))?;
    fs::write(dir.join("tree.csv"), tree_csv(rec))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_round_trips_to_micrometers() {
        let pts = vec![Vec3::new(1.0, -2.5, 0.125), Vec3::new(1e-7, 3.333333333, -0.0)];
        let back = parse_xyz(&xyz(&pts)).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in pts.iter().zip(&back) {
            assert!((a - b).norm() < 1e-6);
        }
        assert!(parse_xyz("1 2\n").is_err());
        assert!(parse_xyz("# header\n\n1 2 3\n").unwrap().len() == 1);
    }

    #[test]
    fn depth_pgm_layout() {
        let mut d = DepthImage::empty(3, 2);
        *d.get_mut(1, 0).unwrap() = 1.2345;
        let bytes = depth_pgm(&d);
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 12);
        assert_eq!(u16::from_be_bytes([px[2], px[3]]), 1235);
        assert_eq!(u16::from_be_bytes([px[0], px[1]]), 0);
    }
}
