use mvsense::script::{emit, parse};
use mvsense_core::scenario::{template, HumanWaypoint, RobotKeyframe, TEMPLATE_NAMES};
use mvsense_core::geometry::Vec3;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_scenarios_parse_back_identically(
        which in 0..TEMPLATE_NAMES.len(),
        seed in any::<u64>(),
        duration in 0.0f64..60.0,
        rate in 1.0f64..60.0,
        sigma in 0.0f64..0.05,
        eye in vec3(5.0),
        focal in 50.0f64..800.0,
        angles in prop::collection::vec(-3.0f64..3.0, 18),
        torso in vec3(3.0),
        joints in prop::collection::vec(vec3(2.0), 1..5),
        name in "[a-z][a-z0-9_]{0,12}",
    ) {
        let mut s = template(TEMPLATE_NAMES[which]).unwrap();
        s.name = name;
        s.seed = seed;
        s.duration = duration;
        s.frame_rate = rate;
        s.noise.depth_sigma = sigma;
        s.cameras[0].eye = eye + Vec3::new(0.0, 0.0, 10.0);
        s.cameras[0].focal = focal;
        let mut wp = s.human[0].pose;
        wp.torso_position = torso;
        for (i, a) in angles.chunks(2).enumerate() {
            wp.joint_angles[i] = [a[0], a[1]];
        }
        let last = s.human.last().unwrap().time;
        s.human.push(HumanWaypoint { time: last + 1.0, pose: wp });
        let last = s.robot.keyframes.last().unwrap().time;
        let mut kf = joints;
        kf.resize(s.robot.radii.len() + 1, Vec3::zeros());
        s.robot.keyframes.push(RobotKeyframe { time: last + 0.5, joints: kf });

        let text = emit(&s);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(emit(&back), text);
    }
}
