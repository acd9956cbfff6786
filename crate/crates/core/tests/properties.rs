use proptest::prelude::*;

use ris_handover::geometry::{
    angle_between, reflect_point_across_plane, segment_intersects_cylinder, OrientedPlane, Segment3, Vec3,
    VerticalCylinder,
};
use ris_handover::handover::{
    blockage_probability, blockage_probability_threshold, electrical_current, step, AssignStrategy, BlockageRule,
    Decision, HandoverConfig, HandoverState, StepObservation,
};
use ris_handover::mobility::{
    blockage_degree, blockage_indicator, link_clear_of, Footprint, SampleDisc, WaypointTrack,
};
use ris_handover::ocdma::{despread, estimate_ap_powers, hadamard_codebook, spread};
use ris_handover::optics::{
    achievable_rate, combined_rate, compute_mirror_angles, lambertian_gain, mirror_element_gain, total_gain,
    AccessPoint, Receiver,
};
use ris_handover::ris_assign::{brute_force_assign, coordinate_ascent, AnnModel, ChannelContext};
use ris_handover::simkit::world::ris_elements;
use ris_handover::simkit::ScenarioConfig;

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn point() -> impl Strategy<Value = Vec3> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn direction() -> impl Strategy<Value = Vec3> {
    point().prop_filter("nonzero", |v| v.norm() > 1e-3)
}

fn ap_at(position: Vec3) -> AccessPoint {
    AccessPoint {
        id: 1,
        position,
        power: 3.0,
        lambertian_order: 1.0,
        code_index: 1,
    }
}

fn receiver(position: Vec3, fov_deg: f64) -> Receiver {
    Receiver {
        position,
        area: 1e-4,
        fov: fov_deg.to_radians(),
        responsivity: 0.5,
        filter_gain: 1.0,
        concentrator_gain: 1.0,
    }
}

proptest! {
    #[test]
    fn reflection_is_an_involution(p in point(), q in point(), n in direction()) {
        let plane = OrientedPlane::new(q, n).unwrap();
        let back = reflect_point_across_plane(reflect_point_across_plane(p, &plane), &plane);
        prop_assert!(back.distance(p) <= 1e-12 * (1.0 + p.norm() + q.norm()));
    }

    #[test]
    fn shrinking_a_cylinder_never_creates_a_hit(
        a in point(), b in point(), cx in coord(), cy in coord(),
        r in 0.01..3.0f64, shrink in 0.0..1.0f64, h in 0.1..5.0f64,
    ) {
        prop_assume!(a.distance(b) > 1e-6);
        let seg = Segment3::new(a, b).unwrap();
        let big = VerticalCylinder::new(cx, cy, r, h).unwrap();
        let small = VerticalCylinder::new(cx, cy, r * shrink.max(1e-3), h).unwrap();
        if segment_intersects_cylinder(&seg, &small) {
            prop_assert!(segment_intersects_cylinder(&seg, &big));
        }
    }

    #[test]
    fn angle_is_symmetric_and_scale_free(u in direction(), v in direction(), s in 0.01..100.0f64) {
        let a = angle_between(u, v).unwrap();
        prop_assert_eq!(a, angle_between(v, u).unwrap());
        prop_assert!((angle_between(u * s, v).unwrap() - a).abs() <= 1e-12);
        prop_assert!((angle_between(u, v * s).unwrap() - a).abs() <= 1e-12);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&a));
    }

    #[test]
    fn total_gain_is_additive(
        indicator: bool, los in 0.0..1e-5f64,
        gains in prop::collection::vec(0.0..1e-6f64, 0..16),
    ) {
        let whole = total_gain(indicator, los, &gains);
        let by_hand = if indicator { los } else { 0.0 } + gains.iter().sum::<f64>();
        prop_assert!((whole - by_hand).abs() <= 1e-12 * whole.max(f64::MIN_POSITIVE));
        prop_assert_eq!(total_gain(false, los, &[]), 0.0);
    }

    #[test]
    fn gain_is_zero_outside_the_fov(
        x in -4.0..4.0f64, y in -4.0..4.0f64, dz in 0.2..3.0f64, fov in 10.0..89.0f64,
    ) {
        let ap = ap_at(Vec3::new(0.0, 0.0, dz));
        let rx = receiver(Vec3::new(x, y, 0.0), fov);
        let incidence = angle_between(Vec3::UP, ap.position - rx.position).unwrap();
        let h = lambertian_gain(&ap, &rx).unwrap();
        if incidence > rx.fov {
            prop_assert_eq!(h, 0.0);
        } else {
            prop_assert!(h > 0.0);
        }
    }

    #[test]
    fn one_ap_combined_rate_is_the_plain_rate(b in 1.0..1e9f64, snr in 0.0..1e6f64) {
        prop_assert_eq!(combined_rate(b, &[snr]).unwrap(), achievable_rate(b, snr));
    }

    #[test]
    fn steered_mirror_is_near_maximal(
        ax in 0.5..4.5f64, ay in 0.5..4.5f64, rx_x in 0.3..4.7f64, rx_y in 0.3..4.7f64,
        k in 0usize..4,
        perturb in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 100),
    ) {
        let cfg = ScenarioConfig::default();
        let elem = ris_elements(&cfg)[k].clone();
        let ap = ap_at(Vec3::new(ax, ay, 3.0));
        let rx = receiver(Vec3::new(rx_x, rx_y, 0.85), 85.0);
        let s = compute_mirror_angles(ap.position, &elem, rx.position).unwrap();
        let best = mirror_element_gain(&ap, &elem.with_angles(s.yaw, s.roll), &rx, &[], false);
        prop_assume!(!s.saturated);
        for (u, v) in perturb {
            let other = elem.with_angles(u * elem.max_yaw, v * elem.max_roll);
            let g = mirror_element_gain(&ap, &other, &rx, &[], false);
            prop_assert!(g <= best * 1.05, "perturbed {g} vs steered {best}");
        }
    }

    #[test]
    fn despreading_recovers_each_bit(
        log_sf in 1u32..5, row_pick in 0usize..1000, dc in 1.0..4.0f64,
        bits in prop::collection::vec(any::<bool>(), 1..8),
    ) {
        let sf = 1usize << log_sf;
        let cb = hadamard_codebook(sf).unwrap();
        let code = cb.row(1 + row_pick % (sf - 1)).unwrap();
        let frame = spread(&bits, code, dc).unwrap();
        prop_assert!(frame.chips.iter().all(|&c| c >= 0.0));
        let corr = despread(&frame.chips, code).unwrap();
        for (c, &b) in corr.iter().zip(&bits) {
            let want = if b { sf as f64 } else { -(sf as f64) };
            prop_assert!((c - want).abs() <= 1e-12 * dc * sf as f64, "{c} vs {want}");
        }
    }

    #[test]
    fn superposition_is_interference_free(
        log_sf in 1u32..5,
        quarters in prop::collection::vec(0u32..64, 15),
        bits in prop::collection::vec(any::<bool>(), 15),
    ) {
        let sf = 1usize << log_sf;
        let cb = hadamard_codebook(sf).unwrap();
        let amps: Vec<f64> = quarters[..sf - 1].iter().map(|&q| f64::from(q) / 4.0).collect();
        let mut received = vec![0.0; sf];
        for (u, &a) in amps.iter().enumerate() {
            let frame = spread(&[bits[u]], cb.row(u + 1).unwrap(), 1.0).unwrap();
            for (r, c) in received.iter_mut().zip(&frame.chips) {
                *r += a * c;
            }
        }
        let est = estimate_ap_powers(&received, &cb).unwrap();
        prop_assert_eq!(&est[1..], &amps[..]);
    }

    #[test]
    fn blockage_degree_matches_its_sample_rays(
        rx_x in 0.5..4.5f64, rx_y in 0.5..4.5f64,
        bodies in prop::collection::vec((0.0..5.0f64, 0.0..5.0f64, 0.05..0.4f64), 0..5),
    ) {
        let ap = Vec3::new(2.5, 2.5, 3.0);
        let rx = Vec3::new(rx_x, rx_y, 0.85);
        let bodies: Vec<VerticalCylinder> = bodies
            .into_iter()
            .map(|(x, y, r)| VerticalCylinder::new(x, y, r, 1.8).unwrap())
            .collect();
        let disc = SampleDisc::new(16, 0.05).unwrap();
        let xi = blockage_degree(ap, rx, &bodies, &disc);
        prop_assert!((0.0..=1.0).contains(&xi));
        let clear = disc.points(rx).filter(|&p| blockage_indicator(ap, p, &bodies)).count();
        prop_assert_eq!(xi == 0.0, clear == disc.len());
        prop_assert_eq!(xi == 1.0, clear == 0);

        let per_blocker = bodies.iter().all(|b| link_clear_of(ap, rx, b));
        prop_assert_eq!(blockage_indicator(ap, rx, &bodies), per_blocker);
    }

    #[test]
    fn waypoint_tracks_are_seed_deterministic(seed: u64, speed in 0.1..2.0f64) {
        let area = Footprint::inset(5.0, 5.0, 0.3).unwrap();
        let mut a = WaypointTrack::new(area, speed, seed).unwrap();
        let mut b = WaypointTrack::new(area, speed, seed).unwrap();
        for k in 0..200 {
            let t = f64::from(k) * 0.37;
            let p = a.position_at(t);
            prop_assert_eq!(p, b.position_at(t));
            prop_assert!(area.contains(p));
        }
    }

    #[test]
    fn blockage_rules_agree_on_binary_degrees(
        blocked: bool, gain in 1e-7..1e-5f64, power in 0.1..10.0f64, r in 0.1..1.0f64, frac in 0.01..0.99f64,
    ) {
        let xi = if blocked { 1.0 } else { 0.0 };
        let threshold = frac * r * gain * power;
        let current = electrical_current(xi, r, gain, power);
        prop_assert_eq!(blockage_probability(xi), blockage_probability_threshold(current, threshold));
    }
}

fn observation_strategy() -> impl Strategy<Value = StepObservation> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..1.0f64], n),
            prop::collection::vec(1e-7..5e-6f64, n),
            prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0..1e-6f64], m), n),
            prop::collection::vec(1.0..4.0f64, n),
        )
            .prop_map(|(degrees, los_gain, ris, distance)| {
                let los = degrees
                    .iter()
                    .zip(&los_gain)
                    .map(|(&d, &h)| if d >= 0.5 { 0.0 } else { h })
                    .collect();
                let n = degrees.len();
                StepObservation {
                    degrees,
                    los_gain,
                    power: vec![3.0; n],
                    responsivity: 0.5,
                    rx_xy: (2.0, 2.0),
                    ctx: ChannelContext {
                        los,
                        ris,
                        snr_per_gain_sq: vec![2.25e15; n],
                        distance,
                        bandwidth: 20e6,
                    },
                }
            })
    })
}

fn handover_cfg(ris: bool) -> HandoverConfig {
    HandoverConfig {
        current_threshold: 1e-7,
        signaling_bits: 1000.0,
        ris_enabled: ris,
        rule: BlockageRule::BinaryApprox,
    }
}

proptest! {
    #[test]
    fn steps_are_total_and_ris_dominates(
        obs in prop::collection::vec(observation_strategy(), 1..12),
    ) {
        let n = obs[0].degrees.len();
        let m = obs[0].ctx.element_count();
        let obs: Vec<_> = obs
            .into_iter()
            .filter(|o| o.degrees.len() == n && o.ctx.element_count() == m)
            .collect();
        let strategy = AssignStrategy::BruteForce;
        let (mut with, mut without) = (HandoverState::new(), HandoverState::new());
        for o in &obs {
            let before = (with.n_hard, with.n_soft, with.hole_steps);
            let a = step(&mut with, o, &handover_cfg(true), &strategy).unwrap();
            let b = step(&mut without, o, &handover_cfg(false), &strategy).unwrap();
            prop_assert!(a.rate >= b.rate);
            let moved = (with.n_hard - before.0) + (with.n_soft - before.1) + (with.hole_steps - before.2);
            prop_assert!(moved <= 1);
            prop_assert_eq!(moved == 1, a.is_execution() || a.decision == Decision::Hole);
            let reachable = o.ctx.ris.iter().flatten().any(|&g| g > 0.0);
            if reachable {
                prop_assert_ne!(&a.decision, &Decision::Hole);
            }
            if matches!(a.decision, Decision::Soft(_)) {
                for &id in &a.serving {
                    prop_assert!(a.rate >= o.ctx.rate(&[id], &a.assignment));
                }
            }
        }
        prop_assert_eq!(with.steps as usize, obs.len());
    }

    #[test]
    fn brute_force_beats_random_assignments(
        o in observation_strategy(),
        picks in prop::collection::vec(prop::collection::vec(0usize..3, 4), 100),
    ) {
        let candidates: Vec<usize> = (1..=o.ctx.ap_count()).collect();
        let best = o.ctx.rate(&candidates, &brute_force_assign(&o.ctx, &candidates).unwrap());
        for p in picks {
            let a: Vec<usize> = p[..o.ctx.element_count()].iter().map(|&k| candidates[k % candidates.len()]).collect();
            prop_assert!(o.ctx.rate(&candidates, &a) <= best);
        }
    }

    #[test]
    fn coordinate_ascent_is_monotone(o in observation_strategy()) {
        let candidates: Vec<usize> = (1..=o.ctx.ap_count()).collect();
        let out = coordinate_ascent(&o.ctx, &candidates, 20).unwrap();
        prop_assert!(out.history.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(*out.history.last().unwrap(), o.ctx.snr_sum(&candidates, &out.assignment));
    }

    #[test]
    fn ann_heads_are_distributions(
        seed: u64, n in 1usize..6, m in 1usize..5, x in 0.0..5.0f64, y in 0.0..5.0f64,
        xi in prop::collection::vec(0.0..=1.0f64, 6),
    ) {
        let model = AnnModel::new(n, m, &[16, 8], (5.0, 5.0), seed).unwrap();
        let heads = model.forward(&xi[..n], x, y).unwrap();
        prop_assert_eq!(heads.len(), m);
        for p in heads {
            prop_assert_eq!(p.len(), n);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
