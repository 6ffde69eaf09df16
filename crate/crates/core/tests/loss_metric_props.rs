use panolayout_core::fusion::LayoutSolid;
use panolayout_core::geometry::SampleGrid;
use panolayout_core::loss::{
    correspondence_loss, covis_loss, cycle_losses, layout_loss, total_loss, CyclicMode, LossComponents, LossWeights,
};
use panolayout_core::math::Vec2;
use panolayout_core::metrics::{angular_errors, iou_2d, iou_3d, maa};
use panolayout_core::polygon::{Footprint, Ring};
use panolayout_core::pose::PlanarPose;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn bce_term(c: f64, t: f64, alpha: f64) -> f64 {
    let c = if c < 1e-7 { 1e-7 } else if c > 1.0 - 1e-7 { 1.0 - 1e-7 } else { c };
    -(alpha * t * c.ln() + (1.0 - t) * (1.0 - c).ln())
}

fn cyclic(o: f64, t: f64, one_sided: bool) -> f64 {
    let d = (o - t).abs();
    if one_sided { d.min((1.0 - t + o).abs()) } else { d.min(1.0 - d) }
}

#[test]
fn losses_match_per_element_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let m = rng.random_range(1..300);
        let maps: Vec<Vec<f64>> = (0..8).map(|_| uniform(&mut rng, m, 0.1, 10.0)).collect();
        let mut want = 0.0;
        for k in 0..4 {
            for i in 0..m {
                want += (maps[k][i] - maps[k + 4][i]).abs();
            }
        }
        want /= m as f64;
        let got = layout_loss([&maps[0], &maps[1], &maps[2], &maps[3]], [&maps[4], &maps[5], &maps[6], &maps[7]]).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));

        let alpha = rng.random_range(0.01..2.0);
        let c = uniform(&mut rng, m, 0.0, 1.0);
        let t: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.3) { rng.random_range(0.0..1.0) } else { rng.random_range(0..2) as f64 }).collect();
        let mut want = 0.0;
        for i in 0..m {
            want += bce_term(c[i], t[i], alpha);
        }
        want /= m as f64;
        assert!((covis_loss(&c, &t, alpha).unwrap() - want).abs() <= 1e-12 * want.max(1.0));

        let o = uniform(&mut rng, m, 0.0, 1.0);
        let ob = uniform(&mut rng, m, 0.0, 1.0);
        for (mode, one_sided) in [(CyclicMode::Symmetric, false), (CyclicMode::OneSided, true)] {
            let mut want = 0.0;
            for i in 0..m {
                if t[i] >= 0.5 {
                    want += cyclic(o[i], ob[i], one_sided);
                }
            }
            want /= m as f64;
            assert!((correspondence_loss(&o, &ob, &t, mode).unwrap() - want).abs() <= 1e-12);
        }

        let grid = SampleGrid::new(m.max(4)).unwrap();
        let n = grid.len();
        let fwd = uniform(&mut rng, n, 0.0, 1.0);
        let fc = uniform(&mut rng, n, 0.0, 1.0);
        let gate = uniform(&mut rng, n, 0.0, 1.0);
        let (a, b) = cycle_losses(&fwd, &fc, &grid, &gate, alpha, CyclicMode::Symmetric).unwrap();
        let mut wa = 0.0;
        let mut wb = 0.0;
        for i in 0..n {
            if gate[i] >= 0.5 {
                wa += cyclic(fwd[i], i as f64 / n as f64, false);
            }
            wb += bce_term(fc[i], gate[i], alpha);
        }
        assert!((a - wa / n as f64).abs() <= 1e-12);
        assert!((b - wb / n as f64).abs() <= 1e-12 * (wb / n as f64).max(1.0));

        let comp = LossComponents {
            layout: rng.random(),
            correspondence: rng.random(),
            covisibility: rng.random(),
            cycle_correspondence: rng.random(),
            cycle_covisibility: rng.random(),
        };
        let w = LossWeights { lambda: [rng.random(), rng.random(), rng.random(), rng.random(), rng.random()], alpha };
        let want = comp.layout * w.lambda[0]
            + comp.correspondence * w.lambda[1]
            + comp.covisibility * w.lambda[2]
            + comp.cycle_correspondence * w.lambda[3]
            + comp.cycle_covisibility * w.lambda[4];
        assert!((total_loss(&comp, &w) - want).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn losses_vanish_at_truth_and_are_non_negative(
        g in prop::collection::vec(0.1..10.0f64, 4..64),
        p in prop::collection::vec(0.1..10.0f64, 64),
        t in prop::collection::vec(prop::bool::ANY, 64),
        o in prop::collection::vec(0.0..1.0f64, 64),
        shift in 0.0..1.0f64,
    ) {
        let m = g.len();
        let p = &p[..m];
        prop_assert_eq!(layout_loss([&g, &g, &g, &g], [&g, &g, &g, &g]).unwrap(), 0.0);
        prop_assert!(layout_loss([p, &g, p, &g], [&g, &g, &g, &g]).unwrap() >= 0.0);

        let bits: Vec<f64> = t[..m].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        prop_assert!(covis_loss(&bits, &bits, 0.1).unwrap() < 1e-6);
        let c: Vec<f64> = p.iter().map(|x| x / 10.0).collect();
        prop_assert!(covis_loss(&c, &bits, 0.1).unwrap() >= 0.0);

        let o = &o[..m];
        for mode in [CyclicMode::Symmetric, CyclicMode::OneSided] {
            prop_assert_eq!(correspondence_loss(o, o, &bits, mode).unwrap(), 0.0);
        }
        let ob: Vec<f64> = c.clone();
        let base = correspondence_loss(o, &ob, &bits, CyclicMode::Symmetric).unwrap();
        prop_assert!(base >= 0.0);
        let so: Vec<f64> = o.iter().map(|x| (x + shift).rem_euclid(1.0)).collect();
        let sob: Vec<f64> = ob.iter().map(|x| (x + shift).rem_euclid(1.0)).collect();
        let shifted = correspondence_loss(&so, &sob, &bits, CyclicMode::Symmetric).unwrap();
        prop_assert!((base - shifted).abs() < 1e-12);
    }
}

#[test]
fn finite_differences_match_subgradient_signs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-6;
    for _ in 0..20 {
        let m = 16;
        let pred: Vec<Vec<f64>> = (0..4).map(|_| uniform(&mut rng, m, 0.5, 5.0)).collect();
        let gt: Vec<Vec<f64>> = (0..4).map(|_| uniform(&mut rng, m, 0.5, 5.0)).collect();
        let eval = |p: &[Vec<f64>]| layout_loss([&p[0], &p[1], &p[2], &p[3]], [&gt[0], &gt[1], &gt[2], &gt[3]]).unwrap();
        for k in 0..4 {
            for i in 0..m {
                if (pred[k][i] - gt[k][i]).abs() < 10.0 * h {
                    continue;
                }
                let mut up = pred.clone();
                up[k][i] += h;
                let mut dn = pred.clone();
                dn[k][i] -= h;
                let fd = (eval(&up) - eval(&dn)) / (2.0 * h);
                let analytic = (pred[k][i] - gt[k][i]).signum() / m as f64;
                assert_eq!(fd.signum(), analytic.signum());
                assert!((fd - analytic).abs() < 1e-6);
            }
        }

        let alpha = 0.1;
        let c = uniform(&mut rng, m, 0.01, 0.99);
        let t = uniform(&mut rng, m, 0.0, 1.0);
        for i in 0..m {
            let mut up = c.clone();
            up[i] += h;
            let mut dn = c.clone();
            dn[i] -= h;
            let fd = (covis_loss(&up, &t, alpha).unwrap() - covis_loss(&dn, &t, alpha).unwrap()) / (2.0 * h);
            let analytic = -(alpha * t[i] / c[i] - (1.0 - t[i]) / (1.0 - c[i])) / m as f64;
            if analytic.abs() > 1e-6 {
                assert_eq!(fd.signum(), analytic.signum());
            }
        }
    }
}

fn star_solid(cx: f64, cz: f64, radii: &[f64], height: f64) -> LayoutSolid {
    let n = radii.len();
    let ring = Ring::new(
        radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                Vec2::new(cx + r * a.sin(), cz + r * a.cos())
            })
            .collect(),
    );
    LayoutSolid::new(Footprint::from_ring(ring), height).unwrap()
}

fn solid() -> impl Strategy<Value = LayoutSolid> {
    (-1.0..1.0f64, -1.0..1.0f64, prop::collection::vec(0.5..3.0f64, 3..10), 1.5..3.5f64)
        .prop_map(|(x, z, r, h)| star_solid(x, z, &r, h))
}

proptest! {
    #[test]
    fn iou_is_symmetric_and_rigidly_invariant(a in solid(), b in solid(), th in -3.1..3.1f64, tx in -5.0..5.0f64) {
        let ab = iou_2d(&a, &b).unwrap();
        prop_assert!((ab - iou_2d(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((iou_3d(&a, &b).unwrap() - iou_3d(&b, &a).unwrap()).abs() < 1e-12);
        let p = PlanarPose::new(th, Vec2::new(tx, 2.0 * tx));
        let mv = |s: &LayoutSolid| LayoutSolid { footprint: s.footprint.transformed(&p), height: s.height };
        prop_assert!((iou_2d(&mv(&a), &mv(&b)).unwrap() - ab).abs() < 1e-9);
        prop_assert!((iou_3d(&mv(&a), &mv(&b)).unwrap() - iou_3d(&a, &b).unwrap()).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn maa_is_monotone_and_matches_brute_force(errs in prop::collection::vec(prop_oneof![0.0..30.0f64, Just(f64::INFINITY)], 1..50)) {
        let mut prev = 0.0;
        for t in 1..=20u32 {
            let got = maa(&errs, t as f64).unwrap();
            let mut want = 0.0;
            for s in 1..=t {
                let mut hits = 0;
                for e in &errs {
                    if *e <= s as f64 {
                        hits += 1;
                    }
                }
                want += hits as f64 / errs.len() as f64;
            }
            want /= t as f64;
            prop_assert!((got - want).abs() < 1e-12);
            prop_assert!(got >= prev - 1e-12 || t == 1);
            prev = got;
        }
    }

    #[test]
    fn rotation_error_depends_only_on_relative_pose(
        a in -3.1..3.1f64, b in -3.1..3.1f64, x in -3.0..3.0f64, z in -3.0..3.0f64,
    ) {
        let est = PlanarPose::new(a, Vec2::new(x, z));
        let gt = PlanarPose::new(b, Vec2::new(z, x + 1.0));
        let direct = angular_errors(&est, &gt);
        let rel = angular_errors(&gt.inverse().compose(&est), &PlanarPose::IDENTITY);
        prop_assert!((direct.rot_err - rel.rot_err).abs() < 1e-9);
        prop_assert!((0.0..=180.0).contains(&direct.rot_err));
        prop_assert!((0.0..=180.0).contains(&direct.trans_ang_err));
    }
}
