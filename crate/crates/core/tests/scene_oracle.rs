use panolayout_core::geometry::{boundary_to_depth, depth_to_boundary, BoundaryKind, SampleGrid};
use panolayout_core::math::{Vec2, TAU};
use panolayout_core::scene::{
    cast_horizon_depth, correspond, generate_room, generate_scene, ground_truth_maps, Camera, Pano, RoomKind, RoomPolygon,
    RoomScene, RoomSpec, SceneSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum positive hit over every edge, solving `cam + s·d = a + r·(b − a)`
/// by Cramer's rule.
fn brute_force_depth(room: &[Vec2], cam: Vec2, heading: f64) -> f64 {
    let (dx, dz) = (heading.sin(), heading.cos());
    let mut best = f64::INFINITY;
    for k in 0..room.len() {
        let (a, b) = (room[k], room[(k + 1) % room.len()]);
        let (ex, ez) = (b.x - a.x, b.z - a.z);
        let (rx, rz) = (a.x - cam.x, a.z - cam.z);
        // | dx  -ex | |s|   |rx|
        // | dz  -ez | |r| = |rz|
        let det = dx * -ez - -ex * dz;
        if det.abs() < 1e-15 {
            continue;
        }
        let s = (rx * -ez - -ex * rz) / det;
        let r = (dx * rz - dz * rx) / det;
        if s > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&r) {
            best = best.min(s);
        }
    }
    best
}

fn random_room(rng: &mut ChaCha8Rng) -> RoomPolygon {
    let kinds = [RoomKind::Manhattan, RoomKind::Convex, RoomKind::Star, RoomKind::LShape];
    let spec = RoomSpec {
        vertex_budget: rng.random_range(4..14),
        extent: rng.random_range(2.0..10.0),
        kind: kinds[rng.random_range(0..kinds.len())],
        seed: rng.random(),
    };
    generate_room(&spec).unwrap()
}

fn interior_point(room: &RoomPolygon, rng: &mut ChaCha8Rng) -> Vec2 {
    let v = room.vertices();
    let (x0, x1) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (z0, z1) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.z), b.max(p.z)));
    loop {
        let p = Vec2::new(rng.random_range(x0..x1), rng.random_range(z0..z1));
        if room.admits(p, 0.02 * room.diameter()) {
            return p;
        }
    }
}

#[test]
fn ray_cast_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let room = random_room(&mut rng);
        let cam = interior_point(&room, &mut rng);
        let yaw = rng.random_range(-3.0..3.0);
        let grid = SampleGrid::new(rng.random_range(4..64)).unwrap();
        let depth = cast_horizon_depth(&room, cam, yaw, &grid).unwrap();
        for (i, d) in depth.values().iter().enumerate() {
            let want = brute_force_depth(room.vertices(), cam, TAU * grid.u(i) + yaw);
            assert!((d - want).abs() <= 1e-9 * want.max(1.0), "got {d}, oracle {want}");
        }
    }
}

#[test]
fn cast_examples() {
    let room = RoomPolygon::new(vec![Vec2::new(-2.0, -2.0), Vec2::new(2.0, -2.0), Vec2::new(2.0, 2.0), Vec2::new(-2.0, 2.0)]).unwrap();
    let grid = SampleGrid::new(8).unwrap();
    let d = cast_horizon_depth(&room, Vec2::ZERO, 0.0, &grid).unwrap();
    assert!((d.values()[0] - 2.0).abs() < 1e-12);
    assert!((d.values()[1] - 8f64.sqrt()).abs() < 1e-12);
    let d = cast_horizon_depth(&room, Vec2::new(1.0, 0.0), 0.0, &grid).unwrap();
    assert!((d.values()[2] - 1.0).abs() < 1e-12);
}

#[test]
fn correspondence_example() {
    let room = RoomPolygon::new(vec![Vec2::new(-2.0, -2.0), Vec2::new(2.0, -2.0), Vec2::new(2.0, 2.0), Vec2::new(-2.0, 2.0)]).unwrap();
    let scene = RoomScene::new(
        room,
        Camera { position: Vec2::ZERO, yaw: 0.0 },
        Camera { position: Vec2::new(1.0, 0.0), yaw: 0.0 },
        2.5,
    )
    .unwrap();
    let c = correspond(&scene, Pano::First, 0.0).unwrap();
    assert!((c.wall_point - Vec2::new(0.0, 2.0)).norm() < 1e-12);
    assert!((c.u_other - 0.9262081911747834).abs() < 1e-12);
    assert!(c.covisible);
}

fn scenes(kind: RoomKind, count: u64, base: u64) -> impl Iterator<Item = RoomScene> {
    (0..count).map(move |s| {
        let spec = SceneSpec::new(RoomSpec { vertex_budget: 4 + (s % 9) as usize, extent: 5.0, kind, seed: base + s });
        generate_scene(&spec).unwrap()
    })
}

#[test]
fn correspondence_is_cycle_consistent() {
    let grid = SampleGrid::new(128).unwrap();
    for kind in [RoomKind::Manhattan, RoomKind::Convex, RoomKind::LShape, RoomKind::Star] {
        for scene in scenes(kind, 25, 100) {
            let (m1, _) = ground_truth_maps(&scene, &grid).unwrap();
            for (i, (&o, &c)) in m1.correspondence.iter().zip(&m1.covisibility).enumerate() {
                if c < 0.5 {
                    continue;
                }
                let back = correspond(&scene, Pano::Second, o).unwrap();
                let d = (back.u_other - grid.u(i)).rem_euclid(1.0);
                assert!(d.min(1.0 - d) < 1e-9, "{kind:?} sample {i}: {} vs {}", back.u_other, grid.u(i));
            }
        }
    }
}

#[test]
fn convex_correspondence_is_monotone_and_fully_covisible() {
    let grid = SampleGrid::new(256).unwrap();
    for scene in scenes(RoomKind::Convex, 40, 300) {
        let (m1, m2) = ground_truth_maps(&scene, &grid).unwrap();
        for m in [&m1, &m2] {
            assert!(m.covisibility.iter().all(|&c| c == 1.0));
            let n = m.correspondence.len();
            let mut wraps = 0;
            for i in 0..n {
                let step = (m.correspondence[(i + 1) % n] - m.correspondence[i]).rem_euclid(1.0);
                assert!(step > 0.0 && step < 0.5);
                if m.correspondence[(i + 1) % n] < m.correspondence[i] {
                    wraps += 1;
                }
            }
            assert_eq!(wraps, 1);
        }
    }
}

#[test]
fn boundary_round_trip_through_cast_depths() {
    let grid = SampleGrid::new(256).unwrap();
    for scene in scenes(RoomKind::Star, 30, 700) {
        let depth = cast_horizon_depth(&scene.room, scene.cam1.position, scene.cam1.yaw, &grid).unwrap();
        for (h, kind) in [(1.0, BoundaryKind::Floor), (scene.ceiling_height - 1.0, BoundaryKind::Ceiling)] {
            let b = depth_to_boundary(&depth, h, kind).unwrap();
            let back = boundary_to_depth(&b, h, grid.len()).unwrap();
            for ((v, d0), d1) in b.values().iter().zip(depth.values()).zip(back.values()) {
                let clamped = v.abs() <= 1e-3 || v.abs() >= 1.0 - 1e-6;
                if !clamped {
                    assert!((d0 - d1).abs() <= 1e-9 * d0.max(1.0));
                }
            }
        }
    }
}
