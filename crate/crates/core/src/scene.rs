//! Synthetic ground truth: rooms, camera pairs and the four horizon maps a
//! layout network would predict for them, plus a seeded noise model.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{self, BoundaryKind, BoundaryMap, HorizonDepthMap, SampleGrid, V_MAX, V_MIN};
use crate::math::{derive_seed, wrap_angle, wrap_unit, Vec2, TAU};
use crate::polygon::{self, overlay, BoolOp, Footprint, Ring};
use crate::pose::PlanarPose;

/// Minimum camera clearance from every wall, as a fraction of the room diameter.
pub const CLEARANCE_FRAC: f64 = 0.05;
/// Covisibility grazing tolerance, as a fraction of the room diameter.
pub const VISIBILITY_EPS_FRAC: f64 = 1e-6;

const MAX_ATTEMPTS: usize = 1000;

/// Simple counter-clockwise room outline with at least four vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomPolygon(Ring);

impl RoomPolygon {
    /// Clockwise input is reversed; non-simple input is rejected.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidValue("room needs at least 4 vertices"));
        }
        let ring = Ring::new(points);
        if !ring.is_simple() {
            return Err(Error::NotSimple);
        }
        Ok(RoomPolygon(if ring.is_ccw() { ring } else { ring.reversed() }))
    }

    pub fn ring(&self) -> &Ring {
        &self.0
    }

    pub fn vertices(&self) -> &[Vec2] {
        self.0.points()
    }

    pub fn is_manhattan(&self) -> bool {
        self.0.is_rectilinear()
    }

    pub fn is_convex(&self) -> bool {
        let p = self.0.points();
        let n = p.len();
        (0..n).all(|i| (p[(i + 1) % n] - p[i]).cross(p[(i + 2) % n] - p[(i + 1) % n]) >= 0.0)
    }

    pub fn area(&self) -> f64 {
        self.0.area()
    }

    pub fn diameter(&self) -> f64 {
        self.0.diameter()
    }

    /// Strictly inside and at least `clearance` from every wall.
    pub fn admits(&self, p: Vec2, clearance: f64) -> bool {
        self.0.contains(p) && self.0.boundary_distance(p) >= clearance.max(f64::MIN_POSITIVE)
    }

    pub fn to_footprint(&self) -> Footprint {
        Footprint::from_ring(self.0.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoomKind {
    /// Axis-aligned rectilinear room built from a union of rectangles.
    Manhattan,
    /// Convex polygon inscribed in a random ellipse.
    Convex,
    /// Star-shaped polygon around the room center.
    Star,
    /// Rectangle with one corner quadrant removed.
    LShape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSpec {
    pub vertex_budget: usize,
    pub extent: f64,
    pub kind: RoomKind,
    pub seed: u64,
}

impl RoomSpec {
    pub fn manhattan(vertex_budget: usize, extent: f64, seed: u64) -> Self {
        Self { vertex_budget, extent, kind: RoomKind::Manhattan, seed }
    }
}

pub fn generate_room(spec: &RoomSpec) -> Result<RoomPolygon> {
    generate_room_with_arms(spec).map(|(room, _)| room)
}

/// Axis-aligned box used to keep L-shape cameras in different arms.
#[derive(Debug, Clone, Copy)]
struct Rect {
    lo: Vec2,
    hi: Vec2,
}

impl Rect {
    fn ring(&self) -> Ring {
        Ring::new(alloc::vec![
            self.lo,
            Vec2::new(self.hi.x, self.lo.z),
            self.hi,
            Vec2::new(self.lo.x, self.hi.z),
        ])
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        Vec2::new(rng.random_range(self.lo.x..self.hi.x), rng.random_range(self.lo.z..self.hi.z))
    }
}

fn generate_room_with_arms(spec: &RoomSpec) -> Result<(RoomPolygon, Option<[Rect; 2]>)> {
    if spec.vertex_budget < 4 {
        return Err(Error::InvalidValue("vertex_budget must be at least 4"));
    }
    if !(spec.extent.is_finite() && spec.extent > 0.0) {
        return Err(Error::InvalidValue("extent must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = 0.5 * spec.extent;
    match spec.kind {
        RoomKind::Manhattan => manhattan_room(&mut rng, spec.vertex_budget, half).map(|r| (r, None)),
        RoomKind::Convex => {
            let (a, b) = (half * rng.random_range(0.6..1.0), half * rng.random_range(0.6..1.0));
            let pts = radial_points(&mut rng, spec.vertex_budget, |_, t| (a * libm::cos(t), b * libm::sin(t)));
            RoomPolygon::new(pts).map(|r| (r, None))
        }
        RoomKind::Star => {
            let pts = radial_points(&mut rng, spec.vertex_budget, |rng, t| {
                let r = half * rng.random_range(0.5..1.0);
                (r * libm::cos(t), r * libm::sin(t))
            });
            RoomPolygon::new(pts).map(|r| (r, None))
        }
        RoomKind::LShape => l_room(&mut rng, half).map(|(r, arms)| (r, Some(arms))),
    }
}

/// Counter-clockwise points at jittered angles, rotated by a random offset.
fn radial_points<F>(rng: &mut ChaCha8Rng, n: usize, mut at: F) -> Vec<Vec2>
where
    F: FnMut(&mut ChaCha8Rng, f64) -> (f64, f64),
{
    let step = TAU / n as f64;
    let phase = rng.random_range(0.0..TAU);
    (0..n)
        .map(|i| {
            let t = i as f64 * step + rng.random_range(-0.3..0.3) * step;
            let (x, z) = at(rng, t);
            let (s, c) = libm::sincos(phase);
            Vec2::new(c * x - s * z, s * x + c * z)
        })
        .collect()
}

fn manhattan_room(rng: &mut ChaCha8Rng, budget: usize, half: f64) -> Result<RoomPolygon> {
    let w = half * rng.random_range(0.7..1.0);
    let d = half * rng.random_range(0.7..1.0);
    let base = [Vec2::new(-w, -d), Vec2::new(w, -d), Vec2::new(w, d), Vec2::new(-w, d)];
    if budget < 6 {
        return RoomPolygon::new(base.to_vec());
    }
    // cut lines shared by every rectangle keep the union exactly rectilinear
    let cuts = |rng: &mut ChaCha8Rng, lim: f64| {
        let mut c: Vec<f64> = (1..4).map(|k| -lim + 2.0 * lim * (k as f64 + rng.random_range(-0.3..0.3)) / 4.0).collect();
        c.insert(0, -lim);
        c.push(lim);
        c
    };
    for _ in 0..MAX_ATTEMPTS {
        let xs = cuts(rng, w);
        let zs = cuts(rng, d);
        let pick = |rng: &mut ChaCha8Rng, lines: &[f64], min_span: usize| {
            let i = rng.random_range(0..lines.len() - min_span);
            let j = rng.random_range(i + min_span..lines.len());
            (lines[i], lines[j])
        };
        let mut shape: Vec<Ring> = Vec::new();
        let count = rng.random_range(2..=3usize);
        for k in 0..count {
            let span = if k == 0 { 2 } else { 1 };
            let (x0, x1) = pick(rng, &xs, span);
            let (z0, z1) = pick(rng, &zs, span);
            let rect = Rect { lo: Vec2::new(x0, z0), hi: Vec2::new(x1, z1) }.ring();
            shape = overlay(&shape, &[rect], BoolOp::Union)?.rings;
        }
        if shape.len() != 1 {
            continue;
        }
        let snap = |v: f64, lines: &[f64]| {
            lines.iter().copied().min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs())).unwrap_or(v)
        };
        let pts: Vec<Vec2> = shape[0].points().iter().map(|p| Vec2::new(snap(p.x, &xs), snap(p.z, &zs))).collect();
        if pts.len() < 4 || pts.len() > budget {
            continue;
        }
        if let Ok(room) = RoomPolygon::new(pts) {
            if room.is_manhattan() {
                return Ok(room);
            }
        }
    }
    Err(Error::GenerationFailed(MAX_ATTEMPTS))
}

fn l_room(rng: &mut ChaCha8Rng, half: f64) -> Result<(RoomPolygon, [Rect; 2])> {
    let w = half * rng.random_range(0.7..1.0);
    let d = half * rng.random_range(0.7..1.0);
    let cx = -w + 2.0 * w * rng.random_range(0.35..0.65);
    let cz = -d + 2.0 * d * rng.random_range(0.35..0.65);
    // removed quadrant is x > cx, z > cz; arms are the strips beside it
    let pts = alloc::vec![
        Vec2::new(-w, -d),
        Vec2::new(w, -d),
        Vec2::new(w, cz),
        Vec2::new(cx, cz),
        Vec2::new(cx, d),
        Vec2::new(-w, d),
    ];
    let arm_x = Rect { lo: Vec2::new(cx, -d), hi: Vec2::new(w, cz) };
    let arm_z = Rect { lo: Vec2::new(-w, cz), hi: Vec2::new(cx, d) };
    let quarter = rng.random_range(0..4u32) as f64 * 0.5 * PI;
    let turn = PlanarPose::new(quarter, Vec2::ZERO);
    // quarter turns keep boxes axis-aligned; rounding drops the sin/cos residue
    let fix = |v: f64| libm::round(v * 1e12) / 1e12;
    let turn_rect = |r: Rect| {
        let (a, b) = (turn.apply(r.lo), turn.apply(r.hi));
        Rect {
            lo: Vec2::new(fix(a.x.min(b.x)), fix(a.z.min(b.z))),
            hi: Vec2::new(fix(a.x.max(b.x)), fix(a.z.max(b.z))),
        }
    };
    let pts = pts
        .into_iter()
        .map(|p| {
            let q = turn.apply(p);
            Vec2::new(fix(q.x), fix(q.z))
        })
        .collect();
    Ok((RoomPolygon::new(pts)?, [turn_rect(arm_x), turn_rect(arm_z)]))
}

/// Camera position and heading offset: pano column `u` looks along the
/// world heading `2πu + yaw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Vec2,
    pub yaw: f64,
}

impl Camera {
    /// Pano-frame to world transform.
    pub fn to_world(&self) -> PlanarPose {
        PlanarPose::new(-self.yaw, self.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomScene {
    pub room: RoomPolygon,
    pub cam1: Camera,
    pub cam2: Camera,
    /// Floor-to-ceiling height; camera-to-floor is 1.
    pub ceiling_height: f64,
}

impl RoomScene {
    pub fn new(room: RoomPolygon, cam1: Camera, cam2: Camera, ceiling_height: f64) -> Result<Self> {
        if !(ceiling_height.is_finite() && ceiling_height > 1.0) {
            return Err(Error::InvalidValue("ceiling_height must exceed the camera height of 1"));
        }
        for cam in [&cam1, &cam2] {
            if !(cam.position.is_finite() && cam.yaw.is_finite()) || !room.admits(cam.position, 0.0) {
                return Err(Error::CameraOutsideRoom);
            }
        }
        Ok(Self { room, cam1, cam2, ceiling_height })
    }

    /// Relative pose mapping pano-2 coordinates into the pano-1 frame.
    pub fn pose(&self) -> PlanarPose {
        self.cam1.to_world().inverse().compose(&self.cam2.to_world())
    }

    pub fn camera(&self, pano: Pano) -> &Camera {
        match pano {
            Pano::First => &self.cam1,
            Pano::Second => &self.cam2,
        }
    }

    /// Room outline expressed in the pano-1 frame.
    pub fn room_in_pano1(&self) -> Ring {
        self.room.ring().transformed(&self.cam1.to_world().inverse())
    }

    fn visibility_eps(&self) -> f64 {
        VISIBILITY_EPS_FRAC * self.room.diameter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pano {
    First,
    Second,
}

impl Pano {
    pub fn other(self) -> Pano {
        match self {
            Pano::First => Pano::Second,
            Pano::Second => Pano::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub room: RoomSpec,
    pub ceiling_min: f64,
    pub ceiling_max: f64,
}

impl SceneSpec {
    pub fn new(room: RoomSpec) -> Self {
        Self { room, ceiling_min: 1.6, ceiling_max: 2.2 }
    }
}

/// Room plus two cameras with at least [`CLEARANCE_FRAC`] clearance. For
/// [`RoomKind::LShape`] the cameras go to different arms.
pub fn generate_scene(spec: &SceneSpec) -> Result<RoomScene> {
    let (room, arms) = generate_room_with_arms(&spec.room)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.room.seed, 0x5CE7E));
    let clearance = CLEARANCE_FRAC * room.diameter();
    let (lo, hi) = room.vertices().iter().fold(
        (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Vec2::new(lo.x.min(p.x), lo.z.min(p.z)), Vec2::new(hi.x.max(p.x), hi.z.max(p.z))),
    );
    let bbox = Rect { lo, hi };
    let regions = arms.unwrap_or([bbox, bbox]);
    let place = |rng: &mut ChaCha8Rng, region: &Rect, avoid: Option<Vec2>| {
        for _ in 0..MAX_ATTEMPTS {
            let p = region.sample(rng);
            if room.admits(p, clearance) && avoid.is_none_or(|q| (p - q).norm() >= clearance) {
                return Ok(p);
            }
        }
        Err(Error::GenerationFailed(MAX_ATTEMPTS))
    };
    let p1 = place(&mut rng, &regions[0], None)?;
    let p2 = place(&mut rng, &regions[1], Some(p1))?;
    let yaw1 = wrap_angle(rng.random_range(-PI..PI));
    let yaw2 = wrap_angle(rng.random_range(-PI..PI));
    let ceiling_height = if spec.ceiling_max > spec.ceiling_min {
        rng.random_range(spec.ceiling_min..spec.ceiling_max)
    } else {
        spec.ceiling_min
    };
    RoomScene::new(room, Camera { position: p1, yaw: yaw1 }, Camera { position: p2, yaw: yaw2 }, ceiling_height)
}

/// Distance from the camera to the first wall for every grid column.
pub fn cast_horizon_depth(room: &RoomPolygon, cam: Vec2, yaw: f64, grid: &SampleGrid) -> Result<HorizonDepthMap> {
    if !room.admits(cam, 0.0) {
        return Err(Error::CameraOutsideRoom);
    }
    let depths = (0..grid.len())
        .map(|i| cast_heading(room, cam, grid.heading(i) + yaw))
        .collect::<Result<Vec<_>>>()?;
    HorizonDepthMap::new(depths)
}

fn cast_heading(room: &RoomPolygon, cam: Vec2, heading: f64) -> Result<f64> {
    polygon::ray_cast(room.ring().edges(), cam, Vec2::from_heading(heading)).ok_or(Error::NoIntersection)
}

/// The four horizon maps of one panorama, sharing one sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonMaps {
    pub ceiling: BoundaryMap,
    pub floor: BoundaryMap,
    /// Column in the other panorama showing the same wall point, in [0, 1).
    pub correspondence: Vec<f64>,
    /// Whether that wall point is also visible from the other panorama, in [0, 1].
    pub covisibility: Vec<f64>,
}

impl HorizonMaps {
    pub fn new(ceiling: BoundaryMap, floor: BoundaryMap, correspondence: Vec<f64>, covisibility: Vec<f64>) -> Result<Self> {
        if ceiling.kind() != BoundaryKind::Ceiling || floor.kind() != BoundaryKind::Floor {
            return Err(Error::InvalidValue("boundary kinds"));
        }
        let n = ceiling.len();
        for len in [floor.len(), correspondence.len(), covisibility.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, found: len });
            }
        }
        if !correspondence.iter().all(|o| (0.0..1.0).contains(o)) {
            return Err(Error::InvalidValue("correspondence must lie in [0, 1)"));
        }
        if !covisibility.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::InvalidValue("covisibility must lie in [0, 1]"));
        }
        Ok(Self { ceiling, floor, correspondence, covisibility })
    }

    pub fn len(&self) -> usize {
        self.ceiling.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ceiling.is_empty()
    }

    pub fn grid(&self) -> Result<SampleGrid> {
        SampleGrid::new(self.len())
    }
}

/// Where a column of pano `from` lands in pano `from.other()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub wall_point: Vec2,
    pub u_other: f64,
    pub covisible: bool,
}

/// Traces column `u` of pano `from` to the wall and back into the other pano.
pub fn correspond(scene: &RoomScene, from: Pano, u: f64) -> Result<Correspondence> {
    let src = scene.camera(from);
    let dst = scene.camera(from.other());
    let depth = cast_heading(&scene.room, src.position, TAU * u + src.yaw)?;
    let wall_point = src.position + Vec2::from_heading(TAU * u + src.yaw) * depth;
    let u_other = wrap_unit(((wall_point - dst.position).heading() - dst.yaw) / TAU);
    let covisible = segment_visible(scene.room.ring(), dst.position, wall_point, scene.visibility_eps());
    Ok(Correspondence { wall_point, u_other, covisible })
}

/// Open segment `p → w` stays inside the room; touching walls or vertices
/// within `eps` counts as visible.
pub fn segment_visible(room: &Ring, p: Vec2, w: Vec2, eps: f64) -> bool {
    let seg = w - p;
    let len = seg.norm();
    if len <= eps {
        return true;
    }
    let mut cuts: Vec<f64> = alloc::vec![0.0, 1.0];
    for (a, b) in room.edges() {
        let e = b - a;
        let denom = seg.cross(e);
        if denom.abs() <= 1e-14 * len * e.norm() {
            continue;
        }
        let s = (a - p).cross(e) / denom;
        let t = (a - p).cross(seg) / denom;
        let along = s * len;
        if along <= eps || along >= len - eps {
            continue;
        }
        let t_eps = eps / e.norm();
        if t > t_eps && t < 1.0 - t_eps {
            return false;
        }
        if t >= -t_eps && t <= 1.0 + t_eps {
            cuts.push(s);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).all(|c| {
        let m = p + seg * (0.5 * (c[0] + c[1]));
        room.contains(m) || room.boundary_distance(m) <= eps
    })
}

/// Ground-truth maps for both panoramas.
pub fn ground_truth_maps(scene: &RoomScene, grid: &SampleGrid) -> Result<(HorizonMaps, HorizonMaps)> {
    Ok((pano_maps(scene, Pano::First, grid)?, pano_maps(scene, Pano::Second, grid)?))
}

fn pano_maps(scene: &RoomScene, pano: Pano, grid: &SampleGrid) -> Result<HorizonMaps> {
    let cam = scene.camera(pano);
    let depth = cast_horizon_depth(&scene.room, cam.position, cam.yaw, grid)?;
    let floor = geometry::depth_to_boundary(&depth, 1.0, BoundaryKind::Floor)?;
    let ceiling = geometry::depth_to_boundary(&depth, scene.ceiling_height - 1.0, BoundaryKind::Ceiling)?;
    let mut correspondence = Vec::with_capacity(grid.len());
    let mut covisibility = Vec::with_capacity(grid.len());
    for u in grid.iter() {
        let c = correspond(scene, pano, u)?;
        correspondence.push(c.u_other);
        covisibility.push(if c.covisible { 1.0 } else { 0.0 });
    }
    HorizonMaps::new(ceiling, floor, correspondence, covisibility)
}

/// Noise applied to oracle maps to mimic prediction error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub sigma_v: f64,
    pub sigma_o: f64,
    pub outlier_frac: f64,
    pub flip_p: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.sigma_v) && ok(self.sigma_o)) {
            return Err(Error::InvalidValue("noise sigma"));
        }
        if !(ok(self.outlier_frac) && self.outlier_frac < 1.0) {
            return Err(Error::InvalidValue("outlier_frac must lie in [0, 1)"));
        }
        if !(ok(self.flip_p) && self.flip_p <= 1.0) {
            return Err(Error::InvalidValue("flip_p must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Exact outlier count `⌊outlier_frac·n⌋`.
    pub fn outlier_count(&self, n: usize) -> usize {
        libm::floor(self.outlier_frac * n as f64) as usize
    }
}

pub fn perturb_maps(maps: &HorizonMaps, noise: &NoiseSpec) -> Result<HorizonMaps> {
    perturb_maps_detailed(maps, noise).map(|(m, _)| m)
}

/// As [`perturb_maps`], also returning the sorted outlier indices.
pub fn perturb_maps_detailed(maps: &HorizonMaps, noise: &NoiseSpec) -> Result<(HorizonMaps, Vec<usize>)> {
    noise.validate()?;
    let n = maps.len();
    // one stream per component so changing one level leaves the others' draws intact
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(derive_seed(noise.seed, k));

    let jitter = |values: &[f64], sign: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        if noise.sigma_v == 0.0 {
            return values.to_vec();
        }
        let normal = Normal::new(0.0, noise.sigma_v).expect("validated sigma");
        values
            .iter()
            .map(|&v| sign * (sign * (v + normal.sample(rng))).clamp(V_MIN, V_MAX))
            .collect()
    };
    let ceiling = BoundaryMap::new(BoundaryKind::Ceiling, jitter(maps.ceiling.values(), -1.0, &mut stream(1)))?;
    let floor = BoundaryMap::new(BoundaryKind::Floor, jitter(maps.floor.values(), 1.0, &mut stream(2)))?;

    let mut correspondence = maps.correspondence.clone();
    if noise.sigma_o > 0.0 {
        let normal = Normal::new(0.0, noise.sigma_o).expect("validated sigma");
        let mut rng = stream(3);
        for o in &mut correspondence {
            *o = wrap_unit(*o + normal.sample(&mut rng));
        }
    }
    let k = noise.outlier_count(n);
    let mut outliers = Vec::new();
    if k > 0 {
        let mut rng = stream(4);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        outliers = order[..k].to_vec();
        outliers.sort_unstable();
        for &i in &outliers {
            correspondence[i] = rng.random_range(0.0..1.0);
        }
    }

    let mut covisibility = maps.covisibility.clone();
    if noise.flip_p > 0.0 {
        let mut rng = stream(5);
        for c in &mut covisibility {
            if rng.random_bool(noise.flip_p) {
                *c = 1.0 - *c;
            }
        }
    }
    Ok((HorizonMaps::new(ceiling, floor, correspondence, covisibility)?, outliers))
}
