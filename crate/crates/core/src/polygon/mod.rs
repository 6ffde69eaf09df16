//! Polygon rings, multi-ring footprints and the boolean overlay used for
//! layout fusion and IoU.

mod overlay;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::pose::PlanarPose;

pub use overlay::{overlay, overlay_area, BoolOp};

/// Closed ring of vertices; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ring(pub Vec<Vec2>);

impl Ring {
    pub fn new(points: Vec<Vec2>) -> Self {
        Ring(points)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    /// Shoelace area; positive for counter-clockwise rings.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn reversed(&self) -> Ring {
        let mut p = self.0.clone();
        p.reverse();
        Ring(p)
    }

    pub fn transformed(&self, pose: &PlanarPose) -> Ring {
        Ring(self.0.iter().map(|p| pose.apply(*p)).collect())
    }

    /// Even-odd containment; points on the boundary may go either way.
    pub fn contains(&self, p: Vec2) -> bool {
        crossing_parity(self.edges(), p)
    }

    /// Smallest distance from `p` to any edge.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.0.iter().enumerate() {
            for b in &self.0[i + 1..] {
                d = d.max((*a - *b).norm());
            }
        }
        d
    }

    /// No repeated vertices and no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let n = self.0.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.0[i] == self.0[j] {
                    return false;
                }
            }
        }
        for i in 0..n {
            let (a, b) = (self.0[i], self.0[(i + 1) % n]);
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (self.0[j], self.0[(j + 1) % n]);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    if (b - a).cross(d - c) == 0.0 && (b - a).dot(d - c) < 0.0 {
                        return false;
                    }
                    continue;
                }
                if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Every edge parallel to the x or z axis, compared exactly.
    pub fn is_rectilinear(&self) -> bool {
        self.edges().all(|(a, b)| a.x == b.x || a.z == b.z)
    }
}

/// One or more rings; counter-clockwise rings are outer boundaries and
/// clockwise rings are holes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Footprint {
    pub rings: Vec<Ring>,
}

impl Footprint {
    pub fn new(rings: Vec<Ring>) -> Self {
        Self { rings }
    }

    /// Single simple ring, oriented counter-clockwise.
    pub fn from_ring(ring: Ring) -> Self {
        let ring = if ring.is_ccw() { ring } else { ring.reversed() };
        Self { rings: alloc::vec![ring] }
    }

    /// Cleans up an arbitrary ring under the even-odd rule, producing
    /// simple outer rings and holes.
    pub fn from_ring_even_odd(ring: &Ring) -> Result<Self> {
        overlay(core::slice::from_ref(ring), &[], BoolOp::Union)
    }

    pub fn outers(&self) -> impl Iterator<Item = &Ring> {
        self.rings.iter().filter(|r| r.signed_area() > 0.0)
    }

    pub fn holes(&self) -> impl Iterator<Item = &Ring> {
        self.rings.iter().filter(|r| r.signed_area() < 0.0)
    }

    pub fn component_count(&self) -> usize {
        self.outers().count()
    }

    pub fn area(&self) -> f64 {
        self.rings.iter().map(Ring::signed_area).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        crossing_parity(self.edges(), p)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.rings.iter().flat_map(Ring::edges)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.rings.iter().flat_map(|r| r.0.iter().copied())
    }

    pub fn transformed(&self, pose: &PlanarPose) -> Footprint {
        Footprint { rings: self.rings.iter().map(|r| r.transformed(pose)).collect() }
    }

    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Outer rings counter-clockwise, holes clockwise, every ring simple.
    pub fn is_valid(&self) -> bool {
        !self.rings.is_empty() && self.rings.iter().all(Ring::is_simple) && self.area() > 0.0
    }
}

/// Distance along the ray `origin + s·dir` (with `s > 0`) to the nearest
/// crossing of any edge; `None` when the ray escapes.
pub fn ray_cast<I>(edges: I, origin: Vec2, dir: Vec2) -> Option<f64>
where
    I: IntoIterator<Item = (Vec2, Vec2)>,
{
    let len = dir.norm();
    if !(len > 0.0) {
        return None;
    }
    let dir = dir * (1.0 / len);
    let mut best: Option<f64> = None;
    for (a, b) in edges {
        // signed offsets of the endpoints from the ray's supporting line
        let sa = dir.cross(a - origin);
        let sb = dir.cross(b - origin);
        if (sa > 0.0 && sb > 0.0) || (sa < 0.0 && sb < 0.0) || sa == sb {
            continue;
        }
        let hit = a + (b - a) * (sa / (sa - sb));
        let s = (hit - origin).dot(dir);
        if s > 0.0 && best.is_none_or(|b| s < b) {
            best = Some(s);
        }
    }
    best
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sq();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn crossing_parity<I>(edges: I, p: Vec2) -> bool
where
    I: IntoIterator<Item = (Vec2, Vec2)>,
{
    let mut inside = false;
    for (a, b) in edges {
        if (a.z > p.z) != (b.z > p.z) {
            let x = a.x + (p.z - a.z) * (b.x - a.x) / (b.z - a.z);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.z >= a.z.min(b.z) && p.z <= a.z.max(b.z)
}

/// Closed segments `ab` and `cd` share at least one point.
pub(crate) fn segments_touch(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub(crate) fn check_ring(ring: &Ring) -> Result<()> {
    if ring.len() < 3 || !ring.0.iter().all(|p| p.is_finite()) {
        return Err(Error::ClippingFailure("ring needs three finite vertices"));
    }
    Ok(())
}
