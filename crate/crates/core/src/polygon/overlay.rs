//! Boolean overlay of two polygon sets.
//!
//! Both operands are read with the even-odd fill rule, so self-intersecting
//! or oddly oriented input rings are accepted. The overlay runs in four
//! steps:
//!
//! 1. vertices closer than the snap tolerance are merged,
//! 2. every edge is split at proper crossings and at vertices lying on it,
//! 3. each distinct sub-edge is classified by probing membership just left
//!    and right of its midpoint; it is a result edge when the two sides
//!    disagree, oriented with the result interior on its left,
//! 4. result edges are linked into rings, always taking the tightest
//!    clockwise turn so rings touching at a vertex come out separate.
//!
//! Coincident edges from the two operands collapse onto the same sub-edge
//! after snapping, which keeps shared walls from producing sliver rings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::{check_ring, point_segment_distance, Footprint, Ring};
use crate::error::{Error, Result};
use crate::math::{Vec2, TAU};

/// Snap tolerance relative to the bounding-box diagonal.
const SNAP_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersection,
    /// `a` minus `b`.
    Difference,
    Xor,
}

impl BoolOp {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            BoolOp::Union => a || b,
            BoolOp::Intersection => a && b,
            BoolOp::Difference => a && !b,
            BoolOp::Xor => a != b,
        }
    }
}

/// Boolean combination of two ring sets as a [`Footprint`].
pub fn overlay(a: &[Ring], b: &[Ring], op: BoolOp) -> Result<Footprint> {
    let Some(graph) = Graph::build(a, b, op)? else {
        return Ok(Footprint::default());
    };
    graph.rings()
}

/// Area of the boolean combination, summed directly over the classified
/// boundary edges without linking rings.
pub fn overlay_area(a: &[Ring], b: &[Ring], op: BoolOp) -> Result<f64> {
    let Some(graph) = Graph::build(a, b, op)? else {
        return Ok(0.0);
    };
    Ok(0.5
        * graph
            .edges
            .iter()
            .map(|&(i, j)| graph.verts[i].cross(graph.verts[j]))
            .sum::<f64>())
}

struct VertexPool {
    pts: Vec<Vec2>,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
    tol: f64,
}

impl VertexPool {
    fn new(tol: f64) -> Self {
        Self { pts: Vec::new(), cells: BTreeMap::new(), tol }
    }

    fn cell(&self, p: Vec2) -> (i64, i64) {
        (libm::floor(p.x / self.tol) as i64, libm::floor(p.z / self.tol) as i64)
    }

    fn insert(&mut self, p: Vec2) -> usize {
        let (cx, cz) = self.cell(p);
        let mut found: Option<usize> = None;
        for dx in -1..=1 {
            for dz in -1..=1 {
                if let Some(ids) = self.cells.get(&(cx + dx, cz + dz)) {
                    for &id in ids {
                        if (self.pts[id] - p).norm() <= self.tol && found.is_none_or(|f| id < f) {
                            found = Some(id);
                        }
                    }
                }
            }
        }
        if let Some(id) = found {
            return id;
        }
        let id = self.pts.len();
        self.pts.push(p);
        self.cells.entry((cx, cz)).or_default().push(id);
        id
    }
}

struct Graph {
    verts: Vec<Vec2>,
    /// Directed result edges with the interior on the left.
    edges: Vec<(usize, usize)>,
    tol: f64,
}

#[derive(Clone, Copy)]
struct Bbox {
    lo: Vec2,
    hi: Vec2,
}

impl Bbox {
    fn of(a: Vec2, b: Vec2, pad: f64) -> Self {
        Bbox {
            lo: Vec2::new(a.x.min(b.x) - pad, a.z.min(b.z) - pad),
            hi: Vec2::new(a.x.max(b.x) + pad, a.z.max(b.z) + pad),
        }
    }

    fn overlaps(&self, o: &Bbox) -> bool {
        self.lo.x <= o.hi.x && o.lo.x <= self.hi.x && self.lo.z <= o.hi.z && o.lo.z <= self.hi.z
    }

    fn contains(&self, p: Vec2) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.z >= self.lo.z && p.z <= self.hi.z
    }
}

impl Graph {
    fn build(a: &[Ring], b: &[Ring], op: BoolOp) -> Result<Option<Graph>> {
        for r in a.iter().chain(b) {
            check_ring(r)?;
        }
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in a.iter().chain(b).flat_map(|r| r.0.iter()) {
            lo = Vec2::new(lo.x.min(p.x), lo.z.min(p.z));
            hi = Vec2::new(hi.x.max(p.x), hi.z.max(p.z));
        }
        let extent = (hi - lo).norm();
        if !extent.is_finite() {
            return Ok(None);
        }
        if extent == 0.0 {
            return Err(Error::ClippingFailure("zero extent"));
        }
        let tol = SNAP_REL * extent;

        // 1. snap vertices
        let mut pool = VertexPool::new(tol);
        let mut input: Vec<(usize, usize, u8)> = Vec::new();
        for (tag, rings) in [(0u8, a), (1u8, b)] {
            for ring in rings {
                let ids: Vec<usize> = ring.0.iter().map(|p| pool.insert(*p)).collect();
                for k in 0..ids.len() {
                    let (i, j) = (ids[k], ids[(k + 1) % ids.len()]);
                    if i != j {
                        input.push((i, j, tag));
                    }
                }
            }
        }
        if input.is_empty() {
            return Ok(None);
        }

        // 2. split at crossings, then at vertices lying on edges
        let mut splits: Vec<Vec<usize>> = vec![Vec::new(); input.len()];
        let boxes: Vec<Bbox> = input
            .iter()
            .map(|&(i, j, _)| Bbox::of(pool.pts[i], pool.pts[j], tol))
            .collect();
        for e in 0..input.len() {
            for f in e + 1..input.len() {
                let (ea, eb, _) = input[e];
                let (fa, fb, _) = input[f];
                if ea == fa || ea == fb || eb == fa || eb == fb || !boxes[e].overlaps(&boxes[f]) {
                    continue;
                }
                let (p, r) = (pool.pts[ea], pool.pts[eb] - pool.pts[ea]);
                let (q, s) = (pool.pts[fa], pool.pts[fb] - pool.pts[fa]);
                let denom = r.cross(s);
                if denom.abs() <= 1e-14 * r.norm() * s.norm() {
                    continue;
                }
                let t = (q - p).cross(s) / denom;
                let u = (q - p).cross(r) / denom;
                if t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0 {
                    let id = pool.insert(p + r * t);
                    splits[e].push(id);
                    splits[f].push(id);
                }
            }
        }
        for (e, &(i, j, _)) in input.iter().enumerate() {
            let (pa, pb) = (pool.pts[i], pool.pts[j]);
            for (id, &v) in pool.pts.iter().enumerate() {
                if id == i || id == j || !boxes[e].contains(v) {
                    continue;
                }
                let ab = pb - pa;
                let t = (v - pa).dot(ab) / ab.norm_sq();
                if t > 0.0 && t < 1.0 && point_segment_distance(v, pa, pb) <= tol {
                    splits[e].push(id);
                }
            }
        }

        let verts = pool.pts;
        let mut operand_edges: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
        let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
        for (e, &(i, j, tag)) in input.iter().enumerate() {
            let (pa, pb) = (verts[i], verts[j]);
            let ab = pb - pa;
            let mut chain: Vec<(f64, usize)> = splits[e]
                .iter()
                .filter(|&&id| id != i && id != j)
                .map(|&id| ((verts[id] - pa).dot(ab), id))
                .collect();
            chain.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            chain.dedup_by_key(|c| c.1);
            let mut prev = i;
            for id in chain.into_iter().map(|c| c.1).chain(core::iter::once(j)) {
                if id != prev {
                    operand_edges[tag as usize].push((prev, id));
                    candidates.insert((prev.min(id), prev.max(id)));
                    prev = id;
                }
            }
        }

        // 3. classify
        let candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
        let cand_boxes: Vec<Bbox> = candidates
            .iter()
            .map(|&(i, j)| Bbox::of(verts[i], verts[j], 0.0))
            .collect();
        let mut edges = Vec::new();
        for (c, &(i, j)) in candidates.iter().enumerate() {
            let (pa, pb) = (verts[i], verts[j]);
            let d = pb - pa;
            let len = d.norm();
            let mid = pa.lerp(pb, 0.5);
            let reach = 0.5 * len;
            let probe_box = Bbox::of(mid, mid, reach);
            let mut clearance = reach;
            for (k, &(ki, kj)) in candidates.iter().enumerate() {
                if k != c && probe_box.overlaps(&cand_boxes[k]) {
                    clearance = clearance.min(point_segment_distance(mid, verts[ki], verts[kj]));
                }
            }
            let h = (0.25 * len).min(0.5 * clearance).max(1e-3 * tol);
            let normal = d.perp() * (1.0 / len);
            let left = mid + normal * h;
            let right = mid - normal * h;
            let member = |p: Vec2| {
                op.eval(parity(&verts, &operand_edges[0], p), parity(&verts, &operand_edges[1], p))
            };
            match (member(left), member(right)) {
                (true, false) => edges.push((i, j)),
                (false, true) => edges.push((j, i)),
                _ => {}
            }
        }
        Ok(Some(Graph { verts, edges, tol }))
    }

    fn rings(&self) -> Result<Footprint> {
        let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &(i, _)) in self.edges.iter().enumerate() {
            outgoing.entry(i).or_default().push(k);
        }
        let mut used = vec![false; self.edges.len()];
        let mut rings = Vec::new();
        for start in 0..self.edges.len() {
            if used[start] {
                continue;
            }
            let origin = self.edges[start].0;
            let mut ring = vec![self.verts[origin]];
            let mut cur = start;
            loop {
                used[cur] = true;
                let (from, to) = self.edges[cur];
                if to == origin {
                    break;
                }
                ring.push(self.verts[to]);
                let back = self.verts[from] - self.verts[to];
                let next = outgoing
                    .get(&to)
                    .into_iter()
                    .flatten()
                    .copied()
                    .filter(|&k| !used[k])
                    .min_by(|&x, &y| {
                        let cw = |k: usize| clockwise_angle(back, self.verts[self.edges[k].1] - self.verts[to]);
                        cw(x).total_cmp(&cw(y))
                    });
                match next {
                    Some(k) => cur = k,
                    None => return Err(Error::ClippingFailure("open boundary chain")),
                }
            }
            if let Some(r) = simplify(ring, self.tol) {
                rings.push(Ring(r));
            }
        }
        Ok(Footprint { rings })
    }
}

fn parity(verts: &[Vec2], edges: &[(usize, usize)], p: Vec2) -> bool {
    let mut inside = false;
    for &(i, j) in edges {
        let (a, b) = (verts[i], verts[j]);
        if (a.z > p.z) != (b.z > p.z) {
            let x = a.x + (p.z - a.z) * (b.x - a.x) / (b.z - a.z);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Clockwise angle from `from` to `to` in (0, 2π]; a full turn for reversal.
fn clockwise_angle(from: Vec2, to: Vec2) -> f64 {
    let cw = -libm::atan2(from.cross(to), from.dot(to));
    if cw <= 0.0 {
        cw + TAU
    } else {
        cw
    }
}

/// Drops duplicate, spike and collinear vertices; `None` if nothing with
/// area remains.
fn simplify(mut pts: Vec<Vec2>, tol: f64) -> Option<Vec<Vec2>> {
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        let n = pts.len();
        for k in 0..n {
            let a = pts[(k + n - 1) % n];
            let b = pts[k];
            let c = pts[(k + 1) % n];
            let ac = c - a;
            let redundant = (b - a).norm() <= tol
                || (c - b).norm() <= tol
                || (ac.norm() > 0.0 && (b - a).cross(ac).abs() / ac.norm() <= tol && (b - a).dot(c - b) > 0.0)
                || (a - c).norm() <= tol;
            if redundant {
                pts.remove(k);
                changed = true;
                break;
            }
        }
    }
    if pts.len() < 3 {
        return None;
    }
    let area = 0.5
        * (0..pts.len())
            .map(|k| pts[k].cross(pts[(k + 1) % pts.len()]))
            .sum::<f64>();
    if area.abs() <= tol * tol {
        return None;
    }
    Some(pts)
}
