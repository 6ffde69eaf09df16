//! Per-panorama layout extraction and two-view layout fusion.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry;
use crate::math::Vec2;
use crate::polygon::{overlay, BoolOp, Footprint, Ring};
use crate::pose::{rotate, PlanarPose};
use crate::scene::HorizonMaps;

/// Extruded layout: a footprint on the floor plane `y = -1` and a height.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSolid {
    pub footprint: Footprint,
    pub height: f64,
}

impl LayoutSolid {
    pub fn new(footprint: Footprint, height: f64) -> Result<Self> {
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::NonPositiveHeight(height));
        }
        Ok(Self { footprint, height })
    }

    pub fn area(&self) -> f64 {
        self.footprint.area()
    }

    pub fn volume(&self) -> f64 {
        self.area() * self.height
    }
}

/// Non-fatal conditions met while building or fusing layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionWarning {
    /// The raw boundary polygon crossed itself and was repaired.
    SelfIntersectingFootprint,
    /// The union fell apart into several pieces, usually from a bad pose.
    DisconnectedUnion { components: usize },
    /// Manhattan snapping was requested but could not be applied.
    ManhattanSnapSkipped,
}

/// A value with the warnings raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub warnings: Vec<FusionWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FootprintSource {
    #[default]
    Floor,
    Ceiling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayoutConfig {
    pub source: FootprintSource,
    pub manhattan: bool,
}

/// Footprint from the boundary points in `u` order, height from
/// [`geometry::estimate_layout_height`].
pub fn boundary_to_layout(maps: &HorizonMaps, cfg: &LayoutConfig) -> Result<Flagged<LayoutSolid>> {
    let grid = maps.grid()?;
    let height = geometry::estimate_layout_height(&maps.ceiling, &maps.floor)?;
    let depth = match cfg.source {
        FootprintSource::Floor => geometry::boundary_to_depth(&maps.floor, 1.0, grid.len())?,
        FootprintSource::Ceiling => geometry::boundary_to_depth(&maps.ceiling, height - 1.0, grid.len())?,
    };
    let ring = Ring::new(geometry::depth_to_plane_points(&depth, &grid)?.points);
    let mut warnings = Vec::new();
    let ring = if cfg.manhattan {
        match manhattan_snap(&ring) {
            Some(r) => r,
            None => {
                warnings.push(FusionWarning::ManhattanSnapSkipped);
                ring
            }
        }
    } else {
        ring
    };
    if !ring.is_simple() {
        warnings.push(FusionWarning::SelfIntersectingFootprint);
    }
    let footprint = Footprint::from_ring_even_odd(&ring)?;
    if footprint.is_empty() {
        return Err(Error::ClippingFailure("empty footprint"));
    }
    Ok(Flagged { value: LayoutSolid::new(footprint, height)?, warnings })
}

pub fn apply_pose(layout: &LayoutSolid, pose: &PlanarPose) -> LayoutSolid {
    LayoutSolid { footprint: layout.footprint.transformed(pose), height: layout.height }
}

/// Footprint union, mean height. Disconnected results are kept and flagged.
pub fn union_layouts(a: &LayoutSolid, b: &LayoutSolid) -> Result<Flagged<LayoutSolid>> {
    let footprint = overlay(&a.footprint.rings, &b.footprint.rings, BoolOp::Union)?;
    if footprint.is_empty() {
        return Err(Error::ClippingFailure("empty union"));
    }
    let mut warnings = Vec::new();
    let components = footprint.component_count();
    if components > 1 {
        warnings.push(FusionWarning::DisconnectedUnion { components });
    }
    Ok(Flagged { value: LayoutSolid::new(footprint, 0.5 * (a.height + b.height))?, warnings })
}

/// Both per-pano layouts, pano 2 moved into the pano-1 frame, then united.
pub fn fuse(maps1: &HorizonMaps, maps2: &HorizonMaps, pose: &PlanarPose, cfg: &LayoutConfig) -> Result<Flagged<LayoutSolid>> {
    let l1 = boundary_to_layout(maps1, cfg)?;
    let l2 = boundary_to_layout(maps2, cfg)?;
    let mut fused = union_layouts(&l1.value, &apply_pose(&l2.value, pose))?;
    let mut warnings = l1.warnings;
    warnings.extend(l2.warnings);
    warnings.append(&mut fused.warnings);
    Ok(Flagged { value: fused.value, warnings })
}

/// Snaps a ring to two perpendicular wall directions.
///
/// The dominant direction is the length-weighted circular mean of edge
/// angles modulo 90°. Consecutive edges closer to the same axis form one
/// wall, placed at the length-weighted mean offset of its edges; corners are
/// the intersections of neighboring walls. Returns `None` when the result
/// would not be a simple polygon.
pub fn manhattan_snap(ring: &Ring) -> Option<Ring> {
    let pts = ring.points();
    let n = pts.len();
    if n < 4 {
        return None;
    }
    let (mut s4, mut c4) = (0.0, 0.0);
    for (a, b) in ring.edges() {
        let d = b - a;
        let len = d.norm();
        let ang = libm::atan2(d.z, d.x);
        s4 += len * libm::sin(4.0 * ang);
        c4 += len * libm::cos(4.0 * ang);
    }
    let phi = 0.25 * libm::atan2(s4, c4);
    let local: Vec<Vec2> = pts.iter().map(|p| rotate(-phi, *p)).collect();
    let horizontal: Vec<bool> = (0..n)
        .map(|i| {
            let d = local[(i + 1) % n] - local[i];
            d.x.abs() >= d.z.abs()
        })
        .collect();
    let start = (0..n).find(|&i| horizontal[i] != horizontal[(i + n - 1) % n])?;

    // (is_horizontal, Σ len·offset, Σ len)
    let mut walls: Vec<(bool, f64, f64)> = Vec::new();
    for k in 0..n {
        let i = (start + k) % n;
        let (a, b) = (local[i], local[(i + 1) % n]);
        let len = (b - a).norm();
        let offset = if horizontal[i] { 0.5 * (a.z + b.z) } else { 0.5 * (a.x + b.x) };
        match walls.last_mut() {
            Some(w) if w.0 == horizontal[i] => {
                w.1 += len * offset;
                w.2 += len;
            }
            _ => walls.push((horizontal[i], len * offset, len)),
        }
    }
    if walls.len() < 4 || !walls.len().is_multiple_of(2) || walls.iter().any(|w| !(w.2 > 0.0)) {
        return None;
    }
    let m = walls.len();
    let corners: Vec<Vec2> = (0..m)
        .map(|k| {
            let (h, s, l) = walls[k];
            let (_, s2, l2) = walls[(k + 1) % m];
            let (own, next) = (s / l, s2 / l2);
            let corner = if h { Vec2::new(next, own) } else { Vec2::new(own, next) };
            rotate(phi, corner)
        })
        .collect();
    let snapped = Ring::new(corners);
    (snapped.is_simple() && snapped.area() > 0.0).then_some(snapped)
}
