//! Panorama coordinate conventions and the elementary horizon transforms.
//!
//! Conventions: `y` is up and the camera sits at the origin. A panorama
//! column `u ∈ [0, 1)` looks along the heading `θ = 2πu`, measured from
//! `+z` toward `+x`. A row `v ∈ [-1, 1]` has elevation `φ = -v·π/2`, so
//! `v = -1` is the zenith, `v = 0` the horizon and `v = 1` the nadir.
//! Camera-to-floor distance is normalized to 1.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::math::{self, Vec2, TAU};

/// Smallest `|v|` fed to the tangent; keeps depths finite near the horizon.
pub const V_MIN: f64 = 1e-3;
/// Largest `|v|` a boundary may take.
pub const V_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvCoord {
    pub u: f64,
    pub v: f64,
}

impl UvCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u: math::wrap_unit(u), v }
    }

    /// Unit viewing direction `(sinθ·cosφ, sinφ, cosθ·cosφ)`.
    pub fn direction(self) -> [f64; 3] {
        let theta = TAU * self.u;
        let phi = -self.v * FRAC_PI_2;
        let (st, ct) = libm::sincos(theta);
        let (sp, cp) = libm::sincos(phi);
        [st * cp, sp, ct * cp]
    }
}

/// `n` uniform samples `u_i = i / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleGrid {
    n: usize,
}

impl SampleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn u(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.u(i))
    }

    /// Heading of the ray at sample `i` in the camera frame.
    #[inline]
    pub fn heading(&self, i: usize) -> f64 {
        TAU * self.u(i)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: len });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Ceiling,
    Floor,
}

impl BoundaryKind {
    fn sign(self) -> f64 {
        match self {
            BoundaryKind::Ceiling => -1.0,
            BoundaryKind::Floor => 1.0,
        }
    }
}

/// Ceiling or floor boundary `v` coordinate per `u` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMap {
    kind: BoundaryKind,
    values: Vec<f64>,
}

impl BoundaryMap {
    /// Ceiling values must be negative and floor values positive, with `|v| ≤ 1`.
    pub fn new(kind: BoundaryKind, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InvalidGrid(values.len()));
        }
        for (index, &v) in values.iter().enumerate() {
            let signed = v * kind.sign();
            if !(v.is_finite() && signed > 0.0 && signed <= 1.0) {
                return Err(Error::DegenerateBoundary { index });
            }
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Planar distance from the camera to the wall per `u` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonDepthMap {
    values: Vec<f64>,
}

impl HorizonDepthMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&d) = values.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::NonPositiveDepth(d));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Cyclic linear resampling to `m` samples; identity when `m == len`.
    pub fn resample(&self, m: usize) -> Result<Self> {
        Ok(Self { values: resample_cyclic(&self.values, m)? })
    }
}

/// Wall points on the XZ plane, one per depth sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanePointSet {
    pub points: Vec<Vec2>,
}

impl PlanePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Cyclic linear resampling of a periodic signal from `n` to `m` samples.
pub fn resample_cyclic(values: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput);
    }
    if m == n {
        return Ok(values.to_vec());
    }
    let step = n as f64 / m as f64;
    Ok((0..m).map(|j| math::cyclic_lerp(values, j as f64 * step)).collect())
}

fn check_height(height: f64) -> Result<()> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::NonPositiveHeight(height));
    }
    Ok(())
}

fn l2d(b: &BoundaryMap, height: f64, clamp: bool) -> Result<Vec<f64>> {
    check_height(height)?;
    b.values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            let mut a = v.abs();
            if a <= V_MIN {
                if !clamp {
                    return Err(Error::DegenerateBoundary { index });
                }
                a = V_MIN;
            }
            Ok(height / libm::tan(a * FRAC_PI_2))
        })
        .collect()
}

/// Layout-to-depth: `d_i = height / tan(|v_i|·π/2)`, then resampled to `m`.
///
/// `height` is the camera-to-floor distance for floor boundaries (1 after
/// normalization) or camera-to-ceiling for ceiling boundaries. `|v|` below
/// [`V_MIN`] is clamped.
pub fn boundary_to_depth(b: &BoundaryMap, height: f64, m: usize) -> Result<HorizonDepthMap> {
    HorizonDepthMap::new(resample_cyclic(&l2d(b, height, true)?, m)?)
}

/// As [`boundary_to_depth`] but rejects `|v| ≤ V_MIN` instead of clamping.
pub fn boundary_to_depth_strict(b: &BoundaryMap, height: f64, m: usize) -> Result<HorizonDepthMap> {
    HorizonDepthMap::new(resample_cyclic(&l2d(b, height, false)?, m)?)
}

/// Inverse of [`boundary_to_depth`]: `v_i = ±(2/π)·atan(height / d_i)`.
pub fn depth_to_boundary(d: &HorizonDepthMap, height: f64, kind: BoundaryKind) -> Result<BoundaryMap> {
    check_height(height)?;
    let values = d
        .values
        .iter()
        .map(|&depth| {
            if !(depth.is_finite() && depth > 0.0) {
                return Err(Error::NonPositiveDepth(depth));
            }
            Ok(kind.sign() * libm::atan(height / depth) / FRAC_PI_2)
        })
        .collect::<Result<Vec<_>>>()?;
    BoundaryMap::new(kind, values)
}

/// `p_i = d_i · (sin 2πu_i, cos 2πu_i)`.
pub fn depth_to_plane_points(d: &HorizonDepthMap, grid: &SampleGrid) -> Result<PlanePointSet> {
    grid.check_len(d.len())?;
    let points = d
        .values
        .iter()
        .enumerate()
        .map(|(i, &depth)| Vec2::from_heading(grid.heading(i)) * depth)
        .collect();
    Ok(PlanePointSet { points })
}

/// Per-sample camera-to-ceiling distances implied by the two boundaries.
pub fn ceiling_distances(ceiling: &BoundaryMap, floor: &BoundaryMap) -> Result<Vec<f64>> {
    if ceiling.kind != BoundaryKind::Ceiling || floor.kind != BoundaryKind::Floor {
        return Err(Error::InvalidValue("boundary kinds"));
    }
    if ceiling.len() != floor.len() {
        return Err(Error::LengthMismatch { expected: floor.len(), found: ceiling.len() });
    }
    let floor_depth = l2d(floor, 1.0, true)?;
    Ok(floor_depth
        .iter()
        .zip(&ceiling.values)
        .map(|(&d, &vc)| d * libm::tan(vc.abs() * FRAC_PI_2))
        .collect())
}

/// Layout height `H = 1 + median_i(h_c(i))`, floor at distance 1.
pub fn estimate_layout_height(ceiling: &BoundaryMap, floor: &BoundaryMap) -> Result<f64> {
    let h = ceiling_distances(ceiling, floor)?;
    if let Some(index) = h.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::DegenerateBoundary { index });
    }
    Ok(1.0 + math::median(&h).ok_or(Error::EmptyInput)?)
}
