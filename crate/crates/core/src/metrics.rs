//! Registration and layout accuracy metrics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fusion::LayoutSolid;
use crate::geometry::{HorizonDepthMap, SampleGrid};
use crate::math::{wrap_angle, Vec2};
use crate::polygon::{overlay_area, ray_cast, BoolOp, Footprint};
use crate::pose::PlanarPose;

/// Translations shorter than this have no direction.
pub const TRANSLATION_EPS: f64 = 1e-12;

/// Angular pose errors in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairErrors {
    pub rot_err: f64,
    pub trans_ang_err: f64,
    /// False for failed registrations, which score 180° and never count as accurate.
    pub pose_valid: bool,
}

impl PairErrors {
    pub fn failure() -> Self {
        Self { rot_err: 180.0, trans_ang_err: 180.0, pose_valid: false }
    }

    /// Rotation error as fed to mAA: `+∞` for failures.
    pub fn rot_for_maa(&self) -> f64 {
        if self.pose_valid { self.rot_err } else { f64::INFINITY }
    }

    pub fn trans_for_maa(&self) -> f64 {
        if self.pose_valid { self.trans_ang_err } else { f64::INFINITY }
    }
}

pub fn angular_errors(est: &PlanarPose, gt: &PlanarPose) -> PairErrors {
    let rot_err = wrap_angle(est.theta - gt.theta).abs().to_degrees();
    PairErrors { rot_err, trans_ang_err: translation_angle(est.t, gt.t), pose_valid: true }
}

/// Unsigned angle between two translation directions, in degrees.
///
/// A zero ground truth scores 0 against a zero estimate and 180 otherwise;
/// a zero estimate against a nonzero ground truth also scores 180.
pub fn translation_angle(est: Vec2, gt: Vec2) -> f64 {
    let (ne, ng) = (est.norm(), gt.norm());
    match (ne < TRANSLATION_EPS, ng < TRANSLATION_EPS) {
        (true, true) => 0.0,
        (_, true) | (true, _) => 180.0,
        _ => libm::atan2(est.cross(gt).abs(), est.dot(gt)).to_degrees(),
    }
}

/// Mean accuracy over 1° sub-thresholds `1, 2, …, floor(threshold)`.
pub fn maa(errors: &[f64], threshold: f64) -> Result<f64> {
    maa_with_step(errors, threshold, 1.0)
}

/// Mean accuracy over sub-thresholds `step, 2·step, …` up to `threshold`.
/// Non-finite errors never count as accurate.
pub fn maa_with_step(errors: &[f64], threshold: f64, step: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(step > 0.0 && threshold >= step && (threshold / step).is_finite()) {
        return Err(Error::InvalidValue("maa threshold"));
    }
    let steps = libm::floor(threshold / step + 1e-9) as usize;
    let total: f64 = (1..=steps).map(|k| accuracy(errors, k as f64 * step)).sum();
    Ok(total / steps as f64)
}

fn accuracy(errors: &[f64], t: f64) -> f64 {
    errors.iter().filter(|&&e| e <= t).count() as f64 / errors.len() as f64
}

fn intersection_area(a: &Footprint, b: &Footprint) -> Result<f64> {
    Ok(overlay_area(&a.rings, &b.rings, BoolOp::Intersection)?.max(0.0))
}

pub fn iou_2d(pred: &LayoutSolid, gt: &LayoutSolid) -> Result<f64> {
    let inter = intersection_area(&pred.footprint, &gt.footprint)?;
    let union = pred.area() + gt.area() - inter;
    if !(union > 0.0) {
        return Err(Error::ClippingFailure("empty union"));
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Prisms standing on the same floor plane.
pub fn iou_3d(pred: &LayoutSolid, gt: &LayoutSolid) -> Result<f64> {
    let inter = intersection_area(&pred.footprint, &gt.footprint)? * pred.height.min(gt.height);
    let union = pred.volume() + gt.volume() - inter;
    if !(union > 0.0) {
        return Err(Error::ClippingFailure("empty union"));
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Fraction of samples with `max(d/d̄, d̄/d) < 1.25^i`.
pub fn delta_metric(pred: &HorizonDepthMap, gt: &HorizonDepthMap, i: u32) -> Result<f64> {
    let (p, g) = (pred.values(), gt.values());
    if p.len() != g.len() {
        return Err(Error::LengthMismatch { expected: g.len(), found: p.len() });
    }
    let bound = libm::pow(1.25, i as f64);
    let hits = p.iter().zip(g).filter(|(&a, &b)| (a / b).max(b / a) < bound).count();
    Ok(hits as f64 / p.len() as f64)
}

/// Distances from a camera to the footprint boundary along each grid column.
/// `view` maps camera coordinates into footprint coordinates.
pub fn footprint_depths(footprint: &Footprint, view: &PlanarPose, grid: &SampleGrid) -> Result<HorizonDepthMap> {
    let depths = grid
        .iter()
        .map(|u| {
            let dir = view.rotate(Vec2::from_heading(crate::math::TAU * u));
            ray_cast(footprint.edges(), view.t, dir).ok_or(Error::NoIntersection)
        })
        .collect::<Result<Vec<_>>>()?;
    HorizonDepthMap::new(depths)
}

/// Metrics of one evaluated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMetrics {
    pub scene_id: u64,
    pub errors: PairErrors,
    pub iou2d: f64,
    pub iou3d: f64,
    pub delta1: f64,
}

impl PairMetrics {
    pub fn success(&self) -> bool {
        self.errors.pose_valid
    }
}

/// Aggregates over all pairs; failures count as inaccurate at every threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub pairs: Vec<PairMetrics>,
    pub iou2d: f64,
    pub iou3d: f64,
    pub delta1: f64,
    pub r_maa5: f64,
    pub r_maa10: f64,
    pub t_maa5: f64,
    pub t_maa10: f64,
    pub mean_rot_err: f64,
    pub mean_trans_err: f64,
    /// Means over successful registrations only; `None` if there were none.
    pub mean_rot_err_success: Option<f64>,
    pub mean_trans_err_success: Option<f64>,
    pub success_rate: f64,
}

impl MetricsReport {
    pub fn from_pairs(pairs: Vec<PairMetrics>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = pairs.len() as f64;
        let mean = |f: &dyn Fn(&PairMetrics) -> f64| pairs.iter().map(f).sum::<f64>() / n;
        let rot: Vec<f64> = pairs.iter().map(|p| p.errors.rot_for_maa()).collect();
        let trans: Vec<f64> = pairs.iter().map(|p| p.errors.trans_for_maa()).collect();
        let ok: Vec<&PairMetrics> = pairs.iter().filter(|p| p.success()).collect();
        let ok_mean = |f: &dyn Fn(&PairMetrics) -> f64| {
            (!ok.is_empty()).then(|| ok.iter().map(|p| f(p)).sum::<f64>() / ok.len() as f64)
        };
        Ok(Self {
            iou2d: mean(&|p| p.iou2d),
            iou3d: mean(&|p| p.iou3d),
            delta1: mean(&|p| p.delta1),
            r_maa5: maa(&rot, 5.0)?,
            r_maa10: maa(&rot, 10.0)?,
            t_maa5: maa(&trans, 5.0)?,
            t_maa10: maa(&trans, 10.0)?,
            mean_rot_err: mean(&|p| p.errors.rot_err),
            mean_trans_err: mean(&|p| p.errors.trans_ang_err),
            mean_rot_err_success: ok_mean(&|p| p.errors.rot_err),
            mean_trans_err_success: ok_mean(&|p| p.errors.trans_ang_err),
            success_rate: ok.len() as f64 / n,
            pairs,
        })
    }
}
