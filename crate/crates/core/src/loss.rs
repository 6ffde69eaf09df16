//! Reference implementations of the training losses.
//!
//! These are plain scalar evaluations over arrays, meant for validating
//! external training code and for scoring perturbed maps against oracle maps.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::SampleGrid;
use crate::math::{cyclic_diff, cyclic_lerp, wrap_unit};

/// Probabilities are clamped to `[LOG_EPS, 1 - LOG_EPS]` before taking logs.
pub const LOG_EPS: f64 = 1e-7;

/// Correspondence terms only count where the target covisibility reaches this.
pub const COVIS_GATE: f64 = 0.5;

/// How the cyclic correspondence distance wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CyclicMode {
    /// `min(|o - ō|, 1 - |o - ō|)`.
    #[default]
    Symmetric,
    /// `min(|o - ō|, |1 - ō + o|)`, which only wraps when `o < ō`.
    OneSided,
}

impl CyclicMode {
    pub fn distance(self, o: f64, target: f64) -> f64 {
        let d = (o - target).abs();
        match self {
            CyclicMode::Symmetric => d.min(1.0 - d),
            CyclicMode::OneSided => d.min((1.0 - target + o).abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weights of layout, correspondence, covisibility, cycle correspondence
    /// and cycle covisibility terms.
    pub lambda: [f64; 5],
    /// Weight of positive samples in the covisibility terms.
    pub alpha: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda: [1.0; 5], alpha: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub layout: f64,
    pub correspondence: f64,
    pub covisibility: f64,
    pub cycle_correspondence: f64,
    pub cycle_covisibility: f64,
}

impl LossComponents {
    pub fn as_array(&self) -> [f64; 5] {
        [self.layout, self.correspondence, self.covisibility, self.cycle_correspondence, self.cycle_covisibility]
    }
}

fn check(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

/// Sum of L1 distances over the four depth maps, divided by the map length.
///
/// Maps are ordered (ceiling 1, floor 1, ceiling 2, floor 2), though any
/// consistent order gives the same value.
pub fn layout_loss(pred: [&[f64]; 4], gt: [&[f64]; 4]) -> Result<f64> {
    let m = gt[0].len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    let mut sum = 0.0;
    for (p, g) in pred.iter().zip(gt.iter()) {
        check(m, g.len())?;
        check(m, p.len())?;
        sum += p.iter().zip(g.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    Ok(sum / m as f64)
}

/// Weighted binary cross-entropy, negated so that it is minimized by a
/// perfect prediction.
pub fn covis_loss(pred: &[f64], gt: &[f64], alpha: f64) -> Result<f64> {
    check(gt.len(), pred.len())?;
    if gt.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidValue("alpha"));
    }
    let sum: f64 = pred
        .iter()
        .zip(gt)
        .map(|(&c, &t)| {
            let c = c.clamp(LOG_EPS, 1.0 - LOG_EPS);
            alpha * t * libm::log(c) + (1.0 - t) * libm::log(1.0 - c)
        })
        .sum();
    Ok(-sum / gt.len() as f64)
}

/// Cyclic correspondence error averaged over all samples, gated samples contributing zero.
pub fn correspondence_loss(pred: &[f64], gt: &[f64], gt_covis: &[f64], mode: CyclicMode) -> Result<f64> {
    check(gt.len(), pred.len())?;
    check(gt.len(), gt_covis.len())?;
    if gt.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = (0..gt.len())
        .filter(|&i| gt_covis[i] >= COVIS_GATE)
        .map(|i| mode.distance(pred[i], gt[i]))
        .sum();
    Ok(sum / gt.len() as f64)
}

/// Cycle terms from network outputs already evaluated at the target
/// correspondences: the correspondence must map back onto the grid columns
/// and the covisibility onto its target.
pub fn cycle_losses(
    composed_corr: &[f64],
    composed_covis: &[f64],
    grid: &SampleGrid,
    gt_covis: &[f64],
    alpha: f64,
    mode: CyclicMode,
) -> Result<(f64, f64)> {
    grid.check_len(composed_corr.len())?;
    let u: Vec<f64> = grid.iter().collect();
    Ok((correspondence_loss(composed_corr, &u, gt_covis, mode)?, covis_loss(composed_covis, gt_covis, alpha)?))
}

/// The other panorama's correspondence and covisibility maps read at
/// columns `at`, by cyclic linear interpolation (correspondence along the
/// shorter arc). Feeds [`cycle_losses`] when only per-pano maps are available.
pub fn compose_through(other_corr: &[f64], other_covis: &[f64], at: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = other_corr.len();
    check(n, other_covis.len())?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let corr = at
        .iter()
        .map(|&o| {
            let pos = wrap_unit(o) * n as f64;
            let k = libm::floor(pos) as usize % n;
            let f = pos - libm::floor(pos);
            let a = other_corr[k];
            wrap_unit(a + cyclic_diff(other_corr[(k + 1) % n], a) * f)
        })
        .collect();
    let covis = at.iter().map(|&o| cyclic_lerp(other_covis, wrap_unit(o) * n as f64)).collect();
    Ok((corr, covis))
}

pub fn total_loss(c: &LossComponents, w: &LossWeights) -> f64 {
    c.as_array().iter().zip(w.lambda.iter()).map(|(x, l)| x * l).sum()
}
