//! Non-linear registration of two panoramas from their horizon maps.
//!
//! Boundary depths of both panoramas are lifted to XZ points, pano-2 points
//! are interpolated at the predicted correspondences, non-covisible pairs are
//! dropped, and a RANSAC loop over two-point rigid fits picks the pose.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, PlanePointSet, SampleGrid};
use crate::math::{self, cyclic_diff, derive_seed, wrap_unit, Vec2};
use crate::pose::PlanarPose;
use crate::scene::HorizonMaps;

/// Candidate point pairs `src ≈ R·dst + t`, tagged with the pano-1 sample
/// they came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchedPairs {
    /// Pano-1 boundary points.
    pub src: Vec<Vec2>,
    /// Pano-2 points interpolated at the correspondences (pano-2 frame).
    pub dst: Vec<Vec2>,
    pub weight: Vec<f64>,
    /// Canonical sample index; RANSAC orders pairs by it.
    pub index: Vec<usize>,
}

impl MatchedPairs {
    pub fn new(src: Vec<Vec2>, dst: Vec<Vec2>, weight: Vec<f64>) -> Result<Self> {
        let index = (0..src.len()).collect();
        Self::with_index(src, dst, weight, index)
    }

    pub fn with_index(src: Vec<Vec2>, dst: Vec<Vec2>, weight: Vec<f64>, index: Vec<usize>) -> Result<Self> {
        for len in [dst.len(), weight.len(), index.len()] {
            if len != src.len() {
                return Err(Error::LengthMismatch { expected: src.len(), found: len });
            }
        }
        Ok(Self { src, dst, weight, index })
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn select(&self, keep: impl Fn(usize) -> bool) -> MatchedPairs {
        let ids: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        MatchedPairs {
            src: ids.iter().map(|&i| self.src[i]).collect(),
            dst: ids.iter().map(|&i| self.dst[i]).collect(),
            weight: ids.iter().map(|&i| self.weight[i]).collect(),
            index: ids.iter().map(|&i| self.index[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InlierTolerance {
    Absolute(f64),
    /// Fraction of the median distance of the source points from the camera.
    MedianDepthFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Rigid,
    /// Rigid plus uniform scale; for sensitivity studies only.
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_tol: InlierTolerance,
    pub min_sample: usize,
    pub covis_threshold: f64,
    pub min_inliers: usize,
    pub motion: Motion,
    pub seed: u64,
    /// Rounds of trimmed refitting after the consensus refit; 0 disables.
    pub refine_rounds: usize,
    /// Each round keeps consensus pairs whose residual is at most this
    /// multiple of the median residual.
    pub refine_factor: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_tol: InlierTolerance::MedianDepthFraction(0.05),
            min_sample: 2,
            covis_threshold: 0.5,
            min_inliers: 8,
            motion: Motion::Rigid,
            seed: 0,
            refine_rounds: 3,
            refine_factor: 2.0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidValue("iterations must be at least 1"));
        }
        let tol = match self.inlier_tol {
            InlierTolerance::Absolute(t) | InlierTolerance::MedianDepthFraction(t) => t,
        };
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidValue("inlier_tol must be positive"));
        }
        if self.min_sample < 2 {
            return Err(Error::InvalidValue("min_sample must be at least 2"));
        }
        if !(self.covis_threshold > 0.0 && self.covis_threshold < 1.0) {
            return Err(Error::InvalidValue("covis_threshold must lie in (0, 1)"));
        }
        if !(self.refine_factor.is_finite() && self.refine_factor >= 1.0) {
            return Err(Error::InvalidValue("refine_factor must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySource {
    Ceiling,
    Floor,
    /// Ceiling pairs followed by floor pairs.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationConfig {
    pub ransac: RansacConfig,
    pub boundary: BoundarySource,
    /// Horizon-depth resolution `M`; defaults to the map length.
    pub depth_samples: Option<usize>,
    pub filter_covisibility: bool,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            ransac: RansacConfig::default(),
            boundary: BoundarySource::Ceiling,
            depth_samples: None,
            filter_covisibility: true,
        }
    }
}

impl From<RansacConfig> for RegistrationConfig {
    fn from(ransac: RansacConfig) -> Self {
        Self { ransac, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub pose: PlanarPose,
    /// 1 unless [`Motion::Similarity`] is used.
    pub scale: f64,
    /// Inliers of the best model, aligned with the pairs given to RANSAC.
    pub inlier_mask: Vec<bool>,
    /// Residual RMS of the refit pose over the inliers.
    pub rmse: f64,
    pub n_candidates: usize,
    pub inlier_tol: f64,
}

impl RegistrationResult {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&b| b).count()
    }
}

/// Cyclic linear interpolation of `p2` at fractional sample positions `o·m`.
pub fn interpolate_correspondence(p2: &PlanePointSet, o: &[f64]) -> Result<Vec<Vec2>> {
    let m = p2.len();
    if m == 0 || o.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(o.iter()
        .map(|&oi| {
            let pos = wrap_unit(oi) * m as f64;
            let k = libm::floor(pos);
            let f = pos - k;
            let k = k as usize % m;
            p2.points[k].lerp(p2.points[(k + 1) % m], f)
        })
        .collect())
}

/// Keeps pairs with weight ≥ `threshold`, in order.
pub fn covisibility_filter(pairs: &MatchedPairs, threshold: f64, min_sample: usize) -> Result<MatchedPairs> {
    let kept = pairs.select(|i| pairs.weight[i] >= threshold);
    if kept.len() < min_sample {
        return Err(Error::TooFewPairs { found: kept.len(), required: min_sample });
    }
    Ok(kept)
}

struct Moments {
    src_mean: Vec2,
    dst_mean: Vec2,
    /// Σ w (d × s) and Σ w (d · s) over centered points.
    sin: f64,
    cos: f64,
    dst_spread: f64,
}

fn moments(src: &[Vec2], dst: &[Vec2], weights: Option<&[f64]>) -> Result<Moments> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch { expected: src.len(), found: dst.len() });
    }
    if let Some(w) = weights {
        if w.len() != src.len() {
            return Err(Error::LengthMismatch { expected: src.len(), found: w.len() });
        }
    }
    if src.len() < 2 {
        return Err(Error::TooFewPairs { found: src.len(), required: 2 });
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..src.len()).map(w).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateConfiguration);
    }
    let mut src_mean = Vec2::ZERO;
    let mut dst_mean = Vec2::ZERO;
    for i in 0..src.len() {
        src_mean += src[i] * w(i);
        dst_mean += dst[i] * w(i);
    }
    src_mean = src_mean * (1.0 / total);
    dst_mean = dst_mean * (1.0 / total);
    let (mut sin, mut cos, mut dst_spread, mut scale) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..src.len() {
        let s = src[i] - src_mean;
        let d = dst[i] - dst_mean;
        sin += w(i) * d.cross(s);
        cos += w(i) * d.dot(s);
        dst_spread += w(i) * d.norm_sq();
        scale += w(i) * (dst[i].norm_sq() + src[i].norm_sq());
    }
    if dst_spread <= 1e-24 * scale.max(1e-300) || (sin == 0.0 && cos == 0.0) {
        return Err(Error::DegenerateConfiguration);
    }
    Ok(Moments { src_mean, dst_mean, sin, cos, dst_spread })
}

/// Weighted least-squares rigid transform with `src ≈ R(θ)·dst + t`.
pub fn fit_rigid_2d(src: &[Vec2], dst: &[Vec2], weights: Option<&[f64]>) -> Result<PlanarPose> {
    let m = moments(src, dst, weights)?;
    let theta = libm::atan2(m.sin, m.cos);
    let t = m.src_mean - crate::pose::rotate(theta, m.dst_mean);
    Ok(PlanarPose::new(theta, t))
}

/// Weighted least-squares similarity `src ≈ s·R(θ)·dst + t`; returns the
/// pose and the scale `s`.
pub fn fit_similarity_2d(src: &[Vec2], dst: &[Vec2], weights: Option<&[f64]>) -> Result<(PlanarPose, f64)> {
    let m = moments(src, dst, weights)?;
    let theta = libm::atan2(m.sin, m.cos);
    let scale = libm::hypot(m.sin, m.cos) / m.dst_spread;
    let t = m.src_mean - crate::pose::rotate(theta, m.dst_mean) * scale;
    Ok((PlanarPose::new(theta, t), scale))
}

#[derive(Clone, Copy)]
struct Model {
    pose: PlanarPose,
    scale: f64,
}

impl Model {
    fn residual(&self, src: Vec2, dst: Vec2) -> f64 {
        (crate::pose::rotate(self.pose.theta, dst) * self.scale + self.pose.t - src).norm()
    }
}

fn fit(motion: Motion, src: &[Vec2], dst: &[Vec2]) -> Result<Model> {
    match motion {
        Motion::Rigid => fit_rigid_2d(src, dst, None).map(|pose| Model { pose, scale: 1.0 }),
        Motion::Similarity => fit_similarity_2d(src, dst, None).map(|(pose, scale)| Model { pose, scale }),
    }
}

/// Distinct indices in `0..n`, drawn in order.
fn draw_sample(rng: &mut ChaCha8Rng, n: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    while out.len() < k {
        let i = rng.random_range(0..n);
        if !out.contains(&i) {
            out.push(i);
        }
    }
}

/// RANSAC over minimal-sample fits, refit on the winning consensus set and
/// then on trimmed subsets of it.
///
/// Iteration `i` draws from its own generator seeded by `(seed, i)`, so the
/// outcome does not depend on how iterations are scheduled. Pairs are first
/// sorted by their canonical index, which makes the result independent of
/// the input order.
pub fn ransac_pose(pairs: &MatchedPairs, cfg: &RansacConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    let n = pairs.len();
    if n < cfg.min_sample {
        return Err(Error::TooFewPairs { found: n, required: cfg.min_sample });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| pairs.index[i]);
    let src: Vec<Vec2> = order.iter().map(|&i| pairs.src[i]).collect();
    let dst: Vec<Vec2> = order.iter().map(|&i| pairs.dst[i]).collect();

    let tol = match cfg.inlier_tol {
        InlierTolerance::Absolute(t) => t,
        InlierTolerance::MedianDepthFraction(f) => {
            let norms: Vec<f64> = src.iter().map(|p| p.norm()).collect();
            f * math::median(&norms).ok_or(Error::EmptyInput)?
        }
    };
    if !(tol > 0.0) {
        return Err(Error::DegenerateConfiguration);
    }

    let mut best: Option<(usize, f64, Model)> = None;
    let mut sample = Vec::with_capacity(cfg.min_sample);
    let mut s_src = Vec::with_capacity(cfg.min_sample);
    let mut s_dst = Vec::with_capacity(cfg.min_sample);
    for iter in 0..cfg.iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, iter as u64));
        draw_sample(&mut rng, n, cfg.min_sample, &mut sample);
        s_src.clear();
        s_dst.clear();
        s_src.extend(sample.iter().map(|&i| src[i]));
        s_dst.extend(sample.iter().map(|&i| dst[i]));
        let Ok(model) = fit(cfg.motion, &s_src, &s_dst) else {
            continue;
        };
        let mut count = 0usize;
        let mut sse = 0.0;
        for i in 0..n {
            let r = model.residual(src[i], dst[i]);
            if r < tol {
                count += 1;
                sse += r * r;
            }
        }
        if count == 0 {
            continue;
        }
        let rmse = libm::sqrt(sse / count as f64);
        let better = match best {
            None => true,
            Some((c, e, _)) => count > c || (count == c && rmse < e),
        };
        if better {
            best = Some((count, rmse, model));
        }
    }

    let Some((count, _, model)) = best else {
        return Err(Error::NoConsensus { inliers: 0, required: cfg.min_inliers.max(cfg.min_sample) });
    };
    if count < cfg.min_inliers.max(cfg.min_sample) {
        return Err(Error::NoConsensus { inliers: count, required: cfg.min_inliers.max(cfg.min_sample) });
    }
    let sorted_mask: Vec<bool> = (0..n).map(|i| model.residual(src[i], dst[i]) < tol).collect();
    let in_src: Vec<Vec2> = (0..n).filter(|&i| sorted_mask[i]).map(|i| src[i]).collect();
    let in_dst: Vec<Vec2> = (0..n).filter(|&i| sorted_mask[i]).map(|i| dst[i]).collect();
    let mut refit = fit(cfg.motion, &in_src, &in_dst)?;
    for _ in 0..cfg.refine_rounds {
        let res: Vec<f64> = in_src.iter().zip(&in_dst).map(|(s, d)| refit.residual(*s, *d)).collect();
        let cut = cfg.refine_factor * math::median(&res).ok_or(Error::EmptyInput)?;
        let keep: Vec<usize> = (0..res.len()).filter(|&i| res[i] <= cut).collect();
        if keep.len() < cfg.min_sample || keep.len() == res.len() {
            break;
        }
        let k_src: Vec<Vec2> = keep.iter().map(|&i| in_src[i]).collect();
        let k_dst: Vec<Vec2> = keep.iter().map(|&i| in_dst[i]).collect();
        match fit(cfg.motion, &k_src, &k_dst) {
            Ok(m) => refit = m,
            Err(_) => break,
        }
    }
    let sse: f64 = in_src.iter().zip(&in_dst).map(|(s, d)| {
        let r = refit.residual(*s, *d);
        r * r
    }).sum();

    let mut inlier_mask = alloc::vec![false; n];
    for (k, &i) in order.iter().enumerate() {
        inlier_mask[i] = sorted_mask[k];
    }
    Ok(RegistrationResult {
        pose: refit.pose,
        scale: refit.scale,
        inlier_mask,
        rmse: libm::sqrt(sse / in_src.len() as f64),
        n_candidates: n,
        inlier_tol: tol,
    })
}

/// Cyclic resampling of a correspondence map, interpolating along the
/// shorter arc between neighbors.
fn resample_correspondence(o: &[f64], m: usize) -> Vec<f64> {
    let n = o.len();
    if m == n {
        return o.to_vec();
    }
    (0..m)
        .map(|j| {
            let pos = j as f64 * n as f64 / m as f64;
            let k = libm::floor(pos) as usize % n;
            let f = pos - libm::floor(pos);
            let a = o[k];
            wrap_unit(a + cyclic_diff(o[(k + 1) % n], a) * f)
        })
        .collect()
}

/// Candidate pairs for one boundary, before covisibility filtering.
pub fn match_boundary(
    maps1: &HorizonMaps,
    maps2: &HorizonMaps,
    source: BoundarySource,
    depth_samples: Option<usize>,
) -> Result<MatchedPairs> {
    if maps1.len() != maps2.len() {
        return Err(Error::LengthMismatch { expected: maps1.len(), found: maps2.len() });
    }
    let n = maps1.len();
    let m = depth_samples.unwrap_or(n);
    let grid = SampleGrid::new(m)?;
    let points = |maps: &HorizonMaps, ceiling: bool| -> Result<PlanePointSet> {
        let depth = if ceiling {
            let h = geometry::estimate_layout_height(&maps.ceiling, &maps.floor)? - 1.0;
            geometry::boundary_to_depth(&maps.ceiling, h, m)?
        } else {
            geometry::boundary_to_depth(&maps.floor, 1.0, m)?
        };
        geometry::depth_to_plane_points(&depth, &grid)
    };
    let o = resample_correspondence(&maps1.correspondence, m);
    let c = geometry::resample_cyclic(&maps1.covisibility, m)?;
    let build = |ceiling: bool, offset: usize| -> Result<MatchedPairs> {
        let p1 = points(maps1, ceiling)?;
        let p2 = points(maps2, ceiling)?;
        let dst = interpolate_correspondence(&p2, &o)?;
        MatchedPairs::with_index(p1.points, dst, c.clone(), (offset..offset + m).collect())
    };
    match source {
        BoundarySource::Ceiling => build(true, 0),
        BoundarySource::Floor => build(false, 0),
        BoundarySource::Both => {
            let mut a = build(true, 0)?;
            let b = build(false, m)?;
            a.src.extend(b.src);
            a.dst.extend(b.dst);
            a.weight.extend(b.weight);
            a.index.extend(b.index);
            Ok(a)
        }
    }
}

/// Full registration: depths, point sets, correspondence interpolation,
/// covisibility filter, RANSAC.
pub fn register(maps1: &HorizonMaps, maps2: &HorizonMaps, cfg: &RegistrationConfig) -> Result<RegistrationResult> {
    cfg.ransac.validate()?;
    let pairs = match_boundary(maps1, maps2, cfg.boundary, cfg.depth_samples)?;
    let pairs = if cfg.filter_covisibility {
        covisibility_filter(&pairs, cfg.ransac.covis_threshold, cfg.ransac.min_sample)?
    } else {
        pairs
    };
    ransac_pose(&pairs, &cfg.ransac)
}
