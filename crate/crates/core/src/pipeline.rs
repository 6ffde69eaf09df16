//! End-to-end evaluation of one panorama pair: maps, registration, fusion, metrics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fusion::{boundary_to_layout, fuse, FusionWarning, LayoutConfig, LayoutSolid};
use crate::geometry::SampleGrid;
use crate::math::derive_seed;
use crate::metrics::{angular_errors, delta_metric, footprint_depths, iou_2d, iou_3d, PairErrors, PairMetrics};
use crate::polygon::Footprint;
use crate::pose::PlanarPose;
use crate::registration::{register, RegistrationConfig, RegistrationResult};
use crate::scene::{cast_horizon_depth, ground_truth_maps, perturb_maps, HorizonMaps, NoiseSpec, RoomScene};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub registration: RegistrationConfig,
    pub layout: LayoutConfig,
}

/// Exponent of the depth accuracy reported per pair.
pub const DELTA_EXPONENT: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    /// `None` when registration failed; the layout then comes from pano 1 alone.
    pub registration: Option<RegistrationResult>,
    pub failure: Option<Error>,
    pub layout: LayoutSolid,
    pub warnings: Vec<FusionWarning>,
    pub metrics: PairMetrics,
}

/// The scene room seen from pano 1, extruded to the scene ceiling height.
pub fn ground_truth_layout(scene: &RoomScene) -> Result<LayoutSolid> {
    LayoutSolid::new(Footprint::from_ring(scene.room_in_pano1()), scene.ceiling_height)
}

/// Perturbs both panoramas' maps, each with its own stream derived from `noise.seed`.
pub fn perturb_pair(m1: &HorizonMaps, m2: &HorizonMaps, noise: &NoiseSpec) -> Result<(HorizonMaps, HorizonMaps)> {
    let for_pano = |k: u64| NoiseSpec { seed: derive_seed(noise.seed, k), ..*noise };
    Ok((perturb_maps(m1, &for_pano(1))?, perturb_maps(m2, &for_pano(2))?))
}

/// Oracle maps of both panoramas, perturbed by [`perturb_pair`].
pub fn noisy_maps(scene: &RoomScene, grid: &SampleGrid, noise: &NoiseSpec) -> Result<(HorizonMaps, HorizonMaps)> {
    let (m1, m2) = ground_truth_maps(scene, grid)?;
    perturb_pair(&m1, &m2, noise)
}

/// 2D IoU, 3D IoU and depth accuracy of a layout in the pano-1 frame.
///
/// Depth accuracy compares ray-cast depths into the predicted footprint with
/// ray-cast depths into the true room, averaged over pano 1 and, when a pose
/// is given, pano 2 placed by that pose.
pub fn score_layout(scene: &RoomScene, layout: &LayoutSolid, pose: Option<&PlanarPose>, grid: &SampleGrid, delta_i: u32) -> Result<(f64, f64, f64)> {
    let gt = ground_truth_layout(scene)?;
    let iou2d = iou_2d(layout, &gt)?;
    let iou3d = iou_3d(layout, &gt)?;
    let delta_for = |view: &PlanarPose, cam: &crate::scene::Camera| -> Result<f64> {
        let pred = footprint_depths(&layout.footprint, view, grid)?;
        let truth = cast_horizon_depth(&scene.room, cam.position, cam.yaw, grid)?;
        delta_metric(&pred, &truth, delta_i)
    };
    let mut delta = delta_for(&PlanarPose::IDENTITY, &scene.cam1)?;
    if let Some(p) = pose {
        delta = 0.5 * (delta + delta_for(p, &scene.cam2)?);
    }
    Ok((iou2d, iou3d, delta))
}

/// Registers, fuses and scores a pair of map sets against their scene.
///
/// Registration failures are recorded in the outcome rather than returned.
pub fn evaluate_maps(scene: &RoomScene, scene_id: u64, maps1: &HorizonMaps, maps2: &HorizonMaps, cfg: &PipelineConfig) -> Result<PairOutcome> {
    let grid = maps1.grid()?;
    let (registration, failure) = match register(maps1, maps2, &cfg.registration) {
        Ok(r) => (Some(r), None),
        Err(e) if e.is_registration_failure() => (None, Some(e)),
        Err(e) => return Err(e),
    };
    let (layout, errors) = match &registration {
        Some(r) => (fuse(maps1, maps2, &r.pose, &cfg.layout)?, angular_errors(&r.pose, &scene.pose())),
        None => (boundary_to_layout(maps1, &cfg.layout)?, PairErrors::failure()),
    };
    let (iou2d, iou3d, delta1) = score_layout(scene, &layout.value, registration.as_ref().map(|r| &r.pose), &grid, DELTA_EXPONENT)?;
    Ok(PairOutcome {
        registration,
        failure,
        layout: layout.value,
        warnings: layout.warnings,
        metrics: PairMetrics { scene_id, errors, iou2d, iou3d, delta1 },
    })
}

pub fn evaluate_pair(scene: &RoomScene, scene_id: u64, grid: &SampleGrid, noise: &NoiseSpec, cfg: &PipelineConfig) -> Result<PairOutcome> {
    let (m1, m2) = noisy_maps(scene, grid, noise)?;
    evaluate_maps(scene, scene_id, &m1, &m2, cfg)
}
