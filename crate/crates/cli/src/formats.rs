//! JSON documents exchanged between commands.
//!
//! Every document carries `format_version`; a missing or different version
//! is rejected before the rest of the document is read. Unknown fields are
//! rejected too. Floats are written in shortest round-trip form, so loading
//! a saved document reproduces it exactly.

use std::path::Path;

use panolayout_core::fusion::{FusionWarning, LayoutSolid};
use panolayout_core::geometry::{BoundaryKind, BoundaryMap};
use panolayout_core::polygon::{Footprint, Ring};
use panolayout_core::registration::RegistrationResult;
use panolayout_core::scene::{Camera, HorizonMaps, NoiseSpec, RoomPolygon, RoomScene};
use panolayout_core::{PlanarPose, Vec2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u64 = 1;

fn xz(p: Vec2) -> [f64; 2] {
    [p.x, p.z]
}

fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraJson {
    pub position: [f64; 2],
    /// Heading of the panorama's `u = 0` column, radians.
    pub yaw: f64,
}

impl From<&Camera> for CameraJson {
    fn from(c: &Camera) -> Self {
        Self { position: xz(c.position), yaw: c.yaw }
    }
}

impl From<&CameraJson> for Camera {
    fn from(c: &CameraJson) -> Self {
        Camera { position: vec2(c.position), yaw: c.yaw }
    }
}

/// A room with two cameras, in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePairFile {
    pub format_version: u64,
    pub scene_id: u64,
    pub seed: u64,
    pub grid_n: usize,
    pub room: Vec<[f64; 2]>,
    pub cam1: CameraJson,
    pub cam2: CameraJson,
    pub ceiling_height: f64,
}

impl ScenePairFile {
    pub fn new(scene: &RoomScene, scene_id: u64, seed: u64, grid_n: usize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scene_id,
            seed,
            grid_n,
            room: scene.room.vertices().iter().copied().map(xz).collect(),
            cam1: (&scene.cam1).into(),
            cam2: (&scene.cam2).into(),
            ceiling_height: scene.ceiling_height,
        }
    }

    pub fn scene(&self) -> panolayout_core::Result<RoomScene> {
        let room = RoomPolygon::new(self.room.iter().copied().map(vec2).collect())?;
        RoomScene::new(room, (&self.cam1).into(), (&self.cam2).into(), self.ceiling_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Perturbed,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanoMapsJson {
    pub ceiling: Vec<f64>,
    pub floor: Vec<f64>,
    pub correspondence: Vec<f64>,
    pub covisibility: Vec<f64>,
}

impl From<&HorizonMaps> for PanoMapsJson {
    fn from(m: &HorizonMaps) -> Self {
        Self {
            ceiling: m.ceiling.values().to_vec(),
            floor: m.floor.values().to_vec(),
            correspondence: m.correspondence.clone(),
            covisibility: m.covisibility.clone(),
        }
    }
}

impl PanoMapsJson {
    fn maps(&self) -> panolayout_core::Result<HorizonMaps> {
        HorizonMaps::new(
            BoundaryMap::new(BoundaryKind::Ceiling, self.ceiling.clone())?,
            BoundaryMap::new(BoundaryKind::Floor, self.floor.clone())?,
            self.correspondence.clone(),
            self.covisibility.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseJson {
    pub sigma_v: f64,
    pub sigma_o: f64,
    pub outlier_frac: f64,
    pub flip_p: f64,
    pub seed: u64,
}

impl From<NoiseSpec> for NoiseJson {
    fn from(n: NoiseSpec) -> Self {
        Self { sigma_v: n.sigma_v, sigma_o: n.sigma_o, outlier_frac: n.outlier_frac, flip_p: n.flip_p, seed: n.seed }
    }
}

impl From<NoiseJson> for NoiseSpec {
    fn from(n: NoiseJson) -> Self {
        NoiseSpec { sigma_v: n.sigma_v, sigma_o: n.sigma_o, outlier_frac: n.outlier_frac, flip_p: n.flip_p, seed: n.seed }
    }
}

/// The four horizon maps of both panoramas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsFile {
    pub format_version: u64,
    pub grid_n: usize,
    pub provenance: Provenance,
    /// Noise applied on top of oracle maps, for `perturbed` files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseJson>,
    pub pano1: PanoMapsJson,
    pub pano2: PanoMapsJson,
}

impl MapsFile {
    pub fn new(m1: &HorizonMaps, m2: &HorizonMaps, provenance: Provenance, noise: Option<NoiseSpec>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            grid_n: m1.len(),
            provenance,
            noise: noise.map(Into::into),
            pano1: m1.into(),
            pano2: m2.into(),
        }
    }

    /// Both map sets, checked against `grid_n` and the value ranges.
    pub fn maps(&self, path: &Path) -> CliResult<(HorizonMaps, HorizonMaps)> {
        for (name, p) in [("pano1", &self.pano1), ("pano2", &self.pano2)] {
            for (field, len) in [
                ("ceiling", p.ceiling.len()),
                ("floor", p.floor.len()),
                ("correspondence", p.correspondence.len()),
                ("covisibility", p.covisibility.len()),
            ] {
                if len != self.grid_n {
                    return Err(CliError::schema(path, format!("{name}.{field} has {len} values, grid_n is {}", self.grid_n)));
                }
            }
        }
        let load = |p: &PanoMapsJson, name: &str| p.maps().map_err(|e| CliError::schema(path, format!("{name}: {e}")));
        Ok((load(&self.pano1, "pano1")?, load(&self.pano2, "pano2")?))
    }
}

/// Estimated pose of pano 2 in the pano-1 frame, `p¹ = R(θ)·p² + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFile {
    pub format_version: u64,
    pub success: bool,
    pub theta_deg: Option<f64>,
    pub t: Option<[f64; 2]>,
    pub rmse: Option<f64>,
    pub n_inliers: usize,
    pub n_candidates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PoseFile {
    pub fn success(r: &RegistrationResult) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            success: true,
            theta_deg: Some(r.pose.theta.to_degrees()),
            t: Some(xz(r.pose.t)),
            rmse: Some(r.rmse),
            n_inliers: r.inlier_count(),
            n_candidates: r.n_candidates,
            error: None,
        }
    }

    pub fn failure(e: &panolayout_core::Error) -> Self {
        let (n_inliers, n_candidates) = match *e {
            panolayout_core::Error::NoConsensus { inliers, .. } => (inliers, 0),
            panolayout_core::Error::TooFewPairs { found, .. } => (0, found),
            _ => (0, 0),
        };
        Self {
            format_version: FORMAT_VERSION,
            success: false,
            theta_deg: None,
            t: None,
            rmse: None,
            n_inliers,
            n_candidates,
            error: Some(e.to_string()),
        }
    }

    /// The pose of a successful registration.
    pub fn pose(&self, path: &Path) -> CliResult<Option<PlanarPose>> {
        match (self.success, self.theta_deg, self.t) {
            (false, _, _) => Ok(None),
            (true, Some(th), Some(t)) if th.is_finite() && t.iter().all(|v| v.is_finite()) => {
                Ok(Some(PlanarPose::new(th.to_radians(), vec2(t))))
            }
            _ => Err(CliError::schema(path, "successful pose needs finite theta_deg and t")),
        }
    }
}

/// Fused layout in the pano-1 frame: outer rings counter-clockwise, holes clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    pub format_version: u64,
    pub height: f64,
    pub rings: Vec<Vec<[f64; 2]>>,
    /// False when registration failed and only pano 1 contributed.
    pub registered: bool,
    pub warnings: Vec<String>,
}

impl LayoutFile {
    pub fn new(layout: &LayoutSolid, registered: bool, warnings: &[FusionWarning]) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            height: layout.height,
            rings: layout.footprint.rings.iter().map(|r| r.points().iter().copied().map(xz).collect()).collect(),
            registered,
            warnings: warnings.iter().map(warning_name).collect(),
        }
    }

    pub fn layout(&self, path: &Path) -> CliResult<LayoutSolid> {
        let fp = Footprint::new(self.rings.iter().map(|r| Ring::new(r.iter().copied().map(vec2).collect())).collect());
        if fp.is_empty() || !fp.is_valid() {
            return Err(CliError::schema(path, "layout rings are empty or not simple"));
        }
        LayoutSolid::new(fp, self.height).map_err(|e| CliError::schema(path, e.to_string()))
    }
}

pub fn warning_name(w: &FusionWarning) -> String {
    match w {
        FusionWarning::SelfIntersectingFootprint => "self_intersecting_footprint".into(),
        FusionWarning::DisconnectedUnion { components } => format!("disconnected_union:{components}"),
        FusionWarning::ManhattanSnapSkipped => "manhattan_snap_skipped".into(),
    }
}

/// Reads a versioned JSON document.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path)
}

pub fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::schema(path, format!("invalid JSON: {e}")))?;
    match value.get("format_version") {
        None => return Err(CliError::schema(path, "missing format_version")),
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(CliError::schema(path, format!("unsupported format_version {v} (expected {FORMAT_VERSION})"))),
    }
    serde_json::from_value(value).map_err(|e| CliError::schema(path, e.to_string()))
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}
