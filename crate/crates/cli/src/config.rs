//! Run and sweep configuration files.
//!
//! Both are JSON with a `format_version` field. Every setting is optional
//! and falls back to the library defaults.

use std::path::Path;

use panolayout_core::fusion::{FootprintSource, LayoutConfig};
use panolayout_core::registration::{BoundarySource, InlierTolerance, RegistrationConfig};
use panolayout_core::scene::{NoiseSpec, RoomKind, RoomSpec, SceneSpec};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Manhattan,
    Convex,
    Star,
    #[value(name = "lshape")]
    Lshape,
}

impl From<KindArg> for RoomKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Manhattan => RoomKind::Manhattan,
            KindArg::Convex => RoomKind::Convex,
            KindArg::Star => RoomKind::Star,
            KindArg::Lshape => RoomKind::LShape,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    Floor,
    Ceiling,
}

impl From<SourceArg> for FootprintSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Floor => FootprintSource::Floor,
            SourceArg::Ceiling => FootprintSource::Ceiling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Ceiling,
    Floor,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ToleranceArg {
    Absolute(f64),
    MedianDepthFraction(f64),
}

/// Partial [`RegistrationConfig`]; absent fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrationOverrides {
    pub iterations: Option<usize>,
    pub inlier_tol: Option<ToleranceArg>,
    pub min_sample: Option<usize>,
    pub covis_threshold: Option<f64>,
    pub min_inliers: Option<usize>,
    pub seed: Option<u64>,
    pub refine_rounds: Option<usize>,
    pub refine_factor: Option<f64>,
    pub boundary: Option<BoundaryArg>,
    pub depth_samples: Option<usize>,
    pub filter_covisibility: Option<bool>,
}

impl RegistrationOverrides {
    pub fn apply(&self, cfg: &mut RegistrationConfig) {
        let r = &mut cfg.ransac;
        if let Some(v) = self.iterations {
            r.iterations = v;
        }
        if let Some(t) = self.inlier_tol {
            r.inlier_tol = match t {
                ToleranceArg::Absolute(x) => InlierTolerance::Absolute(x),
                ToleranceArg::MedianDepthFraction(x) => InlierTolerance::MedianDepthFraction(x),
            };
        }
        if let Some(v) = self.min_sample {
            r.min_sample = v;
        }
        if let Some(v) = self.covis_threshold {
            r.covis_threshold = v;
        }
        if let Some(v) = self.min_inliers {
            r.min_inliers = v;
        }
        if let Some(v) = self.seed {
            r.seed = v;
        }
        if let Some(v) = self.refine_rounds {
            r.refine_rounds = v;
        }
        if let Some(v) = self.refine_factor {
            r.refine_factor = v;
        }
        if let Some(b) = self.boundary {
            cfg.boundary = match b {
                BoundaryArg::Ceiling => BoundarySource::Ceiling,
                BoundaryArg::Floor => BoundarySource::Floor,
                BoundaryArg::Both => BoundarySource::Both,
            };
        }
        if self.depth_samples.is_some() {
            cfg.depth_samples = self.depth_samples;
        }
        if let Some(v) = self.filter_covisibility {
            cfg.filter_covisibility = v;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutOverrides {
    pub footprint: Option<SourceArg>,
    pub manhattan: Option<bool>,
}

impl LayoutOverrides {
    pub fn apply(&self, cfg: &mut LayoutConfig) {
        if let Some(s) = self.footprint {
            cfg.source = s.into();
        }
        if let Some(m) = self.manhattan {
            cfg.manhattan = m;
        }
    }
}

/// Settings file given by `--config` or `PANOLAYOUT_CONFIG`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u64,
    #[serde(default)]
    pub registration: RegistrationOverrides,
    #[serde(default)]
    pub layout: LayoutOverrides,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => formats::load(p),
            None => Ok(Self::default()),
        }
    }
}

fn default_kind() -> KindArg {
    KindArg::Convex
}

fn default_vertices() -> usize {
    6
}

fn default_extent() -> f64 {
    5.0
}

fn default_ceiling_min() -> f64 {
    1.6
}

fn default_ceiling_max() -> f64 {
    2.2
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSettings {
    #[serde(default = "default_kind")]
    pub kind: KindArg,
    #[serde(default = "default_vertices")]
    pub vertices: usize,
    #[serde(default = "default_extent")]
    pub extent: f64,
    #[serde(default = "default_ceiling_min")]
    pub ceiling_min: f64,
    #[serde(default = "default_ceiling_max")]
    pub ceiling_max: f64,
}

impl Default for RoomSettings {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            vertices: default_vertices(),
            extent: default_extent(),
            ceiling_min: default_ceiling_min(),
            ceiling_max: default_ceiling_max(),
        }
    }
}

impl RoomSettings {
    pub fn scene_spec(&self, seed: u64) -> SceneSpec {
        SceneSpec {
            room: RoomSpec { vertex_budget: self.vertices, extent: self.extent, kind: self.kind.into(), seed },
            ceiling_min: self.ceiling_min,
            ceiling_max: self.ceiling_max,
        }
    }
}

/// Noise grid for `sweep`. Cells are visited with `sigma_v` outermost and
/// `flip_p` innermost.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub format_version: u64,
    pub sigma_v: Vec<f64>,
    pub sigma_o: Vec<f64>,
    pub outlier_frac: Vec<f64>,
    pub flip_p: Vec<f64>,
    pub scenes_per_cell: usize,
    pub base_seed: Option<u64>,
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub room: RoomSettings,
    #[serde(default)]
    pub registration: RegistrationOverrides,
    #[serde(default)]
    pub layout: LayoutOverrides,
}

impl SweepConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let cfg: Self = formats::load(path)?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn validate(&self, path: &Path) -> CliResult<()> {
        for (name, list) in [
            ("sigma_v", &self.sigma_v),
            ("sigma_o", &self.sigma_o),
            ("outlier_frac", &self.outlier_frac),
            ("flip_p", &self.flip_p),
        ] {
            if list.is_empty() {
                return Err(CliError::schema(path, format!("{name} must list at least one value")));
            }
        }
        if self.scenes_per_cell == 0 {
            return Err(CliError::schema(path, "scenes_per_cell must be at least 1"));
        }
        for cell in self.cells() {
            NoiseSpec { seed: 0, ..cell }.validate().map_err(|e| CliError::schema(path, e.to_string()))?;
        }
        Ok(())
    }

    /// Noise cells in output order, with seed 0.
    pub fn cells(&self) -> Vec<NoiseSpec> {
        let mut out = Vec::new();
        for &sigma_v in &self.sigma_v {
            for &sigma_o in &self.sigma_o {
                for &outlier_frac in &self.outlier_frac {
                    for &flip_p in &self.flip_p {
                        out.push(NoiseSpec { sigma_v, sigma_o, outlier_frac, flip_p, seed: 0 });
                    }
                }
            }
        }
        out
    }
}
