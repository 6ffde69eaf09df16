use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use panolayout_core::fusion::{boundary_to_layout, fuse, LayoutConfig, LayoutSolid};
use panolayout_core::geometry::{boundary_to_depth, SampleGrid};
use panolayout_core::loss::{
    compose_through, correspondence_loss, covis_loss, cycle_losses, layout_loss, total_loss, CyclicMode, LossComponents,
    LossWeights,
};
use panolayout_core::math::derive_seed;
use panolayout_core::metrics::{angular_errors, MetricsReport, PairErrors, PairMetrics};
use panolayout_core::pipeline::{evaluate_pair, perturb_pair, score_layout, PipelineConfig, DELTA_EXPONENT};
use panolayout_core::registration::{register, RegistrationConfig};
use panolayout_core::scene::{generate_scene, ground_truth_maps, HorizonMaps, NoiseSpec, RoomScene};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{KindArg, RoomSettings, RunConfig, SourceArg, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{self, LayoutFile, MapsFile, PoseFile, Provenance, ScenePairFile, FORMAT_VERSION};
use crate::io::{emit, write_atomic};
use crate::report;

pub const DEFAULT_GRID_N: usize = 256;

/// Two-panorama room layout: synthetic scenes, registration, fusion and evaluation.
///
/// Exit status is 0 on success, 1 for usage, schema and I/O errors and 2
/// when registration finds no consistent pose.
#[derive(Debug, Parser)]
#[command(name = "panolayout", version)]
pub struct Cli {
    /// Seed for every random choice a command makes [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Samples per panorama for commands that create maps [default: from input, else 256].
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Output file (directory for `synth`); standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON settings overriding registration and layout defaults.
    #[arg(long, global = true, env = "PANOLAYOUT_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random scene files and a manifest.
    Synth(SynthArgs),
    /// Ray-cast oracle maps for a scene.
    GtMaps {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Add seeded noise to a maps file.
    Perturb(PerturbArgs),
    /// Estimate the relative pose from a maps file.
    Register {
        #[arg(long)]
        maps: PathBuf,
    },
    /// Fuse both panoramas' layouts with a pose into one layout.
    Fuse(FuseArgs),
    /// Score layouts and poses against their scenes as CSV.
    Eval(EvalArgs),
    /// Run the full pipeline over a grid of noise settings.
    Sweep {
        #[arg(long)]
        sweep: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "convex")]
    pub kind: KindArg,
    /// Vertex budget per room.
    #[arg(long, default_value_t = 6)]
    pub vertices: usize,
    /// Rough room diameter.
    #[arg(long, default_value_t = 5.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 1.6)]
    pub ceiling_min: f64,
    #[arg(long, default_value_t = 2.2)]
    pub ceiling_max: f64,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub maps: PathBuf,
    /// Std-dev of Gaussian noise on boundary `v`.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_v: f64,
    /// Std-dev of Gaussian noise on correspondences.
    #[arg(long, default_value_t = 0.0)]
    pub sigma_o: f64,
    /// Fraction of correspondences replaced by uniform outliers.
    #[arg(long, default_value_t = 0.0)]
    pub outlier_frac: f64,
    /// Probability of flipping each covisibility label.
    #[arg(long, default_value_t = 0.0)]
    pub flip_p: f64,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub maps: PathBuf,
    #[arg(long)]
    pub pose: PathBuf,
    /// Also write an extruded OBJ mesh here.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Snap each footprint to its two dominant wall directions.
    #[arg(long)]
    pub manhattan: bool,
    #[arg(long, value_enum)]
    pub footprint: Option<SourceArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Scene files; the i-th scene pairs with the i-th layout, pose and maps.
    #[arg(long, required = true)]
    pub scene: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub layout: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub pose: Vec<PathBuf>,
    /// Predicted maps, compared with oracle maps when `--losses` is set.
    #[arg(long)]
    pub maps: Vec<PathBuf>,
    /// Add reference loss columns.
    #[arg(long, requires = "maps")]
    pub losses: bool,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed.unwrap_or(0), cli.grid_n.unwrap_or(DEFAULT_GRID_N), out),
        Command::GtMaps { scene } => gt_maps(scene, cli.grid_n, out),
        Command::Perturb(a) => perturb(a, cli.seed.unwrap_or(0), out),
        Command::Register { maps } => {
            let mut reg = RegistrationConfig::default();
            cfg.registration.apply(&mut reg);
            if let Some(s) = cli.seed {
                reg.ransac.seed = s;
            }
            register_cmd(maps, &reg, out)
        }
        Command::Fuse(a) => {
            let mut layout = LayoutConfig::default();
            cfg.layout.apply(&mut layout);
            if let Some(s) = a.footprint {
                layout.source = s.into();
            }
            layout.manhattan |= a.manhattan;
            fuse_cmd(a, &layout, out)
        }
        Command::Eval(a) => eval(a, cli.grid_n, out),
        Command::Sweep { sweep: path } => {
            let mut sc = SweepConfig::load(path)?;
            if let Some(s) = cli.seed {
                sc.base_seed = Some(s);
            }
            if cli.grid_n.is_some() {
                sc.grid_n = cli.grid_n;
            }
            emit(out, &sweep(&sc)?)
        }
    }
}

fn grid(n: usize) -> CliResult<SampleGrid> {
    SampleGrid::new(n).map_err(|e| CliError::Usage(format!("--grid-n: {e}")))
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    scene_id: u64,
    seed: u64,
}

#[derive(Serialize)]
struct Manifest {
    format_version: u64,
    seed: u64,
    count: usize,
    kind: KindArg,
    vertices: usize,
    extent: f64,
    ceiling_min: f64,
    ceiling_max: f64,
    grid_n: usize,
    scenes: Vec<ManifestEntry>,
}

impl Serialize for KindArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            KindArg::Manhattan => "manhattan",
            KindArg::Convex => "convex",
            KindArg::Star => "star",
            KindArg::Lshape => "lshape",
        })
    }
}

/// Scene `i` uses the child seed `derive_seed(seed, i)`.
fn synth(a: &SynthArgs, seed: u64, grid_n: usize, out: Option<&Path>) -> CliResult<()> {
    let dir = out.ok_or_else(|| CliError::Usage("synth needs --out DIR".into()))?;
    grid(grid_n)?;
    let room = RoomSettings { kind: a.kind, vertices: a.vertices, extent: a.extent, ceiling_min: a.ceiling_min, ceiling_max: a.ceiling_max };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut scenes = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let child = derive_seed(seed, i as u64);
        let scene = generate_scene(&room.scene_spec(child))?;
        let file = format!("scene_{i:04}.json");
        write_atomic(&dir.join(&file), formats::to_json(&ScenePairFile::new(&scene, i as u64, child, grid_n)).as_bytes())?;
        scenes.push(ManifestEntry { file, scene_id: i as u64, seed: child });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        seed,
        count: a.count,
        kind: a.kind,
        vertices: a.vertices,
        extent: a.extent,
        ceiling_min: a.ceiling_min,
        ceiling_max: a.ceiling_max,
        grid_n,
        scenes,
    };
    write_atomic(&dir.join("manifest.json"), formats::to_json(&manifest).as_bytes())
}

fn load_scene(path: &Path) -> CliResult<(ScenePairFile, RoomScene)> {
    let doc: ScenePairFile = formats::load(path)?;
    let scene = doc.scene().map_err(|e| CliError::schema(path, e.to_string()))?;
    Ok((doc, scene))
}

fn gt_maps(scene_path: &Path, grid_n: Option<usize>, out: Option<&Path>) -> CliResult<()> {
    let (doc, scene) = load_scene(scene_path)?;
    let (m1, m2) = ground_truth_maps(&scene, &grid(grid_n.unwrap_or(doc.grid_n))?)?;
    emit(out, &formats::to_json(&MapsFile::new(&m1, &m2, Provenance::Oracle, None)))
}

fn load_maps(path: &Path) -> CliResult<(HorizonMaps, HorizonMaps)> {
    formats::load::<MapsFile>(path)?.maps(path)
}

/// Each panorama gets its own noise stream derived from `seed`.
fn perturb(a: &PerturbArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let (m1, m2) = load_maps(&a.maps)?;
    let noise = NoiseSpec { sigma_v: a.sigma_v, sigma_o: a.sigma_o, outlier_frac: a.outlier_frac, flip_p: a.flip_p, seed };
    noise.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let (p1, p2) = perturb_pair(&m1, &m2, &noise)?;
    emit(out, &formats::to_json(&MapsFile::new(&p1, &p2, Provenance::Perturbed, Some(noise))))
}

/// The pose file is written even when registration fails, before exiting with 2.
fn register_cmd(maps: &Path, cfg: &RegistrationConfig, out: Option<&Path>) -> CliResult<()> {
    let (m1, m2) = load_maps(maps)?;
    cfg.ransac.validate().map_err(|e| CliError::Usage(format!("config: {e}")))?;
    match register(&m1, &m2, cfg) {
        Ok(r) => emit(out, &formats::to_json(&PoseFile::success(&r))),
        Err(e) if e.is_registration_failure() => {
            emit(out, &formats::to_json(&PoseFile::failure(&e)))?;
            Err(CliError::Registration(e))
        }
        Err(e) => Err(e.into()),
    }
}

fn fuse_cmd(a: &FuseArgs, cfg: &LayoutConfig, out: Option<&Path>) -> CliResult<()> {
    let (m1, m2) = load_maps(&a.maps)?;
    let pose = formats::load::<PoseFile>(&a.pose)?.pose(&a.pose)?;
    let fused = match &pose {
        Some(p) => fuse(&m1, &m2, p, cfg)?,
        None => boundary_to_layout(&m1, cfg)?,
    };
    for w in &fused.warnings {
        eprintln!("warning: {}", formats::warning_name(w));
    }
    if let Some(mesh) = &a.mesh {
        write_atomic(mesh, obj_mesh(&fused.value).as_bytes())?;
    }
    emit(out, &formats::to_json(&LayoutFile::new(&fused.value, pose.is_some(), &fused.warnings)))
}

/// Extruded layout as Wavefront OBJ: floor at `y = -1`, ceiling at `y = H - 1`.
/// Outer rings get floor and ceiling caps; holes only get walls.
pub fn obj_mesh(layout: &LayoutSolid) -> String {
    let (y0, y1) = (-1.0, layout.height - 1.0);
    let mut s = String::from("# panolayout extruded layout\n");
    let mut base = 1;
    for ring in &layout.footprint.rings {
        let pts = ring.points();
        let n = pts.len();
        for p in pts {
            let _ = writeln!(s, "v {} {y0} {}", p.x, p.z);
        }
        for p in pts {
            let _ = writeln!(s, "v {} {y1} {}", p.x, p.z);
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let _ = writeln!(s, "f {} {} {} {}", base + i, base + j, base + n + j, base + n + i);
        }
        if ring.is_ccw() {
            let floor: Vec<String> = (0..n).rev().map(|i| (base + i).to_string()).collect();
            let ceil: Vec<String> = (0..n).map(|i| (base + n + i).to_string()).collect();
            let _ = writeln!(s, "f {}", floor.join(" "));
            let _ = writeln!(s, "f {}", ceil.join(" "));
        }
        base += 2 * n;
    }
    s
}

fn eval(a: &EvalArgs, grid_n: Option<usize>, out: Option<&Path>) -> CliResult<()> {
    let n = a.scene.len();
    if a.layout.len() != n || a.pose.len() != n || (!a.maps.is_empty() && a.maps.len() != n) {
        return Err(CliError::Usage("--scene, --layout, --pose and --maps must be given the same number of times".into()));
    }
    let mut pairs = Vec::with_capacity(n);
    let mut losses = Vec::new();
    for i in 0..n {
        let (doc, scene) = load_scene(&a.scene[i])?;
        let layout = formats::load::<LayoutFile>(&a.layout[i])?.layout(&a.layout[i])?;
        let pose = formats::load::<PoseFile>(&a.pose[i])?.pose(&a.pose[i])?;
        let errors = match &pose {
            Some(p) => angular_errors(p, &scene.pose()),
            None => PairErrors::failure(),
        };
        let g = grid(grid_n.unwrap_or(doc.grid_n))?;
        let (iou2d, iou3d, delta1) = score_layout(&scene, &layout, pose.as_ref(), &g, DELTA_EXPONENT)?;
        pairs.push(PairMetrics { scene_id: doc.scene_id, errors, iou2d, iou3d, delta1 });
        if a.losses {
            let (p1, p2) = load_maps(&a.maps[i])?;
            let (o1, o2) = ground_truth_maps(&scene, &p1.grid()?)?;
            let c = loss_components(&scene, [&p1, &p2], [&o1, &o2], &LossWeights::default())?;
            losses.push((c, total_loss(&c, &LossWeights::default())));
        }
    }
    let report = MetricsReport::from_pairs(pairs)?;
    emit(out, &report::eval_csv(&report, a.losses.then_some(losses.as_slice())))
}

/// Reference losses of predicted maps against oracle maps, each term
/// averaged over the two panoramas.
///
/// Depth maps for the layout term use the scene's true plane distances.
/// The cycle terms read the other panorama's predictions at the predicted
/// correspondences.
pub fn loss_components(scene: &RoomScene, pred: [&HorizonMaps; 2], gt: [&HorizonMaps; 2], w: &LossWeights) -> CliResult<LossComponents> {
    let m = gt[0].len();
    let hc = scene.ceiling_height - 1.0;
    let depth = |maps: &HorizonMaps| -> CliResult<[Vec<f64>; 2]> {
        Ok([boundary_to_depth(&maps.ceiling, hc, m)?.into_values(), boundary_to_depth(&maps.floor, 1.0, m)?.into_values()])
    };
    let [pc1, pf1] = depth(pred[0])?;
    let [pc2, pf2] = depth(pred[1])?;
    let [gc1, gf1] = depth(gt[0])?;
    let [gc2, gf2] = depth(gt[1])?;
    let layout = layout_loss([&pc1, &pf1, &pc2, &pf2], [&gc1, &gf1, &gc2, &gf2])?;
    let g = gt[0].grid()?;
    let mode = CyclicMode::Symmetric;
    let mut c = LossComponents { layout, ..LossComponents::default() };
    for (k, other) in [(0, 1), (1, 0)] {
        let (p, o, t) = (pred[k], pred[other], gt[k]);
        c.correspondence += 0.5 * correspondence_loss(&p.correspondence, &t.correspondence, &t.covisibility, mode)?;
        c.covisibility += 0.5 * covis_loss(&p.covisibility, &t.covisibility, w.alpha)?;
        let (corr, covis) = compose_through(&o.correspondence, &o.covisibility, &p.correspondence)?;
        let (cc, cv) = cycle_losses(&corr, &covis, &g, &t.covisibility, w.alpha, mode)?;
        c.cycle_correspondence += 0.5 * cc;
        c.cycle_covisibility += 0.5 * cv;
    }
    Ok(c)
}

/// Per-scene seeds are shared by every cell, so cells differ only in noise.
pub fn sweep(sc: &SweepConfig) -> CliResult<String> {
    let base = sc.base_seed.unwrap_or(0);
    let g = grid(sc.grid_n.unwrap_or(DEFAULT_GRID_N))?;
    let mut cfg = PipelineConfig::default();
    sc.registration.apply(&mut cfg.registration);
    sc.layout.apply(&mut cfg.layout);
    cfg.registration.ransac.validate().map_err(|e| CliError::Usage(format!("sweep registration: {e}")))?;
    let seeds: Vec<u64> = (0..sc.scenes_per_cell as u64).map(|i| derive_seed(base, i)).collect();
    let scenes = seeds
        .par_iter()
        .map(|&s| generate_scene(&sc.room.scene_spec(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from(report::SWEEP_HEADER);
    for (cell, noise) in sc.cells().iter().enumerate() {
        let pairs = scenes
            .par_iter()
            .zip(seeds.par_iter())
            .enumerate()
            .map(|(i, (scene, &s))| {
                let noise = NoiseSpec { seed: derive_seed(s, 1), ..*noise };
                let mut cfg = cfg;
                cfg.registration.ransac.seed = derive_seed(s, 2);
                evaluate_pair(scene, i as u64, &g, &noise, &cfg).map(|o| o.metrics)
            })
            .collect::<Result<Vec<_>, _>>()?;
        csv.push_str(&report::sweep_row(cell, noise, &MetricsReport::from_pairs(pairs)?));
    }
    Ok(csv)
}
