//! Command-line front end: grid generation, reconstruction, baselines,
//! metrics and parameter sweeps.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdfdc::baselines::{dc_estimated, dc_exact, marching_cubes, DEFAULT_QEF_REG};
use sdfdc::metrics::{csv_row, evaluate, MetricOptions, CSV_HEADER};
use sdfdc::sdfgen::{box_mesh, mesh_to_sdf, sphere_mesh, Bounds, MeshSdf, Shape, ShapeSpec};
use sdfdc::{
    load_grid, read_obj, read_shape_spec, reconstruct_with_trace, sample_to_grid, save_grid, triangulate_quads, write_obj,
    Config, Grid, GridEncoding, IterationStats, PolyMesh, TriMesh, Vec3,
};

#[derive(Debug, Parser)]
#[command(name = "sdfdc", version, about = "Sharp-feature quad meshes from sampled signed distance grids")]
pub struct Cli {
    /// Worker threads, 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an analytic shape, a shape spec file or a mesh into an SDFG grid.
    Gen(GenArgs),
    /// Reconstruct a mesh from a grid.
    Reconstruct(ReconstructArgs),
    /// Run a reference method on a grid.
    Baseline(BaselineArgs),
    /// Compare a mesh against a reference and append one CSV row.
    Metrics(MetricsArgs),
    /// Sweep one parameter and report metrics for each value.
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeKind {
    Sphere,
    Box,
    RotatedBox,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, conflicts_with_all = ["spec", "mesh"], required_unless_present_any = ["spec", "mesh"])]
    pub shape: Option<ShapeKind>,
    /// Shape spec file.
    #[arg(long, conflicts_with = "mesh")]
    pub spec: Option<PathBuf>,
    /// Watertight OBJ mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 0.4)]
    pub radius: f64,
    /// x,y,z
    #[arg(long, allow_hyphen_values = true, value_parser = numbers::<3>, default_value = "0.5,0.5,0.5")]
    pub center: [f64; 3],
    /// Box half extents, x,y,z.
    #[arg(long, allow_hyphen_values = true, value_parser = numbers::<3>, default_value = "0.25,0.25,0.25")]
    pub half: [f64; 3],
    /// Rotation axis, x,y,z.
    #[arg(long, allow_hyphen_values = true, value_parser = numbers::<3>, default_value = "0,0,1")]
    pub axis: [f64; 3],
    /// Rotation angle in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub angle: f64,
    /// Nodes per axis.
    #[arg(long, default_value_t = 32)]
    pub dims: usize,
    /// min_x,min_y,min_z,max_x,max_y,max_z; defaults to the shape file's bounds or
    /// the unit cube.
    #[arg(long, allow_hyphen_values = true, value_parser = numbers::<6>)]
    pub bounds: Option<[f64; 6]>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a reference surface mesh (boxes, spheres and meshes only).
    #[arg(long)]
    pub ref_out: Option<PathBuf>,
    /// Write the grid as text instead of binary.
    #[arg(long)]
    pub text: bool,
}

/// Parses `N` comma separated numbers.
fn numbers<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma separated numbers, got {}", v.len()))
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = Config::default().w_hermite)]
    pub w_hermite: f64,
    #[arg(long, default_value_t = Config::default().update_weight)]
    pub update_weight: f64,
    #[arg(long, default_value_t = Config::default().mu)]
    pub mu: f64,
    /// Convergence threshold; defaults to 1e-4 times the grid spacing.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = Config::default().max_outer)]
    pub max_outer: usize,
    #[arg(long, default_value_t = Config::default().max_inner)]
    pub max_inner: usize,
    #[arg(long, default_value_t = Config::default().batch_size)]
    pub batch_size: usize,
    /// Only use samples within n cell diagonals of the surface.
    #[arg(long, value_name = "n")]
    pub narrow_band: Option<f64>,
    #[arg(long, default_value_t = Config::default().seed)]
    pub seed: u64,
    /// Scale w_hermite by each cell's sample count.
    #[arg(long)]
    pub normalize_w_hermite: bool,
    #[arg(long)]
    pub pseudo_sdf_interior: bool,
    #[arg(long)]
    pub no_early_exit: bool,
}

impl ConfigArgs {
    pub fn config(&self) -> Config {
        Config {
            w_hermite: self.w_hermite,
            update_weight: self.update_weight,
            mu: self.mu,
            tol: self.tol,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            batch_size: self.batch_size,
            narrow_band: self.narrow_band,
            seed: self.seed,
            normalize_w_hermite: self.normalize_w_hermite,
            pseudo_sdf_interior: self.pseudo_sdf_interior,
            early_exit: !self.no_early_exit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ours,
    Mc,
    DcEst,
    DcExact,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Mc => "mc",
            Method::DcEst => "dc-est",
            Method::DcExact => "dc-exact",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = Method::Ours)]
    pub method: Method,
    /// Add uniform noise in [-eta, eta] to every grid value first.
    #[arg(long, value_name = "eta")]
    pub noise: Option<f64>,
    /// Shape spec giving the exact SDF for dc-exact.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Relative eigenvalue cutoff of the dual contouring baselines.
    #[arg(long, default_value_t = DEFAULT_QEF_REG)]
    pub qef_reg: f64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Per-iteration CSV (`ours` only).
    #[arg(long, value_name = "csv")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Mc,
    DcEst,
    DcExact,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = BaselineMethod::Mc)]
    pub method: BaselineMethod,
    #[arg(long, value_name = "eta")]
    pub noise: Option<f64>,
    /// Seed of the noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_QEF_REG)]
    pub qef_reg: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    #[arg(long, default_value_t = MetricOptions::default().samples)]
    pub samples: usize,
    #[arg(long, default_value_t = MetricOptions::default().edge_samples)]
    pub edge_samples: usize,
    /// Dihedral angle deviation that makes an edge sharp, in degrees.
    #[arg(long, default_value_t = MetricOptions::default().dihedral_deg)]
    pub dihedral: f64,
    /// Sharp-edge sampling radius in grid spacings.
    #[arg(long, default_value_t = MetricOptions::default().edge_radius)]
    pub edge_radius: f64,
    #[arg(long = "metric-seed", default_value_t = 0)]
    pub metric_seed: u64,
}

impl MetricArgs {
    pub fn options(&self) -> MetricOptions {
        MetricOptions {
            samples: self.samples,
            edge_samples: self.edge_samples,
            dihedral_deg: self.dihedral,
            edge_radius: self.edge_radius,
            seed: self.metric_seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Shape label; defaults to the reference file stem.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long = "label", default_value = "unknown")]
    pub method: String,
    /// Value of the seconds column.
    #[arg(long, default_value_t = 0.0)]
    pub seconds: f64,
    #[command(flatten)]
    pub metric: MetricArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Param {
    WHermite,
    UpdateWeight,
    Mu,
    Tol,
    MaxOuter,
    MaxInner,
    BatchSize,
    NarrowBand,
    Noise,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::WHermite => "w-hermite",
            Param::UpdateWeight => "update-weight",
            Param::Mu => "mu",
            Param::Tol => "tol",
            Param::MaxOuter => "max-outer",
            Param::MaxInner => "max-inner",
            Param::BatchSize => "batch-size",
            Param::NarrowBand => "narrow-band",
            Param::Noise => "noise",
        }
    }
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_enum)]
    pub param: Param,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(sdfdc::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<sdfdc::Error> for CliError {
    fn from(e: sdfdc::Error) -> Self {
        match e {
            // bad flag values
            sdfdc::Error::Config(m) => CliError::Usage(m),
            e => CliError::Data(e),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(m: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(m.into()))
}

fn vec3(v: &[f64]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

/// Adds independent uniform noise in `[-eta, eta]` to every value.
pub fn add_noise(grid: &Grid, eta: f64, seed: u64) -> sdfdc::Result<Grid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep the noise stream apart from the batch streams
    rng.set_stream(u64::MAX);
    grid.map_values(|v| v + rng.gen_range(-eta..=eta))
}

fn prepare_grid(path: &Path, noise: Option<f64>, seed: u64) -> CliResult<Grid> {
    let grid = load_grid::<f64>(path)?;
    match noise {
        None => Ok(grid),
        Some(eta) if eta >= 0.0 && eta.is_finite() => Ok(add_noise(&grid, eta, seed)?),
        Some(_) => usage("--noise must be a finite value >= 0"),
    }
}

/// Output of one reconstruction method.
pub enum Output {
    Quads(sdfdc::QuadMesh),
    Tris(TriMesh),
}

impl Output {
    pub fn tri_mesh(&self) -> TriMesh {
        match self {
            Output::Quads(q) => triangulate_quads(q),
            Output::Tris(t) => t.clone(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            Output::Quads(q) => q.vertices.len(),
            Output::Tris(t) => t.vertices.len(),
        }
    }

    pub fn poly(&self) -> PolyMesh<f64> {
        match self {
            Output::Quads(q) => PolyMesh::from(q),
            Output::Tris(t) => PolyMesh::from(t),
        }
    }
}

fn exact_shape(spec: Option<&Path>) -> CliResult<ShapeSpec> {
    match spec {
        Some(p) => Ok(read_shape_spec(p)?),
        None => usage("dc-exact needs --spec with the exact shape"),
    }
}

/// Runs `method` on `grid`; `trace` receives the per-iteration stats of
/// `ours`.
pub fn run_method(
    grid: &Grid,
    method: Method,
    config: &Config,
    spec: Option<&Path>,
    qef_reg: f64,
    trace: Option<&mut Vec<IterationStats>>,
) -> CliResult<Output> {
    Ok(match method {
        Method::Ours => {
            let r = reconstruct_with_trace(grid, config)?;
            if let Some(t) = trace {
                *t = r.trace;
            }
            Output::Quads(r.mesh)
        }
        Method::Mc => Output::Tris(marching_cubes(grid, 0.0)),
        Method::DcEst => Output::Quads(dc_estimated(grid, qef_reg)?),
        Method::DcExact => Output::Quads(dc_exact(&exact_shape(spec)?.shape, grid, qef_reg)?),
    })
}

pub const TRACE_HEADER: &str = "iter,mean_residual,hermite_delta,converged_frac,seconds";

pub fn trace_csv(trace: &[IterationStats]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for t in trace {
        s.push_str(&format!(
            "{},{:.9e},{:.9e},{:.6},{:.6}\n",
            t.iteration + 1,
            t.mean_residual,
            t.hermite_delta,
            t.converged_fraction,
            t.seconds
        ));
    }
    s
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn gen(args: &GenArgs) -> CliResult<()> {
    if args.dims < 2 {
        return usage("--dims must be at least 2");
    }
    let dims = [args.dims; 3];
    let explicit = args.bounds.as_ref().map(|b| Bounds::new(vec3(&b[0..3]), vec3(&b[3..6])));
    let (grid, reference) = if let Some(path) = &args.mesh {
        let mesh = read_obj::<f64>(path)?.to_tri_mesh();
        let bounds = explicit.unwrap_or_else(Bounds::unit);
        (mesh_to_sdf(&mesh, dims, &bounds)?, Some(mesh))
    } else {
        let spec = match (&args.spec, args.shape) {
            (Some(p), _) => read_shape_spec(p)?,
            (None, Some(kind)) => {
                let center = vec3(&args.center);
                let shape = match kind {
                    ShapeKind::Sphere if args.radius > 0.0 => Shape::sphere(center, args.radius),
                    ShapeKind::Sphere => return usage("--radius must be positive"),
                    _ if args.half.iter().any(|&h| !(h > 0.0)) => return usage("--half must be positive"),
                    ShapeKind::Box => Shape::cuboid(center, vec3(&args.half)),
                    ShapeKind::RotatedBox if vec3(&args.axis).norm() == 0.0 => return usage("--axis must be non-zero"),
                    ShapeKind::RotatedBox => Shape::rotated_cuboid(center, vec3(&args.half), vec3(&args.axis), args.angle),
                };
                ShapeSpec {
                    shape,
                    bounds: Bounds::unit(),
                }
            }
            (None, None) => return usage("one of --shape, --spec or --mesh is required"),
        };
        let bounds = explicit.unwrap_or(spec.bounds);
        let reference = match &spec.shape {
            Shape::Sphere { center, radius } => Some(sphere_mesh(*center, *radius, 6)),
            Shape::Box { center, half } => Some(box_mesh(*center, *half, &Default::default())),
            Shape::RotatedBox { center, half, rotation } => Some(box_mesh(*center, *half, rotation)),
            Shape::Mesh(m) => Some(MeshSdf::mesh(m).clone()),
            _ => None,
        };
        (sample_to_grid(&spec.shape, dims, &bounds)?, reference)
    };
    let encoding = if args.text { GridEncoding::Text } else { GridEncoding::Binary };
    save_grid(&grid, &args.out, encoding)?;
    if let Some(path) = &args.ref_out {
        match reference {
            Some(m) => write_obj(&PolyMesh::from(&m), path)?,
            None => return usage("--ref-out supports spheres, boxes and meshes only"),
        }
    }
    Ok(())
}

fn reconstruct_cmd(args: &ReconstructArgs) -> CliResult<()> {
    let config = args.config.config();
    config.validate()?;
    if args.trace.is_some() && args.method.method != Method::Ours {
        return usage("--trace is only available with --method ours");
    }
    let grid = prepare_grid(&args.input, args.method.noise, config.seed)?;
    let mut trace = Vec::new();
    let out = run_method(
        &grid,
        args.method.method,
        &config,
        args.method.spec.as_deref(),
        args.method.qef_reg,
        Some(&mut trace),
    )?;
    write_obj(&out.poly(), &args.out)?;
    if let Some(path) = &args.trace {
        fs::write(path, trace_csv(&trace))?;
    }
    Ok(())
}

fn baseline_cmd(args: &BaselineArgs) -> CliResult<()> {
    let grid = prepare_grid(&args.input, args.noise, args.seed)?;
    let method = match args.method {
        BaselineMethod::Mc => Method::Mc,
        BaselineMethod::DcEst => Method::DcEst,
        BaselineMethod::DcExact => Method::DcExact,
    };
    let out = run_method(&grid, method, &Config::default(), args.spec.as_deref(), args.qef_reg, None)?;
    write_obj(&out.poly(), &args.out)?;
    Ok(())
}

fn metrics_cmd(args: &MetricsArgs) -> CliResult<()> {
    let mesh = read_obj::<f64>(&args.mesh)?;
    let reference = read_obj::<f64>(&args.reference)?.to_tri_mesh();
    let grid = load_grid::<f64>(&args.grid)?;
    let report = evaluate(&mesh.to_tri_mesh(), &reference, &grid, &args.metric.options())?;
    let shape = args.shape.clone().unwrap_or_else(|| {
        args.reference
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let resolution = grid.dims().into_iter().max().unwrap_or(0);
    let row = csv_row(&shape, &args.method, resolution, &report, mesh.vertices.len(), args.seconds);
    write_text(args.csv.as_deref(), &format!("{CSV_HEADER}\n{row}\n"))
}

pub const ABLATE_HEADER: &str = "param,value,chamfer,hausdorff,edge_chamfer,sdf_energy,vertices,iterations,seconds";

fn ablate_cmd(args: &AblateArgs) -> CliResult<()> {
    let reference = read_obj::<f64>(&args.reference)?.to_tri_mesh();
    let base = load_grid::<f64>(&args.input)?;
    let mut csv = format!("{ABLATE_HEADER}\n");
    for &v in &args.values {
        let mut cfg = args.config.config();
        let mut noise = args.method.noise;
        let count = |v: f64| -> CliResult<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                usage(format!("{} takes whole numbers, got {v}", args.param.name()))
            }
        };
        match args.param {
            Param::WHermite => cfg.w_hermite = v,
            Param::UpdateWeight => cfg.update_weight = v,
            Param::Mu => cfg.mu = v,
            Param::Tol => cfg.tol = Some(v),
            Param::MaxOuter => cfg.max_outer = count(v)?,
            Param::MaxInner => cfg.max_inner = count(v)?,
            Param::BatchSize => cfg.batch_size = count(v)?,
            Param::NarrowBand => cfg.narrow_band = Some(v),
            Param::Noise => noise = Some(v),
        }
        cfg.validate()?;
        let grid = match noise {
            Some(eta) if eta >= 0.0 && eta.is_finite() => add_noise(&base, eta, cfg.seed)?,
            Some(_) => return usage("noise must be a finite value >= 0"),
            None => base.clone(),
        };
        let started = Instant::now();
        let mut trace = Vec::new();
        let out = run_method(
            &grid,
            args.method.method,
            &cfg,
            args.method.spec.as_deref(),
            args.method.qef_reg,
            Some(&mut trace),
        )?;
        let seconds = started.elapsed().as_secs_f64();
        let r = evaluate(&out.tri_mesh(), &reference, &grid, &args.metric.options())?;
        csv.push_str(&format!(
            "{},{v},{:.9e},{:.9e},{:.9e},{:.9e},{},{},{seconds:.3}\n",
            args.param.name(),
            r.chamfer,
            r.hausdorff,
            r.edge_chamfer,
            r.sdf_energy,
            out.vertex_count(),
            trace.len()
        ));
        eprintln!("{} = {v}: chamfer {:.3e}", args.param.name(), r.chamfer);
    }
    write_text(args.csv.as_deref(), &csv)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let go = || match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Baseline(a) => baseline_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
    };
    if cli.threads == 0 {
        return go();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?
        .install(go)
}

/// Parses `argv` (including the program name) and runs it. Returns the
/// process exit code: 0 on success, 1 on usage errors, 2 on data errors.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
