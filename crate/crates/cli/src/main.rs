mod config;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gkpd::filtration::{build_filtration, EuclideanGeometry, FilteredComplex, FiltrationMode, GkpdGeometry};
use gkpd::harness::{read_points_csv, read_values_csv, write_points_csv, write_values_csv};
use gkpd::persistence::{compute_persistence_with, PersistenceDiagram, PersistenceOptions};
use gkpd::pipeline::choose_dimension;
use gkpd::{
    certify_interleaving, derive_seed, distortion_report, generate, recompute_weights, run_pipeline,
    sample_rff, DatasetKind, DatasetSpec, DimensionMode, KernelConfig, PipelineConfig, Points, RffMap,
    Stream, WeightedPointCloud,
};
use log::info;

use crate::config::ConfigFile;

const EXIT_CERTIFICATE_FAILED: u8 = 2;

/// Pipeline artifacts, in the order they are written.
const WEIGHTS: &str = "weights.csv";
const RFF_MAP: &str = "rff_map.json";
const EMBEDDED: &str = "embedded.csv";
const RECOMPUTED_WEIGHTS: &str = "recomputed_weights.csv";
const DIMENSION: &str = "dimension.json";
const DISTORTION: &str = "distortion_report.json";
const COMPLEX_GKPD: &str = "complex_gkpd.txt";
const COMPLEX_EUCLIDEAN: &str = "complex_euclidean.txt";
const DIAGRAM_GKPD: &str = "diagram_gkpd";
const DIAGRAM_EUCLIDEAN: &str = "diagram_euclidean";
const CERTIFICATE: &str = "certificate.json";

#[derive(Parser)]
#[command(name = "gkpd", version, about = "GKPD persistence with random Fourier feature reduction")]
struct Cli {
    /// Worker threads for simplex evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// key = value settings file; flags win over its entries.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run everything and certify the interleaving (exit 2 if it fails).
    Pipeline(PipelineArgs),
    /// Kernel weights of a point set.
    Weights(WeightsArgs),
    /// Sample a feature map, embed the points and recompute weights.
    Embed(EmbedArgs),
    /// Build a weighted Čech filtration.
    Filtration(FiltrationArgs),
    /// Persistence diagram of a filtration file.
    Persistence(PersistenceArgs),
    /// Certify two diagrams against each other (exit 2 if it fails).
    Compare(CompareArgs),
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct KernelArgs {
    /// Gaussian kernel bandwidth.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct DimensionArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Constant in the target-dimension bound.
    #[arg(long)]
    constant: Option<f64>,
    /// point-count or diameter.
    #[arg(long)]
    mode: Option<DimensionMode>,
    /// Bound on |x - y| / sigma for diameter mode (measured when absent).
    #[arg(long)]
    diameter_ratio: Option<f64>,
    /// Even target dimension overriding the bound.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ComplexArgs {
    #[arg(long)]
    d_max: Option<usize>,
    /// Drop simplices whose value exceeds this.
    #[arg(long)]
    value_cap: Option<f64>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Points, one per CSV row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    dimension: DimensionArgs,
    #[command(flatten)]
    complex: ComplexArgs,
    #[arg(long)]
    slack: Option<f64>,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for the map, images, weights and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Apply this serialized map instead of sampling one.
    #[arg(long, value_name = "FILE")]
    map: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    dimension: DimensionArgs,
}

#[derive(Args)]
struct FiltrationArgs {
    /// Points (gkpd) or embedded images (euclidean).
    #[arg(long)]
    input: Option<PathBuf>,
    /// gkpd or euclidean.
    #[arg(long)]
    geometry: Option<FiltrationMode>,
    /// Weights file: checked against the kernel in gkpd mode, required in euclidean mode.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    complex: ComplexArgs,
}

#[derive(Args)]
struct PersistenceArgs {
    /// Filtration text file.
    #[arg(long)]
    input: PathBuf,
    /// Diagram JSON.
    #[arg(long)]
    output: PathBuf,
    /// Also write the diagram as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Keep bars with birth equal to death.
    #[arg(long)]
    keep_zero: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference diagram JSON.
    #[arg(long)]
    a: PathBuf,
    /// Reduced diagram JSON.
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    slack: Option<f64>,
    /// Certificate JSON.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    /// circle_with_outliers, gaussian_clusters, uniform_cube or embedded_circle_highD.
    #[arg(long)]
    kind: DatasetKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: PathBuf,
}

struct Ctx {
    force: bool,
    config: ConfigFile,
}

impl Ctx {
    fn check_writable(&self, path: &Path) -> Result<()> {
        if !self.force && path.exists() {
            bail!("{} already exists; pass --force to overwrite", path.display());
        }
        Ok(())
    }

    fn write(&self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        self.check_writable(path)?;
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn required_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.config
            .pick(flag, key)?
            .with_context(|| format!("missing --{key} (flag or config entry)"))
    }

    fn kernel(&self, args: &KernelArgs) -> Result<KernelConfig> {
        let sigma = self.config.pick(args.sigma, "sigma")?.unwrap_or(1.0);
        Ok(KernelConfig::new(sigma)?)
    }

    fn pipeline_config(
        &self,
        kernel: &KernelArgs,
        dim: &DimensionArgs,
        complex: Option<&ComplexArgs>,
        slack: Option<f64>,
    ) -> Result<PipelineConfig> {
        let c = &self.config;
        let d = PipelineConfig::default();
        let config = PipelineConfig {
            sigma: c.pick(kernel.sigma, "sigma")?.unwrap_or(d.sigma),
            epsilon: c.pick(dim.epsilon, "epsilon")?.unwrap_or(d.epsilon),
            delta: c.pick(dim.delta, "delta")?.unwrap_or(d.delta),
            constant: c.pick(dim.constant, "constant")?.unwrap_or(d.constant),
            d_max: c.pick(complex.and_then(|x| x.d_max), "d_max")?.unwrap_or(d.d_max),
            value_cap: c.pick(complex.and_then(|x| x.value_cap), "value_cap")?,
            t_override: c.pick(dim.t, "t")?,
            mode: c.pick(dim.mode, "mode")?.unwrap_or(d.mode),
            diameter_ratio: c.pick(dim.diameter_ratio, "diameter_ratio")?,
            seed: c.pick(dim.seed, "seed")?.unwrap_or(d.seed),
            slack: c.pick(slack, "slack")?.unwrap_or(d.slack),
        };
        config.validate()?;
        Ok(config)
    }
}

fn read_points(path: &Path) -> Result<Points> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_points_csv(BufReader::new(file)).with_context(|| format!("reading points from {}", path.display()))
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_values_csv(BufReader::new(file)).with_context(|| format!("reading values from {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn points_csv(points: &Points) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, points)?;
    Ok(buf)
}

fn values_csv(values: &[f64]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_values_csv(&mut buf, values)?;
    Ok(buf)
}

fn diagram_csv(diagram: &PersistenceDiagram) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    diagram.write_csv(&mut buf)?;
    Ok(buf)
}

fn json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// `Ok(true)` when the command succeeded and any certificate passed.
fn cmd_pipeline(ctx: &Ctx, args: PipelineArgs) -> Result<bool> {
    let input = ctx.required_path(args.input, "input")?;
    let out = ctx.required_path(args.out, "out")?;
    let config = ctx.pipeline_config(&args.kernel, &args.dimension, Some(&args.complex), args.slack)?;
    let files: Vec<PathBuf> = [
        WEIGHTS,
        RFF_MAP,
        EMBEDDED,
        RECOMPUTED_WEIGHTS,
        DIMENSION,
        DISTORTION,
        COMPLEX_GKPD,
        COMPLEX_EUCLIDEAN,
        &format!("{DIAGRAM_GKPD}.json"),
        &format!("{DIAGRAM_GKPD}.csv"),
        &format!("{DIAGRAM_EUCLIDEAN}.json"),
        &format!("{DIAGRAM_EUCLIDEAN}.csv"),
        CERTIFICATE,
    ]
    .iter()
    .map(|f| out.join(f))
    .collect();
    for f in &files {
        ctx.check_writable(f)?;
    }
    let points = read_points(&input)?;
    let run = run_pipeline(points, &config)?;
    info!("target dimension: {}", run.dimension);
    info!(
        "filtrations: {} gkpd simplices, {} euclidean simplices",
        run.complex_gkpd.len(),
        run.complex_euclidean.len()
    );
    let contents: Vec<Vec<u8>> = vec![
        values_csv(run.cloud.weights())?,
        (run.map.to_json()? + "\n").into_bytes(),
        points_csv(&run.embedded)?,
        values_csv(&run.recomputed_weights)?,
        json_pretty(&run.dimension)?.into_bytes(),
        json_pretty(&run.distortion)?.into_bytes(),
        run.complex_gkpd.to_text().into_bytes(),
        run.complex_euclidean.to_text().into_bytes(),
        (run.diagram_gkpd.to_json() + "\n").into_bytes(),
        diagram_csv(&run.diagram_gkpd)?,
        (run.diagram_euclidean.to_json() + "\n").into_bytes(),
        diagram_csv(&run.diagram_euclidean)?,
        (run.certificate.to_json() + "\n").into_bytes(),
    ];
    for (path, bytes) in files.iter().zip(contents) {
        ctx.write(path, bytes)?;
    }
    report_certificate(&run.certificate);
    Ok(run.certificate.pass)
}

fn report_certificate(cert: &gkpd::InterleavingCertificate) {
    info!(
        "interleaving {}: measured factor {:.6} vs threshold {:.6} (bound {:.6}, slack {})",
        if cert.pass { "pass" } else { "FAIL" },
        cert.factor_measured,
        cert.threshold,
        cert.factor_bound,
        cert.slack
    );
}

fn cmd_weights(ctx: &Ctx, args: WeightsArgs) -> Result<bool> {
    let input = ctx.required_path(args.input, "input")?;
    ctx.check_writable(&args.output)?;
    let cloud = WeightedPointCloud::new(read_points(&input)?, ctx.kernel(&args.kernel)?)?;
    ctx.write(&args.output, values_csv(cloud.weights())?)?;
    Ok(true)
}

fn cmd_embed(ctx: &Ctx, args: EmbedArgs) -> Result<bool> {
    let input = ctx.required_path(args.input, "input")?;
    let out = ctx.required_path(args.out, "out")?;
    let config = ctx.pipeline_config(&args.kernel, &args.dimension, None, None)?;
    let names: &[&str] = if args.map.is_some() {
        &[EMBEDDED, RECOMPUTED_WEIGHTS, DISTORTION]
    } else {
        &[RFF_MAP, EMBEDDED, RECOMPUTED_WEIGHTS, DIMENSION, DISTORTION]
    };
    for name in names {
        ctx.check_writable(&out.join(name))?;
    }
    let points = read_points(&input)?;
    let kernel = KernelConfig::new(config.sigma)?;
    let map = match &args.map {
        Some(path) => {
            let map = RffMap::from_json(&read_text(path)?).with_context(|| format!("loading {}", path.display()))?;
            if map.sigma() != config.sigma {
                bail!("map was sampled for sigma {} but sigma is {}", map.sigma(), config.sigma);
            }
            map
        }
        None => {
            let dimension = choose_dimension(&points, &config)?;
            info!("target dimension: {dimension}");
            let map = sample_rff(points.dim(), dimension.t, &kernel, derive_seed(config.seed, Stream::Rff))?;
            ctx.write(&out.join(RFF_MAP), map.to_json()? + "\n")?;
            ctx.write(&out.join(DIMENSION), json_pretty(&dimension)?)?;
            map
        }
    };
    let embedded = map.embed(&points)?;
    let recomputed = recompute_weights(&embedded)?;
    let cloud = WeightedPointCloud::new(points, kernel)?;
    let report = distortion_report(&cloud, &map, config.epsilon)?;
    info!(
        "pairwise distortion {:.4}, weight distortion {:.4}",
        report.max_rel_error, report.max_weight_rel_error
    );
    ctx.write(&out.join(EMBEDDED), points_csv(&embedded)?)?;
    ctx.write(&out.join(RECOMPUTED_WEIGHTS), values_csv(&recomputed)?)?;
    ctx.write(&out.join(DISTORTION), json_pretty(&report)?)?;
    Ok(true)
}

fn cmd_filtration(ctx: &Ctx, args: FiltrationArgs) -> Result<bool> {
    let input = ctx.required_path(args.input, "input")?;
    let geometry = ctx.config.pick(args.geometry, "geometry")?.unwrap_or(FiltrationMode::Gkpd);
    let d_max = ctx.config.pick(args.complex.d_max, "d_max")?.unwrap_or(gkpd::filtration::DEFAULT_MAX_DIM);
    let cap = ctx.config.pick(args.complex.value_cap, "value_cap")?;
    ctx.check_writable(&args.output)?;
    let points = read_points(&input)?;
    let complex: FilteredComplex = match geometry {
        FiltrationMode::Gkpd => {
            let kernel = ctx.kernel(&args.kernel)?;
            let cloud = match &args.weights {
                Some(path) => WeightedPointCloud::with_weights(points, read_values(path)?, kernel)?,
                None => WeightedPointCloud::new(points, kernel)?,
            };
            build_filtration(&GkpdGeometry::new(&cloud), d_max, cap)?
        }
        FiltrationMode::Euclidean => {
            let path = args.weights.as_ref().context("euclidean geometry needs --weights")?;
            let g = EuclideanGeometry::new(points, read_values(path)?)?;
            build_filtration(&g, d_max, cap)?
        }
    };
    info!("{} simplices up to dimension {d_max}", complex.len());
    ctx.write(&args.output, complex.to_text())?;
    Ok(true)
}

fn cmd_persistence(ctx: &Ctx, args: PersistenceArgs) -> Result<bool> {
    ctx.check_writable(&args.output)?;
    if let Some(csv) = &args.csv {
        ctx.check_writable(csv)?;
    }
    let complex = FilteredComplex::from_text(&read_text(&args.input)?)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let options = PersistenceOptions {
        keep_zero_persistence: args.keep_zero,
    };
    let diagram = compute_persistence_with(&complex, options)?;
    ctx.write(&args.output, diagram.to_json() + "\n")?;
    if let Some(csv) = &args.csv {
        ctx.write(csv, diagram_csv(&diagram)?)?;
    }
    Ok(true)
}

fn cmd_compare(ctx: &Ctx, args: CompareArgs) -> Result<bool> {
    let d = PipelineConfig::default();
    let epsilon = ctx.config.pick(args.epsilon, "epsilon")?.unwrap_or(d.epsilon);
    let slack = ctx.config.pick(args.slack, "slack")?.unwrap_or(d.slack);
    ctx.check_writable(&args.output)?;
    let load = |p: &Path| -> Result<PersistenceDiagram> {
        PersistenceDiagram::from_json(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))
    };
    let cert = certify_interleaving(&load(&args.a)?, &load(&args.b)?, epsilon, slack)?;
    ctx.write(&args.output, cert.to_json() + "\n")?;
    report_certificate(&cert);
    Ok(cert.pass)
}

fn cmd_generate(ctx: &Ctx, args: GenerateArgs) -> Result<bool> {
    let seed = ctx.config.pick(args.seed, "seed")?.unwrap_or(0);
    ctx.check_writable(&args.output)?;
    let spec = DatasetSpec::new(args.kind, args.n, args.dim, seed)
        .with_noise(args.noise)
        .with_outliers(args.outliers)
        .with_radius(args.radius)
        .with_clusters(args.clusters);
    ctx.write(&args.output, points_csv(&generate(&spec)?)?)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let ctx = Ctx {
        force: cli.force,
        config,
    };
    match cli.command {
        Command::Pipeline(a) => cmd_pipeline(&ctx, a),
        Command::Weights(a) => cmd_weights(&ctx, a),
        Command::Embed(a) => cmd_embed(&ctx, a),
        Command::Filtration(a) => cmd_filtration(&ctx, a),
        Command::Persistence(a) => cmd_persistence(&ctx, a),
        Command::Compare(a) => cmd_compare(&ctx, a),
        Command::Generate(a) => cmd_generate(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    // usage errors exit 1 so that 2 always means a failed certificate
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CERTIFICATE_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
