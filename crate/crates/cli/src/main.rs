//! Command-line front end: configuration, experiment orchestration and file
//! output for the lattice solver.
//!
//! Exit codes: 0 success, 1 validation error (arguments, config files, I/O),
//! 2 numerical error, 3 statistical-test FAIL.

mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use burgers_spde::diagnostics::{field_functional, ks_refinement, martingale_test, TestFunction};
use burgers_spde::grid::GridSpec;
use burgers_spde::heatkernel::{AlphaNorm, HeatKernel1D};
use burgers_spde::integrator::{simulate, DriftMode, SimConfig, SimContext, Trajectory};
use burgers_spde::operators::{build_gradient, build_laplacian};
use burgers_spde::stats;

use config::{require, resolve, FileConfig};

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 1,
        }
    }
}

impl From<burgers_spde::Error> for CliError {
    fn from(e: burgers_spde::Error) -> Self {
        CliError {
            code: if e.is_validation() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "burgers-spde",
    version,
    about = "Lattice simulation of a stochastic Burgers-type equation with correlated noise",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an Euler-Maruyama ensemble and write trajectory records.
    Simulate(SimulateArgs),
    /// Grid-refinement study: KS distance of tested functionals across levels.
    Converge(ConvergeArgs),
    /// Ensemble martingale test of the tested process.
    MartingaleTest(MartingaleArgs),
    /// Heat-kernel decay and regularity report.
    KernelCheck(KernelCheckArgs),
    /// Dump an operator matrix in coordinate format.
    MatrixDump(MatrixDumpArgs),
}

/// Simulation parameters shared by the ensemble-driven subcommands. Every
/// value can also come from `--config`; flags win.
#[derive(Args, Debug, Default)]
struct SimFlags {
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spatial dimension d of the unit cube.
    #[arg(long)]
    dim: Option<usize>,
    /// Grid resolution n (spacing 1/n).
    #[arg(long)]
    n: Option<usize>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation horizon.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Master seed; replica r draws from stream r of a ChaCha cipher keyed by it.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent replicas.
    #[arg(long)]
    replicas: Option<usize>,
    /// Correlation kernel: constant:<c0>, exp:<ell> or gaussian:<ell>.
    #[arg(long)]
    kernel: Option<String>,
    /// Diffusion coefficient: stepping-stone, log-power:<gamma> or zero.
    #[arg(long)]
    sigma: Option<String>,
    /// Initial condition: constant:<c> or product-sine.
    #[arg(long)]
    initial: Option<String>,
    /// Steps between stored snapshots.
    #[arg(long = "record-stride")]
    record_stride: Option<usize>,
    /// Quadrature points per axis per cell for the noise covariance.
    #[arg(long = "quad-refine")]
    quad_refine: Option<usize>,
    /// Accept a dt above the stability ceiling 1/(4 d n^2).
    #[arg(long, action = clap::ArgAction::SetTrue)]
    allow_cfl_violation: bool,
    /// Drift: full, or laplacian-only (negative control, drops the transport term).
    #[arg(long = "drift-mode")]
    drift_mode: Option<String>,
}

const SIM_KEYS: &[&str] = &[
    "dim",
    "n",
    "dt",
    "t_end",
    "seed",
    "replicas",
    "kernel",
    "sigma",
    "initial",
    "record_stride",
    "quad_refine",
    "allow_cfl_violation",
    "drift_mode",
    "out",
];

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    flags: SimFlags,
    /// Output file for trajectory records (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MartingaleArgs {
    #[command(flatten)]
    flags: SimFlags,
    /// Test function: product-sine or product-quadratic.
    #[arg(long)]
    phi: Option<String>,
    /// Comma-separated checkpoint times (default: five even checkpoints).
    #[arg(long)]
    checkpoints: Option<String>,
    /// Output file for the report (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated ascending grid resolutions, e.g. 4,8,16.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Replicas per level per batch.
    #[arg(long)]
    replicas: Option<usize>,
    /// Independent seed batches the medians are taken over.
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long = "quad-refine")]
    quad_refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KernelCheckArgs {
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Exponent of the weighted-norm estimate, in (0, 1) for d = 1.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatrixDumpArgs {
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Which operator to dump: A (Laplacian) or B (gradient).
    #[arg(long)]
    which: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Converge(args) => cmd_converge(args),
        Command::MartingaleTest(args) => cmd_martingale(args),
        Command::KernelCheck(args) => cmd_kernel_check(args),
        Command::MatrixDump(args) => cmd_matrix_dump(args),
    }
}

fn load_file(path: &Option<PathBuf>, allowed: &[&str]) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let file = FileConfig::load(p)?;
            file.check_keys(p, allowed)?;
            Ok(file)
        }
    }
}

/// Merges flags over file values into a full simulation config.
fn build_sim_config(flags: &SimFlags, file: &FileConfig) -> Result<SimConfig, CliError> {
    let dim = require(flags.dim, file.get_parsed("dim")?, "dim")?;
    let n = require(flags.n, file.get_parsed("n")?, "n")?;
    let grid = GridSpec::new(dim, n)?;
    let dt = require(flags.dt, file.get_parsed("dt")?, "dt")?;
    let t_end = require(flags.t_end, file.get_parsed("t_end")?, "t_end")?;
    let mut cfg = SimConfig::new(grid, dt, t_end);
    cfg.seed = resolve(flags.seed, file.get_parsed("seed")?, 0);
    cfg.replicas = resolve(flags.replicas, file.get_parsed("replicas")?, 1);
    cfg.kernel = resolve(
        flags.kernel.clone(),
        file.get("kernel").map(String::from),
        cfg.kernel,
    );
    cfg.sigma = resolve(
        flags.sigma.clone(),
        file.get("sigma").map(String::from),
        cfg.sigma,
    );
    cfg.initial = resolve(
        flags.initial.clone(),
        file.get("initial").map(String::from),
        cfg.initial,
    );
    cfg.record_stride = resolve(flags.record_stride, file.get_parsed("record_stride")?, 1);
    cfg.quad_refine = resolve(flags.quad_refine, file.get_parsed("quad_refine")?, 4);
    cfg.allow_cfl_violation =
        flags.allow_cfl_violation || file.get_parsed("allow_cfl_violation")?.unwrap_or(false);
    let drift = resolve(
        flags.drift_mode.clone(),
        file.get("drift_mode").map(String::from),
        "full".into(),
    );
    cfg.drift_mode = DriftMode::parse(&drift)?;
    cfg.validate()?;
    Ok(cfg)
}

fn out_from(flag: Option<PathBuf>, file: &FileConfig) -> Option<PathBuf> {
    flag.or_else(|| file.get("out").map(PathBuf::from))
}

fn write_primary(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
    }
}

/// Writes `<out>.meta` next to a primary output.
fn write_sidecar(out: &Path, subcommand: &str, body: &str, wall: Instant) -> Result<(), CliError> {
    let mut text = format!(
        "# sidecar for {}\nsubcommand={subcommand}\nversion={}\n",
        out.display(),
        env!("CARGO_PKG_VERSION"),
    );
    text.push_str(body);
    text.push_str(&format!("wall_time_ms={}\n", wall.elapsed().as_millis()));
    let mut path = out.as_os_str().to_owned();
    path.push(".meta");
    std::fs::write(PathBuf::from(&path), text)
        .map_err(|e| CliError::validation(format!("cannot write sidecar: {e}")))
}

fn clamp_summary(trajectories: &[Trajectory]) -> String {
    let total_steps: u64 = trajectories
        .iter()
        .map(|t| t.clamp_log().total_steps())
        .sum();
    let events: usize = trajectories
        .iter()
        .map(|t| t.clamp_log().events().len())
        .sum();
    let clamped: u64 = trajectories
        .iter()
        .map(|t| t.clamp_log().total_clamped())
        .sum();
    let max_excursion = trajectories
        .iter()
        .map(|t| t.clamp_log().max_excursion())
        .fold(0.0, f64::max);
    format!(
        "clamp_total_steps={total_steps}\nclamp_event_steps={events}\n\
         clamp_total_clamped={clamped}\nclamp_max_excursion={max_excursion:e}\n"
    )
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32, CliError> {
    let wall = Instant::now();
    let file = load_file(&args.flags.config, SIM_KEYS)?;
    let cfg = build_sim_config(&args.flags, &file)?;
    let out = out_from(args.out, &file);
    let context = SimContext::new(&cfg)?;
    let trajectories = context.run_ensemble()?;

    let mut records = String::from("# replica t i value\n");
    for traj in &trajectories {
        for (t, state) in traj.times().iter().zip(traj.states()) {
            for (i, v) in state.values().iter().enumerate() {
                records.push_str(&format!("{} {} {} {}\n", traj.replica(), t, i + 1, v));
            }
        }
    }
    write_primary(out.as_deref(), &records)?;
    if let Some(path) = &out {
        let sigma = context.sigma();
        let body = format!(
            "{}fingerprint={:016x}\njitter={:e}\nhypothesis_h={}\nnoise_scale_check=ok\n{}",
            cfg.echo(),
            cfg.fingerprint(),
            context.noise().jitter(),
            sigma.satisfies_hypothesis(),
            clamp_summary(&trajectories),
        );
        write_sidecar(path, "simulate", &body, wall)?;
    }
    Ok(0)
}

fn cmd_martingale(args: MartingaleArgs) -> Result<i32, CliError> {
    let wall = Instant::now();
    let mut keys = SIM_KEYS.to_vec();
    keys.extend_from_slice(&["phi", "checkpoints"]);
    let file = load_file(&args.flags.config, &keys)?;
    let mut cfg = build_sim_config(&args.flags, &file)?;
    // default dense-enough recording: about 100 snapshots over the horizon
    if args.flags.record_stride.is_none() && file.get("record_stride").is_none() {
        cfg.record_stride = ((cfg.steps() / 100).max(1)) as usize;
    }
    if args.flags.replicas.is_none() && file.get("replicas").is_none() {
        cfg.replicas = 200;
    }
    let out = out_from(args.out, &file);
    let phi_spec = resolve(
        args.phi,
        file.get("phi").map(String::from),
        "product-sine".into(),
    );
    let phi = TestFunction::parse(&phi_spec)?;
    let checkpoints = match resolve(
        args.checkpoints,
        file.get("checkpoints").map(String::from),
        String::new(),
    ) {
        s if s.is_empty() => (1..=5).map(|k| cfg.t_end * k as f64 / 5.0).collect(),
        s => parse_float_list(&s, "checkpoints")?,
    };

    let context = SimContext::new(&cfg)?;
    let trajectories = context.run_ensemble()?;
    let report = martingale_test(
        &trajectories,
        &phi,
        context.noise(),
        context.sigma(),
        &checkpoints,
    )?;
    let text = report.to_text();
    write_primary(out.as_deref(), &text)?;
    if let Some(path) = &out {
        let body = format!(
            "{}phi={}\ncheckpoints={}\nfingerprint={:016x}\njitter={:e}\n{}",
            cfg.echo(),
            phi.name(),
            checkpoints
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
            cfg.fingerprint(),
            context.noise().jitter(),
            clamp_summary(&trajectories),
        );
        write_sidecar(path, "martingale-test", &body, wall)?;
    }
    Ok(if report.pass { 0 } else { 3 })
}

fn cmd_converge(args: ConvergeArgs) -> Result<i32, CliError> {
    let wall = Instant::now();
    const KEYS: &[&str] = &[
        "dim",
        "levels",
        "t_end",
        "replicas",
        "batches",
        "seed",
        "kernel",
        "sigma",
        "initial",
        "phi",
        "quad_refine",
        "out",
    ];
    let file = load_file(&args.config, KEYS)?;
    let dim = resolve(args.dim, file.get_parsed("dim")?, 1);
    let levels_spec = resolve(
        args.levels,
        file.get("levels").map(String::from),
        "4,8,16".into(),
    );
    let levels = parse_level_list(&levels_spec)?;
    let t_end = resolve(args.t_end, file.get_parsed("t_end")?, 0.2);
    let replicas = resolve(args.replicas, file.get_parsed("replicas")?, 500);
    let batches = resolve(args.batches, file.get_parsed("batches")?, 10);
    let master_seed = resolve(args.seed, file.get_parsed("seed")?, 0);
    let kernel = resolve(
        args.kernel,
        file.get("kernel").map(String::from),
        "constant:1".into(),
    );
    let sigma = resolve(
        args.sigma,
        file.get("sigma").map(String::from),
        "stepping-stone".into(),
    );
    let initial = resolve(
        args.initial,
        file.get("initial").map(String::from),
        "constant:0.5".into(),
    );
    let phi_spec = resolve(
        args.phi,
        file.get("phi").map(String::from),
        "product-sine".into(),
    );
    let phi = TestFunction::parse(&phi_spec)?;
    let quad_refine = resolve(args.quad_refine, file.get_parsed("quad_refine")?, 4);
    let out = out_from(args.out, &file);
    if batches < 1 {
        return Err(CliError::validation("batches must be at least 1"));
    }

    let mut text = format!(
        "# converge dim={dim} levels={} t_end={t_end} replicas={replicas} batches={batches} seed={master_seed}\n",
        levels
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    // KS distance per adjacent level pair, per batch
    let pairs = levels.len() - 1;
    let mut per_pair: Vec<Vec<f64>> = vec![Vec::with_capacity(batches); pairs];
    for batch in 0..batches {
        let mut functionals: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
        for (level_index, &n) in levels.iter().enumerate() {
            let grid = GridSpec::new(dim, n)?;
            let mut cfg = SimConfig::new(grid, level_dt(dim, n), t_end);
            cfg.seed = batch_seed(master_seed, batch as u64, level_index as u64);
            cfg.replicas = replicas;
            cfg.kernel = kernel.clone();
            cfg.sigma = sigma.clone();
            cfg.initial = initial.clone();
            cfg.record_stride = usize::MAX / 2; // final state only
            cfg.quad_refine = quad_refine;
            let trajectories = simulate(&cfg)?;
            let values = trajectories
                .iter()
                .map(|t| field_functional(t.final_state(), &phi))
                .collect::<burgers_spde::Result<Vec<f64>>>()?;
            functionals.push(values);
        }
        for pair in 0..pairs {
            let d = ks_refinement(&functionals[pair], &functionals[pair + 1])?;
            per_pair[pair].push(d);
            text.push_str(&format!(
                "batch {batch} ks {} {} {d}\n",
                levels[pair],
                levels[pair + 1]
            ));
        }
    }
    let medians: Vec<f64> = per_pair.iter().map(|v| stats::median(v)).collect();
    for pair in 0..pairs {
        text.push_str(&format!(
            "median ks {} {} {}\n",
            levels[pair],
            levels[pair + 1],
            medians[pair]
        ));
    }
    let pass = medians.windows(2).all(|w| w[0] >= w[1]);
    text.push_str(&format!("RESULT {}\n", if pass { "PASS" } else { "FAIL" }));
    write_primary(out.as_deref(), &text)?;
    if let Some(path) = &out {
        let body = format!(
            "dim={dim}\nlevels={}\nt_end={t_end}\nreplicas={replicas}\nbatches={batches}\n\
             seed={master_seed}\nkernel={kernel}\nsigma={sigma}\ninitial={initial}\nphi={}\n\
             quad_refine={quad_refine}\ndt_rule=1/(8*d*n^2)\nseed_rule=splitmix64(master,batch,level)\n",
            levels
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            phi.name(),
        );
        write_sidecar(path, "converge", &body, wall)?;
    }
    Ok(if pass { 0 } else { 3 })
}

fn cmd_kernel_check(args: KernelCheckArgs) -> Result<i32, CliError> {
    let wall = Instant::now();
    const KEYS: &[&str] = &["dim", "n", "alpha", "out"];
    let file = load_file(&args.config, KEYS)?;
    let dim = resolve(args.dim, file.get_parsed("dim")?, 1);
    let n = require(args.n, file.get_parsed("n")?, "n")?;
    let alpha = resolve(args.alpha, file.get_parsed("alpha")?, 0.5);
    let out = out_from(args.out, &file);
    if !(1..=3).contains(&dim) {
        return Err(CliError::validation(format!(
            "dim must lie in 1..=3, got {dim}"
        )));
    }
    let hk = HeatKernel1D::new(n)?;
    let mut text = format!("# kernel check n={n} dim={dim} alpha={alpha}\n");
    text.push_str("# section semigroup: t s max_deviation\n");
    for t in [0.01, 0.02, 0.05] {
        for s in [0.01, 0.02, 0.05] {
            let dev = hk.semigroup_check(t, s, dim)?;
            text.push_str(&format!("semigroup {t} {s} {dev:e}\n"));
        }
    }
    // the regularity survey is one-dimensional; alpha is validated for d=1
    let report = hk.default_report(AlphaNorm::new(alpha, 1)?)?;
    text.push_str(&report.to_text());
    write_primary(out.as_deref(), &text)?;
    if let Some(path) = &out {
        let body = format!("dim={dim}\nn={n}\nalpha={alpha}\n");
        write_sidecar(path, "kernel-check", &body, wall)?;
    }
    Ok(0)
}

fn cmd_matrix_dump(args: MatrixDumpArgs) -> Result<i32, CliError> {
    let wall = Instant::now();
    const KEYS: &[&str] = &["dim", "n", "which", "out"];
    let file = load_file(&args.config, KEYS)?;
    let dim = require(args.dim, file.get_parsed("dim")?, "dim")?;
    let n = require(args.n, file.get_parsed("n")?, "n")?;
    let which = resolve(args.which, file.get("which").map(String::from), "A".into());
    let out = out_from(args.out, &file);
    let grid = GridSpec::new(dim, n)?;
    let matrix = match which.to_ascii_uppercase().as_str() {
        "A" => build_laplacian(&grid)?,
        "B" => build_gradient(&grid)?,
        _ => {
            return Err(CliError::validation(format!(
                "--which must be A or B, got `{which}`"
            )))
        }
    };
    write_primary(out.as_deref(), &matrix.coordinate_text())?;
    if let Some(path) = &out {
        let body = format!("dim={dim}\nn={n}\nwhich={}\n", which.to_ascii_uppercase());
        write_sidecar(path, "matrix-dump", &body, wall)?;
    }
    Ok(0)
}

fn parse_float_list(spec: &str, field: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| {
                CliError::validation(format!("{field}: cannot parse `{s}` as a number"))
            })
        })
        .collect()
}

fn parse_level_list(spec: &str) -> Result<Vec<usize>, CliError> {
    let levels: Vec<usize> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::validation(format!("levels: cannot parse `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    if levels.len() < 2 {
        return Err(CliError::validation(
            "levels needs at least two resolutions",
        ));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::validation("levels must be strictly ascending"));
    }
    Ok(levels)
}

/// Half the stability ceiling for a level of the refinement study.
fn level_dt(dim: usize, n: usize) -> f64 {
    1.0 / (8.0 * dim as f64 * (n * n) as f64)
}

/// Independent seed per (batch, level): splitmix64 over a combined index,
/// so every ensemble is reproducible under any execution order.
fn batch_seed(master: u64, batch: u64, level_index: u64) -> u64 {
    let mut z = master
        .wrapping_add(batch.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(level_index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
