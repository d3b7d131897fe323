//! Command-line experiments for the coarse-graining channel.
//!
//! Every command prints a one-line `reproduce:` summary to stderr carrying
//! the resolved flags and seed, and stamps the same line into the emitted
//! file, so any output can be regenerated from the line alone.
//!
//! Exit codes: 0 success, 2 validation error (bad flags/ranges), 3 runtime
//! error (I/O).

mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cg_core::avg::{avg_state_coeffs, avg_state_general_axis};
use cg_core::channel::{check_covariance, ProbVector};
use cg_core::laws::{origin_volume, preimage_volume, RadialLaw};
use cg_core::qstate::{su2_geodesic_rotation, BlochVector};
use cg_core::sampling::{
    cg_radii, cg_radii_product, sample_flat_simplex, sample_haar_state, sample_preimage,
    sample_preimage_separable, RngSeed,
};
use cg_core::stats::{fit_p, sweep_eps, FitModel};
use cg_core::Ensemble;

use config::{parse_f64_list, FileConfig};
use emit::{render_csv, render_json, write_out, Meta};

const ENV_SEED: &str = "CG_LAB_SEED";

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<cg_core::Error> for CliError {
    fn from(e: cg_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "cg-lab",
    version,
    about = "Coarse-grained detection of multi-qubit states: samplers, radial laws, preimage volumes, average states, and probability fits",
    arg_required_else_help = true
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw seeded samples: coarse-grained radii, exact preimage states, or
    /// flat simplex points
    Sample(SampleArgs),
    /// Closed-form radial density on a grid (two-particle or general N)
    Pdf(PdfArgs),
    /// Preimage volume of a small neighborhood (closed form)
    Volume(VolumeArgs),
    /// Closed-form average preimage state: coefficients, purity, coherences
    AvgState(AvgStateArgs),
    /// Least-squares recovery of the detection probability from radii
    Fit(FitArgs),
    /// Fit across several shell widths on one shared sample set
    SweepEps(SweepArgs),
    /// Randomized unitary-covariance residual of the channel
    CovarianceCheck(CovarianceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    Full,
    Separable,
}

impl std::str::FromStr for EnsembleArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(EnsembleArg::Full),
            "separable" => Ok(EnsembleArg::Separable),
            other => Err(format!("unknown ensemble {other:?}")),
        }
    }
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Full => Ensemble::Full,
            EnsembleArg::Separable => Ensemble::Separable,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleKind {
    /// Coarse-grained Bloch radii of Haar-random states
    HaarRadii,
    /// Coarse-grained Bloch radii of random product states (two particles)
    ProductRadii,
    /// Exact preimage states of a target (amplitude columns)
    Preimage,
    /// Exact separable preimage states of a target
    PreimageSeparable,
    /// Flat Dirichlet points on the simplex
    Simplex,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path (stdout when absent)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format (each command has a natural default)
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Args)]
struct SeedArgs {
    /// RNG seed (falls back to $CG_LAB_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Base substream id for parallel chunking
    #[arg(long)]
    streams: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    kind: SampleKind,
    /// Number of samples
    #[arg(long)]
    n: Option<usize>,
    /// Particle count (haar-radii)
    #[arg(long = "N")]
    n_qubits: Option<usize>,
    /// Detection probabilities, comma separated (exactly one of --p/--h)
    #[arg(long, value_name = "LIST")]
    p: Option<String>,
    /// Two-particle asymmetry h = p2 - p1
    #[arg(long)]
    h: Option<f64>,
    /// Target Bloch vector x,y,z (preimage kinds)
    #[arg(long, value_name = "X,Y,Z")]
    target: Option<String>,
    /// Simplex dimension (simplex kind)
    #[arg(long)]
    dim: Option<usize>,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PdfArgs {
    /// Particle count
    #[arg(long = "N")]
    n_qubits: Option<usize>,
    /// Detection probabilities, comma separated (exactly one of --p/--h)
    #[arg(long, value_name = "LIST")]
    p: Option<String>,
    /// Two-particle asymmetry (exactly one of --p/--h)
    #[arg(long)]
    h: Option<f64>,
    /// Fine-grained ensemble (separable is two-particle only)
    #[arg(long, value_enum)]
    ensemble: Option<EnsembleArg>,
    /// Number of grid points on [0, 1]
    #[arg(long)]
    grid: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VolumeArgs {
    #[arg(long)]
    h: Option<f64>,
    /// Target radius
    #[arg(long = "r-ts")]
    r_ts: Option<f64>,
    /// Euclidean volume of the neighborhood
    #[arg(long = "v-eps")]
    v_eps: Option<f64>,
    #[arg(long, value_enum)]
    ensemble: Option<EnsembleArg>,
    /// Use the exact origin-centered ball formula (needs --eps, h < eps)
    #[arg(long = "at-origin", default_value_t = false)]
    at_origin: bool,
    /// Ball radius for --at-origin
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AvgStateArgs {
    #[arg(long)]
    h: Option<f64>,
    /// Target radius (z-polarized); exactly one of --r-ts/--target
    #[arg(long = "r-ts")]
    r_ts: Option<f64>,
    /// Full target Bloch vector x,y,z for a reoriented matrix
    #[arg(long, value_name = "X,Y,Z")]
    target: Option<String>,
    #[arg(long, value_enum)]
    ensemble: Option<EnsembleArg>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Detection probability used to generate the sample set
    #[arg(long = "p-test")]
    p_test: Option<f64>,
    /// Number of generated samples
    #[arg(long)]
    n: Option<usize>,
    /// Plain radii CSV to fit instead of generating samples
    #[arg(long = "radii-file", value_name = "PATH")]
    radii_file: Option<PathBuf>,
    /// Shell thickness of the binned density
    #[arg(long)]
    eps: Option<f64>,
    /// Also write the binned radial density (CSV) used by the fit
    #[arg(long = "histogram-out", value_name = "PATH")]
    histogram_out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "p-test")]
    p_test: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Shell widths, comma separated
    #[arg(long = "eps-grid", value_name = "LIST")]
    eps_grid: Option<String>,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CovarianceArgs {
    #[arg(long = "N")]
    n_qubits: Option<usize>,
    /// Number of random (state, rotation) pairs
    #[arg(long)]
    trials: Option<usize>,
    /// Fixed detection probabilities (random per trial when absent)
    #[arg(long, value_name = "LIST")]
    p: Option<String>,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(e),
        },
        None => FileConfig::default(),
    };
    match dispatch(cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Validation(msg) => {
            eprintln!("error (validation): {msg}");
            ExitCode::from(2)
        }
        CliError::Runtime(msg) => {
            eprintln!("error (runtime): {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cmd: Command, cfg: &FileConfig) -> Result<(), CliError> {
    match cmd {
        Command::Sample(a) => run_sample(a, cfg),
        Command::Pdf(a) => run_pdf(a, cfg),
        Command::Volume(a) => run_volume(a, cfg),
        Command::AvgState(a) => run_avg_state(a, cfg),
        Command::Fit(a) => run_fit(a, cfg),
        Command::SweepEps(a) => run_sweep(a, cfg),
        Command::CovarianceCheck(a) => run_covariance(a, cfg),
    }
}

// -- shared resolution helpers ---------------------------------------------

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("missing required --{flag}")))
}

fn resolve_seed(args: &SeedArgs, cfg: &FileConfig) -> Result<RngSeed, CliError> {
    let seed = match cfg.merge(args.seed, "seed")? {
        Some(s) => s,
        None => match std::env::var(ENV_SEED) {
            Ok(v) => v.parse::<u64>().map_err(|_| {
                CliError::Validation(format!("{ENV_SEED} must be a u64, got {v:?}"))
            })?,
            Err(_) => 0,
        },
    };
    let stream = cfg.merge(args.streams, "streams")?.unwrap_or(0);
    Ok(RngSeed::with_stream(seed, stream))
}

/// Exactly one of `--p` / `--h`; returns the probability vector.
fn resolve_weights(
    p: Option<&str>,
    h: Option<f64>,
    n_qubits: usize,
) -> Result<ProbVector, CliError> {
    match (p, h) {
        (Some(_), Some(_)) => Err(CliError::Validation(
            "--p and --h are mutually exclusive; give exactly one".into(),
        )),
        (Some(list), None) => {
            let w = parse_f64_list(list)?;
            if w.len() != n_qubits {
                return Err(CliError::Validation(format!(
                    "--p has {} entries but --N is {n_qubits}",
                    w.len()
                )));
            }
            Ok(ProbVector::new(w)?)
        }
        (None, Some(h)) => {
            if n_qubits != 2 {
                return Err(CliError::Validation(format!(
                    "--h parametrizes two particles; got --N {n_qubits} (use --p)"
                )));
            }
            Ok(ProbVector::from_asymmetry(h)?)
        }
        (None, None) => Err(CliError::Validation(
            "give exactly one of --p or --h".into(),
        )),
    }
}

fn resolve_target(s: &str) -> Result<BlochVector, CliError> {
    let v = parse_f64_list(s)?;
    if v.len() != 3 {
        return Err(CliError::Validation(format!(
            "--target needs x,y,z (got {} values)",
            v.len()
        )));
    }
    let t = BlochVector::new(v[0], v[1], v[2]);
    t.validate_in_ball()?;
    Ok(t)
}

fn format_or(args: &OutputArgs, default: OutFormat) -> OutFormat {
    args.format.unwrap_or(default)
}

fn summarize(meta: &Meta, out: &Option<PathBuf>) {
    let dest = out
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "stdout".into());
    eprintln!("reproduce: {}  -> {dest}", meta.command_line);
}

fn ensemble_name(e: Ensemble) -> &'static str {
    match e {
        Ensemble::Full => "full",
        Ensemble::Separable => "separable",
    }
}

// -- sample -----------------------------------------------------------------

fn run_sample(args: SampleArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let n = need(cfg.merge(args.n, "n")?, "n")?;
    if n == 0 {
        return Err(CliError::Validation("--n must be positive".into()));
    }
    let seed = resolve_seed(&args.seed, cfg)?;
    let p_str = cfg.merge(args.p.clone(), "p")?;
    let h = cfg.merge(args.h, "h")?;
    let target_str = cfg.merge(args.target.clone(), "target")?;

    let (header, rows, cmdline): (Vec<&str>, Vec<Vec<f64>>, String) = match args.kind {
        SampleKind::HaarRadii => {
            let nq = cfg.merge(args.n_qubits, "N")?.unwrap_or(2);
            let p = resolve_weights(p_str.as_deref(), h, nq)?;
            let radii = cg_radii(&p, nq, n, seed)?;
            let cmd = format!(
                "cg-lab sample --kind haar-radii --N {nq} --p {} --n {n} --seed {} --streams {}",
                join_f64(p.weights()),
                seed.seed,
                seed.stream
            );
            (vec!["r"], radii.into_iter().map(|r| vec![r]).collect(), cmd)
        }
        SampleKind::ProductRadii => {
            let p = resolve_weights(p_str.as_deref(), h, 2)?;
            let radii = cg_radii_product(&p, n, seed)?;
            let cmd = format!(
                "cg-lab sample --kind product-radii --p {} --n {n} --seed {} --streams {}",
                join_f64(p.weights()),
                seed.seed,
                seed.stream
            );
            (vec!["r"], radii.into_iter().map(|r| vec![r]).collect(), cmd)
        }
        SampleKind::Preimage | SampleKind::PreimageSeparable => {
            let h = need(h, "h")?;
            let target = resolve_target(&need(target_str, "target")?)?;
            let mut rng = seed.rng();
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let st = match args.kind {
                    SampleKind::Preimage => sample_preimage(&target, h, &mut rng)?,
                    _ => sample_preimage_separable(&target, h, &mut rng)?,
                };
                let mut row = Vec::with_capacity(8);
                for a in st.amplitudes() {
                    row.push(a.re);
                    row.push(a.im);
                }
                rows.push(row);
            }
            let kind = if matches!(args.kind, SampleKind::Preimage) {
                "preimage"
            } else {
                "preimage-separable"
            };
            let cmd = format!(
                "cg-lab sample --kind {kind} --target {},{},{} --h {h} --n {n} --seed {} --streams {}",
                target.x, target.y, target.z, seed.seed, seed.stream
            );
            (
                vec![
                    "re_00", "im_00", "re_01", "im_01", "re_10", "im_10", "re_11", "im_11",
                ],
                rows,
                cmd,
            )
        }
        SampleKind::Simplex => {
            let dim = need(cfg.merge(args.dim, "dim")?, "dim")?;
            let mut rng = seed.rng();
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                rows.push(sample_flat_simplex(dim, &mut rng)?);
            }
            let cmd = format!(
                "cg-lab sample --kind simplex --dim {dim} --n {n} --seed {} --streams {}",
                seed.seed, seed.stream
            );
            static NAMES: [&str; 12] = [
                "x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9", "x10", "x11",
            ];
            if dim > NAMES.len() {
                return Err(CliError::Validation(format!(
                    "--dim at most {}",
                    NAMES.len()
                )));
            }
            (NAMES[..dim].to_vec(), rows, cmd)
        }
    };
    let meta = Meta {
        command_line: cmdline,
        seed: seed.seed,
        stream: seed.stream,
    };
    if format_or(&args.output, OutFormat::Csv) == OutFormat::Json {
        return Err(CliError::Validation(
            "sample emits CSV only (row-oriented data)".into(),
        ));
    }
    write_out(args.output.out.as_deref(), &render_csv(&meta, &header, &rows))?;
    summarize(&meta, &args.output.out);
    Ok(())
}

fn join_f64(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// -- pdf ---------------------------------------------------------------------

fn run_pdf(args: PdfArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let nq = cfg.merge(args.n_qubits, "N")?.unwrap_or(2);
    let grid = cfg.merge(args.grid, "grid")?.unwrap_or(200);
    if grid < 2 {
        return Err(CliError::Validation(format!(
            "--grid must be at least 2, got {grid}"
        )));
    }
    let ensemble: Ensemble = cfg
        .merge(args.ensemble, "ensemble")?
        .unwrap_or(EnsembleArg::Full)
        .into();
    let p_str = cfg.merge(args.p.clone(), "p")?;
    let h = cfg.merge(args.h, "h")?;
    let weights = resolve_weights(p_str.as_deref(), h, nq)?;

    let law = match (nq, ensemble) {
        (2, Ensemble::Separable) => RadialLaw::p2_separable(weights.asymmetry().unwrap())?,
        (2, Ensemble::Full) => RadialLaw::p2(weights.asymmetry().unwrap())?,
        (_, Ensemble::Separable) => {
            return Err(CliError::Validation(
                "--ensemble separable has a closed-form law for two particles only".into(),
            ))
        }
        (_, Ensemble::Full) => RadialLaw::pn(&weights)?,
    };
    let rows: Vec<Vec<f64>> = (0..grid)
        .map(|j| {
            let r = j as f64 / (grid - 1) as f64;
            vec![r, law.eval(r)]
        })
        .collect();
    let cmd = format!(
        "cg-lab pdf --N {nq} --p {} --ensemble {} --grid {grid}",
        join_f64(weights.weights()),
        ensemble_name(ensemble)
    );
    let meta = Meta {
        command_line: cmd,
        seed: 0,
        stream: 0,
    };
    if format_or(&args.output, OutFormat::Csv) == OutFormat::Json {
        return Err(CliError::Validation(
            "pdf emits CSV only (grid data)".into(),
        ));
    }
    write_out(
        args.output.out.as_deref(),
        &render_csv(&meta, &["r", "density"], &rows),
    )?;
    summarize(&meta, &args.output.out);
    Ok(())
}

// -- volume -------------------------------------------------------------------

fn run_volume(args: VolumeArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let h = need(cfg.merge(args.h, "h")?, "h")?;
    let ensemble: Ensemble = cfg
        .merge(args.ensemble, "ensemble")?
        .unwrap_or(EnsembleArg::Full)
        .into();
    let body;
    let cmd;
    if args.at_origin {
        let eps = need(cfg.merge(args.eps, "eps")?, "eps")?;
        let v = origin_volume(h, eps)?;
        body = json!({
            "v_omega": v,
            "h": h,
            "eps": eps,
            "at_origin": true,
        });
        cmd = format!("cg-lab volume --h {h} --at-origin --eps {eps}");
    } else {
        let r_ts = need(cfg.merge(args.r_ts, "r-ts")?, "r-ts")?;
        let v_eps = need(cfg.merge(args.v_eps, "v-eps")?, "v-eps")?;
        let v = preimage_volume(h, r_ts, v_eps, ensemble)?;
        body = json!({
            "v_omega": v,
            "h": h,
            "r_ts": r_ts,
            "v_eps": v_eps,
            "ensemble": ensemble_name(ensemble),
        });
        cmd = format!(
            "cg-lab volume --h {h} --r-ts {r_ts} --v-eps {v_eps} --ensemble {}",
            ensemble_name(ensemble)
        );
    }
    let meta = Meta {
        command_line: cmd,
        seed: 0,
        stream: 0,
    };
    if format_or(&args.output, OutFormat::Json) == OutFormat::Csv {
        return Err(CliError::Validation("volume emits JSON only".into()));
    }
    write_out(args.output.out.as_deref(), &render_json(&meta, body))?;
    summarize(&meta, &args.output.out);
    Ok(())
}

// -- avg-state ------------------------------------------------------------------

fn run_avg_state(args: AvgStateArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let h = need(cfg.merge(args.h, "h")?, "h")?;
    let ensemble: Ensemble = cfg
        .merge(args.ensemble, "ensemble")?
        .unwrap_or(EnsembleArg::Full)
        .into();
    let r_ts_flag = cfg.merge(args.r_ts, "r-ts")?;
    let target_str = cfg.merge(args.target.clone(), "target")?;
    let (target, cmd) = match (r_ts_flag, target_str) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(
                "--r-ts and --target are mutually exclusive".into(),
            ))
        }
        (Some(r), None) => {
            if !(0.0..=1.0).contains(&r) {
                return Err(CliError::Validation(format!(
                    "--r-ts must lie in [0, 1], got {r}"
                )));
            }
            (
                BlochVector::new(0.0, 0.0, r),
                format!(
                    "cg-lab avg-state --h {h} --r-ts {r} --ensemble {}",
                    ensemble_name(ensemble)
                ),
            )
        }
        (None, Some(t)) => {
            let t = resolve_target(&t)?;
            (
                t,
                format!(
                    "cg-lab avg-state --h {h} --target {},{},{} --ensemble {}",
                    t.x,
                    t.y,
                    t.z,
                    ensemble_name(ensemble)
                ),
            )
        }
        (None, None) => {
            return Err(CliError::Validation(
                "give exactly one of --r-ts or --target".into(),
            ))
        }
    };
    let r_ts = target.norm();
    let coeffs = avg_state_coeffs(h, r_ts, ensemble)?;
    let rho = avg_state_general_axis(&target, h, ensemble)?;
    let pauli = coeffs.pauli_components();
    let mut matrix = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let e = rho.entry(i, j);
            matrix.push(vec![e.re, e.im]);
        }
    }
    let body = json!({
        "h": h,
        "r_ts": r_ts,
        "target": [target.x, target.y, target.z],
        "ensemble": ensemble_name(ensemble),
        "branch": match coeffs.branch {
            cg_core::avg::Branch::Inside => "inside",
            cg_core::avg::Branch::Outside => "outside",
        },
        "coefficients": {
            "c1": coeffs.c1, "c2": coeffs.c2, "c3": coeffs.c3, "c4": coeffs.c4,
        },
        "pauli_components": {
            "00": pauli[0], "30": pauli[1], "03": pauli[2],
            "33": pauli[3], "11": pauli[4], "22": pauli[5],
        },
        "purity": rho.purity(),
        "coherence_01_10": 2.0 * coeffs.c4,
        "coherence_bound_full": (1.0 - r_ts) / 4.0,
        "coherence_bound_separable": (1.0 - r_ts) / 2.0,
        "matrix_re_im": matrix,
    });
    let meta = Meta {
        command_line: cmd,
        seed: 0,
        stream: 0,
    };
    if format_or(&args.output, OutFormat::Json) == OutFormat::Csv {
        return Err(CliError::Validation("avg-state emits JSON only".into()));
    }
    write_out(args.output.out.as_deref(), &render_json(&meta, body))?;
    summarize(&meta, &args.output.out);
    Ok(())
}

// -- fit ---------------------------------------------------------------------

fn run_fit(args: FitArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let eps = need(cfg.merge(args.eps, "eps")?, "eps")?;
    let seed = resolve_seed(&args.seed, cfg)?;
    let p_test = cfg.merge(args.p_test, "p-test")?;
    let (radii, source) = match (&args.radii_file, p_test) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(
                "--radii-file and --p-test are mutually exclusive".into(),
            ))
        }
        (Some(path), None) => {
            let radii = emit::read_radii_csv(path)?;
            (radii, format!("--radii-file {}", path.display()))
        }
        (None, Some(p_test)) => {
            if !(p_test > 0.0 && p_test < 0.5) {
                return Err(CliError::Validation(format!(
                    "--p-test must lie in (0, 0.5), got {p_test}"
                )));
            }
            let n = need(cfg.merge(args.n, "n")?, "n")?;
            let p = ProbVector::new(vec![p_test, 1.0 - p_test])?;
            (cg_radii(&p, 2, n, seed)?, format!("--p-test {p_test} --n {n}"))
        }
        (None, None) => {
            return Err(CliError::Validation(
                "give exactly one of --p-test or --radii-file".into(),
            ))
        }
    };
    let fit = fit_p(&radii, eps, FitModel::P2, seed)?;
    let cmd = format!(
        "cg-lab fit {source} --eps {eps} --seed {} --streams {}",
        seed.seed, seed.stream
    );
    if let Some(hist_path) = &args.histogram_out {
        let pdf = cg_core::stats::empirical_radial_pdf(
            &radii,
            eps,
            cg_core::stats::ShellVolume::Exact,
        )?;
        let rows: Vec<Vec<f64>> = pdf
            .centers()
            .iter()
            .zip(pdf.counts.iter())
            .zip(pdf.density.iter())
            .map(|((&c, &cnt), &d)| vec![c, cnt as f64, d])
            .collect();
        let hist_meta = Meta {
            command_line: format!("{cmd} --histogram-out {}", hist_path.display()),
            seed: seed.seed,
            stream: seed.stream,
        };
        write_out(
            Some(hist_path.as_path()),
            &render_csv(&hist_meta, &["r_center", "count", "density"], &rows),
        )?;
    }
    let body = json!({
        "p_fit": fit.p_fit,
        "residual_sum": fit.residual_sum,
        "eps_used": fit.eps_used,
        "n_used": fit.n_used,
        "seed": { "seed": fit.seed.seed, "stream": fit.seed.stream },
    });
    let meta = Meta {
        command_line: cmd,
        seed: seed.seed,
        stream: seed.stream,
    };
    if format_or(&args.output, OutFormat::Json) == OutFormat::Csv {
        return Err(CliError::Validation("fit emits JSON only".into()));
    }
    write_out(args.output.out.as_deref(), &render_json(&meta, body))?;
    summarize(&meta, &args.output.out);
    Ok(())
}

// -- sweep-eps -----------------------------------------------------------------

fn run_sweep(args: SweepArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let p_test = need(cfg.merge(args.p_test, "p-test")?, "p-test")?;
    let n = need(cfg.merge(args.n, "n")?, "n")?;
    let grid_str = need(cfg.merge(args.eps_grid.clone(), "eps-grid")?, "eps-grid")?;
    let grid = parse_f64_list(&grid_str)?;
    let seed = resolve_seed(&args.seed, cfg)?;
    let sweep = sweep_eps(p_test, n, &grid, seed)?;
    let cmd = format!(
        "cg-lab sweep-eps --p-test {p_test} --n {n} --eps-grid {} --seed {} --streams {}",
        join_f64(&grid),
        seed.seed,
        seed.stream
    );
    let meta = Meta {
        command_line: cmd,
        seed: seed.seed,
        stream: seed.stream,
    };
    match format_or(&args.output, OutFormat::Csv) {
        OutFormat::Csv => {
            let rows: Vec<Vec<f64>> = sweep
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    vec![
                        row.eps,
                        row.p_fit,
                        row.abs_error,
                        if i == sweep.best_index { 1.0 } else { 0.0 },
                    ]
                })
                .collect();
            write_out(
                args.output.out.as_deref(),
                &render_csv(&meta, &["eps", "p_fit", "abs_error", "best"], &rows),
            )?;
        }
        OutFormat::Json => {
            let rows: Vec<serde_json::Value> = sweep
                .rows
                .iter()
                .map(|r| json!({"eps": r.eps, "p_fit": r.p_fit, "abs_error": r.abs_error}))
                .collect();
            let body = json!({
                "rows": rows,
                "best_index": sweep.best_index,
                "best_eps": sweep.rows[sweep.best_index].eps,
                "p_test": p_test,
                "n": n,
            });
            write_out(args.output.out.as_deref(), &render_json(&meta, body))?;
        }
    }
    summarize(&meta, &args.output.out);
    Ok(())
}

// -- covariance-check ------------------------------------------------------------

fn run_covariance(args: CovarianceArgs, cfg: &FileConfig) -> Result<(), CliError> {
    use rand::Rng;
    let nq = cfg.merge(args.n_qubits, "N")?.unwrap_or(2);
    let trials = cfg.merge(args.trials, "trials")?.unwrap_or(100);
    if trials == 0 {
        return Err(CliError::Validation("--trials must be positive".into()));
    }
    let seed = resolve_seed(&args.seed, cfg)?;
    let fixed_p = match cfg.merge(args.p.clone(), "p")? {
        Some(list) => Some(ProbVector::new(parse_f64_list(&list)?)?),
        None => None,
    };
    if let Some(p) = &fixed_p {
        if p.len() != nq {
            return Err(CliError::Validation(format!(
                "--p has {} entries but --N is {nq}",
                p.len()
            )));
        }
    }
    let mut rng = seed.rng();
    let mut max_dev = 0.0f64;
    for _ in 0..trials {
        let psi = sample_haar_state(nq, &mut rng)?;
        let p = match &fixed_p {
            Some(p) => p.clone(),
            None => {
                let mut w: Vec<f64> = (0..nq).map(|_| rng.random::<f64>() + 0.01).collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
                ProbVector::new(w)?
            }
        };
        let u = su2_geodesic_rotation(
            rng.random::<f64>() * std::f64::consts::PI,
            rng.random::<f64>() * 2.0 * std::f64::consts::PI,
        );
        max_dev = max_dev.max(check_covariance(&psi, &p, &u)?);
    }
    let cmd = format!(
        "cg-lab covariance-check --N {nq} --trials {trials} --seed {} --streams {}",
        seed.seed, seed.stream
    );
    let body = json!({
        "max_deviation": max_dev,
        "trials": trials,
        "n_qubits": nq,
        "within_1e-10": max_dev <= 1e-10,
    });
    let meta = Meta {
        command_line: cmd,
        seed: seed.seed,
        stream: seed.stream,
    };
    if format_or(&args.output, OutFormat::Json) == OutFormat::Csv {
        return Err(CliError::Validation(
            "covariance-check emits JSON only".into(),
        ));
    }
    write_out(args.output.out.as_deref(), &render_json(&meta, body))?;
    summarize(&meta, &args.output.out);
    Ok(())
}
