//! Command-line front end.
//!
//! Six subcommands cover the crate's capabilities: `classify` (the
//! mechanism catalog), `pathwise` (event-log duality checks), `exact-dual`
//! (uniformization gaps), `prototype` (the finite-size sampling-duality
//! gap), `sde-dual` (Monte Carlo moment/Laplace reports), and `scaling`
//! (convergence tables).
//!
//! Output contract:
//!
//! * every file starts with `# key=value` comment lines carrying the full
//!   parameter set and seed, sorted by key, followed by a CSV header row;
//! * numbers are printed in shortest round-trip form, so a rerun with the
//!   same flags and seed is byte-identical;
//! * `sde-dual` and `scaling` additionally write a JSON sidecar (same path
//!   with a `.json` extension) when writing to a file;
//! * `--out -` (the default) writes CSV to standard output; progress and
//!   summaries go to standard error;
//! * a relative `--out` path is resolved against `IPSDUAL_OUT_DIR` when
//!   that variable is set.
//!
//! Exit codes: `0` success, `1` a verification check failed (or an output
//! file could not be written), `2` usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diffusion::{BracoParams, FellerParams};
use crate::exact::{
    count_generator, evolve_distribution, prototype_duality_gap, wedge_duality_sides,
    Distribution, DEFAULT_EVOLVE_TOL, DEFAULT_FULL_SITE_CAP,
};
use crate::experiments::{
    braco_scaling_table, feller_scaling_table, laplace_duality_report, moment_duality_report,
    pure_death_scaling, ConvergenceTable, DualityReport,
};
use crate::graphical::{
    pathwise_duality_holds, standard_dual_mechanisms, standard_mechanisms, Configuration,
    EventLog, RateSpec,
};
use crate::mechanism::{classify_all, BasicMechanism};
use crate::rng::replicate_rng;
use crate::{Error, Result, DEFAULT_SEED};

/// Environment variable naming the default directory for relative `--out`
/// paths.
pub const OUT_DIR_ENV: &str = "IPSDUAL_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "ipsdual",
    version,
    about = "Interacting particle systems from pair mechanisms: duality classification and verification",
    propagate_version = true
)]
struct TopCli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Classify all 256 pair mechanisms by duality and list the pairs.
    Classify(ClassifyArgs),
    /// Check the pathwise duality on sampled event logs, one replicate per row.
    Pathwise(PathwiseArgs),
    /// Exact disjointness-duality gaps on small systems via uniformization.
    ExactDual(ExactDualArgs),
    /// Exact finite-size gap of the sampling duality across system sizes.
    Prototype(PrototypeArgs),
    /// Monte Carlo duality reports for the diffusion limits.
    SdeDual(SdeDualArgs),
    /// Convergence tables for the scaling limits.
    Scaling(ScalingArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Output file, or `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
    /// Table format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct PathwiseArgs {
    /// Number of sites.
    #[arg(long)]
    n: usize,
    /// System rates as `u,e,gamma,beta`.
    #[arg(long, value_parser = parse_rates)]
    rates: RateSpec,
    /// Time horizon of each event log.
    #[arg(long)]
    horizon: f64,
    /// Number of sampled logs.
    #[arg(long)]
    reps: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct ExactDualArgs {
    /// Largest system size; every size from 2 up is checked.
    #[arg(long)]
    n_max: usize,
    /// System rates as `u,e,gamma,beta`.
    #[arg(long, value_parser = parse_rates)]
    rates: RateSpec,
    /// Comma-separated evaluation times.
    #[arg(long, default_value = "0.1,0.5,1,2", value_parser = parse_f64_list)]
    t_grid: std::vec::Vec<f64>,
    /// Random (x, y) draws per system size.
    #[arg(long, default_value_t = 50)]
    draws: u64,
    /// Largest acceptable gap.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct PrototypeArgs {
    /// Coalescent-rate coupling constant: the coalescent rate at size N is c·N.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Initial count of the first chain.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Initial count of the second chain as a fraction of N (k = ⌊frac·N⌋).
    #[arg(long, default_value_t = 0.3)]
    k_frac: f64,
    /// Comma-separated system sizes, strictly increasing.
    #[arg(long = "n-list", default_value = "50,100,200,400", value_parser = parse_usize_list)]
    n_list: std::vec::Vec<usize>,
    /// Birth rate u.
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    /// Death/coalescent rate e.
    #[arg(long, default_value_t = 0.5)]
    e: f64,
    /// Resampling rate beta.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Evaluation time.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct SdeDualArgs {
    #[command(subcommand)]
    kind: SdeDualKind,
}

#[derive(Subcommand, Debug)]
enum SdeDualKind {
    /// Moment duality: branching-coalescing chain vs resampling-selection
    /// diffusion.
    Moment(MomentArgs),
    /// Laplace duality between two logistic Feller diffusions.
    Laplace(LaplaceArgs),
}

#[derive(Args, Debug)]
struct MomentArgs {
    /// Branching rate.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Pairwise coalescence rate.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Death rate.
    #[arg(long, default_value_t = 0.5)]
    d: f64,
    /// Chain initial count.
    #[arg(long, default_value_t = 3)]
    n: u64,
    /// Diffusion initial frequency in [0, 1].
    #[arg(long, default_value_t = 0.3)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Replicates per side.
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    /// Euler step of the diffusion side.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct LaplaceArgs {
    /// Linear drift coefficient.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Quadratic (logistic) drift coefficient.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Branching (noise) coefficient.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Duality-function scale.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// First diffusion's start.
    #[arg(long, default_value_t = 2.0)]
    x: f64,
    /// Second diffusion's start.
    #[arg(long, default_value_t = 0.5)]
    y: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Replicates per side.
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    /// Euler step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[command(subcommand)]
    kind: ScalingKind,
}

#[derive(Subcommand, Debug)]
enum ScalingKind {
    /// Occupied-site count vs the branching-coalescing chain (total variation).
    Braco(BracoScalingArgs),
    /// Rescaled count vs the logistic Feller diffusion (Wasserstein-1).
    Feller(FellerScalingArgs),
    /// Rescaled pure-coalescence mean vs the deterministic decay curve.
    PureDeath(PureDeathScalingArgs),
}

#[derive(Args, Debug)]
struct BracoScalingArgs {
    /// Comma-separated system sizes, strictly increasing.
    #[arg(long = "n-list", default_value = "25,50,100,200", value_parser = parse_usize_list)]
    n_list: std::vec::Vec<usize>,
    /// Common initial count.
    #[arg(long, default_value_t = 2)]
    n0: usize,
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    #[arg(long, default_value_t = 0.5)]
    e: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Coalescent coupling: the coalescent rate at size N is c·N.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct FellerScalingArgs {
    #[arg(long = "n-list", default_value = "100,400,1600", value_parser = parse_usize_list)]
    n_list: std::vec::Vec<usize>,
    /// Rescaled initial mass: the chain starts from ⌊x·√N⌋ occupied sites.
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// Limit drift: the birth rate at size N is e + alpha/√N.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Fixed death/coalescent rate.
    #[arg(long, default_value_t = 0.5)]
    e: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Diffusion time; the chain runs to t·√N.
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    /// Monte Carlo replicates of the reference limit law.
    #[arg(long, default_value_t = 50_000)]
    reps: u64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Args, Debug)]
struct PureDeathScalingArgs {
    #[arg(long = "n-list", default_value = "100,400,1600", value_parser = parse_usize_list)]
    n_list: std::vec::Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Rescaled initial mass: the chain starts from ⌊y·√N⌋ sites.
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    /// Comma-separated evaluation times.
    #[arg(long, default_value = "0.25,0.5,0.75,1", value_parser = parse_f64_list)]
    t_grid: std::vec::Vec<f64>,
    #[arg(long, default_value = "-")]
    out: String,
}

fn parse_rates(s: &str) -> std::result::Result<RateSpec, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected `u,e,gamma,beta`, got {} value(s)", parts.len()));
    }
    let mut v = [0.0f64; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| format!("bad rate {part:?}: {e}"))?;
    }
    RateSpec::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|part| part.trim().parse::<f64>().map_err(|e| format!("bad number {part:?}: {e}")))
        .collect()
}

fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|part| part.trim().parse::<usize>().map_err(|e| format!("bad size {part:?}: {e}")))
        .collect()
}

/// Where a document goes: standard output or a file.
enum OutTarget {
    Stdout,
    File(PathBuf),
}

impl OutTarget {
    fn resolve(out: &str) -> Self {
        if out == "-" {
            return Self::Stdout;
        }
        let path = PathBuf::from(out);
        if path.is_relative() {
            if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
                return Self::File(Path::new(&dir).join(path));
            }
        }
        Self::File(path)
    }

    fn write(&self, content: &str) -> Result<()> {
        match self {
            Self::Stdout => {
                print!("{content}");
                Ok(())
            }
            Self::File(path) => {
                std::fs::write(path, content)?;
                Ok(())
            }
        }
    }

    /// Sidecar path: the output path with a `.json` extension; none when
    /// writing to standard output.
    fn sidecar(&self) -> Result<Option<PathBuf>> {
        match self {
            Self::Stdout => Ok(None),
            Self::File(path) => {
                let sidecar = path.with_extension("json");
                if sidecar == *path {
                    return Err(Error::InvalidArgument(format!(
                        "--out {} collides with its JSON sidecar; use a different extension",
                        path.display()
                    )));
                }
                Ok(Some(sidecar))
            }
        }
    }
}

/// Result of a dispatched subcommand.
enum Outcome {
    Pass,
    CheckFailed(String),
}

/// Shortest round-trip rendering, identical across reruns.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// A CSV document: sorted `# key=value` parameter lines, a header row, data
/// rows, and optional trailing `# key=value` summary lines.
fn csv_document(
    params: &BTreeMap<String, String>,
    header: &str,
    rows: &[String],
    trailer: &BTreeMap<String, String>,
) -> String {
    let mut doc = String::new();
    for (k, v) in params {
        let _ = writeln!(doc, "# {k}={v}");
    }
    let _ = writeln!(doc, "{header}");
    for row in rows {
        let _ = writeln!(doc, "{row}");
    }
    for (k, v) in trailer {
        let _ = writeln!(doc, "# {k}={v}");
    }
    doc
}

fn params_map(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn write_json_sidecar<T: Serialize>(target: &OutTarget, value: &T) -> Result<()> {
    if let Some(path) = target.sidecar()? {
        let mut body = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Mismatch(format!("serializing sidecar: {e}")))?;
        body.push('\n');
        std::fs::write(path, body)?;
    }
    Ok(())
}

/// Parse `argv` and run the selected subcommand.
///
/// Returns the process exit code: `0` success, `1` failed verification
/// check or I/O failure, `2` usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match TopCli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests print to stdout and succeed; real
            // parse errors print usage to stderr.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            1
        }
        Err(err @ Error::Io(_)) => {
            eprintln!("error: {err}");
            1
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn dispatch(cli: TopCli) -> Result<Outcome> {
    match cli.cmd {
        Cmd::Classify(args) => run_classify(args),
        Cmd::Pathwise(args) => run_pathwise(args),
        Cmd::ExactDual(args) => run_exact_dual(args),
        Cmd::Prototype(args) => run_prototype(args),
        Cmd::SdeDual(args) => match args.kind {
            SdeDualKind::Moment(a) => run_sde_moment(a),
            SdeDualKind::Laplace(a) => run_sde_laplace(a),
        },
        Cmd::Scaling(args) => match args.kind {
            ScalingKind::Braco(a) => run_scaling_braco(a),
            ScalingKind::Feller(a) => run_scaling_feller(a),
            ScalingKind::PureDeath(a) => run_scaling_pure_death(a),
        },
    }
}

/// CSV-safe truth-table rendering: four output pairs joined by spaces.
fn table_field(m: BasicMechanism) -> String {
    m.table().map(|s| format!("{}{}", s.first as u8, s.second as u8)).join(" ")
}

#[derive(Serialize)]
struct CatalogRecord {
    f_code: u8,
    f_table: String,
    g_code: u8,
    g_table: String,
    self_dual: bool,
}

fn run_classify(args: ClassifyArgs) -> Result<Outcome> {
    let catalog = classify_all();
    let records: Vec<CatalogRecord> = catalog
        .unordered_pairs()
        .into_iter()
        .map(|(f, g)| CatalogRecord {
            f_code: f.code(),
            f_table: table_field(f),
            g_code: g.code(),
            g_table: table_field(g),
            self_dual: f == g,
        })
        .collect();

    let target = OutTarget::resolve(&args.out);
    let document = match args.format {
        OutputFormat::Csv => {
            let params = params_map(&[
                ("command", "classify".to_string()),
                ("mechanisms_with_dual", catalog.with_dual_count().to_string()),
                ("self_dual", catalog.self_dual_count().to_string()),
            ]);
            let rows: Vec<String> = records
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{}",
                        r.f_code,
                        r.f_table,
                        r.g_code,
                        r.g_table,
                        r.self_dual as u8
                    )
                })
                .collect();
            csv_document(
                &params,
                "f_code,f_table,g_code,g_table,self_dual",
                &rows,
                &BTreeMap::new(),
            )
        }
        OutputFormat::Json => {
            let mut body = serde_json::to_string_pretty(&records)
                .map_err(|e| Error::Mismatch(format!("serializing catalog: {e}")))?;
            body.push('\n');
            body
        }
    };
    target.write(&document)?;
    eprintln!(
        "{} dual pairs ({} mechanisms with a dual, {} self-dual)",
        records.len(),
        catalog.with_dual_count(),
        catalog.self_dual_count()
    );
    Ok(Outcome::Pass)
}

fn run_pathwise(args: PathwiseArgs) -> Result<Outcome> {
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be positive".into()));
    }
    let mechanisms = standard_mechanisms();
    let duals = standard_dual_mechanisms();

    let mut rows = Vec::with_capacity(args.reps as usize);
    let mut held = 0u64;
    for replicate in 0..args.reps {
        let mut rng = replicate_rng(args.seed, replicate);
        let log = EventLog::sample_standard(args.n, &args.rates, args.horizon, &mut rng)?;
        let x0 = Configuration::random(args.n, &mut rng);
        let y_horizon = Configuration::random(args.n, &mut rng);
        let holds = pathwise_duality_holds(&x0, &y_horizon, &log, &mechanisms, &duals)?;
        held += holds as u64;
        rows.push(format!("{replicate},{}", holds as u8));
    }

    let params = params_map(&[
        ("command", "pathwise".to_string()),
        ("n", args.n.to_string()),
        ("u", fmt_f64(args.rates.u)),
        ("e", fmt_f64(args.rates.e)),
        ("gamma", fmt_f64(args.rates.gamma)),
        ("beta", fmt_f64(args.rates.beta)),
        ("horizon", fmt_f64(args.horizon)),
        ("reps", args.reps.to_string()),
        ("seed", args.seed.to_string()),
    ]);
    let trailer = params_map(&[("holds", format!("{held}/{}", args.reps))]);
    OutTarget::resolve(&args.out).write(&csv_document(
        &params,
        "replicate,holds",
        &rows,
        &trailer,
    ))?;
    eprintln!("holds: {held}/{}", args.reps);
    if held == args.reps {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::CheckFailed(format!(
            "pathwise duality failed in {} of {} replicates",
            args.reps - held,
            args.reps
        )))
    }
}

fn run_exact_dual(args: ExactDualArgs) -> Result<Outcome> {
    if args.n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "--n-max {} too small; need at least 2 sites",
            args.n_max
        )));
    }
    if args.n_max > DEFAULT_FULL_SITE_CAP {
        return Err(Error::ResourceLimit(format!(
            "--n-max {} exceeds the full-chain cap {DEFAULT_FULL_SITE_CAP}",
            args.n_max
        )));
    }
    if args.draws == 0 {
        return Err(Error::InvalidArgument("--draws must be positive".into()));
    }
    for &t in &args.t_grid {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
        }
    }

    let mut rows = Vec::new();
    let mut max_gap = 0.0f64;
    for n in 2..=args.n_max {
        for draw in 0..args.draws {
            // One stream per (size, draw), independent of grid iteration
            // order.
            let mut rng = replicate_rng(args.seed, ((n as u64) << 32) | draw);
            let x = Configuration::random(n, &mut rng);
            let y = Configuration::random(n, &mut rng);
            for &t in &args.t_grid {
                let (lhs, rhs) = wedge_duality_sides(n, &args.rates, &x, &y, t)?;
                let gap = (lhs - rhs).abs();
                max_gap = max_gap.max(gap);
                rows.push(format!(
                    "{n},{x},{y},{},{},{},{}",
                    fmt_f64(t),
                    fmt_f64(lhs),
                    fmt_f64(rhs),
                    fmt_f64(gap)
                ));
            }
        }
    }

    let params = params_map(&[
        ("command", "exact-dual".to_string()),
        ("n_max", args.n_max.to_string()),
        ("u", fmt_f64(args.rates.u)),
        ("e", fmt_f64(args.rates.e)),
        ("gamma", fmt_f64(args.rates.gamma)),
        ("beta", fmt_f64(args.rates.beta)),
        ("t_grid", args.t_grid.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(" ")),
        ("draws", args.draws.to_string()),
        ("tol", fmt_f64(args.tol)),
        ("seed", args.seed.to_string()),
    ]);
    let trailer = params_map(&[("max_gap", fmt_f64(max_gap))]);
    OutTarget::resolve(&args.out).write(&csv_document(
        &params,
        "n,x,y,t,lhs,rhs,gap",
        &rows,
        &trailer,
    ))?;
    eprintln!("max gap {max_gap:.3e} over {} cases (tolerance {:.1e})", rows.len(), args.tol);
    if max_gap <= args.tol {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::CheckFailed(format!(
            "max duality gap {max_gap:.3e} exceeds tolerance {:.1e}",
            args.tol
        )))
    }
}

fn run_prototype(args: PrototypeArgs) -> Result<Outcome> {
    if !(0.0..=1.0).contains(&args.k_frac) {
        return Err(Error::InvalidArgument(format!(
            "--k-frac {} outside [0, 1]",
            args.k_frac
        )));
    }
    let mut rows = Vec::with_capacity(args.n_list.len());
    let mut gaps = Vec::with_capacity(args.n_list.len());
    if args.n_list.is_empty() || !args.n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(format!(
            "--n-list {:?} must be nonempty and strictly increasing",
            args.n_list
        )));
    }
    for &n_sites in &args.n_list {
        let k = (args.k_frac * n_sites as f64).floor() as usize;
        let gamma = args.c * n_sites as f64;
        let rates = RateSpec::new(args.u, args.e, gamma, args.beta)?;
        let gap = prototype_duality_gap(n_sites, args.n, k, &rates, args.t)?;
        gaps.push(gap);
        rows.push(format!("{n_sites},{k},{},{}", fmt_f64(gamma), fmt_f64(gap)));
    }

    let params = params_map(&[
        ("command", "prototype".to_string()),
        ("c", fmt_f64(args.c)),
        ("n", args.n.to_string()),
        ("k_frac", fmt_f64(args.k_frac)),
        ("u", fmt_f64(args.u)),
        ("e", fmt_f64(args.e)),
        ("beta", fmt_f64(args.beta)),
        ("t", fmt_f64(args.t)),
        (
            "n_list",
            args.n_list.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        ),
    ]);
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let trailer = params_map(&[("nonincreasing", (monotone as u8).to_string())]);
    OutTarget::resolve(&args.out).write(&csv_document(
        &params,
        "n,k,gamma,gap",
        &rows,
        &trailer,
    ))?;
    for (n_sites, gap) in args.n_list.iter().zip(&gaps) {
        eprintln!("N = {n_sites:6}  gap = {gap:.6e}");
    }
    if monotone {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::CheckFailed(format!("gaps {gaps:?} are not nonincreasing in N")))
    }
}

/// Write a duality report as a one-row CSV (plus sidecar) and map its pass
/// flag to an outcome.
fn emit_report(report: &DualityReport, out: &str) -> Result<Outcome> {
    let target = OutTarget::resolve(out);
    let mut params = report.metadata.clone();
    params.insert("command".to_string(), "sde-dual".to_string());
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        fmt_f64(report.lhs_estimate),
        fmt_f64(report.lhs_se),
        fmt_f64(report.rhs_estimate),
        fmt_f64(report.rhs_se),
        fmt_f64(report.gap),
        fmt_f64(report.bias_allowance),
        fmt_f64(report.tolerance),
        report.pass as u8
    );
    target.write(&csv_document(
        &params,
        "lhs,lhs_se,rhs,rhs_se,gap,bias_allowance,tolerance,pass",
        &[row],
        &BTreeMap::new(),
    ))?;
    write_json_sidecar(&target, report)?;
    eprintln!(
        "lhs {:.6} ± {:.6}  rhs {:.6} ± {:.6}  gap {:.3e}  tolerance {:.3e}  {}",
        report.lhs_estimate,
        report.lhs_se,
        report.rhs_estimate,
        report.rhs_se,
        report.gap,
        report.tolerance,
        if report.pass { "pass" } else { "FAIL" }
    );
    if report.pass {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::CheckFailed(format!(
            "duality gap {:.3e} exceeds tolerance {:.3e}",
            report.gap, report.tolerance
        )))
    }
}

fn run_sde_moment(args: MomentArgs) -> Result<Outcome> {
    let p = BracoParams::new(args.b, args.c, args.d)?;
    let report =
        moment_duality_report(&p, args.n, args.y, args.t, args.reps, args.dt, args.seed)?;
    emit_report(&report, &args.out)
}

fn run_sde_laplace(args: LaplaceArgs) -> Result<Outcome> {
    let p = FellerParams::new(args.alpha, args.gamma, args.beta)?;
    let report = laplace_duality_report(
        &p, args.r, args.x, args.y, args.t, args.reps, args.dt, args.seed,
    )?;
    emit_report(&report, &args.out)
}

#[derive(Serialize)]
struct TableSidecar<'a> {
    params: &'a BTreeMap<String, String>,
    #[serde(flatten)]
    table: &'a ConvergenceTable,
}

/// Write a convergence table as CSV (plus sidecar); the check is that the
/// final-size distance improves strictly on the first-size distance.
fn emit_table(
    table: &ConvergenceTable,
    params: BTreeMap<String, String>,
    out: &str,
) -> Result<Outcome> {
    let target = OutTarget::resolve(out);
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{},{}", r.n_sites, fmt_f64(r.distance)))
        .collect();
    let trailer = params_map(&[("nonincreasing", (table.monotone as u8).to_string())]);
    target.write(&csv_document(&params, "n,distance", &rows, &trailer))?;
    write_json_sidecar(&target, &TableSidecar { params: &params, table })?;
    for r in &table.rows {
        eprintln!("N = {:6}  distance = {:.6e}  ({:.2}s)", r.n_sites, r.distance, r.runtime_s);
    }
    let first = table.rows.first().map(|r| r.distance);
    let last = table.rows.last().map(|r| r.distance);
    match (first, last) {
        (Some(first), Some(last)) if table.rows.len() > 1 && last >= first => {
            Ok(Outcome::CheckFailed(format!(
                "distance did not improve: first {first:.3e}, last {last:.3e}"
            )))
        }
        _ => Ok(Outcome::Pass),
    }
}

fn run_scaling_braco(args: BracoScalingArgs) -> Result<Outcome> {
    let table =
        braco_scaling_table(&args.n_list, args.n0, args.u, args.e, args.beta, args.c, args.t)?;
    let params = params_map(&[
        ("command", "scaling-braco".to_string()),
        ("n0", args.n0.to_string()),
        ("u", fmt_f64(args.u)),
        ("e", fmt_f64(args.e)),
        ("beta", fmt_f64(args.beta)),
        ("c", fmt_f64(args.c)),
        ("t", fmt_f64(args.t)),
        (
            "n_list",
            args.n_list.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        ),
    ]);
    emit_table(&table, params, &args.out)
}

fn run_scaling_feller(args: FellerScalingArgs) -> Result<Outcome> {
    let table = feller_scaling_table(
        &args.n_list,
        args.x,
        args.alpha,
        args.e,
        args.gamma,
        args.beta,
        args.t,
        args.reps,
        args.dt,
        args.seed,
    )?;
    let params = params_map(&[
        ("command", "scaling-feller".to_string()),
        ("x", fmt_f64(args.x)),
        ("alpha", fmt_f64(args.alpha)),
        ("e", fmt_f64(args.e)),
        ("gamma", fmt_f64(args.gamma)),
        ("beta", fmt_f64(args.beta)),
        ("t", fmt_f64(args.t)),
        ("reps", args.reps.to_string()),
        ("dt", fmt_f64(args.dt)),
        ("seed", args.seed.to_string()),
        (
            "n_list",
            args.n_list.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        ),
    ]);
    emit_table(&table, params, &args.out)
}

fn run_scaling_pure_death(args: PureDeathScalingArgs) -> Result<Outcome> {
    let table = pure_death_scaling(&args.n_list, args.beta, args.y, &args.t_grid)?;
    let params = params_map(&[
        ("command", "scaling-pure-death".to_string()),
        ("beta", fmt_f64(args.beta)),
        ("y", fmt_f64(args.y)),
        ("t_grid", args.t_grid.iter().map(|t| fmt_f64(*t)).collect::<Vec<_>>().join(" ")),
        (
            "n_list",
            args.n_list.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        ),
    ]);
    emit_table(&table, params, &args.out)
}

/// Exact mean path of the pure-birth/resampling count chain, used by the
/// bound check in the test suite and examples.
pub fn count_chain_mean_path(
    n_sites: usize,
    rates: &RateSpec,
    n0: usize,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    let gen = count_generator(n_sites, rates)?;
    let mut law = Distribution::point(n_sites + 1, n0)?;
    let mut prev = 0.0;
    let mut means = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !t.is_finite() || t < prev {
            return Err(Error::InvalidArgument(format!(
                "time grid must be nondecreasing; saw {t} after {prev}"
            )));
        }
        law = evolve_distribution(&gen, &law, t - prev, DEFAULT_EVOLVE_TOL)?;
        prev = t;
        means.push(law.mean_index());
    }
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_vec(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_vec(&["ipsdual"]), 2);
        assert_eq!(run_vec(&["ipsdual", "no-such-command"]), 2);
        assert_eq!(run_vec(&["ipsdual", "pathwise", "--n", "4"]), 2);
        assert_eq!(
            run_vec(&[
                "ipsdual",
                "exact-dual",
                "--n-max",
                "0",
                "--rates",
                "1,1,1,1",
                "--out",
                "-"
            ]),
            2
        );
        assert_eq!(
            run_vec(&["ipsdual", "pathwise", "--n", "4", "--rates", "1,1", "--horizon", "1", "--reps", "2"]),
            2
        );
    }

    #[test]
    fn help_and_version_exit_0() {
        assert_eq!(run_vec(&["ipsdual", "--help"]), 0);
        assert_eq!(run_vec(&["ipsdual", "--version"]), 0);
        assert_eq!(run_vec(&["ipsdual", "classify", "--help"]), 0);
    }

    #[test]
    fn classify_writes_catalog() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("catalog.csv");
        let argv = ["ipsdual", "classify", "--out", out.to_str().unwrap()];
        assert_eq!(run_vec(&argv), 0);
        let first = std::fs::read_to_string(&out).unwrap();
        assert!(first.contains("# command=classify"));
        assert!(first.contains("# mechanisms_with_dual=16"));
        assert!(first.contains("# self_dual=8"));
        let data_rows = first.lines().filter(|l| !l.starts_with('#')).count();
        // Header plus one row per unordered pair: 8 self-dual + 4 mixed.
        assert_eq!(data_rows, 1 + 12);

        assert_eq!(run_vec(&argv), 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), first, "rerun must be byte-identical");
    }

    #[test]
    fn classify_json_parses() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("catalog.json");
        assert_eq!(
            run_vec(&["ipsdual", "classify", "--format", "json", "--out", out.to_str().unwrap()]),
            0
        );
        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), 12);
    }

    #[test]
    fn pathwise_all_hold() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("pathwise.csv");
        let argv = [
            "ipsdual", "pathwise", "--n", "5", "--rates", "1,1,1,1", "--horizon", "1",
            "--reps", "50", "--seed", "7", "--out", out.to_str().unwrap(),
        ];
        assert_eq!(run_vec(&argv), 0);
        let body = std::fs::read_to_string(&out).unwrap();
        assert!(body.ends_with("# holds=50/50\n"));
        assert_eq!(body.lines().filter(|l| l.ends_with(",1")).count(), 50);
    }

    #[test]
    fn exact_dual_small_sweep_passes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("wedge.csv");
        let argv = [
            "ipsdual", "exact-dual", "--n-max", "3", "--rates", "1,0.5,2,1",
            "--t-grid", "0.5,1", "--draws", "5", "--out", out.to_str().unwrap(),
        ];
        assert_eq!(run_vec(&argv), 0);
        let body = std::fs::read_to_string(&out).unwrap();
        // Two sizes, five draws, two times.
        assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count() - 1, 2 * 5 * 2);
    }

    #[test]
    fn prototype_gaps_decrease() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("proto.csv");
        let argv = [
            "ipsdual", "prototype", "--n-list", "40,80", "--out", out.to_str().unwrap(),
        ];
        assert_eq!(run_vec(&argv), 0);
        let body = std::fs::read_to_string(&out).unwrap();
        assert!(body.ends_with("# nonincreasing=1\n"));
    }

    #[test]
    fn sde_moment_emits_report_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("moment.csv");
        let argv = [
            "ipsdual", "sde-dual", "moment", "--reps", "2000", "--dt", "0.01",
            "--out", out.to_str().unwrap(),
        ];
        assert_eq!(run_vec(&argv), 0);
        let body = std::fs::read_to_string(&out).unwrap();
        assert!(body.contains("# kind=moment"));
        assert!(body.contains("lhs,lhs_se,rhs,rhs_se,gap,bias_allowance,tolerance,pass"));

        let sidecar = dir.path().join("moment.json");
        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
        assert_eq!(parsed["pass"], serde_json::json!(true));
        assert_eq!(parsed["metadata"]["seed"], serde_json::json!(DEFAULT_SEED.to_string()));

        // Byte-identical rerun, sidecar included.
        let before = (body, std::fs::read_to_string(&sidecar).unwrap());
        assert_eq!(run_vec(&argv), 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap(), before.0);
        assert_eq!(std::fs::read_to_string(&sidecar).unwrap(), before.1);
    }

    #[test]
    fn scaling_pure_death_passes_and_writes_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("pd.csv");
        let argv = [
            "ipsdual", "scaling", "pure-death", "--n-list", "100,400",
            "--out", out.to_str().unwrap(),
        ];
        assert_eq!(run_vec(&argv), 0);
        let parsed: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("pd.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed["rows"].as_array().unwrap().len(), 2);
        assert_eq!(parsed["params"]["command"], serde_json::json!("scaling-pure-death"));
    }

    #[test]
    fn sidecar_collision_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.json");
        let argv = [
            "ipsdual", "sde-dual", "moment", "--reps", "16", "--dt", "0.1",
            "--out", out.to_str().unwrap(),
        ];
        assert_eq!(run_vec(&argv), 2);
    }

    #[test]
    fn mean_path_matches_pure_birth_growth() {
        // With only birth arrows at rate u/N the count mean grows like the
        // logistic-free bound n·e^{ut} early on, and stays below it.
        let rates = RateSpec::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let grid = [0.0, 0.5, 1.0];
        let means = count_chain_mean_path(300, &rates, 4, &grid).unwrap();
        assert!((means[0] - 4.0).abs() < 1e-12);
        for (i, &t) in grid.iter().enumerate() {
            let bound = 4.0 * t.exp();
            assert!(means[i] <= bound + 1e-9, "mean {} above bound {}", means[i], bound);
        }
        assert!(means[2] > 4.0 * 1.0f64.exp() * 0.9, "mean should track the bound early");
    }
}
