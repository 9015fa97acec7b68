//! `walsh-logmeans` — experiment front end.
//!
//! Exit codes: 0 on success, 2 on usage/config errors, 1 on
//! numeric/resource errors surfaced by the computation.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use walsh_logmeans_cli::config::{
    ConvergeDraft, DivergeDraft, KernelDraft, NormsDraft,
};
use walsh_logmeans_cli::run::{
    converge_command, diverge_command, kernel_command, norms_command, CommandOutput,
};
use walsh_logmeans_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "walsh-logmeans",
    version,
    about = "Numerical laboratory for logarithmic summability means of Walsh-Fourier series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export a 1-d kernel profile (grid samples and multipliers) as CSV.
    Kernel(KernelArgs),
    /// Sweep approximation errors of the mixed mean over a test function.
    Converge(ConvergeArgs),
    /// Divergence diagnostics: kernel-norm growth, operator lower bounds,
    /// superlevel measures, and band envelope scans.
    Diverge(DivergeArgs),
    /// Audit strong/weak norm ratios of the mean against entropy
    /// functionals over a seeded random suite.
    Norms(NormsArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Flat key=value config file; command-line flags override its entries.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output to this path instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Suppress the timestamped `#` header line (byte-exact CSV bodies).
    #[arg(long)]
    quiet_header: bool,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel kind: F (Norlund logarithmic), G (Riesz logarithmic), or
    /// D (Dirichlet).
    #[arg(long, value_name = "F|G|D")]
    kind: Option<String>,
    /// Kernel order.
    #[arg(long, value_name = "ORDER")]
    n: Option<String>,
    /// Grid resolution exponent: the profile is sampled on 2^K cells.
    #[arg(long = "K", value_name = "EXP")]
    k: Option<String>,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Dimension count (default 2).
    #[arg(long, value_name = "D")]
    d: Option<String>,
    /// Per-axis resolution exponents, comma-separated; one value is
    /// replicated to every axis (default 8).
    #[arg(long = "K", value_name = "K1,K2,...")]
    k: Option<String>,
    /// Axes receiving the Norlund mean (1-based, comma-separated); the
    /// rest get the Riesz mean (default 1).
    #[arg(long = "B", value_name = "AXES")]
    b: Option<String>,
    /// Order sweep, comma-separated (default 4,8,16,32,64).
    #[arg(long, value_name = "N1,N2,...")]
    orders: Option<String>,
    /// Test function: dyadic-rectangle, walsh, random-step, borderline,
    /// or file (default dyadic-rectangle).
    #[arg(long, value_name = "NAME")]
    function: Option<String>,
    /// Rectangle exponents: the indicator of prod [0, 2^-e_i)
    /// (default 1,2,...).
    #[arg(long, value_name = "E1,E2,...")]
    rect_exp: Option<String>,
    /// Per-axis Paley indices of the Walsh test function (default 3).
    #[arg(long, value_name = "J1,J2,...")]
    walsh_index: Option<String>,
    /// Borderline amplitude: value a on [0, 1/a) along axis 1, unit mass
    /// (power of two, default 16).
    #[arg(long, value_name = "A")]
    amp: Option<String>,
    /// Load the test function from this binary grid file.
    #[arg(long, value_name = "PATH")]
    function_file: Option<String>,
    /// Seed for the random-step function (default 42).
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct DivergeArgs {
    /// Sub-experiment: kernel-growth, op-bound, est1, or lemma-gg.
    #[arg(long, value_name = "NAME")]
    what: Option<String>,
    /// Largest sweep order (kernel-growth/op-bound default 6, est1
    /// default 4).
    #[arg(long, value_name = "N")]
    nmax: Option<String>,
    /// Resolution exponent for kernel-growth and lemma-gg (default
    /// derived from the order).
    #[arg(long = "K", value_name = "EXP")]
    k: Option<String>,
    /// Young-function exponent for op-bound: Q(u) = u log^beta(1+u)
    /// (default 1).
    #[arg(long, value_name = "BETA")]
    beta: Option<String>,
    /// Designated-axis count |B| for op-bound and est1.
    #[arg(long = "B", value_name = "COUNT")]
    b: Option<String>,
    /// Threshold scale for est1 (default 0.25).
    #[arg(long, value_name = "C")]
    c: Option<String>,
    /// Band-region order for lemma-gg (default 2).
    #[arg(long, value_name = "N")]
    n: Option<String>,
    /// Band-offset override for lemma-gg (>= 1); omit for the faithful
    /// offsets, which flag every band empty at desk scale.
    #[arg(long, value_name = "T")]
    tilde: Option<String>,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct NormsArgs {
    /// Dimension count (default 2).
    #[arg(long, value_name = "D")]
    d: Option<String>,
    /// Per-axis resolution exponents, comma-separated; one value is
    /// replicated to every axis (default 6).
    #[arg(long = "K", value_name = "K1,K2,...")]
    k: Option<String>,
    /// Axes receiving the Norlund mean (default 1); must be nonempty.
    #[arg(long = "B", value_name = "AXES")]
    b: Option<String>,
    /// Order sweep, comma-separated (default 4,8,16,32,64).
    #[arg(long, value_name = "N1,N2,...")]
    orders: Option<String>,
    /// Number of random suite functions (default 100).
    #[arg(long, value_name = "COUNT")]
    count: Option<String>,
    /// Suite seed (default 42).
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,
    #[command(flatten)]
    shared: SharedArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kernel(args) => run_kernel(args),
        Command::Converge(args) => run_converge(args),
        Command::Diverge(args) => run_diverge(args),
        Command::Norms(args) => run_norms(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn read_config_file(shared: &SharedArgs) -> CliResult<Option<String>> {
    match &shared.config {
        Some(path) => std::fs::read_to_string(path).map(Some).map_err(|e| {
            CliError::Usage(format!("--config: cannot read {}: {e}", path.display()))
        }),
        None => Ok(None),
    }
}

/// Applies the present flags (key, value) in order after the config file,
/// so flags override file entries.
fn apply_flags(
    mut set: impl FnMut(&str, &str) -> CliResult<()>,
    flags: &[(&str, &Option<String>)],
) -> CliResult<()> {
    for (key, value) in flags {
        if let Some(v) = value {
            set(key, v)?;
        }
    }
    Ok(())
}

fn run_kernel(args: KernelArgs) -> CliResult<()> {
    let mut draft = KernelDraft::default();
    if let Some(text) = read_config_file(&args.shared)? {
        draft.apply_file(&text)?;
    }
    apply_flags(
        |k, v| draft.set(k, v),
        &[("kind", &args.kind), ("n", &args.n), ("K", &args.k)],
    )?;
    let cfg = draft.resolve()?;
    let output = kernel_command(&cfg)?;
    emit(&args.shared, cfg.out.as_deref(), "kernel", &cfg.header_summary(), output)
}

fn run_converge(args: ConvergeArgs) -> CliResult<()> {
    let mut draft = ConvergeDraft::default();
    if let Some(text) = read_config_file(&args.shared)? {
        draft.apply_file(&text)?;
    }
    apply_flags(
        |k, v| draft.set(k, v),
        &[
            ("d", &args.d),
            ("K", &args.k),
            ("B", &args.b),
            ("orders", &args.orders),
            ("function", &args.function),
            ("rect-exp", &args.rect_exp),
            ("walsh-index", &args.walsh_index),
            ("amp", &args.amp),
            ("function-file", &args.function_file),
            ("seed", &args.seed),
        ],
    )?;
    let cfg = draft.resolve()?;
    let output = converge_command(&cfg)?;
    emit(&args.shared, cfg.out.as_deref(), "converge", &cfg.header_summary(), output)
}

fn run_diverge(args: DivergeArgs) -> CliResult<()> {
    let mut draft = DivergeDraft::default();
    if let Some(text) = read_config_file(&args.shared)? {
        draft.apply_file(&text)?;
    }
    apply_flags(
        |k, v| draft.set(k, v),
        &[
            ("what", &args.what),
            ("nmax", &args.nmax),
            ("K", &args.k),
            ("beta", &args.beta),
            ("B", &args.b),
            ("c", &args.c),
            ("n", &args.n),
            ("tilde", &args.tilde),
        ],
    )?;
    let cfg = draft.resolve()?;
    let output = diverge_command(&cfg)?;
    emit(&args.shared, cfg.out.as_deref(), "diverge", &cfg.header_summary(), output)
}

fn run_norms(args: NormsArgs) -> CliResult<()> {
    let mut draft = NormsDraft::default();
    if let Some(text) = read_config_file(&args.shared)? {
        draft.apply_file(&text)?;
    }
    apply_flags(
        |k, v| draft.set(k, v),
        &[
            ("d", &args.d),
            ("K", &args.k),
            ("B", &args.b),
            ("orders", &args.orders),
            ("count", &args.count),
            ("seed", &args.seed),
        ],
    )?;
    let cfg = draft.resolve()?;
    let output = norms_command(&cfg)?;
    emit(&args.shared, cfg.out.as_deref(), "norms", &cfg.header_summary(), output)
}

/// Writes the finished output to `--out` (flag beats config entry, which
/// beats stdout). CSV gets a timestamped `#` metadata line unless
/// `--quiet-header` is set; JSON documents carry their metadata in-band
/// and never get one.
fn emit(
    shared: &SharedArgs,
    cfg_out: Option<&str>,
    command: &str,
    summary: &str,
    output: CommandOutput,
) -> CliResult<()> {
    let mut text = String::new();
    if !shared.quiet_header && matches!(output, CommandOutput::Csv(_)) {
        let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        text.push_str(&format!("# walsh-logmeans {command} | {now} | {summary}\n"));
    }
    text.push_str(output.body());
    let path = shared
        .out
        .clone()
        .or_else(|| cfg_out.map(PathBuf::from));
    match path {
        Some(p) => std::fs::write(&p, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
