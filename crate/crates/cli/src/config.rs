//! Experiment configuration: flat `key=value` config files, per-command
//! defaults, flag overrides, validation, and round-trip serialization.
//!
//! Merging order is fixed: defaults, then config-file entries, then
//! command-line flags. Each command's resolved config serializes back to
//! the same flat `key=value` text it parses from, and that round trip is
//! exact — serialized configs are therefore reusable as config files.
//!
//! All value parsing lives here (the flag layer hands raw strings down),
//! so a bad value produces the same message whether it came from a file
//! or a flag, always naming the offending field by its flag spelling.

use std::fmt::Display;
use std::fmt::Write as _;
use std::str::FromStr;

use walsh_logmeans_core::divergence::p_order;
use walsh_logmeans_core::KernelKind;

use crate::{usage, CliResult};

/// Hard cap on total grid cells (log2), mirroring the core allocation
/// limit so configs are rejected before any grid is allocated.
pub const MAX_TOTAL_LOG2: u32 = 26;

// ---------------------------------------------------------------------------
// Flat key=value plumbing
// ---------------------------------------------------------------------------

/// Parses flat `key=value` text: one pair per line, `#` comments and blank
/// lines ignored, whitespace around keys and values trimmed.
pub fn parse_kv_text(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!(
                "config line {}: expected key=value, got {line:?}",
                idx + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_scalar<T: FromStr>(field: &str, value: &str) -> CliResult<T> {
    value.trim().parse::<T>().map_err(|_| {
        usage(format!(
            "{field}: cannot parse {value:?} as {}",
            std::any::type_name::<T>()
        ))
    })
}

/// Comma-separated list; an empty string parses to an empty list.
fn parse_list<T: FromStr>(field: &str, value: &str) -> CliResult<Vec<T>> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|item| parse_scalar(field, item))
        .collect()
}

fn join_list<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Replicates a single value across `d` axes or checks an explicit list.
fn expand_per_axis<T: Copy>(field: &str, list: Vec<T>, d: usize) -> CliResult<Vec<T>> {
    match list.len() {
        n if n == d => Ok(list),
        1 => Ok(vec![list[0]; d]),
        n => Err(usage(format!(
            "{field}: expected 1 or {d} comma-separated values, got {n}"
        ))),
    }
}

fn check_command(expected: &str, value: &str) -> CliResult<()> {
    if value == expected {
        Ok(())
    } else {
        Err(usage(format!(
            "config: command={value} does not match the {expected} subcommand"
        )))
    }
}

fn validate_axis_labels(d: u32, labels: &[u32]) -> CliResult<Vec<u32>> {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(usage(format!("--B: duplicate axis label {}", pair[0])));
        }
    }
    for &axis in &sorted {
        if axis == 0 || axis > d {
            return Err(usage(format!(
                "--B: axis label {axis} outside 1..={d}"
            )));
        }
    }
    Ok(sorted)
}

fn validate_grid(k: &[u32]) -> CliResult<()> {
    let total: u32 = k.iter().sum();
    if total > MAX_TOTAL_LOG2 {
        return Err(usage(format!(
            "--K: total grid of 2^{total} cells exceeds the 2^{MAX_TOTAL_LOG2} cap"
        )));
    }
    Ok(())
}

fn validate_orders(orders: &[u64], k: &[u32]) -> CliResult<()> {
    if orders.is_empty() {
        return Err(usage("--orders: sweep must be nonempty"));
    }
    for &n in orders {
        if n < 2 {
            return Err(usage(format!(
                "--orders: logarithmic means need order >= 2, got {n}"
            )));
        }
        for (i, &ki) in k.iter().enumerate() {
            if n > 1u64 << ki {
                return Err(usage(format!(
                    "--orders: order {n} exceeds the axis-{} grid 2^{ki}; raise --K",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

/// Which 1-d kernel the `kernel` command exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelLetter {
    /// F: the Norlund logarithmic kernel.
    F,
    /// G: the Riesz logarithmic kernel.
    G,
    /// D: the plain Dirichlet kernel.
    D,
}

impl KernelLetter {
    pub fn parse(value: &str) -> CliResult<Self> {
        match value {
            "F" => Ok(Self::F),
            "G" => Ok(Self::G),
            "D" => Ok(Self::D),
            other => Err(usage(format!(
                "--kind: expected F, G, or D, got {other:?}"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::F => "F",
            Self::G => "G",
            Self::D => "D",
        }
    }

    pub fn core_kind(self) -> KernelKind {
        match self {
            Self::F => KernelKind::Norlund,
            Self::G => KernelKind::Riesz,
            Self::D => KernelKind::Dirichlet,
        }
    }
}

/// Resolved `kernel` command configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub kind: KernelLetter,
    pub n: u64,
    pub k: u32,
    pub out: Option<String>,
}

/// Accumulates `kernel` settings from defaults, file, and flags.
#[derive(Debug, Clone, Default)]
pub struct KernelDraft {
    pub kind: Option<String>,
    pub n: Option<u64>,
    pub k: Option<u32>,
    pub out: Option<String>,
}

impl KernelDraft {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "command" => check_command("kernel", value)?,
            "kind" => self.kind = Some(value.to_string()),
            "n" => self.n = Some(parse_scalar("--n", value)?),
            "K" => self.k = Some(parse_scalar("--K", value)?),
            "out" => self.out = Some(value.to_string()),
            other => {
                return Err(usage(format!("kernel: unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> CliResult<()> {
        for (key, value) in parse_kv_text(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn resolve(self) -> CliResult<KernelConfig> {
        let kind = KernelLetter::parse(
            self.kind
                .as_deref()
                .ok_or_else(|| usage("--kind: missing required value (F, G, or D)"))?,
        )?;
        let n = self
            .n
            .ok_or_else(|| usage("--n: missing required value"))?;
        let k = self
            .k
            .ok_or_else(|| usage("--K: missing required value"))?;
        if k > MAX_TOTAL_LOG2 {
            return Err(usage(format!(
                "--K: resolution 2^{k} exceeds the 2^{MAX_TOTAL_LOG2} cap"
            )));
        }
        if kind != KernelLetter::D && n < 2 {
            return Err(usage(format!(
                "--n: logarithmic kernels need order >= 2, got {n}"
            )));
        }
        if n > 1u64 << k {
            return Err(usage(format!(
                "--n: kernel order {n} exceeds the grid 2^{k}; raise --K"
            )));
        }
        Ok(KernelConfig {
            kind,
            n,
            k,
            out: self.out,
        })
    }
}

impl KernelConfig {
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command=kernel");
        let _ = writeln!(s, "kind={}", self.kind.as_str());
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "K={}", self.k);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out={out}");
        }
        s
    }

    pub fn from_kv_text(text: &str) -> CliResult<Self> {
        let mut draft = KernelDraft::default();
        draft.apply_file(text)?;
        draft.resolve()
    }

    /// One-line parameter summary for the `#` header.
    pub fn header_summary(&self) -> String {
        format!("kind={} n={} K={}", self.kind.as_str(), self.n, self.k)
    }
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

/// Input-function choice for the `converge` command.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// Indicator of the dyadic rectangle `prod [0, 2^-e_i)`.
    DyadicRectangle { exps: Vec<u32> },
    /// The Walsh function with the given per-axis Paley indices.
    Walsh { indices: Vec<u64> },
    /// Independent uniform `[-1, 1)` cell values from the seeded generator.
    RandomStep,
    /// The borderline family: value `a` on `[0, 1/a)` along axis 1 (full
    /// range elsewhere), so the L1 norm is exactly 1.
    Borderline { amp: u64 },
    /// A function loaded from the binary grid format.
    File { path: String },
}

impl FunctionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DyadicRectangle { .. } => "dyadic-rectangle",
            Self::Walsh { .. } => "walsh",
            Self::RandomStep => "random-step",
            Self::Borderline { .. } => "borderline",
            Self::File { .. } => "file",
        }
    }
}

/// Resolved `converge` command configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub d: u32,
    pub k: Vec<u32>,
    pub b: Vec<u32>,
    pub orders: Vec<u64>,
    pub function: FunctionSpec,
    pub seed: u64,
    pub out: Option<String>,
}

/// Accumulates `converge` settings from defaults, file, and flags.
#[derive(Debug, Clone, Default)]
pub struct ConvergeDraft {
    pub d: Option<u32>,
    pub k: Option<Vec<u32>>,
    pub b: Option<Vec<u32>>,
    pub orders: Option<Vec<u64>>,
    pub function: Option<String>,
    pub rect_exp: Option<Vec<u32>>,
    pub walsh_index: Option<Vec<u64>>,
    pub amp: Option<u64>,
    pub function_file: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

/// Default geometric order sweep shared by the sweeping commands.
pub const DEFAULT_SWEEP: [u64; 5] = [4, 8, 16, 32, 64];

impl ConvergeDraft {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "command" => check_command("converge", value)?,
            "d" => self.d = Some(parse_scalar("--d", value)?),
            "K" => self.k = Some(parse_list("--K", value)?),
            "B" => self.b = Some(parse_list("--B", value)?),
            "orders" => self.orders = Some(parse_list("--orders", value)?),
            "function" => self.function = Some(value.to_string()),
            "rect-exp" => self.rect_exp = Some(parse_list("--rect-exp", value)?),
            "walsh-index" => {
                self.walsh_index = Some(parse_list("--walsh-index", value)?)
            }
            "amp" => self.amp = Some(parse_scalar("--amp", value)?),
            "function-file" => self.function_file = Some(value.to_string()),
            "seed" => self.seed = Some(parse_scalar("--seed", value)?),
            "out" => self.out = Some(value.to_string()),
            other => {
                return Err(usage(format!("converge: unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> CliResult<()> {
        for (key, value) in parse_kv_text(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn resolve(self) -> CliResult<ConvergeConfig> {
        let d = self.d.unwrap_or(2);
        if d == 0 || d > 12 {
            return Err(usage(format!("--d: dimension must lie in 1..=12, got {d}")));
        }
        let k = expand_per_axis("--K", self.k.unwrap_or_else(|| vec![8]), d as usize)?;
        validate_grid(&k)?;
        let b = validate_axis_labels(d, &self.b.unwrap_or_else(|| vec![1]))?;
        let orders = self
            .orders
            .unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
        validate_orders(&orders, &k)?;
        let seed = self.seed.unwrap_or(42);

        // The function name decides which parameter fields are meaningful;
        // a parameter for a different builtin is rejected as a likely typo.
        let name = match (&self.function, &self.function_file) {
            (Some(name), _) => name.clone(),
            (None, Some(_)) => "file".to_string(),
            (None, None) => "dyadic-rectangle".to_string(),
        };
        let reject_unless = |field: &str, owner: &str, present: bool| -> CliResult<()> {
            if present && name != owner {
                Err(usage(format!(
                    "{field}: only meaningful with --function {owner}, \
                     but the selected function is {name}"
                )))
            } else {
                Ok(())
            }
        };
        reject_unless("--rect-exp", "dyadic-rectangle", self.rect_exp.is_some())?;
        reject_unless("--walsh-index", "walsh", self.walsh_index.is_some())?;
        reject_unless("--amp", "borderline", self.amp.is_some())?;
        reject_unless("--function-file", "file", self.function_file.is_some())?;

        let function = match name.as_str() {
            "dyadic-rectangle" => {
                let exps = match self.rect_exp {
                    Some(exps) => expand_per_axis("--rect-exp", exps, d as usize)?,
                    // Default: the rectangle [0,1/2) x [0,1/4) x ... with each
                    // exponent capped by its axis resolution.
                    None => (1..=d).map(|i| i.min(k[i as usize - 1])).collect(),
                };
                for (i, &e) in exps.iter().enumerate() {
                    if e > k[i] {
                        return Err(usage(format!(
                            "--rect-exp: exponent {e} exceeds the axis-{} resolution {}",
                            i + 1,
                            k[i]
                        )));
                    }
                }
                FunctionSpec::DyadicRectangle { exps }
            }
            "walsh" => {
                let mut indices = self.walsh_index.unwrap_or_else(|| vec![3]);
                if indices.len() > d as usize {
                    return Err(usage(format!(
                        "--walsh-index: got {} indices for {d} axes",
                        indices.len()
                    )));
                }
                indices.resize(d as usize, 0);
                for (i, &j) in indices.iter().enumerate() {
                    if j >= 1u64 << k[i] {
                        return Err(usage(format!(
                            "--walsh-index: index {j} needs axis-{} resolution above 2^{}",
                            i + 1,
                            k[i]
                        )));
                    }
                }
                FunctionSpec::Walsh { indices }
            }
            "random-step" => FunctionSpec::RandomStep,
            "borderline" => {
                let amp = self.amp.unwrap_or(16);
                if amp == 0 || !amp.is_power_of_two() {
                    return Err(usage(format!(
                        "--amp: amplitude must be a power of two so the support is a dyadic cell, got {amp}"
                    )));
                }
                if amp.trailing_zeros() > k[0] {
                    return Err(usage(format!(
                        "--amp: the cell [0,1/{amp}) is below the axis-1 resolution 2^{}",
                        k[0]
                    )));
                }
                FunctionSpec::Borderline { amp }
            }
            "file" => {
                let path = self.function_file.ok_or_else(|| {
                    usage("--function-file: missing path for --function file")
                })?;
                FunctionSpec::File { path }
            }
            other => {
                return Err(usage(format!(
                    "--function: unknown builtin {other:?} (dyadic-rectangle, walsh, random-step, borderline, file)"
                )))
            }
        };

        Ok(ConvergeConfig {
            d,
            k,
            b,
            orders,
            function,
            seed,
            out: self.out,
        })
    }
}

impl ConvergeConfig {
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command=converge");
        let _ = writeln!(s, "d={}", self.d);
        let _ = writeln!(s, "K={}", join_list(&self.k));
        let _ = writeln!(s, "B={}", join_list(&self.b));
        let _ = writeln!(s, "orders={}", join_list(&self.orders));
        let _ = writeln!(s, "function={}", self.function.name());
        match &self.function {
            FunctionSpec::DyadicRectangle { exps } => {
                let _ = writeln!(s, "rect-exp={}", join_list(exps));
            }
            FunctionSpec::Walsh { indices } => {
                let _ = writeln!(s, "walsh-index={}", join_list(indices));
            }
            FunctionSpec::Borderline { amp } => {
                let _ = writeln!(s, "amp={amp}");
            }
            FunctionSpec::File { path } => {
                let _ = writeln!(s, "function-file={path}");
            }
            FunctionSpec::RandomStep => {}
        }
        let _ = writeln!(s, "seed={}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out={out}");
        }
        s
    }

    pub fn from_kv_text(text: &str) -> CliResult<Self> {
        let mut draft = ConvergeDraft::default();
        draft.apply_file(text)?;
        draft.resolve()
    }

    pub fn header_summary(&self) -> String {
        let mut s = format!(
            "d={} K={} B={} orders={} function={}",
            self.d,
            join_list(&self.k),
            join_list(&self.b),
            join_list(&self.orders),
            self.function.name()
        );
        match &self.function {
            FunctionSpec::DyadicRectangle { exps } => {
                let _ = write!(s, " rect-exp={}", join_list(exps));
            }
            FunctionSpec::Walsh { indices } => {
                let _ = write!(s, " walsh-index={}", join_list(indices));
            }
            FunctionSpec::Borderline { amp } => {
                let _ = write!(s, " amp={amp}");
            }
            FunctionSpec::File { path } => {
                let _ = write!(s, " function-file={path}");
            }
            FunctionSpec::RandomStep => {}
        }
        let _ = write!(s, " seed={}", self.seed);
        s
    }
}

// ---------------------------------------------------------------------------
// diverge
// ---------------------------------------------------------------------------

/// Resolved sub-experiment of the `diverge` command.
#[derive(Debug, Clone, PartialEq)]
pub enum DivergeWhat {
    /// L1-norm growth of the Norlund kernel along the counterexample orders.
    KernelGrowth { nmax: u32, k: u32 },
    /// Certified operator lower bounds on the Orlicz ball.
    OpBound { beta: f64, b_count: u32, nmax: u32 },
    /// Superlevel-set measure of the mean of the Dirichlet probe.
    Est1 { b_count: u32, c: f64, nmax: u32 },
    /// Band envelope scan (JSON report).
    LemmaGg { n: u32, k: u32, tilde: Option<i64> },
}

/// Resolved `diverge` command configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergeConfig {
    pub what: DivergeWhat,
    pub out: Option<String>,
}

/// Accumulates `diverge` settings from defaults, file, and flags.
#[derive(Debug, Clone, Default)]
pub struct DivergeDraft {
    pub what: Option<String>,
    pub nmax: Option<u32>,
    pub k: Option<u32>,
    pub beta: Option<f64>,
    pub b_count: Option<u32>,
    pub c: Option<f64>,
    pub n: Option<u32>,
    pub tilde: Option<i64>,
    pub out: Option<String>,
}

impl DivergeDraft {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "command" => check_command("diverge", value)?,
            "what" => self.what = Some(value.to_string()),
            "nmax" => self.nmax = Some(parse_scalar("--nmax", value)?),
            "K" => self.k = Some(parse_scalar("--K", value)?),
            "beta" => self.beta = Some(parse_scalar("--beta", value)?),
            "B" => self.b_count = Some(parse_scalar("--B", value)?),
            "c" => self.c = Some(parse_scalar("--c", value)?),
            "n" => self.n = Some(parse_scalar("--n", value)?),
            "tilde" => self.tilde = Some(parse_scalar("--tilde", value)?),
            "out" => self.out = Some(value.to_string()),
            other => {
                return Err(usage(format!("diverge: unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> CliResult<()> {
        for (key, value) in parse_kv_text(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn resolve(self) -> CliResult<DivergeConfig> {
        let what = self.what.as_deref().ok_or_else(|| {
            usage("--what: missing required value (kernel-growth, op-bound, est1, lemma-gg)")
        })?;

        // Parameters belonging to a different sub-experiment are rejected
        // as likely typos rather than silently ignored.
        let reject_unless = |field: &str, active: bool, present: bool| -> CliResult<()> {
            if present && !active {
                Err(usage(format!(
                    "{field}: not a parameter of --what {what}"
                )))
            } else {
                Ok(())
            }
        };
        let is = |name: &str| what == name;
        reject_unless(
            "--nmax",
            is("kernel-growth") || is("op-bound") || is("est1"),
            self.nmax.is_some(),
        )?;
        reject_unless("--K", is("kernel-growth") || is("lemma-gg"), self.k.is_some())?;
        reject_unless("--beta", is("op-bound"), self.beta.is_some())?;
        reject_unless("--B", is("op-bound") || is("est1"), self.b_count.is_some())?;
        reject_unless("--c", is("est1"), self.c.is_some())?;
        reject_unless("--n", is("lemma-gg"), self.n.is_some())?;
        reject_unless("--tilde", is("lemma-gg"), self.tilde.is_some())?;

        let what = match what {
            "kernel-growth" => {
                let nmax = self.nmax.unwrap_or(6);
                if !(2..=12).contains(&nmax) {
                    return Err(usage(format!(
                        "--nmax: need 2 <= nmax <= 12 so the order-p kernel fits the grid cap, got {nmax}"
                    )));
                }
                let k = self.k.unwrap_or(2 * nmax + 2);
                let p = p_order(nmax).map_err(|e| usage(format!("--nmax: {e}")))?;
                if k > MAX_TOTAL_LOG2 || p > 1u64 << k {
                    return Err(usage(format!(
                        "--K: the order-{p} kernel needs 2^K >= {p} with K <= {MAX_TOTAL_LOG2}, got K={k}"
                    )));
                }
                DivergeWhat::KernelGrowth { nmax, k }
            }
            "op-bound" => {
                let beta = self.beta.unwrap_or(1.0);
                if !beta.is_finite() || beta < 0.0 {
                    return Err(usage(format!(
                        "--beta: exponent must be finite and >= 0, got {beta}"
                    )));
                }
                let b_count = self.b_count.unwrap_or(1);
                if !(1..=12).contains(&b_count) {
                    return Err(usage(format!(
                        "--B: axis count must lie in 1..=12, got {b_count}"
                    )));
                }
                let nmax = self.nmax.unwrap_or(6);
                if !(2..=12).contains(&nmax) {
                    return Err(usage(format!(
                        "--nmax: need 2 <= nmax <= 12 so the 1-d kernels fit the grid cap, got {nmax}"
                    )));
                }
                DivergeWhat::OpBound { beta, b_count, nmax }
            }
            "est1" => {
                let b_count = self.b_count.unwrap_or(2);
                if !(1..=12).contains(&b_count) {
                    return Err(usage(format!(
                        "--B: axis count must lie in 1..=12, got {b_count}"
                    )));
                }
                let c = self.c.unwrap_or(0.25);
                if !c.is_finite() || c <= 0.0 {
                    return Err(usage(format!(
                        "--c: threshold scale must be finite and > 0, got {c}"
                    )));
                }
                let nmax = self.nmax.unwrap_or(4);
                if nmax < 2 {
                    return Err(usage(format!("--nmax: need nmax >= 2, got {nmax}")));
                }
                let total = (2 * nmax + 2) * b_count;
                if total > MAX_TOTAL_LOG2 {
                    return Err(usage(format!(
                        "--nmax: the order-{nmax} superlevel grid needs 2^{total} cells, above the 2^{MAX_TOTAL_LOG2} cap"
                    )));
                }
                DivergeWhat::Est1 { b_count, c, nmax }
            }
            "lemma-gg" => {
                let n = self.n.unwrap_or(2);
                if !(1..=12).contains(&n) {
                    return Err(usage(format!(
                        "--n: need 1 <= n <= 12 so the order-p kernel fits the grid cap, got {n}"
                    )));
                }
                let k = self.k.unwrap_or(2 * n + 2);
                let p = p_order(n).map_err(|e| usage(format!("--n: {e}")))?;
                if k > MAX_TOTAL_LOG2 || p > 1u64 << k {
                    return Err(usage(format!(
                        "--K: the order-{p} kernel needs 2^K >= {p} with K <= {MAX_TOTAL_LOG2}, got K={k}"
                    )));
                }
                if let Some(t) = self.tilde {
                    if t < 1 {
                        return Err(usage(format!(
                            "--tilde: band offset override must be >= 1, got {t}"
                        )));
                    }
                }
                DivergeWhat::LemmaGg {
                    n,
                    k,
                    tilde: self.tilde,
                }
            }
            other => {
                return Err(usage(format!(
                    "--what: expected kernel-growth, op-bound, est1, or lemma-gg, got {other:?}"
                )))
            }
        };
        Ok(DivergeConfig {
            what,
            out: self.out,
        })
    }
}

impl DivergeConfig {
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command=diverge");
        match &self.what {
            DivergeWhat::KernelGrowth { nmax, k } => {
                let _ = writeln!(s, "what=kernel-growth");
                let _ = writeln!(s, "nmax={nmax}");
                let _ = writeln!(s, "K={k}");
            }
            DivergeWhat::OpBound { beta, b_count, nmax } => {
                let _ = writeln!(s, "what=op-bound");
                let _ = writeln!(s, "beta={beta}");
                let _ = writeln!(s, "B={b_count}");
                let _ = writeln!(s, "nmax={nmax}");
            }
            DivergeWhat::Est1 { b_count, c, nmax } => {
                let _ = writeln!(s, "what=est1");
                let _ = writeln!(s, "B={b_count}");
                let _ = writeln!(s, "c={c}");
                let _ = writeln!(s, "nmax={nmax}");
            }
            DivergeWhat::LemmaGg { n, k, tilde } => {
                let _ = writeln!(s, "what=lemma-gg");
                let _ = writeln!(s, "n={n}");
                let _ = writeln!(s, "K={k}");
                if let Some(t) = tilde {
                    let _ = writeln!(s, "tilde={t}");
                }
            }
        }
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out={out}");
        }
        s
    }

    pub fn from_kv_text(text: &str) -> CliResult<Self> {
        let mut draft = DivergeDraft::default();
        draft.apply_file(text)?;
        draft.resolve()
    }

    pub fn header_summary(&self) -> String {
        match &self.what {
            DivergeWhat::KernelGrowth { nmax, k } => {
                format!("what=kernel-growth nmax={nmax} K={k}")
            }
            DivergeWhat::OpBound { beta, b_count, nmax } => {
                format!("what=op-bound beta={beta} B={b_count} nmax={nmax}")
            }
            DivergeWhat::Est1 { b_count, c, nmax } => {
                format!("what=est1 B={b_count} c={c} nmax={nmax}")
            }
            DivergeWhat::LemmaGg { n, k, tilde } => match tilde {
                Some(t) => format!("what=lemma-gg n={n} K={k} tilde={t}"),
                None => format!("what=lemma-gg n={n} K={k}"),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

/// Resolved `norms` command configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NormsConfig {
    pub d: u32,
    pub k: Vec<u32>,
    pub b: Vec<u32>,
    pub orders: Vec<u64>,
    pub count: u32,
    pub seed: u64,
    pub out: Option<String>,
}

/// Accumulates `norms` settings from defaults, file, and flags.
#[derive(Debug, Clone, Default)]
pub struct NormsDraft {
    pub d: Option<u32>,
    pub k: Option<Vec<u32>>,
    pub b: Option<Vec<u32>>,
    pub orders: Option<Vec<u64>>,
    pub count: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

impl NormsDraft {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "command" => check_command("norms", value)?,
            "d" => self.d = Some(parse_scalar("--d", value)?),
            "K" => self.k = Some(parse_list("--K", value)?),
            "B" => self.b = Some(parse_list("--B", value)?),
            "orders" => self.orders = Some(parse_list("--orders", value)?),
            "count" => self.count = Some(parse_scalar("--count", value)?),
            "seed" => self.seed = Some(parse_scalar("--seed", value)?),
            "out" => self.out = Some(value.to_string()),
            other => {
                return Err(usage(format!("norms: unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> CliResult<()> {
        for (key, value) in parse_kv_text(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn resolve(self) -> CliResult<NormsConfig> {
        let d = self.d.unwrap_or(2);
        if d == 0 || d > 12 {
            return Err(usage(format!("--d: dimension must lie in 1..=12, got {d}")));
        }
        let k = expand_per_axis("--K", self.k.unwrap_or_else(|| vec![6]), d as usize)?;
        validate_grid(&k)?;
        let b = validate_axis_labels(d, &self.b.unwrap_or_else(|| vec![1]))?;
        if b.is_empty() {
            return Err(usage(
                "--B: the ratio audit needs at least one designated axis",
            ));
        }
        let orders = self
            .orders
            .unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
        validate_orders(&orders, &k)?;
        let count = self.count.unwrap_or(100);
        if count == 0 {
            return Err(usage("--count: need at least one sample function"));
        }
        Ok(NormsConfig {
            d,
            k,
            b,
            orders,
            count,
            seed: self.seed.unwrap_or(42),
            out: self.out,
        })
    }
}

impl NormsConfig {
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command=norms");
        let _ = writeln!(s, "d={}", self.d);
        let _ = writeln!(s, "K={}", join_list(&self.k));
        let _ = writeln!(s, "B={}", join_list(&self.b));
        let _ = writeln!(s, "orders={}", join_list(&self.orders));
        let _ = writeln!(s, "count={}", self.count);
        let _ = writeln!(s, "seed={}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out={out}");
        }
        s
    }

    pub fn from_kv_text(text: &str) -> CliResult<Self> {
        let mut draft = NormsDraft::default();
        draft.apply_file(text)?;
        draft.resolve()
    }

    pub fn header_summary(&self) -> String {
        format!(
            "d={} K={} B={} orders={} count={} seed={}",
            self.d,
            join_list(&self.k),
            join_list(&self.b),
            join_list(&self.orders),
            self.count,
            self.seed
        )
    }
}
