//! Row computation and output rendering for the four commands.
//!
//! Sweep points are computed in a work pool but collected in sweep order,
//! so output rows never depend on scheduling. Floats are rendered with 17
//! significant digits so emitted tables can serve as regression fixtures.

use rayon::prelude::*;

use walsh_logmeans_core::divergence::{
    band_region, envelope_scan, kernel_norm_table, operator_lower_bound, superlevel_measure,
};
use walsh_logmeans_core::logmeans::{apply_mean, kernel_profile};
use walsh_logmeans_core::norms::{log_entropy, lp_norm, weak_l1};
use walsh_logmeans_core::{AxisSubset, DyadicFunction, MeanSpec, Method, YoungFunction};

use crate::builtins;
use crate::config::{ConvergeConfig, DivergeConfig, DivergeWhat, KernelConfig, NormsConfig};
use crate::CliResult;

/// Full-precision float rendering: 17 significant digits, enough to
/// reconstruct the exact f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A finished command output: the body text and its format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommandOutput {
    /// CSV with a column-name first line; a `#` metadata line may be
    /// prepended at emission time.
    Csv(String),
    /// A JSON document; metadata lives inside the object, so no `#` line
    /// is ever prepended.
    Json(String),
}

impl CommandOutput {
    pub fn body(&self) -> &str {
        match self {
            CommandOutput::Csv(s) | CommandOutput::Json(s) => s,
        }
    }
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

/// One row per grid cell: index, kernel sample at that cell, and the
/// multiplier for that coefficient index.
pub fn kernel_rows(cfg: &KernelConfig) -> CliResult<Vec<(u64, f64, f64)>> {
    let profile = kernel_profile(cfg.kind.core_kind(), cfg.n, cfg.k)?;
    Ok((0..1u64 << cfg.k)
        .map(|j| {
            (
                j,
                profile.samples()[j as usize],
                profile.multipliers()[j as usize],
            )
        })
        .collect())
}

pub fn kernel_command(cfg: &KernelConfig) -> CliResult<CommandOutput> {
    let mut body = String::from("index,sample,multiplier\n");
    for (j, sample, multiplier) in kernel_rows(cfg)? {
        body.push_str(&format!(
            "{j},{},{}\n",
            fmt_float(sample),
            fmt_float(multiplier)
        ));
    }
    Ok(CommandOutput::Csv(body))
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

/// One sweep point of the approximation-error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergeRow {
    pub n: u64,
    /// L1 distance between the mean and the function.
    pub l1_error: f64,
    /// Measure of { |mean - f| > 0.1 } (strict).
    pub mes_tenth: f64,
    /// Measure of { |mean - f| > 0.01 } (strict).
    pub mes_hundredth: f64,
}

pub fn converge_rows(cfg: &ConvergeConfig) -> CliResult<Vec<ConvergeRow>> {
    let f = builtins::build_function(&cfg.function, &cfg.k, cfg.seed)?;
    let b = AxisSubset::from_labels(cfg.d, &cfg.b)?;
    cfg.orders
        .par_iter()
        .map(|&n| -> CliResult<ConvergeRow> {
            let spec = MeanSpec::uniform(b, n)?;
            let mean = apply_mean(&f, &spec, Method::Spectral)?;
            let len = mean.len() as f64;
            let mut l1 = 0.0;
            let mut above_tenth = 0usize;
            let mut above_hundredth = 0usize;
            for (m, v) in mean.values().iter().zip(f.values()) {
                let dev = (m - v).abs();
                l1 += dev;
                if dev > 0.1 {
                    above_tenth += 1;
                }
                if dev > 0.01 {
                    above_hundredth += 1;
                }
            }
            Ok(ConvergeRow {
                n,
                l1_error: l1 / len,
                mes_tenth: above_tenth as f64 / len,
                mes_hundredth: above_hundredth as f64 / len,
            })
        })
        .collect()
}

pub fn converge_command(cfg: &ConvergeConfig) -> CliResult<CommandOutput> {
    let mut body = String::from("n,l1_error,mes_0.1,mes_0.01\n");
    for row in converge_rows(cfg)? {
        body.push_str(&format!(
            "{},{},{},{}\n",
            row.n,
            fmt_float(row.l1_error),
            fmt_float(row.mes_tenth),
            fmt_float(row.mes_hundredth)
        ));
    }
    Ok(CommandOutput::Csv(body))
}

// ---------------------------------------------------------------------------
// diverge
// ---------------------------------------------------------------------------

/// One sweep point of the superlevel-measure table: the measure itself and
/// its normalization by the predicted decay n^{|B|-1} / 2^{n(2|B|-1)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Est1Row {
    pub n: u32,
    pub measure: f64,
    pub ratio: f64,
}

pub fn est1_rows(b_count: u32, c: f64, nmax: u32) -> CliResult<Vec<Est1Row>> {
    let b = AxisSubset::all(b_count)?;
    (2..=nmax)
        .into_par_iter()
        .map(|n| -> CliResult<Est1Row> {
            let resolution = vec![2 * n + 2; b_count as usize];
            let measure = superlevel_measure(n, &b, &resolution, c)?;
            let scale = (2.0f64).powi((n * (2 * b_count - 1)) as i32);
            let ratio = measure * scale / (n as f64).powi(b_count as i32 - 1);
            Ok(Est1Row { n, measure, ratio })
        })
        .collect()
}

pub fn diverge_command(cfg: &DivergeConfig) -> CliResult<CommandOutput> {
    match &cfg.what {
        DivergeWhat::KernelGrowth { nmax, k } => {
            let mut body = String::from("n,p,l1,ratio\n");
            for row in kernel_norm_table(*nmax, *k)? {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    row.n,
                    row.p,
                    fmt_float(row.l1),
                    fmt_float(row.ratio)
                ));
            }
            Ok(CommandOutput::Csv(body))
        }
        DivergeWhat::OpBound {
            beta,
            b_count,
            nmax,
        } => {
            let q = YoungFunction::log_power(*beta)?;
            let b = AxisSubset::all(*b_count)?;
            let rows = (2..=*nmax)
                .into_par_iter()
                .map(|n| operator_lower_bound(n, &q, &b))
                .collect::<Result<Vec<_>, _>>()?;
            let mut body = String::from("n,mean_l1,probe_lux,certified,formula\n");
            for row in rows {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.n,
                    fmt_float(row.mean_l1),
                    fmt_float(row.probe_lux),
                    fmt_float(row.certified),
                    fmt_float(row.formula)
                ));
            }
            Ok(CommandOutput::Csv(body))
        }
        DivergeWhat::Est1 { b_count, c, nmax } => {
            let mut body = String::from("n,measure,ratio\n");
            for row in est1_rows(*b_count, *c, *nmax)? {
                body.push_str(&format!(
                    "{},{},{}\n",
                    row.n,
                    fmt_float(row.measure),
                    fmt_float(row.ratio)
                ));
            }
            Ok(CommandOutput::Csv(body))
        }
        DivergeWhat::LemmaGg { n, k, tilde } => {
            let region = band_region(*n, *tilde)?;
            let report = envelope_scan(&region, *k)?;
            let json = serde_json::to_string_pretty(&report)
                .expect("scan reports always serialize");
            Ok(CommandOutput::Json(json + "\n"))
        }
    }
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

/// One sweep point of the ratio audit: worst ratios over the random suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormsRow {
    pub n: u64,
    /// max over the suite of ||mean(f)||_1 / (1 + logEntropy(f, |B|)).
    pub strong_ratio_max: f64,
    /// max over the suite of weakL1(mean(f)) / (1 + logEntropy(f, |B|-1)).
    pub weak_ratio_max: f64,
}

pub fn norms_rows(cfg: &NormsConfig) -> CliResult<Vec<NormsRow>> {
    let b = AxisSubset::from_labels(cfg.d, &cfg.b)?;
    let beta_strong = b.len() as f64;
    let beta_weak = beta_strong - 1.0;
    let suite: Vec<DyadicFunction> = (0..cfg.count)
        .map(|i| builtins::random_step(&cfg.k, cfg.seed, i as u64))
        .collect::<CliResult<_>>()?;
    cfg.orders
        .par_iter()
        .map(|&n| -> CliResult<NormsRow> {
            let spec = MeanSpec::uniform(b, n)?;
            let mut strong_ratio_max = 0.0f64;
            let mut weak_ratio_max = 0.0f64;
            for f in &suite {
                let mean = apply_mean(f, &spec, Method::Spectral)?;
                let strong = lp_norm(&mean, 1.0)? / (1.0 + log_entropy(f, beta_strong)?);
                let weak = weak_l1(&mean) / (1.0 + log_entropy(f, beta_weak)?);
                strong_ratio_max = strong_ratio_max.max(strong);
                weak_ratio_max = weak_ratio_max.max(weak);
            }
            Ok(NormsRow {
                n,
                strong_ratio_max,
                weak_ratio_max,
            })
        })
        .collect()
}

pub fn norms_command(cfg: &NormsConfig) -> CliResult<CommandOutput> {
    let mut body = String::from("n,strong_ratio_max,weak_ratio_max\n");
    for row in norms_rows(cfg)? {
        body.push_str(&format!(
            "{},{},{}\n",
            row.n,
            fmt_float(row.strong_ratio_max),
            fmt_float(row.weak_ratio_max)
        ));
    }
    Ok(CommandOutput::Csv(body))
}
