//! Logarithmic summability means of Walsh-Fourier series: the Norlund mean
//! L_n, the Riesz mean R_n, their kernels F_n and G_n, and the mixed
//! per-axis mean that applies L on a chosen axis subset and R on the rest.
//!
//! With l_n = sum_{k=1}^{n-1} 1/k, the 1-d means of a series with partial
//! sums S_m are
//!
//! ```text
//! L_n f = (1/l_n) sum_{m=1}^{n-1} S_m f / (n-m)
//! R_n f = (1/l_n) sum_{m=1}^{n-1} S_m f / m
//! ```
//!
//! i.e. convolutions with the kernels F_n = (1/l_n) sum D_{n-i}/i and
//! G_n = (1/l_n) sum D_i/i. Since w_k enters D_m exactly when k < m, both
//! kernels act diagonally on Walsh coefficients with the closed-form
//! multipliers
//!
//! ```text
//! F_hat_n(0) = 1,  F_hat_n(k) = l_{n-k}/l_n          (1 <= k <= n-2),  else 0
//! G_hat_n(0) = 1,  G_hat_n(k) = (l_n - l_{k+1})/l_n  (same range)
//! ```
//!
//! These formulas are validated against direct Dirichlet summation by
//! [`kernel_samples_by_summation`] and the test suite before anything else
//! relies on them. Multi-axis means are tensor products of the 1-d
//! operators, so they factor into sequential per-axis passes exactly.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;

use crate::dyadic::{dirichlet_index, AxisSubset};
use crate::transform::{analyze, fwht, synthesize, Direction, DyadicFunction};
use crate::{Error, Result};

/// Largest n for which harmonic sums are formed term by term; beyond this
/// the Euler-Maclaurin expansion is used (its truncation error is far below
/// f64 resolution there).
const HARMONIC_DIRECT_LIMIT: u64 = 1 << 22;

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// l_n = sum_{k=1}^{n-1} 1/k, the normalizer of both logarithmic means.
/// l_1 is the empty sum. Exact summation (with compensation) for small n,
/// Euler-Maclaurin beyond; accurate to full f64 precision either way.
pub fn harmonic_sum(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("harmonic sum l_n needs n >= 1".into()));
    }
    Ok(harmonic_value(n))
}

fn harmonic_value(n: u64) -> f64 {
    let m = n - 1;
    if m == 0 {
        return 0.0;
    }
    if m <= HARMONIC_DIRECT_LIMIT {
        // Kahan summation, smallest terms first.
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for k in (1..=m).rev() {
            let term = 1.0 / k as f64 - carry;
            let next = sum + term;
            carry = (next - sum) - term;
            sum = next;
        }
        sum
    } else {
        harmonic_asymptotic(m)
    }
}

/// H_m by Euler-Maclaurin; used for m beyond direct-summation range and
/// exposed to the divergence module for orders too large to materialize.
pub(crate) fn harmonic_asymptotic(m: u64) -> f64 {
    let x = m as f64;
    x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
        + 1.0 / (120.0 * x.powi(4))
        - 1.0 / (252.0 * x.powi(6))
}

/// Table of l_0..l_max (entry 0 unused, kept 0 so indices read naturally).
fn harmonic_table(max: u64) -> Vec<f64> {
    let mut table = vec![0.0f64; (max + 1) as usize];
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for (n, slot) in table.iter_mut().enumerate().skip(2) {
        let term = 1.0 / (n - 1) as f64 - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
        *slot = sum;
    }
    table
}

/// The three kernel families handled by [`kernel_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// D_n, the plain Dirichlet kernel (multiplier 1 below n).
    Dirichlet,
    /// F_n, the Norlund logarithmic kernel.
    Norlund,
    /// G_n, the Riesz logarithmic kernel.
    Riesz,
}

impl KernelKind {
    fn requires_order_two(self) -> bool {
        !matches!(self, KernelKind::Dirichlet)
    }
}

/// Spectral multipliers of F_n on indices 0..len. Supports n far beyond
/// len (harmonic values switch to the asymptotic branch as needed).
pub fn norlund_multipliers(n: u64, len: usize) -> Result<Vec<f64>> {
    multipliers(KernelKind::Norlund, n, len)
}

/// Spectral multipliers of G_n on indices 0..len.
pub fn riesz_multipliers(n: u64, len: usize) -> Result<Vec<f64>> {
    multipliers(KernelKind::Riesz, n, len)
}

fn multipliers(kind: KernelKind, n: u64, len: usize) -> Result<Vec<f64>> {
    if kind.requires_order_two() && n < 2 {
        return Err(Error::Domain(format!(
            "logarithmic means need order >= 2 (l_1 = 0), got {n}"
        )));
    }
    let mut out = vec![0.0f64; len];
    if len == 0 {
        return Ok(out);
    }
    out[0] = 1.0;
    match kind {
        KernelKind::Dirichlet => {
            let filled = len.min(usize::try_from(n).unwrap_or(usize::MAX));
            out[..filled].fill(1.0);
            if n == 0 {
                out[0] = 0.0;
            }
        }
        KernelKind::Norlund | KernelKind::Riesz => {
            let l_n = harmonic_value(n);
            // k ranges over 1..=n-2 (higher multipliers vanish).
            let top = if n >= 2 { (n - 2).min(len as u64 - 1) } else { 0 };
            let table = if n <= HARMONIC_DIRECT_LIMIT {
                Some(harmonic_table(n))
            } else {
                None
            };
            let l = |arg: u64| -> f64 {
                match &table {
                    Some(t) if (arg as usize) < t.len() => t[arg as usize],
                    _ => harmonic_value(arg),
                }
            };
            for k in 1..=top {
                out[k as usize] = match kind {
                    KernelKind::Norlund => l(n - k) / l_n,
                    KernelKind::Riesz => (l_n - l(k + 1)) / l_n,
                    KernelKind::Dirichlet => unreachable!(),
                };
            }
        }
    }
    Ok(out)
}

/// A 1-d kernel held both as grid samples and as its Walsh multipliers.
/// Samples are the exact synthesis of the multipliers; the independent
/// direct-summation evaluation lives in [`kernel_samples_by_summation`]
/// and the test suite keeps the two in agreement.
#[derive(Debug, Clone)]
pub struct KernelProfile {
    kind: KernelKind,
    order: u64,
    resolution: u32,
    samples: Vec<f64>,
    multipliers: Vec<f64>,
}

impl KernelProfile {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// The samples as a 1-d grid function.
    pub fn as_function(&self) -> DyadicFunction {
        DyadicFunction::new(vec![self.resolution], self.samples.clone())
            .expect("profile dimensions are valid by construction")
    }
}

type KernelCache = HashMap<(KernelKind, u64, u32), Arc<KernelProfile>>;

static KERNEL_CACHE: Lazy<RwLock<KernelCache>> = Lazy::new(|| RwLock::new(HashMap::new()));

/// Builds (or fetches from the process-wide cache) the kernel of the given
/// kind and order at resolution 2^k. Orders must fit the resolution: the
/// kernel of order n is a Walsh polynomial of degree < n, so n <= 2^k keeps
/// every computation on the grid exact.
pub fn kernel_profile(kind: KernelKind, n: u64, k: u32) -> Result<Arc<KernelProfile>> {
    if kind.requires_order_two() && n < 2 {
        return Err(Error::Domain(format!(
            "logarithmic means need order >= 2 (l_1 = 0), got {n}"
        )));
    }
    if k > 26 {
        return Err(Error::ResolutionExceeded(format!(
            "1-d kernel resolution 2^{k} exceeds the allocation cap"
        )));
    }
    if n > (1u64 << k) {
        return Err(Error::ResolutionExceeded(format!(
            "kernel order {n} exceeds resolution 2^{k}"
        )));
    }
    if let Some(hit) = KERNEL_CACHE.read().expect("kernel cache poisoned").get(&(kind, n, k)) {
        return Ok(Arc::clone(hit));
    }
    let mult = multipliers(kind, n, 1usize << k)?;
    let samples = fwht(&mult, Direction::Synthesize)?;
    let profile = Arc::new(KernelProfile {
        kind,
        order: n,
        resolution: k,
        samples,
        multipliers: mult,
    });
    let mut cache = KERNEL_CACHE.write().expect("kernel cache poisoned");
    Ok(Arc::clone(cache.entry((kind, n, k)).or_insert(profile)))
}

/// F_n at resolution 2^k (samples + multipliers).
pub fn kernel_f(n: u64, k: u32) -> Result<Arc<KernelProfile>> {
    kernel_profile(KernelKind::Norlund, n, k)
}

/// G_n at resolution 2^k (samples + multipliers).
pub fn kernel_g(n: u64, k: u32) -> Result<Arc<KernelProfile>> {
    kernel_profile(KernelKind::Riesz, n, k)
}

/// Direct-summation oracle for kernel samples: accumulates the defining sum
/// of weighted Dirichlet kernels point by point, never touching the
/// multiplier formulas. O(2^k * n); meant for validation, not production.
pub fn kernel_samples_by_summation(kind: KernelKind, n: u64, k: u32) -> Result<Vec<f64>> {
    if kind.requires_order_two() && n < 2 {
        return Err(Error::Domain(format!("order >= 2 required, got {n}")));
    }
    if n > (1u64 << k) {
        return Err(Error::ResolutionExceeded(format!(
            "kernel order {n} exceeds resolution 2^{k}"
        )));
    }
    let len = 1usize << k;
    let mut out = vec![0.0f64; len];
    match kind {
        KernelKind::Dirichlet => {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = dirichlet_index(n, j, k);
            }
        }
        KernelKind::Norlund | KernelKind::Riesz => {
            let l_n = harmonic_value(n);
            for (j, slot) in out.iter_mut().enumerate() {
                // Incremental D_m(x) as m grows, m = 1..n-1.
                let mut d = 0.0f64;
                let mut acc = 0.0f64;
                for m in 1..n {
                    d += crate::dyadic::walsh_index(m - 1, j, k);
                    let weight = match kind {
                        KernelKind::Norlund => 1.0 / (n - m) as f64,
                        KernelKind::Riesz => 1.0 / m as f64,
                        KernelKind::Dirichlet => unreachable!(),
                    };
                    acc += d * weight;
                }
                *slot = acc / l_n;
            }
        }
    }
    Ok(out)
}

/// Per-axis summability assignment: every axis gets a mean of its own
/// order; axes in `b` get the Norlund treatment, the rest Riesz.
/// `b = all` is the pure Norlund mean, `b = empty` the pure Riesz mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeanSpec {
    b: AxisSubset,
    orders: Vec<u64>,
}

impl MeanSpec {
    pub fn new(b: AxisSubset, orders: Vec<u64>) -> Result<Self> {
        if orders.len() != b.dims() as usize {
            return Err(Error::Shape(format!(
                "got {} orders for dimension {}",
                orders.len(),
                b.dims()
            )));
        }
        for (axis, &n) in orders.iter().enumerate() {
            if n < 2 {
                return Err(Error::Domain(format!(
                    "mean order on axis {} must be >= 2 (l_1 = 0), got {n}",
                    axis + 1
                )));
            }
        }
        Ok(Self { b, orders })
    }

    /// Same order on every axis.
    pub fn uniform(b: AxisSubset, n: u64) -> Result<Self> {
        let d = b.dims() as usize;
        Self::new(b, vec![n; d])
    }

    pub fn dims(&self) -> usize {
        self.orders.len()
    }

    pub fn norlund_axes(&self) -> &AxisSubset {
        &self.b
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    /// Which kernel family acts on a 1-based axis.
    pub fn kind_for_axis(&self, axis: u32) -> KernelKind {
        if self.b.contains(axis) {
            KernelKind::Norlund
        } else {
            KernelKind::Riesz
        }
    }

    fn validate_against(&self, f: &DyadicFunction) -> Result<()> {
        if f.dims() != self.dims() {
            return Err(Error::ResolutionMismatch(format!(
                "mean is {}-dimensional, function is {}-dimensional",
                self.dims(),
                f.dims()
            )));
        }
        for (axis, (&n, &k)) in self.orders.iter().zip(f.resolution()).enumerate() {
            if n > (1u64 << k) {
                return Err(Error::ResolutionExceeded(format!(
                    "order {} on axis {} exceeds resolution 2^{}",
                    n,
                    axis + 1,
                    k
                )));
            }
        }
        Ok(())
    }
}

/// Evaluation strategy for [`apply_mean`]. The two must agree; `Direct`
/// materializes the defining weighted sum of rectangular partial sums,
/// `Spectral` multiplies the Walsh coefficients once and synthesizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Spectral,
}

/// Applies the mixed logarithmic mean to `f`. All per-axis summation
/// indices run from 1 to n_i - 1 (S_0 = 0 contributes nothing), and the
/// result is normalized by prod_i l_{n_i}. The multi-axis weighted sum
/// factors exactly into one 1-d pass per axis because the weights are
/// products and the per-axis truncations commute.
pub fn apply_mean(f: &DyadicFunction, spec: &MeanSpec, method: Method) -> Result<DyadicFunction> {
    spec.validate_against(f)?;
    match method {
        Method::Spectral => {
            let mut spectrum = analyze(f);
            let profiles: Vec<Arc<KernelProfile>> = (0..spec.dims())
                .map(|i| {
                    kernel_profile(
                        spec.kind_for_axis(i as u32 + 1),
                        spec.orders[i],
                        f.resolution()[i],
                    )
                })
                .collect::<Result<_>>()?;
            let factors: Vec<&[f64]> = profiles.iter().map(|p| p.multipliers()).collect();
            spectrum.scale_separable(&factors)?;
            Ok(synthesize(&spectrum))
        }
        Method::Direct => {
            let mut current = f.clone();
            for axis in 0..spec.dims() {
                current = direct_axis_mean(
                    &current,
                    axis,
                    spec.kind_for_axis(axis as u32 + 1),
                    spec.orders[axis],
                )?;
            }
            Ok(current)
        }
    }
}

/// One axis of the direct method: accumulates (1/l_n) sum_m weight_m S_m
/// along the given axis, with each partial sum materialized by truncation.
fn direct_axis_mean(
    f: &DyadicFunction,
    axis: usize,
    kind: KernelKind,
    n: u64,
) -> Result<DyadicFunction> {
    let l_n = harmonic_value(n);
    let full: Vec<u64> = f.resolution().iter().map(|&k| 1u64 << k).collect();
    let spectrum = analyze(f);
    let mut acc = vec![0.0f64; f.len()];
    for m in 1..n {
        let weight = match kind {
            KernelKind::Norlund => 1.0 / (n - m) as f64,
            KernelKind::Riesz => 1.0 / m as f64,
            KernelKind::Dirichlet => {
                return Err(Error::Domain(
                    "direct means are defined for Norlund/Riesz kernels only".into(),
                ))
            }
        };
        let mut orders = full.clone();
        orders[axis] = m;
        let s_m = synthesize(&spectrum.truncated(&orders)?);
        for (slot, v) in acc.iter_mut().zip(s_m.values()) {
            *slot += weight * v;
        }
    }
    for slot in &mut acc {
        *slot /= l_n;
    }
    DyadicFunction::new(f.resolution().to_vec(), acc)
}

/// The tensor kernel of a mean spec: the product over axes of F (Norlund
/// axes) and G (Riesz axes) kernel samples. Convolving with it equals
/// applying the mean.
pub fn tensor_kernel(spec: &MeanSpec, resolution: &[u32]) -> Result<DyadicFunction> {
    if resolution.len() != spec.dims() {
        return Err(Error::Shape(format!(
            "got {} resolution entries for dimension {}",
            resolution.len(),
            spec.dims()
        )));
    }
    let profiles: Vec<Arc<KernelProfile>> = (0..spec.dims())
        .map(|i| kernel_profile(spec.kind_for_axis(i as u32 + 1), spec.orders[i], resolution[i]))
        .collect::<Result<_>>()?;
    DyadicFunction::from_fn(resolution.to_vec(), |idx| {
        idx.iter()
            .enumerate()
            .map(|(i, &j)| profiles[i].samples()[j])
            .product()
    })
}

/// Dyadic convolution (f (*) g)(x) = integral of f(t) g(x +. t) dt by the
/// direct double sum: O(N^2), oracle-grade. Because the flat layout is
/// bit-aligned, x +. t is a single XOR of flat indices.
pub fn convolve(f: &DyadicFunction, g: &DyadicFunction) -> Result<DyadicFunction> {
    if f.resolution() != g.resolution() {
        return Err(Error::ResolutionMismatch(format!(
            "convolution needs matching grids, got {:?} vs {:?}",
            f.resolution(),
            g.resolution()
        )));
    }
    let n = f.len();
    let fv = f.values();
    let gv = g.values();
    let values: Vec<f64> = (0..n)
        .map(|x| (0..n).map(|t| fv[t] * gv[x ^ t]).sum::<f64>() / n as f64)
        .collect();
    DyadicFunction::new(f.resolution().to_vec(), values)
}
