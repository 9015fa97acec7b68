//! Fast Walsh-Hadamard analysis and synthesis in Paley ordering, spectra,
//! rectangular partial sums, and grid-function (de)serialization.
//!
//! A `DyadicFunction` stores one value per dyadic cell of [0,1)^d, row-major
//! with axis 1 slowest. Because each per-axis extent is a power of two, the
//! flat index is the bit-concatenation of the per-axis indices, so bitwise
//! XOR of flat indices performs dyadic addition on every axis at once.
//!
//! The transform pair is normalized so that analysis produces the actual
//! Walsh-Fourier coefficients, f_hat(k) = 2^{-K} sum_j f(j/2^K) w_k(j/2^K),
//! and synthesis evaluates sum_k c_k w_k with no further scaling; the
//! composition either way is the identity. The Paley-ordered transform
//! matrix is the Hadamard matrix conjugated by bit reversal, and since the
//! two commute the implementation is one bit-reversal permutation followed
//! by the standard in-place butterfly passes.

use std::io::{Read, Write};
use std::path::Path;

use crate::dyadic::bit_reverse;
use crate::{Error, Result};

/// Hard cap on the total grid size (sum of per-axis exponents): 2^26 cells
/// is half a gigabyte of samples, the largest this crate will allocate.
const MAX_TOTAL_LOG2: u32 = 26;

/// Maximum dimension count; also fixes the binary header layout.
const MAX_DIMS: usize = 12;

fn validate_resolution(resolution: &[u32]) -> Result<()> {
    if resolution.is_empty() || resolution.len() > MAX_DIMS {
        return Err(Error::Shape(format!(
            "dimension count must lie in 1..={MAX_DIMS}, got {}",
            resolution.len()
        )));
    }
    let total: u32 = resolution.iter().sum();
    if total > MAX_TOTAL_LOG2 {
        return Err(Error::ResolutionExceeded(format!(
            "grid of 2^{total} cells exceeds the 2^{MAX_TOTAL_LOG2} allocation cap"
        )));
    }
    Ok(())
}

fn total_len(resolution: &[u32]) -> usize {
    1usize << resolution.iter().sum::<u32>()
}

/// Row-major strides (axis 1 slowest, last axis contiguous).
fn strides(resolution: &[u32]) -> Vec<usize> {
    let d = resolution.len();
    let mut out = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        out[i] = out[i + 1] << resolution[i + 1];
    }
    out
}

/// In-place Paley-ordered Walsh-Hadamard transform, no normalization.
/// Self-inverse up to the factor N = data.len().
fn fwht_in_place(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let k = n.trailing_zeros();
    for j in 0..n {
        let r = bit_reverse(j, k);
        if r > j {
            data.swap(j, r);
        }
    }
    let mut half = 1usize;
    while half < n {
        for start in (0..n).step_by(2 * half) {
            for i in start..start + half {
                let (a, b) = (data[i], data[i + half]);
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Applies the 1-d transform along one axis of a flat row-major array.
fn transform_axis(values: &mut [f64], resolution: &[u32], axis: usize) {
    let len_axis = 1usize << resolution[axis];
    let stride = strides(resolution)[axis];
    let block = len_axis * stride;
    let mut scratch = vec![0.0f64; len_axis];
    for block_start in (0..values.len()).step_by(block) {
        for inner in 0..stride {
            let base = block_start + inner;
            for (t, slot) in scratch.iter_mut().enumerate() {
                *slot = values[base + t * stride];
            }
            fwht_in_place(&mut scratch);
            for (t, slot) in scratch.iter().enumerate() {
                values[base + t * stride] = *slot;
            }
        }
    }
}

/// Transform direction for the flat 1-d entry point [`fwht`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Samples to coefficients (scales by 1/N).
    Analyze,
    /// Coefficients to samples (no scaling).
    Synthesize,
}

/// One-dimensional Paley-ordered transform of a power-of-two-length slice.
/// `Analyze` returns Walsh-Fourier coefficients of the samples; `Synthesize`
/// evaluates the Walsh polynomial with the given coefficients on the grid.
pub fn fwht(values: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if values.is_empty() || !values.len().is_power_of_two() {
        return Err(Error::Shape(format!(
            "transform length must be a positive power of two, got {}",
            values.len()
        )));
    }
    let mut out = values.to_vec();
    fwht_in_place(&mut out);
    if direction == Direction::Analyze {
        let scale = 1.0 / values.len() as f64;
        for v in &mut out {
            *v *= scale;
        }
    }
    Ok(out)
}

/// A real function on [0,1)^d represented exactly by one value per dyadic
/// cell prod_i [j_i/2^{K_i}, (j_i+1)/2^{K_i}), row-major with axis 1 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicFunction {
    resolution: Vec<u32>,
    values: Vec<f64>,
}

impl DyadicFunction {
    pub fn new(resolution: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        validate_resolution(&resolution)?;
        if values.len() != total_len(&resolution) {
            return Err(Error::Shape(format!(
                "expected {} samples for resolution {:?}, got {}",
                total_len(&resolution),
                resolution,
                values.len()
            )));
        }
        Ok(Self { resolution, values })
    }

    pub fn constant(resolution: Vec<u32>, c: f64) -> Result<Self> {
        validate_resolution(&resolution)?;
        let len = total_len(&resolution);
        Self::new(resolution, vec![c; len])
    }

    /// Builds a function by evaluating `f` at every index tuple.
    pub fn from_fn(resolution: Vec<u32>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        validate_resolution(&resolution)?;
        let len = total_len(&resolution);
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; resolution.len()];
        for flat in 0..len {
            unflatten_into(flat, &resolution, &mut idx);
            values.push(f(&idx));
        }
        Self::new(resolution, values)
    }

    pub fn dims(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[u32] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat row-major position of an index tuple.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        flatten(idx, &self.resolution)
    }

    /// Index tuple of a flat position.
    pub fn index_tuple(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dims()];
        unflatten_into(flat, &self.resolution, &mut idx);
        idx
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// The exact integral over [0,1)^d: the mean of the cell values.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Returns x -> f(x +. e) for a grid shift e given per axis. Because the
    /// flat layout is bit-aligned, this is one XOR per cell.
    pub fn translate(&self, shift: &[usize]) -> Result<Self> {
        if shift.len() != self.dims() {
            return Err(Error::Shape(format!(
                "shift has {} axes, function has {}",
                shift.len(),
                self.dims()
            )));
        }
        for (axis, (&s, &k)) in shift.iter().zip(&self.resolution).enumerate() {
            if s >= (1usize << k) {
                return Err(Error::Domain(format!(
                    "shift {} on axis {} out of range for resolution 2^{}",
                    s,
                    axis + 1,
                    k
                )));
            }
        }
        let flat_shift = flatten(shift, &self.resolution);
        let values = (0..self.len()).map(|j| self.values[j ^ flat_shift]).collect();
        Self::new(self.resolution.clone(), values)
    }

    /// A copy scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| v * c).collect();
        Self {
            resolution: self.resolution.clone(),
            values,
        }
    }

    /// Binary layout: a 16-byte header (u32 little-endian dimension count,
    /// then one u8 resolution exponent per axis, zero-padded), followed by
    /// the row-major samples as little-endian f64.
    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&self.header_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    fn header_bytes(&self) -> [u8; 16] {
        let mut header = [0u8; 16];
        header[..4].copy_from_slice(&(self.dims() as u32).to_le_bytes());
        for (i, &k) in self.resolution.iter().enumerate() {
            header[4 + i] = k as u8;
        }
        header
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        let d = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
        if d == 0 || d > MAX_DIMS {
            return Err(Error::Shape(format!(
                "header dimension count {d} outside 1..={MAX_DIMS}"
            )));
        }
        let resolution: Vec<u32> = header[4..4 + d].iter().map(|&b| b as u32).collect();
        validate_resolution(&resolution)?;
        let len = total_len(&resolution);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != len * 8 {
            return Err(Error::Shape(format!(
                "expected {} sample bytes for resolution {:?}, found {}",
                len * 8,
                resolution,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(resolution, values)
    }

    /// CSV export: a `j1,...,jd,value` header row, then one row per cell
    /// with its index tuple and the value at 17 significant digits.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let cols: Vec<String> = (1..=self.dims()).map(|i| format!("j{i}")).collect();
        writeln!(w, "{},value", cols.join(","))?;
        let mut idx = vec![0usize; self.dims()];
        for (flat, v) in self.values.iter().enumerate() {
            unflatten_into(flat, &self.resolution, &mut idx);
            let tuple: Vec<String> = idx.iter().map(|j| j.to_string()).collect();
            writeln!(w, "{},{:.16e}", tuple.join(","), v)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("in-memory write cannot fail");
        String::from_utf8(out).expect("CSV output is ASCII")
    }
}

fn flatten(idx: &[usize], resolution: &[u32]) -> usize {
    debug_assert_eq!(idx.len(), resolution.len());
    let mut flat = 0usize;
    for (&j, &k) in idx.iter().zip(resolution) {
        debug_assert!(j < (1usize << k));
        flat = (flat << k) | j;
    }
    flat
}

fn unflatten_into(flat: usize, resolution: &[u32], idx: &mut [usize]) {
    let mut rest = flat;
    for i in (0..resolution.len()).rev() {
        let k = resolution[i];
        idx[i] = rest & ((1usize << k) - 1);
        rest >>= k;
    }
}

/// Walsh-Fourier coefficients of a `DyadicFunction`, Paley-ordered per axis,
/// stored in the same row-major layout as the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshSpectrum {
    resolution: Vec<u32>,
    coeffs: Vec<f64>,
}

impl WalshSpectrum {
    pub fn new(resolution: Vec<u32>, coeffs: Vec<f64>) -> Result<Self> {
        validate_resolution(&resolution)?;
        if coeffs.len() != total_len(&resolution) {
            return Err(Error::Shape(format!(
                "expected {} coefficients for resolution {:?}, got {}",
                total_len(&resolution),
                resolution,
                coeffs.len()
            )));
        }
        Ok(Self { resolution, coeffs })
    }

    pub fn dims(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[u32] {
        &self.resolution
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff_at(&self, idx: &[usize]) -> f64 {
        self.coeffs[flatten(idx, &self.resolution)]
    }

    /// Multiplies coefficientwise by a separable factor: coefficient
    /// (j_1,...,j_d) is scaled by prod_i factors[i][j_i]. This is how every
    /// per-axis convolution operator acts on the spectrum.
    pub fn scale_separable(&mut self, factors: &[&[f64]]) -> Result<()> {
        if factors.len() != self.dims() {
            return Err(Error::Shape(format!(
                "got {} factor arrays for {} axes",
                factors.len(),
                self.dims()
            )));
        }
        for (axis, (factor, &k)) in factors.iter().zip(&self.resolution).enumerate() {
            if factor.len() != (1usize << k) {
                return Err(Error::Shape(format!(
                    "factor array on axis {} has length {}, expected {}",
                    axis + 1,
                    factor.len(),
                    1usize << k
                )));
            }
        }
        let mut idx = vec![0usize; self.dims()];
        for (flat, c) in self.coeffs.iter_mut().enumerate() {
            unflatten_into(flat, &self.resolution, &mut idx);
            let mut scale = 1.0;
            for (i, &j) in idx.iter().enumerate() {
                scale *= factors[i][j];
            }
            *c *= scale;
        }
        Ok(())
    }

    /// Zeroes every coefficient with j_i >= orders[i] on some axis: the
    /// spectrum of the rectangular partial sum.
    pub fn truncated(&self, orders: &[u64]) -> Result<Self> {
        if orders.len() != self.dims() {
            return Err(Error::Shape(format!(
                "got {} orders for {} axes",
                orders.len(),
                self.dims()
            )));
        }
        for (axis, (&n, &k)) in orders.iter().zip(&self.resolution).enumerate() {
            if n > (1u64 << k) {
                return Err(Error::ResolutionExceeded(format!(
                    "partial-sum order {} on axis {} exceeds resolution 2^{}",
                    n,
                    axis + 1,
                    k
                )));
            }
        }
        let mut out = self.clone();
        let mut idx = vec![0usize; self.dims()];
        for (flat, c) in out.coeffs.iter_mut().enumerate() {
            unflatten_into(flat, &self.resolution, &mut idx);
            if idx.iter().zip(orders).any(|(&j, &n)| (j as u64) >= n) {
                *c = 0.0;
            }
        }
        Ok(out)
    }
}

/// Walsh-Fourier coefficients of `f`, exact (up to f64 rounding) for every
/// index below the per-axis resolution because `f` is cell-constant.
pub fn analyze(f: &DyadicFunction) -> WalshSpectrum {
    let mut coeffs = f.values().to_vec();
    for axis in 0..f.dims() {
        transform_axis(&mut coeffs, f.resolution(), axis);
    }
    let scale = 1.0 / coeffs.len() as f64;
    for c in &mut coeffs {
        *c *= scale;
    }
    WalshSpectrum {
        resolution: f.resolution().to_vec(),
        coeffs,
    }
}

/// Evaluates the Walsh polynomial with the given coefficients on its grid;
/// exact inverse of [`analyze`].
pub fn synthesize(s: &WalshSpectrum) -> DyadicFunction {
    let mut values = s.coeffs().to_vec();
    for axis in 0..s.dims() {
        transform_axis(&mut values, s.resolution(), axis);
    }
    DyadicFunction {
        resolution: s.resolution().to_vec(),
        values,
    }
}

/// Rectangular partial sum S_N(f): the synthesis of the spectrum truncated
/// to j_i < N_i on every axis. N_i = 0 yields the zero function; N_i beyond
/// the per-axis resolution is rejected rather than silently aliased.
pub fn partial_sum(f: &DyadicFunction, orders: &[u64]) -> Result<DyadicFunction> {
    let spectrum = analyze(f).truncated(orders)?;
    Ok(synthesize(&spectrum))
}
