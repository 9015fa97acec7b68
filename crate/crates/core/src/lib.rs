//! Logarithmic summability of multiple Walsh-Fourier series on dyadic grids.
//!
//! Everything here works with functions represented exactly by their values
//! on dyadic grids: a function on [0,1)^d is stored as one sample per cell
//! prod_i [j_i/2^{K_i}, (j_i+1)/2^{K_i}). Walsh polynomials of degree below
//! 2^{K_i} per axis are constant on those cells, so partial sums, kernels,
//! convolutions, and norms of every operator of order within resolution are
//! computed exactly (up to f64 rounding), not approximately.
//!
//! Module map:
//! - [`dyadic`]: the dyadic group (bitwise XOR on grid indices) and pointwise
//!   Rademacher / Walsh / Dirichlet evaluation in Paley order.
//! - [`transform`]: fast Walsh-Hadamard analysis/synthesis, spectra,
//!   rectangular partial sums, grid function (de)serialization.
//! - [`logmeans`]: Norlund and Riesz logarithmic means, their kernels and
//!   spectral multipliers, mixed per-axis means, convolution oracle.
//! - [`norms`]: L_p, weak-L1, Young functions, Luxemburg (Orlicz) norms,
//!   and the L log^beta L entropy functional.
//! - [`divergence`]: machinery that exhibits how the means fail on L1-type
//!   spaces: special orders p_n, band regions, kernel envelope scans,
//!   operator lower bounds, and signed-translate witness functions.

pub mod divergence;
pub mod dyadic;
pub mod logmeans;
pub mod norms;
pub mod transform;

pub use dyadic::AxisSubset;
pub use logmeans::{KernelKind, KernelProfile, MeanSpec, Method};
pub use norms::YoungFunction;
pub use transform::{DyadicFunction, WalshSpectrum};

/// Unified error type for all grid and operator computations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two grid objects that must share a resolution do not.
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),
    /// An order or index does not fit within the working grid resolution.
    #[error("resolution exceeded: {0}")]
    ResolutionExceeded(String),
    /// An array has the wrong shape (for instance, a non-power-of-two length).
    #[error("shape error: {0}")]
    Shape(String),
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numeric procedure failed to converge or produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// An integer quantity does not fit in its carrier type.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Underlying I/O failure during (de)serialization.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
