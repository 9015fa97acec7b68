//! Builtin test functions for the sweep commands.
//!
//! Every generator is exact on the dyadic grid and deterministic: the
//! random-step family draws i.i.d. uniform cell values from a counter-based
//! generator seeded explicitly, with one generator stream per suite member
//! so parallel evaluation cannot reorder draws.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use walsh_logmeans_core::transform::{synthesize, WalshSpectrum};
use walsh_logmeans_core::DyadicFunction;

use crate::config::FunctionSpec;
use crate::{usage, CliResult};

/// Indicator of the dyadic rectangle `prod_i [0, 2^-exps[i])`.
pub fn dyadic_rectangle(resolution: &[u32], exps: &[u32]) -> CliResult<DyadicFunction> {
    let res = resolution.to_vec();
    let exps = exps.to_vec();
    let resolution = resolution.to_vec();
    Ok(DyadicFunction::from_fn(res, move |idx| {
        let inside = idx
            .iter()
            .zip(exps.iter().zip(resolution.iter()))
            .all(|(&j, (&e, &k))| (j as u64) >> (k - e) == 0);
        if inside {
            1.0
        } else {
            0.0
        }
    })?)
}

/// The Walsh function with per-axis Paley indices, built by synthesizing a
/// single unit coefficient (exact and O(N log N)).
pub fn walsh_function(resolution: &[u32], indices: &[u64]) -> CliResult<DyadicFunction> {
    let len: usize = resolution.iter().map(|&k| 1usize << k).product();
    let mut spectrum = WalshSpectrum::new(resolution.to_vec(), vec![0.0; len])?;
    let idx: Vec<usize> = indices.iter().map(|&j| j as usize).collect();
    let flat = {
        // Row-major flat index of the multi-index, matching the grid layout.
        let mut acc = 0usize;
        for (i, &j) in idx.iter().enumerate() {
            acc = (acc << resolution[i]) | j;
        }
        acc
    };
    spectrum.coeffs_mut()[flat] = 1.0;
    Ok(synthesize(&spectrum))
}

/// I.i.d. uniform `[-1, 1)` cell values from stream `stream` of the seeded
/// generator. Suite members use consecutive streams of one seed.
pub fn random_step(resolution: &[u32], seed: u64, stream: u64) -> CliResult<DyadicFunction> {
    let len: usize = resolution.iter().map(|&k| 1usize << k).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(DyadicFunction::new(resolution.to_vec(), values)?)
}

/// The borderline family: value `amp` on the cell `[0, 1/amp)` along axis 1
/// (full range on the remaining axes), so the L1 norm is exactly 1 while the
/// peak grows with `amp`.
pub fn borderline(resolution: &[u32], amp: u64) -> CliResult<DyadicFunction> {
    let res = resolution.to_vec();
    let shift = resolution[0] - amp.trailing_zeros();
    let value = amp as f64;
    Ok(DyadicFunction::from_fn(res, move |idx| {
        if (idx[0] as u64) >> shift == 0 {
            value
        } else {
            0.0
        }
    })?)
}

/// Materializes a converge-command function spec on the given grid.
pub fn build_function(
    spec: &FunctionSpec,
    resolution: &[u32],
    seed: u64,
) -> CliResult<DyadicFunction> {
    match spec {
        FunctionSpec::DyadicRectangle { exps } => dyadic_rectangle(resolution, exps),
        FunctionSpec::Walsh { indices } => walsh_function(resolution, indices),
        FunctionSpec::RandomStep => random_step(resolution, seed, 0),
        FunctionSpec::Borderline { amp } => borderline(resolution, *amp),
        FunctionSpec::File { path } => {
            let f = DyadicFunction::load_binary(Path::new(path))?;
            if f.resolution() != resolution {
                return Err(usage(format!(
                    "--function-file: function has resolution {:?} but the config says {:?}",
                    f.resolution(),
                    resolution
                )));
            }
            Ok(f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use walsh_logmeans_core::transform::analyze;

    #[test]
    fn rectangle_mass_is_the_cell_volume() {
        let f = dyadic_rectangle(&[4, 4], &[1, 2]).unwrap();
        assert!((f.integral() - 0.125).abs() < 1e-15);
        assert_eq!(f.value_at(&[0, 0]), 1.0);
        assert_eq!(f.value_at(&[7, 3]), 1.0);
        assert_eq!(f.value_at(&[8, 0]), 0.0);
        assert_eq!(f.value_at(&[0, 4]), 0.0);
        // Exponent 0 keeps the whole axis.
        let g = dyadic_rectangle(&[3], &[0]).unwrap();
        assert!((g.integral() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn walsh_function_has_a_single_unit_coefficient() {
        let f = walsh_function(&[4, 3], &[5, 2]).unwrap();
        let spec = analyze(&f);
        for (flat, &c) in spec.coeffs().iter().enumerate() {
            let expected = if flat == (5 << 3) | 2 { 1.0 } else { 0.0 };
            assert!(
                (c - expected).abs() < 1e-12,
                "coefficient {flat} is {c}, expected {expected}"
            );
        }
        // Values are +-1 everywhere.
        assert!(f.values().iter().all(|v| (v.abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn random_step_is_reproducible_and_stream_separated() {
        let a = random_step(&[5], 9, 0).unwrap();
        let b = random_step(&[5], 9, 0).unwrap();
        assert_eq!(a.values(), b.values());
        let c = random_step(&[5], 9, 1).unwrap();
        assert_ne!(a.values(), c.values());
        assert!(a.values().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn borderline_has_unit_mass_and_growing_peak() {
        for amp in [1u64, 2, 8, 32] {
            let f = borderline(&[6, 2], amp).unwrap();
            assert!((f.integral() - 1.0).abs() < 1e-12, "amp {amp}");
            assert_eq!(f.value_at(&[0, 0]), amp as f64);
        }
    }

    #[test]
    fn file_spec_round_trips_through_the_binary_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let f = random_step(&[4, 3], 5, 0).unwrap();
        f.save_binary(&path).unwrap();
        let spec = FunctionSpec::File {
            path: path.to_string_lossy().into_owned(),
        };
        let g = build_function(&spec, &[4, 3], 0).unwrap();
        assert_eq!(g.values(), f.values());
        // Mismatched resolution is a usage error naming the flag.
        let err = build_function(&spec, &[4, 4], 0).unwrap_err();
        assert!(matches!(err, crate::CliError::Usage(ref m) if m.contains("--function-file")));
    }
}
