//! The dyadic group at finite resolution, and the Rademacher / Walsh /
//! Dirichlet systems evaluated exactly on grid points.
//!
//! A point of [0,1) at resolution K is the grid index j, standing for
//! j/2^K (equivalently, for the whole cell [j/2^K, (j+1)/2^K), on which
//! every function of interest here is constant). Binary digit i of the
//! point (the coefficient of 2^{-i-1}) is bit K-1-i of j, so dyadic
//! addition - digitwise addition mod 2 - is bitwise XOR of indices and
//! is exact: no floating arithmetic is involved in the group operation.
//!
//! Walsh functions use the Paley enumeration: w_n is the product of the
//! Rademacher functions r_i over the set bits i of n, hence
//! w_n(j/2^K) = (-1)^popcount(n & bitrev_K(j)) for n < 2^K.

use crate::{Error, Result};

/// A point of [0,1)^d on a dyadic grid: per-axis index `coords[i]` at
/// per-axis resolution `resolution[i]`, standing for coords[i]/2^{K_i}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicPoint {
    coords: Vec<usize>,
    resolution: Vec<u32>,
}

impl DyadicPoint {
    /// Builds a point after checking that every index fits its resolution.
    pub fn new(coords: Vec<usize>, resolution: Vec<u32>) -> Result<Self> {
        if coords.len() != resolution.len() {
            return Err(Error::Shape(format!(
                "point has {} coordinates but {} resolution entries",
                coords.len(),
                resolution.len()
            )));
        }
        if coords.is_empty() {
            return Err(Error::Shape("point must have at least one axis".into()));
        }
        for (axis, (&j, &k)) in coords.iter().zip(&resolution).enumerate() {
            if k > 63 {
                return Err(Error::ResolutionExceeded(format!(
                    "axis {} resolution 2^{} exceeds the 63-bit index range",
                    axis + 1,
                    k
                )));
            }
            if j >= (1usize << k) {
                return Err(Error::Domain(format!(
                    "axis {} index {} out of range for resolution 2^{}",
                    axis + 1,
                    j,
                    k
                )));
            }
        }
        Ok(Self { coords, resolution })
    }

    /// One-dimensional point j/2^k.
    pub fn one_dim(j: usize, k: u32) -> Result<Self> {
        Self::new(vec![j], vec![k])
    }

    /// The 1-d grid point whose cell contains the real number `x` in [0,1).
    pub fn containing(x: f64, k: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} lies outside [0,1)")));
        }
        let j = ((x * (1u64 << k) as f64) as usize).min((1usize << k) - 1);
        Self::one_dim(j, k)
    }

    pub fn dims(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn resolution(&self) -> &[u32] {
        &self.resolution
    }

    /// The real coordinates (j_1/2^{K_1}, ..., j_d/2^{K_d}).
    pub fn values(&self) -> Vec<f64> {
        self.coords
            .iter()
            .zip(&self.resolution)
            .map(|(&j, &k)| j as f64 / (1u64 << k) as f64)
            .collect()
    }

    fn require_one_dim(&self, what: &str) -> Result<(usize, u32)> {
        if self.dims() != 1 {
            return Err(Error::Shape(format!(
                "{what} expects a 1-d point, got {} axes",
                self.dims()
            )));
        }
        Ok((self.coords[0], self.resolution[0]))
    }
}

/// Dyadic addition x +. y: digitwise addition mod 2, i.e. coordinatewise
/// XOR of grid indices. Exact, commutative, and an involution in each
/// argument. Errors if the two points live on different grids.
pub fn dyadic_add(x: &DyadicPoint, y: &DyadicPoint) -> Result<DyadicPoint> {
    if x.resolution != y.resolution {
        return Err(Error::ResolutionMismatch(format!(
            "dyadic_add needs matching grids, got {:?} vs {:?}",
            x.resolution, y.resolution
        )));
    }
    let coords = x
        .coords
        .iter()
        .zip(&y.coords)
        .map(|(&a, &b)| a ^ b)
        .collect();
    DyadicPoint::new(coords, x.resolution.clone())
}

/// Reverses the low `k` bits of `j`.
pub fn bit_reverse(j: usize, k: u32) -> usize {
    let mut out = 0usize;
    for bit in 0..k {
        out |= ((j >> bit) & 1) << (k - 1 - bit);
    }
    out
}

/// Rademacher sign at a grid index: digit `n` of j/2^k read directly from
/// the bits of j (digit n is bit k-1-n). Digits at or beyond the grid
/// resolution are zero, so r_n = +1 there.
pub(crate) fn rademacher_index(n: u32, j: usize, k: u32) -> f64 {
    if n >= k {
        return 1.0;
    }
    if (j >> (k - 1 - n)) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Walsh function value at a grid index, Paley order: the product of
/// Rademacher signs over the set bits of n. Only the low k bits of n can
/// act at resolution k (higher digits of the point vanish).
pub(crate) fn walsh_index(n: u64, j: usize, k: u32) -> f64 {
    let mask = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
    let folded = (n & mask) & bit_reverse(j, k) as u64;
    if folded.count_ones() % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Dirichlet kernel value at a grid index: D_n = sum of the first n Walsh
/// functions. Evaluated by the exact split D_{2^t + r} = D_{2^t} + w_{2^t} D_r
/// (r < 2^t), which reproduces the direct summation in O(bits of n); the
/// closed form D_{2^t} = 2^t on [0, 2^{-t}) and 0 elsewhere seeds the splits.
/// Values are integers; they are exact in f64 up to |D_n| < 2^53.
pub(crate) fn dirichlet_index(n: u64, j: usize, k: u32) -> f64 {
    let mut acc: i128 = 0;
    let mut prefix_sign: i128 = 1;
    for t in (0..64).rev() {
        if n & (1u64 << t) == 0 {
            continue;
        }
        // D_{2^t} at j/2^k: 2^t when the point lies in [0, 2^{-t}).
        let in_support = if t >= k as u64 {
            j == 0
        } else {
            (j >> (k as u64 - t)) == 0
        };
        if in_support {
            acc += prefix_sign * (1i128 << t);
        }
        prefix_sign *= walsh_index(1u64 << t, j, k) as i128;
    }
    acc as f64
}

/// r_n(x) for a 1-d grid point x: the sign of binary digit n of x.
pub fn rademacher(n: u32, x: &DyadicPoint) -> Result<f64> {
    let (j, k) = x.require_one_dim("rademacher")?;
    Ok(rademacher_index(n, j, k))
}

/// w_n(x) for a 1-d grid point x (Paley order).
pub fn walsh(n: u64, x: &DyadicPoint) -> Result<f64> {
    let (j, k) = x.require_one_dim("walsh")?;
    Ok(walsh_index(n, j, k))
}

/// D_n(x) = sum_{m<n} w_m(x) for a 1-d grid point x. D_0 is the zero sum.
pub fn dirichlet(n: u64, x: &DyadicPoint) -> Result<f64> {
    let (j, k) = x.require_one_dim("dirichlet")?;
    Ok(dirichlet_index(n, j, k))
}

/// A subset of the axis labels {1, ..., d}, used to assign per-axis
/// treatments (and to form complements of such assignments).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxisSubset {
    d: u32,
    mask: u64,
}

impl AxisSubset {
    /// Builds a subset from 1-based axis labels; rejects labels outside
    /// 1..=d and duplicate labels.
    pub fn from_labels(d: u32, labels: &[u32]) -> Result<Self> {
        if d == 0 || d > 12 {
            return Err(Error::Domain(format!(
                "dimension must lie in 1..=12, got {d}"
            )));
        }
        let mut mask = 0u64;
        for &axis in labels {
            if axis == 0 || axis > d {
                return Err(Error::Domain(format!(
                    "axis label {axis} outside 1..={d}"
                )));
            }
            let bit = 1u64 << (axis - 1);
            if mask & bit != 0 {
                return Err(Error::Domain(format!("duplicate axis label {axis}")));
            }
            mask |= bit;
        }
        Ok(Self { d, mask })
    }

    /// The empty subset of {1, ..., d}.
    pub fn empty(d: u32) -> Result<Self> {
        Self::from_labels(d, &[])
    }

    /// The full subset {1, ..., d}.
    pub fn all(d: u32) -> Result<Self> {
        let labels: Vec<u32> = (1..=d).collect();
        Self::from_labels(d, &labels)
    }

    pub fn dims(&self) -> u32 {
        self.d
    }

    /// Number of member axes.
    pub fn len(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Membership of a 1-based axis label.
    pub fn contains(&self, axis: u32) -> bool {
        axis >= 1 && axis <= self.d && self.mask & (1u64 << (axis - 1)) != 0
    }

    /// Member labels in increasing order.
    pub fn labels(&self) -> Vec<u32> {
        (1..=self.d).filter(|&a| self.contains(a)).collect()
    }

    /// The complementary subset {1, ..., d} minus the members.
    pub fn complement(&self) -> Self {
        Self {
            d: self.d,
            mask: !self.mask & ((1u64 << self.d) - 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(j: usize, k: u32) -> DyadicPoint {
        DyadicPoint::one_dim(j, k).unwrap()
    }

    #[test]
    fn dyadic_add_matches_digitwise_examples() {
        // 1/4 +. 1/2 = 3/4: disjoint digits add.
        let sum = dyadic_add(&pt(1, 2), &pt(2, 2)).unwrap();
        assert_eq!(sum.coords(), &[3]);
        // 5/8 +. 1/4 = 7/8: 0.101 XOR 0.010 = 0.111.
        let sum = dyadic_add(&pt(5, 3), &pt(2, 3)).unwrap();
        assert_eq!(sum.coords(), &[7]);
        // Self-inverse: x +. x = 0.
        for j in 0..16 {
            let z = dyadic_add(&pt(j, 4), &pt(j, 4)).unwrap();
            assert_eq!(z.coords(), &[0]);
        }
    }

    #[test]
    fn dyadic_add_rejects_mismatched_grids() {
        let err = dyadic_add(&pt(0, 2), &pt(0, 3)).unwrap_err();
        assert!(matches!(err, Error::ResolutionMismatch(_)));
    }

    #[test]
    fn dyadic_add_group_axioms_exhaustive_small() {
        let k = 6;
        let n = 1usize << k;
        for a in 0..n {
            for b in 0..n {
                let ab = dyadic_add(&pt(a, k), &pt(b, k)).unwrap();
                let ba = dyadic_add(&pt(b, k), &pt(a, k)).unwrap();
                assert_eq!(ab, ba);
            }
            let id = dyadic_add(&pt(a, k), &pt(0, k)).unwrap();
            assert_eq!(id.coords(), &[a]);
        }
        // Associativity on a coarser exhaustive cube.
        let k = 4;
        let n = 1usize << k;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let left =
                        dyadic_add(&dyadic_add(&pt(a, k), &pt(b, k)).unwrap(), &pt(c, k)).unwrap();
                    let right =
                        dyadic_add(&pt(a, k), &dyadic_add(&pt(b, k), &pt(c, k)).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn rademacher_reads_binary_digits() {
        // r_0(0.3) = +1 since 0.3 < 1/2.
        assert_eq!(rademacher(0, &DyadicPoint::containing(0.3, 8).unwrap()).unwrap(), 1.0);
        // r_1(0.3) = r_0(0.6) = -1.
        assert_eq!(rademacher(1, &DyadicPoint::containing(0.3, 8).unwrap()).unwrap(), -1.0);
        // r_2(7/8) = r_0(3.5 mod 1) = r_0(0.5) = -1.
        assert_eq!(rademacher(2, &pt(7, 3)).unwrap(), -1.0);
        // Digits beyond resolution vanish.
        assert_eq!(rademacher(5, &pt(7, 3)).unwrap(), 1.0);
    }

    #[test]
    fn walsh_matches_rademacher_products() {
        // w_0 is identically 1.
        for j in 0..32 {
            assert_eq!(walsh(0, &pt(j, 5)).unwrap(), 1.0);
        }
        // w_3(0.3) = r_1(0.3) * r_0(0.3) = -1.
        let x = DyadicPoint::containing(0.3, 8).unwrap();
        assert_eq!(walsh(3, &x).unwrap(), -1.0);
        // w_n(0) = 1 for all n.
        for n in 0..256 {
            assert_eq!(walsh(n, &pt(0, 6)).unwrap(), 1.0);
        }
        // Product structure against explicit Rademacher factors.
        for j in 0..64 {
            let x = pt(j, 6);
            for n in 0u64..64 {
                let mut prod = 1.0;
                for bit in 0..6 {
                    if n & (1 << bit) != 0 {
                        prod *= rademacher(bit, &x).unwrap();
                    }
                }
                assert_eq!(walsh(n, &x).unwrap(), prod);
            }
        }
    }

    #[test]
    fn dirichlet_small_values() {
        // D_4 = 4 on [0, 1/4), 0 on [1/4, 1).
        assert_eq!(dirichlet(4, &DyadicPoint::containing(0.1, 8).unwrap()).unwrap(), 4.0);
        assert_eq!(dirichlet(4, &DyadicPoint::containing(0.3, 8).unwrap()).unwrap(), 0.0);
        // D_1 = w_0 = 1 everywhere; D_3(0) = 3; D_0 is the empty sum.
        for j in 0..16 {
            assert_eq!(dirichlet(1, &pt(j, 4)).unwrap(), 1.0);
            assert_eq!(dirichlet(0, &pt(j, 4)).unwrap(), 0.0);
        }
        assert_eq!(dirichlet(3, &pt(0, 4)).unwrap(), 3.0);
    }

    #[test]
    fn dirichlet_split_equals_direct_summation() {
        let k = 7;
        for n in 0..200u64 {
            for j in 0..(1usize << k) {
                let direct: f64 = (0..n).map(|m| walsh_index(m, j, k)).sum();
                assert_eq!(dirichlet_index(n, j, k), direct, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn dirichlet_powers_of_two_closed_form() {
        for m in 0..=12u32 {
            let k = 12;
            for j in 0..(1usize << k) {
                let expected = if (j >> (k - m)) == 0 { (1u64 << m) as f64 } else { 0.0 };
                assert_eq!(dirichlet_index(1u64 << m, j, k), expected);
            }
        }
    }

    #[test]
    fn axis_subset_builds_and_complements() {
        let b = AxisSubset::from_labels(3, &[1, 3]).unwrap();
        assert_eq!(b.labels(), vec![1, 3]);
        assert_eq!(b.complement().labels(), vec![2]);
        assert_eq!(b.len(), 2);
        assert!(b.contains(3) && !b.contains(2));
        assert!(AxisSubset::from_labels(2, &[3]).is_err());
        assert!(AxisSubset::from_labels(2, &[1, 1]).is_err());
        let all = AxisSubset::all(4).unwrap();
        assert_eq!(all.complement(), AxisSubset::empty(4).unwrap());
    }

    proptest! {
        // Group law w_n * w_m = w_{n XOR m} at random indices and points.
        #[test]
        fn walsh_group_law(n in 0u64..(1 << 16), m in 0u64..(1 << 16), j in 0usize..(1 << 12)) {
            let k = 12;
            let lhs = walsh_index(n, j, k) * walsh_index(m, j, k);
            let rhs = walsh_index(n ^ m, j, k);
            prop_assert_eq!(lhs, rhs);
        }

        // Character identity w_n(x +. y) = w_n(x) w_n(y) for n within resolution.
        #[test]
        fn walsh_translation_character(n in 0u64..(1 << 12), a in 0usize..(1 << 12), b in 0usize..(1 << 12)) {
            let k = 12;
            let lhs = walsh_index(n, a ^ b, k);
            let rhs = walsh_index(n, a, k) * walsh_index(n, b, k);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn bit_reverse_is_involution(j in 0usize..(1 << 14)) {
            prop_assert_eq!(bit_reverse(bit_reverse(j, 14), 14), j);
        }
    }
}
