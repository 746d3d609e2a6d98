//! Builders for the fiber measures `m_x`, the law of `S(x, j)` under uniform
//! random digits, and the self-similarity check
//! `m_x = b^{−n} Σ_{|j|=n} (y ↦ γ^n y + S(x, j))_* m_{j(x)}`.

use crate::error::{Error, Result};
use crate::measure::{check_level, mix, pushforward_affine, scale, DiscreteMeasure, Histogram};
use crate::scalar::Scalar;
use crate::symbolic::{DigitSource, SystemParams, Tail, Word};
use rayon::prelude::*;

/// Upper limit on `b^depth` for exhaustive enumeration.
pub const EXACT_BUDGET: f64 = 1e8;

const SHARD: usize = 1 << 18;

/// Per-shard seed derived from a run seed (SplitMix64 finalizer).
pub fn shard_seed(seed: u64, shard: u64) -> u64 {
    let mut z = seed ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn check_budget(b: u32, len: usize, budget: f64) -> Result<()> {
    let needed = (b as f64).powi(len as i32);
    if needed > budget {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// Histogram at `level` of `S(x, j)` for `n_samples` i.i.d. words unrolled
/// to the truncation depth.
///
/// Samples are drawn in fixed-size shards with independent seeds; the merge
/// adds integer counts, so the result does not depend on scheduling.
pub fn build_mx_empirical<T: Scalar>(
    p: &SystemParams<T>,
    x: T,
    level: u32,
    n_samples: usize,
    seed: u64,
) -> Result<DiscreteMeasure> {
    check_level(p.b(), level)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let depth = p.depth();
    let shards = n_samples.div_ceil(SHARD);
    let hist = (0..shards)
        .into_par_iter()
        .map(|s| {
            let count = SHARD.min(n_samples - s * SHARD);
            let mut h = Histogram::new(p.b(), level).expect("level checked");
            let mut src = DigitSource::new(p.b(), shard_seed(seed, s as u64));
            for _ in 0..count {
                let v = p.sum_terms(x, (0..depth).map(|_| src.next_digit()), 0);
                h.add(v.as_f64());
            }
            h
        })
        .reduce_with(|mut a, b| {
            a.merge(b);
            a
        })
        .expect("at least one shard");
    hist.into_measure()
}

/// Calls `f` with `S(x, w)` for every `w ∈ Λ^depth` (finite sums), in
/// lexicographic order of `w`.
pub fn for_each_fiber_value<T: Scalar>(p: &SystemParams<T>, x: T, depth: usize, mut f: impl FnMut(T)) {
    fn walk<T: Scalar>(p: &SystemParams<T>, bf: T, tau: T, acc: T, weight: T, left: usize, f: &mut impl FnMut(T)) {
        if left == 0 {
            f(acc);
            return;
        }
        for d in 0..p.b() {
            let t = (tau + T::of(d as f64)) / bf;
            walk(p, bf, t, acc + weight * p.phi().eval(t), weight * p.gamma(), left - 1, f);
        }
    }
    walk(p, T::of(p.b() as f64), x, T::zero(), T::one(), depth, &mut f);
}

/// `m_x` from exhaustive enumeration of `Λ^depth` with weights `b^{−depth}`.
///
/// Differs from the true `m_x` by moving each atom at most
/// `γ^depth ‖φ‖_∞ / (1 − γ)`.
pub fn build_mx_exact<T: Scalar>(p: &SystemParams<T>, x: T, level: u32, depth: usize) -> Result<DiscreteMeasure> {
    check_level(p.b(), level)?;
    check_budget(p.b(), depth, EXACT_BUDGET)?;
    let mut h = Histogram::new(p.b(), level)?;
    for_each_fiber_value(p, x, depth, |v| h.add(v.as_f64()));
    h.into_measure()
}

/// Outcome of [`self_similarity_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfSimilarity {
    /// Total-variation distance at the requested level.
    pub residual: f64,
    /// Certified upper bound on `residual`: the mass of atoms close enough to
    /// a cell boundary to be moved across it by midpoint deposition.
    pub bound: f64,
    /// Level at which the pieces `m_{j(x)}` were resolved before pushing forward.
    pub child_level: u32,
}

/// Compares `m_x` (depth `depth`) with the mixture over `j ∈ Λ^n` of the
/// affine images of `m_{j(x)}` (depth `depth − n`).
///
/// The two sides are built from the same atoms, so the residual is pure
/// discretization: each piece is resolved at level `max(level, depth − n)`
/// and its cells are mapped by their midpoints.
pub fn self_similarity_residual(p: &SystemParams<f64>, x: f64, n: usize, depth: usize, level: u32) -> Result<SelfSimilarity> {
    if n > depth {
        return Err(Error::InvalidParameter(format!("n={n} exceeds depth={depth}")));
    }
    check_level(p.b(), level)?;
    check_budget(p.b(), depth, EXACT_BUDGET)?;
    let b = p.b();
    let child_level = (level as usize).max(depth - n).min(crate::measure::max_level(b) as usize) as u32;
    let lhs = build_mx_exact(p, x, level, depth)?;

    let contraction = p.gamma().powi(n as i32);
    let pieces: Vec<DiscreteMeasure> = (0..(b as u64).pow(n as u32))
        .into_par_iter()
        .map(|idx| {
            let j = lex_word(idx, b, n);
            let offset = p.eval_s(x, &j, Tail::None).value;
            let child = build_mx_exact(p, p.word_point(&j, x), child_level, depth - n)?;
            pushforward_affine(&child, contraction, offset, level)
        })
        .collect::<Result<_>>()?;
    let w = 1.0 / pieces.len() as f64;
    let parts: Vec<(f64, &DiscreteMeasure)> = pieces.iter().map(|m| (w, m)).collect();
    let rhs = mix(&parts)?;
    let residual = lhs.tv_distance(&rhs)?;

    // mass within the midpoint displacement of a level boundary
    let displacement = contraction * 0.5 / scale(b, child_level) * (1.0 + 1e-9) + 1e-15;
    let s = scale(b, level);
    let mut near = 0u64;
    let mut total = 0u64;
    for_each_fiber_value(p, x, depth, |v| {
        let t = v * s;
        let dist = (t - t.floor()).min(t.ceil() - t) / s;
        if dist <= displacement || t == t.floor() {
            near += 1;
        }
        total += 1;
    });
    let bound = if n == 0 { 0.0 } else { near as f64 / total as f64 };
    Ok(SelfSimilarity { residual, bound, child_level })
}

/// The `idx`-th word of `Λ^len` in lexicographic order (first digit most
/// significant), matching [`for_each_fiber_value`].
pub fn lex_word(mut idx: u64, b: u32, len: usize) -> Word {
    let mut d = vec![0u8; len];
    for slot in d.iter_mut().rev() {
        *slot = (idx % b as u64) as u8;
        idx /= b as u64;
    }
    Word::new(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::PeriodicFn;

    fn cos_params() -> SystemParams<f64> {
        SystemParams::new(2, 0.4, PeriodicFn::cos_mode(1, 1.0), 1e-10).unwrap()
    }

    #[test]
    fn zero_and_constant_fibers_are_diracs() {
        let zero = SystemParams::new(2, 0.4, PeriodicFn::zero(), 1e-10).unwrap();
        let m = build_mx_empirical(&zero, 0.3, 12, 10_000, 1).unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 1.0)]);
        let c = 0.7;
        let konst = SystemParams::new(3, 0.5, PeriodicFn::constant(c), 1e-12).unwrap();
        let m = build_mx_empirical(&konst, 0.3, 10, 1000, 1).unwrap();
        assert_eq!(m.len(), 1);
        let (j, _) = m.iter().next().unwrap();
        let target = c / 0.5;
        let cell = crate::measure::BAdicCell::new(3, 10, j);
        assert!((cell.midpoint() - target).abs() <= cell.width());
    }

    #[test]
    fn exact_depth_one() {
        let p = cos_params();
        let x = 0.3;
        let m = build_mx_exact(&p, x, 20, 1).unwrap();
        let expect = DiscreteMeasure::from_weights(
            2,
            20,
            [0.0, 1.0].map(|j| {
                let v = p.phi().eval((x + j) / 2.0);
                (crate::measure::BAdicCell::containing(2, 20, v).index, 0.5)
            }),
        )
        .unwrap();
        assert_eq!(m, expect);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
        assert!(build_mx_exact(&p, x, 10, 27).is_err());
        assert!(build_mx_exact(&p, x, 46, 3).is_err());
    }

    #[test]
    fn enumeration_order_matches_lex_words() {
        let p = cos_params();
        let mut vals = Vec::new();
        for_each_fiber_value(&p, 0.2, 4, |v| vals.push(v));
        for (idx, v) in vals.iter().enumerate() {
            let w = lex_word(idx as u64, 2, 4);
            assert_eq!(*v, p.eval_s(0.2, &w, Tail::None).value);
        }
    }

    #[test]
    fn empirical_agrees_with_exact_within_binomial_error() {
        let p = cos_params();
        let x = 0.37;
        let level = 5;
        let n = 400_000;
        let exact = build_mx_exact(&p, x, level, 22).unwrap();
        let emp = build_mx_empirical(&p, x, level, n, 99).unwrap();
        let keys: std::collections::BTreeSet<i64> = exact.iter().chain(emp.iter()).map(|c| c.0).collect();
        for j in keys {
            let q = exact.weight(j);
            let sigma = (q * (1.0 - q) / n as f64).sqrt();
            // depth-22 truncation moves atoms by < 1e-8, far below a level-5 cell
            assert!((emp.weight(j) - q).abs() <= 3.0 * sigma + 2e-6, "cell {j}");
        }
    }

    #[test]
    fn empirical_is_reproducible() {
        let p = cos_params();
        let a = build_mx_empirical(&p, 0.1, 10, 300_000, 5).unwrap();
        let b = build_mx_empirical(&p, 0.1, 10, 300_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_similarity_trivial_cases() {
        let p = cos_params();
        let r0 = self_similarity_residual(&p, 0.3, 0, 10, 6).unwrap();
        assert_eq!(r0.residual, 0.0);
        let zero = SystemParams::new(2, 0.4, PeriodicFn::zero(), 1e-10).unwrap();
        assert_eq!(self_similarity_residual(&zero, 0.3, 3, 10, 6).unwrap().residual, 0.0);
        assert!(self_similarity_residual(&p, 0.3, 5, 4, 6).is_err());
    }

    #[test]
    fn self_similarity_residual_is_certified() {
        let p = cos_params();
        for depth in [10, 12, 14] {
            let r = self_similarity_residual(&p, 0.3, 3, depth, 6).unwrap();
            assert!(r.residual <= r.bound + 1e-12, "{r:?}");
        }
    }
}
