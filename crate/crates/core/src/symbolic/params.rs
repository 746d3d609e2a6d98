use super::digits::DigitSource;
use super::word::{word_point, Word};
use crate::analytic::PeriodicFn;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// The skew product `T(x, y) = (bx mod 1, γy + φ(x))` together with the
/// tolerance that fixes how far infinite words are unrolled.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams<T> {
    b: u32,
    gamma: T,
    phi: PeriodicFn<T>,
    truncation_tol: T,
    depth: usize,
}

/// How a finite prefix is continued to an infinite word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// Sum over the given digits only.
    None,
    /// Pad with a fixed digit up to the truncation depth.
    Constant(u8),
    /// Pad with seeded uniform digits up to the truncation depth.
    Seeded(u64),
}

/// A truncated series value and the certified distance to the untruncated
/// value of the infinite word.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue<T> {
    pub value: T,
    pub tail_bound: T,
}

impl<T: Scalar> SystemParams<T> {
    pub fn new(b: u32, gamma: T, phi: PeriodicFn<T>, truncation_tol: T) -> Result<Self> {
        if b < 2 {
            return Err(invalid(format!("base b={b} must be at least 2")));
        }
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(invalid(format!("gamma={gamma} must lie in (0,1)")));
        }
        if !(truncation_tol > T::zero()) {
            return Err(invalid("truncation tolerance must be positive"));
        }
        let mut p = Self { b, gamma, phi, truncation_tol, depth: 1 };
        p.depth = p.depth_for(truncation_tol);
        Ok(p)
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn phi(&self) -> &PeriodicFn<T> {
        &self.phi
    }

    pub fn truncation_tol(&self) -> T {
        self.truncation_tol
    }

    /// Number of series terms after which the remaining tail is below the
    /// truncation tolerance.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `M = ‖φ‖_∞ / (1 − γ)`: every fiber value lies in `[−M, M]`.
    pub fn fiber_bound(&self) -> T {
        self.phi.sup_norm(0) / (T::one() - self.gamma)
    }

    /// Smallest `p ≥ 1` with `γ^p M ≤ tol`.
    fn depth_for(&self, tol: T) -> usize {
        let m = self.fiber_bound();
        let mut p = 1usize;
        let mut g = self.gamma;
        while g * m > tol && p < 10_000 {
            g = g * self.gamma;
            p += 1;
        }
        p
    }

    /// Tail bound of the `order`-th derivative series after `depth` terms:
    /// `‖φ^(k)‖ b^{−k} (γ/b^k)^depth / (1 − γ/b^k)`.
    pub fn tail_bound(&self, depth: usize, order: u32) -> T {
        let bk = T::of(self.b as f64).powi(order as i32);
        let ratio = self.gamma / bk;
        self.phi.sup_norm(order) / bk * ratio.powi(depth as i32) / (T::one() - ratio)
    }

    /// The point `w(x)`.
    pub fn word_point(&self, w: &Word, x: T) -> T {
        word_point(w, x, self.b)
    }

    /// `S(x, w) = Σ_{n≥1} γ^{n−1} φ(τ_n(x))` with `τ_n = (τ_{n−1} + w_n)/b`.
    pub fn eval_s(&self, x: T, w: &Word, tail: Tail) -> SeriesValue<T> {
        self.series(x, w, tail, 0)
    }

    /// `S^{(k)}(x, w) = Σ γ^{n−1} b^{−nk} φ^{(k)}(τ_n(x))`.
    pub fn eval_s_deriv(&self, x: T, w: &Word, order: u32, tail: Tail) -> Result<SeriesValue<T>> {
        if order > self.phi.max_order() {
            return Err(invalid(format!(
                "derivative order {order} above maximum {}",
                self.phi.max_order()
            )));
        }
        Ok(self.series(x, w, tail, order))
    }

    fn series(&self, x: T, w: &Word, tail: Tail, order: u32) -> SeriesValue<T> {
        let n = match tail {
            Tail::None => w.len(),
            _ => w.len().max(self.depth),
        };
        let value = match tail {
            Tail::None | Tail::Constant(_) => {
                let pad = if let Tail::Constant(d) = tail { d } else { 0 };
                let digits = w.digits().iter().copied().chain(std::iter::repeat(pad));
                self.sum_terms(x, digits.take(n), order)
            }
            Tail::Seeded(seed) => {
                let mut src = DigitSource::new(self.b, seed);
                let digits = w
                    .digits()
                    .iter()
                    .copied()
                    .chain(std::iter::from_fn(move || Some(src.next_digit())));
                self.sum_terms(x, digits.take(n), order)
            }
        };
        SeriesValue { value, tail_bound: self.tail_bound(n, order) }
    }

    /// Sums the series over an explicit digit stream.
    pub fn sum_terms(&self, x: T, digits: impl Iterator<Item = u8>, order: u32) -> T {
        let bf = T::of(self.b as f64);
        let step = self.gamma / bf.powi(order as i32);
        let mut weight = T::one() / bf.powi(order as i32);
        let mut tau = x;
        let mut acc = T::zero();
        for d in digits {
            tau = (tau + T::of(d as f64)) / bf;
            acc = acc + weight * self.phi.eval_order(tau, order);
            weight = weight * step;
        }
        acc
    }

    /// `|S(x, w·i) − S(x, w) − γ^{|w|} S(w(x), i)|` over finite words.
    pub fn cocycle_residual(&self, x: T, w: &Word, i: &Word) -> T {
        let whole = self.eval_s(x, &w.concat(i), Tail::None).value;
        let head = self.eval_s(x, w, Tail::None).value;
        let rest = self.eval_s(self.word_point(w, x), i, Tail::None).value;
        (whole - head - self.gamma.powi(w.len() as i32) * rest).abs()
    }
}

/// The γ-scale matched to b-scale `n`: the unique integer `n̂` with
/// `γ^n̂ ≤ b^{−n} < γ^{n̂−1}`.
///
/// The logarithmic estimate is checked against a scaled power comparison and
/// corrected by ±1 when rounding put it on the wrong side.
pub fn nhat(n: u32, b: u32, gamma: f64) -> u32 {
    assert!(b >= 2 && gamma > 0.0 && gamma < 1.0, "nhat needs b ≥ 2 and γ ∈ (0,1)");
    let r = n as f64 * (b as f64).ln() / (1.0 / gamma).ln();
    let mut k = r.ceil().max(0.0) as u32;
    // γ^k ≤ b^{−n}  ⇔  γ^k b^n ≤ 1
    let holds = |k: u32| ExtFloat::pow(gamma, k).mul(ExtFloat::pow(b as f64, n)).le_one();
    while !holds(k) {
        k += 1;
    }
    while k > 0 && holds(k - 1) {
        k -= 1;
    }
    k
}

/// `⌊m log_b(1/γ)⌋`: the largest integer `k` with `γ^m b^k ≤ 1`, i.e. the
/// number of b-adic levels spanned by a contraction of `γ^m`.
pub fn level_shift(m: u32, b: u32, gamma: f64) -> u32 {
    assert!(b >= 2 && gamma > 0.0 && gamma < 1.0, "level_shift needs b ≥ 2 and γ ∈ (0,1)");
    let r = m as f64 * (1.0 / gamma).ln() / (b as f64).ln();
    let mut k = r.floor().max(0.0) as u32;
    let holds = |k: u32| ExtFloat::pow(gamma, m).mul(ExtFloat::pow(b as f64, k)).le_one();
    while k > 0 && !holds(k) {
        k -= 1;
    }
    while holds(k + 1) {
        k += 1;
    }
    k
}

/// Mantissa/exponent pair used to compare large powers without overflow.
#[derive(Clone, Copy, Debug)]
struct ExtFloat {
    mant: f64,
    exp: i64,
}

impl ExtFloat {
    fn one() -> Self {
        ExtFloat { mant: 1.0, exp: 0 }
    }

    fn normalize(v: f64, exp: i64) -> Self {
        if v == 0.0 {
            return ExtFloat { mant: 0.0, exp: 0 };
        }
        let e = v.abs().log2().floor() as i64;
        ExtFloat { mant: v * 2f64.powi(-e as i32), exp: exp + e }
    }

    fn mul(self, o: ExtFloat) -> ExtFloat {
        Self::normalize(self.mant * o.mant, self.exp + o.exp)
    }

    fn pow(base: f64, mut k: u32) -> ExtFloat {
        let mut acc = ExtFloat::one();
        let mut sq = Self::normalize(base, 0);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(sq);
            }
            sq = sq.mul(sq);
            k >>= 1;
        }
        acc
    }

    /// `≤ 1`, treating a relative difference under 1e−12 as equality.
    fn le_one(self) -> bool {
        let v = self.mant * 2f64.powi(self.exp.clamp(-1000, 1000) as i32);
        v <= 1.0 + 1e-12
    }
}
