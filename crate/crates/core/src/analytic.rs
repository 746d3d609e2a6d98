//! Real-analytic 1-periodic functions, represented as finite trigonometric
//! polynomials
//!
//! ```text
//! f(x) = Σ_{k=0..K} a_k cos(2πkx) + b_k sin(2πkx)
//! ```
//!
//! Derivatives are evaluated term by term and sup norms are bounded by the
//! absolute coefficient sums, so every bound reported here is certified.

use crate::error::{invalid, Result};
use crate::scalar::{frac, Scalar};
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Highest derivative order accepted by [`PeriodicFn::eval_deriv`] unless
/// configured otherwise.
pub const DEFAULT_MAX_ORDER: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFn<T> {
    cos: Vec<T>,
    sin: Vec<T>,
    max_order: u32,
}

impl<T: Scalar> PeriodicFn<T> {
    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn constant(c: T) -> Self {
        Self {
            cos: vec![c],
            sin: vec![T::zero()],
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    /// `amp · cos(2πkx)`
    pub fn cos_mode(k: usize, amp: T) -> Self {
        let mut f = Self::with_degree(k);
        f.cos[k] = amp;
        f
    }

    /// `amp · sin(2πkx)`
    pub fn sin_mode(k: usize, amp: T) -> Self {
        let mut f = Self::with_degree(k);
        if k > 0 {
            f.sin[k] = amp;
        }
        f
    }

    fn with_degree(k: usize) -> Self {
        Self {
            cos: vec![T::zero(); k + 1],
            sin: vec![T::zero(); k + 1],
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    /// Builds a function from `(k, a_k, b_k)` triples. Repeated frequencies
    /// accumulate; `b_0` must be zero.
    pub fn from_triples(triples: &[(usize, f64, f64)]) -> Result<Self> {
        let degree = triples.iter().map(|t| t.0).max().unwrap_or(0);
        let mut f = Self::with_degree(degree);
        for &(k, a, b) in triples {
            if !a.is_finite() || !b.is_finite() {
                return Err(invalid(format!("non-finite coefficient at k={k}")));
            }
            if k == 0 && b != 0.0 {
                return Err(invalid("sine coefficient b_0 must be zero"));
            }
            f.cos[k] = f.cos[k] + T::of(a);
            f.sin[k] = f.sin[k] + T::of(b);
        }
        Ok(f)
    }

    /// Nonzero coefficients as `(k, a_k, b_k)` triples, in increasing `k`.
    pub fn triples(&self) -> Vec<(usize, f64, f64)> {
        (0..=self.degree())
            .filter(|&k| self.cos[k] != T::zero() || self.sin[k] != T::zero())
            .map(|k| (k, self.cos[k].as_f64(), self.sin[k].as_f64()))
            .collect()
    }

    pub fn with_max_order(mut self, max_order: u32) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn cos_coeff(&self, k: usize) -> T {
        self.cos.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn sin_coeff(&self, k: usize) -> T {
        self.sin.get(k).copied().unwrap_or_else(T::zero)
    }

    /// True when every non-constant coefficient vanishes.
    pub fn is_constant(&self) -> bool {
        (1..=self.degree()).all(|k| self.cos[k] == T::zero() && self.sin[k] == T::zero())
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_order(x, 0)
    }

    /// `order`-th derivative at `x`. Rejects orders above [`Self::max_order`].
    pub fn eval_deriv(&self, x: T, order: u32) -> Result<T> {
        if order > self.max_order {
            return Err(invalid(format!(
                "derivative order {order} above maximum {}",
                self.max_order
            )));
        }
        Ok(self.eval_order(x, order))
    }

    /// Unchecked derivative evaluation; callers guarantee `order` is sane.
    pub(crate) fn eval_order(&self, x: T, order: u32) -> T {
        let mut acc = if order == 0 { self.cos[0] } else { T::zero() };
        let degree = self.degree();
        if degree == 0 {
            return acc;
        }
        let two_pi = T::TAU();
        if degree == 1 && (self.cos[1] == T::zero() || self.sin[1] == T::zero()) {
            // a single pure mode needs one trigonometric call
            let theta = two_pi * frac(x);
            let scale = two_pi.powi(order as i32);
            let (a, b) = (self.cos[1], self.sin[1]);
            let v = if b == T::zero() {
                match order % 4 {
                    0 => a * theta.cos(),
                    1 => -a * theta.sin(),
                    2 => -a * theta.cos(),
                    _ => a * theta.sin(),
                }
            } else {
                match order % 4 {
                    0 => b * theta.sin(),
                    1 => b * theta.cos(),
                    2 => -b * theta.sin(),
                    _ => -b * theta.cos(),
                }
            };
            return acc + scale * v;
        }
        let (s1, c1) = (two_pi * frac(x)).sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        for k in 1..=degree {
            let a = self.cos[k];
            let b = self.sin[k];
            if a != T::zero() || b != T::zero() {
                // d^q/dx^q of cos/sin rotates the phase by qπ/2
                let (dc, ds) = match order % 4 {
                    0 => (ck, sk),
                    1 => (-sk, ck),
                    2 => (-ck, -sk),
                    _ => (sk, -ck),
                };
                let scale = (two_pi * T::of(k as f64)).powi(order as i32);
                acc = acc + scale * (a * dc + b * ds);
            }
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
        }
        acc
    }

    /// Certified upper bound `Σ (2πk)^order (|a_k| + |b_k|)` for the sup norm
    /// of the `order`-th derivative.
    pub fn sup_norm(&self, order: u32) -> T {
        let two_pi = T::TAU();
        (0..=self.degree())
            .map(|k| {
                let w = if k == 0 {
                    if order == 0 {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    (two_pi * T::of(k as f64)).powi(order as i32)
                };
                w * (self.cos[k].abs() + self.sin[k].abs())
            })
            .fold(T::zero(), |a, b| a + b)
    }

    /// `x ↦ f(m·x)` for a positive integer `m`.
    pub fn dilate(&self, m: usize) -> Self {
        assert!(m >= 1, "dilation factor must be positive");
        let mut out = Self::with_degree(self.degree() * m);
        for k in 0..=self.degree() {
            out.cos[k * m] = self.cos[k];
            out.sin[k * m] = self.sin[k];
        }
        out.max_order = self.max_order;
        out
    }

    /// `self + s · other`
    pub fn add_scaled(&self, other: &Self, s: T) -> Self {
        let degree = self.degree().max(other.degree());
        let mut out = Self::with_degree(degree);
        for k in 0..=degree {
            out.cos[k] = self.cos_coeff(k) + s * other.cos_coeff(k);
            out.sin[k] = self.sin_coeff(k) + s * other.sin_coeff(k);
        }
        out.max_order = self.max_order;
        out
    }
}

/// The coboundary `φ(x) = ψ(bx) − γψ(x)`.
///
/// For this φ the fiber series telescopes to `S(x, j) = ψ(x)` for every
/// infinite word `j`, so every fiber collapses onto the graph of ψ.
pub fn cohomological_phi<T: Scalar>(psi: &PeriodicFn<T>, b: u32, gamma: T) -> Result<PeriodicFn<T>> {
    if b < 2 {
        return Err(invalid(format!("base b={b} must be at least 2")));
    }
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(invalid(format!("gamma={gamma} must lie in (0,1)")));
    }
    Ok(psi.dilate(b as usize).add_scaled(psi, -gamma))
}

impl<T: Scalar> Serialize for PeriodicFn<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.triples().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for PeriodicFn<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<(usize, f64, f64)>::deserialize(d)?;
        Self::from_triples(&triples).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn cos1() -> PeriodicFn<f64> {
        PeriodicFn::cos_mode(1, 1.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(PeriodicFn::<f64>::zero().eval(0.37), 0.0);
        assert_eq!(cos1().eval(0.0), 1.0);
        assert!(cos1().eval(0.25).abs() < 1e-12);
    }

    #[test]
    fn eval_is_periodic() {
        let f = PeriodicFn::<f64>::from_triples(&[(1, 0.3, -1.2), (3, 0.5, 0.25)]).unwrap();
        for x in [0.0, 0.123, 0.5, 0.999] {
            assert!((f.eval(x) - f.eval(x + 1.0)).abs() < 1e-12);
            assert!((f.eval(x) - f.eval(x - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_examples() {
        let f = cos1();
        assert!(f.eval_deriv(0.0, 1).unwrap().abs() < 1e-12);
        assert!((f.eval_deriv(0.25, 1).unwrap() + TAU).abs() < 1e-9);
        assert_eq!(f.eval_deriv(0.3, 0).unwrap(), f.eval(0.3));
        assert!(f.eval_deriv(0.3, 9).is_err());
        assert!(f.clone().with_max_order(12).eval_deriv(0.3, 12).is_ok());
    }

    #[test]
    fn second_derivative_of_sine_matches_finite_difference() {
        let f = PeriodicFn::<f64>::sin_mode(1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-4;
        for _ in 0..10 {
            let x: f64 = rng.random();
            let fd = (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h);
            let exact = -(TAU * TAU) * (TAU * x).sin();
            assert!((fd - exact).abs() < 1e-4 * TAU * TAU, "fd oracle drift at {x}");
            assert!((f.eval_deriv(x, 2).unwrap() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn derivatives_agree_with_central_differences() {
        let f = PeriodicFn::<f64>::from_triples(&[(0, 0.2, 0.0), (1, 1.0, 0.5), (2, -0.3, 0.7)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..50 {
            let x: f64 = rng.random();
            for k in 1..=3 {
                let fd = (f.eval_deriv(x + h, k - 1).unwrap() - f.eval_deriv(x - h, k - 1).unwrap()) / (2.0 * h);
                let d = f.eval_deriv(x, k).unwrap();
                let scale = f.sup_norm(k);
                assert!((fd - d).abs() <= 1e-5 * scale, "order {k} at {x}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(cos1().sup_norm(0), 1.0);
        assert!((cos1().sup_norm(1) - TAU).abs() < 1e-12);
        let f = PeriodicFn::<f64>::from_triples(&[(1, 3.0, 0.0), (2, 0.0, 4.0)]).unwrap();
        assert_eq!(f.sup_norm(0), 7.0);
    }

    #[test]
    fn cohomological_examples() {
        let zero = cohomological_phi(&PeriodicFn::<f64>::zero(), 2, 0.4).unwrap();
        assert!(zero.triples().is_empty());
        let phi = cohomological_phi(&cos1(), 2, 0.4).unwrap();
        assert_eq!(phi.triples(), vec![(1, -0.4, 0.0), (2, 1.0, 0.0)]);
        assert!(cohomological_phi(&cos1(), 1, 0.4).is_err());
        assert!(cohomological_phi(&cos1(), 2, 1.0).is_err());
    }

    #[test]
    fn triples_round_trip_through_toml() {
        #[derive(Serialize, Deserialize)]
        struct Wrap {
            phi: PeriodicFn<f64>,
        }
        let f = PeriodicFn::<f64>::from_triples(&[(0, 0.5, 0.0), (1, 1.0, -0.25), (4, 0.0, 2.0)]).unwrap();
        let text = toml::to_string(&Wrap { phi: f.clone() }).unwrap();
        let back: Wrap = toml::from_str(&text).unwrap();
        assert_eq!(back.phi, f);
    }

    #[test]
    fn rejects_bad_triples() {
        assert!(PeriodicFn::<f64>::from_triples(&[(0, 1.0, 2.0)]).is_err());
        assert!(PeriodicFn::<f64>::from_triples(&[(1, f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn f32_evaluation_tracks_f64() {
        let f32fn = PeriodicFn::<f32>::from_triples(&[(1, 1.0, 0.5), (2, 0.25, 0.0)]).unwrap();
        let f64fn = PeriodicFn::<f64>::from_triples(&[(1, 1.0, 0.5), (2, 0.25, 0.0)]).unwrap();
        for x in [0.1, 0.4, 0.77] {
            assert!((f32fn.eval(x as f32) as f64 - f64fn.eval(x)).abs() < 1e-5);
        }
    }

    proptest::proptest! {
        #[test]
        fn derivative_bounded_by_sup_norm(
            coeffs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..5),
            x in 0.0f64..1.0,
            order in 0u32..5,
        ) {
            let triples: Vec<_> = coeffs.iter().enumerate().map(|(k, &(a, b))| (k, a, if k == 0 { 0.0 } else { b })).collect();
            let f = PeriodicFn::<f64>::from_triples(&triples).unwrap();
            let v = f.eval_deriv(x, order).unwrap();
            proptest::prop_assert!(v.abs() <= f.sup_norm(order) * (1.0 + 1e-12) + 1e-12);
        }
    }
}
