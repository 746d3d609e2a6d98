use super::params::SystemParams;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;

/// Low-bit refresh applied to the base coordinate while iterating.
///
/// `x ↦ bx mod 1` shifts the information in `x` out of the top of any finite
/// representation, so after enough steps the orbit only sees the zero bits
/// the representation was padded with. Every `every` steps the lowest
/// `low_bits` bits of the 64-bit fixed-point `x` are replaced with fresh
/// random bits. Lebesgue measure is invariant for the base map, so the
/// empirical statistics are unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReseedPolicy {
    pub every: u32,
    pub low_bits: u32,
}

impl Default for ReseedPolicy {
    fn default() -> Self {
        ReseedPolicy { every: 40, low_bits: 40 }
    }
}

/// Iterator over `T^k(z0)` with the base coordinate kept as an exact 64-bit
/// fixed-point fraction, so `frac(bx)` is a wrapping multiplication.
pub struct Orbit<'a, T> {
    params: &'a SystemParams<T>,
    x: u64,
    y: T,
    rng: ChaCha8Rng,
    reseed: Option<ReseedPolicy>,
    step: u32,
}

const TWO_POW_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline]
fn fixed_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * TWO_POW_NEG_53
}

fn unit_to_fixed(x: f64) -> u64 {
    let f = x - x.floor();
    (f * 18_446_744_073_709_551_616.0) as u64
}

impl<'a, T: Scalar> Orbit<'a, T> {
    pub fn new(params: &'a SystemParams<T>, z0: (f64, T), seed: u64, reseed: Option<ReseedPolicy>) -> Self {
        Orbit {
            params,
            x: unit_to_fixed(z0.0),
            y: z0.1,
            rng: ChaCha8Rng::seed_from_u64(seed),
            reseed,
            step: 0,
        }
    }

    /// Current point.
    pub fn point(&self) -> (f64, T) {
        (fixed_to_unit(self.x), self.y)
    }

    /// Advances one step of `T`.
    #[inline]
    pub fn advance(&mut self) {
        let x = T::of(fixed_to_unit(self.x));
        self.y = self.params.gamma() * self.y + self.params.phi().eval(x);
        self.x = self.x.wrapping_mul(self.params.b() as u64);
        self.step += 1;
        if let Some(policy) = self.reseed {
            if policy.every > 0 && self.step % policy.every == 0 && policy.low_bits > 0 {
                let mask = if policy.low_bits >= 64 { u64::MAX } else { (1u64 << policy.low_bits) - 1 };
                let fresh: u64 = self.rng.random();
                self.x = (self.x & !mask) | (fresh & mask);
            }
        }
    }
}

impl<T: Scalar> Iterator for Orbit<'_, T> {
    type Item = (f64, T);

    fn next(&mut self) -> Option<(f64, T)> {
        self.advance();
        Some(self.point())
    }
}

/// Orbit points kept after burn-in.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSample<T> {
    pub points: Vec<(f64, T)>,
    pub burn_in: usize,
    pub seed: u64,
}

impl<T: Scalar> OrbitSample<T> {
    /// Two-column comma-separated table `x,y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in &self.points {
            writeln!(out, "{x:.17e},{:.17e}", y.as_f64())?;
        }
        Ok(())
    }
}

/// Iterates `T` from `z0`, discards `n_burn` points and keeps the next
/// `n_keep`, using the default reseeding policy.
pub fn iterate_t<T: Scalar>(
    params: &SystemParams<T>,
    z0: (f64, T),
    n_burn: usize,
    n_keep: usize,
    seed: u64,
) -> Result<OrbitSample<T>> {
    iterate_t_with(params, z0, n_burn, n_keep, seed, Some(ReseedPolicy::default()))
}

pub fn iterate_t_with<T: Scalar>(
    params: &SystemParams<T>,
    z0: (f64, T),
    n_burn: usize,
    n_keep: usize,
    seed: u64,
    reseed: Option<ReseedPolicy>,
) -> Result<OrbitSample<T>> {
    if n_keep == 0 {
        return Err(invalid("n_keep must be at least 1"));
    }
    let mut orbit = Orbit::new(params, z0, seed, reseed);
    for _ in 0..n_burn {
        orbit.advance();
    }
    let points = orbit.take(n_keep).collect();
    Ok(OrbitSample { points, burn_in: n_burn, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::PeriodicFn;

    #[test]
    fn pure_contraction() {
        let p = SystemParams::new(2, 0.4, PeriodicFn::zero(), 1e-9).unwrap();
        let s = iterate_t_with(&p, (0.0, 1.0), 0, 30, 1, None).unwrap();
        for (k, (_, y)) in s.points.iter().enumerate() {
            assert!((y - 0.4f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_fixed_point() {
        let c: f64 = 0.9;
        let g = 0.7;
        let p = SystemParams::new(3, g, PeriodicFn::constant(c), 1e-9).unwrap();
        let fixed = c / (1.0 - g);
        let s = iterate_t(&p, (0.123, fixed), 10, 500, 4).unwrap();
        assert!(s.points.iter().all(|&(_, y)| (y - fixed).abs() < 1e-12));
    }

    #[test]
    fn orbit_stays_in_invariant_band() {
        let p = SystemParams::<f64>::new(2, 0.4, PeriodicFn::cos_mode(1, 1.0), 1e-9).unwrap();
        let m = p.fiber_bound();
        let s = iterate_t(&p, (0.3, 0.0), 100, 100_000, 8).unwrap();
        assert!(s.points.iter().all(|&(x, y)| (0.0..1.0).contains(&x) && y.abs() <= m));
    }

    #[test]
    fn reseeding_keeps_base_orbit_alive() {
        let p = SystemParams::new(2, 0.4, PeriodicFn::cos_mode(1, 1.0), 1e-9).unwrap();
        let dead = iterate_t_with(&p, (0.3, 0.0), 0, 200, 1, None).unwrap();
        assert!(dead.points[150..].iter().all(|&(x, _)| x == 0.0));
        let live = iterate_t(&p, (0.3, 0.0), 0, 100_000, 1).unwrap();
        let mean = live.points.iter().map(|p| p.0).sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.01, "x-marginal mean {mean}");
    }

    #[test]
    fn deterministic_and_exportable() {
        let p = SystemParams::new(3, 0.5, PeriodicFn::cos_mode(1, 1.0), 1e-9).unwrap();
        let a = iterate_t(&p, (0.2, 0.0), 5, 100, 7).unwrap();
        let b = iterate_t(&p, (0.2, 0.0), 5, 100, 7).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 101);
        assert!(iterate_t(&p, (0.2, 0.0), 5, 0, 7).is_err());
    }
}
