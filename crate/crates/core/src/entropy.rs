//! Base-b Shannon entropy on b-adic partitions, the entropy-slope dimension
//! estimator, entropy porosity and convolution entropy growth.

use crate::error::{invalid, Error, Result};
use crate::measure::{convolve, scale, stable_sum, DiscreteMeasure};
use crate::regression::least_squares;
use rayon::prelude::*;
use serde::Serialize;

/// `Σ −p log_b p` over nonnegative weights (`0 · log 0 = 0`).
pub fn entropy_of_weights(weights: impl IntoIterator<Item = f64>, b: u32) -> f64 {
    let terms = weights.into_iter().filter(|&p| p > 0.0);
    let h = if b == 2 {
        stable_sum(terms.map(|p| -p * p.log2()))
    } else {
        let lb = (b as f64).ln();
        stable_sum(terms.map(|p| -p * p.ln() / lb))
    };
    // a single atom gives −1·log 1 = −0
    h.max(0.0)
}

/// Converts a base-`b` entropy to nats.
pub fn to_nats(h: f64, b: u32) -> f64 {
    h * (b as f64).ln()
}

/// `H(μ, L_level)` in base `b`.
pub fn entropy(mu: &DiscreteMeasure, level: u32) -> Result<f64> {
    if level > mu.level() {
        return Err(invalid(format!("entropy level {level} finer than measure level {}", mu.level())));
    }
    Ok(entropy_of_weights(mu.coarse_weights(level), mu.base()))
}

/// `H(μ, L_fine | L_coarse) = H(μ, L_fine) − H(μ, L_coarse)`.
pub fn cond_entropy(mu: &DiscreteMeasure, fine_level: u32, coarse_level: u32) -> Result<f64> {
    if fine_level < coarse_level {
        return Err(invalid(format!("fine level {fine_level} below coarse level {coarse_level}")));
    }
    Ok(entropy(mu, fine_level)? - entropy(mu, coarse_level)?)
}

/// Entropies of one measure over a window of levels and their regression line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyProfile {
    pub levels: Vec<u32>,
    /// `H(μ, L_n)` in base `b`, one per level.
    pub entropies: Vec<f64>,
    /// Least-squares slope of entropy against level: the dimension estimate.
    pub slope: f64,
    pub intercept: f64,
    pub slope_window: (u32, u32),
    pub residuals: Vec<f64>,
    /// `H(n_{i+1}) − H(n_i)` divided by the level step.
    pub increments: Vec<f64>,
}

fn check_window(levels: &[u32]) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::Degenerate(format!("slope window needs at least 3 levels, got {}", levels.len())));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Degenerate("levels must be strictly increasing".into()));
    }
    Ok(())
}

/// Entropy profile of a fixed measure over `levels` (each at most its level).
pub fn profile_of(mu: &DiscreteMeasure, levels: &[u32]) -> Result<EntropyProfile> {
    check_window(levels)?;
    let entropies: Vec<f64> = levels.par_iter().map(|&n| entropy(mu, n)).collect::<Result<_>>()?;
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let fit = least_squares(&xs, &entropies)?;
    let increments = levels
        .windows(2)
        .zip(entropies.windows(2))
        .map(|(l, h)| (h[1] - h[0]) / (l[1] - l[0]) as f64)
        .collect();
    Ok(EntropyProfile {
        levels: levels.to_vec(),
        entropies,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_window: (levels[0], levels[levels.len() - 1]),
        residuals: fit.residuals,
        increments,
    })
}

/// Dimension estimate from the slope of `n ↦ H(μ, L_n)`.
///
/// The builder is called once at the finest level; coarser levels are read
/// off by coarsening, which agrees exactly with binning at those levels.
pub fn dimension_estimate(
    mu_builder: impl FnOnce(u32) -> Result<DiscreteMeasure>,
    levels: &[u32],
) -> Result<EntropyProfile> {
    check_window(levels)?;
    let finest = *levels.iter().max().expect("nonempty window");
    let mu = mu_builder(finest)?;
    if mu.level() < finest {
        return Err(Error::Degenerate(format!("builder returned level {} below {finest}", mu.level())));
    }
    profile_of(&mu, levels)
}

/// Outcome of [`porosity_fraction`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PorosityReport {
    pub h: f64,
    pub delta: f64,
    pub m: u32,
    pub n1: u32,
    pub n2: u32,
    /// Mass-weighted share of components with low entropy, averaged over levels.
    pub fraction: f64,
    /// The per-level shares whose mean is `fraction`.
    pub per_level: Vec<f64>,
    /// `fraction > 1 − delta`.
    pub verdict: bool,
}

/// Fraction of level-`i` components `μ_Q`, `i ∈ [n1, n2]`, with
/// `(1/m) H(μ_Q, L_{i+m}) < h + δ`. Components are weighted by `μ(Q)` and
/// levels are averaged uniformly.
pub fn porosity_fraction(mu: &DiscreteMeasure, h: f64, delta: f64, m: u32, n1: u32, n2: u32) -> Result<PorosityReport> {
    if m == 0 || n1 > n2 || !(delta > 0.0) {
        return Err(invalid(format!("porosity needs m ≥ 1, n1 ≤ n2 and δ > 0 (m={m}, n1={n1}, n2={n2}, δ={delta})")));
    }
    if n2 + m > mu.level() {
        return Err(invalid(format!(
            "measure level {} cannot resolve components to level {}",
            mu.level(),
            n2 + m
        )));
    }
    let b = mu.base();
    let per_level: Vec<f64> = (n1..=n2)
        .into_par_iter()
        .map(|i| {
            let fine = mu.coarsen(i + m)?;
            let div = (b as i64).pow(m);
            let mut low = Vec::new();
            let mut group: Vec<f64> = Vec::new();
            let mut current = None;
            let mut flush = |group: &mut Vec<f64>| {
                if group.is_empty() {
                    return;
                }
                let mass = stable_sum(group.iter().copied());
                let hq = entropy_of_weights(group.iter().map(|w| w / mass), b) / m as f64;
                if hq < h + delta {
                    low.push(mass);
                }
                group.clear();
            };
            for (j, w) in fine.iter() {
                let parent = j.div_euclid(div);
                if current != Some(parent) {
                    flush(&mut group);
                    current = Some(parent);
                }
                group.push(w);
            }
            flush(&mut group);
            Ok(stable_sum(low.into_iter()).min(1.0))
        })
        .collect::<Result<_>>()?;
    let fraction = per_level.iter().sum::<f64>() / per_level.len() as f64;
    Ok(PorosityReport { h, delta, m, n1, n2, fraction, per_level, verdict: fraction > 1.0 - delta })
}

/// Outcome of [`entropy_growth_experiment`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub level: u32,
    pub h_tau: f64,
    pub h_conv: f64,
    /// `(H(θ∗τ) − H(τ)) / k` at level `n + k`.
    pub gain: f64,
}

/// Entropy gain of `τ` under convolution with `θ` at level `n + k`, for
/// measures supported on sets of diameter at most `b^{−n}`.
pub fn entropy_growth_experiment(theta: &DiscreteMeasure, tau: &DiscreteMeasure, n: u32, k: u32) -> Result<GrowthRecord> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let b = theta.base();
    let limit = 1.0 / scale(b, n) * (1.0 + 1e-12);
    for (name, mu) in [("theta", theta), ("tau", tau)] {
        if mu.support_diameter() > limit {
            return Err(invalid(format!(
                "{name} support diameter {} exceeds b^-n = {}",
                mu.support_diameter(),
                1.0 / scale(b, n)
            )));
        }
    }
    let level = n + k;
    let h_tau = entropy(tau, level)?;
    let conv = convolve(theta, tau, level)?;
    let h_conv = entropy(&conv, level)?;
    Ok(GrowthRecord { level, h_tau, h_conv, gain: (h_conv - h_tau) / k as f64 })
}
