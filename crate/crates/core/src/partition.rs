//! Partitions of finite words by the fiber values they produce, the uniform
//! word measures `θ_n^u`, their images `A_u(ξ)` and `B_q(ξ)`, the
//! decomposition of `m_{x0}` into those images, and entropy tables over
//! word partitions.

use crate::entropy::entropy_of_weights;
use crate::error::{invalid, Result};
use crate::fiber::{build_mx_exact, check_budget, for_each_fiber_value, lex_word, shard_seed, EXACT_BUDGET};
use crate::measure::{check_level, mix, scale, DiscreteMeasure};
use crate::separation::{SeparationScan, TransversalityCertificate, ENUM_BUDGET};
use crate::symbolic::{level_shift, nhat, DigitSource, SystemParams, Tail, Word};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// Class of a word `w` in the level-`n` word partition: its length `m`,
/// the level-`n` cells of `S(w(x0), h)` and `S(w(x0), h')`, and the cell of
/// `S(x0, w)` at level `n + ⌊m log_b(1/γ)⌋`. At `n = 0` the first two cells
/// are dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionKey {
    pub m: u32,
    pub n: u32,
    pub cell1: Option<i128>,
    pub cell2: Option<i128>,
    pub cell3: i128,
    /// Level at which `cell3` is taken.
    pub cell3_level: u32,
}

impl fmt::Display for PartitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |c: Option<i128>| c.map_or_else(|| "*".to_string(), |v| v.to_string());
        write!(f, "{}:{}:{}:{}@{}", self.m, opt(self.cell1), opt(self.cell2), self.cell3, self.n)
    }
}

fn bin(y: f64, b: u32, level: u32) -> i128 {
    (y * scale(b, level)).floor() as i128
}

/// The words and base point that define the partition.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyFrame {
    pub x0: f64,
    pub h: Word,
    pub h_prime: Word,
}

impl From<&TransversalityCertificate> for KeyFrame {
    fn from(c: &TransversalityCertificate) -> Self {
        KeyFrame { x0: c.x0, h: c.h.clone(), h_prime: c.h_prime.clone() }
    }
}

/// Partition class of `w` at level `n` (all series over finite words).
pub fn partition_key(p: &SystemParams<f64>, w: &Word, n: u32, frame: &KeyFrame) -> PartitionKey {
    let b = p.b();
    let m = w.len() as u32;
    let cell3_level = n + level_shift(m, b, p.gamma());
    let cell3 = bin(p.eval_s(frame.x0, w, Tail::None).value, b, cell3_level);
    let (cell1, cell2) = if n == 0 {
        (None, None)
    } else {
        let z = p.word_point(w, frame.x0);
        (
            Some(bin(p.eval_s(z, &frame.h, Tail::None).value, b, n)),
            Some(bin(p.eval_s(z, &frame.h_prime, Tail::None).value, b, n)),
        )
    };
    PartitionKey { m, n, cell1, cell2, cell3, cell3_level }
}

/// A probability measure on finite words.
#[derive(Clone, Debug, PartialEq)]
pub enum WordMeasure {
    /// Explicit weights (normalized on construction).
    Table(Vec<(Word, f64)>),
    /// Uniform on `{w·suffix : w ∈ Λ^prefix_len}`.
    UniformPrefix { base: u32, prefix_len: usize, suffix: Word },
}

impl WordMeasure {
    pub fn from_table(entries: Vec<(Word, f64)>) -> Result<Self> {
        if entries.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("word weights must be finite and nonnegative"));
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if !(total > 0.0) {
            return Err(crate::error::Error::ZeroMass);
        }
        Ok(WordMeasure::Table(entries.into_iter().filter(|e| e.1 > 0.0).map(|(w, v)| (w, v / total)).collect()))
    }

    pub fn single(w: Word) -> Self {
        WordMeasure::Table(vec![(w, 1.0)])
    }

    pub fn support_len(&self) -> usize {
        match self {
            WordMeasure::Table(t) => t.len(),
            WordMeasure::UniformPrefix { base, prefix_len, .. } => (*base as usize).pow(*prefix_len as u32),
        }
    }

    /// The `k`-th support word and its weight.
    pub fn entry(&self, k: usize) -> (Word, f64) {
        match self {
            WordMeasure::Table(t) => t[k].clone(),
            WordMeasure::UniformPrefix { base, prefix_len, suffix } => {
                let w = lex_word(k as u64, *base, *prefix_len).concat(suffix);
                (w, 1.0 / self.support_len() as f64)
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        (0..self.support_len()).map(|k| self.entry(k))
    }

    pub fn total_mass(&self) -> f64 {
        self.iter().map(|e| e.1).sum()
    }
}

/// `θ_n^u`: uniform on `{w·u : w ∈ Λ^{n̂−|u|}}`.
pub fn theta_measure(p: &SystemParams<f64>, u: &Word, n: u32) -> Result<WordMeasure> {
    u.check_base(p.b())?;
    let nh = nhat(n, p.b(), p.gamma()) as usize;
    if nh <= u.len() {
        return Err(invalid(format!("n̂ = {nh} must exceed |u| = {}", u.len())));
    }
    check_budget(p.b(), nh - u.len(), ENUM_BUDGET)?;
    Ok(WordMeasure::UniformPrefix { base: p.b(), prefix_len: nh - u.len(), suffix: u.clone() })
}

/// `A_u(ξ) = Σ ξ(w) δ_{S(x0, w·u)}`, binned at `level`.
pub fn measure_a(p: &SystemParams<f64>, xi: &WordMeasure, u: &Word, x0: f64, level: u32) -> Result<DiscreteMeasure> {
    check_level(p.b(), level)?;
    let b = p.b();
    DiscreteMeasure::from_weights(
        b,
        level,
        xi.iter().map(|(w, weight)| {
            let v = p.eval_s(x0, &w.concat(u), Tail::None).value;
            (bin(v, b, level) as i64, weight)
        }),
    )
}

/// `B_q(ξ)`: the law of `S(x0, w·q·j)` with `w ~ ξ` and `j` uniform, using
/// `tail_samples` seeded tails per support word, each unrolled to the
/// truncation depth.
pub fn measure_b(
    p: &SystemParams<f64>,
    xi: &WordMeasure,
    q: &Word,
    x0: f64,
    level: u32,
    tail_samples: usize,
    seed: u64,
) -> Result<DiscreteMeasure> {
    check_level(p.b(), level)?;
    if tail_samples == 0 {
        return Err(invalid("tail_samples must be positive"));
    }
    let b = p.b();
    let weights: Vec<(i64, f64)> = (0..xi.support_len())
        .into_par_iter()
        .flat_map_iter(|k| {
            let (w, weight) = xi.entry(k);
            let wq = w.concat(q);
            let head = p.eval_s(x0, &wq, Tail::None).value;
            let z = p.word_point(&wq, x0);
            let contraction = p.gamma().powi(wq.len() as i32);
            let mut src = DigitSource::new(b, shard_seed(seed, k as u64));
            let tail_len = p.depth().saturating_sub(wq.len()).max(1);
            (0..tail_samples)
                .map(|_| {
                    let v = head + contraction * p.sum_terms(z, (0..tail_len).map(|_| src.next_digit()), 0);
                    (bin(v, b, level) as i64, weight / tail_samples as f64)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    DiscreteMeasure::from_weights(b, level, weights)
}

/// How the infinite tails in the decomposition are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailMode {
    /// All tails of the given length, so both sides see the same atoms.
    Enumerated(usize),
    /// About `budget` sampled words in total on the mixture side; the direct
    /// side is enumerated to depth `⌊log_b budget⌋`.
    Sampled { budget: usize, seed: u64 },
}

/// Parameters of [`decomposition_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionSetup {
    pub t: u32,
    pub x0: f64,
    pub n: u32,
    pub i_level: u32,
    pub level: u32,
}

/// Result of [`decomposition_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub residual: f64,
    /// Mass of direct-side atoms close enough to a cell boundary to switch
    /// cells under the truncation displacement.
    pub boundary_bound: f64,
    /// `½ √(K/N)` for `K` occupied cells and `N` sampled atoms (zero when
    /// enumerated).
    pub statistical_bound: f64,
    /// `boundary_bound + statistical_bound`.
    pub budget: f64,
    pub prefix_len: usize,
    pub direct_depth: usize,
    pub samples: usize,
}

/// Compares `m_{x0}` with
/// `b^{−2t} Σ_{u,v ∈ Λ^t} b^{−(î−t)} Σ_{q ∈ Λ^{î−t}} B_{v·q}(θ_n^u)`.
pub fn decomposition_check(p: &SystemParams<f64>, setup: &DecompositionSetup, tails: TailMode) -> Result<DecompositionReport> {
    let b = p.b();
    let t = setup.t as usize;
    let nh = nhat(setup.n, b, p.gamma()) as usize;
    let ih = nhat(setup.i_level, b, p.gamma()) as usize;
    if t == 0 || nh <= t || ih < t {
        return Err(invalid(format!("need t ≥ 1, n̂ > t and î ≥ t (t={t}, n̂={nh}, î={ih})")));
    }
    check_level(b, setup.level)?;
    let prefix_len = nh + ih;
    check_budget(b, prefix_len, ENUM_BUDGET)?;
    let bf = b as f64;
    let (direct_depth, per_prefix) = match tails {
        TailMode::Enumerated(r) => (prefix_len + r, 0),
        TailMode::Sampled { budget, .. } => {
            let d = ((budget as f64).ln() / bf.ln()).floor() as usize;
            let per = (budget as f64 / bf.powi(prefix_len as i32)).floor().max(1.0) as usize;
            (d.min(p.depth()).max(1), per)
        }
    };
    check_budget(b, direct_depth, EXACT_BUDGET)?;
    let direct = build_mx_exact(p, setup.x0, setup.level, direct_depth)?;

    let uv: Vec<(Word, Word)> = (0..(b as u64).pow(2 * t as u32))
        .map(|k| (lex_word(k / (b as u64).pow(t as u32), b, t), lex_word(k % (b as u64).pow(t as u32), b, t)))
        .collect();
    let qs: Vec<Word> = (0..(b as u64).pow((ih - t) as u32)).map(|k| lex_word(k, b, ih - t)).collect();
    let mut pieces = Vec::with_capacity(uv.len() * qs.len());
    let mut samples = 0usize;
    for (idx, (u, v)) in uv.iter().enumerate() {
        let theta = theta_measure(p, u, setup.n)?;
        for (qi, q) in qs.iter().enumerate() {
            let vq = v.concat(q);
            let piece = match tails {
                TailMode::Enumerated(r) => {
                    samples += theta.support_len() * (b as usize).pow(r as u32);
                    enumerated_b(p, &theta, &vq, setup.x0, setup.level, r)?
                }
                TailMode::Sampled { seed, .. } => {
                    samples += theta.support_len() * per_prefix;
                    let s = shard_seed(seed, (idx * qs.len() + qi) as u64);
                    measure_b(p, &theta, &vq, setup.x0, setup.level, per_prefix, s)?
                }
            };
            pieces.push(piece);
        }
    }
    let w = 1.0 / pieces.len() as f64;
    let parts: Vec<(f64, &DiscreteMeasure)> = pieces.iter().map(|m| (w, m)).collect();
    let mixture = mix(&parts)?;
    let residual = direct.tv_distance(&mixture)?;

    // both sides approximate the untruncated law; atoms move by at most the
    // truncation tails of the two constructions
    let displacement = p.tail_bound(direct_depth, 0) + p.tail_bound(p.depth().max(prefix_len + 1), 0) + 1e-13;
    let s = scale(b, setup.level);
    let (mut near, mut total) = (0u64, 0u64);
    for_each_fiber_value(p, setup.x0, direct_depth, |y| {
        let v = y * s;
        if (v - v.floor()).min(v.ceil() - v) <= displacement * s {
            near += 1;
        }
        total += 1;
    });
    let boundary_bound = match tails {
        TailMode::Enumerated(_) => 0.0,
        TailMode::Sampled { .. } => near as f64 / total as f64,
    };
    let statistical_bound = match tails {
        TailMode::Enumerated(_) => 0.0,
        TailMode::Sampled { .. } => 0.5 * (mixture.len().max(direct.len()) as f64 / samples as f64).sqrt(),
    };
    Ok(DecompositionReport {
        residual,
        boundary_bound,
        statistical_bound,
        budget: boundary_bound + statistical_bound,
        prefix_len,
        direct_depth,
        samples,
    })
}

/// `B_q(ξ)` with every tail of length `r` instead of sampled tails.
fn enumerated_b(p: &SystemParams<f64>, xi: &WordMeasure, q: &Word, x0: f64, level: u32, r: usize) -> Result<DiscreteMeasure> {
    let b = p.b();
    check_level(b, level)?;
    let tails: Vec<Word> = (0..(b as u64).pow(r as u32)).map(|k| lex_word(k, b, r)).collect();
    let mut weighted = Vec::new();
    for (w, weight) in xi.iter() {
        for j in &tails {
            let full = w.concat(q).concat(j);
            weighted.push((bin(p.eval_s(x0, &full, Tail::None).value, b, level) as i64, weight));
        }
    }
    DiscreteMeasure::from_weights(b, level, weighted)
}

/// One row of [`theta_entropy_table`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaEntropyRow {
    pub n: u32,
    pub nhat: u32,
    pub support: usize,
    /// `(1/n) H(θ_n^a, L_0)`.
    pub coarse: f64,
    /// `(1/n) H(θ_n^a, L_{⌈Cn⌉})`.
    pub fine: f64,
    pub fine_level: u32,
    /// `(n̂ − t)/n`: the counting ceiling of `fine`.
    pub ceiling: f64,
    /// Number of distinct fine classes.
    pub fine_classes: usize,
}

fn key_entropy(mut keys: Vec<PartitionKey>, b: u32) -> (f64, usize) {
    keys.par_sort_unstable();
    let n = keys.len() as f64;
    let mut counts = Vec::new();
    let mut run = 1u64;
    for w in keys.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            counts.push(run);
            run = 1;
        }
    }
    if !keys.is_empty() {
        counts.push(run);
    }
    let classes = counts.len();
    (entropy_of_weights(counts.into_iter().map(|c| c as f64 / n), b), classes)
}

/// Normalized entropies of `θ_n^a` over the coarse and fine word partitions
/// for each `n`.
pub fn theta_entropy_table(
    p: &SystemParams<f64>,
    cert: &TransversalityCertificate,
    n_list: &[u32],
    c: f64,
) -> Result<Vec<ThetaEntropyRow>> {
    if !(c > 0.0) {
        return Err(invalid("C must be positive"));
    }
    let frame = KeyFrame::from(cert);
    n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(invalid("n must be positive"));
            }
            let theta = theta_measure(p, &cert.a, n)?;
            let fine_level = (c * n as f64).ceil() as u32;
            let (coarse_keys, fine_keys): (Vec<_>, Vec<_>) = (0..theta.support_len())
                .into_par_iter()
                .map(|k| {
                    let (w, _) = theta.entry(k);
                    (partition_key(p, &w, 0, &frame), partition_key(p, &w, fine_level, &frame))
                })
                .unzip();
            let (h0, _) = key_entropy(coarse_keys, p.b());
            let (h1, classes) = key_entropy(fine_keys, p.b());
            let nh = nhat(n, p.b(), p.gamma());
            Ok(ThetaEntropyRow {
                n,
                nhat: nh,
                support: theta.support_len(),
                coarse: h0 / n as f64,
                fine: h1 / n as f64,
                fine_level,
                ceiling: (nh - cert.t) as f64 / n as f64,
                fine_classes: classes,
            })
        })
        .collect()
}

/// Smallest `C` for which every scanned gap spans at least one cell of
/// `L_{Cn + ⌊n̂ log_b(1/γ)⌋}`, so separated values get distinct fine keys.
/// Uses a scan over suffixes of length `t` at the certificate's base point.
pub fn scale_constant_from_scan(p: &SystemParams<f64>, scan: &SeparationScan) -> Result<f64> {
    let b = p.b() as f64;
    let mut c = 0.0f64;
    for ((&n, &nh), &gap) in scan.n_list.iter().zip(&scan.word_lengths).zip(&scan.min_gaps) {
        if !gap.is_finite() {
            continue;
        }
        if gap <= 0.0 {
            return Err(crate::error::Error::Degenerate(format!("zero gap at n={n}: no scale separates the values")));
        }
        let shift = level_shift(nh, p.b(), p.gamma()) as f64;
        c = c.max((-gap.ln() / b.ln() - shift) / n as f64);
    }
    Ok(c.max(f64::EPSILON))
}
