//! Numeric evidence for non-degeneracy of the fiber series: minimum gaps
//! between finite-scale fiber values, exponential separation scans,
//! derivative separation, the (H)/(H*) dichotomy and transversality
//! certificates on base cells.

use crate::error::{invalid, Error, Result};
use crate::fiber::{check_budget, lex_word};
use crate::symbolic::{nhat, sample_words, SystemParams, Tail, Word};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest number of words enumerated by one scan.
pub const ENUM_BUDGET: f64 = 16_777_216.0;

/// Grid points per base cell used by default in interval lower bounds.
pub const DEFAULT_GRID: usize = 1 << 10;

/// `S(x, j·w)` for every `j ∈ Λ^prefix_len`, in lexicographic order of `j`.
pub fn suffix_values(p: &SystemParams<f64>, x: f64, prefix_len: usize, w: &Word) -> Result<Vec<f64>> {
    check_budget(p.b(), prefix_len, ENUM_BUDGET)?;
    w.check_base(p.b())?;
    let mut out = Vec::with_capacity((p.b() as usize).pow(prefix_len as u32));
    let bf = p.b() as f64;
    fn walk(p: &SystemParams<f64>, bf: f64, tau: f64, acc: f64, weight: f64, left: usize, w: &Word, out: &mut Vec<f64>) {
        if left == 0 {
            out.push(acc + weight * p.sum_terms(tau, w.digits().iter().copied(), 0));
            return;
        }
        for d in 0..p.b() {
            let t = (tau + d as f64) / bf;
            walk(p, bf, t, acc + weight * p.phi().eval(t), weight * p.gamma(), left - 1, w, out);
        }
    }
    walk(p, bf, x, 0.0, 1.0, prefix_len, w, &mut out);
    Ok(out)
}

fn min_adjacent_gap(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.windows(2).map(|v| v[1] - v[0]).fold(f64::INFINITY, f64::min)
}

/// Minimum pairwise distance within `{S(x, j·w) : j ∈ Λ^{n−|w|}}`.
pub fn min_gap(p: &SystemParams<f64>, x: f64, w: &Word, n: usize) -> Result<f64> {
    if n <= w.len() {
        return Err(invalid(format!("word length {n} must exceed suffix length {}", w.len())));
    }
    Ok(min_adjacent_gap(suffix_values(p, x, n - w.len(), w)?))
}

/// Which suffixes `w ∈ Λ^ℓ` a scan visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuffixSelection {
    All,
    Sampled { count: usize, seed: u64 },
}

/// Result of [`exp_separation_scan`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationScan {
    pub x: f64,
    pub ell: usize,
    pub epsilon: f64,
    pub n_list: Vec<u32>,
    /// `n̂` for each `n`: the word length whose value set is tested.
    pub word_lengths: Vec<u32>,
    /// Minimum over suffixes of the minimum gap, per `n` (`∞` when the value
    /// set is a single point).
    pub min_gaps: Vec<f64>,
    /// Suffix attaining each minimum.
    pub worst_suffix: Vec<Option<Word>>,
    pub thresholds: Vec<f64>,
    pub passing: Vec<u32>,
    /// Largest `ε` for which every listed `n` passes: `min_n gap_n^{1/n̂}`.
    pub empirical_epsilon: f64,
    /// True when only a sample of suffixes was examined.
    pub sampled: bool,
}

/// Tests `|p − q| ≥ ε^{n̂}` on `X_{n̂} = {S(x, j·w) : j ∈ Λ^{n̂−ℓ}}` for each
/// `n` and each suffix `w ∈ Λ^ℓ`.
pub fn exp_separation_scan(
    p: &SystemParams<f64>,
    x: f64,
    ell: usize,
    epsilon: f64,
    n_list: &[u32],
    selection: SuffixSelection,
) -> Result<SeparationScan> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let b = p.b();
    let suffixes: Vec<Word> = match selection {
        SuffixSelection::All => {
            check_budget(b, ell, ENUM_BUDGET)?;
            (0..(b as u64).pow(ell as u32)).map(|i| lex_word(i, b, ell)).collect()
        }
        SuffixSelection::Sampled { count, seed } => sample_words(b, ell, count, seed).collect(),
    };
    let mut scan = SeparationScan {
        x,
        ell,
        epsilon,
        n_list: n_list.to_vec(),
        word_lengths: Vec::new(),
        min_gaps: Vec::new(),
        worst_suffix: Vec::new(),
        thresholds: Vec::new(),
        passing: Vec::new(),
        empirical_epsilon: f64::INFINITY,
        sampled: matches!(selection, SuffixSelection::Sampled { .. }),
    };
    for &n in n_list {
        let nh = nhat(n, b, p.gamma());
        let (gap, worst) = if nh as usize <= ell {
            (f64::INFINITY, None)
        } else {
            let gaps: Vec<f64> = suffixes
                .par_iter()
                .map(|w| min_gap(p, x, w, nh as usize))
                .collect::<Result<_>>()?;
            let (i, g) = gaps
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc });
            (g, Some(suffixes[i].clone()))
        };
        let threshold = epsilon.powi(nh as i32);
        if gap >= threshold {
            scan.passing.push(n);
        }
        if gap.is_finite() {
            // round down so that the reported ε passes its own test
            let mut e = gap.powf(1.0 / nh as f64);
            while e > 0.0 && e.powi(nh as i32) > gap {
                e = e.next_down();
            }
            scan.empirical_epsilon = scan.empirical_epsilon.min(e);
        }
        scan.word_lengths.push(nh);
        scan.min_gaps.push(gap);
        scan.worst_suffix.push(worst);
        scan.thresholds.push(threshold);
    }
    Ok(scan)
}

/// Result of [`derivative_separation`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeSeparation {
    /// Smallest order attaining the maximum difference.
    pub k_best: u32,
    pub value: f64,
    /// `|S^{(k)}(x, i) − S^{(k)}(x, j)|` for `k = 0..=q_max`.
    pub values: Vec<f64>,
    /// Certified truncation error of each difference.
    pub tail_budget: Vec<f64>,
}

/// Largest of `|S^{(k)}(x, i) − S^{(k)}(x, j)|` over `k ≤ q_max`, with both
/// words continued by zeros to the truncation depth.
pub fn derivative_separation(p: &SystemParams<f64>, x: f64, i: &Word, j: &Word, q_max: u32) -> Result<DerivativeSeparation> {
    match (i.first(), j.first()) {
        (Some(a), Some(c)) if a != c => {}
        _ => return Err(invalid(format!("words `{i}` and `{j}` must have different first digits"))),
    }
    i.check_base(p.b())?;
    j.check_base(p.b())?;
    let mut values = Vec::new();
    let mut tail_budget = Vec::new();
    for k in 0..=q_max {
        let si = p.eval_s_deriv(x, i, k, Tail::Constant(0))?;
        let sj = p.eval_s_deriv(x, j, k, Tail::Constant(0))?;
        values.push((si.value - sj.value).abs());
        tail_budget.push(si.tail_bound + sj.tail_bound);
    }
    let (k_best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    Ok(DerivativeSeparation { k_best: k_best as u32, value, values, tail_budget })
}

/// Outcome of the (H)/(H*) dichotomy test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Some pair of words has provably different fiber functions.
    H,
    /// All examined fiber functions agree within the error budget.
    HStar,
    Undetermined,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::H => "H",
            Verdict::HStar => "H*",
            Verdict::Undetermined => "undetermined",
        })
    }
}

/// A pair of words and a base point where their fiber values differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub i: Word,
    pub j: Word,
    pub x: f64,
    pub gap: f64,
}

/// Result of [`condition_h_scan`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyVerdict {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Largest `|S(x, i) − S(x, j)|` over the grid and word pairs with
    /// different first digits.
    pub sup_gap: f64,
    /// `2·tail + grid modulus`: what a pair of identical functions could show.
    pub budget: f64,
    pub tail: f64,
    pub grid_modulus: f64,
}

#[derive(Clone)]
struct DigitExtremes {
    max: Vec<(f64, usize)>,
    min: Vec<(f64, usize)>,
    dmax: Vec<f64>,
    dmin: Vec<f64>,
}

fn spread(max: &[(f64, usize)], min: &[(f64, usize)]) -> (f64, usize, usize) {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (d, hi) in max.iter().enumerate() {
        for (e, lo) in min.iter().enumerate() {
            if d != e && hi.0 - lo.0 > best.0 {
                best = (hi.0 - lo.0, hi.1, lo.1);
            }
        }
    }
    best
}

/// Three-way (H)/(H*) test over a grid of `grid_size` base points and all
/// words of length `word_depth` (each continued by zeros).
///
/// The budget accounts for truncating both series and for the variation of
/// the difference between grid points, bounded through its derivative at
/// the grid and a certified bound on its second derivative.
pub fn condition_h_scan(p: &SystemParams<f64>, grid_size: usize, word_depth: usize) -> Result<DichotomyVerdict> {
    if grid_size == 0 || word_depth == 0 {
        return Err(invalid("grid size and word depth must be positive"));
    }
    let b = p.b();
    check_budget(b, word_depth, ENUM_BUDGET)?;
    let words: Vec<Word> = (0..(b as u64).pow(word_depth as u32)).map(|i| lex_word(i, b, word_depth)).collect();
    let n_terms = word_depth.max(p.depth());
    let h = 1.0 / grid_size as f64;
    let per_x: Vec<(f64, DigitExtremes)> = (0..grid_size)
        .into_par_iter()
        .map(|g| {
            let x = (g as f64 + 0.5) * h;
            let nb = b as usize;
            let mut ex = DigitExtremes {
                max: vec![(f64::NEG_INFINITY, 0); nb],
                min: vec![(f64::INFINITY, 0); nb],
                dmax: vec![f64::NEG_INFINITY; nb],
                dmin: vec![f64::INFINITY; nb],
            };
            for (k, w) in words.iter().enumerate() {
                let d = w.digits()[0] as usize;
                let digits = || w.digits().iter().copied().chain(std::iter::repeat(0)).take(n_terms);
                let v = p.sum_terms(x, digits(), 0);
                let dv = p.sum_terms(x, digits(), 1);
                if v > ex.max[d].0 {
                    ex.max[d] = (v, k);
                }
                if v < ex.min[d].0 {
                    ex.min[d] = (v, k);
                }
                ex.dmax[d] = ex.dmax[d].max(dv);
                ex.dmin[d] = ex.dmin[d].min(dv);
            }
            (x, ex)
        })
        .collect();

    let mut sup_gap = f64::NEG_INFINITY;
    let mut witness = None;
    let mut sup_dspread = 0.0f64;
    for (x, ex) in &per_x {
        let (gap, hi, lo) = spread(&ex.max, &ex.min);
        if gap > sup_gap {
            sup_gap = gap;
            witness = Some(Witness { i: words[hi].clone(), j: words[lo].clone(), x: *x, gap });
        }
        let dmax: Vec<(f64, usize)> = ex.dmax.iter().map(|&v| (v, 0)).collect();
        let dmin: Vec<(f64, usize)> = ex.dmin.iter().map(|&v| (v, 0)).collect();
        sup_dspread = sup_dspread.max(spread(&dmax, &dmin).0);
    }
    let bf = b as f64;
    let tail = p.tail_bound(n_terms, 0);
    let tail1 = p.tail_bound(n_terms, 1);
    let second = 2.0 * p.phi().sup_norm(2) / (bf * bf * (1.0 - p.gamma() / (bf * bf)));
    let grid_modulus = 0.5 * h * (sup_dspread + 2.0 * tail1 + 0.5 * h * second);
    let budget = 2.0 * tail + grid_modulus;
    let verdict = if sup_gap > 10.0 * budget {
        Verdict::H
    } else if sup_gap <= budget {
        Verdict::HStar
    } else {
        Verdict::Undetermined
    };
    if verdict != Verdict::H {
        witness = None;
    }
    Ok(DichotomyVerdict { verdict, witness, sup_gap: sup_gap.max(0.0), budget, tail, grid_modulus })
}

/// Words `h, h', a ∈ Λ^t` with `|S'(z, i)|, |S'(z, j)| > Δ1` and
/// `|S'(z, i) − S'(z, j)| > Δ1` for all `z ∈ I_a` and all words `i`, `j`
/// extending `h`, `h'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityCertificate {
    pub t: u32,
    pub delta1: f64,
    pub h: Word,
    pub h_prime: Word,
    pub a: Word,
    /// Base point used by constructions that consume the certificate.
    pub x0: f64,
    /// Certified lower bound for `min(|S'(z, i)|, |S'(z, j)|)` on `I_a`.
    pub a1: f64,
    /// Certified lower bound for `|S'(z, i) − S'(z, j)|` on `I_a`.
    pub a2: f64,
    pub grid_size: usize,
    /// Bound on the derivative's variation between grid points.
    pub modulus: f64,
    /// Bound on the contribution of digits beyond the prefix.
    pub envelope: f64,
}

/// Result of [`transversality_search`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransversalitySearch {
    pub certificate: Option<TransversalityCertificate>,
    /// Best `min(A1, A2)` found at each examined `t` (may be negative).
    pub best_by_t: Vec<(u32, f64)>,
}

/// Default base point attached to certificates.
pub const DEFAULT_X0: f64 = 0.618_033_988_749_894_8;

struct TransversalityBounds {
    modulus: f64,
    envelope: f64,
}

fn transversality_bounds(p: &SystemParams<f64>, t: u32, grid_size: usize) -> TransversalityBounds {
    let bf = p.b() as f64;
    let g = p.gamma();
    let dz = bf.powi(-(t as i32)) / grid_size as f64;
    TransversalityBounds {
        modulus: 0.5 * dz * p.phi().sup_norm(2) / (bf * bf * (1.0 - g / (bf * bf))),
        envelope: (g / bf).powi(t as i32) * p.phi().sup_norm(1) / (bf * (1.0 - g / bf)),
    }
}

fn derivative_grid(p: &SystemParams<f64>, h: &Word, a: &Word, grid_size: usize) -> Vec<f64> {
    let bf = p.b() as f64;
    let width = bf.powi(-(a.len() as i32));
    let left = a.cell_left(p.b());
    (0..grid_size)
        .map(|g| {
            let z = left + (g as f64 + 0.5) * width / grid_size as f64;
            p.sum_terms(z, h.digits().iter().copied(), 1)
        })
        .collect()
}

fn pair_bounds(si: &[f64], sj: &[f64], bounds: &TransversalityBounds) -> (f64, f64) {
    let m1 = si.iter().chain(sj).fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let m2 = si.iter().zip(sj).fold(f64::INFINITY, |m, (u, v)| m.min((u - v).abs()));
    (
        m1 - bounds.modulus - bounds.envelope,
        m2 - 2.0 * bounds.modulus - 2.0 * bounds.envelope,
    )
}

/// Searches `t` in the given order and returns, at the first `t` admitting
/// any certified triple, the triple with the largest `Δ1`.
pub fn transversality_search(p: &SystemParams<f64>, t_list: &[u32], grid_size: usize) -> Result<TransversalitySearch> {
    if grid_size == 0 {
        return Err(invalid("grid size must be positive"));
    }
    let b = p.b();
    let mut best_by_t = Vec::new();
    for &t in t_list {
        if t == 0 {
            return Err(invalid("prefix length t must be positive"));
        }
        let needed = (b as f64).powi(3 * t as i32) * grid_size as f64;
        if needed > ENUM_BUDGET * 64.0 {
            return Err(Error::BudgetExceeded { needed, budget: ENUM_BUDGET * 64.0 });
        }
        let bounds = transversality_bounds(p, t, grid_size);
        let words: Vec<Word> = (0..(b as u64).pow(t)).map(|i| lex_word(i, b, t as usize)).collect();
        let per_a: Vec<Option<(f64, usize, usize, usize, f64, f64)>> = words
            .par_iter()
            .enumerate()
            .map(|(ai, a)| {
                let grids: Vec<Vec<f64>> = words.iter().map(|h| derivative_grid(p, h, a, grid_size)).collect();
                let mut best: Option<(f64, usize, usize, usize, f64, f64)> = None;
                for hi in 0..words.len() {
                    for hj in hi + 1..words.len() {
                        let (a1, a2) = pair_bounds(&grids[hi], &grids[hj], &bounds);
                        let d = a1.min(a2);
                        if best.is_none_or(|bst| d > bst.0) {
                            best = Some((d, hi, hj, ai, a1, a2));
                        }
                    }
                }
                best
            })
            .collect();
        let best = per_a
            .into_iter()
            .flatten()
            .fold(None::<(f64, usize, usize, usize, f64, f64)>, |acc, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            });
        let Some((delta1, hi, hj, ai, a1, a2)) = best else {
            best_by_t.push((t, f64::NEG_INFINITY));
            continue;
        };
        best_by_t.push((t, delta1));
        if delta1 > 0.0 {
            let certificate = TransversalityCertificate {
                t,
                delta1,
                h: words[hi].clone(),
                h_prime: words[hj].clone(),
                a: words[ai].clone(),
                x0: DEFAULT_X0,
                a1,
                a2,
                grid_size,
                modulus: bounds.modulus,
                envelope: bounds.envelope,
            };
            return Ok(TransversalitySearch { certificate: Some(certificate), best_by_t });
        }
    }
    Ok(TransversalitySearch { certificate: None, best_by_t })
}

impl TransversalityCertificate {
    /// Re-derives both bounds on a grid four times finer and checks they stay
    /// at or above `Δ1`.
    pub fn validate(&self, p: &SystemParams<f64>) -> bool {
        let fine = 4 * self.grid_size;
        let bounds = transversality_bounds(p, self.t, fine);
        let si = derivative_grid(p, &self.h, &self.a, fine);
        let sj = derivative_grid(p, &self.h_prime, &self.a, fine);
        let (a1, a2) = pair_bounds(&si, &sj, &bounds);
        let slack = 1e-12 * self.delta1.abs().max(1.0);
        self.h != self.h_prime && self.delta1 > 0.0 && a1.min(a2) >= self.delta1 - slack
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{cohomological_phi, PeriodicFn};

    fn cos_params() -> SystemParams<f64> {
        SystemParams::new(2, 0.4, PeriodicFn::cos_mode(1, 1.0), 1e-12).unwrap()
    }

    fn degenerate_params() -> SystemParams<f64> {
        let phi = cohomological_phi(&PeriodicFn::cos_mode(1, 1.0), 2, 0.4).unwrap();
        SystemParams::new(2, 0.4, phi, 1e-12).unwrap()
    }

    fn zero_params() -> SystemParams<f64> {
        SystemParams::new(2, 0.4, PeriodicFn::zero(), 1e-12).unwrap()
    }

    #[test]
    fn suffix_values_match_direct_evaluation() {
        let p = cos_params();
        let w = Word::new(vec![1, 0, 1]);
        let vals = suffix_values(&p, 0.3, 4, &w).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let j = lex_word(k as u64, 2, 4);
            let direct = p.eval_s(0.3, &j.concat(&w), Tail::None).value;
            assert!((v - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn min_gap_examples() {
        let w = Word::new(vec![0, 1, 1]);
        assert_eq!(min_gap(&zero_params(), 0.3, &w, 10).unwrap(), 0.0);
        let deg = degenerate_params();
        let g = min_gap(&deg, 0.3, &w, 12).unwrap();
        assert!(g <= 2.0 * deg.tail_bound(12, 0), "gap {g}");
        let g = min_gap(&cos_params(), 0.3, &w, 12).unwrap();
        assert!(g > 0.0);
        assert!(min_gap(&cos_params(), 0.3, &w, 3).is_err());
        assert!(min_gap(&cos_params(), 0.3, &Word::empty(), 30).is_err());
    }

    #[test]
    fn separation_scan_thresholds() {
        let p = cos_params();
        let ns: Vec<u32> = (8..=14).collect();
        let strict = exp_separation_scan(&p, 0.3, 2, 1.0, &ns, SuffixSelection::All).unwrap();
        assert!(!strict.passing.contains(&14));
        let loose = exp_separation_scan(&p, 0.3, 2, 1e-6, &ns, SuffixSelection::All).unwrap();
        assert_eq!(loose.passing, ns);
        let at = exp_separation_scan(&p, 0.3, 2, loose.empirical_epsilon, &ns, SuffixSelection::All).unwrap();
        assert_eq!(at.passing, ns);
        // monotone in epsilon
        for e in [0.05, 0.1, 0.2, 0.3, 0.5] {
            let hi = exp_separation_scan(&p, 0.3, 2, e, &ns, SuffixSelection::All).unwrap();
            let lo = exp_separation_scan(&p, 0.3, 2, e * 0.9, &ns, SuffixSelection::All).unwrap();
            assert!(hi.passing.iter().all(|n| lo.passing.contains(n)));
        }
        let s = exp_separation_scan(&p, 0.3, 2, 0.1, &ns, SuffixSelection::Sampled { count: 2, seed: 1 }).unwrap();
        assert!(s.sampled);
    }

    #[test]
    fn derivative_separation_examples() {
        let i = Word::new(vec![0]);
        let j = Word::new(vec![1]);
        assert_eq!(derivative_separation(&zero_params(), 0.3, &i, &j, 3).unwrap().value, 0.0);
        let deg = degenerate_params();
        let d = derivative_separation(&deg, 0.3, &i, &j, 3).unwrap();
        let budget = d.tail_budget.iter().cloned().fold(0.0, f64::max);
        assert!(d.value <= budget + 1e-14, "{d:?}");
        let p = cos_params();
        let min = (0..64)
            .map(|g| derivative_separation(&p, (g as f64 + 0.5) / 64.0, &i, &j, 3).unwrap().value)
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.1, "min {min}");
        assert!(derivative_separation(&p, 0.3, &i, &Word::new(vec![0, 1]), 3).is_err());
    }

    #[test]
    fn derivative_separation_ignores_digits_past_depth() {
        let p = cos_params();
        let d = p.depth();
        let i = Word::new(vec![0]);
        let j = Word::new(vec![1]);
        let base = derivative_separation(&p, 0.3, &i, &j, 2).unwrap();
        let ext = |w: &Word| w.concat(&Word::repeat(0, d - 1)).concat(&Word::new(vec![1, 1, 0, 1]));
        let longer = derivative_separation(&p, 0.3, &ext(&i), &ext(&j), 2).unwrap();
        for k in 0..3 {
            assert!((base.values[k] - longer.values[k]).abs() <= 2.0 * base.tail_budget[k]);
        }
    }

    #[test]
    fn dichotomy_examples() {
        assert_eq!(condition_h_scan(&zero_params(), 64, 4).unwrap().verdict, Verdict::HStar);
        let deg = condition_h_scan(&degenerate_params(), 256, 6).unwrap();
        assert_eq!(deg.verdict, Verdict::HStar, "{deg:?}");
        let cos = condition_h_scan(&cos_params(), 256, 6).unwrap();
        assert_eq!(cos.verdict, Verdict::H);
        let w = cos.witness.unwrap();
        assert_ne!(w.i.first(), w.j.first());
        let p = cos_params();
        let gap = (p.eval_s(w.x, &w.i, Tail::Constant(0)).value - p.eval_s(w.x, &w.j, Tail::Constant(0)).value).abs();
        assert!((gap - w.gap).abs() < 1e-12);
    }

    #[test]
    fn transversality_examples() {
        assert!(transversality_search(&zero_params(), &[1, 2], 64).unwrap().certificate.is_none());
        assert!(transversality_search(&degenerate_params(), &[1, 2, 3], 64).unwrap().certificate.is_none());
        let p = cos_params();
        let search = transversality_search(&p, &[4], DEFAULT_GRID).unwrap();
        let cert = search.certificate.expect("certificate at t = 4");
        assert!(cert.delta1 > 0.0 && cert.h != cert.h_prime);
        assert!(cert.validate(&p));
        let text = toml::to_string(&cert).unwrap();
        let back: TransversalityCertificate = toml::from_str(&text).unwrap();
        assert_eq!(back, cert);
    }
}
