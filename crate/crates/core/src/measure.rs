//! Probability measures on the real line resolved on b-adic partitions.
//!
//! A [`DiscreteMeasure`] assigns mass to the cells `[j/b^n, (j+1)/b^n)` of a
//! single level `n`. Levels are capped so that every cell index, and the
//! product `y · b^n` used to find it, is an exact integer in `f64`.

use crate::error::{invalid, Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

/// Largest level whose cell indices stay exact: `b^level ≤ 2^45`.
pub fn max_level(b: u32) -> u32 {
    (45.0 / (b as f64).log2()).floor() as u32
}

pub(crate) fn check_level(b: u32, level: u32) -> Result<()> {
    let max = max_level(b);
    if level > max {
        Err(Error::LevelTooDeep { level, base: b, max })
    } else {
        Ok(())
    }
}

/// `b^level` as `f64`.
#[inline]
pub fn scale(b: u32, level: u32) -> f64 {
    (b as f64).powi(level as i32)
}

/// The b-adic interval `[index/b^level, (index+1)/b^level)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BAdicCell {
    pub base: u32,
    pub level: u32,
    pub index: i64,
}

impl BAdicCell {
    pub fn new(base: u32, level: u32, index: i64) -> Self {
        BAdicCell { base, level, index }
    }

    /// The cell of `level` containing `y`.
    pub fn containing(base: u32, level: u32, y: f64) -> Self {
        BAdicCell { base, level, index: (y * scale(base, level)).floor() as i64 }
    }

    pub fn left(&self) -> f64 {
        self.index as f64 / scale(self.base, self.level)
    }

    pub fn width(&self) -> f64 {
        1.0 / scale(self.base, self.level)
    }

    pub fn midpoint(&self) -> f64 {
        (self.index as f64 + 0.5) / scale(self.base, self.level)
    }

    pub fn contains(&self, y: f64) -> bool {
        (y * scale(self.base, self.level)).floor() as i64 == self.index
    }

    /// Index of the ancestor cell at a coarser level.
    pub fn ancestor_index(&self, level: u32) -> i64 {
        debug_assert!(level <= self.level);
        self.index.div_euclid((self.base as i64).pow(self.level - level))
    }
}

/// Neumaier-compensated sum in iteration order.
pub(crate) fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A probability measure resolved on the level-`n` b-adic partition.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    base: u32,
    level: u32,
    cells: BTreeMap<i64, f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from nonnegative weights and normalizes it.
    pub fn from_weights(base: u32, level: u32, weights: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        if base < 2 {
            return Err(invalid(format!("base b={base} must be at least 2")));
        }
        check_level(base, level)?;
        let mut cells = BTreeMap::new();
        for (j, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(invalid(format!("weight {w} at cell {j} is not a nonnegative number")));
            }
            if w > 0.0 {
                *cells.entry(j).or_insert(0.0) += w;
            }
        }
        let total = stable_sum(cells.values().copied());
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        for w in cells.values_mut() {
            *w /= total;
        }
        Ok(DiscreteMeasure { base, level, cells })
    }

    pub fn from_counts(base: u32, level: u32, counts: &HashMap<i64, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::ZeroMass);
        }
        let t = total as f64;
        Self::from_weights(base, level, counts.iter().map(|(&j, &c)| (j, c as f64 / t)))
    }

    /// Unit mass on the cell containing `y`.
    pub fn dirac(base: u32, level: u32, y: f64) -> Result<Self> {
        Self::from_weights(base, level, [(BAdicCell::containing(base, level, y).index, 1.0)])
    }

    /// Lebesgue measure on `[0, 1)` resolved at `level`.
    pub fn lebesgue(base: u32, level: u32) -> Result<Self> {
        check_level(base, level)?;
        let n = (base as i64).pow(level);
        let w = 1.0 / n as f64;
        Self::from_weights(base, level, (0..n).map(|j| (j, w)))
    }

    /// Empirical measure of a point set (equal weights).
    pub fn from_points(base: u32, level: u32, points: &[f64]) -> Result<Self> {
        let mut h = Histogram::new(base, level)?;
        points.iter().for_each(|&y| h.add(y));
        h.into_measure()
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of cells with positive mass.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(index, weight)` pairs in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.cells.iter().map(|(&j, &w)| (j, w))
    }

    pub fn weight(&self, index: i64) -> f64 {
        self.cells.get(&index).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        stable_sum(self.cells.values().copied())
    }

    /// Mass of a cell at any level not finer than the measure's own.
    pub fn mass(&self, cell: &BAdicCell) -> Result<f64> {
        self.check_cell(cell)?;
        let shift = (self.base as i64).pow(self.level - cell.level);
        let lo = cell.index * shift;
        Ok(stable_sum(self.cells.range(lo..lo + shift).map(|(_, &w)| w)))
    }

    fn check_cell(&self, cell: &BAdicCell) -> Result<()> {
        if cell.base != self.base {
            return Err(Error::BaseMismatch(cell.base, self.base));
        }
        if cell.level > self.level {
            return Err(invalid(format!(
                "cell level {} finer than measure level {}",
                cell.level, self.level
            )));
        }
        Ok(())
    }

    /// Pushes the measure to a coarser level.
    pub fn coarsen(&self, level: u32) -> Result<Self> {
        if level > self.level {
            return Err(invalid(format!("cannot coarsen level {} to finer level {level}", self.level)));
        }
        if level == self.level {
            return Ok(self.clone());
        }
        let div = (self.base as i64).pow(self.level - level);
        let mut cells = BTreeMap::new();
        for (&j, &w) in &self.cells {
            *cells.entry(j.div_euclid(div)).or_insert(0.0) += w;
        }
        Ok(DiscreteMeasure { base: self.base, level, cells })
    }

    /// Weights of the level-`level` coarsening, without building a measure.
    pub fn coarse_weights(&self, level: u32) -> Vec<f64> {
        debug_assert!(level <= self.level);
        let div = (self.base as i64).pow(self.level - level);
        let mut out = Vec::new();
        let mut current: Option<(i64, f64)> = None;
        // BTreeMap order makes each coarse cell a contiguous run
        for (&j, &w) in &self.cells {
            let c = j.div_euclid(div);
            match current {
                Some((cj, ref mut acc)) if cj == c => *acc += w,
                Some((_, acc)) => {
                    out.push(acc);
                    current = Some((c, w));
                }
                None => current = Some((c, w)),
            }
        }
        if let Some((_, acc)) = current {
            out.push(acc);
        }
        out
    }

    /// Total-variation distance `½ Σ |μ(J) − ν(J)|` at the coarser of the two levels.
    pub fn tv_distance(&self, other: &DiscreteMeasure) -> Result<f64> {
        if self.base != other.base {
            return Err(Error::BaseMismatch(self.base, other.base));
        }
        let level = self.level.min(other.level);
        let a = self.coarsen(level)?;
        let b = other.coarsen(level)?;
        let mut keys: Vec<i64> = a.cells.keys().chain(b.cells.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        Ok(0.5 * stable_sum(keys.iter().map(|j| (a.weight(*j) - b.weight(*j)).abs())))
    }

    /// Diameter of the smallest interval of whole cells holding the support.
    pub fn support_diameter(&self) -> f64 {
        match (self.cells.keys().next(), self.cells.keys().next_back()) {
            (Some(lo), Some(hi)) => (hi - lo + 1) as f64 / scale(self.base, self.level),
            _ => 0.0,
        }
    }

    /// Three-column table `level,index,weight`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,index,weight")?;
        for (j, w) in self.iter() {
            writeln!(out, "{},{},{:.17e}", self.level, j, w)?;
        }
        Ok(())
    }

    /// Reads a table written by [`Self::write_csv`]. The base is not part of
    /// the table and must be supplied.
    pub fn read_csv<R: BufRead>(base: u32, input: R) -> Result<Self> {
        let mut level = None;
        let mut weights = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("level")) {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 columns", lineno + 1)));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", lineno + 1));
            let l: u32 = parts[0].parse().map_err(|_| bad("level"))?;
            let j: i64 = parts[1].parse().map_err(|_| bad("index"))?;
            let w: f64 = parts[2].parse().map_err(|_| bad("weight"))?;
            match level {
                None => level = Some(l),
                Some(prev) if prev != l => return Err(Error::LevelMismatch(prev, l)),
                _ => {}
            }
            weights.push((j, w));
        }
        let level = level.ok_or_else(|| Error::Parse("empty measure table".into()))?;
        Self::from_weights(base, level, weights)
    }
}

/// Streaming counter of points per cell; shards merge by adding counts.
#[derive(Clone, Debug)]
pub struct Histogram {
    base: u32,
    level: u32,
    scale: f64,
    counts: HashMap<i64, u64>,
}

impl Histogram {
    pub fn new(base: u32, level: u32) -> Result<Self> {
        check_level(base, level)?;
        Ok(Histogram { base, level, scale: scale(base, level), counts: HashMap::new() })
    }

    #[inline]
    pub fn add(&mut self, y: f64) {
        *self.counts.entry((y * self.scale).floor() as i64).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: Histogram) {
        for (j, c) in other.counts {
            *self.counts.entry(j).or_insert(0) += c;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::from_counts(self.base, self.level, &self.counts)
    }
}

/// Image of `μ` under `y ↦ a·y + c`.
///
/// Each source cell's mass is deposited at the image of its midpoint, so
/// mass is displaced by at most `|a| · b^{−n−1}` from where an exact
/// pushforward would put it.
pub fn pushforward_affine(mu: &DiscreteMeasure, a: f64, c: f64, out_level: u32) -> Result<DiscreteMeasure> {
    if a == 0.0 || !a.is_finite() || !c.is_finite() {
        return Err(invalid("affine map needs finite a ≠ 0 and finite c"));
    }
    check_level(mu.base, out_level)?;
    let src = scale(mu.base, mu.level);
    let dst = scale(mu.base, out_level);
    let mut cells = BTreeMap::new();
    for (j, w) in mu.iter() {
        let y = a * ((j as f64 + 0.5) / src) + c;
        *cells.entry((y * dst).floor() as i64).or_insert(0.0) += w;
    }
    Ok(DiscreteMeasure { base: mu.base, level: out_level, cells })
}

/// Weighted superposition `Σ w_i μ_i` of measures sharing base and level.
pub fn mix(components: &[(f64, &DiscreteMeasure)]) -> Result<DiscreteMeasure> {
    let (_, first) = components.first().ok_or_else(|| invalid("mixture needs at least one component"))?;
    let mut total = 0.0;
    for (w, m) in components {
        if !(*w >= 0.0) {
            return Err(invalid(format!("mixture weight {w} is negative")));
        }
        if m.base != first.base {
            return Err(Error::BaseMismatch(first.base, m.base));
        }
        if m.level != first.level {
            return Err(Error::LevelMismatch(first.level, m.level));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("mixture weights sum to {total}, not 1")));
    }
    let mut cells = BTreeMap::new();
    for (w, m) in components {
        for (j, v) in m.iter() {
            *cells.entry(j).or_insert(0.0) += w * v;
        }
    }
    DiscreteMeasure::from_weights(first.base, first.level, cells)
}

/// Law of the independent sum, with each pair of cells represented by the
/// sum of their midpoints and deposited at `out_level`.
pub fn convolve(mu: &DiscreteMeasure, nu: &DiscreteMeasure, out_level: u32) -> Result<DiscreteMeasure> {
    if mu.base != nu.base {
        return Err(Error::BaseMismatch(mu.base, nu.base));
    }
    check_level(mu.base, out_level)?;
    let sm = scale(mu.base, mu.level);
    let sn = scale(nu.base, nu.level);
    let dst = scale(mu.base, out_level);
    let right: Vec<(f64, f64)> = nu.iter().map(|(j, w)| ((j as f64 + 0.5) / sn, w)).collect();
    let mut cells = BTreeMap::new();
    for (i, wi) in mu.iter() {
        let yi = (i as f64 + 0.5) / sm;
        for &(yj, wj) in &right {
            *cells.entry(((yi + yj) * dst).floor() as i64).or_insert(0.0) += wi * wj;
        }
    }
    DiscreteMeasure::from_weights(mu.base, out_level, cells)
}

/// The normalized restriction `μ_Q(A) = μ(A ∩ Q) / μ(Q)` to a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentMeasure {
    pub cell: BAdicCell,
    /// `μ(Q)` in the parent measure.
    pub parent_mass: f64,
    pub measure: DiscreteMeasure,
}

pub fn component(mu: &DiscreteMeasure, cell: BAdicCell) -> Result<ComponentMeasure> {
    let parent_mass = mu.mass(&cell)?;
    if parent_mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let shift = (mu.base as i64).pow(mu.level - cell.level);
    let lo = cell.index * shift;
    let measure = DiscreteMeasure::from_weights(mu.base, mu.level, mu.cells.range(lo..lo + shift).map(|(&j, &w)| (j, w)))?;
    Ok(ComponentMeasure { cell, parent_mass, measure })
}

/// All level-`level` components with positive mass, in index order.
pub fn components(mu: &DiscreteMeasure, level: u32) -> Result<Vec<ComponentMeasure>> {
    let coarse = mu.coarsen(level)?;
    coarse
        .iter()
        .map(|(j, _)| component(mu, BAdicCell::new(mu.base, level, j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(level: u32, w: &[(i64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::from_weights(2, level, w.iter().copied()).unwrap()
    }

    #[test]
    fn level_cap() {
        assert_eq!(max_level(2), 45);
        assert_eq!(max_level(3), 28);
        assert!(DiscreteMeasure::dirac(2, 46, 0.1).is_err());
        assert!(Histogram::new(3, 29).is_err());
    }

    #[test]
    fn cells_and_ancestors() {
        let c = BAdicCell::containing(2, 3, -0.3);
        assert_eq!(c.index, -3);
        assert!(c.contains(-0.3));
        assert_eq!(c.ancestor_index(1), -1);
        assert_eq!(c.midpoint(), -0.3125);
    }

    #[test]
    fn pushforward_examples() {
        let mu = m(4, &[(1, 0.25), (5, 0.5), (-3, 0.25)]);
        assert_eq!(pushforward_affine(&mu, 1.0, 0.0, 4).unwrap(), mu);
        let shifted = pushforward_affine(&mu, 1.0, 7.0 / 16.0, 4).unwrap();
        assert_eq!(shifted.iter().collect::<Vec<_>>(), vec![(4, 0.25), (8, 0.25), (12, 0.5)]);
        let d = DiscreteMeasure::dirac(2, 20, 0.3).unwrap();
        let img = pushforward_affine(&d, -0.4, 0.7, 10).unwrap();
        assert_eq!(img, DiscreteMeasure::dirac(2, 10, -0.4 * 0.3 + 0.7).unwrap());
        assert!(pushforward_affine(&mu, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn lattice_scaling_is_exact() {
        let mu = m(5, &[(3, 0.2), (7, 0.3), (-11, 0.5)]);
        for k in 1..4 {
            let img = pushforward_affine(&mu, 2f64.powi(-k), 0.0, 5 + k as u32).unwrap();
            assert_eq!(img.iter().collect::<Vec<_>>(), mu.iter().collect::<Vec<_>>());
            let direct = pushforward_affine(&mu, 2f64.powi(-k), 0.0, 5).unwrap();
            assert_eq!(img.coarsen(5).unwrap(), direct);
        }
    }

    #[test]
    fn mixture_examples() {
        let a = m(3, &[(1, 1.0)]);
        let b = m(3, &[(6, 1.0)]);
        assert_eq!(mix(&[(1.0, &a)]).unwrap(), a);
        let ab = mix(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert_eq!(ab.iter().collect::<Vec<_>>(), vec![(1, 0.5), (6, 0.5)]);
        assert!(mix(&[(0.5, &a), (0.5, &m(4, &[(1, 1.0)]))]).is_err());
        assert!(mix(&[(0.4, &a), (0.5, &b)]).is_err());
    }

    #[test]
    fn convolution_examples() {
        let mu = m(6, &[(3, 0.5), (20, 0.25), (41, 0.25)]);
        let delta0 = DiscreteMeasure::dirac(2, 30, 0.0).unwrap();
        assert_eq!(convolve(&mu, &delta0, 6).unwrap(), mu);
        let du = DiscreteMeasure::dirac(2, 30, 0.3).unwrap();
        let dv = DiscreteMeasure::dirac(2, 30, 0.45).unwrap();
        assert_eq!(convolve(&du, &dv, 12).unwrap(), DiscreteMeasure::dirac(2, 12, 0.75).unwrap());
    }

    #[test]
    fn component_examples() {
        let mu = m(4, &[(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]);
        let whole = component(&mu, BAdicCell::new(2, 0, 0)).unwrap();
        assert_eq!(whole.measure, mu);
        let d = DiscreteMeasure::dirac(2, 4, 0.3).unwrap();
        let c = component(&d, BAdicCell::containing(2, 4, 0.3)).unwrap();
        assert_eq!(c.measure, d);
        let uni = m(1, &[(0, 0.5), (1, 0.5)]);
        let c1 = component(&uni, BAdicCell::new(2, 1, 1)).unwrap();
        assert_eq!(c1.measure.iter().collect::<Vec<_>>(), vec![(1, 1.0)]);
        assert_eq!(c1.parent_mass, 0.5);
        assert!(matches!(component(&uni, BAdicCell::new(2, 1, 5)), Err(Error::ZeroMass)));
    }

    #[test]
    fn components_reconstruct_parent() {
        let mu = m(6, &[(0, 0.1), (5, 0.2), (17, 0.3), (40, 0.15), (63, 0.25)]);
        for level in 0..=6 {
            let comps = components(&mu, level).unwrap();
            let parts: Vec<(f64, &DiscreteMeasure)> = comps.iter().map(|c| (c.parent_mass, &c.measure)).collect();
            let back = mix(&parts).unwrap();
            assert!(back.tv_distance(&mu).unwrap() < 1e-15);
        }
    }

    #[test]
    fn csv_round_trip() {
        let mu = m(7, &[(-4, 0.125), (9, 0.375), (100, 0.5)]);
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let back = DiscreteMeasure::read_csv(2, buf.as_slice()).unwrap();
        assert_eq!(back, mu);
        assert!(DiscreteMeasure::read_csv(2, "level,index,weight\n3,1,0.5\n4,2,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn support_and_tv() {
        let a = m(3, &[(1, 0.5), (4, 0.5)]);
        let b = m(3, &[(1, 0.5), (5, 0.5)]);
        assert_eq!(a.support_diameter(), 0.5);
        assert_eq!(a.tv_distance(&b).unwrap(), 0.5);
        assert_eq!(a.tv_distance(&a).unwrap(), 0.0);
        assert_eq!(a.coarse_weights(1), vec![0.5, 0.5]);
    }

    fn arb_measure() -> impl Strategy<Value = DiscreteMeasure> {
        proptest::collection::vec((-200i64..200, 0.01f64..1.0), 1..40)
            .prop_map(|w| DiscreteMeasure::from_weights(2, 8, w).unwrap())
    }

    proptest! {
        #[test]
        fn operations_conserve_mass(mu in arb_measure(), nu in arb_measure(), a in 0.05f64..3.0, c in -2.0f64..2.0, t in 0.0f64..1.0) {
            prop_assert!((mu.total_mass() - 1.0).abs() < 1e-12);
            prop_assert!((pushforward_affine(&mu, -a, c, 10).unwrap().total_mass() - 1.0).abs() < 1e-12);
            prop_assert!((mix(&[(t, &mu), (1.0 - t, &nu)]).unwrap().total_mass() - 1.0).abs() < 1e-12);
            prop_assert!((convolve(&mu, &nu, 7).unwrap().total_mass() - 1.0).abs() < 1e-12);
            prop_assert!((mu.coarsen(3).unwrap().total_mass() - 1.0).abs() < 1e-12);
        }
    }
}
