//! Attractor rasters, b-adic box counting, the predicted dimension formula
//! and Weierstrass-type graphs `W(x) = Σ λ^n ψ(b^n x)`.

use crate::analytic::PeriodicFn;
use crate::error::{invalid, Error, Result};
use crate::measure::scale;
use crate::regression::least_squares;
use crate::symbolic::{Orbit, ReseedPolicy, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashSet;
use std::io::Write;

/// `min(2, 1 + ln b / ln(1/γ))`.
pub fn predicted_dimension(b: u32, gamma: f64) -> Result<f64> {
    if b < 2 || !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("need b ≥ 2 and γ ∈ (0,1), got b={b}, γ={gamma}")));
    }
    Ok((1.0 + (b as f64).ln() / (1.0 / gamma).ln()).min(2.0))
}

/// Occupancy counts on a `width × height` pixel grid over `[0,1) × [y_min, y_max)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    pub y_min: f64,
    pub y_max: f64,
    /// Row-major counts, row 0 at the top (largest `y`).
    pub counts: Vec<u64>,
}

impl RasterGrid {
    pub fn new(width: usize, height: usize, y_min: f64, y_max: f64) -> Result<Self> {
        if width == 0 || height == 0 || !(y_max > y_min) {
            return Err(invalid("raster needs positive size and y_max > y_min"));
        }
        Ok(RasterGrid { width, height, y_min, y_max, counts: vec![0; width * height] })
    }

    /// Pixel `(column, row)` containing `(x, y)`, if inside the grid.
    pub fn pixel(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(0.0..1.0).contains(&x) || !(y >= self.y_min && y < self.y_max) {
            return None;
        }
        let col = ((x * self.width as f64) as usize).min(self.width - 1);
        let from_bottom = (((y - self.y_min) / (self.y_max - self.y_min) * self.height as f64) as usize).min(self.height - 1);
        Some((col, self.height - 1 - from_bottom))
    }

    pub fn add(&mut self, x: f64, y: f64) -> bool {
        match self.pixel(x, y) {
            Some((c, r)) => {
                self.counts[r * self.width + c] += 1;
                true
            }
            None => false,
        }
    }

    pub fn count(&self, col: usize, row: usize) -> u64 {
        self.counts[row * self.width + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Centre of a pixel row in `y`.
    pub fn row_centre(&self, row: usize) -> f64 {
        self.y_max - (row as f64 + 0.5) * (self.y_max - self.y_min) / self.height as f64
    }

    /// Binary portable graymap, log-scaled so sparse regions stay visible.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "P5\n{} {}\n255", self.width, self.height)?;
        let peak = (self.counts.iter().copied().max().unwrap_or(0) as f64 + 1.0).ln();
        let bytes: Vec<u8> = self
            .counts
            .iter()
            .map(|&c| if c == 0 { 255 } else { 255 - (1.0 + 254.0 * ((c as f64 + 1.0).ln() / peak)).min(255.0) as u8 })
            .collect();
        out.write_all(&bytes)
    }
}

/// Orbit points before the first recorded point.
pub const BURN_IN: usize = 200;

/// Rasterizes `n_points` orbit points of `T` after burn-in over
/// `[0,1) × [−M, M]`.
pub fn render_attractor(p: &SystemParams<f64>, width: usize, height: usize, n_points: usize, seed: u64) -> Result<RasterGrid> {
    if n_points == 0 {
        return Err(invalid("n_points must be positive"));
    }
    let m = p.fiber_bound().max(f64::MIN_POSITIVE);
    // nudge the top edge so y = M itself is inside the half-open grid
    let mut grid = RasterGrid::new(width, height, -m, m * (1.0 + 1e-12) + f64::MIN_POSITIVE)?;
    for (x, y) in orbit_points(p, n_points, seed) {
        grid.add(x, y);
    }
    Ok(grid)
}

/// `n_points` orbit points after [`BURN_IN`] steps from a seeded start.
pub fn orbit_points(p: &SystemParams<f64>, n_points: usize, seed: u64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let x0: f64 = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED).random();
    let mut orbit = Orbit::new(p, (x0, 0.0), seed, Some(ReseedPolicy::default()));
    for _ in 0..BURN_IN {
        orbit.advance();
    }
    orbit.take(n_points)
}

/// Slope of `log_b N(n)` against `n` with its regression diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountEstimate {
    pub base: u32,
    pub levels: Vec<u32>,
    /// Occupied boxes per level.
    pub counts: Vec<u64>,
    pub dimension: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

fn estimate_from_counts(base: u32, levels: &[u32], counts: Vec<u64>) -> Result<BoxCountEstimate> {
    if levels.len() < 3 {
        return Err(Error::Degenerate(format!("box counting needs at least 3 levels, got {}", levels.len())));
    }
    if counts[0] < 2 {
        return Err(Error::Degenerate("points occupy a single box at the coarsest level".into()));
    }
    let lb = (base as f64).ln();
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln() / lb).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(BoxCountEstimate {
        base,
        levels: levels.to_vec(),
        counts,
        dimension: fit.slope,
        intercept: fit.intercept,
        residuals: fit.residuals,
    })
}

fn check_levels(levels: &[u32]) -> Result<u32> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Degenerate("levels must be strictly increasing".into()));
    }
    levels.last().copied().ok_or_else(|| Error::Degenerate("no levels".into()))
}

/// Occupancy bitmap of the boxes `[i/b^L, (i+1)/b^L) × [j/b^L, (j+1)/b^L)`
/// at a finest level `L`, for points in `[0,1) × [y_min, y_max]`. Coarser
/// levels are derived from it, so all levels share one lattice.
#[derive(Clone, Debug)]
pub struct BoxCounter {
    base: u32,
    level: u32,
    cols: u64,
    row0: i64,
    rows: u64,
    bits: Vec<u64>,
    outside: u64,
}

/// Largest bitmap a [`BoxCounter`] will allocate, in bits.
pub const MAX_BOX_BITS: u64 = 1 << 33;

impl BoxCounter {
    pub fn new(base: u32, level: u32, y_min: f64, y_max: f64) -> Result<Self> {
        if base < 2 || !(y_max >= y_min) {
            return Err(invalid("box counter needs b ≥ 2 and y_max ≥ y_min"));
        }
        let s = scale(base, level);
        let row0 = (y_min * s).floor() as i64;
        let rows = ((y_max * s).floor() as i64 - row0 + 1) as u64;
        let cols = s as u64;
        let needed = cols.saturating_mul(rows);
        if needed > MAX_BOX_BITS {
            return Err(Error::BudgetExceeded { needed: needed as f64, budget: MAX_BOX_BITS as f64 });
        }
        Ok(BoxCounter { base, level, cols, row0, rows, bits: vec![0; needed.div_ceil(64) as usize], outside: 0 })
    }

    #[inline]
    pub fn add(&mut self, x: f64, y: f64) {
        let s = scale(self.base, self.level);
        let c = (x * s).floor() as i64;
        let r = (y * s).floor() as i64 - self.row0;
        if c < 0 || c as u64 >= self.cols || r < 0 || r as u64 >= self.rows {
            self.outside += 1;
            return;
        }
        let idx = r as u64 * self.cols + c as u64;
        self.bits[(idx / 64) as usize] |= 1 << (idx % 64);
    }

    /// Points rejected for lying outside the declared window.
    pub fn outside(&self) -> u64 {
        self.outside
    }

    /// Occupied boxes at each level (each at most the finest level).
    pub fn counts(&self, levels: &[u32]) -> Result<Vec<u64>> {
        if levels.iter().any(|&n| n > self.level) {
            return Err(invalid(format!("levels must not exceed the finest level {}", self.level)));
        }
        let mut sets: Vec<HashSet<(i64, i64)>> = vec![HashSet::new(); levels.len()];
        for (w, &word) in self.bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let bit = word.trailing_zeros() as u64;
                word &= word - 1;
                let idx = w as u64 * 64 + bit;
                let (r, c) = ((idx / self.cols) as i64 + self.row0, (idx % self.cols) as i64);
                for (set, &n) in sets.iter_mut().zip(levels) {
                    let d = (self.base as i64).pow(self.level - n);
                    set.insert((c.div_euclid(d), r.div_euclid(d)));
                }
            }
        }
        Ok(sets.into_iter().map(|s| s.len() as u64).collect())
    }

    pub fn estimate(&self, levels: &[u32]) -> Result<BoxCountEstimate> {
        check_levels(levels)?;
        estimate_from_counts(self.base, levels, self.counts(levels)?)
    }
}

/// Box-counting dimension of a planar point set in `[0,1) × [y_min, y_max]`.
pub fn box_count_dimension(
    points: impl IntoIterator<Item = (f64, f64)>,
    base: u32,
    levels: &[u32],
    y_range: (f64, f64),
) -> Result<BoxCountEstimate> {
    let finest = check_levels(levels)?;
    let mut counter = BoxCounter::new(base, finest, y_range.0, y_range.1)?;
    for (x, y) in points {
        counter.add(x, y);
    }
    counter.estimate(levels)
}

/// Box-counting dimension of the attractor from `n_points` streamed orbit points.
pub fn attractor_box_dimension(p: &SystemParams<f64>, levels: &[u32], n_points: usize, seed: u64) -> Result<BoxCountEstimate> {
    let m = p.fiber_bound();
    box_count_dimension(orbit_points(p, n_points, seed), p.b(), levels, (-m, m))
}

/// Box counts of the graph of a continuous function from per-column minima
/// and maxima: a column whose values span `[lo, hi]` meets every box from
/// the one containing `lo` to the one containing `hi`.
#[derive(Clone, Debug)]
pub struct GraphBoxCounter {
    base: u32,
    level: u32,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl GraphBoxCounter {
    pub fn new(base: u32, level: u32) -> Result<Self> {
        let cols = scale(base, level);
        if cols > MAX_BOX_BITS as f64 / 64.0 {
            return Err(Error::BudgetExceeded { needed: cols, budget: MAX_BOX_BITS as f64 / 64.0 });
        }
        let cols = cols as usize;
        Ok(GraphBoxCounter { base, level, lo: vec![f64::INFINITY; cols], hi: vec![f64::NEG_INFINITY; cols] })
    }

    #[inline]
    pub fn add(&mut self, x: f64, y: f64) {
        let c = (x * scale(self.base, self.level)).floor();
        if c < 0.0 || c as usize >= self.lo.len() {
            return;
        }
        let c = c as usize;
        self.lo[c] = self.lo[c].min(y);
        self.hi[c] = self.hi[c].max(y);
    }

    pub fn counts(&self, levels: &[u32]) -> Result<Vec<u64>> {
        levels
            .iter()
            .map(|&n| {
                if n > self.level {
                    return Err(invalid(format!("level {n} above finest level {}", self.level)));
                }
                let group = (self.base as usize).pow(self.level - n);
                let s = scale(self.base, n);
                let mut total = 0u64;
                for (lo, hi) in self.lo.chunks(group).zip(self.hi.chunks(group)) {
                    let lo = lo.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if lo <= hi {
                        total += ((hi * s).floor() - (lo * s).floor()) as u64 + 1;
                    }
                }
                Ok(total)
            })
            .collect()
    }

    pub fn estimate(&self, levels: &[u32]) -> Result<BoxCountEstimate> {
        check_levels(levels)?;
        estimate_from_counts(self.base, levels, self.counts(levels)?)
    }
}

/// `W(x) = Σ_{n<terms} λ^n ψ(b^n x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeierstrassFn {
    pub psi: PeriodicFn<f64>,
    pub lambda: f64,
    pub b: u32,
    pub terms: usize,
}

impl WeierstrassFn {
    /// Truncates once `λ^N ‖ψ‖_∞ / (1 − λ) ≤ tol`.
    pub fn new(psi: PeriodicFn<f64>, lambda: f64, b: u32, tol: f64) -> Result<Self> {
        if b < 2 || !(lambda > 1.0 / b as f64 && lambda < 1.0) {
            return Err(invalid(format!("need 1/b < λ < 1, got λ={lambda}, b={b}")));
        }
        if !(tol > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        let sup = psi.sup_norm(0);
        let mut terms = 1;
        while lambda.powi(terms as i32) * sup / (1.0 - lambda) > tol {
            terms += 1;
        }
        Ok(WeierstrassFn { psi, lambda, b, terms })
    }

    /// Uniform bound `‖ψ‖_∞ / (1 − λ)` on `|W|`.
    pub fn bound(&self) -> f64 {
        self.psi.sup_norm(0) / (1.0 - self.lambda)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bf = self.b as f64;
        let mut t = x - x.floor();
        let mut w = 1.0;
        let mut acc = 0.0;
        for _ in 0..self.terms {
            acc += w * self.psi.eval(t);
            t = bf * t;
            t -= t.floor();
            w *= self.lambda;
        }
        acc
    }

    /// `2 + ln λ / ln b`.
    pub fn predicted_dimension(&self) -> f64 {
        2.0 + self.lambda.ln() / (self.b as f64).ln()
    }
}

/// Graph samples of a Weierstrass-type function: one point at a seeded
/// random position inside each of the `b^resolution` cells of `[0,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeierstrassGraph {
    pub function: WeierstrassFn,
    pub resolution: u32,
    pub seed: u64,
    pub predicted_dimension: f64,
}

pub fn weierstrass_graph(psi: PeriodicFn<f64>, lambda: f64, b: u32, resolution: u32, seed: u64) -> Result<WeierstrassGraph> {
    let function = WeierstrassFn::new(psi, lambda, b, 1e-10)?;
    if scale(b, resolution) > 1e9 {
        return Err(Error::BudgetExceeded { needed: scale(b, resolution), budget: 1e9 });
    }
    let predicted_dimension = function.predicted_dimension();
    Ok(WeierstrassGraph { function, resolution, seed, predicted_dimension })
}

impl WeierstrassGraph {
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let cells = scale(self.function.b, self.resolution) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..cells).map(move |k| {
            let x = (k as f64 + rng.random::<f64>()) / cells as f64;
            (x, self.function.eval(x))
        })
    }

    /// Box-counting estimate over `levels` (each at most the resolution).
    pub fn box_count(&self, levels: &[u32]) -> Result<BoxCountEstimate> {
        let finest = check_levels(levels)?;
        if finest > self.resolution {
            return Err(invalid("box-count level above sampling resolution"));
        }
        let mut counter = GraphBoxCounter::new(self.function.b, finest)?;
        for (x, y) in self.points() {
            counter.add(x, y);
        }
        counter.estimate(levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::cohomological_phi;

    #[test]
    fn predicted_dimension_examples() {
        assert_eq!(predicted_dimension(2, 0.5).unwrap(), 2.0);
        assert!((predicted_dimension(2, 0.4).unwrap() - 1.756_470_798).abs() < 1e-8);
        assert_eq!(predicted_dimension(3, 0.5).unwrap(), 2.0);
        assert!(predicted_dimension(1, 0.5).is_err());
        let mut prev = 1.0;
        for k in 1..100 {
            let d = predicted_dimension(2, k as f64 / 100.0).unwrap();
            assert!(d >= prev && d <= 2.0);
            prev = d;
        }
    }

    #[test]
    fn segment_and_square() {
        let seg = (0..100_000).map(|k| (k as f64 / 100_000.0, 0.3));
        let e = box_count_dimension(seg, 2, &[2, 4, 6, 8], (0.0, 1.0)).unwrap();
        assert!((e.dimension - 1.0).abs() < 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let square: Vec<(f64, f64)> = (0..1_000_000).map(|_| (rng.random(), rng.random())).collect();
        let levels: Vec<u32> = (2..=8).collect();
        let e = box_count_dimension(square, 2, &levels, (0.0, 1.0)).unwrap();
        assert!((e.dimension - 2.0).abs() < 0.05, "{e:?}");
        let point = std::iter::once((0.1, 0.1));
        assert!(box_count_dimension(point, 2, &[2, 3, 4], (0.0, 1.0)).is_err());
        assert!(box_count_dimension(std::iter::empty(), 2, &[2, 3], (0.0, 1.0)).is_err());
    }

    #[test]
    fn graph_counter_matches_bitmap_on_dense_samples() {
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin() * 0.4;
        let xs: Vec<f64> = (0..(1 << 16)).map(|k| (k as f64 + 0.5) / 65536.0).collect();
        let mut g = GraphBoxCounter::new(2, 12).unwrap();
        let mut bm = BoxCounter::new(2, 12, -0.5, 0.5).unwrap();
        for &x in &xs {
            g.add(x, f(x));
            bm.add(x, f(x));
        }
        let levels = [3, 5, 7];
        let (a, b) = (g.counts(&levels).unwrap(), bm.counts(&levels).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((*x as f64 - *y as f64).abs() <= 0.01 * *y as f64, "{a:?} {b:?}");
        }
    }

    #[test]
    fn render_examples() {
        let zero = SystemParams::new(2, 0.4, PeriodicFn::zero(), 1e-12).unwrap();
        let g = render_attractor(&zero, 64, 33, 10_000, 1).unwrap();
        assert_eq!(g.total(), 10_000);
        let occupied_rows: HashSet<usize> =
            (0..g.height).filter(|&r| (0..g.width).any(|c| g.count(c, r) > 0)).collect();
        assert_eq!(occupied_rows.len(), 1);

        let psi = PeriodicFn::cos_mode(1, 1.0);
        let deg = SystemParams::new(2, 0.4, cohomological_phi(&psi, 2, 0.4).unwrap(), 1e-12).unwrap();
        let g = render_attractor(&deg, 128, 128, 50_000, 2).unwrap();
        let pixel = (g.y_max - g.y_min) / g.height as f64;
        for r in 0..g.height {
            for c in 0..g.width {
                if g.count(c, r) > 0 {
                    let x = (c as f64 + 0.5) / g.width as f64;
                    // graph slope ≤ 2π across half a column, plus one pixel
                    let slack = pixel + std::f64::consts::PI / g.width as f64 + 1e-9;
                    assert!((g.row_centre(r) - psi.eval(x)).abs() <= slack);
                }
            }
        }

        let p = SystemParams::new(2, 0.4, PeriodicFn::cos_mode(1, 1.0), 1e-12).unwrap();
        let g = render_attractor(&p, 64, 64, 100_000, 3).unwrap();
        assert_eq!(g.total(), 100_000);
        assert!((0..g.width).all(|c| (0..g.height).any(|r| g.count(c, r) > 0)));
        let mut buf = Vec::new();
        g.write_pgm(&mut buf).unwrap();
        assert_eq!(buf.len(), "P5\n64 64\n255\n".len() + 64 * 64);
        assert_eq!(g, render_attractor(&p, 64, 64, 100_000, 3).unwrap());
    }

    #[test]
    fn weierstrass_examples() {
        let psi = PeriodicFn::cos_mode(1, 1.0);
        let w = weierstrass_graph(psi.clone(), 0.5, 3, 8, 1).unwrap();
        assert!((w.predicted_dimension - 1.369_070_246).abs() < 1e-8);
        let near = WeierstrassFn::new(psi.clone(), 1.0 / 3.0 + 1e-9, 3, 1e-6).unwrap();
        assert!((near.predicted_dimension() - 1.0).abs() < 1e-6);
        assert!(weierstrass_graph(psi.clone(), 0.3, 3, 8, 1).is_err());
        assert!(weierstrass_graph(psi.clone(), 1.0, 3, 8, 1).is_err());
        let f = &w.function;
        let direct: f64 = (0..f.terms).map(|n| 0.5f64.powi(n as i32) * (2.0 * std::f64::consts::PI * 3f64.powi(n as i32) * 0.1).cos()).sum();
        assert!((f.eval(0.1) - direct).abs() < 1e-6);
        assert!(w.points().all(|(x, y)| (0.0..1.0).contains(&x) && y.abs() <= f.bound()));
    }
}
