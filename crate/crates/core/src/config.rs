//! Run configuration: the systems to study, the experiments to run on them,
//! and every work budget, as one structured-text document.

use crate::analytic::{cohomological_phi, PeriodicFn, DEFAULT_MAX_ORDER};
use crate::error::{invalid, Error, Result};
use crate::separation::DEFAULT_X0;
use crate::symbolic::SystemParams;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::str::FromStr;

/// The experiments [`crate::experiment::run_experiment`] can dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    DimEstimate,
    SeparationScan,
    DichotomyCheck,
    Porosity,
    ThetaEntropy,
    DecompositionCheck,
    Render,
    Weierstrass,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::DimEstimate,
        Experiment::SeparationScan,
        Experiment::DichotomyCheck,
        Experiment::Porosity,
        Experiment::ThetaEntropy,
        Experiment::DecompositionCheck,
        Experiment::Render,
        Experiment::Weierstrass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DimEstimate => "dim-estimate",
            Experiment::SeparationScan => "separation-scan",
            Experiment::DichotomyCheck => "dichotomy-check",
            Experiment::Porosity => "porosity",
            Experiment::ThetaEntropy => "theta-entropy",
            Experiment::DecompositionCheck => "decomposition-check",
            Experiment::Render => "render",
            Experiment::Weierstrass => "weierstrass",
        }
    }

    /// Whether the experiment runs once per system (all but `weierstrass`).
    pub fn per_system(self) -> bool {
        self != Experiment::Weierstrass
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_order() -> u32 {
    DEFAULT_MAX_ORDER
}

/// One system `(b, γ, φ)`. With `cohomological = true` the triples describe
/// `ψ` and the system uses `φ(x) = ψ(bx) − γψ(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub b: u32,
    pub gamma: f64,
    /// `(k, a_k, b_k)` triples of `Σ a_k cos 2πkx + b_k sin 2πkx`.
    pub phi: Vec<(usize, f64, f64)>,
    #[serde(default)]
    pub cohomological: bool,
    #[serde(default = "default_tol")]
    pub truncation_tol: f64,
    #[serde(default = "default_max_order")]
    pub max_order: u32,
}

impl SystemSpec {
    pub fn new(name: &str, b: u32, gamma: f64, phi: Vec<(usize, f64, f64)>, cohomological: bool) -> Self {
        Self {
            name: name.to_string(),
            b,
            gamma,
            phi,
            cohomological,
            truncation_tol: default_tol(),
            max_order: default_max_order(),
        }
    }

    pub fn params(&self) -> Result<SystemParams<f64>> {
        let f = PeriodicFn::from_triples(&self.phi)?.with_max_order(self.max_order);
        let phi = if self.cohomological {
            cohomological_phi(&f, self.b, self.gamma)?.with_max_order(self.max_order)
        } else {
            f
        };
        SystemParams::new(self.b, self.gamma, phi, self.truncation_tol)
    }
}

/// The four reference systems: `bγ < 1`, near area preservation, the
/// two-dimensional regime, and the degenerate graph case.
pub fn default_corpus() -> Vec<SystemSpec> {
    let cos = vec![(1, 1.0, 0.0)];
    vec![
        SystemSpec::new("b2-g0.4-cos", 2, 0.4, cos.clone(), false),
        SystemSpec::new("b2-g0.45-cos", 2, 0.45, cos.clone(), false),
        SystemSpec::new("b3-g0.5-cos", 3, 0.5, cos.clone(), false),
        SystemSpec::new("b2-g0.4-coh-cos", 2, 0.4, cos, true),
    ]
}

/// Work budgets and scales. Ranges are inclusive `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Digit words sampled per fiber measure.
    pub samples: usize,
    pub entropy_levels: [u32; 2],
    /// Orbit points for rendering and box counting.
    pub orbit_points: usize,
    pub box_levels: [u32; 2],
    pub raster_width: usize,
    pub raster_height: usize,
    /// Base points in dichotomy and transversality grids.
    pub grid_size: usize,
    /// Word length enumerated by the dichotomy scan.
    pub word_depth: usize,
    pub separation_ell: usize,
    pub separation_levels: [u32; 2],
    /// Random base points examined by the separation scan.
    pub separation_points: usize,
    pub epsilon: f64,
    pub porosity_h: f64,
    pub porosity_delta: f64,
    pub porosity_m: u32,
    pub porosity_levels: [u32; 2],
    pub theta_t: Vec<u32>,
    pub theta_levels: [u32; 2],
    pub decomposition_n: u32,
    pub decomposition_i: u32,
    pub decomposition_level: u32,
    /// Sampled tail words in the decomposition check.
    pub tail_budget: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            samples: 2_000_000,
            entropy_levels: [8, 14],
            orbit_points: 2_000_000,
            box_levels: [4, 10],
            raster_width: 1024,
            raster_height: 512,
            grid_size: 1024,
            word_depth: 10,
            separation_ell: 4,
            separation_levels: [8, 14],
            separation_points: 4,
            epsilon: 0.1,
            porosity_h: 0.75,
            porosity_delta: 0.1,
            porosity_m: 4,
            porosity_levels: [4, 10],
            theta_t: vec![1, 2, 3, 4],
            theta_levels: [8, 14],
            decomposition_n: 6,
            decomposition_i: 4,
            decomposition_level: 6,
            tail_budget: 1 << 16,
        }
    }
}

fn range(name: &str, r: [u32; 2], min_len: u32) -> Result<()> {
    if r[0] > r[1] || r[1] - r[0] + 1 < min_len {
        return Err(invalid(format!("{name} = {r:?} must be an increasing range of at least {min_len} levels")));
    }
    Ok(())
}

impl Budgets {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("samples", self.samples),
            ("orbit_points", self.orbit_points),
            ("raster_width", self.raster_width),
            ("raster_height", self.raster_height),
            ("grid_size", self.grid_size),
            ("word_depth", self.word_depth),
            ("separation_ell", self.separation_ell),
            ("separation_points", self.separation_points),
            ("tail_budget", self.tail_budget),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(invalid(format!("budget {name} must be positive")));
            }
        }
        let levels = [
            ("porosity_m", self.porosity_m),
            ("decomposition_n", self.decomposition_n),
            ("decomposition_i", self.decomposition_i),
            ("decomposition_level", self.decomposition_level),
        ];
        for (name, v) in levels {
            if v == 0 {
                return Err(invalid(format!("budget {name} must be positive")));
            }
        }
        range("entropy_levels", self.entropy_levels, 3)?;
        range("box_levels", self.box_levels, 3)?;
        range("separation_levels", self.separation_levels, 1)?;
        range("porosity_levels", self.porosity_levels, 1)?;
        range("theta_levels", self.theta_levels, 1)?;
        if self.theta_levels[0] == 0 {
            return Err(invalid("theta_levels must start at 1 or above"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.porosity_h >= 0.0 && self.porosity_delta > 0.0) {
            return Err(invalid("porosity needs h ≥ 0 and δ > 0"));
        }
        if self.theta_t.is_empty() || self.theta_t.contains(&0) {
            return Err(invalid("theta_t must list positive prefix lengths"));
        }
        Ok(())
    }

    /// Overrides one budget from `key=value` text, with the value in the
    /// config's own syntax (`samples=1000000`, `box_levels=[4, 9]`).
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| invalid(format!("budget override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let parsed: toml::Table =
            toml::from_str(&format!("v = {}", value.trim())).map_err(|e| Error::Parse(e.to_string()))?;
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Parse(e.to_string()))?;
        if !table.contains_key(key) {
            return Err(invalid(format!("unknown budget `{key}`")));
        }
        table.insert(key.to_string(), parsed["v"].clone());
        *self = table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        Ok(())
    }
}

/// The Weierstrass-graph experiment `W(x) = Σ λⁿ ψ(bⁿx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeierstrassSpec {
    pub psi: Vec<(usize, f64, f64)>,
    pub lambda: f64,
    pub b: u32,
    /// Graph sampled on `b^resolution` cells.
    pub resolution: u32,
    pub levels: [u32; 2],
}

impl Default for WeierstrassSpec {
    fn default() -> Self {
        Self { psi: vec![(1, 1.0, 0.0)], lambda: 0.5, b: 3, resolution: 12, levels: [4, 10] }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_base_point() -> f64 {
    DEFAULT_X0
}

/// Everything a run needs. Scalar fields come first so the document
/// serializes as valid structured text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Base point `x` of the fiber measures `m_x`.
    #[serde(default = "default_base_point")]
    pub base_point: f64,
    #[serde(default)]
    pub experiments: Vec<String>,
    #[serde(default = "default_corpus")]
    pub systems: Vec<SystemSpec>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub weierstrass: WeierstrassSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: default_output_dir(),
            seed: 0,
            base_point: default_base_point(),
            experiments: Vec::new(),
            systems: default_corpus(),
            budgets: Budgets::default(),
            weierstrass: WeierstrassSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Parsed experiment list; unknown names are rejected.
    pub fn experiment_list(&self) -> Result<Vec<Experiment>> {
        self.experiments.iter().map(|s| s.parse()).collect()
    }

    /// Checks every field and builds each system once.
    pub fn validate(&self) -> Result<()> {
        self.experiment_list()?;
        self.budgets.validate()?;
        if self.seed > i64::MAX as u64 {
            return Err(invalid(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        if !(0.0..1.0).contains(&self.base_point) {
            return Err(invalid(format!("base point {} must lie in [0, 1)", self.base_point)));
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.systems {
            if !names.insert(s.name.as_str()) {
                return Err(invalid(format!("duplicate system name `{}`", s.name)));
            }
            if s.name.is_empty() || s.name.contains(['/', '\\']) {
                return Err(invalid(format!("system name `{}` is not a plain file name", s.name)));
            }
            s.params()?;
        }
        let w = &self.weierstrass;
        PeriodicFn::<f64>::from_triples(&w.psi)?;
        range("weierstrass.levels", w.levels, 3)?;
        if w.resolution < w.levels[1] {
            return Err(invalid("weierstrass resolution must reach the finest box level"));
        }
        Ok(())
    }
}
