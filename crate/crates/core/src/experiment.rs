//! Experiment orchestration: runs the configured experiments over the
//! configured systems and writes tables, rasters and a structured summary.
//!
//! Layout under the output directory: `<system>/<experiment>.{csv,pgm,toml}`
//! per system, `weierstrass/weierstrass.*` for the graph bridge, and
//! `summary.toml` collecting every record. Nothing time-dependent is
//! written, so identical configurations give identical files.

use crate::attractor::{attractor_box_dimension, predicted_dimension, render_attractor, weierstrass_graph};
use crate::config::{Experiment, RunConfig, SystemSpec};
use crate::entropy::{dimension_estimate, porosity_fraction, to_nats};
use crate::error::{Error, Result};
use crate::fiber::build_mx_empirical;
use crate::partition::{decomposition_check, scale_constant_from_scan, theta_entropy_table, DecompositionSetup, TailMode};
use crate::separation::{
    condition_h_scan, exp_separation_scan, transversality_search, SuffixSelection, TransversalityCertificate, ENUM_BUDGET,
};
use crate::symbolic::SystemParams;
use crate::PeriodicFn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Outcome of one experiment on one system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    /// Absent for experiments that do not depend on a system.
    pub system: Option<String>,
    /// `"ok"` or `"failed"`; a failure is recorded, not propagated.
    pub status: String,
    pub error: Option<String>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
    pub result: toml::Table,
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub records: Vec<ExperimentRecord>,
}

impl RunReport {
    pub fn find(&self, experiment: &str, system: Option<&str>) -> Option<&ExperimentRecord> {
        self.records.iter().find(|r| r.experiment == experiment && r.system.as_deref() == system)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    seed: u64,
    records: &'a [ExperimentRecord],
    config: &'a RunConfig,
}

fn table<T: Serialize>(v: &T) -> Result<toml::Table> {
    toml::Table::try_from(v).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Outputs<'a> {
    root: &'a Path,
    dir: PathBuf,
    stem: &'static str,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn write(&mut self, ext: &str, bytes: &[u8]) -> Result<()> {
        let rel = self.dir.join(format!("{}.{ext}", self.stem));
        write_atomic(&self.root.join(&rel), bytes)?;
        self.files.push(rel);
        Ok(())
    }
}

/// Runs every configured experiment. The configuration is validated first;
/// unknown experiments and invalid budgets are rejected before any work.
pub fn run_experiment(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let experiments = config.experiment_list()?;
    let root = config.output_dir.as_path();
    fs::create_dir_all(root)?;
    let mut records = Vec::new();
    for &e in &experiments {
        if e.per_system() {
            for sys in &config.systems {
                records.push(run_one(config, e, Some(sys), root)?);
            }
        } else {
            records.push(run_one(config, e, None, root)?);
        }
    }
    let report = RunReport { version: env!("CARGO_PKG_VERSION").to_string(), seed: config.seed, records };
    let summary = Summary { version: &report.version, seed: report.seed, records: &report.records, config };
    let text = toml::to_string(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    write_atomic(&root.join("summary.toml"), text.as_bytes())?;
    Ok(report)
}

fn run_one(config: &RunConfig, e: Experiment, sys: Option<&SystemSpec>, root: &Path) -> Result<ExperimentRecord> {
    let dir = PathBuf::from(sys.map_or("weierstrass", |s| s.name.as_str()));
    let mut out = Outputs { root, dir, stem: e.name(), files: Vec::new() };
    let outcome = match sys {
        Some(s) => s.params().and_then(|p| dispatch(config, e, &p, &mut out)),
        None => weierstrass(config, &mut out),
    };
    let (status, error, result) = match outcome {
        Ok(t) => ("ok", None, t),
        Err(err) => ("failed", Some(err.to_string()), toml::Table::new()),
    };
    let record = ExperimentRecord {
        experiment: e.name().to_string(),
        system: sys.map(|s| s.name.clone()),
        status: status.to_string(),
        error,
        files: out.files.clone(),
        result,
    };
    let text = toml::to_string(&record).map_err(|e| Error::Parse(e.to_string()))?;
    out.write("toml", text.as_bytes())?;
    let mut record = record;
    record.files = out.files;
    Ok(record)
}

fn dispatch(config: &RunConfig, e: Experiment, p: &SystemParams<f64>, out: &mut Outputs) -> Result<toml::Table> {
    match e {
        Experiment::DimEstimate => dim_estimate(config, p, out),
        Experiment::SeparationScan => separation(config, p, out),
        Experiment::DichotomyCheck => dichotomy(config, p),
        Experiment::Porosity => porosity(config, p, out),
        Experiment::ThetaEntropy => theta_entropy(config, p, out),
        Experiment::DecompositionCheck => decomposition(config, p),
        Experiment::Render => render(config, p, out),
        Experiment::Weierstrass => unreachable!("weierstrass has no system"),
    }
}

fn levels(r: [u32; 2]) -> Vec<u32> {
    (r[0]..=r[1]).collect()
}

/// Certified bound on the truncation error of every fiber value.
fn truncation_bound(p: &SystemParams<f64>) -> f64 {
    p.tail_bound(p.depth(), 0)
}

#[derive(Serialize)]
struct DimSummary {
    x: f64,
    samples: usize,
    levels: [u32; 2],
    slope: f64,
    slope_nats_per_level: f64,
    fiber_predicted: f64,
    orbit_points: usize,
    box_levels: [u32; 2],
    box_dimension: f64,
    predicted_dimension: f64,
    truncation_bound: f64,
}

fn dim_estimate(config: &RunConfig, p: &SystemParams<f64>, out: &mut Outputs) -> Result<toml::Table> {
    let bud = &config.budgets;
    let x = config.base_point;
    let profile = dimension_estimate(
        |l| build_mx_empirical(p, x, l, bud.samples, config.seed),
        &levels(bud.entropy_levels),
    )?;
    let boxes = attractor_box_dimension(p, &levels(bud.box_levels), bud.orbit_points, config.seed)?;
    let predicted = predicted_dimension(p.b(), p.gamma())?;
    let mut csv = String::from("kind,level,value\n");
    for (l, h) in profile.levels.iter().zip(&profile.entropies) {
        writeln!(csv, "entropy,{l},{h}").unwrap();
    }
    for (l, c) in boxes.levels.iter().zip(&boxes.counts) {
        writeln!(csv, "boxes,{l},{c}").unwrap();
    }
    out.write("csv", csv.as_bytes())?;
    table(&DimSummary {
        x,
        samples: bud.samples,
        levels: bud.entropy_levels,
        slope: profile.slope,
        slope_nats_per_level: to_nats(profile.slope, p.b()),
        fiber_predicted: predicted - 1.0,
        orbit_points: bud.orbit_points,
        box_levels: bud.box_levels,
        box_dimension: boxes.dimension,
        predicted_dimension: predicted,
        truncation_bound: truncation_bound(p),
    })
}

#[derive(Serialize)]
struct SeparationSummary {
    ell: usize,
    epsilon: f64,
    levels: [u32; 2],
    points: Vec<f64>,
    empirical_epsilon: Vec<f64>,
    all_passing: Vec<bool>,
    epsilon_spread: f64,
    sampled: bool,
    truncation_bound: f64,
}

fn separation(config: &RunConfig, p: &SystemParams<f64>, out: &mut Outputs) -> Result<toml::Table> {
    let bud = &config.budgets;
    let ns = levels(bud.separation_levels);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points: Vec<f64> = (0..bud.separation_points).map(|_| rng.random()).collect();
    let selection = if (p.b() as f64).powi(bud.separation_ell as i32) <= ENUM_BUDGET {
        SuffixSelection::All
    } else {
        SuffixSelection::Sampled { count: 1 << 12, seed: config.seed }
    };
    let mut csv = String::from("x,n,nhat,min_gap,threshold,passes\n");
    let mut eps = Vec::new();
    let mut all = Vec::new();
    for &x in &points {
        let scan = exp_separation_scan(p, x, bud.separation_ell, bud.epsilon, &ns, selection)?;
        for (k, &n) in scan.n_list.iter().enumerate() {
            let passes = scan.passing.contains(&n);
            writeln!(csv, "{x},{n},{},{},{},{passes}", scan.word_lengths[k], scan.min_gaps[k], scan.thresholds[k]).unwrap();
        }
        all.push(scan.passing.len() == ns.len());
        eps.push(scan.empirical_epsilon);
    }
    out.write("csv", csv.as_bytes())?;
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(0.0, f64::max);
    table(&SeparationSummary {
        ell: bud.separation_ell,
        epsilon: bud.epsilon,
        levels: bud.separation_levels,
        points,
        empirical_epsilon: eps,
        all_passing: all,
        epsilon_spread: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        sampled: selection != SuffixSelection::All,
        truncation_bound: truncation_bound(p),
    })
}

#[derive(Serialize)]
struct DichotomySummary {
    verdict: String,
    sup_gap: f64,
    budget: f64,
    tail: f64,
    grid_modulus: f64,
    grid_size: usize,
    word_depth: usize,
    witness_i: Option<String>,
    witness_j: Option<String>,
    witness_x: Option<f64>,
    witness_gap: Option<f64>,
}

fn dichotomy(config: &RunConfig, p: &SystemParams<f64>) -> Result<toml::Table> {
    let bud = &config.budgets;
    let v = condition_h_scan(p, bud.grid_size, bud.word_depth)?;
    let w = v.witness.as_ref();
    table(&DichotomySummary {
        verdict: v.verdict.to_string(),
        sup_gap: v.sup_gap,
        budget: v.budget,
        tail: v.tail,
        grid_modulus: v.grid_modulus,
        grid_size: bud.grid_size,
        word_depth: bud.word_depth,
        witness_i: w.map(|w| w.i.to_string()),
        witness_j: w.map(|w| w.j.to_string()),
        witness_x: w.map(|w| w.x),
        witness_gap: w.map(|w| w.gap),
    })
}

fn porosity(config: &RunConfig, p: &SystemParams<f64>, out: &mut Outputs) -> Result<toml::Table> {
    let bud = &config.budgets;
    let [n1, n2] = bud.porosity_levels;
    let mu = build_mx_empirical(p, config.base_point, n2 + bud.porosity_m, bud.samples, config.seed)?;
    let report = porosity_fraction(&mu, bud.porosity_h, bud.porosity_delta, bud.porosity_m, n1, n2)?;
    let mut csv = String::from("level,fraction\n");
    for (i, f) in (n1..=n2).zip(&report.per_level) {
        writeln!(csv, "{i},{f}").unwrap();
    }
    out.write("csv", csv.as_bytes())?;
    let mut t = table(&report)?;
    t.insert("samples".into(), toml::Value::Integer(bud.samples as i64));
    Ok(t)
}

fn certificate(config: &RunConfig, p: &SystemParams<f64>) -> Result<TransversalityCertificate> {
    let search = transversality_search(p, &config.budgets.theta_t, config.budgets.grid_size)?;
    search.certificate.ok_or_else(|| {
        Error::Degenerate(format!("no transversality certificate for t in {:?}: best {:?}", config.budgets.theta_t, search.best_by_t))
    })
}

#[derive(Serialize)]
struct ThetaSummary {
    certificate: TransversalityCertificate,
    scale_constant: f64,
    levels: [u32; 2],
    fine: Vec<f64>,
    coarse: Vec<f64>,
    ceiling: Vec<f64>,
}

fn theta_entropy(config: &RunConfig, p: &SystemParams<f64>, out: &mut Outputs) -> Result<toml::Table> {
    let cert = certificate(config, p)?;
    let ns = levels(config.budgets.theta_levels);
    let scan = exp_separation_scan(p, cert.x0, cert.t as usize, config.budgets.epsilon, &ns, SuffixSelection::All)?;
    let c = scale_constant_from_scan(p, &scan)?;
    let rows = theta_entropy_table(p, &cert, &ns, c)?;
    let mut csv = String::from("n,nhat,support,coarse,fine,fine_level,ceiling,fine_classes\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.n, r.nhat, r.support, r.coarse, r.fine, r.fine_level, r.ceiling, r.fine_classes
        )
        .unwrap();
    }
    out.write("csv", csv.as_bytes())?;
    table(&ThetaSummary {
        certificate: cert,
        scale_constant: c,
        levels: config.budgets.theta_levels,
        fine: rows.iter().map(|r| r.fine).collect(),
        coarse: rows.iter().map(|r| r.coarse).collect(),
        ceiling: rows.iter().map(|r| r.ceiling).collect(),
    })
}

fn decomposition(config: &RunConfig, p: &SystemParams<f64>) -> Result<toml::Table> {
    let bud = &config.budgets;
    let cert = certificate(config, p)?;
    let setup = DecompositionSetup {
        t: cert.t,
        x0: cert.x0,
        n: bud.decomposition_n,
        i_level: bud.decomposition_i,
        level: bud.decomposition_level,
    };
    let report = decomposition_check(p, &setup, TailMode::Sampled { budget: bud.tail_budget, seed: config.seed })?;
    let mut t = table(&report)?;
    t.insert("t".into(), toml::Value::Integer(cert.t as i64));
    t.insert("x0".into(), toml::Value::Float(cert.x0));
    t.insert("within_budget".into(), toml::Value::Boolean(report.residual <= report.budget));
    Ok(t)
}

#[derive(Serialize)]
struct RenderSummary {
    width: usize,
    height: usize,
    y_min: f64,
    y_max: f64,
    points: u64,
    occupied: usize,
}

fn render(config: &RunConfig, p: &SystemParams<f64>, out: &mut Outputs) -> Result<toml::Table> {
    let bud = &config.budgets;
    let grid = render_attractor(p, bud.raster_width, bud.raster_height, bud.orbit_points, config.seed)?;
    let mut pgm = Vec::new();
    grid.write_pgm(&mut pgm)?;
    out.write("pgm", &pgm)?;
    table(&RenderSummary {
        width: grid.width,
        height: grid.height,
        y_min: grid.y_min,
        y_max: grid.y_max,
        points: grid.total(),
        occupied: grid.counts.iter().filter(|&&c| c > 0).count(),
    })
}

/// At most this many graph points go to the point table.
const MAX_POINT_ROWS: u64 = 1 << 16;

#[derive(Serialize)]
struct WeierstrassSummary {
    lambda: f64,
    b: u32,
    resolution: u32,
    levels: [u32; 2],
    box_dimension: f64,
    predicted_dimension: f64,
    series_bound: f64,
}

fn weierstrass(config: &RunConfig, out: &mut Outputs) -> Result<toml::Table> {
    let w = &config.weierstrass;
    let psi = PeriodicFn::from_triples(&w.psi)?;
    let graph = weierstrass_graph(psi, w.lambda, w.b, w.resolution, config.seed)?;
    let est = graph.box_count(&levels(w.levels))?;
    let cells = (w.b as u64).pow(w.resolution);
    let stride = cells.div_ceil(MAX_POINT_ROWS).max(1) as usize;
    let mut csv = String::from("x,y\n");
    for (x, y) in graph.points().step_by(stride) {
        writeln!(csv, "{x},{y}").unwrap();
    }
    out.write("csv", csv.as_bytes())?;
    table(&WeierstrassSummary {
        lambda: w.lambda,
        b: w.b,
        resolution: w.resolution,
        levels: w.levels,
        box_dimension: est.dimension,
        predicted_dimension: graph.predicted_dimension,
        series_bound: graph.function.bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Budgets;

    fn small_config(dir: &Path, experiments: &[&str]) -> RunConfig {
        RunConfig {
            output_dir: dir.to_path_buf(),
            seed: 7,
            experiments: experiments.iter().map(|s| s.to_string()).collect(),
            budgets: Budgets {
                samples: 20_000,
                entropy_levels: [4, 8],
                orbit_points: 20_000,
                box_levels: [3, 6],
                raster_width: 64,
                raster_height: 32,
                grid_size: 128,
                word_depth: 6,
                separation_levels: [6, 8],
                separation_points: 2,
                porosity_levels: [2, 4],
                theta_levels: [4, 6],
                tail_budget: 1 << 10,
                ..Budgets::default()
            },
            weierstrass: crate::config::WeierstrassSpec { resolution: 8, levels: [3, 6], ..Default::default() },
            ..RunConfig::default()
        }
    }

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("solenoid-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn empty_list_gives_empty_report() {
        let dir = scratch("empty");
        let report = run_experiment(&small_config(&dir, &[])).unwrap();
        assert!(report.records.is_empty());
        assert!(dir.join("summary.toml").exists());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unknown_experiment_rejected_before_work() {
        let dir = scratch("unknown");
        let err = run_experiment(&small_config(&dir, &["dim-estimate", "spectrum"])).unwrap_err();
        assert!(matches!(err, Error::UnknownExperiment(_)));
        assert!(!dir.join("summary.toml").exists());
    }

    #[test]
    fn invalid_budget_rejected() {
        let dir = scratch("budget");
        let mut c = small_config(&dir, &["render"]);
        c.budgets.orbit_points = 0;
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn cohomological_system_reports_h_star() {
        let dir = scratch("dichotomy");
        let report = run_experiment(&small_config(&dir, &["dichotomy-check"])).unwrap();
        let rec = report.find("dichotomy-check", Some("b2-g0.4-coh-cos")).unwrap();
        assert_eq!(rec.result["verdict"].as_str(), Some("H*"));
        let rec = report.find("dichotomy-check", Some("b2-g0.4-cos")).unwrap();
        assert_eq!(rec.result["verdict"].as_str(), Some("H"));
        let summary = fs::read_to_string(dir.join("summary.toml")).unwrap();
        assert!(summary.contains("verdict = \"H*\""));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn dim_estimate_reports_slope_beside_prediction() {
        let dir = scratch("dim");
        let mut c = small_config(&dir, &["dim-estimate"]);
        c.systems.truncate(1);
        let report = run_experiment(&c).unwrap();
        let r = &report.records[0].result;
        assert!(r.contains_key("slope") && r.contains_key("predicted_dimension"));
        assert!((r["predicted_dimension"].as_float().unwrap() - 1.75647).abs() < 1e-4);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn every_experiment_runs_and_is_reproducible() {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        let (d1, d2) = (scratch("all1"), scratch("all2"));
        let mut c = small_config(&d1, &names);
        c.systems.truncate(1);
        let r1 = run_experiment(&c).unwrap();
        for rec in &r1.records {
            assert_eq!(rec.status, "ok", "{} failed: {:?}", rec.experiment, rec.error);
        }
        c.output_dir = d2.clone();
        run_experiment(&c).unwrap();
        for rec in &r1.records {
            for f in &rec.files {
                assert_eq!(fs::read(d1.join(f)).unwrap(), fs::read(d2.join(f)).unwrap(), "{f:?} differs");
            }
        }
        assert!(d1.join("b2-g0.4-cos/render.pgm").exists());
        fs::remove_dir_all(&d1).unwrap();
        fs::remove_dir_all(&d2).unwrap();
    }
}
