//! Scenario runs, lemma reports, record analysis and the soliton check,
//! each writing its artifacts into an output directory.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::lemmas::{calibration_of, sweep, Calibration, Corpus, LemmaReport, LemmaTag};
use crate::records::{format_float, load_records, save_records, write_plots, RecordRow};
use crate::soliton::{certified_soliton, profile_residual, soliton, SolitonParams, VALIDATION_TOL};
use crate::solver::{l1_growth_fit, Stepper, TrajectoryState};
use crate::spectral::{Field, Grid};
use crate::virial::{
    energy_budget, integrated_decay, mass_budget, DiagRecord, DyadicMinimum, Stencil, WeightSchedule,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BO_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "out";

pub const RECORDS_FILE: &str = "records.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LEMMAS_FILE: &str = "lemmas.csv";
pub const LEMMA_SUMMARY_FILE: &str = "lemmas_summary.json";

/// Drift thresholds used to flag records: absolute for `I1`, relative for
/// `I2` and `E`.
pub const I1_DRIFT_TOL: f64 = 1e-10;
pub const I2_DRIFT_TOL: f64 = 1e-8;
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    pub steps: u64,
    pub records: usize,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => 0,
            RunStatus::Aborted => 3,
        }
    }
}

/// Records of an integration; `abort` holds the blow-up that cut it short.
#[derive(Debug)]
pub struct Simulation {
    pub rows: Vec<RecordRow>,
    pub steps: u64,
    pub abort: Option<Error>,
}

/// Integrates the scenario from `t0` to `t_end`, recording every
/// `record_every` steps. Budgets fill in at records with both neighbours.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let schedule = cfg.schedule()?;
    let (u0, _) = cfg.initial_data()?;
    let solver = &cfg.solver;
    let mut stepper = Stepper::new(&grid, solver)?;
    let total = solver.step_count();
    let every = solver.record_every as u64;
    let h = every as f64 * solver.dt;

    let mut rows = Vec::new();
    let mut window: VecDeque<(Field, f64)> = VecDeque::with_capacity(3);
    let mut record = |u: &Field, t: f64, rows: &mut Vec<RecordRow>| -> Result<()> {
        rows.push(RecordRow::new(DiagRecord::capture(u, t, &schedule)?, None, None));
        window.push_back((u.clone(), t));
        if window.len() == 3 {
            let st = Stencil {
                prev: &window[0].0,
                mid: &window[1].0,
                next: &window[2].0,
                t: window[1].1,
                h,
            };
            let m = mass_budget(&st, &schedule, solver.dealias)?;
            let e = energy_budget(&st, &schedule)?;
            let at = rows.len() - 2;
            rows[at] = RecordRow::new(rows[at].diag, Some(&m), Some(&e));
            window.pop_front();
        }
        Ok(())
    };

    let mut state = TrajectoryState::new(u0, solver.t0);
    record(&state.u, state.t, &mut rows)?;
    while state.step + every <= total {
        match stepper.advance(&state, every) {
            Ok(mut next) => {
                next.t = solver.t0 + next.step as f64 * solver.dt;
                state = next;
            }
            Err(err @ Error::NonFinite { .. }) => {
                return Ok(Simulation {
                    rows,
                    steps: state.step,
                    abort: Some(err),
                })
            }
            Err(err) => return Err(err),
        }
        record(&state.u, state.t, &mut rows)?;
    }
    Ok(Simulation {
        rows,
        steps: state.step,
        abort: None,
    })
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Runs `cfg` and writes `records.csv`, the plot files and `manifest.json`
/// into `dir`. A blow-up still writes everything, with status `aborted`.
pub fn run(cfg: &ScenarioConfig, dir: &Path) -> Result<RunManifest> {
    let started_unix = unix_now();
    let clock = Instant::now();
    let sim = simulate(cfg)?;
    fs::create_dir_all(dir)?;
    save_records(&dir.join(RECORDS_FILE), &sim.rows)?;
    write_plots(dir, &sim.rows)?;
    let manifest = RunManifest {
        config: cfg.entries(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        steps: sim.steps,
        records: sim.rows.len(),
        status: if sim.abort.is_some() {
            RunStatus::Aborted
        } else {
            RunStatus::Ok
        },
        message: sim.abort.map(|e| e.to_string()),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Output directory: explicit choice, then the environment, then `out`.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaTagSummary {
    pub calibration: Calibration,
    /// Supremum of the signed ratio at each lambda, in request order.
    pub sup_ratio_by_lambda: Vec<(f64, f64)>,
    pub sup_abs_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub seed: u64,
    pub grid_n: usize,
    pub grid_length: f64,
    pub lambdas: Vec<f64>,
    pub corpus_size: usize,
    pub tags: BTreeMap<String, LemmaTagSummary>,
}

/// Every `(entry, lambda, tag)` report over the seeded corpus, plus the
/// per-tag calibration.
pub fn lemma_reports(
    seed: u64,
    n: usize,
    length: f64,
    lambdas: &[f64],
) -> Result<(Vec<LemmaReport>, LemmaSummary)> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty lambda list".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!("lambda = {bad} must be > 0")));
    }
    let grid = Grid::new(n, length)?;
    let corpus = Corpus::generate(seed, &grid)?;
    let mut all = Vec::new();
    let mut tags = BTreeMap::new();
    for tag in LemmaTag::ALL {
        let reports = sweep(&corpus, tag, lambdas)?;
        let sup_ratio_by_lambda = lambdas
            .iter()
            .map(|&l| {
                let sup = reports
                    .iter()
                    .filter(|r| r.lambda == l)
                    .map(|r| r.ratio)
                    .fold(f64::NEG_INFINITY, f64::max);
                (l, sup)
            })
            .collect();
        let sup_abs_ratio = reports.iter().map(|r| r.abs_ratio()).fold(0.0, f64::max);
        tags.insert(
            tag.to_string(),
            LemmaTagSummary {
                calibration: calibration_of(tag, &reports),
                sup_ratio_by_lambda,
                sup_abs_ratio,
            },
        );
        all.extend(reports);
    }
    let summary = LemmaSummary {
        seed,
        grid_n: n,
        grid_length: length,
        lambdas: lambdas.to_vec(),
        corpus_size: corpus.len(),
        tags,
    };
    Ok((all, summary))
}

/// Writes `lemmas.csv` (one row per entry, lambda and tag) and
/// `lemmas_summary.json` into `dir`.
pub fn check_lemmas(seed: u64, n: usize, length: f64, lambdas: &[f64], dir: &Path) -> Result<LemmaSummary> {
    let (reports, summary) = lemma_reports(seed, n, length, lambdas)?;
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(LEMMAS_FILE))?));
    let csv_err = |e: csv::Error| Error::Io(e.into());
    w.write_record([
        "tag",
        "lambda",
        "input_id",
        "lhs",
        "rhs_unit",
        "ratio",
        "abs_ratio",
    ])
    .map_err(csv_err)?;
    for r in &reports {
        w.write_record([
            r.tag.to_string(),
            format_float(r.lambda),
            r.input_id.clone(),
            format_float(r.lhs),
            format_float(r.rhs_unit),
            format_float(r.ratio),
            format_float(r.abs_ratio()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    write_json(&dir.join(LEMMA_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub i1_abs: f64,
    pub i2_rel: f64,
    pub energy_rel: f64,
    pub i1_flagged: bool,
    pub i2_flagged: bool,
    pub energy_flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub records: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub integrated_decay: f64,
    /// `log log t_end - log log t_start`: the integral for `F = 1`.
    pub eta_integral: f64,
    pub dyadic_minima: Vec<DyadicMinimum>,
    pub minima_strictly_decreasing: bool,
    pub l1_growth_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l1_growth_note: Option<String>,
    pub drift: DriftSummary,
    /// Largest relative gap between the recorded lambda and the schedule
    /// `(a, c)` passed to the analysis.
    pub lambda_mismatch: f64,
    pub max_mass_residual_rel: Option<f64>,
    pub max_energy_residual_rel: Option<f64>,
}

fn rel(value: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        value.abs()
    } else {
        (value / scale).abs()
    }
}

/// Summary of a records series under the schedule `(a, c)`.
pub fn analyze_rows(rows: &[RecordRow], schedule: &WeightSchedule) -> Result<AnalysisSummary> {
    let diags: Vec<DiagRecord> = rows.iter().map(|r| r.diag).filter(|d| d.t >= 10.0).collect();
    let (first, last) = match (diags.first(), diags.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::InsufficientData("no records at t >= 10".into())),
    };
    // one complete dyadic block [2^k, 2^{k+1}) with 2^k >= 10
    let first_block = 10f64.log2().ceil();
    if last.t < 2f64.powf(first_block + 1.0) {
        return Err(Error::InsufficientData(format!(
            "records end at t = {}, before the first full dyadic block past 10 closes",
            last.t
        )));
    }
    if diags.iter().any(|d| !d.t.is_finite() || !d.f.is_finite()) {
        return Err(Error::Records("non-finite t or F".into()));
    }
    let decay = integrated_decay(&diags)?;
    let (l1_growth_exponent, l1_growth_note) = match l1_growth_fit(&diags) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let fold_max = |f: &dyn Fn(&DiagRecord) -> f64| diags.iter().map(f).fold(0.0, f64::max);
    let i1_abs = fold_max(&|d| (d.i1 - first.i1).abs());
    let i2_rel = fold_max(&|d| rel(d.i2 - first.i2, first.i2));
    let energy_rel = fold_max(&|d| rel(d.energy - first.energy, first.energy));
    let mut lambda_mismatch: f64 = 0.0;
    for d in &diags {
        lambda_mismatch = lambda_mismatch.max(rel(d.lambda - schedule.lambda_at(d.t)?, d.lambda));
    }
    let budget_max = |pick: &dyn Fn(&RecordRow) -> (f64, f64)| {
        rows.iter()
            .filter(|r| r.has_budgets())
            .map(|r| {
                let (res, scale) = pick(r);
                rel(res, scale)
            })
            .reduce(f64::max)
    };
    let abs_max = |v: &[f64]| v.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    Ok(AnalysisSummary {
        records: rows.len(),
        t_start: first.t,
        t_end: last.t,
        integrated_decay: decay.integral,
        eta_integral: crate::virial::eta_integral(first.t, last.t),
        minima_strictly_decreasing: decay.minima_strictly_decreasing(),
        dyadic_minima: decay.minima,
        l1_growth_exponent,
        l1_growth_note,
        drift: DriftSummary {
            i1_abs,
            i2_rel,
            energy_rel,
            i1_flagged: i1_abs > I1_DRIFT_TOL,
            i2_flagged: i2_rel > I2_DRIFT_TOL,
            energy_flagged: energy_rel > ENERGY_DRIFT_TOL,
        },
        lambda_mismatch,
        max_mass_residual_rel: budget_max(&|r| (r.mass_residual, abs_max(&r.a))),
        max_energy_residual_rel: budget_max(&|r| (r.energy_residual, abs_max(&r.b))),
    })
}

/// Reads a records file and writes `summary.json` next to it, or to `out`.
pub fn analyze(records: &Path, a: f64, c: f64, out: Option<&Path>) -> Result<AnalysisSummary> {
    let schedule = WeightSchedule::new(a, c)?;
    let rows = load_records(records)?;
    let summary = analyze_rows(&rows, &schedule)?;
    let target = match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            dir.join(SUMMARY_FILE)
        }
        None => records.parent().unwrap_or(Path::new(".")).join(SUMMARY_FILE),
    };
    write_json(&target, &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub label: String,
    pub params: SolitonParams,
    pub residual: f64,
    pub validated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonReport {
    pub grid_n: usize,
    pub grid_length: f64,
    pub tolerance: f64,
    pub classical: ProfileCheck,
    pub certified: ProfileCheck,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub family: Vec<ProfileCheck>,
}

fn profile_check(label: String, params: SolitonParams, grid: &std::sync::Arc<Grid>) -> ProfileCheck {
    let residual = profile_residual(&params, grid);
    ProfileCheck {
        label,
        params,
        residual,
        validated: residual <= VALIDATION_TOL,
    }
}

/// Profile residuals of the classical `(4c, c)` wave and the certified
/// `(-2c, -c)` wave; with `family`, also the certified members at scales
/// `c/2, 2c, 4c` that fit on the grid.
pub fn soliton_test(c: f64, family: bool, n: usize, length: f64) -> Result<SolitonReport> {
    let grid = Grid::new(n, length)?;
    let (_, classical) = soliton(c, 0.0, &grid)?;
    let (_, certified) = certified_soliton(c, 0.0, &grid)?;
    let mut members = Vec::new();
    if family {
        for factor in [0.5, 2.0, 4.0] {
            let b = c * factor;
            match certified_soliton(b, 0.0, &grid) {
                Ok((_, p)) => members.push(profile_check(format!("certified B={b}"), p, &grid)),
                Err(Error::ProfileTooWide { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(SolitonReport {
        grid_n: n,
        grid_length: length,
        tolerance: VALIDATION_TOL,
        classical: profile_check(format!("classical c={c}"), classical, &grid),
        certified: profile_check(format!("certified B={c}"), certified, &grid),
        family: members,
    })
}
