//! Random-center trials, RMSE statistics, the singularity census and their
//! CSV reports.

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, CenterGenerator};
use crate::error::{KansaError, Result};
use crate::geometry::{classify, tensor_grid, CollocationSet, Point};
use crate::pde_model::{EllipticProblem, ProblemId};
use crate::polyharmonic::{KernelFamily, RadialKernel};
use crate::solver::{classify_matrix, solve, CensusReport, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    #[serde(deserialize_with = "de_family")]
    pub family: KernelFamily,
    pub k: u32,
    /// Nodes per side of the tensor grid; `N = n^2`.
    pub grid_sizes: Vec<usize>,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub output: PathBuf,
}

fn de_family<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<KernelFamily, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Poisson,
            family: KernelFamily::Tps,
            k: 4,
            grid_sizes: vec![11, 21, 31, 41],
            deltas: vec![0.1, 0.01, 0.001, 0.0],
            trials: 100,
            seed: 1,
            output: PathBuf::from("trials.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let config: Self = toml::from_str(s)?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| KansaError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn kernel(&self) -> Result<RadialKernel> {
        RadialKernel::new(self.family, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel()?;
        if self.trials == 0 {
            return Err(KansaError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.grid_sizes.is_empty() || self.deltas.is_empty() {
            return Err(KansaError::InvalidConfig(
                "grid_sizes and deltas must not be empty".into(),
            ));
        }
        if let Some(&n) = self.grid_sizes.iter().find(|&&n| n < 3) {
            return Err(KansaError::GridTooSmall(n));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(KansaError::InvalidConfig(format!(
                "deltas must be finite and nonnegative, got {d}"
            )));
        }
        Ok(())
    }
}

/// Outcome of one random-center draw.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub problem: ProblemId,
    pub kernel: RadialKernel,
    pub n_points: usize,
    pub delta: f64,
    /// 1-based; also the random stream id of the draw.
    pub trial: u64,
    /// Absent for singular systems.
    pub rmse: Option<f64>,
    pub rcond: f64,
    pub status: SolveStatus,
    /// Relative residual of the solve; not written to the CSV.
    pub relative_residual: Option<f64>,
}

/// Aggregate over the trials of one `(N, delta)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub problem: ProblemId,
    pub kernel: RadialKernel,
    pub n_points: usize,
    pub delta: f64,
    pub trials: usize,
    /// Mean RMSE over the non-singular trials.
    pub mean_rmse: Option<f64>,
    pub singular_count: usize,
    pub near_singular_count: usize,
}

impl CellSummary {
    fn from_records(records: &[TrialRecord]) -> Self {
        let first = &records[0];
        let rmses: Vec<f64> = records.iter().filter_map(|r| r.rmse).collect();
        let mean_rmse = (!rmses.is_empty()).then(|| rmses.iter().sum::<f64>() / rmses.len() as f64);
        Self {
            problem: first.problem,
            kernel: first.kernel,
            n_points: first.n_points,
            delta: first.delta,
            trials: records.len(),
            mean_rmse,
            singular_count: records.iter().filter(|r| r.status == SolveStatus::Singular).count(),
            near_singular_count: records
                .iter()
                .filter(|r| r.status == SolveStatus::NearSingular)
                .count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<CellSummary>,
}

/// `sum_i c_i phi(|P - A_i|)`.
pub fn evaluate_solution(kernel: &RadialKernel, centers: &[Point], coefficients: &[f64], p: &Point) -> f64 {
    assert_eq!(centers.len(), coefficients.len(), "one coefficient per center");
    centers
        .iter()
        .zip(coefficients)
        .map(|(a, c)| {
            let dx = p[0] - a[0];
            let dy = p[1] - a[1];
            c * kernel.phi((dx * dx + dy * dy).sqrt())
        })
        .sum()
}

/// Root mean square of `exact - approx`.
pub fn rmse(exact: &[f64], approx: &[f64]) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(KansaError::SizeMismatch {
            what: "approximate values",
            expected: exact.len(),
            actual: approx.len(),
        });
    }
    if exact.is_empty() {
        return Err(KansaError::InvalidConfig("RMSE of an empty sample".into()));
    }
    let sum: f64 = exact.iter().zip(approx).map(|(u, v)| (u - v) * (u - v)).sum();
    Ok((sum / exact.len() as f64).sqrt())
}

/// Problem, collocation layout and kernel for one grid size.
struct Cell<'a> {
    problem: &'a EllipticProblem,
    id: ProblemId,
    set: CollocationSet,
    exact: Vec<f64>,
    kernel: RadialKernel,
}

impl<'a> Cell<'a> {
    fn new(problem: &'a EllipticProblem, kernel: RadialKernel, n: usize) -> Result<Self> {
        let id = problem
            .id
            .ok_or_else(|| KansaError::InvalidConfig("experiments need a numbered problem".into()))?;
        let u = problem.exact.as_ref().ok_or_else(|| {
            KansaError::InvalidConfig("experiments need a problem with an exact solution".into())
        })?;
        let set = classify(&tensor_grid(n)?, &problem.partition)?;
        let exact = set.points().iter().map(|p| u(p)).collect();
        Ok(Self {
            problem,
            id,
            set,
            exact,
            kernel,
        })
    }

    fn trial(&self, delta: f64, seed: u64, trial: u64) -> Result<TrialRecord> {
        let centers = CenterGenerator::new(delta, seed, trial)?.perturb(self.set.points());
        let system = assemble(self.problem, &self.set, &self.kernel, &centers)?;
        let result = solve(&system)?;
        let rmse = match &result.coefficients {
            Some(c) => {
                let approx: Vec<f64> = self
                    .set
                    .points()
                    .iter()
                    .map(|p| evaluate_solution(&self.kernel, &centers, c, p))
                    .collect();
                Some(rmse(&self.exact, &approx)?)
            }
            None => None,
        };
        Ok(TrialRecord {
            problem: self.id,
            kernel: self.kernel,
            n_points: self.set.len(),
            delta,
            trial,
            rmse,
            rcond: result.rcond_estimate,
            status: result.status,
            relative_residual: result.relative_residual,
        })
    }

    fn run(&self, delta: f64, trials: usize, seed: u64) -> Result<Vec<TrialRecord>> {
        if delta == 0.0 {
            // Every draw gives the same centers; solve once and replicate.
            let once = self.trial(0.0, seed, 1)?;
            return Ok((1..=trials as u64)
                .map(|trial| TrialRecord { trial, ..once.clone() })
                .collect());
        }
        (1..=trials as u64)
            .into_par_iter()
            .map(|trial| self.trial(delta, seed, trial))
            .collect()
    }
}

/// Runs `trials` draws of one `(n, delta)` cell.
pub fn run_cell(
    problem: &EllipticProblem,
    kernel: RadialKernel,
    n: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<(Vec<TrialRecord>, CellSummary)> {
    if trials == 0 {
        return Err(KansaError::InvalidConfig("trials must be at least 1".into()));
    }
    let cell = Cell::new(problem, kernel, n)?;
    let records = cell.run(delta, trials, seed)?;
    let summary = CellSummary::from_records(&records);
    Ok((records, summary))
}

/// Runs every `(grid size, delta)` cell of the configuration.
pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let kernel = config.kernel()?;
    let problem = config.problem.build();
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &n in &config.grid_sizes {
        let cell = Cell::new(&problem, kernel, n)?;
        for &delta in &config.deltas {
            let cell_records = cell.run(delta, config.trials, config.seed)?;
            summaries.push(CellSummary::from_records(&cell_records));
            records.extend(cell_records);
        }
    }
    Ok(ExperimentReport { records, summaries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusRecord {
    pub problem: ProblemId,
    pub kernel: RadialKernel,
    pub n_points: usize,
    pub delta: f64,
    pub trial: u64,
    pub rcond: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusCell {
    pub n_points: usize,
    pub delta: f64,
    pub report: CensusReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusRun {
    pub records: Vec<CensusRecord>,
    pub cells: Vec<CensusCell>,
}

impl CensusRun {
    pub fn total_singular(&self) -> usize {
        self.cells.iter().map(|c| c.report.singular).sum()
    }
}

/// Census of one cell: assemble and factorize each draw, without solving.
pub fn census_cell(
    problem: &EllipticProblem,
    kernel: RadialKernel,
    n: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<(Vec<CensusRecord>, CensusReport)> {
    let cell = Cell::new(problem, kernel, n)?;
    let records: Vec<CensusRecord> = (1..=trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<CensusRecord> {
            let centers = CenterGenerator::new(delta, seed, trial)?.perturb(cell.set.points());
            let system = assemble(problem, &cell.set, &kernel, &centers)?;
            let (status, rcond) = classify_matrix(&system.matrix)?;
            Ok(CensusRecord {
                problem: cell.id,
                kernel,
                n_points: cell.set.len(),
                delta,
                trial,
                rcond,
                status,
            })
        })
        .collect::<Result<_>>()?;
    let report = CensusReport::from_outcomes(records.iter().map(|r| (r.status, r.rcond)));
    Ok((records, report))
}

/// Singularity census over every cell of the configuration.
pub fn singularity_census(config: &ExperimentConfig) -> Result<CensusRun> {
    config.validate()?;
    let kernel = config.kernel()?;
    let problem = config.problem.build();
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for &n in &config.grid_sizes {
        for &delta in &config.deltas {
            let (cell_records, report) = census_cell(&problem, kernel, n, delta, config.trials, config.seed)?;
            cells.push(CensusCell {
                n_points: n * n,
                delta,
                report,
            });
            records.extend(cell_records);
        }
    }
    Ok(CensusRun { records, cells })
}

fn write_timestamp<W: Write>(out: &mut W) -> Result<()> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(out, "# generated_at_unix={secs}")?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Per-trial CSV. With `timestamp` set, a `# generated_at_unix=...` line
/// precedes the header.
pub fn write_trials_csv<W: Write>(mut out: W, records: &[TrialRecord], timestamp: bool) -> Result<()> {
    if timestamp {
        write_timestamp(&mut out)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem", "family", "k", "N", "delta", "trial", "rmse", "rcond", "status"])?;
    for r in records {
        w.write_record([
            r.problem.to_string(),
            r.kernel.family().to_string(),
            r.kernel.k().to_string(),
            r.n_points.to_string(),
            r.delta.to_string(),
            r.trial.to_string(),
            opt(r.rmse),
            format!("{:e}", r.rcond),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, summaries: &[CellSummary], timestamp: bool) -> Result<()> {
    if timestamp {
        write_timestamp(&mut out)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "problem",
        "family",
        "k",
        "N",
        "delta",
        "mean_rmse",
        "singular_count",
        "nearsingular_count",
    ])?;
    for s in summaries {
        w.write_record([
            s.problem.to_string(),
            s.kernel.family().to_string(),
            s.kernel.k().to_string(),
            s.n_points.to_string(),
            s.delta.to_string(),
            opt(s.mean_rmse),
            s.singular_count.to_string(),
            s.near_singular_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_census_csv<W: Write>(mut out: W, records: &[CensusRecord], timestamp: bool) -> Result<()> {
    if timestamp {
        write_timestamp(&mut out)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem", "family", "k", "N", "delta", "trial", "rcond", "status"])?;
    for r in records {
        w.write_record([
            r.problem.to_string(),
            r.kernel.family().to_string(),
            r.kernel.k().to_string(),
            r.n_points.to_string(),
            r.delta.to_string(),
            r.trial.to_string(),
            format!("{:e}", r.rcond),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Two significant digits with a signed two-digit exponent, e.g. `9.8e-03`.
pub fn format_sci2(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.1e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Table of mean RMSE with one row per `N` and one column per delta.
pub fn render_summary_table(summaries: &[CellSummary]) -> String {
    let mut deltas: Vec<f64> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for s in summaries {
        if !deltas.contains(&s.delta) {
            deltas.push(s.delta);
        }
        if !sizes.contains(&s.n_points) {
            sizes.push(s.n_points);
        }
    }
    let mut out = format!("{:>6}", "N");
    for d in &deltas {
        out.push_str(&format!(" {:>12}", format!("delta={d}")));
    }
    out.push('\n');
    for n in &sizes {
        out.push_str(&format!("{n:>6}"));
        for d in &deltas {
            let cell = summaries
                .iter()
                .find(|s| s.n_points == *n && s.delta == *d)
                .and_then(|s| s.mean_rmse)
                .map(format_sci2)
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(" {cell:>12}"));
        }
        out.push('\n');
    }
    out
}
