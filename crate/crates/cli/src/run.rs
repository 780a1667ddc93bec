//! The three experiment modes.
//!
//! Seeds: trial `t` at density index `r` uses
//! `trial_seed = derive(derive(master, r), t)`. Data generation uses
//! `trial_seed` directly and spectral clustering `derive(trial_seed, 2)`, so
//! any single trial can be re-run from the master seed and its coordinates.
//! Condition instance `t` uses `derive(master, t)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use ssc_omp::metrics::{connectivity_with, ConnectivityOptions};
use ssc_omp::seed::derive;
use ssc_omp::synth::{generate, identical_arrangement, independent_arrangement, sample_dataset, sample_shared_points};
use ssc_omp::theory::{analyze, check_random_model, Condition, RandomModelReport};
use ssc_omp::{
    affinity, build_coefficient_matrix_traced, clustering_accuracy, lsr_coefficients, spectral_clustering,
    subspace_preserving_error, subspace_preserving_percentage, CoefficientMatrix, Dataset, MetricReport,
    OmpParams, SubspaceArrangement, SynthConfig,
};

use crate::config::{Algorithm, ArrangementKind, ExperimentConfig};
use crate::error::{CliError, Result};

pub fn trial_seed(master: u64, density_index: usize, trial: usize) -> u64 {
    derive(derive(master, density_index as u64), trial as u64)
}

pub fn cluster_seed(trial_seed: u64) -> u64 {
    derive(trial_seed, 2)
}

pub fn instance_seed(master: u64, instance: usize) -> u64 {
    derive(master, instance as u64)
}

/// Coefficients plus per-point pursuit iterations (empty for LSR).
pub fn build(data: &Dataset, config: &ExperimentConfig) -> Result<(CoefficientMatrix, Vec<usize>)> {
    let a = &config.algorithm;
    Ok(match a.kind {
        Algorithm::SscOmp => {
            let k_max = if a.k_max == 0 { data.len().saturating_sub(1).max(1) } else { a.k_max };
            build_coefficient_matrix_traced(data, OmpParams::new(k_max, a.epsilon))?
        }
        Algorithm::Lsr => (lsr_coefficients(data, a.lambda)?, Vec::new()),
    })
}

/// One full pipeline run on a dataset.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub labels: Vec<usize>,
    pub report: MetricReport,
    pub iterations: Vec<usize>,
}

/// Builds coefficients, clusters into `n_clusters` groups and scores the
/// result against the dataset's labels when it has them.
pub fn evaluate(data: &Dataset, n_clusters: usize, config: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let t0 = Instant::now();
    let (c, iterations) = build(data, config)?;
    let t_build = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let w = affinity(&c);
    let clustering = spectral_clustering(&w, n_clusters, &config.spectral.config(), seed)?;
    let t_cluster = t1.elapsed().as_secs_f64();

    let mut report = MetricReport {
        runtime_build_seconds: t_build,
        runtime_cluster_seconds: t_cluster,
        ..Default::default()
    };
    if let Some(truth) = data.labels() {
        let m = &config.metrics;
        report.p_percent = Some(subspace_preserving_percentage(&c, truth, m.threshold_mode())?);
        report.e_percent = Some(subspace_preserving_error(&c, truth, m.error_mode())?);
        let opts = ConnectivityOptions { skip_singletons: m.skip_singletons, dense_limit: config.spectral.dense_limit };
        report.connectivity = Some(connectivity_with(&w, truth, opts)?);
        report.accuracy_percent = Some(clustering_accuracy(&clustering.labels, truth)?);
    }
    Ok(Outcome { labels: clustering.labels, report, iterations })
}

fn pool(config: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.resolved_workers())
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

// ---------------------------------------------------------------- sweep

/// One `(rho, trial)` row, or a per-density mean when `trial` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub density: f64,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub algorithm: &'static str,
    pub n_points: usize,
    pub p_percent: Option<f64>,
    pub e_percent: Option<f64>,
    pub connectivity: Option<f64>,
    pub accuracy_percent: Option<f64>,
    pub t_build: Option<f64>,
    pub t_cluster: Option<f64>,
    pub status: String,
}

pub const SWEEP_HEADER: &str =
    "rho,trial,seed,algorithm,n_points,p_percent,e_percent,connectivity,accuracy_percent,t_build,t_cluster,status";

fn field<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl SweepRow {
    pub fn is_mean(&self) -> bool {
        self.trial.is_none()
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn csv_line(&self) -> String {
        [
            self.density.to_string(),
            self.trial.map_or_else(|| "mean".to_string(), |t| t.to_string()),
            field(self.seed),
            self.algorithm.to_string(),
            self.n_points.to_string(),
            field(self.p_percent),
            field(self.e_percent),
            field(self.connectivity),
            field(self.accuracy_percent),
            field(self.t_build),
            field(self.t_cluster),
            self.status.clone(),
        ]
        .join(",")
    }
}

fn sweep_trial(config: &ExperimentConfig, r: usize, density: f64, trial: usize) -> SweepRow {
    let s = &config.synth;
    let seed = trial_seed(config.seed, r, trial);
    let synth = SynthConfig { dims: vec![s.d; s.n], ambient: s.ambient, density, seed, count: s.count };
    let mut row = SweepRow {
        density,
        trial: Some(trial),
        seed: Some(seed),
        algorithm: config.algorithm.kind.name(),
        n_points: synth.total_points(),
        p_percent: None,
        e_percent: None,
        connectivity: None,
        accuracy_percent: None,
        t_build: None,
        t_cluster: None,
        status: "ok".into(),
    };
    let result = generate(&synth).map_err(CliError::from).and_then(|(_, data)| {
        evaluate(&data, s.n, config, cluster_seed(seed))
    });
    match result {
        Ok(out) => {
            row.p_percent = out.report.p_percent;
            row.e_percent = out.report.e_percent;
            row.connectivity = out.report.connectivity;
            row.accuracy_percent = out.report.accuracy_percent;
            if config.timing {
                row.t_build = Some(out.report.runtime_build_seconds);
                row.t_cluster = Some(out.report.runtime_cluster_seconds);
            }
        }
        Err(e) => row.status = format!("failed: {}", e.to_string().replace([',', '\n'], ";")),
    }
    row
}

fn mean(rows: &[&SweepRow], f: impl Fn(&SweepRow) -> Option<f64>) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn mean_row(config: &ExperimentConfig, density: f64, trials: &[SweepRow]) -> SweepRow {
    let ok: Vec<&SweepRow> = trials.iter().filter(|r| r.ok()).collect();
    SweepRow {
        density,
        trial: None,
        seed: None,
        algorithm: config.algorithm.kind.name(),
        n_points: trials[0].n_points,
        p_percent: mean(&ok, |r| r.p_percent),
        e_percent: mean(&ok, |r| r.e_percent),
        connectivity: mean(&ok, |r| r.connectivity),
        accuracy_percent: mean(&ok, |r| r.accuracy_percent),
        t_build: mean(&ok, |r| r.t_build),
        t_cluster: mean(&ok, |r| r.t_cluster),
        status: format!("mean of {}/{}", ok.len(), trials.len()),
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    /// Trial rows ordered by `(rho, trial)`, then one mean row per density.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn means(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.is_mean())
    }

    pub fn trials(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| !r.is_mean())
    }

    /// CSV text: the effective config as `#` comment lines, the header, rows.
    pub fn to_csv(&self, config: &ExperimentConfig) -> String {
        let mut out = config_comment(config);
        out.push_str(SWEEP_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

fn config_comment(config: &ExperimentConfig) -> String {
    config.to_toml().lines().map(|l| format!("# {l}\n")).collect()
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    config.validate()?;
    let jobs: Vec<(usize, f64, usize)> = config
        .synth
        .densities
        .iter()
        .enumerate()
        .flat_map(|(r, &rho)| (0..config.trials).map(move |t| (r, rho, t)))
        .collect();
    let trial_rows: Vec<SweepRow> = pool(config)?.install(|| {
        jobs.par_iter().map(|&(r, rho, t)| sweep_trial(config, r, rho, t)).collect()
    });
    let mut rows = trial_rows.clone();
    for (r, &rho) in config.synth.densities.iter().enumerate() {
        let block = &trial_rows[r * config.trials..(r + 1) * config.trials];
        rows.push(mean_row(config, rho, block));
    }
    Ok(SweepTable { rows })
}

// -------------------------------------------------------------- cluster

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub n_points: usize,
    pub n_clusters: usize,
    pub algorithm: &'static str,
    pub report: MetricReport,
    /// Timings are omitted (`null`) when timing is disabled.
    pub timing: bool,
}

/// Clusters an external dataset. `n_clusters` defaults to the number of
/// distinct truth labels.
pub fn run_cluster(
    data: &Dataset,
    n_clusters: Option<usize>,
    config: &ExperimentConfig,
) -> Result<(Vec<usize>, ClusterReport)> {
    config.validate()?;
    let n = match (n_clusters, data.n_groups()) {
        (Some(n), _) => n,
        (None, Some(g)) => g,
        (None, None) => return Err(CliError::Config("number of clusters is required without truth labels".into())),
    };
    let out = pool(config)?.install(|| evaluate(data, n, config, cluster_seed(config.seed)))?;
    let mut report = out.report;
    if !config.timing {
        report.runtime_build_seconds = 0.0;
        report.runtime_cluster_seconds = 0.0;
    }
    Ok((
        out.labels,
        ClusterReport {
            n_points: data.len(),
            n_clusters: n,
            algorithm: config.algorithm.kind.name(),
            report,
            timing: config.timing,
        },
    ))
}

// ----------------------------------------------------------- conditions

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRow {
    pub instance: usize,
    pub seed: u64,
    pub n_points: usize,
    pub residual_pass: bool,
    pub residual_margin: f64,
    pub data_pass: bool,
    pub data_margin: f64,
    pub angle_pass: bool,
    pub angle_margin: f64,
    /// Every inradius was computed exactly.
    pub exact: bool,
    pub p_percent: f64,
    /// Largest `iterations - d_i` over all points (`<= 0` when within bound).
    pub iteration_excess: i64,
    /// Broken implications on this instance.
    pub violations: usize,
}

pub const CONDITION_HEADER: &str = "instance,seed,n_points,residual_pass,residual_margin,data_pass,data_margin,\
angle_pass,angle_margin,exact,p_percent,iteration_excess,violations";

impl ConditionRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance,
            self.seed,
            self.n_points,
            self.residual_pass,
            self.residual_margin,
            self.data_pass,
            self.data_margin,
            self.angle_pass,
            self.angle_margin,
            self.exact,
            self.p_percent,
            self.iteration_excess,
            self.violations
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionTable {
    pub rows: Vec<ConditionRow>,
    /// Closed-form random-model guarantee for the configured sizes.
    pub random_model: RandomModelReport,
    /// Sum of per-instance violations; zero whenever the theory holds.
    pub violations: usize,
}

impl ConditionTable {
    pub fn to_csv(&self, config: &ExperimentConfig) -> String {
        let mut out = config_comment(config);
        let m = &self.random_model;
        out.push_str(&format!(
            "# random model: N = {}, d bound = {}, pass = {}, probability >= {}\n",
            m.n_points, m.dimension_bound, m.pass, m.probability_lower_bound
        ));
        out.push_str(CONDITION_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Draws the arrangement and data of one condition instance.
pub fn condition_instance(config: &ExperimentConfig, seed: u64) -> Result<(SubspaceArrangement, Dataset)> {
    let s = &config.synth;
    let density = s.densities.first().copied().unwrap_or(10.0);
    let synth = SynthConfig { dims: vec![s.d; s.n], ambient: s.ambient, density, seed, count: s.count };
    let counts = synth.points_per_subspace();
    Ok(match s.arrangement {
        ArrangementKind::Random => generate(&synth)?,
        ArrangementKind::Independent => {
            let arr = independent_arrangement(&synth.dims, s.ambient, seed)?;
            let data = sample_dataset(&arr, &counts, derive(seed, 1))?;
            (arr, data)
        }
        ArrangementKind::Identical => {
            let arr = identical_arrangement(s.n, s.d, s.ambient, seed)?;
            let data = sample_shared_points(&arr, counts[0], derive(seed, 1))?;
            (arr, data)
        }
    })
}

fn condition_row(config: &ExperimentConfig, instance: usize) -> Result<ConditionRow> {
    let seed = instance_seed(config.seed, instance);
    let (arr, data) = condition_instance(config, seed)?;
    let geometry = analyze(&data, &arr)?;
    let residual = geometry.report(Condition::ResidualCoherence);
    let data_cond = geometry.report(Condition::DataCoherence);
    let angle = geometry.report(Condition::SubspaceAngle);
    let exact = residual.exact;

    let (c, iterations) = build(&data, config)?;
    let truth = data.labels().expect("synthetic data is labelled");
    let p = subspace_preserving_percentage(&c, truth, config.metrics.threshold_mode())?;
    let dims = arr.dims();
    let iteration_excess = iterations
        .iter()
        .zip(truth)
        .map(|(&it, &l)| it as i64 - dims[l] as i64)
        .max()
        .unwrap_or(i64::MIN);

    let mut violations = 0;
    if residual.pass && p < 100.0 {
        violations += 1;
    }
    if exact && data_cond.pass && !residual.pass {
        violations += 1;
    }
    if residual.pass && iteration_excess > 0 {
        violations += 1;
    }
    Ok(ConditionRow {
        instance,
        seed,
        n_points: data.len(),
        residual_pass: residual.pass,
        residual_margin: residual.min_margin(),
        data_pass: data_cond.pass,
        data_margin: data_cond.min_margin(),
        angle_pass: angle.pass,
        angle_margin: angle.min_margin(),
        exact,
        p_percent: p,
        iteration_excess,
        violations,
    })
}

/// Evaluates the sufficient conditions on `trials` instances and checks
/// that a passing condition is never contradicted by the observed output.
pub fn run_conditions(config: &ExperimentConfig) -> Result<ConditionTable> {
    config.validate()?;
    let rows: Vec<ConditionRow> = pool(config)?.install(|| {
        (0..config.trials).into_par_iter().map(|t| condition_row(config, t)).collect::<Result<_>>()
    })?;
    let violations = rows.iter().map(|r| r.violations).sum();
    let s = &config.synth;
    let rho = s.densities.first().copied().unwrap_or(10.0);
    let random_model = check_random_model(s.d, s.ambient, s.n, rho, config.theory.c_rho)?;
    Ok(ConditionTable { rows, random_model, violations })
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_output(path: &std::path::Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
