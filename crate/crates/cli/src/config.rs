//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid sweep config that
//! reproduces the synthetic benchmark setup (5 subspaces of dimension 6 in
//! `R^9`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssc_omp::metrics::{ErrorMode, ThresholdMode, DEFAULT_ZERO_THRESHOLD};
use ssc_omp::spectral::DEFAULT_DENSE_LIMIT;
use ssc_omp::synth::PointCount;
use ssc_omp::{KMeansConfig, SpectralConfig};
use ssc_omp::theory::DEFAULT_C_RHO;

use crate::error::{CliError, Result};

/// Environment variable holding the worker count when no flag is given.
pub const WORKERS_ENV: &str = "SSCOMP_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Sweep,
    Cluster,
    Conditions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    SscOmp,
    Lsr,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::SscOmp => "ssc-omp",
            Self::Lsr => "lsr",
        }
    }
}

/// How the subspaces of a conditions run are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrangementKind {
    Random,
    Independent,
    Identical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Number of subspaces.
    pub n: usize,
    /// Dimension of each subspace.
    pub d: usize,
    /// Ambient dimension.
    pub ambient: usize,
    /// Points per subspace dimension; one sweep column per entry.
    pub densities: Vec<f64>,
    pub count: PointCount,
    pub arrangement: ArrangementKind,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            n: 5,
            d: 6,
            ambient: 9,
            densities: vec![5.0, 10.0, 20.0, 50.0],
            count: PointCount::RhoD,
            arrangement: ArrangementKind::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmSection {
    pub kind: Algorithm,
    /// Maximum OMP iterations; 0 means `N - 1`.
    pub k_max: usize,
    pub epsilon: f64,
    /// Ridge weight for LSR.
    pub lambda: f64,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        Self { kind: Algorithm::SscOmp, k_max: 6, epsilon: 1e-3, lambda: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdKind {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub threshold: f64,
    pub threshold_kind: ThresholdKind,
    /// Compute `e%` on the raw coefficients instead of the thresholded ones.
    pub raw_error: bool,
    /// Report `c` over clusters of size at least 2 only.
    pub skip_singletons: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_ZERO_THRESHOLD,
            threshold_kind: ThresholdKind::Absolute,
            raw_error: false,
            skip_singletons: false,
        }
    }
}

impl MetricsSection {
    pub fn threshold_mode(&self) -> ThresholdMode {
        match self.threshold_kind {
            ThresholdKind::Absolute => ThresholdMode::Absolute(self.threshold),
            ThresholdKind::Relative => ThresholdMode::Relative(self.threshold),
        }
    }

    pub fn error_mode(&self) -> ErrorMode {
        if self.raw_error {
            ErrorMode::Raw
        } else {
            ErrorMode::Thresholded(self.threshold_mode())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub c_rho: f64,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self { c_rho: DEFAULT_C_RHO }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    /// Graphs up to this size use a dense eigensolver, larger ones Lanczos.
    pub dense_limit: usize,
    /// k-means restarts.
    pub restarts: usize,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self { dense_limit: DEFAULT_DENSE_LIMIT, restarts: KMeansConfig::default().restarts }
    }
}

impl SpectralSection {
    pub fn config(&self) -> SpectralConfig {
        let kmeans = KMeansConfig { restarts: self.restarts, ..KMeansConfig::default() };
        SpectralConfig { kmeans, dense_limit: self.dense_limit }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    /// Concurrent trials; 0 uses every available core.
    pub workers: usize,
    /// Record stage timings. Off writes `NA`, making output byte-reproducible.
    pub timing: bool,
    pub synth: SynthSection,
    pub algorithm: AlgorithmSection,
    pub metrics: MetricsSection,
    pub spectral: SpectralSection,
    pub theory: TheorySection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Sweep,
            seed: 0,
            trials: 20,
            workers: 0,
            timing: true,
            synth: SynthSection::default(),
            algorithm: AlgorithmSection::default(),
            metrics: MetricsSection::default(),
            spectral: SpectralSection::default(),
            theory: TheorySection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.mode == Mode::Sweep && self.synth.densities.is_empty() {
            return bad("sweep mode needs at least one density".into());
        }
        if let Some(rho) = self.synth.densities.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
            return bad(format!("density must be at least 1, got {rho}"));
        }
        let s = &self.synth;
        if s.n == 0 || s.d == 0 || s.d > s.ambient {
            return bad(format!("need n >= 1 and 1 <= d <= D, got n={} d={} D={}", s.n, s.d, s.ambient));
        }
        let a = &self.algorithm;
        if !(a.epsilon >= 0.0 && a.epsilon.is_finite()) {
            return bad(format!("epsilon must be nonnegative, got {}", a.epsilon));
        }
        if a.kind == Algorithm::Lsr && !(a.lambda > 0.0 && a.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", a.lambda));
        }
        if !(self.metrics.threshold >= 0.0) {
            return bad(format!("threshold must be nonnegative, got {}", self.metrics.threshold));
        }
        if self.spectral.restarts == 0 {
            return bad("k-means needs at least one restart".into());
        }
        Ok(())
    }

    /// Worker count: explicit config value, else the environment, else all cores.
    pub fn resolved_workers(&self) -> usize {
        if self.workers > 0 {
            return self.workers;
        }
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&w: &usize| w > 0)
            .unwrap_or_else(rayon::current_num_threads)
    }
}
