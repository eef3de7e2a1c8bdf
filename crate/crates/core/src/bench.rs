//! Monte Carlo estimates of the expected square error of log-spectrum
//! estimators against the known θ of a synthetic process.
//!
//! Replication r uses its own random stream, results are collected in
//! replication order and reduced serially, so reports do not depend on the
//! number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::interior_kernel;
use crate::pipeline::{adaptive_estimate, PipelineConfig};
use crate::smooth::{kernel_smooth, Halfwidth, SmoothingDomain};
use crate::synth::{generate_replicate, oracle_log_spectrum, ProcessSpec};
use crate::taper::{
    log_multitaper_with, multitaper_spectrum, single_taper_log_periodogram, BiasCorrection, FrequencyGrid,
    LogSpectralEstimate, TimeSeries,
};

pub const SCHEMA_VERSION: u32 = 1;

/// The raw log estimate a fixed-halfwidth smoother starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawEstimate {
    /// θ̂₁ on its own grid.
    SingleTaper,
    /// θ̂_MT with K tapers.
    Multitaper(usize),
}

impl RawEstimate {
    pub fn compute(self, ts: &TimeSeries) -> Result<LogSpectralEstimate> {
        match self {
            RawEstimate::SingleTaper => single_taper_log_periodogram(ts),
            RawEstimate::Multitaper(k) => log_multitaper_with(&multitaper_spectrum(ts, k)?, BiasCorrection::Digamma),
        }
    }

    pub fn grid(self, n: usize) -> FrequencyGrid {
        match self {
            RawEstimate::SingleTaper => FrequencyGrid::single_taper(n),
            RawEstimate::Multitaper(_) => FrequencyGrid::canonical(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum EstimatorConfig {
    /// The full adaptive pipeline.
    Pipeline(PipelineConfig),
    /// Optimal (0,2) kernel at one global halfwidth, reflecting edges.
    FixedHalfwidth { raw: RawEstimate, h: f64 },
}

impl EstimatorConfig {
    fn grid(&self, n: usize) -> FrequencyGrid {
        match self {
            EstimatorConfig::Pipeline(_) => FrequencyGrid::canonical(n),
            EstimatorConfig::FixedHalfwidth { raw, .. } => raw.grid(n),
        }
    }

    fn run(&self, ts: &TimeSeries) -> Result<Vec<f64>> {
        match self {
            EstimatorConfig::Pipeline(cfg) => Ok(adaptive_estimate(ts, cfg)?.estimate.values),
            EstimatorConfig::FixedHalfwidth { raw, h } => {
                let theta = raw.compute(ts)?;
                let k = interior_kernel(0, 2)?;
                Ok(kernel_smooth(&theta, &k, Halfwidth::Global(*h), &SmoothingDomain::reflecting())?.values)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Frequency bands left out of the integrated error.
    pub exclude: Vec<[f64; 2]>,
}

impl MonteCarloConfig {
    pub fn new(n: usize, reps: usize, seed: u64) -> Self {
        Self {
            n,
            reps,
            seed,
            exclude: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::invalid(format!("at least 2 replications are needed, got {}", self.reps)));
        }
        Ok(())
    }

    fn included(&self, f: f64) -> bool {
        !self.exclude.iter().any(|[a, b]| *a <= f && f <= *b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EaseReport {
    pub schema_version: u32,
    pub process: ProcessSpec,
    pub estimator: EstimatorConfig,
    pub n: usize,
    pub seed: u64,
    pub reps_requested: usize,
    pub reps_completed: usize,
    pub failures: Vec<ReplicationFailure>,
    pub frequencies: Vec<f64>,
    /// Mean squared error at each frequency and its standard error.
    pub mse: Vec<f64>,
    pub mse_se: Vec<f64>,
    /// Mean of `mse` over the included frequencies.
    pub integrated: f64,
    /// Standard error of `integrated` from the per-replication averages.
    pub integrated_se: f64,
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Squared errors per replication, in replication order.
fn replicate<T: Send>(
    spec: &ProcessSpec,
    mc: &MonteCarloConfig,
    run: impl Fn(&TimeSeries) -> Result<T> + Sync,
) -> Result<Vec<Result<T, String>>> {
    spec.validate()?;
    mc.validate()?;
    (0..mc.reps)
        .into_par_iter()
        .map(|r| {
            let ts = generate_replicate(spec, mc.n, mc.seed, r as u64)?;
            Ok(run(&ts).map_err(|e| e.to_string()))
        })
        .collect()
}

pub fn monte_carlo_ease(spec: &ProcessSpec, estimator: &EstimatorConfig, mc: &MonteCarloConfig) -> Result<EaseReport> {
    let grid = estimator.grid(mc.n);
    let freqs = grid.frequencies();
    let truth = oracle_log_spectrum(spec, &freqs)?;
    let keep: Vec<bool> = freqs.iter().map(|&f| mc.included(f)).collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::invalid("every frequency is excluded"));
    }
    let results = replicate(spec, mc, |ts| {
        let est = estimator.run(ts)?;
        Ok(est.iter().zip(&truth).map(|(e, t)| (e - t).powi(2)).collect::<Vec<f64>>())
    })?;
    let mut failures = Vec::new();
    let mut errors: Vec<Vec<f64>> = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => errors.push(e),
            Err(error) => failures.push(ReplicationFailure { rep, error }),
        }
    }
    if errors.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} of {} replications succeeded",
            errors.len(),
            mc.reps
        )));
    }
    let mut mse = Vec::with_capacity(freqs.len());
    let mut mse_se = Vec::with_capacity(freqs.len());
    for j in 0..freqs.len() {
        let col: Vec<f64> = errors.iter().map(|e| e[j]).collect();
        let (m, se) = mean_and_se(&col);
        mse.push(m);
        mse_se.push(se);
    }
    let count = keep.iter().filter(|&&k| k).count() as f64;
    let per_rep: Vec<f64> = errors
        .iter()
        .map(|e| e.iter().zip(&keep).filter(|(_, &k)| k).map(|(v, _)| v).sum::<f64>() / count)
        .collect();
    let (integrated, integrated_se) = mean_and_se(&per_rep);
    Ok(EaseReport {
        schema_version: SCHEMA_VERSION,
        process: spec.clone(),
        estimator: estimator.clone(),
        n: mc.n,
        seed: mc.seed,
        reps_requested: mc.reps,
        reps_completed: errors.len(),
        failures,
        frequencies: freqs,
        mse,
        mse_se,
        integrated,
        integrated_se,
    })
}

/// Integrated square error of the fixed-halfwidth smoother at every
/// candidate halfwidth, from the same replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfwidthScan {
    pub raw: RawEstimate,
    pub halfwidths: Vec<f64>,
    pub integrated: Vec<f64>,
    pub integrated_se: Vec<f64>,
}

impl HalfwidthScan {
    /// Index of the smallest integrated error.
    pub fn best(&self) -> usize {
        (0..self.integrated.len())
            .min_by(|&a, &b| self.integrated[a].total_cmp(&self.integrated[b]))
            .expect("scan is not empty")
    }
}

pub fn oracle_halfwidth_scan(
    spec: &ProcessSpec,
    raw: RawEstimate,
    halfwidths: &[f64],
    mc: &MonteCarloConfig,
) -> Result<HalfwidthScan> {
    if halfwidths.is_empty() {
        return Err(Error::invalid("no candidate halfwidths"));
    }
    let grid = raw.grid(mc.n);
    let freqs = grid.frequencies();
    let truth = oracle_log_spectrum(spec, &freqs)?;
    let keep: Vec<bool> = freqs.iter().map(|&f| mc.included(f)).collect();
    let count = keep.iter().filter(|&&k| k).count() as f64;
    let k02 = interior_kernel(0, 2)?;
    let results = replicate(spec, mc, |ts| {
        let theta = raw.compute(ts)?;
        halfwidths
            .iter()
            .map(|&h| {
                let s = kernel_smooth(&theta, &k02, Halfwidth::Global(h), &SmoothingDomain::reflecting())?;
                Ok(s.values
                    .iter()
                    .zip(&truth)
                    .zip(&keep)
                    .filter(|(_, &k)| k)
                    .map(|((e, t), _)| (e - t).powi(2))
                    .sum::<f64>()
                    / count)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let rows: Vec<Vec<f64>> = results.into_iter().collect::<Result<_, String>>().map_err(Error::Degenerate)?;
    let (integrated, integrated_se) = (0..halfwidths.len())
        .map(|i| mean_and_se(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .unzip();
    Ok(HalfwidthScan {
        raw,
        halfwidths: halfwidths.to_vec(),
        integrated,
        integrated_se,
    })
}
