//! Sinusoidal tapers and the (log) multitaper spectral estimate.
//!
//! The Fourier transform y(f) = Σ_{m=1}^N x_m e^{−2πimf} is sampled on the
//! circle f_j = j/(2N+2). With Δ = 1/(2N+2) the k-th sine taper is
//! a difference of two shifted transforms, so
//!
//! Ŝ_MT(f) = (Δ/K) Σ_k |y(f + kΔ) − y(f − kΔ)|².
//!
//! Estimates are reported on the one-sided grid j = 0..=N+1 (f in [0, 1/2]).

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::digamma;

pub const MIN_SERIES_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "series has {} samples, need at least {MIN_SERIES_LEN}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// K orthonormal tapers with equal weights μ_k = 1/K.
#[derive(Debug, Clone)]
pub struct TaperSet {
    n: usize,
    tapers: Vec<Vec<f64>>,
}

impl TaperSet {
    pub fn len(&self) -> usize {
        self.tapers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tapers.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.n
    }

    /// Taper k (1-based, as in ν^{(k)}).
    pub fn taper(&self, k: usize) -> &[f64] {
        &self.tapers[k - 1]
    }

    pub fn tapers(&self) -> impl Iterator<Item = &[f64]> {
        self.tapers.iter().map(Vec::as_slice)
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.tapers.len() as f64
    }
}

/// ν_m^{(k)} = √(2/(N+1)) sin(πkm/(N+1)), m = 1..N, k = 1..K.
pub fn sinusoidal_tapers(n: usize, k: usize) -> Result<TaperSet> {
    if n < 1 {
        return Err(Error::invalid("taper length must be positive"));
    }
    if k < 1 || k > n {
        return Err(Error::invalid(format!(
            "taper count {k} must lie in 1..={n}"
        )));
    }
    let scale = (2.0 / (n as f64 + 1.0)).sqrt();
    let tapers = (1..=k)
        .map(|kk| {
            (1..=n)
                .map(|m| scale * (PI * (kk * m) as f64 / (n as f64 + 1.0)).sin())
                .collect()
        })
        .collect();
    Ok(TaperSet { n, tapers })
}

/// A uniform grid f_j = j / circle, j = 0..len, covering [0, 1/2] of a
/// frequency circle with `circle` points.
///
/// Values outside [0, 1/2] follow from the even, 1-periodic extension of a
/// real spectrum; [`FrequencyGrid::source_index`] performs that folding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    circle: usize,
    len: usize,
}

impl FrequencyGrid {
    /// The N+2 point grid with spacing Δ = 1/(2N+2).
    pub fn canonical(n: usize) -> Self {
        Self {
            circle: 2 * n + 2,
            len: n + 2,
        }
    }

    /// Every other canonical point: spacing 1/(N+1).
    pub fn single_taper(n: usize) -> Self {
        let circle = n + 1;
        Self {
            circle,
            len: circle / 2 + 1,
        }
    }

    pub fn with_circle(circle: usize) -> Self {
        Self {
            circle,
            len: circle / 2 + 1,
        }
    }

    pub fn circle(&self) -> usize {
        self.circle
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.circle as f64
    }

    pub fn frequency(&self, j: usize) -> f64 {
        j as f64 / self.circle as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.frequency(j)).collect()
    }

    /// One-sided index holding the value at circle position `i`.
    pub fn source_index(&self, i: i64) -> usize {
        let c = self.circle as i64;
        let j = i.rem_euclid(c);
        if 2 * j > c {
            (c - j) as usize
        } else {
            j as usize
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub tapers: usize,
}

/// How the log of a K-taper estimate is debiased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BiasCorrection {
    /// Subtract ψ(K) − ln K, the mean of ln(χ²_{2K}/2K).
    #[default]
    Digamma,
    /// Subtract (ψ(K) − ln K)/K. Kept for comparison only; it leaves a bias.
    DigammaOverK,
}

impl BiasCorrection {
    pub fn constant(self, tapers: usize) -> Result<f64> {
        let k = tapers as f64;
        let c = digamma(k)? - k.ln();
        Ok(match self {
            BiasCorrection::Digamma => c,
            BiasCorrection::DigammaOverK => c / k,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LogSpectralEstimate {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub tapers: usize,
    /// Constant already subtracted from ln Ŝ.
    pub correction: f64,
}

impl LogSpectralEstimate {
    /// Wraps externally supplied log-spectral values (no correction applied).
    pub fn from_values(grid: FrequencyGrid, values: Vec<f64>, tapers: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            tapers,
            correction: 0.0,
        })
    }
}

/// y(f_j) for j = 0..2N+2, zero padded DFT with samples at positions 1..=N.
pub fn fourier_transform(ts: &TimeSeries) -> Vec<Complex64> {
    let n = ts.len();
    let circle = 2 * n + 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); circle];
    for (slot, &x) in buf[1..=n].iter_mut().zip(ts.samples()) {
        slot.re = x;
    }
    let fft = FftPlanner::new().plan_fft_forward(circle);
    fft.process(&mut buf);
    buf
}

fn sine_difference_power(y: &[Complex64], j: usize, k: usize) -> f64 {
    let c = y.len();
    let plus = y[(j + k) % c];
    let minus = y[(j + c - (k % c)) % c];
    (plus - minus).norm_sqr()
}

/// Sinusoidal multitaper estimate on the canonical grid.
pub fn multitaper_spectrum(ts: &TimeSeries, tapers: usize) -> Result<SpectralEstimate> {
    let n = ts.len();
    if tapers < 1 || tapers >= n {
        return Err(Error::invalid(format!(
            "taper count {tapers} must lie in 1..{n}"
        )));
    }
    let grid = FrequencyGrid::canonical(n);
    let y = fourier_transform(ts);
    let scale = grid.spacing() / tapers as f64;
    let values = (0..grid.len())
        .map(|j| scale * (1..=tapers).map(|k| sine_difference_power(&y, j, k)).sum::<f64>())
        .collect();
    Ok(SpectralEstimate {
        grid,
        values,
        tapers,
    })
}

pub fn log_multitaper(est: &SpectralEstimate) -> Result<LogSpectralEstimate> {
    log_multitaper_with(est, BiasCorrection::Digamma)
}

pub fn log_multitaper_with(
    est: &SpectralEstimate,
    correction: BiasCorrection,
) -> Result<LogSpectralEstimate> {
    let c = correction.constant(est.tapers)?;
    let values = log_values(&est.grid, &est.values, c)?;
    Ok(LogSpectralEstimate {
        grid: est.grid,
        values,
        tapers: est.tapers,
        correction: c,
    })
}

fn log_values(grid: &FrequencyGrid, values: &[f64], c: f64) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            if s > 0.0 {
                Ok(s.ln() - c)
            } else {
                Err(Error::DegenerateEstimate {
                    frequency: grid.frequency(j),
                })
            }
        })
        .collect()
}

/// θ̂₁(f) = ln[|y(f+Δ) − y(f−Δ)|² / 2(N+1)] − ψ(1) on the spacing-1/(N+1) grid.
pub fn single_taper_log_periodogram(ts: &TimeSeries) -> Result<LogSpectralEstimate> {
    let n = ts.len();
    let grid = FrequencyGrid::single_taper(n);
    let y = fourier_transform(ts);
    let norm = 1.0 / (2.0 * (n as f64 + 1.0));
    let raw: Vec<f64> = (0..grid.len())
        .map(|j| norm * sine_difference_power(&y, 2 * j, 1))
        .collect();
    let c = BiasCorrection::Digamma.constant(1)?;
    let values = log_values(&grid, &raw, c)?;
    Ok(LogSpectralEstimate {
        grid,
        values,
        tapers: 1,
        correction: c,
    })
}
