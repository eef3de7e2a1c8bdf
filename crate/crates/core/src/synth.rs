//! Gaussian test processes with known spectra, and the quadratic-form
//! variance oracle.
//!
//! Spectra are two-sided densities in cycles/sample: white noise of
//! variance σ² has S ≡ σ².

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taper::{TaperSet, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    White {
        variance: f64,
    },
    /// x_t = Σ_j a_j x_{t−j} + e_t.
    Ar {
        coeffs: Vec<f64>,
        variance: f64,
    },
    /// x_t = e_t + Σ_j b_j e_{t−j}.
    Ma {
        coeffs: Vec<f64>,
        variance: f64,
    },
    /// S = low on [0, f_disc), high on [f_disc, 1/2].
    BandDiscontinuous {
        f_disc: f64,
        low: f64,
        high: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValues {
    pub s: f64,
    pub theta: f64,
    pub d_theta: f64,
    pub d2_theta: f64,
}

impl ProcessSpec {
    pub fn white() -> Self {
        ProcessSpec::White { variance: 1.0 }
    }

    pub fn ar(coeffs: &[f64]) -> Self {
        ProcessSpec::Ar {
            coeffs: coeffs.to_vec(),
            variance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        match self {
            ProcessSpec::White { variance } => positive(*variance, "innovation variance"),
            ProcessSpec::Ar { coeffs, variance } => {
                positive(*variance, "innovation variance")?;
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("AR coefficients must be finite"));
                }
                let r = ar_root_radius(coeffs);
                if r >= 1.0 {
                    return Err(Error::invalid(format!(
                        "AR polynomial is not stationary: largest inverse root modulus {r:.6}"
                    )));
                }
                Ok(())
            }
            ProcessSpec::Ma { coeffs, variance } => {
                positive(*variance, "innovation variance")?;
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("MA coefficients must be finite"));
                }
                Ok(())
            }
            ProcessSpec::BandDiscontinuous { f_disc, low, high } => {
                positive(*low, "low level")?;
                positive(*high, "high level")?;
                if !(*f_disc > 0.0 && *f_disc < 0.5) {
                    return Err(Error::invalid(format!("f_disc = {f_disc} must lie in (0, 1/2)")));
                }
                Ok(())
            }
        }
    }

    /// Frequencies where the spectrum jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            ProcessSpec::BandDiscontinuous { f_disc, .. } => vec![*f_disc],
            _ => Vec::new(),
        }
    }
}

/// Parses `white`, `white:σ²`, `ar:a1,a2,…`, `ma:b1,…` and `band:f_disc,low,high`.
impl FromStr for ProcessSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>> {
            rest.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad number '{t}' in process spec '{s}'")))
                })
                .collect()
        };
        let spec = match kind.trim() {
            "white" => {
                let v = nums()?;
                match v.as_slice() {
                    [] => ProcessSpec::white(),
                    [variance] => ProcessSpec::White { variance: *variance },
                    _ => return Err(Error::invalid("white takes at most one parameter")),
                }
            }
            "ar" => ProcessSpec::Ar {
                coeffs: nums()?,
                variance: 1.0,
            },
            "ma" => ProcessSpec::Ma {
                coeffs: nums()?,
                variance: 1.0,
            },
            "band" => match nums()?.as_slice() {
                [f_disc, low, high] => ProcessSpec::BandDiscontinuous {
                    f_disc: *f_disc,
                    low: *low,
                    high: *high,
                },
                _ => return Err(Error::invalid("band needs f_disc,low,high")),
            },
            other => return Err(Error::invalid(format!("unknown process kind '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Largest modulus of the inverse roots of 1 − Σ a_j z^j.
pub fn ar_root_radius(coeffs: &[f64]) -> f64 {
    let p = coeffs.len();
    if p == 0 {
        return 0.0;
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, a) in coeffs.iter().enumerate() {
        companion[(0, j)] = *a;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Burn-in length max(500, 10/(1 − r)).
pub fn burn_in(coeffs: &[f64]) -> usize {
    let r = ar_root_radius(coeffs);
    ((10.0 / (1.0 - r)).ceil() as usize).max(500)
}

/// R, I and their first two ω-derivatives for 1 + sign·Σ c_j e^{−iωj}.
fn trig_parts(coeffs: &[f64], sign: f64, omega: f64) -> [f64; 6] {
    let (mut r, mut i, mut r1, mut i1, mut r2, mut i2) = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (idx, c) in coeffs.iter().enumerate() {
        let j = (idx + 1) as f64;
        let c = sign * c;
        let (s, co) = (j * omega).sin_cos();
        r += c * co;
        i -= c * s;
        r1 -= c * j * s;
        i1 -= c * j * co;
        r2 -= c * j * j * co;
        i2 += c * j * j * s;
    }
    [r, i, r1, i1, r2, i2]
}

/// ln u and its first two f-derivatives for u = |1 + sign·Σ c_j e^{−2πifj}|².
fn log_modulus(coeffs: &[f64], sign: f64, f: f64) -> (f64, f64, f64) {
    let [r, i, r1, i1, r2, i2] = trig_parts(coeffs, sign, 2.0 * PI * f);
    let u = r * r + i * i;
    let u1 = 2.0 * (r * r1 + i * i1);
    let u2 = 2.0 * (r1 * r1 + r * r2 + i1 * i1 + i * i2);
    let w = 2.0 * PI;
    (u.ln(), w * u1 / u, w * w * (u2 / u - (u1 / u).powi(2)))
}

/// S(f), θ(f) = ln S(f) and the first two derivatives of θ.
pub fn oracle_spectrum(spec: &ProcessSpec, f: f64) -> Result<OracleValues> {
    if !(0.0..=0.5).contains(&f) {
        return Err(Error::Domain {
            function: "oracle_spectrum",
            value: f,
        });
    }
    let (theta, d_theta, d2_theta) = match spec {
        ProcessSpec::White { variance } => (variance.ln(), 0.0, 0.0),
        ProcessSpec::Ar { coeffs, variance } => {
            let (l, l1, l2) = log_modulus(coeffs, -1.0, f);
            (variance.ln() - l, -l1, -l2)
        }
        ProcessSpec::Ma { coeffs, variance } => {
            let (l, l1, l2) = log_modulus(coeffs, 1.0, f);
            (variance.ln() + l, l1, l2)
        }
        ProcessSpec::BandDiscontinuous { f_disc, low, high } => {
            let level = if f < *f_disc { *low } else { *high };
            (level.ln(), 0.0, 0.0)
        }
    };
    Ok(OracleValues {
        s: theta.exp(),
        theta,
        d_theta,
        d2_theta,
    })
}

/// θ at every frequency of a grid.
pub fn oracle_log_spectrum(spec: &ProcessSpec, freqs: &[f64]) -> Result<Vec<f64>> {
    freqs.iter().map(|&f| oracle_spectrum(spec, f).map(|o| o.theta)).collect()
}

/// Series for replication 0.
pub fn generate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    generate_replicate(spec, n, seed, 0)
}

/// Series for replication `rep`, drawn from its own ChaCha8 stream so that
/// replications can be produced in any order.
pub fn generate_replicate(spec: &ProcessSpec, n: usize, seed: u64, rep: u64) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let samples = match spec {
        ProcessSpec::White { variance } => {
            let sd = variance.sqrt();
            (0..n).map(|_| sd * normal()).collect()
        }
        ProcessSpec::Ar { coeffs, variance } => {
            let sd = variance.sqrt();
            let burn = burn_in(coeffs);
            let p = coeffs.len();
            let total = burn + n;
            let mut x = vec![0.0; total];
            for t in 0..total {
                let mut v = sd * normal();
                for j in 0..p.min(t) {
                    v += coeffs[j] * x[t - j - 1];
                }
                x[t] = v;
            }
            x.split_off(burn)
        }
        ProcessSpec::Ma { coeffs, variance } => {
            let sd = variance.sqrt();
            let q = coeffs.len();
            let e: Vec<f64> = (0..n + q).map(|_| sd * normal()).collect();
            (0..n)
                .map(|t| e[t + q] + coeffs.iter().enumerate().map(|(j, b)| b * e[t + q - j - 1]).sum::<f64>())
                .collect()
        }
        ProcessSpec::BandDiscontinuous { .. } => spectral_synthesis(spec, n, &mut normal)?,
    };
    TimeSeries::new(samples)
}

/// Circulant synthesis on a circle of 8N points: independent Gaussian
/// Fourier coefficients with E|X_j|² = L·S(j/L), first N samples kept.
fn spectral_synthesis(spec: &ProcessSpec, n: usize, normal: &mut impl FnMut() -> f64) -> Result<Vec<f64>> {
    let len = (8 * n).next_power_of_two();
    let lf = len as f64;
    let mut coef = vec![Complex64::new(0.0, 0.0); len];
    for j in 0..=len / 2 {
        let s = oracle_spectrum(spec, j as f64 / lf)?.s;
        if j == 0 || j == len / 2 {
            coef[j] = Complex64::new((lf * s).sqrt() * normal(), 0.0);
        } else {
            let sd = (lf * s / 2.0).sqrt();
            coef[j] = Complex64::new(sd * normal(), sd * normal());
            coef[len - j] = coef[j].conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut coef);
    Ok(coef.iter().take(n).map(|c| c.re / lf).collect())
}

/// B(f) = Σ_k μ_k v_k v_kᴴ with v_k = ν^{(k)} ⊙ e^{2πinf}, so that the
/// multitaper estimate at f is xᵀ B(f) x.
pub fn multitaper_matrix(tapers: &TaperSet, f: f64) -> DMatrix<Complex64> {
    smoothed_multitaper_matrix(tapers, &[f], &[1.0])
}

/// Σ_i w_i B(f_i): the quadratic form of a smoothed multitaper estimate.
pub fn smoothed_multitaper_matrix(tapers: &TaperSet, freqs: &[f64], weights: &[f64]) -> DMatrix<Complex64> {
    let n = tapers.series_len();
    let mut q = DMatrix::<Complex64>::zeros(n, n);
    for (&f, &w) in freqs.iter().zip(weights) {
        for nu in tapers.tapers() {
            let v: Vec<Complex64> = nu
                .iter()
                .enumerate()
                .map(|(m, &x)| Complex64::from_polar(x, 2.0 * PI * (m + 1) as f64 * f))
                .collect();
            let scale = w * tapers.weight();
            for a in 0..n {
                let va = v[a] * scale;
                for b in 0..n {
                    q[(a, b)] += va * v[b].conj();
                }
            }
        }
    }
    q
}

/// tr(QQ), the normalized variance of a Hermitian quadratic estimator under
/// locally white noise.
pub fn quadratic_variance_oracle(q: &DMatrix<Complex64>) -> Result<f64> {
    if q.nrows() != q.ncols() {
        return Err(Error::invalid("quadratic form must be square"));
    }
    let n = q.nrows();
    let mut tr = Complex64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            tr += q[(a, b)] * q[(b, a)];
        }
    }
    Ok(tr.re)
}
