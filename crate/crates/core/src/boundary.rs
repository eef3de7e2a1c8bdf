//! One-sided kernels near a discontinuity or a non-reflecting band edge.
//!
//! Geometry uses the centered convention: with f̄ = f_disc + h on the right
//! of the discontinuity, the support [f_disc, f_disc + 2h] maps to
//! z̃ ∈ [−1, 1] and the estimation point to f̃ = (f − f̄)/h ∈ [−1, 0]. The
//! left side is the mirror image. f̃ = −1 is the discontinuity itself and
//! f̃ = 0 the touch point, where the support first reaches f_disc.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::PolyBasis;
use crate::error::{Error, Result};
use crate::legendre::{legendre_all, GaussLegendre};
use crate::moments::{
    bias_coefficient, gamma_q, moment_matrix, solve_coefficients, variance_coefficient, FreeCoefficient,
};
use crate::smooth::GuardBands;
use crate::taper::FrequencyGrid;

const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Estimation at f >= f_disc using data to the right.
    Right,
    /// Estimation at f <= f_disc using data to the left.
    Left,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Right => 1.0,
            Side::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGeometry {
    pub f_disc: f64,
    pub side: Side,
    /// Fixed halfwidth in the boundary region; the support has length 2h.
    pub h: f64,
}

impl BoundaryGeometry {
    pub fn new(f_disc: f64, side: Side, h: f64) -> Result<Self> {
        if !(h > 0.0) || !f_disc.is_finite() {
            return Err(Error::invalid(format!("boundary geometry needs h > 0, got {h}")));
        }
        Ok(Self { f_disc, side, h })
    }

    /// f̄ = f_disc ± h.
    pub fn center(&self) -> f64 {
        self.f_disc + self.side.sign() * self.h
    }

    /// Standardized coordinate of a frequency.
    pub fn standardize(&self, f: f64) -> f64 {
        self.side.sign() * (f - self.center()) / self.h
    }

    pub fn frequency(&self, z: f64) -> f64 {
        self.center() + self.side.sign() * self.h * z
    }

    /// Support [lo, hi] in frequency.
    pub fn support(&self) -> (f64, f64) {
        let far = self.f_disc + 2.0 * self.side.sign() * self.h;
        (self.f_disc.min(far), self.f_disc.max(far))
    }
}

/// Coefficients b_j in the orthogonal basis of the support grid together
/// with the quantities needed for the moment conditions and the EASE.
#[derive(Debug, Clone)]
pub struct BoundaryKernel {
    pub q: usize,
    pub p: usize,
    /// Standardized estimation point f̃.
    pub ft: f64,
    pub rule: FreeCoefficient,
    /// b_0..=b_p.
    pub coeffs: Vec<f64>,
    /// g_0..=g_p.
    pub norms: Vec<f64>,
    /// C_kj, k, j in 0..=p.
    pub moments: Vec<Vec<f64>>,
    /// Standardized support points z̃_i and their masses.
    pub points: Vec<f64>,
    pub masses: Vec<f64>,
    /// G(f̃, z̃_i) = Σ_j b_j P_j(z̃_i).
    pub shape: Vec<f64>,
    basis: PolyBasis,
}

impl BoundaryKernel {
    /// G(f̃, z) at an arbitrary standardized point.
    pub fn eval(&self, z: f64) -> f64 {
        self.basis
            .eval_all(z)
            .iter()
            .zip(&self.coeffs)
            .map(|(p, b)| p * b)
            .sum()
    }

    /// Leading-order EASE in units of 1/(N h^{2q+1}) for bias weight ρ:
    /// Σ g_k b_k² + ρ (Σ_{k=q}^p C_kp b_k)².
    pub fn normalized_ease(&self, rho: f64) -> f64 {
        variance_coefficient(&self.norms, &self.coeffs)
            + rho * bias_coefficient(self.q, self.p, &self.moments, &self.coeffs).powi(2)
    }

    /// Σ_{k=q}^{p} C_kp b_k.
    pub fn bias_coefficient(&self) -> f64 {
        bias_coefficient(self.q, self.p, &self.moments, &self.coeffs)
    }

    /// Σ_k g_k b_k².
    pub fn variance_coefficient(&self) -> f64 {
        variance_coefficient(&self.norms, &self.coeffs)
    }

    /// Kernel weights Σ_j b_j P_j(z̃_i)·m_i / h^q applied to data.
    pub fn weights(&self, h: f64) -> Vec<f64> {
        let scale = h.powi(-(self.q as i32));
        self.shape
            .iter()
            .zip(&self.masses)
            .map(|(g, m)| g * m * scale)
            .collect()
    }
}

/// Solves the moment system on the support points and sets b_p by `rule`.
pub fn solve_boundary_coeffs(
    q: usize,
    p: usize,
    points: &[f64],
    masses: &[f64],
    ft: f64,
    rule: FreeCoefficient,
) -> Result<BoundaryKernel> {
    if p <= q {
        return Err(Error::invalid(format!("moment order p = {p} must exceed q = {q}")));
    }
    let basis = PolyBasis::new(points, masses, p)?;
    let c = moment_matrix(&basis, points, masses, ft, p);
    let norms: Vec<f64> = (0..=p).map(|k| basis.norm(k)).collect();
    let b = solve_coefficients(q, p, &c, &norms, rule)?;
    let mut shape = vec![0.0; points.len()];
    for (k, bk) in b.iter().enumerate() {
        for (s, v) in shape.iter_mut().zip(basis.values(k)) {
            *s += bk * v;
        }
    }
    Ok(BoundaryKernel {
        q,
        p,
        ft,
        rule,
        coeffs: b,
        norms,
        moments: c,
        points: points.to_vec(),
        masses: masses.to_vec(),
        shape,
        basis,
    })
}

/// The continuum limit of [`solve_boundary_coeffs`], on Gauss–Legendre nodes.
pub fn solve_continuum_coeffs(q: usize, p: usize, ft: f64, rule: FreeCoefficient) -> Result<BoundaryKernel> {
    let gl = GaussLegendre::new(p + 12);
    solve_boundary_coeffs(q, p, &gl.nodes, &gl.weights, ft, rule)
}

/// Leading-order EASE (1/(N h^{2q+1})) Σ g_k b_k² + (θ^{(p)} h^{p−q} Σ C_kp b_k)².
pub fn boundary_ease(bk: &BoundaryKernel, theta_p: f64, n: f64, h: f64) -> f64 {
    let var = bk.variance_coefficient() / (n * h.powi(2 * bk.q as i32 + 1));
    let bias = theta_p * h.powi((bk.p - bk.q) as i32) * bk.bias_coefficient();
    var + bias * bias
}

/// A boundary kernel realized on a frequency grid.
#[derive(Debug, Clone)]
pub struct GridBoundaryKernel {
    pub geometry: BoundaryGeometry,
    /// Circle positions of the support points.
    pub positions: Vec<i64>,
    /// Weights to apply to the values at `positions`.
    pub weights: Vec<f64>,
    pub kernel: BoundaryKernel,
}

/// One-sided kernel of order (q, p) at frequency `f` for the given geometry,
/// built on the support points outside the guard bands.
pub fn grid_boundary_kernel(
    grid: &FrequencyGrid,
    geometry: &BoundaryGeometry,
    f: f64,
    q: usize,
    p: usize,
    rule: FreeCoefficient,
    guard: &GuardBands,
) -> Result<GridBoundaryKernel> {
    let step = grid.spacing();
    let (lo, hi) = geometry.support();
    let first = (lo / step - EDGE_TOL).ceil() as i64;
    let last = (hi / step + EDGE_TOL).floor() as i64;
    let positions: Vec<i64> = (first..=last)
        .filter(|&i| !guard.excludes(i as f64 * step))
        .collect();
    let z: Vec<f64> = positions
        .iter()
        .map(|&i| geometry.standardize(i as f64 * step))
        .collect();
    let ft = geometry.standardize(f);
    if !(-1.0 - EDGE_TOL..=EDGE_TOL).contains(&ft) {
        return Err(Error::invalid(format!(
            "estimation point {f} is outside the boundary region of {}",
            geometry.f_disc
        )));
    }
    let masses = vec![step / geometry.h; z.len()];
    let kernel = solve_boundary_coeffs(q, p, &z, &masses, ft, rule)?;
    let sign = if q % 2 == 1 { geometry.side.sign() } else { 1.0 };
    let weights = kernel.weights(geometry.h).into_iter().map(|w| sign * w).collect();
    Ok(GridBoundaryKernel {
        geometry: *geometry,
        positions,
        weights,
        kernel,
    })
}

/// The closed-form EASE-optimal boundary kernel for p = q + 2:
///
/// G(f̃, z̃) = P_q + (2q+3) f̃ P_{q+1}
///          + ((2q+3) f̃² − 1) / ((2q+3)/((2q+5) β^{2q+5}) + 2/(2q+5)) P_{q+2}.
///
/// The kernel applied to data is K = (γ_q / h^{q+1}) G.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumBoundaryKernel {
    pub q: usize,
    pub ft: f64,
    pub beta: f64,
    /// Coefficients of P_q, P_{q+1}, P_{q+2}.
    pub coeffs: [f64; 3],
}

impl ContinuumBoundaryKernel {
    pub fn eval(&self, z: f64) -> f64 {
        if z.abs() > 1.0 {
            return 0.0;
        }
        let p = legendre_all(self.q + 2, z);
        self.coeffs[0] * p[self.q] + self.coeffs[1] * p[self.q + 1] + self.coeffs[2] * p[self.q + 2]
    }

    pub fn gamma(&self) -> f64 {
        gamma_q(self.q)
    }

    /// Coefficients b_0..=b_{q+2} of γ_q G in the Legendre basis.
    pub fn legendre_coeffs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.q + 3];
        for (i, c) in self.coeffs.iter().enumerate() {
            b[self.q + i] = self.gamma() * c;
        }
        b
    }
}

pub fn continuum_boundary_kernel(q: usize, ft: f64, beta: f64) -> Result<ContinuumBoundaryKernel> {
    if !(-1.0 - EDGE_TOL..=EDGE_TOL).contains(&ft) {
        return Err(Error::invalid(format!("f̃ = {ft} must lie in [−1, 0]")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("β = {beta} must be positive")));
    }
    let a = (2 * q + 3) as f64;
    let b = (2 * q + 5) as f64;
    let denom = a / (b * beta.powi(2 * q as i32 + 5)) + 2.0 / b;
    Ok(ContinuumBoundaryKernel {
        q,
        ft,
        beta,
        coeffs: [1.0, a * ft, (a * ft * ft - 1.0) / denom],
    })
}

/// Solves f − f_disc = h₀(f) (right side) or f_disc − f = h₀(f) (left side)
/// within `search` of f_disc.
///
/// Damped fixed-point iteration first; bisection on a scanned bracket if
/// that does not converge.
pub fn touch_point(f_disc: f64, side: Side, search: f64, h0: impl Fn(f64) -> f64) -> Result<f64> {
    const TOL: f64 = 1e-12;
    let s = side.sign();
    let residual = |f: f64| s * (f - f_disc) - h0(f);
    let inside = |f: f64| s * (f - f_disc) >= 0.0 && s * (f - f_disc) <= search;

    let mut f = f_disc + s * h0(f_disc).min(search);
    for _ in 0..500 {
        if !inside(f) {
            break;
        }
        let next = 0.5 * f + 0.5 * (f_disc + s * h0(f));
        if (next - f).abs() < TOL {
            if inside(next) && residual(next).abs() < 1e-10 {
                return Ok(next);
            }
            break;
        }
        f = next;
    }

    // bracket: residual(f_disc) = −h₀ < 0
    let steps = 2000;
    let mut a = f_disc;
    let mut ra = residual(a);
    for i in 1..=steps {
        let b = f_disc + s * search * i as f64 / steps as f64;
        let rb = residual(b);
        if ra < 0.0 && rb >= 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo).abs() < TOL {
                    break;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        ra = rb;
    }
    Err(Error::NoTouchPoint { f_disc })
}

/// A nonnegative weighting line w(z̃) = intercept + slope·z̃ on [−1, 1],
/// defined up to a positive factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingLine {
    pub intercept: f64,
    pub slope: f64,
}

impl WeightingLine {
    pub fn eval(&self, z: f64) -> f64 {
        self.intercept + self.slope * z
    }

    pub fn is_nonnegative(&self) -> bool {
        self.eval(-1.0) >= -1e-14 && self.eval(1.0) >= -1e-14
    }
}

/// LPR weighting equivalent to the optimal (0,2) boundary kernel at β = 1.
///
/// The closed form (1 − f̃²) + (f̃ + √(1 − 3f̃² + 3f̃⁴)) z̃ vanishes at f̃ = −1;
/// after dividing out the common factor 1 − f̃² the line is
/// 1 + (1 − 3f̃²)/(√(1 − 3f̃² + 3f̃⁴) − f̃) z̃, which is 1 − z̃ at the
/// discontinuity and 1 + z̃ at the touch point.
pub fn equivalent_weighting(q: usize, ft: f64) -> Result<WeightingLine> {
    if q != 0 {
        return Err(Error::invalid("a closed-form weighting line exists for q = 0 only"));
    }
    if !(-1.0 - EDGE_TOL..=EDGE_TOL).contains(&ft) {
        return Err(Error::invalid(format!("f̃ = {ft} must lie in [−1, 0]")));
    }
    let f2 = ft * ft;
    let root = (1.0 - 3.0 * f2 + 3.0 * f2 * f2).sqrt();
    Ok(WeightingLine {
        intercept: 1.0,
        slope: (1.0 - 3.0 * f2) / (root - ft),
    })
}

/// Result of a weighted local polynomial fit θ(z) ≈ Σ_j a_j (z − f̃)^j.
#[derive(Debug, Clone)]
pub struct LprFit {
    /// a_0..a_{p−1} in standardized units.
    pub coeffs: Vec<f64>,
    /// Equivalent kernel for q! a_q: estimate = Σ_i kernel_i v_i.
    pub equivalent_kernel: Vec<f64>,
}

/// Weighted least squares fit of degree p − 1 around f̃.
///
/// `weights` are the regression weights w_i (already including any
/// quadrature masses); entries must be nonnegative.
pub fn lpr_fit(values: &[f64], points: &[f64], weights: &[f64], ft: f64, q: usize, p: usize) -> Result<LprFit> {
    if values.len() != points.len() || points.len() != weights.len() {
        return Err(Error::invalid("values, points and weights differ in length"));
    }
    if q >= p {
        return Err(Error::invalid(format!("derivative order {q} needs p > q, got p = {p}")));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::invalid("regression weights must be nonnegative"));
    }
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive < p {
        return Err(Error::Degenerate(format!(
            "{positive} points with positive weight cannot determine a degree {} fit",
            p - 1
        )));
    }
    let n = points.len();
    let design = DMatrix::from_fn(n, p, |i, j| (points[i] - ft).powi(j as i32));
    let mut gram = DMatrix::zeros(p, p);
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                gram[(a, b)] += weights[i] * design[(i, a)] * design[(i, b)];
            }
        }
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("local polynomial design is rank deficient".into()))?;
    let mut unit = DVector::zeros(p);
    unit[q] = 1.0;
    let row = chol.solve(&unit);
    let qfact: f64 = (1..=q).map(|i| i as f64).product();
    let equivalent_kernel: Vec<f64> = (0..n)
        .map(|i| qfact * weights[i] * (0..p).map(|j| row[j] * design[(i, j)]).sum::<f64>())
        .collect();
    let rhs = DVector::from_fn(p, |a, _| (0..n).map(|i| weights[i] * design[(i, a)] * values[i]).sum());
    let coeffs = chol.solve(&rhs).iter().copied().collect();
    Ok(LprFit {
        coeffs,
        equivalent_kernel,
    })
}

/// Number of sign changes in a sampled function, zeros skipped.
pub fn sign_changes(samples: &[f64]) -> usize {
    let scale = samples.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut last = 0.0;
    let mut count = 0;
    for &s in samples {
        if s.abs() <= 1e-12 * scale {
            continue;
        }
        if last != 0.0 && (s > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = s;
    }
    count
}
