//! The data-adaptive log-spectrum estimator.
//!
//! Stage 0 computes the single-taper log-periodogram θ̂₁ and the
//! log-multitaper estimate θ̂_MT. Stage 1 picks a global (0,4) halfwidth for
//! θ̂₁ by the Rice criterion. Stage 2 estimates θ″ from θ̂_MT with a (2,4)
//! kernel at the halfwidth implied by the quotient relation. Stage 3 smooths
//! θ̂_MT with the optimal (0,2) kernel at the locally optimal halfwidth,
//! switching to one-sided kernels between each barrier and its touch point.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boundary::{grid_boundary_kernel, touch_point, BoundaryGeometry, Side};
use crate::error::{Error, Result};
use crate::kernel::{interior_kernel, Kernel};
use crate::moments::FreeCoefficient;
use crate::smooth::{
    apply_weights, window_weights, window_weights_guarded, GuardBands, SmoothedEstimate, SmoothingDomain,
};
use crate::special::{dilog, trigamma};
use crate::taper::{
    log_multitaper_with, multitaper_spectrum, single_taper_log_periodogram, BiasCorrection, FrequencyGrid,
    LogSpectralEstimate, TimeSeries,
};

pub const SCHEMA_VERSION: u32 = 1;

/// (N+1)·Σ_n (ν_n^{(1)})⁴ for the first sinusoidal taper, large-N limit.
pub const FIRST_TAPER_FOURTH_MOMENT: f64 = 1.5;

const EDGE_TOL: f64 = 1e-9;

/// Log-spaced candidate halfwidths for the Rice scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfwidthSearch {
    pub points: usize,
    /// Smallest candidate in units of Δ = 1/(2N+2).
    pub min_spacings: f64,
    pub max: f64,
}

impl Default for HalfwidthSearch {
    fn default() -> Self {
        Self {
            points: 25,
            min_spacings: 4.0,
            max: 0.25,
        }
    }
}

impl HalfwidthSearch {
    pub fn halfwidths(&self, n: usize) -> Result<Vec<f64>> {
        let lo = self.min_spacings / (2.0 * n as f64 + 2.0);
        if self.points < 2 || !(lo > 0.0) || !(self.max > lo) {
            return Err(Error::invalid(format!(
                "halfwidth search needs at least two points on an increasing range, got {} points on [{lo}, {}]",
                self.points, self.max
            )));
        }
        let ratio = (self.max / lo).ln() / (self.points - 1) as f64;
        let mut h: Vec<f64> = (0..self.points).map(|i| lo * (ratio * i as f64).exp()).collect();
        h[self.points - 1] = self.max;
        Ok(h)
    }
}

/// Noise model of θ̂₁ used in the Rice penalty: variance σ² and the
/// covariance between neighbouring points of its grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiceNoise {
    pub variance: f64,
    pub lag_one_covariance: f64,
}

impl RiceNoise {
    /// σ² = ψ′(1) = π²/6. Adjacent points of the single-taper grid have
    /// squared coherence 1/4, so their log values covary by Li₂(1/4).
    pub fn single_taper() -> Self {
        Self {
            variance: trigamma(1.0).expect("ψ′(1)"),
            lag_one_covariance: dilog(0.25).expect("Li₂(1/4)"),
        }
    }

    pub fn independent() -> Self {
        Self {
            variance: trigamma(1.0).expect("ψ′(1)"),
            lag_one_covariance: 0.0,
        }
    }
}

impl Default for RiceNoise {
    fn default() -> Self {
        Self::single_taper()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Taper count; `None` uses round(N^{8/15}) clamped to [2, N/10].
    pub tapers: Option<usize>,
    pub correction: BiasCorrection,
    pub search: HalfwidthSearch,
    pub rice_noise: RiceNoise,
    /// The cap on h(f) is c_reg·h_{0,4}·N^{1/45}.
    pub c_reg: f64,
    /// Smallest halfwidth allowed in stage 3, in units of Δ.
    pub min_spacings: f64,
    pub discontinuities: Vec<f64>,
    pub boundary_at_zero: bool,
    pub boundary_at_half: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tapers: None,
            correction: BiasCorrection::Digamma,
            search: HalfwidthSearch::default(),
            rice_noise: RiceNoise::default(),
            c_reg: 2.0,
            min_spacings: 4.0,
            discontinuities: Vec::new(),
            boundary_at_zero: false,
            boundary_at_half: false,
        }
    }
}

pub fn default_tapers(n: usize) -> usize {
    let k = (n as f64).powf(8.0 / 15.0).round() as usize;
    k.clamp(2, (n / 10).max(2))
}

impl PipelineConfig {
    pub fn tapers_for(&self, n: usize) -> Result<usize> {
        match self.tapers {
            Some(0) => Err(Error::invalid("the taper count must be at least 1")),
            Some(k) => Ok(k),
            None => Ok(default_tapers(n)),
        }
    }

    pub fn domain(&self) -> SmoothingDomain {
        SmoothingDomain {
            boundary_at_zero: self.boundary_at_zero,
            boundary_at_half: self.boundary_at_half,
            discontinuities: self.discontinuities.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &d in &self.discontinuities {
            if !(d > 0.0 && d < 0.5) {
                return Err(Error::invalid(format!("discontinuity {d} must lie in (0, 1/2)")));
            }
        }
        if !(self.c_reg > 0.0 && self.c_reg.is_finite()) {
            return Err(Error::invalid(format!("c_reg = {} must be positive", self.c_reg)));
        }
        if !(self.min_spacings >= 2.0) {
            return Err(Error::invalid("the halfwidth floor must be at least two grid spacings"));
        }
        if !(self.rice_noise.variance > 0.0) {
            return Err(Error::invalid("the Rice noise variance must be positive"));
        }
        Ok(())
    }
}

/// Maximal interval [lo, hi] around a frequency that contains no barrier,
/// in the unfolded coordinate. Reflecting edges are transparent, so an
/// endpoint may be the image of a barrier about 0 or 1/2; infinite ends
/// mean no barrier at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn holds_window(&self, f: f64, h: f64) -> bool {
        f - h >= self.lo - EDGE_TOL * h && f + h <= self.hi + EDGE_TOL * h
    }
}

fn barriers(domain: &SmoothingDomain) -> Vec<f64> {
    let mut b: Vec<f64> = domain.discontinuities.clone();
    if domain.boundary_at_zero {
        b.push(0.0);
    }
    if domain.boundary_at_half {
        b.push(0.5);
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// The barrier-free interval containing f. A point on a barrier belongs to
/// the segment on its right, except at a flagged f = 1/2.
pub fn segment_of(domain: &SmoothingDomain, f: f64) -> Segment {
    let b = barriers(domain);
    if b.is_empty() {
        return Segment {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        };
    }
    let at_half = domain.boundary_at_half && f >= 0.5;
    let below = if at_half {
        b.iter().rev().find(|&&x| x < 0.5)
    } else {
        b.iter().rev().find(|&&x| x <= f)
    };
    let above = if at_half { Some(&0.5) } else { b.iter().find(|&&x| x > f) };
    Segment {
        lo: below.copied().unwrap_or(-b[0]),
        hi: above.copied().unwrap_or(1.0 - b[b.len() - 1]),
    }
}

/// Outcome of the Rice scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiceScan {
    pub halfwidths: Vec<f64>,
    /// R(h); `None` where too few windows fit between barriers.
    pub risk: Vec<Option<f64>>,
    pub selected: f64,
    /// The minimum sits at either end of the candidate range.
    pub at_edge: bool,
}

/// Unbiased risk estimate of the (0,4) smooth of θ̂₁ at one halfwidth:
/// mean squared residual + (2/M)Σ_j [σ² W_jj + c₁(W_{j,j−1} + W_{j,j+1})] − σ²,
/// over the M points whose window stays inside its segment and clear of
/// the guard bands.
pub fn rice_risk(
    theta1: &LogSpectralEstimate,
    kernel: &Kernel,
    h: f64,
    noise: RiceNoise,
    domain: &SmoothingDomain,
) -> Result<Option<f64>> {
    let grid = theta1.grid;
    let guard = single_taper_guard(theta1, domain);
    let (offsets, w) = window_weights(&grid, kernel, 0.0, h)?;
    let mut rss = 0.0;
    let mut penalty = 0.0;
    let mut used = 0usize;
    for j in 0..grid.len() {
        let f = grid.frequency(j);
        if !segment_of(domain, f).holds_window(f, h) || guard.intersects(f - h, f + h) {
            continue;
        }
        let mut smooth = 0.0;
        let mut own = 0.0;
        let mut near = 0.0;
        for (&m, &wm) in offsets.iter().zip(&w) {
            let src = grid.source_index(j as i64 + m);
            smooth += wm * theta1.values[src];
            match src.abs_diff(j) {
                0 => own += wm,
                1 => near += wm,
                _ => {}
            }
        }
        rss += (theta1.values[j] - smooth).powi(2);
        penalty += noise.variance * own + noise.lag_one_covariance * near;
        used += 1;
    }
    if 2 * used < grid.len() {
        return Ok(None);
    }
    let m = used as f64;
    Ok(Some(rss / m + 2.0 * penalty / m - noise.variance))
}

/// θ̂₁ uses a single taper, so its guard is (1+1)Δ: one subgrid spacing.
fn single_taper_guard(theta1: &LogSpectralEstimate, domain: &SmoothingDomain) -> GuardBands {
    GuardBands::around(&domain.discontinuities, theta1.grid.spacing())
}

/// Global (0,4) halfwidth minimizing the Rice criterion over `halfwidths`.
pub fn rice_global_bandwidth(
    theta1: &LogSpectralEstimate,
    kernel: &Kernel,
    halfwidths: &[f64],
    noise: RiceNoise,
    domain: &SmoothingDomain,
) -> Result<RiceScan> {
    let min = 2.0 * theta1.grid.spacing();
    let risk: Vec<Option<f64>> = halfwidths
        .iter()
        .map(|&h| {
            if h < min {
                Ok(None)
            } else {
                rice_risk(theta1, kernel, h, noise, domain)
            }
        })
        .collect::<Result<_>>()?;
    let valid: Vec<usize> = (0..risk.len()).filter(|&i| risk[i].is_some()).collect();
    let best = valid
        .iter()
        .copied()
        .min_by(|&a, &b| risk[a].unwrap().total_cmp(&risk[b].unwrap()))
        .ok_or_else(|| Error::Degenerate("no candidate halfwidth fits between the declared barriers".into()))?;
    Ok(RiceScan {
        halfwidths: halfwidths.to_vec(),
        selected: halfwidths[best],
        at_edge: best == valid[0] || best == valid[valid.len() - 1],
        risk,
    })
}

/// H = (10 B₀₄² ‖κ₂₄‖² / (B₂₄² ‖κ₀₄‖²))^{1/9} · (π² Σν⁴ / 6)^{1/9}, with
/// Σν⁴ taken as its normalized value 3/2.
pub fn halfwidth_quotient(k24: &Kernel, k04: &Kernel) -> Result<f64> {
    if (k24.q(), k24.p(), k04.q(), k04.p()) != (2, 4, 0, 4) {
        return Err(Error::invalid("the quotient relation needs (2,4) and (0,4) kernels"));
    }
    let b04 = k04.bias_constant();
    let b24 = k24.bias_constant();
    let first = 10.0 * b04 * b04 * k24.norm_sq() / (b24 * b24 * k04.norm_sq());
    let inflation = std::f64::consts::PI.powi(2) * FIRST_TAPER_FOURTH_MOMENT / 6.0;
    Ok((first * inflation).powf(1.0 / 9.0))
}

/// θ″ on the grid of θ̂_MT by (2,4) smoothing at a global halfwidth. Points
/// whose window would cross a barrier get a one-sided (2,4) kernel; guarded
/// values near discontinuities are left out of every window.
pub fn estimate_curvature(
    theta: &LogSpectralEstimate,
    k24: &Kernel,
    h24: f64,
    domain: &SmoothingDomain,
) -> Result<Vec<f64>> {
    if (k24.q(), k24.p()) != (2, 4) {
        return Err(Error::invalid("curvature needs a (2,4) kernel"));
    }
    let grid = theta.grid;
    let guard = GuardBands::around(&domain.discontinuities, (theta.tapers + 1) as f64 * grid.spacing());
    let (offsets, w) = window_weights(&grid, k24, 0.0, h24)?;
    (0..grid.len())
        .map(|j| {
            let f = grid.frequency(j);
            let seg = segment_of(domain, f);
            if seg.holds_window(f, h24) && guard.intersects(f - h24, f + h24) {
                let (pos, w) = window_weights_guarded(&grid, k24, f, h24, &guard)?;
                Ok(apply_weights(&grid, &theta.values, &pos, &w))
            } else if seg.holds_window(f, h24) {
                Ok(offsets
                    .iter()
                    .zip(&w)
                    .map(|(&m, wm)| wm * theta.values[grid.source_index(j as i64 + m)])
                    .sum())
            } else {
                let (barrier, side) = nearer_barrier(seg, f);
                let hb = h24.min(seg.len() / 2.0);
                let geo = BoundaryGeometry::new(barrier, side, hb)?;
                let k = grid_boundary_kernel(&grid, &geo, f, 2, 4, FreeCoefficient::Zero, &guard)?;
                Ok(apply_weights(&grid, &theta.values, &k.positions, &k.weights))
            }
        })
        .collect()
}

fn nearer_barrier(seg: Segment, f: f64) -> (f64, Side) {
    if f - seg.lo <= seg.hi - f {
        (seg.lo, Side::Right)
    } else {
        (seg.hi, Side::Left)
    }
}

/// Locally optimal (0,2) halfwidths before and after regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfwidthProfile {
    /// [(1/4)‖κ‖²(1 + 1/2K)² / (B² N θ″²)]^{1/5}; infinite where θ″ = 0.
    pub raw: Vec<f64>,
    pub h: Vec<f64>,
    pub cap: f64,
    pub floor: f64,
}

/// Optimal halfwidth of a (0,2) kernel for curvature θ″.
pub fn optimal_halfwidth(k02: &Kernel, n: usize, tapers: usize, curvature: f64) -> f64 {
    let b = k02.bias_constant();
    let inflation = (1.0 + 0.5 / tapers as f64).powi(2);
    (0.25 * k02.norm_sq() * inflation / (b * b * n as f64 * curvature * curvature)).powf(0.2)
}

/// h(f) = clamp(h_o(f), floor, cap) with cap = min(c_reg h₀₄ N^{1/45}, ceiling).
#[allow(clippy::too_many_arguments)]
pub fn variable_halfwidth(
    curvature: &[f64],
    n: usize,
    tapers: usize,
    k02: &Kernel,
    h04: f64,
    c_reg: f64,
    floor: f64,
    ceiling: f64,
) -> Result<HalfwidthProfile> {
    if (k02.q(), k02.p()) != (0, 2) {
        return Err(Error::invalid("the variable halfwidth is defined for a (0,2) kernel"));
    }
    if tapers == 0 || n == 0 {
        return Err(Error::invalid("N and K must be positive"));
    }
    let cap = (c_reg * h04 * (n as f64).powf(1.0 / 45.0)).min(ceiling).max(floor);
    let raw: Vec<f64> = curvature
        .iter()
        .map(|&c| optimal_halfwidth(k02, n, tapers, c))
        .collect();
    let h = raw.iter().map(|&r| r.clamp(floor, cap)).collect();
    Ok(HalfwidthProfile { raw, h, cap, floor })
}

/// Where stage 3 switches between one-sided and interior kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchPoint {
    /// Barrier location in the unfolded coordinate.
    pub barrier: f64,
    pub side: Side,
    pub f_tp: f64,
    /// Fixed halfwidth in the one-sided region, h₀(f_tp).
    pub h: f64,
    /// No solution of |f − barrier| = h₀(f) in the segment; the one-sided
    /// kernel spans the whole segment.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SegmentPlan {
    segment: Segment,
    right: Option<TouchPoint>,
    left: Option<TouchPoint>,
}

/// Everything stage 3 needs to evaluate the final estimate at any frequency.
#[derive(Debug, Clone)]
pub struct FinalSmoother {
    grid: FrequencyGrid,
    values: Vec<f64>,
    profile: Vec<f64>,
    domain: SmoothingDomain,
    guard: GuardBands,
    plans: Vec<SegmentPlan>,
    kernel: Kernel,
}

impl FinalSmoother {
    pub fn new(theta: &LogSpectralEstimate, profile: Vec<f64>, domain: SmoothingDomain) -> Result<Self> {
        if profile.len() != theta.grid.len() {
            return Err(Error::invalid("halfwidth profile and estimate differ in length"));
        }
        let mut s = Self {
            grid: theta.grid,
            values: theta.values.clone(),
            profile,
            guard: GuardBands::around(&domain.discontinuities, (theta.tapers + 1) as f64 * theta.grid.spacing()),
            domain,
            plans: Vec::new(),
            kernel: interior_kernel(0, 2)?,
        };
        let mut plans: Vec<SegmentPlan> = Vec::new();
        for f in s.grid.frequencies() {
            let seg = segment_of(&s.domain, f);
            if plans.iter().any(|p| p.segment == seg) {
                continue;
            }
            plans.push(s.plan(seg)?);
        }
        s.plans = plans;
        Ok(s)
    }

    /// h₀ at any frequency: linear interpolation of the grid profile after
    /// folding onto [0, 1/2], raised next to a guard band so that one-sided
    /// kernels reach past it.
    pub fn h0(&self, f: f64) -> f64 {
        self.profile_at(f).max(self.guard_floor(f))
    }

    pub fn guard(&self) -> &GuardBands {
        &self.guard
    }

    /// The regularized h₀ on the grid, before any boundary handling.
    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn domain(&self) -> &SmoothingDomain {
        &self.domain
    }

    /// g + 2Δ within 2(g + 2Δ) of a guard centre, falling off linearly to 0.
    fn guard_floor(&self, f: f64) -> f64 {
        if self.guard.is_empty() {
            return 0.0;
        }
        let reach = self.guard.half_width() + 2.0 * self.grid.spacing();
        let dist = self.guard.distance(f);
        (reach - (dist - 2.0 * reach).max(0.0)).max(0.0)
    }

    fn profile_at(&self, f: f64) -> f64 {
        let mut g = f.rem_euclid(1.0);
        if g > 0.5 {
            g = 1.0 - g;
        }
        let x = g / self.grid.spacing();
        let i = (x.floor() as usize).min(self.grid.len() - 1);
        let j = (i + 1).min(self.grid.len() - 1);
        let t = x - i as f64;
        self.profile[i] * (1.0 - t) + self.profile[j] * t
    }

    fn plan(&self, seg: Segment) -> Result<SegmentPlan> {
        let half = seg.len() / 2.0;
        let solve = |barrier: f64, side: Side| -> TouchPoint {
            let sign = if side == Side::Right { 1.0 } else { -1.0 };
            match touch_point(barrier, side, half, |f| self.h0(f)) {
                Ok(tp) => {
                    let h = (tp - barrier).abs();
                    TouchPoint {
                        barrier,
                        side,
                        f_tp: barrier + sign * h,
                        h,
                        fallback: false,
                    }
                }
                Err(_) => TouchPoint {
                    barrier,
                    side,
                    f_tp: barrier + sign * half,
                    h: half,
                    fallback: true,
                },
            }
        };
        let min = 2.0 * self.grid.spacing();
        if seg.lo.is_finite() && seg.hi.is_finite() && half < min {
            return Err(Error::Degenerate(format!(
                "barriers at {} and {} are closer than four grid spacings",
                seg.lo, seg.hi
            )));
        }
        Ok(SegmentPlan {
            segment: seg,
            right: seg.lo.is_finite().then(|| solve(seg.lo, Side::Right)),
            left: seg.hi.is_finite().then(|| solve(seg.hi, Side::Left)),
        })
    }

    fn plan_for(&self, f: f64) -> &SegmentPlan {
        let seg = segment_of(&self.domain, f);
        self.plans
            .iter()
            .find(|p| p.segment == seg)
            .expect("every segment meeting [0, 1/2] is planned")
    }

    pub fn touch_points(&self) -> Vec<TouchPoint> {
        let mut out: Vec<TouchPoint> = self
            .plans
            .iter()
            .flat_map(|p| [p.right, p.left])
            .flatten()
            .filter(|t| (0.0..=0.5).contains(&t.barrier))
            .collect();
        out.sort_by(|a, b| a.barrier.total_cmp(&b.barrier));
        out.dedup();
        out
    }

    fn one_sided(&self, tp: &TouchPoint, f: f64) -> Result<f64> {
        let beta = tp.h / self.h0(f);
        let geo = BoundaryGeometry::new(tp.barrier, tp.side, tp.h)?;
        let k = grid_boundary_kernel(&self.grid, &geo, f, 0, 2, FreeCoefficient::Beta(beta), &self.guard)?;
        Ok(apply_weights(&self.grid, &self.values, &k.positions, &k.weights))
    }

    fn interior(&self, f: f64, h: f64) -> Result<f64> {
        let (pos, w) = window_weights_guarded(&self.grid, &self.kernel, f, h, &self.guard)?;
        Ok(apply_weights(&self.grid, &self.values, &pos, &w))
    }

    /// Final estimate at f and the halfwidth used there.
    pub fn evaluate(&self, f: f64) -> Result<(f64, f64)> {
        if !(0.0..=0.5).contains(&f) {
            return Err(Error::Domain {
                function: "FinalSmoother::evaluate",
                value: f,
            });
        }
        let plan = self.plan_for(f);
        if let Some(tp) = plan.right.as_ref().filter(|tp| f < tp.f_tp) {
            return Ok((self.one_sided(tp, f)?, tp.h));
        }
        if let Some(tp) = plan.left.as_ref().filter(|tp| f > tp.f_tp) {
            return Ok((self.one_sided(tp, f)?, tp.h));
        }
        let seg = plan.segment;
        let h = self.h0(f).min(f - seg.lo).min(seg.hi - f);
        Ok((self.interior(f, h)?, h))
    }

    /// One-sided and interior estimates, both evaluated exactly at a touch point.
    pub fn limits_at(&self, tp: &TouchPoint) -> Result<(f64, f64)> {
        Ok((self.one_sided(tp, tp.f_tp)?, self.interior(tp.f_tp, tp.h)?))
    }

    pub fn smooth_grid(&self) -> Result<SmoothedEstimate> {
        let (values, h): (Vec<f64>, Vec<f64>) = self
            .grid
            .frequencies()
            .into_iter()
            .map(|f| self.evaluate(f))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(SmoothedEstimate {
            grid: self.grid,
            values,
            h,
            q: 0,
            p: 2,
            family: self.kernel.family(),
        })
    }
}

/// Per-frequency halfwidths actually used, with the pilot values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthProfile {
    pub frequencies: Vec<f64>,
    pub h: Vec<f64>,
    pub h04: f64,
    pub h24: f64,
    pub touch_points: Vec<TouchPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub schema_version: u32,
    pub n: usize,
    pub tapers: usize,
    pub correction: f64,
    pub rice: RiceScan,
    pub h04: f64,
    pub quotient: f64,
    pub h24: f64,
    pub cap: f64,
    pub floor: f64,
    pub touch_points: Vec<TouchPoint>,
    pub warnings: Vec<String>,
    pub curvature: Vec<f64>,
    pub h_raw: Vec<f64>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone)]
pub struct AdaptiveEstimate {
    pub estimate: SmoothedEstimate,
    pub profile: BandwidthProfile,
    pub diagnostics: Diagnostics,
    pub smoother: FinalSmoother,
}

/// Runs all stages on a series.
pub fn adaptive_estimate(ts: &TimeSeries, cfg: &PipelineConfig) -> Result<AdaptiveEstimate> {
    cfg.validate()?;
    let n = ts.len();
    let tapers = cfg.tapers_for(n)?;
    let start = Instant::now();
    let theta1 = single_taper_log_periodogram(ts).map_err(|e| e.in_stage("spectra"))?;
    let theta = multitaper_spectrum(ts, tapers)
        .and_then(|s| log_multitaper_with(&s, cfg.correction))
        .map_err(|e| e.in_stage("spectra"))?;
    let spent = start.elapsed().as_secs_f64() * 1e3;
    let mut out = adaptive_from_estimates(&theta1, &theta, n, cfg)?;
    out.diagnostics.timings.insert(
        0,
        StageTiming {
            stage: "spectra".into(),
            millis: spent,
        },
    );
    Ok(out)
}

/// Stages 1–3 on precomputed θ̂₁ and θ̂_MT for a series of length n.
pub fn adaptive_from_estimates(
    theta1: &LogSpectralEstimate,
    theta: &LogSpectralEstimate,
    n: usize,
    cfg: &PipelineConfig,
) -> Result<AdaptiveEstimate> {
    cfg.validate()?;
    if theta1.grid != FrequencyGrid::single_taper(n) || theta.grid != FrequencyGrid::canonical(n) {
        return Err(Error::invalid(format!("estimates are not on the grids of a length-{n} series")));
    }
    let domain = cfg.domain();
    let mut timings = Vec::new();
    let mut warnings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming {
            stage: name.into(),
            millis: clock.elapsed().as_secs_f64() * 1e3,
        });
        clock = Instant::now();
    };

    let k04 = interior_kernel(0, 4)?;
    let k24 = interior_kernel(2, 4)?;
    let k02 = interior_kernel(0, 2)?;

    let candidates = cfg.search.halfwidths(n).map_err(|e| e.in_stage("rice"))?;
    let rice = rice_global_bandwidth(theta1, &k04, &candidates, cfg.rice_noise, &domain)
        .map_err(|e| e.in_stage("rice"))?;
    if rice.at_edge {
        warnings.push(format!(
            "Rice criterion minimized at the end of the search range (h = {:.6})",
            rice.selected
        ));
    }
    let h04 = rice.selected;
    lap("rice", &mut timings);

    let quotient = halfwidth_quotient(&k24, &k04)?;
    let h24 = quotient * h04;
    let curvature = estimate_curvature(theta, &k24, h24, &domain).map_err(|e| e.in_stage("curvature"))?;
    lap("curvature", &mut timings);

    let spacing = theta.grid.spacing();
    let hp = variable_halfwidth(
        &curvature,
        n,
        theta.tapers,
        &k02,
        h04,
        cfg.c_reg,
        cfg.min_spacings * spacing,
        cfg.search.max,
    )
    .map_err(|e| e.in_stage("halfwidth"))?;
    lap("halfwidth", &mut timings);

    let smoother = FinalSmoother::new(theta, hp.h.clone(), domain).map_err(|e| e.in_stage("final"))?;
    let estimate = smoother.smooth_grid().map_err(|e| e.in_stage("final"))?;
    let touch_points = smoother.touch_points();
    for tp in touch_points.iter().filter(|t| t.fallback) {
        warnings.push(format!(
            "no touch point next to the barrier at {}; one-sided kernel spans the segment",
            tp.barrier
        ));
    }
    lap("final", &mut timings);

    let profile = BandwidthProfile {
        frequencies: theta.grid.frequencies(),
        h: estimate.h.clone(),
        h04,
        h24,
        touch_points: touch_points.clone(),
    };
    let diagnostics = Diagnostics {
        schema_version: SCHEMA_VERSION,
        n,
        tapers: theta.tapers,
        correction: theta.correction,
        rice,
        h04,
        quotient,
        h24,
        cap: hp.cap,
        floor: hp.floor,
        touch_points,
        warnings,
        curvature,
        h_raw: hp.raw,
        timings,
    };
    Ok(AdaptiveEstimate {
        estimate,
        profile,
        diagnostics,
        smoother,
    })
}
