//! Discrete kernel smoothing on a frequency grid.
//!
//! Weights are never raw kernel samples. On each window the kernel is
//! rebuilt in the polynomials orthogonal over the window's own grid points,
//! so the discrete moment conditions Σ_i w_i (f_i − f)^m = q! δ_mq (m < p)
//! hold to rounding error whatever the grid offset or halfwidth.

use serde::{Deserialize, Serialize};

use crate::basis::PolyBasis;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFamily};
use crate::moments::{moment_matrix, solve_coefficients, FreeCoefficient};
use crate::taper::{FrequencyGrid, LogSpectralEstimate, SpectralEstimate};

const EDGE_TOL: f64 = 1e-9;

/// Anything defined on a one-sided frequency grid.
pub trait GridValues {
    fn grid(&self) -> FrequencyGrid;
    fn values(&self) -> &[f64];
}

impl GridValues for LogSpectralEstimate {
    fn grid(&self) -> FrequencyGrid {
        self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl GridValues for SpectralEstimate {
    fn grid(&self) -> FrequencyGrid {
        self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl GridValues for SmoothedEstimate {
    fn grid(&self) -> FrequencyGrid {
        self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothedEstimate {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    /// Halfwidth used at each grid point (cycles/sample).
    pub h: Vec<f64>,
    pub q: usize,
    pub p: usize,
    pub family: KernelFamily,
}

#[derive(Debug, Clone, Copy)]
pub enum Halfwidth<'a> {
    Global(f64),
    PerPoint(&'a [f64]),
}

impl Halfwidth<'_> {
    fn at(&self, j: usize) -> f64 {
        match self {
            Halfwidth::Global(h) => *h,
            Halfwidth::PerPoint(v) => v[j],
        }
    }
}

/// Where a smoothing window may reach.
///
/// Unflagged band edges reflect (the spectrum is even about 0 and 1/2).
/// Flagged edges and declared discontinuities are barriers that a window
/// must not cross.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothingDomain {
    pub boundary_at_zero: bool,
    pub boundary_at_half: bool,
    pub discontinuities: Vec<f64>,
}

impl SmoothingDomain {
    pub fn reflecting() -> Self {
        Self::default()
    }

    /// First barrier crossed by the window [f − h, f + h], if any.
    pub fn crossed_barrier(&self, f: f64, h: f64) -> Option<f64> {
        let (lo, hi) = (f - h + EDGE_TOL * h, f + h - EDGE_TOL * h);
        if self.boundary_at_zero && lo < 0.0 {
            return Some(0.0);
        }
        if self.boundary_at_half && hi > 0.5 {
            return Some(0.5);
        }
        for &d in &self.discontinuities {
            // images of d under the even, periodic extension
            for image in [d, -d, 1.0 - d, 1.0 + d, d - 1.0] {
                if lo < image && image < hi {
                    return Some(d);
                }
            }
        }
        None
    }

    pub fn check_window(&self, f: f64, h: f64) -> Result<()> {
        match self.crossed_barrier(f, h) {
            Some(boundary) => Err(Error::BoundaryReached {
                frequency: f,
                h,
                boundary,
            }),
            None => Ok(()),
        }
    }
}

/// Neighbourhoods of declared discontinuities whose grid values are not
/// used. A K-taper estimate at f draws on y(f ± kΔ) for k ≤ K, so within
/// about (K+1)Δ of a jump it mixes the levels on both sides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuardBands {
    centers: Vec<f64>,
    half_width: f64,
}

impl GuardBands {
    pub fn none() -> Self {
        Self::default()
    }

    /// Bands of the given halfwidth around each discontinuity and its images
    /// under the even, periodic extension.
    pub fn around(discontinuities: &[f64], half_width: f64) -> Self {
        if discontinuities.is_empty() || !(half_width > 0.0) {
            return Self::none();
        }
        let centers = discontinuities
            .iter()
            .flat_map(|&d| [d, -d, 1.0 - d, 1.0 + d, d - 1.0])
            .collect();
        Self { centers, half_width }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn excludes(&self, f: f64) -> bool {
        let w = self.half_width * (1.0 - EDGE_TOL);
        self.centers.iter().any(|c| (f - c).abs() < w)
    }

    /// Distance from f to the nearest band centre.
    pub fn distance(&self, f: f64) -> f64 {
        self.centers.iter().map(|c| (f - c).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Whether any band meets the open interval (lo, hi).
    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        let w = self.half_width * (1.0 - EDGE_TOL);
        self.centers.iter().any(|c| c + w > lo && c - w < hi)
    }
}

/// Weights on standardized points z_i (each of mass `mass`) that realize a
/// kernel of order (q, p) at the standardized location `ft`.
///
/// Returned weights include the 1/h^q derivative scaling, so the estimate
/// is Σ_i w_i v_i and Σ_i w_i (f_i − f)^m = q! δ_mq for m < p.
pub fn standardized_weights(
    z: &[f64],
    mass: f64,
    ft: f64,
    q: usize,
    p: usize,
    rule: FreeCoefficient,
    h: f64,
) -> Result<Vec<f64>> {
    let degree = if rule == FreeCoefficient::Zero { p - 1 } else { p };
    let masses = vec![mass; z.len()];
    let basis = PolyBasis::new(z, &masses, degree)?;
    let c = moment_matrix(&basis, z, &masses, ft, degree);
    let norms: Vec<f64> = (0..=degree).map(|k| basis.norm(k)).collect();
    let b = solve_coefficients(q, p, &c, &norms, rule)?;
    let scale = mass / h.powi(q as i32);
    let mut w = vec![0.0; z.len()];
    for (k, bk) in b.iter().enumerate().take(degree + 1) {
        if *bk == 0.0 {
            continue;
        }
        for (wi, pk) in w.iter_mut().zip(basis.values(k)) {
            *wi += bk * pk;
        }
    }
    w.iter_mut().for_each(|wi| *wi *= scale);
    Ok(w)
}

/// Circle positions within [f − h, f + h] and their kernel weights.
pub fn window_weights(grid: &FrequencyGrid, kernel: &Kernel, f: f64, h: f64) -> Result<(Vec<i64>, Vec<f64>)> {
    window_weights_guarded(grid, kernel, f, h, &GuardBands::none())
}

/// As [`window_weights`], leaving out positions inside a guard band. The
/// moment conditions are solved on the remaining points.
pub fn window_weights_guarded(
    grid: &FrequencyGrid,
    kernel: &Kernel,
    f: f64,
    h: f64,
    guard: &GuardBands,
) -> Result<(Vec<i64>, Vec<f64>)> {
    let step = grid.spacing();
    let min = 2.0 * step;
    if !(h >= min * (1.0 - EDGE_TOL)) {
        return Err(Error::BandwidthTooSmall { h, min });
    }
    let first = ((f - h) / step - EDGE_TOL).ceil() as i64;
    let last = ((f + h) / step + EDGE_TOL).floor() as i64;
    let positions: Vec<i64> = (first..=last)
        .filter(|&i| !guard.excludes(i as f64 * step))
        .collect();
    let z: Vec<f64> = positions.iter().map(|&i| (i as f64 * step - f) / h).collect();
    let w = standardized_weights(
        &z,
        step / h,
        0.0,
        kernel.q(),
        kernel.p(),
        kernel.family().free_coefficient(),
        h,
    )?;
    Ok((positions, w))
}

/// Σ_i w_i v(position_i) with positions folded onto the one-sided grid.
pub fn apply_weights(grid: &FrequencyGrid, values: &[f64], positions: &[i64], weights: &[f64]) -> f64 {
    positions
        .iter()
        .zip(weights)
        .map(|(&i, w)| w * values[grid.source_index(i)])
        .sum()
}

/// Kernel estimate of the q-th derivative at every grid point.
pub fn kernel_smooth<V: GridValues + ?Sized>(
    input: &V,
    kernel: &Kernel,
    h: Halfwidth<'_>,
    domain: &SmoothingDomain,
) -> Result<SmoothedEstimate> {
    let grid = input.grid();
    let values = input.values();
    if let Halfwidth::PerPoint(v) = h {
        if v.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} halfwidths for {} grid points",
                v.len(),
                grid.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut hs = Vec::with_capacity(grid.len());
    // a global halfwidth gives the same weights at every grid point
    let shared = match h {
        Halfwidth::Global(hg) => {
            let (pos, w) = window_weights(&grid, kernel, 0.0, hg)?;
            Some((pos, w))
        }
        Halfwidth::PerPoint(_) => None,
    };
    for j in 0..grid.len() {
        let f = grid.frequency(j);
        let hj = h.at(j);
        domain.check_window(f, hj)?;
        let v = match &shared {
            Some((pos, w)) => pos
                .iter()
                .zip(w)
                .map(|(&m, w)| w * values[grid.source_index(j as i64 + m)])
                .sum(),
            None => {
                let (pos, w) = window_weights(&grid, kernel, f, hj)?;
                apply_weights(&grid, values, &pos, &w)
            }
        };
        out.push(v);
        hs.push(hj);
    }
    Ok(SmoothedEstimate {
        grid,
        values: out,
        h: hs,
        q: kernel.q(),
        p: kernel.p(),
        family: kernel.family(),
    })
}
