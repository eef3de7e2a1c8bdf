//! Orthogonal polynomials for a discrete measure on the standardized window.
//!
//! For points z_i with masses m_i the polynomials satisfy
//! Σ_i m_i P_k(z_i) P_j(z_i) = g_k δ_kj. Each P_k carries the leading
//! coefficient of the Legendre polynomial of the same degree, so for an
//! equispaced grid with m_i = 1/(Nh) they converge to Legendre's P_k and
//! g_k → 2/(2k+1). Gauss–Legendre nodes and weights reproduce them exactly.

use crate::error::{Error, Result};
use crate::legendre::{leading_coefficient, GaussLegendre};

#[derive(Debug, Clone)]
pub struct PolyBasis {
    // monic recurrence π_{k+1} = (z − α_k) π_k − β_k π_{k−1}
    alpha: Vec<f64>,
    beta: Vec<f64>,
    norms: Vec<f64>,
    /// values[k][i] = P_k(z_i)
    values: Vec<Vec<f64>>,
}

impl PolyBasis {
    /// Builds P_0..=P_max_degree by the Stieltjes procedure.
    pub fn new(points: &[f64], masses: &[f64], max_degree: usize) -> Result<Self> {
        if points.len() != masses.len() {
            return Err(Error::invalid("points and masses differ in length"));
        }
        let support = distinct_support(points, masses);
        if support < max_degree + 1 {
            return Err(Error::Degenerate(format!(
                "{support} distinct points cannot carry polynomials up to degree {max_degree}"
            )));
        }
        let n = points.len();
        let mut alpha = Vec::with_capacity(max_degree + 1);
        let mut beta = Vec::with_capacity(max_degree + 1);
        let mut monic: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
        let mut sq_norms: Vec<f64> = Vec::with_capacity(max_degree + 1);

        monic.push(vec![1.0; n]);
        for k in 0..=max_degree {
            let pk = &monic[k];
            let nk: f64 = pk.iter().zip(masses).map(|(p, m)| m * p * p).sum();
            let scale = sq_norms.first().copied().unwrap_or(nk);
            if !(nk > 1e-28 * scale) {
                return Err(Error::Degenerate(format!(
                    "orthogonal polynomial of degree {k} vanishes on the grid"
                )));
            }
            sq_norms.push(nk);
            if k == max_degree {
                break;
            }
            let zk: f64 = pk
                .iter()
                .zip(masses)
                .zip(points)
                .map(|((p, m), z)| m * z * p * p)
                .sum();
            let a = zk / nk;
            let b = if k == 0 { 0.0 } else { nk / sq_norms[k - 1] };
            alpha.push(a);
            beta.push(b);
            let next: Vec<f64> = (0..n)
                .map(|i| {
                    let prev = if k == 0 { 0.0 } else { monic[k - 1][i] };
                    (points[i] - a) * pk[i] - b * prev
                })
                .collect();
            monic.push(next);
        }

        let mut values = monic;
        let mut norms = sq_norms;
        for (k, (vals, g)) in values.iter_mut().zip(norms.iter_mut()).enumerate() {
            let lead = leading_coefficient(k);
            vals.iter_mut().for_each(|v| *v *= lead);
            *g *= lead * lead;
        }
        Ok(Self {
            alpha,
            beta,
            norms,
            values,
        })
    }

    /// The continuum limit: Legendre polynomials under Lebesgue measure on [−1, 1].
    pub fn legendre(max_degree: usize) -> Self {
        let gl = GaussLegendre::new(max_degree + 8);
        Self::new(&gl.nodes, &gl.weights, max_degree).expect("Gauss nodes are distinct")
    }

    pub fn max_degree(&self) -> usize {
        self.norms.len() - 1
    }

    /// g_k.
    pub fn norm(&self, k: usize) -> f64 {
        self.norms[k]
    }

    /// P_k at the construction points.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// P_0(z)..P_max(z) at an arbitrary z.
    pub fn eval_all(&self, z: f64) -> Vec<f64> {
        let d = self.max_degree();
        let mut monic = Vec::with_capacity(d + 1);
        monic.push(1.0);
        for k in 0..d {
            let prev = if k == 0 { 0.0 } else { monic[k - 1] };
            monic.push((z - self.alpha[k]) * monic[k] - self.beta[k] * prev);
        }
        monic
            .into_iter()
            .enumerate()
            .map(|(k, v)| v * leading_coefficient(k))
            .collect()
    }

    /// Ascending monomial coefficients of P_k.
    pub fn monomial(&self, k: usize) -> Vec<f64> {
        let mut prev: Vec<f64> = Vec::new();
        let mut cur = vec![1.0];
        for i in 0..k {
            let mut next = vec![0.0; i + 2];
            for (j, c) in cur.iter().enumerate() {
                next[j + 1] += c;
                next[j] -= self.alpha[i] * c;
            }
            for (j, c) in prev.iter().enumerate() {
                next[j] -= self.beta[i] * c;
            }
            prev = cur;
            cur = next;
        }
        let lead = leading_coefficient(k);
        cur.into_iter().map(|c| c * lead).collect()
    }
}

fn distinct_support(points: &[f64], masses: &[f64]) -> usize {
    let mut pts: Vec<f64> = points
        .iter()
        .zip(masses)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&z, _)| z)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    pts.len()
}

/// Equispaced standardized grid on [−1, 1]: nh points per unit halfwidth,
/// both ends included, each with mass 1/(nh).
pub fn uniform_window(nh: usize) -> (Vec<f64>, Vec<f64>) {
    let step = 1.0 / nh as f64;
    let pts: Vec<f64> = (0..=2 * nh).map(|i| -1.0 + i as f64 * step).collect();
    let masses = vec![step; pts.len()];
    (pts, masses)
}
