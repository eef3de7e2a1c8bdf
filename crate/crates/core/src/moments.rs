//! Kernel coefficients in an orthogonal polynomial basis.
//!
//! A kernel on the standardized window is written G(z) = Σ_j b_j P_j(z) and
//! applied at the standardized estimation point f̃. The moment conditions
//! Σ_k C_kj b_k = δ_qj (j < p) with
//!
//! C_kj = Σ_i m_i P_k(z_i) (z_i − f̃)^j / j!
//!
//! form an upper triangular system that fixes b_0..b_{p−1}. The first free
//! coefficient b_p trades variance Σ g_k b_k² against the leading bias
//! Σ_{k≤p} C_kp b_k; higher coefficients are zero.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::basis::PolyBasis;
use crate::error::{Error, Result};

/// How b_p, the first coefficient not fixed by the moment conditions, is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FreeCoefficient {
    /// b_p = 0: the minimum-variance kernel of its order.
    Zero,
    /// EASE-optimal b_p for halfwidth ratio β = h/h₀(f). Requires p = q + 2.
    Beta(f64),
    /// EASE-optimal b_p for an explicit bias-to-variance weight
    /// ρ = (θ^{(p)})² h^{2p+1} N (noise variance normalized to one).
    Ratio(f64),
}

/// C_kj for k, j in 0..=degree.
pub fn moment_matrix(basis: &PolyBasis, points: &[f64], masses: &[f64], ft: f64, degree: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; degree + 1]; degree + 1];
    let mut powers = vec![0.0; degree + 1];
    for (i, (&z, &m)) in points.iter().zip(masses).enumerate() {
        let d = z - ft;
        let mut pw = m;
        for (j, slot) in powers.iter_mut().enumerate() {
            if j > 0 {
                pw *= d / j as f64;
            }
            *slot = pw;
        }
        for (k, row) in c.iter_mut().enumerate() {
            let pk = basis.values(k)[i];
            for (cell, &pw) in row.iter_mut().zip(&powers) {
                *cell += pk * pw;
            }
        }
    }
    c
}

/// Solves for b_0..b_p (length p + 1).
///
/// `c` must cover indices 0..=p when the rule needs b_p (any rule other than
/// `Zero`), otherwise 0..p suffices.
pub fn solve_coefficients(q: usize, p: usize, c: &[Vec<f64>], norms: &[f64], rule: FreeCoefficient) -> Result<Vec<f64>> {
    if p <= q {
        return Err(Error::invalid(format!("moment order p = {p} must exceed q = {q}")));
    }
    let mut b = vec![0.0; p + 1];
    for j in q..p {
        let diag = c[j][j];
        if !(diag.abs() > 1e-300) {
            return Err(Error::Degenerate(format!("C_{j}{j} vanishes")));
        }
        b[j] = if j == q {
            1.0 / diag
        } else {
            -(q..j).map(|i| c[i][j] * b[i]).sum::<f64>() / diag
        };
    }
    let rho = match rule {
        FreeCoefficient::Zero => return Ok(b),
        FreeCoefficient::Ratio(rho) => rho,
        FreeCoefficient::Beta(beta) => {
            if p != q + 2 {
                return Err(Error::invalid("β parameterization requires p = q + 2"));
            }
            if !(beta > 0.0) {
                return Err(Error::invalid(format!("β = {beta} must be positive")));
            }
            unit_beta_ratio(q) * beta.powi(2 * q as i32 + 5)
        }
    };
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("bias weight {rho} must be nonnegative")));
    }
    let cpp = c[p][p];
    let s: f64 = (q..p).map(|k| c[k][p] * b[k]).sum();
    b[p] = -rho * cpp * s / (norms[p] + rho * cpp * cpp);
    Ok(b)
}

/// Leading bias coefficient Σ_{k=q}^{p} C_kp b_k.
pub fn bias_coefficient(q: usize, p: usize, c: &[Vec<f64>], b: &[f64]) -> f64 {
    (q..=p).map(|k| c[k][p] * b[k]).sum()
}

/// Σ_k g_k b_k².
pub fn variance_coefficient(norms: &[f64], b: &[f64]) -> f64 {
    b.iter().zip(norms).map(|(b, g)| g * b * b).sum()
}

/// γ_q = ½ Π_{k=1}^q (2k+1).
pub fn gamma_q(q: usize) -> f64 {
    0.5 * (1..=q).map(|k| (2 * k + 1) as f64).product::<f64>()
}

/// The bias weight ρ at which the symmetric continuum kernel of order
/// (q, q+2) is γ_q (P_q − P_{q+2}), i.e. the weight at h = h₀(f).
///
/// Equals 15 for q = 0 and 14175 for q = 2.
pub fn unit_beta_ratio(q: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..=6).map(compute_unit_beta_ratio).collect());
    table.get(q).copied().unwrap_or_else(|| compute_unit_beta_ratio(q))
}

fn compute_unit_beta_ratio(q: usize) -> f64 {
    let p = q + 2;
    let gl = crate::legendre::GaussLegendre::new(p + 8);
    let basis = PolyBasis::new(&gl.nodes, &gl.weights, p).expect("Gauss nodes are distinct");
    let c = moment_matrix(&basis, &gl.nodes, &gl.weights, 0.0, p);
    let gamma = gamma_q(q);
    // at f̃ = 0 only b_q is nonzero among b_q..b_{p−1}
    let s = c[q][p] * (1.0 / c[q][q]);
    gamma * basis.norm(p) / (c[p][p] * (s - gamma * c[p][p]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_beta_ratios() {
        assert!((unit_beta_ratio(0) - 15.0).abs() < 1e-9);
        assert!((unit_beta_ratio(2) / 14175.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_q(0), 0.5);
        assert_eq!(gamma_q(1), 1.5);
        assert_eq!(gamma_q(2), 7.5);
    }

    #[test]
    fn moment_matrix_is_upper_triangular() {
        let basis = PolyBasis::legendre(5);
        let gl = crate::legendre::GaussLegendre::new(13);
        for ft in [-1.0, -0.4, 0.0] {
            let c = moment_matrix(&basis, &gl.nodes, &gl.weights, ft, 5);
            for k in 0..=5 {
                for j in 0..k {
                    assert!(c[k][j].abs() < 1e-13, "C[{k}][{j}] = {}", c[k][j]);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_orders_and_beta() {
        let basis = PolyBasis::legendre(4);
        let gl = crate::legendre::GaussLegendre::new(12);
        let c = moment_matrix(&basis, &gl.nodes, &gl.weights, 0.0, 4);
        let g: Vec<f64> = (0..=4).map(|k| basis.norm(k)).collect();
        assert!(solve_coefficients(2, 2, &c, &g, FreeCoefficient::Zero).is_err());
        assert!(solve_coefficients(0, 4, &c, &g, FreeCoefficient::Beta(1.0)).is_err());
        assert!(solve_coefficients(0, 2, &c, &g, FreeCoefficient::Beta(0.0)).is_err());
        assert!(solve_coefficients(0, 2, &c, &g, FreeCoefficient::Ratio(-1.0)).is_err());
    }
}
