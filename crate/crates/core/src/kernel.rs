//! Interior kernels of order (q, p) expanded in Legendre polynomials.
//!
//! A kernel of order (q, p) satisfies ∫ z^m κ(z) dz = q! δ_mq for m < p and
//! has p-th moment p!·B_{q,p}. Two families are provided:
//!
//! * [`KernelFamily::MinimalNorm`]: b_k = 0 for k >= p, the unique kernel of
//!   degree p − 1. (0,4) gives (3/8)(3 − 5z²), (2,4) gives (15/4)(3z² − 1).
//! * [`KernelFamily::Optimal`]: p = q + 2 and b_p chosen to minimize the
//!   leading-order EASE, γ_q (P_q − P_{q+2}). (0,2) is Epanechnikov.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::PolyBasis;
use crate::error::{Error, Result};
use crate::legendre::{legendre_all, GaussLegendre};
use crate::moments::{moment_matrix, solve_coefficients, FreeCoefficient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    MinimalNorm,
    Optimal,
}

impl KernelFamily {
    /// The b_p rule used when the kernel is realized on a discrete grid.
    pub fn free_coefficient(self) -> FreeCoefficient {
        match self {
            KernelFamily::MinimalNorm => FreeCoefficient::Zero,
            KernelFamily::Optimal => FreeCoefficient::Beta(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    q: usize,
    p: usize,
    family: KernelFamily,
    /// Legendre coefficients b_0..=b_p.
    coeffs: Vec<f64>,
}

impl Kernel {
    pub fn new(q: usize, p: usize, family: KernelFamily) -> Result<Self> {
        if p <= q || !(p - q).is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel order ({q},{p}) needs p > q with p − q even"
            )));
        }
        if family == KernelFamily::Optimal && p != q + 2 {
            return Err(Error::invalid(format!(
                "optimal kernels are available for p = q + 2 only, got ({q},{p})"
            )));
        }
        let gl = GaussLegendre::new(p + 8);
        let basis = PolyBasis::new(&gl.nodes, &gl.weights, p).expect("Gauss nodes are distinct");
        let c = moment_matrix(&basis, &gl.nodes, &gl.weights, 0.0, p);
        let norms: Vec<f64> = (0..=p).map(|k| basis.norm(k)).collect();
        let mut coeffs = solve_coefficients(q, p, &c, &norms, family.free_coefficient())?;
        // parity zeros are exact in exact arithmetic
        for (j, b) in coeffs.iter_mut().enumerate() {
            if (j + q) % 2 == 1 {
                *b = 0.0;
            }
        }
        Ok(Self {
            q,
            p,
            family,
            coeffs,
        })
    }

    pub fn minimal_norm(q: usize, p: usize) -> Result<Self> {
        Self::new(q, p, KernelFamily::MinimalNorm)
    }

    pub fn optimal(q: usize) -> Result<Self> {
        Self::new(q, q + 2, KernelFamily::Optimal)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn legendre_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// κ(z), zero outside [−1, 1].
    pub fn eval(&self, z: f64) -> f64 {
        if z.abs() > 1.0 {
            return 0.0;
        }
        legendre_all(self.p, z)
            .iter()
            .zip(&self.coeffs)
            .map(|(pj, b)| pj * b)
            .sum()
    }

    fn quadrature(&self) -> GaussLegendre {
        GaussLegendre::new(2 * self.p + 8)
    }

    /// ∫ z^m κ(z) dz.
    pub fn moment(&self, m: usize) -> f64 {
        self.quadrature().integrate(|z| z.powi(m as i32) * self.eval(z))
    }

    /// ‖κ‖² = ∫ κ² dz.
    pub fn norm_sq(&self) -> f64 {
        self.quadrature().integrate(|z| self.eval(z).powi(2))
    }

    /// B_{q,p} = ∫ z^p κ dz / p!.
    pub fn bias_constant(&self) -> f64 {
        let fact: f64 = (1..=self.p).map(|i| i as f64).product();
        self.moment(self.p) / fact
    }

    /// κ̂_m = h^{−(q+1)} ∫ κ(f/h) e^{2πimf} df for m = 0..=m_max.
    ///
    /// The kernels here are real and of parity q, so κ̂_{−m} = conj(κ̂_m);
    /// for even q the coefficients are real and returned as such. Odd q
    /// returns the imaginary part.
    pub fn fourier_coeffs(&self, h: f64, m_max: usize) -> Result<Vec<f64>> {
        if !(h > 0.0 && h < 0.5) {
            return Err(Error::invalid(format!("halfwidth {h} must lie in (0, 1/2)")));
        }
        let gl = GaussLegendre::new(16);
        let scale = h.powi(-(self.q as i32));
        Ok((0..=m_max)
            .map(|m| {
                let omega = 2.0 * PI * m as f64 * h;
                let panels = (2.0 * omega).ceil().max(1.0) as usize;
                let integral = if self.q.is_multiple_of(2) {
                    gl.integrate_composite(-1.0, 1.0, panels, |z| self.eval(z) * (omega * z).cos())
                } else {
                    gl.integrate_composite(-1.0, 1.0, panels, |z| self.eval(z) * (omega * z).sin())
                };
                scale * integral
            })
            .collect())
    }
}

/// Default interior kernel for an order: Epanechnikov for (0,2), the
/// minimal-norm kernel otherwise.
pub fn interior_kernel(q: usize, p: usize) -> Result<Kernel> {
    if (q, p) == (0, 2) {
        Kernel::optimal(0)
    } else {
        Kernel::minimal_norm(q, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn epanechnikov() {
        let k = interior_kernel(0, 2).unwrap();
        for z in [-1.0, -0.6, 0.0, 0.3, 0.99] {
            assert!(close(k.eval(z), 0.75 * (1.0 - z * z), 1e-12));
        }
        assert!(close(k.moment(0), 1.0, 1e-14));
        assert!(close(k.moment(2), 0.2, 1e-14));
        assert!(close(k.bias_constant(), 0.1, 1e-14));
        assert!(close(k.norm_sq(), 0.6, 1e-14));
        assert_eq!(k.eval(1.5), 0.0);
    }

    #[test]
    fn fourth_order_kernels() {
        let k04 = interior_kernel(0, 4).unwrap();
        for z in [-0.8, 0.0, 0.5] {
            assert!(close(k04.eval(z), 0.375 * (3.0 - 5.0 * z * z), 1e-13));
        }
        assert!(close(k04.norm_sq(), 9.0 / 8.0, 1e-13));
        assert!(close(k04.bias_constant(), -1.0 / 280.0, 1e-14));

        let k24 = interior_kernel(2, 4).unwrap();
        for z in [-0.8, 0.0, 0.5] {
            assert!(close(k24.eval(z), 3.75 * (3.0 * z * z - 1.0), 1e-12));
        }
        assert!(close(k24.norm_sq(), 22.5, 1e-11));
        assert!(close(k24.bias_constant(), 1.0 / 14.0, 1e-13));
    }

    #[test]
    fn moment_conditions_for_all_supported_orders() {
        let kernels = [
            Kernel::optimal(0).unwrap(),
            Kernel::optimal(2).unwrap(),
            Kernel::minimal_norm(0, 2).unwrap(),
            Kernel::minimal_norm(0, 4).unwrap(),
            Kernel::minimal_norm(2, 4).unwrap(),
            Kernel::minimal_norm(1, 3).unwrap(),
        ];
        for k in &kernels {
            let qf: f64 = (1..=k.q()).map(|i| i as f64).product();
            for m in 0..k.p() {
                let expect = if m == k.q() { qf } else { 0.0 };
                assert!(close(k.moment(m), expect, 1e-10), "{k:?} m={m}");
            }
        }
    }

    #[test]
    fn optimal_kernel_matches_touch_point_form() {
        let k = Kernel::optimal(2).unwrap();
        let b = k.legendre_coeffs();
        assert!(close(b[2], 7.5, 1e-11));
        assert!(close(b[4], -7.5, 1e-9));
    }

    #[test]
    fn unsupported_orders() {
        assert!(interior_kernel(0, 3).is_err());
        assert!(interior_kernel(2, 2).is_err());
        assert!(Kernel::optimal(0).is_ok());
        assert!(Kernel::new(0, 4, KernelFamily::Optimal).is_err());
    }

    #[test]
    fn minimal_norm_perturbations_increase_norm() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (q, p) in [(0, 4), (2, 4), (0, 2)] {
            let k = Kernel::minimal_norm(q, p).unwrap();
            let base = k.norm_sq();
            let gl = GaussLegendre::new(30);
            for _ in 0..10 {
                // a polynomial orthogonal to 1..z^{p-1} on [-1,1]: Legendre P_j, j >= p
                let dir: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let eps = 0.05;
                let pert = |z: f64| {
                    let l = legendre_all(p + 3, z);
                    k.eval(z) + eps * dir.iter().enumerate().map(|(i, d)| d * l[p + i]).sum::<f64>()
                };
                let n = gl.integrate(|z| pert(z).powi(2));
                assert!(n > base, "({q},{p})");
                for m in 0..p {
                    let mom = gl.integrate(|z| z.powi(m as i32) * pert(z));
                    assert!(close(mom, k.moment(m), 1e-12));
                }
            }
        }
    }

    #[test]
    fn epanechnikov_minimizes_optimal_ease_among_nonnegative_quadratics() {
        // EASE at the optimal halfwidth scales as |B|^{2/5} ‖κ‖^{8/5};
        // 1/2 + b2 P2 is nonnegative on [−1, 1] for b2 in [−1/2, 1]
        let score = |b2: f64| {
            let norm = 0.5 + 0.4 * b2 * b2;
            let b = 1.0 / 6.0 + 2.0 * b2 / 15.0;
            b.abs().powf(0.4) * norm.powf(0.8)
        };
        let best = score(-0.5);
        for d in [0.01, 0.05, 0.2, 0.7, 1.5] {
            assert!(score(-0.5 + d) > best);
        }
    }

    #[test]
    fn fourier_coefficients() {
        let k = interior_kernel(0, 2).unwrap();
        let h = 0.05;
        let c = k.fourier_coeffs(h, 400).unwrap();
        assert!(close(c[0], 1.0, 1e-13));
        // closed form for Epanechnikov: 3(sin ω − ω cos ω)/ω³
        for m in [1usize, 7, 50, 200] {
            let w = 2.0 * PI * m as f64 * h;
            let exact = 3.0 * (w.sin() - w * w.cos()) / w.powi(3);
            assert!(close(c[m], exact, 1e-12), "m={m}");
        }
        let sup = c.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        for (m, v) in c.iter().enumerate().skip(1) {
            let mh = m as f64 * h;
            assert!(v.abs() <= 4.0 * sup / (mh * mh), "m={m}");
        }
        assert!(k.fourier_coeffs(0.5, 3).is_err());
        let k24 = interior_kernel(2, 4).unwrap();
        let c24 = k24.fourier_coeffs(0.1, 0).unwrap();
        assert!(close(c24[0], 0.0, 1e-10));
    }
}
