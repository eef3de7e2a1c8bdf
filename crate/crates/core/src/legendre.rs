//! Legendre polynomials and Gauss–Legendre quadrature.

use std::f64::consts::PI;

/// P_j(z) by the three-term recurrence.
pub fn legendre(j: usize, z: f64) -> f64 {
    let mut prev = 1.0;
    if j == 0 {
        return prev;
    }
    let mut cur = z;
    for k in 1..j {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * z * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// P_0(z), …, P_{max}(z).
pub fn legendre_all(max: usize, z: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(1.0);
    if max >= 1 {
        out.push(z);
    }
    for k in 1..max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * z * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Leading coefficient of P_k: (2k)! / (2^k (k!)²).
pub fn leading_coefficient(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (2 * i - 1) as f64 / i as f64)
}

/// Monomial coefficients c_0..c_j of P_j (ascending powers).
pub fn legendre_monomial(j: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if j == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..j {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= kf * c / (kf + 1.0);
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let p = legendre_all(n, z);
                // P_n'(z) = n (z P_n − P_{n−1}) / (z² − 1)
                dp = nf * (z * p[n] - p[n - 1]) / (z * z - 1.0);
                let dz = p[n] / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// ∫_a^b f using `panels` equal subintervals.
    pub fn integrate_composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        (0..panels)
            .map(|p| {
                let mid = a + (p as f64 + 0.5) * width;
                half * self.integrate(|t| f(mid + half * t))
            })
            .sum()
    }
}
