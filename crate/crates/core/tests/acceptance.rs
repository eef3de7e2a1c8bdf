//! Acceptance suite. Prints one line per criterion.
//!
//! Failing criteria are reported, not hidden. Set `ACCEPTANCE_STRICT=1` to
//! turn any FAIL into a nonzero exit status and `ACCEPTANCE_ONLY=3,9` to
//! run a subset.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use mtspec::basis::uniform_window;
use mtspec::bench::{monte_carlo_ease, oracle_halfwidth_scan, EstimatorConfig, MonteCarloConfig, RawEstimate};
use mtspec::boundary::{
    continuum_boundary_kernel, equivalent_weighting, grid_boundary_kernel, lpr_fit, solve_boundary_coeffs,
    solve_continuum_coeffs, BoundaryGeometry, Side,
};
use mtspec::kernel::{interior_kernel, Kernel};
use mtspec::legendre::GaussLegendre;
use mtspec::moments::{unit_beta_ratio, FreeCoefficient};
use mtspec::pipeline::{adaptive_from_estimates, default_tapers, FinalSmoother, PipelineConfig};
use mtspec::smooth::{window_weights, GuardBands};
use mtspec::synth::{
    generate_replicate, quadratic_variance_oracle, smoothed_multitaper_matrix, ProcessSpec,
};
use mtspec::taper::{
    log_multitaper, multitaper_spectrum, sinusoidal_tapers, FrequencyGrid, LogSpectralEstimate,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ar2() -> ProcessSpec {
    ProcessSpec::ar(&[0.9, -0.81])
}

fn factorial(q: usize) -> f64 {
    (1..=q).map(|i| i as f64).product()
}

/// ψ′(K) for integer K: π²/6 − Σ_{i<K} 1/i².
fn trigamma_int(k: usize) -> f64 {
    PI * PI / 6.0 - (1..k).map(|i| 1.0 / (i * i) as f64).sum::<f64>()
}

fn kernel_moments() -> Outcome {
    let mut worst: f64 = 0.0;
    let grid = FrequencyGrid::canonical(2048);
    let step = grid.spacing();
    let kernels = [
        interior_kernel(0, 2).unwrap(),
        interior_kernel(0, 4).unwrap(),
        interior_kernel(2, 4).unwrap(),
        Kernel::minimal_norm(0, 2).unwrap(),
        Kernel::minimal_norm(1, 3).unwrap(),
    ];
    for k in &kernels {
        for &(f, h) in &[(0.25, 0.05), (0.1, 0.013), (0.31, 0.2)] {
            let (pos, w) = window_weights(&grid, k, f, h).unwrap();
            for m in 0..k.p() {
                let s: f64 = pos.iter().zip(&w).map(|(&i, w)| w * (i as f64 * step - f).powi(m as i32)).sum();
                let target = if m == k.q() { factorial(m) } else { 0.0 };
                worst = worst.max((s - target).abs() * h.powi(k.q() as i32 - m as i32));
            }
        }
    }
    for q in [0usize, 2] {
        for nh in [25usize, 100, 400] {
            let (z, m) = uniform_window(nh);
            for ft in [-1.0, -0.6, -0.2, 0.0] {
                for rule in [FreeCoefficient::Zero, FreeCoefficient::Beta(0.7), FreeCoefficient::Beta(1.0)] {
                    let bk = solve_boundary_coeffs(q, q + 2, &z, &m, ft, rule).unwrap();
                    for j in 0..q + 2 {
                        let s: f64 = bk
                            .shape
                            .iter()
                            .zip(&m)
                            .zip(&z)
                            .map(|((g, m), z)| g * m * (z - ft).powi(j as i32))
                            .sum();
                        let target = if j == q { factorial(q) } else { 0.0 };
                        worst = worst.max((s - target).abs());
                    }
                }
            }
        }
        let h = 0.04;
        for side in [Side::Right, Side::Left] {
            let geo = BoundaryGeometry::new(0.2, side, h).unwrap();
            for off in [0.0, 0.01, 0.03] {
                let f = 0.2 + if side == Side::Right { off } else { -off };
                let k = grid_boundary_kernel(&grid, &geo, f, q, q + 2, FreeCoefficient::Beta(1.0), &GuardBands::none())
                    .unwrap();
                for j in 0..q + 2 {
                    let s: f64 = k
                        .positions
                        .iter()
                        .zip(&k.weights)
                        .map(|(&i, w)| w * (i as f64 * step - f).powi(j as i32))
                        .sum();
                    let target = if j == q { factorial(q) } else { 0.0 };
                    worst = worst.max((s - target).abs() * h.powi(q as i32 - j as i32));
                }
            }
        }
    }
    let epa = interior_kernel(0, 2).unwrap();
    let epa_dev = (0..=2000)
        .map(|i| -1.0 + i as f64 / 1000.0)
        .map(|z| (epa.eval(z) - 0.75 * (1.0 - z * z)).abs())
        .fold(0.0, f64::max);
    check(
        worst < 1e-10 && epa_dev < 1e-12,
        format!("max moment residual {worst:.2e}, (0,2) vs 3/4(1-z^2) {epa_dev:.2e}"),
    )
}

fn boundary_closed_forms() -> Outcome {
    let edge = continuum_boundary_kernel(0, -1.0, 1.0).unwrap();
    let mid = continuum_boundary_kernel(0, 0.0, 1.0).unwrap();
    let mut dev: f64 = 0.0;
    for i in 0..=200 {
        let z = -1.0 + i as f64 / 100.0;
        dev = dev.max((edge.eval(z) - (3.0 * z * z - 3.0 * z)).abs());
        dev = dev.max((mid.eval(z) - (1.0 - 0.5 * (3.0 * z * z - 1.0))).abs());
    }
    let mut ratios = Vec::new();
    for q in [0usize, 2] {
        let rho = unit_beta_ratio(q);
        let e = solve_continuum_coeffs(q, q + 2, -1.0, FreeCoefficient::Beta(1.0)).unwrap();
        let m = solve_continuum_coeffs(q, q + 2, 0.0, FreeCoefficient::Beta(1.0)).unwrap();
        ratios.push(e.normalized_ease(rho) / m.normalized_ease(rho) / (4.0 * ((q + 1) * (q + 1)) as f64));
    }
    let ok = dev < 1e-12 && ratios.iter().all(|r| (r - 1.0).abs() < 0.01);
    check(
        ok,
        format!(
            "closed-form deviation {dev:.2e}, EASE ratio / 4(q+1)^2 = {:.6} (q=0), {:.6} (q=2)",
            ratios[0], ratios[1]
        ),
    )
}

fn discrete_convergence() -> Outcome {
    let scales = [50usize, 200, 800];
    let mut lines = Vec::new();
    let mut ok = true;
    for q in [0usize, 2] {
        let cont = continuum_boundary_kernel(q, -1.0, 1.0).unwrap();
        let errors: Vec<f64> = scales
            .iter()
            .map(|&nh| {
                let (z, m) = uniform_window(nh);
                let bk = solve_boundary_coeffs(q, q + 2, &z, &m, -1.0, FreeCoefficient::Beta(1.0)).unwrap();
                let g = |z: f64| cont.gamma() * cont.eval(z);
                z.iter()
                    .zip(&bk.shape)
                    .map(|(&z, s)| (s - g(z)).abs())
                    .fold(0.0, f64::max)
                    / g(1.0).abs().max(g(-1.0).abs())
            })
            .collect();
        let orders: Vec<f64> = (0..2).map(|i| (errors[i] / errors[i + 1]).ln() / 4f64.ln()).collect();
        ok &= orders.iter().all(|o| (0.8..=1.25).contains(o));
        lines.push(format!(
            "q={q}: rel err {:.2e}/{:.2e}/{:.2e}, orders {:.2}/{:.2}",
            errors[0], errors[1], errors[2], orders[0], orders[1]
        ));
    }
    check(ok, lines.join("; "))
}

fn lpr_theorems() -> Outcome {
    let (z, m) = uniform_window(40);
    let values: Vec<f64> = z.iter().map(|z| (2.5 * z).cos() + 0.3 * z).collect();
    let lines: [fn(f64) -> f64; 3] = [|z| 1.0 - z, |z| 1.0 + z, |z| 1.0 - z * z];
    let fits: Vec<_> = lines
        .iter()
        .map(|w| {
            let wts: Vec<f64> = z.iter().zip(&m).map(|(&z, m)| m * w(z)).collect();
            lpr_fit(&values, &z, &wts, 0.0, 0, 2).unwrap()
        })
        .collect();
    let mut sym: f64 = 0.0;
    for f in &fits[1..] {
        for (a, b) in f.equivalent_kernel.iter().zip(&fits[0].equivalent_kernel) {
            sym = sym.max((a - b).abs());
        }
    }
    let gl = GaussLegendre::new(16);
    let mut boundary: f64 = 0.0;
    for ft in [-1.0, -0.75, -0.5, -0.25, 0.0] {
        let line = equivalent_weighting(0, ft).unwrap();
        let wts: Vec<f64> = gl.nodes.iter().zip(&gl.weights).map(|(&z, m)| m * line.eval(z)).collect();
        let fit = lpr_fit(&vec![0.0; wts.len()], &gl.nodes, &wts, ft, 0, 2).unwrap();
        let g = continuum_boundary_kernel(0, ft, 1.0).unwrap();
        let target: Vec<f64> = gl.nodes.iter().zip(&gl.weights).map(|(&z, m)| m * g.eval(z)).collect();
        let (sa, sb): (f64, f64) = (fit.equivalent_kernel.iter().sum(), target.iter().sum());
        for (a, b) in fit.equivalent_kernel.iter().zip(&target) {
            boundary = boundary.max((a / sa - b / sb).abs());
        }
    }
    // the weight 2h − (f − f_disc) in standardized form is 1 − z̃
    let edge_line = equivalent_weighting(0, -1.0).unwrap();
    let edge_ok = (edge_line.intercept - 1.0).abs() < 1e-15 && (edge_line.slope + 1.0).abs() < 1e-15;
    check(
        sym < 1e-10 && boundary < 1e-8 && edge_ok,
        format!("symmetric W1/W2/W3 spread {sym:.2e}, boundary weighting vs optimal kernel {boundary:.2e}"),
    )
}

fn distributional_suite() -> Outcome {
    let n = 2048;
    let reps = 2000u64;
    let spec = ProcessSpec::white();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [1usize, 5, 20] {
        let grid = FrequencyGrid::canonical(n);
        let probes: Vec<usize> = (k + 2..grid.len() - k - 2).step_by(2 * k + 2).collect();
        let ks_points = [grid.len() / 4, grid.len() / 2];
        let mut sum = vec![0.0; grid.len()];
        let mut sum_sq = vec![0.0; grid.len()];
        let mut chi: Vec<Vec<f64>> = vec![Vec::new(); ks_points.len()];
        let mut per_rep = Vec::new();
        for rep in 0..reps {
            let ts = generate_replicate(&spec, n, 11, rep).unwrap();
            let est = multitaper_spectrum(&ts, k).unwrap();
            let theta = log_multitaper(&est).unwrap();
            for (j, v) in theta.values.iter().enumerate() {
                sum[j] += v;
                sum_sq[j] += v * v;
            }
            for (c, &j) in chi.iter_mut().zip(&ks_points) {
                c.push(2.0 * k as f64 * est.values[j]);
            }
            per_rep.push(probes.iter().map(|&j| theta.values[j]).sum::<f64>() / probes.len() as f64);
        }
        let r = reps as f64;
        let interior: Vec<usize> = (k + 1..grid.len() - k - 1).collect();
        let var = interior
            .iter()
            .map(|&j| (sum_sq[j] - sum[j] * sum[j] / r) / (r - 1.0))
            .sum::<f64>()
            / interior.len() as f64;
        let var_rel = var / trigamma_int(k) - 1.0;
        let mean = per_rep.iter().sum::<f64>() / r;
        let se = (per_rep.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt();
        let dist = ChiSquared::new(2.0 * k as f64).unwrap();
        let ks = chi
            .iter_mut()
            .map(|c| {
                c.sort_by(f64::total_cmp);
                let m = c.len() as f64;
                c.iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        let f = dist.cdf(x);
                        (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        let ks_crit = 1.63 / r.sqrt();
        let pass = var_rel.abs() < 0.05 && mean.abs() < 3.0 * se && ks < ks_crit;
        ok &= pass;
        parts.push(format!(
            "K={k}: var/psi' {:+.1}%, bias {:+.4} ({:.1} SE), KS {:.4}/{:.4}",
            100.0 * var_rel,
            mean,
            mean.abs() / se,
            ks,
            ks_crit
        ));
    }
    check(ok, parts.join("; "))
}

fn variance_oracle() -> Outcome {
    let k02 = interior_kernel(0, 2).unwrap();
    let f = 0.25;
    let mut errors = Vec::new();
    let mut parts = Vec::new();
    for &(n, k, h) in &[(64usize, 1usize, 0.16), (128, 1, 0.125), (128, 1, 0.25)] {
        let grid = FrequencyGrid::canonical(n);
        let (pos, w) = window_weights(&grid, &k02, f, h).unwrap();
        let freqs: Vec<f64> = pos.iter().map(|&i| i as f64 * grid.spacing()).collect();
        let tapers = sinusoidal_tapers(n, k).unwrap();
        let exact = quadratic_variance_oracle(&smoothed_multitaper_matrix(&tapers, &freqs, &w)).unwrap();
        let asym = k02.norm_sq() / (n as f64 * h) * (1.0 + 0.5 / k as f64);
        let err = (exact / asym - 1.0).abs();
        errors.push(err);
        parts.push(format!("Nh/K={:.1}: err {:.2}%", n as f64 * h / k as f64, 100.0 * err));
    }
    let shrinking = errors.windows(2).all(|w| w[1] < w[0]);
    check(errors.iter().all(|&e| e < 0.2) && shrinking, parts.join(", "))
}

fn log_halfwidths(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn multitaper_gain() -> Outcome {
    let n = 4096;
    let mc = MonteCarloConfig::new(n, 200, 2024);
    let hs = log_halfwidths(0.002, 0.2, 30);
    let single = oracle_halfwidth_scan(&ar2(), RawEstimate::SingleTaper, &hs, &mc).unwrap();
    let multi = oracle_halfwidth_scan(&ar2(), RawEstimate::Multitaper(default_tapers(n)), &hs, &mc).unwrap();
    let (i, j) = (single.best(), multi.best());
    let ratio = single.integrated[i] / multi.integrated[j];
    let target = (PI * PI / 4.0).powf(0.8);
    check(
        (ratio / target - 1.0).abs() <= 0.3,
        format!(
            "single {:.5} (h={:.4}) / multitaper K={} {:.5} (h={:.4}) = {ratio:.3}, target {target:.3} +-30%",
            single.integrated[i],
            hs[i],
            default_tapers(n),
            multi.integrated[j],
            hs[j]
        ),
    )
}

fn rate_check() -> Outcome {
    let est = EstimatorConfig::Pipeline(PipelineConfig::default());
    let small = monte_carlo_ease(&ar2(), &est, &MonteCarloConfig::new(1024, 200, 99)).unwrap();
    let large = monte_carlo_ease(&ar2(), &est, &MonteCarloConfig::new(4096, 200, 99)).unwrap();
    let ratio = large.integrated / small.integrated;
    let target = 4f64.powf(-0.8);
    check(
        (ratio / target - 1.0).abs() <= 0.5,
        format!(
            "EASE N=1024 {:.5}+-{:.5}, N=4096 {:.5}+-{:.5}, ratio {ratio:.3}, target {target:.3} +-50%",
            small.integrated, small.integrated_se, large.integrated, large.integrated_se
        ),
    )
}

fn touch_point_continuity() -> Outcome {
    let n = 2048;
    let f_disc = 0.2;
    let theta_fn = |f: f64| (6.0 * f).sin() + 0.8 * (15.0 * f).cos() + if f >= f_disc { 1.5 } else { 0.0 };
    let on = |grid: FrequencyGrid, tapers: usize| {
        LogSpectralEstimate::from_values(grid, grid.frequencies().into_iter().map(theta_fn).collect(), tapers).unwrap()
    };
    let theta1 = on(FrequencyGrid::single_taper(n), 1);
    let theta = on(FrequencyGrid::canonical(n), default_tapers(n));
    let cfg = PipelineConfig {
        discontinuities: vec![f_disc],
        ..Default::default()
    };
    let out = adaptive_from_estimates(&theta1, &theta, n, &cfg).unwrap();
    let sm = &out.smoother;
    let tps: Vec<_> = out.diagnostics.touch_points.iter().filter(|t| t.barrier == f_disc).collect();
    let jump = tps
        .iter()
        .map(|tp| {
            let (a, b) = sm.limits_at(tp).unwrap();
            (a - b).abs()
        })
        .fold(0.0, f64::max);
    // one-sided at f_disc: values on the far side do not reach the estimate
    let mut shifted = theta.clone();
    for (v, f) in shifted.values.iter_mut().zip(theta.grid.frequencies()) {
        if f < f_disc {
            *v += 10.0;
        }
    }
    let other = FinalSmoother::new(&shifted, sm.profile().to_vec(), sm.domain().clone()).unwrap();
    let right = (sm.evaluate(f_disc).unwrap().0 - other.evaluate(f_disc).unwrap().0).abs();
    let left_f = f_disc - theta.grid.spacing() * 0.5;
    let left = (sm.evaluate(left_f).unwrap().0 + 10.0 - other.evaluate(left_f).unwrap().0).abs();
    check(
        tps.len() == 2 && jump < 1e-8 && right < 1e-10 && left < 1e-9,
        format!(
            "{} touch points, max |one-sided - interior| {jump:.2e}, cross-talk at f_disc {right:.1e} / {left:.1e}",
            tps.len()
        ),
    )
}

fn k_insensitivity() -> Outcome {
    let n = 4096;
    let ks = [
        (n as f64).powf(0.4).round() as usize,
        (n as f64).powf(8.0 / 15.0).round() as usize,
        (n as f64).powf(0.62).round() as usize,
    ];
    let ease: Vec<(f64, f64)> = ks
        .iter()
        .map(|&k| {
            let cfg = PipelineConfig {
                tapers: Some(k),
                ..Default::default()
            };
            let r = monte_carlo_ease(&ar2(), &EstimatorConfig::Pipeline(cfg), &MonteCarloConfig::new(n, 100, 31)).unwrap();
            (r.integrated, r.integrated_se)
        })
        .collect();
    let lo = ease.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let hi = ease.iter().map(|e| e.0).fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    let parts: Vec<String> = ks
        .iter()
        .zip(&ease)
        .map(|(k, (e, se))| format!("K={k}: {e:.5}+-{se:.5}"))
        .collect();
    check(spread < 0.15, format!("{}, spread {:.1}% (limit 15%)", parts.join(", "), 100.0 * spread))
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 10] = [
        ("kernel and moment suite", Duration::from_secs(1), kernel_moments),
        ("boundary closed forms", Duration::from_secs(1), boundary_closed_forms),
        ("discrete vs continuum convergence", Duration::from_secs(10), discrete_convergence),
        ("local polynomial equivalences", Duration::from_secs(5), lpr_theorems),
        ("distributional suite", Duration::from_secs(120), distributional_suite),
        ("variance oracle", Duration::from_secs(30), variance_oracle),
        ("multitaper gain", Duration::from_secs(600), multitaper_gain),
        ("rate check", Duration::from_secs(600), rate_check),
        ("continuity at touch points", Duration::from_secs(5), touch_point_continuity),
        ("K-insensitivity", Duration::from_secs(600), k_insensitivity),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} ({name}): {} ({}; {:.2}s of {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {}/{ran} criteria pass", ran - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
