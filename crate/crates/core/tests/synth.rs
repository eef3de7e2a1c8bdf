use mtspec::bench::{monte_carlo_ease, EstimatorConfig, MonteCarloConfig, RawEstimate};
use mtspec::kernel::interior_kernel;
use mtspec::smooth::{kernel_smooth, Halfwidth, SmoothingDomain};
use mtspec::synth::{generate, generate_replicate, oracle_log_spectrum, oracle_spectrum, ProcessSpec};
use mtspec::taper::{log_multitaper, multitaper_spectrum, FrequencyGrid};

#[test]
fn band_process_periodogram_converges_to_its_levels() {
    let spec = ProcessSpec::BandDiscontinuous {
        f_disc: 0.2,
        low: 1.0,
        high: 6.0,
    };
    let (n, reps) = (1024, 500);
    let mut mean = vec![0.0; n + 2];
    for rep in 0..reps {
        let est = multitaper_spectrum(&generate_replicate(&spec, n, 17, rep).unwrap(), 1).unwrap();
        for (m, v) in mean.iter_mut().zip(&est.values) {
            *m += v / reps as f64;
        }
    }
    let grid = FrequencyGrid::canonical(n);
    let mut worst: f64 = 0.0;
    for (j, f) in grid.frequencies().into_iter().enumerate() {
        if (f - 0.2).abs() < 0.02 || !(0.01..=0.49).contains(&f) {
            continue;
        }
        let s = oracle_spectrum(&spec, f).unwrap().s;
        worst = worst.max((mean[j] / s - 1.0).abs());
    }
    assert!(worst < 0.2, "{worst}");
}

#[test]
fn generators_are_seeded_and_replications_differ() {
    for spec in [
        ProcessSpec::white(),
        ProcessSpec::ar(&[0.9, -0.81]),
        ProcessSpec::Ma {
            coeffs: vec![0.4, 0.2],
            variance: 1.0,
        },
        ProcessSpec::BandDiscontinuous {
            f_disc: 0.3,
            low: 2.0,
            high: 1.0,
        },
    ] {
        let a = generate_replicate(&spec, 300, 9, 4).unwrap();
        let b = generate_replicate(&spec, 300, 9, 4).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(a.samples(), generate_replicate(&spec, 300, 9, 5).unwrap().samples());
        assert_ne!(a.samples(), generate_replicate(&spec, 300, 10, 4).unwrap().samples());
        assert_eq!(generate(&spec, 300, 9).unwrap().samples(), generate_replicate(&spec, 300, 9, 0).unwrap().samples());
    }
}

#[test]
fn parallel_harness_matches_a_serial_recomputation() {
    let spec = ProcessSpec::ar(&[0.7]);
    let h = 0.05;
    let est = EstimatorConfig::FixedHalfwidth {
        raw: RawEstimate::Multitaper(6),
        h,
    };
    let mc = MonteCarloConfig::new(256, 5, 77);
    let report = monte_carlo_ease(&spec, &est, &mc).unwrap();
    let grid = FrequencyGrid::canonical(256);
    let truth = oracle_log_spectrum(&spec, &grid.frequencies()).unwrap();
    let k = interior_kernel(0, 2).unwrap();
    let mut mse = vec![0.0; truth.len()];
    for rep in 0..5 {
        let th = log_multitaper(&multitaper_spectrum(&generate_replicate(&spec, 256, 77, rep).unwrap(), 6).unwrap()).unwrap();
        let s = kernel_smooth(&th, &k, Halfwidth::Global(h), &SmoothingDomain::reflecting()).unwrap();
        for ((m, e), t) in mse.iter_mut().zip(&s.values).zip(&truth) {
            *m += (e - t).powi(2);
        }
    }
    for (a, b) in report.mse.iter().zip(&mse) {
        assert!((a - b / 5.0).abs() <= 1e-15 * b.abs().max(1.0));
    }
}

#[test]
fn white_noise_fixed_halfwidth_error_follows_the_variance_law() {
    let (n, k, h) = (4096, 10, 0.02);
    let est = EstimatorConfig::FixedHalfwidth {
        raw: RawEstimate::Multitaper(k),
        h,
    };
    let mut mc = MonteCarloConfig::new(n, 200, 5);
    mc.exclude = vec![[0.0, h], [0.5 - h, 0.5]];
    let report = monte_carlo_ease(&ProcessSpec::white(), &est, &mc).unwrap();
    let kappa = interior_kernel(0, 2).unwrap().norm_sq();
    let predicted = kappa / (n as f64 * h) * (1.0 + 0.5 / k as f64).powi(2);
    assert!(
        (report.integrated / predicted - 1.0).abs() < 0.15,
        "{} vs {predicted}",
        report.integrated
    );
}
