use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vipguide::calibration::{fit, read_samples_csv, rmse, CalibrationError, CalibrationModel, CalibrationSample};

fn grid(a: f64, b: f64, c: f64, n: usize) -> Vec<CalibrationSample> {
    (0..n)
        .map(|i| {
            let r = i as f64 / (n - 1) as f64;
            CalibrationSample::new(r, a * r * r + b * r + c)
        })
        .collect()
}

proptest! {
    #[test]
    fn exact_quadratics_are_recovered(a in 0.0f64..20.0, b in -30.0f64..-5.0, c in 15.0f64..30.0, n in 3usize..60) {
        // coefficients chosen so distances stay positive on [0, 1]
        let s = grid(a, b, c, n);
        prop_assume!(s.iter().all(|x| x.distance > 0.0));
        let m = fit(&s).unwrap();
        for (got, want) in m.coefficients().iter().zip([a, b, c]) {
            prop_assert!((got - want).abs() <= 1e-6, "{:?} vs {:?}", m.coefficients(), [a, b, c]);
        }
        prop_assert!(m.rmse <= 1e-9);
    }

    #[test]
    fn fit_is_least_squares(seed in any::<u64>()) {
        // perturbing the optimum never lowers the residual
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<_> = (0..30).map(|_| CalibrationSample::new(rng.random(), rng.random_range(1.0..10.0))).collect();
        let m = fit(&s).unwrap();
        for k in 0..3 {
            for delta in [-1e-3, 1e-3] {
                let mut c = m.coefficients();
                c[k] += delta;
                let p = CalibrationModel::from_coefficients(c[0], c[1], c[2]);
                let unclamped = |mm: &CalibrationModel| -> f64 {
                    s.iter().map(|x| (mm.a * x.rev * x.rev + mm.b * x.rev + mm.c - x.distance).powi(2)).sum()
                };
                prop_assert!(unclamped(&p) >= unclamped(&m) - 1e-9);
            }
        }
    }
}

#[test]
fn noisy_samples_meet_rmse_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let s: Vec<_> = (0..200)
        .map(|_| {
            let r: f64 = rng.random();
            let z = 4.0 * r * r - 13.0 * r + 10.0;
            CalibrationSample::new(r, (z + noise.sample(&mut rng)).max(0.01))
        })
        .collect();
    let m = fit(&s).unwrap();
    assert!(m.rmse <= 1.2, "rmse {}", m.rmse);
    assert!((rmse(&m, &s).unwrap() - m.rmse).abs() < 1e-12);
}

#[test]
fn too_few_distinct_revs() {
    let s = vec![CalibrationSample::new(0.5, 2.0), CalibrationSample::new(0.5, 2.1), CalibrationSample::new(0.2, 4.0)];
    assert!(matches!(fit(&s), Err(CalibrationError::RankDeficient { distinct: 2 })));
}

#[test]
fn csv_samples() {
    let s = read_samples_csv("rev,distance_m\n0.0,10\n0.5,5.5\n1.0,1\n".as_bytes()).unwrap();
    assert_eq!(s.len(), 3);
    assert!(read_samples_csv("r,d\n0,1\n".as_bytes()).is_err());
    assert!(read_samples_csv("rev,distance_m\nx,1\n".as_bytes()).is_err());
}
