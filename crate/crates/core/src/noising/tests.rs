use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::glm::fisher_diagonals;
use crate::optim::exact_penalty_value_grad;

fn row(v: &[f64]) -> SparseVector {
    SparseVector::from_dense(v)
}

fn toy() -> Dataset {
    Dataset::from_dense(
        &[
            vec![1.0, 0.0, 2.0, -0.5],
            vec![0.0, -1.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.0, 1.5],
            vec![-1.0, 1.0, 1.0, 0.25],
        ],
        vec![1.0, 0.0, 1.0, 0.0],
    )
    .unwrap()
}

/// Poisson labels for the same rows.
fn toy_counts() -> Dataset {
    toy().with_labels(vec![2.0, 0.0, 1.0, 3.0]).unwrap()
}

fn data_for(family: Family) -> Dataset {
    match family {
        Family::Poisson => toy_counts(),
        _ => toy(),
    }
}

const BETA: [f64; 4] = [0.3, -0.2, 0.5, 0.1];

#[test]
fn single_row_dropout_values() {
    // x = 1, β = 1, δ = 0.5: x̃·β is 2 or 0 with equal odds.
    let d = Dataset::from_dense(&[vec![1.0]], vec![1.0]).unwrap();
    let noise = NoiseModel::dropout(0.5).unwrap();
    let exact = exact_penalty(Family::Logistic, &d, &[1.0], &noise).unwrap();
    assert_eq!(exact.method, PenaltyMethod::Enumeration);
    assert_abs_diff_eq!(exact.value, 0.096_775_908_3, epsilon = 1e-9);
    let quad = quad_penalty(Family::Logistic, &d, &[1.0], &noise).unwrap();
    assert_abs_diff_eq!(quad.value, 0.098_305_966_6, epsilon = 1e-9);
}

#[test]
fn gaussian_logistic_reference_values() {
    let cases = [
        (0.5, 0.25, 0.030_345_620_506, 0.03125),
        (0.5, 1.0, 0.112_912_002_787, 0.125),
        (0.5, 4.0, 0.374_567_207_491, 0.5),
        (0.95, 4.0, 0.138_036_856_221, 0.095),
        (0.95, 1.0, 0.027_678_023_966, 0.02375),
        (0.8, 2.0, 0.154_887_642_885, 0.16),
    ];
    for (p, s2, exact, quad) in cases {
        let (e, q) = gaussian_logistic_penalty(p, s2).unwrap();
        assert_abs_diff_eq!(e, exact, epsilon = 1e-9);
        assert_abs_diff_eq!(q, quad, epsilon = 1e-12);
    }
}

#[test]
fn gaussian_logistic_edges() {
    assert_eq!(gaussian_logistic_penalty(0.3, 0.0).unwrap(), (0.0, 0.0));
    for p in [0.05, 0.2, 0.35] {
        let (a, qa) = gaussian_logistic_penalty(p, 2.0).unwrap();
        let (b, qb) = gaussian_logistic_penalty(1.0 - p, 2.0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        assert_abs_diff_eq!(qa, qb, epsilon = 1e-15);
    }
    assert!(gaussian_logistic_penalty(1.0, 1.0).is_err());
    assert!(gaussian_logistic_penalty(0.5, -1.0).is_err());
}

#[test]
fn linear_additive_is_ridge() {
    let d = toy();
    let s2 = 0.7;
    let noise = NoiseModel::additive(s2).unwrap();
    let ridge = 0.5 * s2 * d.len() as f64 * BETA.iter().map(|b| b * b).sum::<f64>();
    let exact = exact_penalty(Family::Linear, &d, &BETA, &noise).unwrap().value;
    let quad = quad_penalty(Family::Linear, &d, &BETA, &noise).unwrap().value;
    assert_abs_diff_eq!(exact, ridge, epsilon = 1e-10);
    assert_abs_diff_eq!(quad, ridge, epsilon = 1e-10);
}

#[test]
fn linear_dropout_surrogate_is_exact() {
    let d = toy();
    let noise = NoiseModel::dropout(0.35).unwrap();
    let exact = exact_penalty(Family::Linear, &d, &BETA, &noise).unwrap().value;
    let quad = quad_penalty(Family::Linear, &d, &BETA, &noise).unwrap().value;
    assert_abs_diff_eq!(exact, quad, epsilon = 1e-10);
}

#[test]
fn poisson_additive_closed_form_matches_quadrature() {
    let d = toy_counts();
    let noise = NoiseModel::additive(0.3).unwrap();
    let closed = exact_penalty(Family::Poisson, &d, &BETA, &noise).unwrap();
    assert_eq!(closed.method, PenaltyMethod::ClosedForm);
    let var = 0.3 * BETA.iter().map(|b| b * b).sum::<f64>();
    let quad: f64 = d
        .rows()
        .iter()
        .map(|x| {
            let mu = x.dot(&BETA);
            GaussHermite::shared().expect(mu, var.sqrt(), f64::exp) - mu.exp()
        })
        .sum();
    assert_abs_diff_eq!(closed.value, quad, epsilon = 1e-10);
}

#[test]
fn dropout_surrogate_is_fisher_weighted_ridge() {
    let d = toy();
    let delta = 0.4;
    let noise = NoiseModel::dropout(delta).unwrap();
    let (diag_h, _) = fisher_diagonals(Family::Logistic, &d, &BETA).unwrap();
    let weighted: f64 = diag_h.iter().zip(&BETA).map(|(h, b)| h * b * b).sum();
    let expected = 0.5 * delta / (1.0 - delta) * weighted;
    let quad = quad_penalty(Family::Logistic, &d, &BETA, &noise).unwrap().value;
    assert_abs_diff_eq!(quad, expected, epsilon = 1e-12);
}

#[test]
fn identity_noise_gives_zero_penalty() {
    let d = toy();
    for noise in [NoiseModel::dropout(0.0).unwrap(), NoiseModel::additive(0.0).unwrap()] {
        for family in Family::ALL {
            let d = data_for(family);
            assert_eq!(exact_penalty(family, &d, &BETA, &noise).unwrap().value, 0.0);
            assert_eq!(quad_penalty(family, &d, &BETA, &noise).unwrap().value, 0.0);
            let mc = mc_penalty(family, d.rows(), &BETA, &noise, 5, 1).unwrap();
            assert_eq!((mc.mean, mc.std_error), (0.0, 0.0));
        }
    }
    let noise = NoiseModel::dropout(0.5).unwrap();
    assert_eq!(mc_penalty(Family::Logistic, d.rows(), &[0.0; 4], &noise, 10, 3).unwrap().mean, 0.0);
}

#[test]
fn invalid_noise_parameters() {
    assert!(NoiseModel::dropout(1.0).is_err());
    assert!(NoiseModel::dropout(-0.1).is_err());
    assert!(NoiseModel::additive(-1.0).is_err());
    assert!(NoiseModel::additive(f64::NAN).is_err());
}

#[test]
fn enumeration_refuses_wide_rows() {
    let d = Dataset::from_dense(&[vec![1.0; 21]], vec![1.0]).unwrap();
    let noise = NoiseModel::dropout(0.5).unwrap();
    let err = exact_penalty(Family::Logistic, &d, &[0.1; 21], &noise).unwrap_err();
    assert!(matches!(err, Error::Capacity { row: 0, support: 21, max: 20 }));
}

#[test]
fn poisson_range_guard() {
    let d = Dataset::from_dense(&[vec![40.0]], vec![1.0]).unwrap();
    let noise = NoiseModel::dropout(0.5).unwrap();
    assert!(matches!(
        quad_penalty(Family::Poisson, &d, &[1.0], &noise),
        Err(Error::Range { .. })
    ));
}

#[test]
fn mc_penalty_is_deterministic_and_brackets_exact() {
    let d = toy();
    let noise = NoiseModel::dropout(0.5).unwrap();
    let a = mc_penalty(Family::Logistic, d.rows(), &BETA, &noise, 20_000, 11).unwrap();
    let b = mc_penalty(Family::Logistic, d.rows(), &BETA, &noise, 20_000, 11).unwrap();
    assert_eq!(a, b);
    let exact = exact_penalty(Family::Logistic, &d, &BETA, &noise).unwrap().value;
    assert!((a.mean - exact).abs() < 4.0 * a.std_error, "{a:?} vs {exact}");
}

#[test]
fn mc_objective_is_nll_plus_penalty() {
    let d = toy();
    let noise = NoiseModel::additive(0.5).unwrap();
    let est = mc_noised_objective_estimate(Family::Logistic, &d, &BETA, &noise, 20_000, 5).unwrap();
    let target = crate::glm::dataset_nll(Family::Logistic, &d, &BETA).unwrap()
        + exact_penalty(Family::Logistic, &d, &BETA, &noise).unwrap().value;
    assert!((est.mean - target).abs() < 4.0 * est.std_error, "{est:?} vs {target}");
}

#[test]
fn noise_preserves_the_mean() {
    let x = row(&[1.0, 0.0, -2.0, 0.5]);
    for noise in [NoiseModel::dropout(0.5).unwrap(), NoiseModel::additive(1.0).unwrap()] {
        let draws = 40_000;
        let mut acc = [0.0; 4];
        for s in 0..draws {
            for (j, v) in draw_noised_seeded(&x, &noise, seed::stream(9, s)).iter() {
                acc[j] += v;
            }
        }
        for (j, a) in acc.iter().enumerate() {
            assert!((a / draws as f64 - x.get(j)).abs() < 0.03, "{noise:?} coord {j}");
        }
    }
}

#[test]
fn dropout_keeps_the_support() {
    let x = row(&[1.0, 0.0, -2.0, 0.5]);
    let noise = NoiseModel::dropout(0.3).unwrap();
    for s in 0..50 {
        let xt = draw_noised_seeded(&x, &noise, s);
        for (j, v) in xt.iter() {
            assert_abs_diff_eq!(v, x.get(j) / 0.7, epsilon = 1e-12);
        }
    }
}

fn central_difference<F: Fn(&[f64]) -> f64>(f: F, beta: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    (0..beta.len())
        .map(|j| {
            let mut up = beta.to_vec();
            let mut dn = beta.to_vec();
            up[j] += h;
            dn[j] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

fn assert_grad_close(analytic: &[f64], numeric: &[f64]) {
    let scale = numeric.iter().map(|v| v.abs()).fold(1e-3, f64::max);
    for (a, n) in analytic.iter().zip(numeric) {
        assert!((a - n).abs() / scale < 1e-5, "analytic {analytic:?} vs numeric {numeric:?}");
    }
}

#[test]
fn exact_penalty_gradients_match_finite_differences() {
    for family in [Family::Linear, Family::Logistic, Family::Poisson] {
        let d = data_for(family);
        for noise in [NoiseModel::dropout(0.4).unwrap(), NoiseModel::additive(0.3).unwrap()] {
            let (_, g) = exact_penalty_value_grad(family, d.rows(), &BETA, &noise).unwrap();
            let num = central_difference(|b| exact_penalty(family, &d, b, &noise).unwrap().value, &BETA);
            assert_grad_close(&g, &num);
        }
    }
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    let d = 5;
    (
        prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), -1.5..1.5f64], d), 1..6),
        prop::collection::vec(-0.8..0.8f64, d),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quad_gradient_matches_finite_differences(
        (rows, beta) in instance(),
        delta in 0.05..0.9f64,
        sigma2 in 0.05..2.0f64,
    ) {
        let labels = vec![1.0; rows.len()];
        let d = Dataset::from_dense(&rows, labels).unwrap();
        for family in Family::ALL {
            for noise in [NoiseModel::dropout(delta).unwrap(), NoiseModel::additive(sigma2).unwrap()] {
                let g = quad_penalty_grad(family, &d, &beta, &noise).unwrap();
                let num = central_difference(|b| quad_penalty(family, &d, b, &noise).unwrap().value, &beta);
                assert_grad_close(&g, &num);
            }
        }
    }

    #[test]
    fn penalties_ignore_labels((rows, beta) in instance(), flips in prop::collection::vec(any::<bool>(), 6)) {
        let a = Dataset::from_dense(&rows, vec![0.0; rows.len()]).unwrap();
        let b = a.with_labels(flips[..rows.len()].iter().map(|&f| f64::from(u8::from(f))).collect()).unwrap();
        let noise = NoiseModel::dropout(0.5).unwrap();
        prop_assert_eq!(quad_penalty(Family::Logistic, &a, &beta, &noise).unwrap(),
            quad_penalty(Family::Logistic, &b, &beta, &noise).unwrap());
        prop_assert_eq!(exact_penalty(Family::Logistic, &a, &beta, &noise).unwrap(),
            exact_penalty(Family::Logistic, &b, &beta, &noise).unwrap());
    }

    #[test]
    fn penalties_are_nonnegative((rows, beta) in instance(), delta in 0.05..0.9f64) {
        let d = Dataset::from_dense(&rows, vec![1.0; rows.len()]).unwrap();
        let noise = NoiseModel::dropout(delta).unwrap();
        for family in Family::ALL {
            prop_assert!(exact_penalty(family, &d, &beta, &noise).unwrap().value >= -1e-12);
            prop_assert!(quad_penalty(family, &d, &beta, &noise).unwrap().value >= 0.0);
        }
    }

    /// Rescaling column `j` by `s` and `β_j` by `1/s` leaves every margin and
    /// every per-coordinate contribution unchanged, hence both penalties.
    #[test]
    fn penalties_are_invariant_to_reciprocal_rescaling(
        (rows, beta) in instance(),
        scales in prop::collection::vec(0.2..5.0f64, 5),
    ) {
        let d = Dataset::from_dense(&rows, vec![1.0; rows.len()]).unwrap();
        let scaled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().zip(&scales).map(|(v, s)| v * s).collect()).collect();
        let ds = Dataset::from_dense(&scaled_rows, vec![1.0; rows.len()]).unwrap();
        let bs: Vec<f64> = beta.iter().zip(&scales).map(|(b, s)| b / s).collect();
        let noise = NoiseModel::dropout(0.3).unwrap();
        let (q, qs) = (
            quad_penalty(Family::Logistic, &d, &beta, &noise).unwrap().value,
            quad_penalty(Family::Logistic, &ds, &bs, &noise).unwrap().value,
        );
        prop_assert!((q - qs).abs() <= 1e-10 * q.abs().max(1.0));
        let (e, es) = (
            exact_penalty(Family::Logistic, &d, &beta, &noise).unwrap().value,
            exact_penalty(Family::Logistic, &ds, &bs, &noise).unwrap().value,
        );
        prop_assert!((e - es).abs() <= 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn linear_surrogate_equals_exact((rows, beta) in instance(), delta in 0.05..0.9f64, sigma2 in 0.0..2.0f64) {
        let d = Dataset::from_dense(&rows, vec![0.5; rows.len()]).unwrap();
        for noise in [NoiseModel::dropout(delta).unwrap(), NoiseModel::additive(sigma2).unwrap()] {
            let e = exact_penalty(Family::Linear, &d, &beta, &noise).unwrap().value;
            let q = quad_penalty(Family::Linear, &d, &beta, &noise).unwrap().value;
            prop_assert!((e - q).abs() <= 1e-10 * e.abs().max(1.0), "{} vs {}", e, q);
        }
    }
}
