use dropreg::glm::sigmoid;
use dropreg::noising::quad_penalty;
use dropreg::semisup::{fit_semisup, select_alpha, semisup_quad_penalty, semisup_quad_penalty_value_grad};
use dropreg::{BatchConfig, Dataset, DiscountAlpha, Family, NoiseModel, UnlabeledSet};

fn alpha(a: f64) -> DiscountAlpha {
    DiscountAlpha::new(a).unwrap()
}

/// Hand-computed logistic dropout surrogate for one row.
fn row_penalty(x: &[f64], beta: &[f64], delta: f64) -> f64 {
    let z: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
    let p = sigmoid(z);
    let var: f64 = x.iter().zip(beta).map(|(a, b)| a * a * b * b).sum::<f64>() * delta / (1.0 - delta);
    0.5 * p * (1.0 - p) * var
}

#[test]
fn two_by_two_arithmetic() {
    let lab = [vec![1.0, 2.0], vec![-0.5, 1.0]];
    let unl = [vec![0.0, 3.0], vec![2.0, -1.0]];
    let beta = [0.4, -0.3];
    let (delta, a) = (0.4, 0.25);
    let labeled = Dataset::from_dense(&lab, vec![1.0, 0.0]).unwrap();
    let unlabeled = UnlabeledSet::from_dataset(&Dataset::from_dense(&unl, vec![0.0, 0.0]).unwrap());
    let noise = NoiseModel::dropout(delta).unwrap();
    let got = semisup_quad_penalty(Family::Logistic, &labeled, &unlabeled, &beta, &noise, alpha(a)).unwrap();

    let rl: f64 = lab.iter().map(|x| row_penalty(x, &beta, delta)).sum();
    let ru: f64 = unl.iter().map(|x| row_penalty(x, &beta, delta)).sum();
    let want = 2.0 / (2.0 + a * 2.0) * (rl + a * ru);
    assert!((got.value - want).abs() < 1e-14, "{} vs {want}", got.value);
}

#[test]
fn vanishing_discount_recovers_the_labeled_penalty() {
    let labeled = Dataset::from_dense(&[vec![1.0, 0.5, -1.0], vec![0.2, -1.0, 0.7]], vec![1.0, 0.0]).unwrap();
    let unl: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 7) as f64 - 3.0, 1.0, (i % 3) as f64]).collect();
    let unlabeled = UnlabeledSet::from_dataset(&Dataset::from_dense(&unl, vec![0.0; 50]).unwrap());
    let beta = [0.5, -0.2, 0.3];
    let noise = NoiseModel::dropout(0.5).unwrap();
    let sup = quad_penalty(Family::Logistic, &labeled, &beta, &noise).unwrap().value;
    let tiny = semisup_quad_penalty(Family::Logistic, &labeled, &unlabeled, &beta, &noise, alpha(1e-7)).unwrap();
    assert!((tiny.value - sup).abs() < 1e-4, "{} vs {sup}", tiny.value);
}

#[test]
fn penalty_is_continuous_in_the_discount() {
    let labeled = Dataset::from_dense(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]], vec![1.0, 0.0, 1.0]).unwrap();
    let unlabeled =
        UnlabeledSet::from_dataset(&Dataset::from_dense(&[vec![2.0, 0.0], vec![0.0, -2.0]], vec![0.0, 0.0]).unwrap());
    let beta = [0.7, -0.4];
    let noise = NoiseModel::additive(0.3).unwrap();
    let at = |a: f64| {
        semisup_quad_penalty_value_grad(Family::Logistic, &labeled, &unlabeled, &beta, &noise, alpha(a)).unwrap()
    };
    for a in [0.1, 0.4, 0.9] {
        let (v, g) = at(a);
        let (v2, g2) = at(a + 1e-9);
        assert!((v - v2).abs() < 1e-8);
        assert!(g.iter().zip(&g2).all(|(x, y)| (x - y).abs() < 1e-8));
    }
}

#[test]
fn semisup_fit_is_deterministic_and_converges() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
    let labels: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[0] + 0.3 * r[1] > 0.0))).collect();
    let labeled = Dataset::from_dense(&rows, labels).unwrap();
    let unl: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.13).cos(), (i as f64 * 0.53).sin()]).collect();
    let unlabeled = UnlabeledSet::from_dataset(&Dataset::from_dense(&unl, vec![0.0; 40]).unwrap());
    let noise = NoiseModel::dropout(0.5).unwrap();
    let a = fit_semisup(Family::Logistic, &labeled, &unlabeled, &noise, alpha(0.4), &BatchConfig::default()).unwrap();
    let b = fit_semisup(Family::Logistic, &labeled, &unlabeled, &noise, alpha(0.4), &BatchConfig::default()).unwrap();
    assert!(a.converged);
    assert_eq!(a, b);
}

#[test]
fn alpha_selection_singleton_and_determinism() {
    let rows: Vec<Vec<f64>> = (0..24).map(|i| vec![(i as f64 * 0.7).sin(), 1.0]).collect();
    let labels: Vec<f64> = (0..24).map(|i| f64::from(u8::from(i % 3 != 0))).collect();
    let labeled = Dataset::from_dense(&rows, labels).unwrap();
    let unlabeled = UnlabeledSet::from_dataset(&labeled);
    let noise = NoiseModel::dropout(0.5).unwrap();
    let config = BatchConfig::default();

    let single = select_alpha(Family::Logistic, &labeled, &unlabeled, &noise, &[0.3, 0.3], 4, 1, &config).unwrap();
    assert_eq!(single.alpha.get(), 0.3);
    assert!(single.table.is_empty());

    let grid = [0.9, 0.1, 0.5];
    let a = select_alpha(Family::Logistic, &labeled, &unlabeled, &noise, &grid, 4, 7, &config).unwrap();
    let b = select_alpha(Family::Logistic, &labeled, &unlabeled, &noise, &grid, 4, 7, &config).unwrap();
    assert_eq!(a, b);
    let alphas: Vec<f64> = a.table.iter().map(|r| r.alpha).collect();
    assert_eq!(alphas, vec![0.1, 0.5, 0.9]);
    assert!(a.table.iter().all(|r| r.fold_scores.len() == 4));
    assert!(select_alpha(Family::Logistic, &labeled, &unlabeled, &noise, &[], 4, 7, &config).is_err());
}
