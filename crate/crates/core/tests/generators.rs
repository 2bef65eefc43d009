use dropreg::simgen::{generate_rare_feature_dataset, generate_sparse_logistic, RareFeatureRows, SparseLogisticConfig};
use dropreg::{Dataset, SimConfig};

#[test]
fn seeded_dataset_survives_a_write_read_round_trip() {
    let sim = generate_rare_feature_dataset(&SimConfig { n: 60, seed: 17, ..Default::default() }).unwrap();
    let mut first = Vec::new();
    sim.data.write_to(&mut first).unwrap();
    let back = Dataset::read_from(first.as_slice()).unwrap();
    assert_eq!(back, sim.data);
    let mut second = Vec::new();
    back.write_to(&mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn round_trip_through_a_file() {
    let (data, _) = generate_sparse_logistic(&SparseLogisticConfig::default(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.txt");
    data.write_file(&path).unwrap();
    assert_eq!(Dataset::read_file(&path).unwrap(), data);
}

#[test]
fn rare_feature_marginals_have_unit_second_moment() {
    let config = SimConfig { n: 50_000, seed: 5, ..Default::default() };
    let signal = config.signal_dim();
    let mut sums = vec![0.0; signal];
    let mut margin_sum = 0.0;
    let mut signal_rows = 0usize;
    let mut rows = RareFeatureRows::new(&config).unwrap();
    let beta = rows.true_beta().to_vec();
    for (x, _, active) in rows.by_ref() {
        for (j, v) in x.iter().take_while(|&(j, _)| j < signal) {
            sums[j] += v * v;
        }
        if active {
            margin_sum += x.dot(&beta).abs();
            signal_rows += 1;
        }
    }
    for (j, s) in sums.iter().enumerate() {
        let m = s / config.n as f64;
        assert!((0.85..=1.15).contains(&m), "feature {j}: {m}");
    }
    let pooled = sums.iter().sum::<f64>() / (signal * config.n) as f64;
    assert!((0.97..=1.03).contains(&pooled), "{pooled}");
    let mean_margin = margin_sum / signal_rows as f64;
    assert!((mean_margin - 2.0).abs() < 0.05, "{mean_margin}");
}

#[test]
fn sparse_logistic_density_and_labels() {
    let config = SparseLogisticConfig { dim: 40, n: 2000, density: 0.25, weight_sd: 0.5 };
    let (data, beta) = generate_sparse_logistic(&config, 9).unwrap();
    assert_eq!((data.len(), data.dim(), beta.len()), (2000, 40, 40));
    let nnz: usize = data.rows().iter().map(|r| r.nnz()).sum();
    let density = nnz as f64 / (2000.0 * 40.0);
    assert!((density - 0.25).abs() < 0.01, "{density}");
    assert!(data.labels().iter().all(|&y| y == 0.0 || y == 1.0));
    assert_eq!(generate_sparse_logistic(&config, 9).unwrap(), (data, beta));
}
