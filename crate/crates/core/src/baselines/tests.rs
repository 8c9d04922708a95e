use proptest::prelude::*;
use rand::Rng as _;

use super::*;
use crate::seed;
use crate::testutil::separable;

fn dense(rows: &[Vec<f64>]) -> Vec<SparseRow> {
    rows.iter().map(|r| r.iter().copied().enumerate().collect()).collect()
}

#[test]
fn zero_model_predicts_one_half() {
    let m = LogisticModel::zeros(3);
    assert_eq!(predict_logistic(&m, &[(0, 5.0), (2, -1.0)]).unwrap(), 0.5);
    assert!(predict_logistic(&m, &[(3, 1.0)]).is_err());
}

#[test]
fn single_sample_gradient_step() {
    let x = dense(&[vec![1.0]]);
    let mut m = LogisticModel::zeros(1);
    let obj = logistic_objective(&m, &x, &[1], f64::INFINITY).unwrap();
    assert_eq!(obj.grad_w, vec![-0.5]);
    m.weights[0] -= obj.grad_w[0];
    assert_eq!(m.weights[0], 0.5);
    assert!((obj.value - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn penalty_adds_scaled_squared_norm() {
    let x = dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    let mut m = LogisticModel::zeros(2);
    m.weights = vec![1.0, -2.0];
    m.intercept = 3.0;
    let free = logistic_objective(&m, &x, &[1, 0], f64::INFINITY).unwrap();
    let pen = logistic_objective(&m, &x, &[1, 0], 0.5).unwrap();
    // 1 / (2 · 0.5 · 2) · 5
    assert!((pen.value - free.value - 2.5).abs() < 1e-12);
    assert_eq!(pen.grad_b, free.grad_b);
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let mut rng = seed::rng(3);
    let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let y: Vec<u8> = (0..20).map(|_| rng.gen_range(0..2)).collect();
    let x = dense(&rows);
    let mut m = LogisticModel::zeros(3);
    m.weights = vec![0.3, -0.7, 1.1];
    m.intercept = 0.2;
    let obj = logistic_objective(&m, &x, &y, 0.7).unwrap();
    let h = 1e-6;
    for j in 0..3 {
        let mut p = m.clone();
        p.weights[j] += h;
        let mut q = m.clone();
        q.weights[j] -= h;
        let fd = (logistic_objective(&p, &x, &y, 0.7).unwrap().value - logistic_objective(&q, &x, &y, 0.7).unwrap().value) / (2.0 * h);
        assert!((fd - obj.grad_w[j]).abs() < 1e-8);
    }
}

#[test]
fn separable_data_is_learned() {
    let (train, valid) = separable(2000, 11);
    let rows = |d: &crate::data::EncodedDataset| (0..d.len()).map(|i| d.one_hot_entries(i)).collect::<Vec<_>>();
    let width = train.layout.one_hot_width();
    let m = fit_logistic(&rows(&train), &train.labels, width, &LogisticConfig::default()).unwrap();
    let xv = rows(&valid);
    let correct = xv
        .iter()
        .zip(&valid.labels)
        .filter(|(r, &l)| u8::from(predict_logistic(&m, r).unwrap() > 0.5) == l)
        .count();
    assert!(correct as f64 / valid.len() as f64 >= 0.95, "{correct}/{}", valid.len());
    assert!(m.objective_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn stronger_penalty_shrinks_weights() {
    let mut rng = seed::rng(5);
    let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] - r[1] + 0.5 * rng.gen::<f64>() > 0.0)).collect();
    let x = dense(&rows);
    let norm = |c: f64| {
        let cfg = LogisticConfig { c, max_iter: 2000, tol: 1e-9 };
        let m = fit_logistic(&x, &y, 4, &cfg).unwrap();
        m.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    };
    let (strong, weak) = (norm(0.001), norm(1.0));
    assert!(strong <= weak, "{strong} > {weak}");
}

#[test]
fn logistic_rejects_bad_input() {
    let cfg = LogisticConfig::default();
    assert!(fit_logistic(&[], &[], 2, &cfg).is_err());
    assert!(fit_logistic(&dense(&[vec![1.0]]), &[2], 1, &cfg).is_err());
    assert!(fit_logistic(&dense(&[vec![1.0]]), &[1], 1, &LogisticConfig { c: 0.0, ..cfg.clone() }).is_err());
    assert!(fit_logistic(&[vec![(4, 1.0)]], &[1], 2, &cfg).is_err());
}

proptest! {
    #[test]
    fn accepted_steps_never_increase_objective(seed_value in 0u64..200, c in 0.01f64..10.0) {
        let mut rng = seed::rng(seed_value);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let y: Vec<u8> = (0..30).map(|_| rng.gen_range(0..2)).collect();
        let m = fit_logistic(&dense(&rows), &y, 3, &LogisticConfig { c, max_iter: 50, tol: 1e-10 }).unwrap();
        prop_assert!(m.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn positive_weight_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let mut m = LogisticModel::zeros(1);
        m.weights[0] = 0.8;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(predict_logistic(&m, &[(0, lo)]).unwrap() <= predict_logistic(&m, &[(0, hi)]).unwrap());
    }
}

#[test]
fn mnb_hand_computed_posterior() {
    let m = MnbModel::from_counts([vec![0.0, 2.0], vec![2.0, 0.0]], [0.5, 0.5], 1.0).unwrap();
    let p = predict_mnb(&m, &[(0, 1.0)]).unwrap();
    assert!((p[1] - 0.75).abs() < 1e-15);
    assert!(m.log_likelihood.iter().flatten().all(|l| l.exp() > 0.0));
}

#[test]
fn mnb_uninformative_row_returns_prior() {
    let m = MnbModel::from_counts([vec![1.0, 2.0], vec![5.0, 0.0]], [0.3, 0.7], 0.05).unwrap();
    let p = predict_mnb(&m, &[]).unwrap();
    assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);
    let p = predict_mnb(&m, &[(1, 0.0)]).unwrap();
    assert!((p[1] - 0.7).abs() < 1e-12);
}

#[test]
fn mnb_fit_counts_and_priors() {
    let x = vec![vec![(0, 1.0), (2, 1.0)], vec![(1, 1.0), (2, 1.0)], vec![(1, 1.0)]];
    let m = fit_mnb(&x, &[1, 0, 0], 3, 0.05).unwrap();
    assert_eq!(m.feature_counts, [vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 1.0]]);
    assert!((m.log_prior[1].exp() - 1.0 / 3.0).abs() < 1e-15);
    assert!(fit_mnb(&x, &[1, 0, 0], 3, 0.0).is_err());
    assert!(fit_mnb(&x, &[0, 0, 0], 3, 1.0).is_err());
    assert!(predict_mnb(&m, &[(7, 1.0)]).is_err());
}

proptest! {
    #[test]
    fn mnb_posterior_normalized_and_scale_consistent(
        counts in prop::collection::vec(0u32..20, 8),
        row in prop::collection::vec(0u32..4, 4),
        k in 1u32..5,
    ) {
        let fc = [counts[..4].iter().map(|&c| f64::from(c)).collect(), counts[4..].iter().map(|&c| f64::from(c)).collect()];
        let m = MnbModel::from_counts(fc, [0.5, 0.5], 0.05).unwrap();
        let r: Vec<(usize, f64)> = row.iter().enumerate().map(|(j, &v)| (j, f64::from(v))).collect();
        let rk: Vec<(usize, f64)> = r.iter().map(|&(j, v)| (j, v * f64::from(k))).collect();
        let p = predict_mnb(&m, &r).unwrap();
        let pk = predict_mnb(&m, &rk).unwrap();
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        // log-odds scale by k under equal priors
        let lo = (p[1] / p[0]).ln();
        let lok = (pk[1] / pk[0]).ln();
        if lo.is_finite() && lok.is_finite() {
            prop_assert!((lok - f64::from(k) * lo).abs() < 1e-9 * (1.0 + lok.abs()));
        }
        if (p[1] - 0.5).abs() > 1e-9 {
            prop_assert_eq!(p[1] > 0.5, pk[1] > 0.5);
        }
    }
}
