use proptest::prelude::*;

use super::*;
use crate::data::{EncodedDataset, FeatureLayout};
use crate::diffcore::{finite_diff_check, Graph, Tensor, Var};
use crate::seed;
use crate::testutil;

fn tiny_layout() -> FeatureLayout {
    FeatureLayout {
        categorical: vec![("c".into(), 3)],
        continuous: vec!["x".into(), "y".into()],
        n_bins: 10,
    }
}

fn tiny_data(n: usize) -> EncodedDataset {
    let mut d = EncodedDataset {
        layout: tiny_layout(),
        categories: Vec::new(),
        continuous: Vec::new(),
        bins: Vec::new(),
        labels: Vec::new(),
    };
    for i in 0..n {
        let x = (i as f64 * 0.37).sin();
        let y = (i as f64 * 0.91).cos();
        d.categories.push((i % 3) as u32);
        d.continuous.extend([x, y]);
        d.bins.extend([0, 0]);
        d.labels.push(u8::from(x + y > 0.0));
    }
    d
}

fn tiny_model(hidden: usize, seed_value: u64) -> BnnModel {
    let cfg = BnnConfig {
        hidden,
        seed: seed_value,
        init_rho: -3.0,
        ..Default::default()
    };
    build_bnn(&tiny_layout(), cfg).unwrap()
}

fn loss_value(model: &BnnModel, noise: &Noise, data: &EncodedDataset, rows: &[usize], kl: f64) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = model.parameters().into_iter().map(|p| g.param(p)).collect();
    let l = model.elbo_loss(&mut g, &vars, noise, data, rows, kl).unwrap();
    g.value(l).item()
}

#[test]
fn architecture() {
    let m = tiny_model(16, 0);
    assert_eq!(m.input_width(), 5);
    assert_eq!(m.layers[0].w.shape(), &[5, 16]);
    assert_eq!(m.layers[1].w.shape(), &[16, 2]);
    let d = build_bnn(&tiny_layout(), BnnConfig::default()).unwrap();
    assert_eq!(d.layers[0].w.shape(), &[5, 1024]);
}

#[test]
fn config_errors() {
    for cfg in [
        BnnConfig { samples: 0, ..Default::default() },
        BnnConfig { threshold: 1.0, ..Default::default() },
        BnnConfig { prior_sigma: 0.0, ..Default::default() },
        BnnConfig { hidden: 0, ..Default::default() },
    ] {
        assert!(build_bnn(&tiny_layout(), cfg).is_err());
    }
}

#[test]
fn zero_kl_weight_is_plain_cross_entropy() {
    let m = tiny_model(8, 1);
    let d = tiny_data(12);
    let rows: Vec<usize> = (0..12).collect();
    let noise = m.draw_noise(&mut seed::rng(5));
    let loss = loss_value(&m, &noise, &d, &rows, 0.0);

    let weights = m.weights_with_noise(&noise).unwrap();
    let lp = m.forward_fixed(&weights, &d, &rows);
    let ce = -rows.iter().map(|&r| lp[r][d.labels[r] as usize]).sum::<f64>() / rows.len() as f64;
    assert!((loss - ce).abs() < 1e-12, "{loss} vs {ce}");
}

#[test]
fn kl_term_adds_weighted_divergence() {
    let m = tiny_model(8, 2);
    let d = tiny_data(6);
    let rows: Vec<usize> = (0..6).collect();
    let noise = m.draw_noise(&mut seed::rng(9));
    let base = loss_value(&m, &noise, &d, &rows, 0.0);
    let with = loss_value(&m, &noise, &d, &rows, 0.25);
    let kl: f64 = m
        .layers
        .iter()
        .flat_map(|l| [&l.w, &l.b])
        .map(|q| kl_gaussian(q, 1.0).unwrap())
        .sum();
    assert!((with - base - 0.25 * kl).abs() < 1e-9 * kl.max(1.0));
}

#[test]
fn tight_posterior_loss_approaches_deterministic_nll() {
    let mut m = tiny_model(8, 3);
    m.set_rho(-10.0);
    let d = tiny_data(10);
    let rows: Vec<usize> = (0..10).collect();
    let noise = m.draw_noise(&mut seed::rng(1));
    let sampled = loss_value(&m, &noise, &d, &rows, 0.0);
    let mean = loss_value(&m, &m.zero_noise(), &d, &rows, 0.0);
    assert!((sampled - mean).abs() < 1e-3, "{sampled} vs {mean}");
}

#[test]
fn elbo_gradient_matches_finite_differences() {
    let m = tiny_model(6, 4);
    let d = tiny_data(10);
    let rows: Vec<usize> = (0..10).collect();
    let noise = m.draw_noise(&mut seed::rng(2));
    let err = finite_diff_check(&m.parameters(), 1e-5, |g, vars| m.elbo_loss(g, vars, &noise, &d, &rows, 0.1)).unwrap();
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn empty_batch_and_negative_weight_fail() {
    let m = tiny_model(4, 0);
    let d = tiny_data(4);
    let mut g = Graph::new();
    let vars: Vec<Var> = m.parameters().into_iter().map(|p| g.param(p)).collect();
    let noise = m.zero_noise();
    assert!(m.elbo_loss(&mut g, &vars, &noise, &d, &[], 0.0).is_err());
    assert!(m.elbo_loss(&mut g, &vars, &noise, &d, &[0], -1.0).is_err());
}

#[test]
fn empty_training_set_fails() {
    let mut m = tiny_model(4, 0);
    assert!(m.train(&tiny_data(0), None).is_err());
}

#[test]
fn training_is_deterministic() {
    let d = tiny_data(40);
    let cfg = BnnConfig {
        hidden: 8,
        epochs: 3,
        batch_size: 8,
        samples: 5,
        seed: 11,
        ..Default::default()
    };
    let mut a = build_bnn(&tiny_layout(), cfg.clone()).unwrap();
    let mut b = build_bnn(&tiny_layout(), cfg).unwrap();
    assert_eq!(a.train(&d, Some(&d)).unwrap(), b.train(&d, Some(&d)).unwrap());
    assert_eq!(a, b);
}

#[test]
fn predictive_rows_are_distributions() {
    let m = tiny_model(8, 5);
    let d = tiny_data(7);
    let rows: Vec<usize> = (0..7).collect();
    for pp in posterior_predictive_batch(&m, &d, &rows, 20).unwrap() {
        assert_eq!(pp.samples(), 20);
        for p in pp.probs() {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
        }
        for med in pp.medians() {
            assert!((0.0..=1.0).contains(&med));
        }
    }
}

#[test]
fn predictive_is_independent_of_batching() {
    let m = tiny_model(8, 6);
    let d = tiny_data(9);
    let all: Vec<usize> = (0..9).collect();
    let batch = posterior_predictive_batch(&m, &d, &all, 13).unwrap();
    for r in [0, 4, 8] {
        assert_eq!(posterior_predictive(&m, &d, r, 13).unwrap(), batch[r]);
    }
    assert_eq!(posterior_predictive_batch(&m, &d, &all, 13).unwrap(), batch);
}

#[test]
fn predictive_rejects_bad_inputs() {
    let m = tiny_model(4, 0);
    let d = tiny_data(3);
    assert!(posterior_predictive(&m, &d, 0, 0).is_err());
    assert!(posterior_predictive(&m, &d, 3, 1).is_err());
    let mut other = tiny_data(3);
    other.layout.continuous.pop();
    assert!(posterior_predictive(&m, &other, 0, 1).is_err());
}

fn max_deviation_from_mean(rho: f64) -> f64 {
    let mut m = tiny_model(32, 7);
    m.set_rho(rho);
    let d = tiny_data(25);
    let rows: Vec<usize> = (0..25).collect();
    let mean = mean_forward(&m, &d, &rows).unwrap();
    let pps = posterior_predictive_batch(&m, &d, &rows, 30).unwrap();
    let mut worst: f64 = 0.0;
    for (pp, lp) in pps.iter().zip(&mean) {
        for s in pp.probs() {
            worst = worst.max((s[0] - lp[0].exp()).abs()).max((s[1] - lp[1].exp()).abs());
        }
    }
    worst
}

#[test]
fn vanishing_sigma_reproduces_mean_forward() {
    assert!(max_deviation_from_mean(-30.0) <= 1e-9);
    // softplus(-20) ≈ 2.1e-9 still moves probabilities at first order
    let d = max_deviation_from_mean(-20.0);
    assert!(d > 0.0 && d < 1e-6, "{d}");
}

#[test]
fn median_and_std_of_known_samples() {
    let pp = PosteriorPredictive {
        log_probs: [0.2, 0.4, 0.9, 0.5]
            .iter()
            .map(|&p: &f64| [(1.0 - p).ln(), p.ln()])
            .collect(),
    };
    let m = pp.medians();
    assert!((m[1] - 0.45).abs() < 1e-12);
    assert!((m[0] - 0.55).abs() < 1e-12);
    // sample std of {0.2, 0.4, 0.9, 0.5}: mean 0.5, squares .09+.01+.16+0 = .26
    let s = (0.26f64 / 3.0).sqrt();
    assert!((pp.stds()[1] - s).abs() < 1e-12);
    assert!((pp.spread() - s).abs() < 1e-12);
}

fn point(p1: f64) -> PosteriorPredictive {
    PosteriorPredictive {
        log_probs: vec![[(1.0 - p1).ln(), p1.ln()]],
    }
}

#[test]
fn decision_examples() {
    let d = decide(&point(0.9), 0.5);
    assert_eq!(d.outcome, Outcome::Class(1));
    assert!((d.probability - 0.9).abs() < 1e-12);
    assert_eq!(decide(&point(0.52), 0.6).outcome, Outcome::Undecided);
    assert_eq!(decide(&point(0.3), 0.5).outcome, Outcome::Class(0));
    assert_eq!(decide(&point(0.5), 0.4).outcome, Outcome::Class(0));
    assert_eq!(Outcome::Undecided.to_string(), "undecided");
    assert_eq!(Outcome::Class(1).to_string(), "1");
}

#[test]
fn point_mass_histogram() {
    let pp = PosteriorPredictive {
        log_probs: vec![[f64::NEG_INFINITY.max(-800.0), 0.0]; 12],
    };
    let h = histogram_report(&pp, 30, 0.5).unwrap();
    assert_eq!(h[1].counts, vec![12]);
    assert_eq!(h[1].edges, vec![0.0, 0.0]);
    assert!(h[1].decided);
    assert!(!h[0].decided);
    assert_eq!(h[0].counts.iter().sum::<usize>(), 12);
    assert!(histogram_report(&pp, 0, 0.5).is_err());
}

proptest! {
    #[test]
    fn histogram_conserves_samples(ps in prop::collection::vec(0.001f64..0.999, 1..60), bins in 1usize..40) {
        let pp = PosteriorPredictive { log_probs: ps.iter().map(|&p| [(1.0 - p).ln(), p.ln()]).collect() };
        for h in histogram_report(&pp, bins, 0.5).unwrap() {
            prop_assert_eq!(h.counts.iter().sum::<usize>(), ps.len());
            prop_assert_eq!(h.edges.len(), h.counts.len() + 1);
            prop_assert!(h.edges.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn abstention_is_monotone_in_threshold(ps in prop::collection::vec(0.0f64..1.0, 1..30), t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        let pp = PosteriorPredictive { log_probs: ps.iter().map(|&p| [(1.0 - p).max(1e-300).ln(), p.max(1e-300).ln()]).collect() };
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = decide(&pp, lo);
        let b = decide(&pp, hi);
        if a.outcome == Outcome::Undecided {
            prop_assert_eq!(b.outcome, Outcome::Undecided);
        }
        if let Outcome::Class(k) = b.outcome {
            prop_assert_eq!(a.outcome, Outcome::Class(k));
        }
        if let Outcome::Class(k) = a.outcome {
            let m = pp.medians();
            prop_assert!(m[k as usize] > lo);
            prop_assert!(m[k as usize] >= m[1 - k as usize]);
        }
    }
}

#[test]
fn learns_separable_synthetic_data() {
    let (train, valid) = testutil::separable(2000, 21);
    let mut m = build_bnn(
        &train.layout,
        BnnConfig {
            hidden: 64,
            epochs: 10,
            samples: 30,
            seed: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let log = m.train(&train, None).unwrap();
    assert!(log[9].train_loss < log[0].train_loss);
    let acc = decided_accuracy(&m, &valid, 0.5).unwrap();
    assert!(acc >= 0.9, "decided accuracy {acc}");
}

#[test]
fn sampled_weights_are_stable_per_index() {
    let m = tiny_model(4, 8);
    assert_eq!(m.sampled_weights(3).unwrap(), m.sampled_weights(3).unwrap());
    assert_ne!(m.sampled_weights(3).unwrap(), m.sampled_weights(4).unwrap());
    let _: Vec<(Tensor, Tensor)> = m.sampled_weights(0).unwrap();
}



#[test]
fn drifted_rows_get_wider_predictive_spread() {
    use crate::data::synthetic::{generate_synthetic, is_drifted, SyntheticConfig};
    use crate::data::Encoder;

    let ds = testutil::normalize_only(&generate_synthetic(&SyntheticConfig::new(3000, 0.5837, true), 5).unwrap());
    let (drifted, base): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| is_drifted(&ds, i));
    let train = ds.with_rows(base.iter().filter(|&&i| i % 4 != 0).map(|&i| ds.rows[i].clone()).collect());
    let enc = Encoder::fit(&train).unwrap();
    let mut m = build_bnn(&enc.layout(), BnnConfig { hidden: 128, epochs: 10, seed: 1, ..Default::default() }).unwrap();
    m.train(&enc.transform(&train).unwrap(), None).unwrap();

    let all = enc.transform(&ds).unwrap();
    let held: Vec<usize> = base.into_iter().filter(|i| i % 4 == 0).collect();
    let spread = |rows: &[usize]| {
        let pps = posterior_predictive_batch(&m, &all, rows, 50).unwrap();
        pps.iter().map(|p| p.spread()).sum::<f64>() / pps.len() as f64
    };
    assert!(spread(&drifted) > spread(&held));
}
