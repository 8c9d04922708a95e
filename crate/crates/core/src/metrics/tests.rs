use proptest::prelude::*;
use rand::Rng as _;

use super::*;
use crate::seed;

/// (name, tp, tn, fp, fn, [accuracy, precision, recall, f1, kappa])
const PUBLISHED: [(&str, u64, u64, u64, u64, [f64; 5]); 7] = [
    ("bnn", 466683, 196790, 222578, 123952, [0.657, 0.677, 0.790, 0.729, 0.269]),
    ("dnn", 350480, 310798, 108570, 240155, [0.655, 0.763, 0.593, 0.668, 0.320]),
    ("rf", 483294, 194932, 224436, 107341, [0.672, 0.683, 0.818, 0.744, 0.295]),
    ("xgb", 446086, 244870, 174498, 144549, [0.684, 0.719, 0.755, 0.737, 0.343]),
    ("dt", 421342, 249252, 170116, 169293, [0.664, 0.712, 0.713, 0.713, 0.308]),
    ("lr", 431324, 223462, 195906, 159311, [0.648, 0.688, 0.730, 0.708, 0.266]),
    ("mnb", 320401, 222867, 196501, 270234, [0.538, 0.620, 0.542, 0.579, 0.072]),
];

#[test]
fn published_counts_reproduce_derived_scores() {
    for (name, tp, tn, fp, fn_, want) in PUBLISHED {
        let cm = ConfusionMatrix::new(tp, tn, fp, fn_);
        let b = basic_metrics(&cm);
        let got = [b.accuracy, b.precision, b.recall, b.f1, cohen_kappa(&cm)].map(Option::unwrap);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 0.001, "{name}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn published_bnn_classwise_rows() {
    let cm = ConfusionMatrix::new(466683, 196790, 222578, 123952);
    let r = classwise_report(&cm);
    assert_eq!(r.classes[0].support, 419368);
    assert_eq!(r.classes[1].support, 590635);
    assert_eq!(r.weighted_avg.support, 1010003);
    assert_eq!(cm.total(), 1010003);
    let c0 = &r.classes[0];
    for (g, w) in [(c0.precision, 0.61), (c0.recall, 0.47), (c0.f1, 0.53), (r.weighted_avg.precision, 0.65)] {
        assert!((g.unwrap() - w).abs() <= 0.005, "{g:?} vs {w}");
    }
}

#[test]
fn confusion_examples() {
    let cm = confusion(&[0, 1, 1], &[Some(0), Some(1), Some(1)]).unwrap();
    assert_eq!(cm, ConfusionMatrix::new(2, 1, 0, 0));
    let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
    let cm = confusion(&y, &[Some(1); 10]).unwrap();
    assert_eq!((cm.tp, cm.fp, cm.tn, cm.fn_), (5, 5, 0, 0));
    assert_eq!(cohen_kappa(&cm), Some(0.0));
    let b = basic_metrics(&cm);
    assert_eq!(b.recall, Some(1.0));
    assert_eq!(b.precision, Some(0.5));

    let cm = confusion(&[0, 1, 1, 0], &[None, Some(1), None, Some(1)]).unwrap();
    assert_eq!(cm.abstained, 2);
    assert_eq!(cm.total(), 2);
    assert_eq!(cm.abstention_rate(), Some(0.5));

    assert!(confusion(&[0, 1], &[Some(0)]).is_err());
    assert!(confusion(&[2], &[Some(0)]).is_err());
    assert!(confusion(&[0], &[Some(3)]).is_err());
}

#[test]
fn perfect_classifier() {
    let cm = ConfusionMatrix::new(5, 5, 0, 0);
    let b = basic_metrics(&cm);
    assert_eq!([b.accuracy, b.precision, b.recall, b.f1], [Some(1.0); 4]);
    assert_eq!(cohen_kappa(&cm), Some(1.0));
    let r = classwise_report(&cm);
    for row in [&r.macro_avg, &r.weighted_avg] {
        assert_eq!([row.precision, row.recall, row.f1], [Some(1.0); 3]);
    }
}

#[test]
fn undefined_denominators_are_flagged() {
    // never predicts positive and no positives exist
    let cm = ConfusionMatrix::new(0, 4, 0, 0);
    let b = basic_metrics(&cm);
    assert_eq!(b.accuracy, Some(1.0));
    assert_eq!(b.precision, None);
    assert_eq!(b.recall, None);
    assert_eq!(b.f1, None);
    assert_eq!(cohen_kappa(&cm), None);
    assert_eq!(cohen_kappa(&ConfusionMatrix::default()), None);
    assert_eq!(basic_metrics(&ConfusionMatrix::default()).accuracy, None);
    assert_eq!(classwise_report(&cm).macro_avg.precision, None);
    let json = serde_json::to_string(&MetricsReport::from_confusion("m", cm, None)).unwrap();
    assert!(json.contains("\"precision\":null"));
}

#[test]
fn independent_predictions_have_zero_kappa() {
    // predicted-positive rate 0.3 in both true classes
    for (pos, neg) in [(10u64, 20u64), (100, 50), (40, 40)] {
        let cm = ConfusionMatrix::new(3 * pos, 7 * neg, 3 * neg, 7 * pos);
        assert!(cohen_kappa(&cm).unwrap().abs() < 1e-12);
    }
}

#[test]
fn auc_examples() {
    assert_eq!(roc_auc(&[1, 1, 0], &[0.9, 0.8, 0.7]).unwrap(), 1.0);
    assert_eq!(roc_auc(&[1, 0, 1, 0], &[0.4; 4]).unwrap(), 0.5);
    assert_eq!(roc_auc(&[1, 1, 0], &[0.1, 0.2, 0.7]).unwrap(), 0.0);
    assert!(roc_auc(&[1, 1], &[0.1, 0.2]).is_err());
    assert!(roc_auc(&[1, 0], &[0.1]).is_err());
    assert!(roc_auc(&[1, 0], &[f64::NAN, 0.1]).is_err());
    let curve = roc_curve(&[1, 0, 1], &[0.9, 0.5, 0.5]).unwrap();
    assert_eq!(curve, vec![(0.0, 0.0), (0.0, 0.5), (1.0, 1.0)]);
}

fn pairwise_auc(y: &[u8], s: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

proptest! {
    #[test]
    fn auc_equals_pairwise_probability(seed_value in 0u64..10_000, n in 2usize..300, levels in 2u32..50) {
        let mut rng = seed::rng(seed_value);
        let mut y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        y[0] = 0;
        y[1] = 1;
        // coarse scores so ties occur
        let s: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..levels)) / f64::from(levels)).collect();
        let a = roc_auc(&y, &s).unwrap();
        prop_assert!((a - pairwise_auc(&y, &s)).abs() < 1e-12);
        let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        prop_assert!((roc_auc(&y, &t).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn confusion_invariants(tp in 0u64..1000, tn in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000) {
        let cm = ConfusionMatrix::new(tp, tn, fp, fn_);
        let r = classwise_report(&cm);
        prop_assert_eq!(basic_metrics(&cm).recall, r.classes[1].recall);
        prop_assert_eq!(basic_metrics(&cm).accuracy, basic_metrics(&cm.swapped()).accuracy);
        if let Some(k) = cohen_kappa(&cm) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k));
        }
        prop_assert_eq!(r.weighted_avg.support, cm.total());
    }
}

#[test]
fn evaluate_builds_full_report() {
    let y = [1, 0, 1, 0, 1];
    let pred = [Some(1), Some(0), None, Some(1), Some(1)];
    let scores = [0.9, 0.1, 0.5, 0.6, 0.8];
    let r = evaluate("toy", &y, &pred, Some(&scores)).unwrap();
    assert_eq!(r.confusion, ConfusionMatrix { tp: 2, tn: 1, fp: 1, fn_: 0, abstained: 1 });
    // 0.5 (positive) ranks below 0.6 (negative)
    assert!((r.auc.unwrap() - 5.0 / 6.0).abs() < 1e-15);
    assert_eq!(r.abstention_rate, Some(0.2));
    assert_eq!(evaluate("one", &[1, 1], &[Some(1), Some(1)], Some(&[0.2, 0.3])).unwrap().auc, None);
}

#[test]
fn csv_layouts() {
    let a = MetricsReport::from_confusion("bnn", ConfusionMatrix::new(466683, 196790, 222578, 123952), Some(0.63));
    let b = MetricsReport::from_confusion("odd", ConfusionMatrix::new(0, 3, 0, 0), None);
    let mut buf = Vec::new();
    write_table_csv(&[a.clone(), b.clone()], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Measure,bnn,odd");
    assert_eq!(lines[1], "TP,466683,0");
    assert!(lines.contains(&"Accuracy,0.657,1.000"));
    assert!(lines.contains(&"Precision,0.677,undefined"));
    assert!(lines.contains(&"Kappa Score,0.269,undefined"));
    assert_eq!(lines.len(), 12);

    let mut buf = Vec::new();
    write_classwise_csv(&[a], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().any(|l| l == "bnn,0,0.614,0.469,0.532,419368"));
    assert!(text.lines().any(|l| l.starts_with("bnn,weighted avg,0.651,")));
}
