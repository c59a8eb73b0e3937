use coreset_core::cnn::{build_model, ArchitectureSpec, LayerSpec};
use coreset_core::metrics::{
    cwt, cwt_mse, detect_r_peaks, dtw_distance, score_sample, slack_from_intervals, z_normalize,
    FeatureSummary, MetricConfig, PeakConfig,
};
use coreset_core::signal::{generate_synthetic, DatasetRole, Provenance, Signal, SynthConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum cost over every monotone warping path, by exhaustive recursion.
fn brute_force_dtw(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if i == a.len() - 1 && j == b.len() - 1 {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

#[test]
fn dtw_matches_exhaustive_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        // Quarter steps keep every partial sum exact.
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-16..=16) as f64 * 0.25).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-16..=16) as f64 * 0.25).collect();
        assert_eq!(dtw_distance(&a, &b).unwrap(), brute_force_dtw(&a, &b), "{a:?} {b:?}");
    }
}

#[test]
fn dtw_two_by_two() {
    assert_eq!(dtw_distance(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
    assert!(dtw_distance(&[], &[1.0]).is_err());
}

#[test]
fn slack_hand_cases() {
    assert!((slack_from_intervals(&[10, 10, 10], &[10, 12, 10]).value - 20.0).abs() < 1e-9);
    assert!((slack_from_intervals(&[10, 10], &[10]).value - 50.0).abs() < 1e-9);
}

fn ricker_closed_form(t: f64, a: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 / ((3.0 * a).sqrt() * pi.powf(0.25)) * (1.0 - t * t / (a * a)) * (-t * t / (2.0 * a * a)).exp()
}

#[test]
fn cwt_of_impulse_is_the_wavelet() {
    let mut x = vec![0.0; 32];
    x[10] = 1.0;
    let scales = [2.0, 5.0, 7.5];
    let s = cwt(&x, &scales).unwrap();
    for (k, &a) in scales.iter().enumerate() {
        for (t, v) in s.row(k).iter().enumerate() {
            assert!((v - ricker_closed_form(t as f64 - 10.0, a)).abs() < 1e-9);
        }
    }
}

#[test]
fn cwt_mse_hand_sized() {
    // Reference values from a direct double loop over the same definition.
    let x = vec![0.0, 1.0, 3.0, -2.0, 0.5, 4.0, -1.0, 2.0];
    let c = vec![1.0, -1.0, 0.5, 0.0, 2.0, -0.5, -1.5, -0.5];
    let signal = Signal::new("x", x, 1.0, 0, Provenance::Synthetic);
    let summary = FeatureSummary {
        curve: c,
        source_layer: 0,
    };
    let v = cwt_mse(&signal, &summary, &[1.0, 2.5]).unwrap();
    assert!((v - 2.0362769387139243).abs() < 1e-12, "{v}");
    let v = cwt_mse(&signal, &summary, &[2.0, 3.0]).unwrap();
    assert!((v - 1.0697791160107188).abs() < 1e-12, "{v}");
}

#[test]
fn r_peaks_found_on_synthetic_windows() {
    let cfg = SynthConfig::four_class(77);
    let synth = generate_synthetic(&cfg, 25, "r-", DatasetRole::TestSet).unwrap();
    let len = cfg.window_len();
    let detector = PeakConfig::for_window(len, cfg.beats_per_window);
    let (mut truth, mut hit, mut worst) = (0usize, 0usize, 0usize);
    for (s, rec) in synth.dataset.signals().iter().zip(&synth.peaks) {
        assert_eq!(s.id, rec.id);
        let found = detect_r_peaks(&z_normalize(&s.samples), &detector);
        for &r in &rec.r_peaks {
            truth += 1;
            if let Some(d) = found.r_peak_indices.iter().map(|&p| p.abs_diff(r)).min() {
                if d <= 3 {
                    hit += 1;
                    worst = worst.max(d);
                }
            }
        }
    }
    let recall = hit as f64 / truth as f64;
    assert!(recall >= 0.95, "recall {recall} over {truth} beats");
    assert!(worst <= 3);
}

#[test]
fn generated_classes_are_separable_by_dtw() {
    for seed in 0..5 {
        let cfg = SynthConfig::four_class(seed);
        let ds = generate_synthetic(&cfg, 20, "g-", DatasetRole::TestSet).unwrap().dataset;
        let z: Vec<Vec<f64>> = ds.signals().iter().map(|s| z_normalize(&s.samples)).collect();
        let (mut intra, mut inter) = ((0.0, 0usize), (0.0, 0usize));
        for i in 0..z.len() {
            for j in i + 1..z.len() {
                let d = dtw_distance(&z[i], &z[j]).unwrap();
                let slot = if ds.signals()[i].label == ds.signals()[j].label {
                    &mut intra
                } else {
                    &mut inter
                };
                slot.0 += d;
                slot.1 += 1;
            }
        }
        let (intra, inter) = (intra.0 / intra.1 as f64, inter.0 / inter.1 as f64);
        assert!(inter > intra, "seed {seed}: inter {inter} intra {intra}");
    }
}

fn finite_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #[test]
    fn dtw_is_symmetric_and_zero_on_self(a in finite_vec(1..20), b in finite_vec(1..20)) {
        let ab = dtw_distance(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, dtw_distance(&b, &a).unwrap());
        prop_assert_eq!(dtw_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn cwt_is_linear(x in finite_vec(1..40), alpha in -5.0f64..5.0) {
        let scales = [1.5, 4.0];
        let base = cwt(&x, &scales).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let s = cwt(&scaled, &scales).unwrap();
        for (p, q) in base.coefficients.iter().zip(&s.coefficients) {
            prop_assert!((alpha * p - q).abs() <= 1e-9 * (1.0 + q.abs()));
        }
        let zero = cwt(&vec![0.0; x.len()], &scales).unwrap();
        prop_assert!(zero.coefficients.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn peaks_ignore_constant_offset(x in finite_vec(5..80), c in -50.0f64..50.0) {
        let cfg = PeakConfig { k: 1.5, min_distance: 3 };
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = detect_r_peaks(&z_normalize(&x), &cfg);
        let b = detect_r_peaks(&z_normalize(&shifted), &cfg);
        prop_assert_eq!(a.rr_intervals.len(), b.rr_intervals.len());
        for w in a.r_peak_indices.windows(2) {
            prop_assert!(w[1] - w[0] >= 3);
        }
    }
}

#[test]
fn triples_are_finite_and_non_negative() {
    let spec = ArchitectureSpec {
        input_len: 48,
        layers: vec![
            LayerSpec::conv_same(3, 5),
            LayerSpec::MaxPool { window: 2 },
            LayerSpec::conv(3, 3),
            LayerSpec::GlobalAvgPool,
            LayerSpec::DenseSoftmax { classes: 2 },
        ],
    };
    let cfg = MetricConfig::default();
    let scales = cfg.resolve_scales(48);
    let peaks = cfg.peak_config(48);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let model = build_model(&spec, i).unwrap();
        let x: Vec<f64> = (0..48).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = Signal::new(format!("s{i}"), x, 40.0, 0, Provenance::Synthetic);
        for layer in [0, 2] {
            let t = score_sample(&model, &s, layer, &scales, &peaks).unwrap();
            for v in [t.dtw, t.mse, t.slack] {
                assert!(v.is_finite() && v >= 0.0, "{t:?}");
            }
        }
    }
}
