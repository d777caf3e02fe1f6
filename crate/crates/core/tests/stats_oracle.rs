mod common {
    pub mod stats_fixture;
}

use common::stats_fixture::*;
use kgcl_core::eval::{student_t_two_sided_p, two_sample_ttest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn shifted_fixture_matches_frozen_reference() {
    let r = two_sample_ttest(&NOISE, &SHIFTED).unwrap();
    assert!((r.t - SHIFTED_T).abs() < 1e-10);
    assert!((r.df - SHIFTED_DF).abs() < 1e-10);
    assert!((r.p - SHIFTED_P).abs() / SHIFTED_P < 1e-6, "{} vs {}", r.p, SHIFTED_P);
    assert!(r.p < 1e-3);
}

#[test]
fn tail_probabilities_match_frozen_reference() {
    for (t, df, p) in TAILS {
        assert!((student_t_two_sided_p(t, df) - p).abs() < 1e-12, "t={t} df={df}");
        assert!((student_t_two_sided_p(-t, df) - p).abs() < 1e-12);
    }
}

#[test]
fn tail_probabilities_match_statrs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let t = rng.gen_range(-6.0..6.0);
        let df = rng.gen_range(1.0..60.0);
        let ours = student_t_two_sided_p(t, df);
        let reference = statrs_two_sided(t, df);
        assert!((ours - reference).abs() < 1e-9, "t={t} df={df}: {ours} vs {reference}");
    }
}

#[test]
fn welch_statistic_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let a: Vec<f64> = (0..rng.gen_range(2..15)).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..rng.gen_range(2..15)).map(|_| rng.gen_range(-2.0..4.0)).collect();
        let stats = |x: &[f64]| {
            let n = x.len() as f64;
            let m = x.iter().sum::<f64>() / n;
            (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0), n)
        };
        let (ma, va, na) = stats(&a);
        let (mb, vb, nb) = stats(&b);
        let t = (ma - mb) / (va / na + vb / nb).sqrt();
        let r = two_sample_ttest(&a, &b).unwrap();
        assert!((r.t - t).abs() < 1e-10);
        assert!((r.p - statrs_two_sided(t, r.df)).abs() < 1e-9);
    }
}
