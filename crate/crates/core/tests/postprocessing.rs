mod common;

use proptest::prelude::*;
use qkdsim::error::PostprocessError;
use qkdsim::postprocessing::{
    confirm_key, estimate_qber, key_digest, parity_reconcile, privacy_amplify, privacy_amplify_with_subsets,
    run_pipeline, BlockSchedule, EveBound, PostprocessConfig, CONFIRMATION_BITS,
};
use qkdsim::rng::{SeedStreams, StreamId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn keys(n: usize, error_rate: f64, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let b = a
        .iter()
        .map(|&x| x ^ u8::from(rng.random::<f64>() < error_rate))
        .collect();
    (a, b)
}

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[test]
fn qber_estimate_is_unbiased() {
    // 10% of positions differ; a 1000-bit sample drawn without replacement
    // has hypergeometric spread, below the binomial sigma used here.
    let n = 10_000;
    let a = vec![0u8; n];
    let b: Vec<u8> = (0..n).map(|i| u8::from(i % 10 == 0)).collect();
    let mut total = 0.0;
    let runs = 200;
    for seed in 0..runs {
        let mut rng = SeedStreams::new(seed).stream(StreamId::Public);
        let e = estimate_qber(&a, &b, 0.1, &mut rng).unwrap();
        assert_eq!(e.sample_size, 1000);
        assert_eq!(e.key_a.len(), n - 1000);
        assert_eq!(e.errors + hamming(&e.key_a, &e.key_b), n / 10);
        let sigma = (0.1 * 0.9 / 1000.0f64).sqrt();
        assert!((e.qber - 0.1).abs() <= 4.0 * sigma, "{}", e.qber);
        total += e.qber;
    }
    let mean_sigma = (0.1 * 0.9 / (1000.0 * runs as f64)).sqrt();
    assert!((total / runs as f64 - 0.1).abs() <= 3.0 * mean_sigma);
}

#[test]
fn qber_estimate_errors() {
    let mut rng = SeedStreams::new(0).stream(StreamId::Public);
    assert_eq!(
        estimate_qber(&[], &[], 0.1, &mut rng).unwrap_err(),
        PostprocessError::EmptyKey
    );
    assert_eq!(
        estimate_qber(&[0, 1], &[0], 0.1, &mut rng).unwrap_err(),
        PostprocessError::LengthMismatch(2, 1)
    );
    assert!(matches!(
        estimate_qber(&[0, 1], &[0, 1], 1.0, &mut rng),
        Err(PostprocessError::SampleFraction(_))
    ));
    // A tiny key still sacrifices one bit.
    assert_eq!(
        estimate_qber(&[0, 1, 1], &[0, 1, 1], 0.01, &mut rng)
            .unwrap()
            .sample_size,
        1
    );
}

#[test]
fn reconciliation_fixes_scattered_errors() {
    let (a, mut b) = (vec![0u8; 256], vec![0u8; 256]);
    for i in [3, 77, 130, 255] {
        b[i] = 1;
    }
    let mut rng = SeedStreams::new(1).stream(StreamId::Public);
    let rec = parity_reconcile(&a, &b, &BlockSchedule::new(16, 4).unwrap(), &mut rng).unwrap();
    assert_eq!(rec.key_b, a);
    assert_eq!(rec.corrections, 4);
    assert!(rec.leaked_bits >= 16 + 4 * 4);
}

#[test]
fn reconciliation_rejects_mismatched_lengths() {
    let mut rng = SeedStreams::new(1).stream(StreamId::Public);
    let schedule = BlockSchedule::new(4, 2).unwrap();
    assert_eq!(
        parity_reconcile(&[0, 1], &[0], &schedule, &mut rng).unwrap_err(),
        PostprocessError::LengthMismatch(2, 1)
    );
    assert!(BlockSchedule::new(0, 2).is_err());
    assert!(BlockSchedule::new(4, 0).is_err());
}

#[test]
fn worked_example_amplification() {
    // Final bits are the XOR of the first four and of the last four bits.
    for key in [[1, 0, 1, 1, 0, 1], [0, 0, 0, 0, 0, 0], [1, 1, 1, 0, 0, 1]] {
        let out =
            privacy_amplify_with_subsets(&key, EveBound::new(3), 1, &[vec![0, 1, 2, 3], vec![2, 3, 4, 5]]).unwrap();
        assert_eq!(
            out,
            vec![key[0] ^ key[1] ^ key[2] ^ key[3], key[2] ^ key[3] ^ key[4] ^ key[5]]
        );
    }
}

#[test]
fn amplification_subset_errors() {
    let key = [1, 0, 1, 1, 0, 1];
    assert_eq!(
        privacy_amplify_with_subsets(&key, EveBound::new(3), 1, &[vec![0]]).unwrap_err(),
        PostprocessError::LengthMismatch(1, 2)
    );
    assert_eq!(
        privacy_amplify_with_subsets(&key, EveBound::new(3), 1, &[vec![0], vec![6]]).unwrap_err(),
        PostprocessError::SubsetIndex { index: 6, len: 6 }
    );
}

#[test]
fn random_subsets_hold_about_half_the_key() {
    // With a single 1 at position i, an output bit is 1 exactly when its
    // subset contains i.
    let n = 200;
    let mut hits = 0;
    let mut total = 0;
    for i in [0, 63, 64, 199] {
        let mut key = vec![0u8; n];
        key[i] = 1;
        let mut rng = SeedStreams::new(i as u64).stream(StreamId::Public);
        let out = privacy_amplify(&key, EveBound::new(0), 0, &mut rng).unwrap();
        hits += out.iter().filter(|&&b| b == 1).count();
        total += out.len();
    }
    assert!(common::within_3sigma(hits, total, 0.5));
}

#[test]
fn digest_and_confirmation() {
    assert_eq!(key_digest(&[1, 0, 1]), key_digest(&[1, 0, 1]));
    assert_ne!(key_digest(&[1, 0, 1]), key_digest(&[1, 0, 0]));
    assert!(confirm_key(&[1; 100], &[1; 100]));
    let mut other = vec![1; 100];
    other[99] = 0;
    assert!(!confirm_key(&[1; 100], &other));
}

#[test]
fn pipeline_produces_equal_confirmed_keys() {
    let (a, b) = keys(20_000, 0.03, 5);
    let mut rng = SeedStreams::new(5).stream(StreamId::Postprocess);
    let out = run_pipeline(&a, &b, &PostprocessConfig::default(), &mut rng);
    assert!(out.established(), "{out:?}");
    assert_eq!(out.final_key_a, out.final_key_b);
    assert_eq!(out.residual_errors, 0);
    assert_eq!(out.reconciled_len, a.len() - out.sample_size);
    assert_eq!(out.final_len, out.reconciled_len - out.eve_bound);
    assert_eq!(out.leaked_bits, out.reconciliation_leak + CONFIRMATION_BITS);
    let q = out.qber_estimate.unwrap();
    let expected_bound = (out.reconciled_len as f64 * 2.0 * q).ceil() as usize + out.reconciliation_leak;
    assert_eq!(out.eve_bound, expected_bound.min(out.reconciled_len));
}

#[test]
fn pipeline_fails_when_everything_leaks() {
    let (a, b) = keys(2_000, 0.3, 6);
    let mut rng = SeedStreams::new(6).stream(StreamId::Postprocess);
    let out = run_pipeline(&a, &b, &PostprocessConfig::default(), &mut rng);
    assert!(!out.established());
    assert_eq!(out.final_len, 0);
    assert!(out.failure.is_some());
}

#[test]
fn pipeline_respects_safety_margin() {
    let (a, b) = keys(10_000, 0.01, 8);
    let base = PostprocessConfig::default();
    let margin = PostprocessConfig {
        safety_margin: 100,
        ..base.clone()
    };
    let x = run_pipeline(&a, &b, &base, &mut SeedStreams::new(8).stream(StreamId::Postprocess));
    let y = run_pipeline(&a, &b, &margin, &mut SeedStreams::new(8).stream(StreamId::Postprocess));
    assert_eq!(x.final_len, y.final_len + 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconciliation_invariants(
        n in 1usize..600,
        rate in 0.0..0.15f64,
        seed in any::<u64>(),
        block in 1usize..40,
        passes in 1usize..5,
    ) {
        let (a, b) = keys(n, rate, seed);
        let mut rng = SeedStreams::new(seed).stream(StreamId::Public);
        let schedule = BlockSchedule::new(block, passes).unwrap();
        let rec = parity_reconcile(&a, &b, &schedule, &mut rng).unwrap();
        prop_assert_eq!(rec.key_b.len(), n);
        prop_assert_eq!(rec.corrections, hamming(&b, &rec.key_b));
        prop_assert!(hamming(&a, &rec.key_b) <= hamming(&a, &b));
        prop_assert!(rec.leaked_bits >= n.div_ceil(block.min(n)));
        if a == b {
            prop_assert_eq!(rec.corrections, 0);
        }
    }

    #[test]
    fn amplification_length(n in 1usize..300, t in 0usize..300, s in 0usize..20, seed in any::<u64>()) {
        let (a, _) = keys(n, 0.0, seed);
        let mut rng = SeedStreams::new(seed).stream(StreamId::Public);
        match privacy_amplify(&a, EveBound::new(t), s, &mut rng) {
            Ok(out) => prop_assert_eq!(out.len(), n - t - s),
            Err(e) => {
                prop_assert!(t + s >= n);
                prop_assert_eq!(e, PostprocessError::NoExtractableKey { len: n, bound: t, margin: s });
            }
        }
    }

    #[test]
    fn pipeline_never_grows_keys(n in 20usize..2000, rate in 0.0..0.2f64, seed in any::<u64>()) {
        let (a, b) = keys(n, rate, seed);
        let mut rng = SeedStreams::new(seed).stream(StreamId::Postprocess);
        let out = run_pipeline(&a, &b, &PostprocessConfig::default(), &mut rng);
        prop_assert!(out.final_len <= out.reconciled_len);
        prop_assert!(out.reconciled_len <= n);
        prop_assert!(out.eve_bound <= out.reconciled_len);
        if out.established() {
            prop_assert_eq!(&out.final_key_a, &out.final_key_b);
        }
    }
}
