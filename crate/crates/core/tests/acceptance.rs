//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a readable checklist.

mod common;

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use common::{bb84_intercept_qber, chi_square, oracle_intercepted_correlation, random_state, setting, within_3sigma};
use qkdsim::bell::{
    chsh_value, deterministic_strategies, lhv_chsh_max, marginal_comparisons, BellVerdict, CorrelationTally,
};
use qkdsim::channel::{AdversaryConfig, ChannelConfig};
use qkdsim::harness::{report_string, run_experiment, ExperimentConfig, OutputFormat};
use qkdsim::postprocessing::{
    parity_reconcile, privacy_amplify, privacy_amplify_with_subsets, BlockSchedule, EveBound,
};
use qkdsim::protocols::{
    bb84_decision, run_agm06, run_bb84, run_bb84_replay, run_e91, run_sarg04, DecisionRule, E91Settings, PairSource,
    ProtocolId, ReplayPlan, Transcript,
};
use qkdsim::quantum::{exact_joint_distribution, sample_pair, TwoQubitState, OUTCOME_ORDER};
use qkdsim::rng::{SeedStreams, StreamId};
use rand::{Rng, SeedableRng};

const SLOTS: usize = 100_000;
const RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const E91_S_TOLERANCE: f64 = 0.05;
const AGM06_Q_MAX: f64 = 0.005;
const EXACT: f64 = 1e-12;
const CHI_ALPHA: f64 = 0.001;

fn verdict(n: u32, name: &str, ok: bool, detail: String) {
    println!("{} criterion {n}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn binomial_band(x: f64, p: f64, n: usize) -> (bool, f64) {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    ((x - p).abs() <= 3.0 * sigma, sigma)
}

#[test]
fn criterion_01_bb84_sift_fraction() {
    let start = Instant::now();
    let record = run_bb84(SLOTS, &ChannelConfig::ideal(), &AdversaryConfig::None, 101);
    let elapsed = start.elapsed();
    let f = record.statistics.sift_fraction;
    let (in_band, sigma) = binomial_band(f, 0.5, SLOTS);
    verdict(
        1,
        "BB84 sift fraction",
        in_band && elapsed < RUNTIME_LIMIT,
        format!("{f:.5} vs 0.5 ± {:.5}, {:.2?}", 3.0 * sigma, elapsed),
    );
}

#[test]
fn criterion_02_sarg04_sift_fraction() {
    let start = Instant::now();
    let record = run_sarg04(SLOTS, &ChannelConfig::ideal(), &AdversaryConfig::None, 102);
    let elapsed = start.elapsed();
    let f = record.statistics.sift_fraction;
    let (in_band, sigma) = binomial_band(f, 0.25, SLOTS);
    verdict(
        2,
        "SARG04 sift fraction",
        in_band && elapsed < RUNTIME_LIMIT,
        format!("{f:.5} vs 0.25 ± {:.5}, {:.2?}", 3.0 * sigma, elapsed),
    );
}

#[test]
fn criterion_03_intercept_resend_disturbance() {
    let expected = bb84_intercept_qber();
    let record = run_bb84(
        SLOTS,
        &ChannelConfig::ideal(),
        &AdversaryConfig::intercept_resend(),
        103,
    );
    let stats = &record.statistics;
    let qber = stats.qber.expect("sifted key");
    let (in_band, sigma) = binomial_band(qber, expected, stats.sifted_len);
    verdict(
        3,
        "intercept-resend sifted QBER",
        (expected - 0.25).abs() < EXACT && in_band,
        format!(
            "{qber:.5} vs oracle {expected:.5} ± {:.5} (aggregate error rate {:.5})",
            3.0 * sigma,
            stats.aggregate_error_rate
        ),
    );
}

#[test]
fn criterion_04_decision_thresholds() {
    let clean = ReplayPlan::from_symbols(
        "10111011101011000111010110101",
        "+x++x+xxx++xx+x+xxx+++x+xx++x",
        "+xx++xx+x+xx++x+xx++x+xx++x+x",
        None,
        vec![4, 24],
    )
    .unwrap();
    let eve_bases = "++x++x++xxx+xxxx++xxxx++++xx+";
    let eve = ReplayPlan::from_symbols(
        "10111011101011000111010110101",
        "+x++x+xxx++xx+x+xxx+++x+xx++x",
        eve_bases,
        Some(eve_bases),
        vec![4, 24],
    )
    .unwrap();
    let rule = DecisionRule::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (plan, expected_rate, expect_continue) in [(&clean, 13.0 / 29.0, true), (&eve, 24.0 / 29.0, false)] {
        for seed in 0..8 {
            let record = run_bb84_replay(plan, seed);
            let rate = record.statistics.aggregate_error_rate;
            let cont = bb84_decision(&record, &rule).is_continue();
            ok &= (rate - expected_rate).abs() < EXACT && cont == expect_continue;
            if seed == 0 {
                detail.push(format!(
                    "{:.4} → {}",
                    (rate * 1e4).floor() / 1e4,
                    if cont { "continue" } else { "abort" }
                ));
            }
        }
    }
    verdict(4, "decision thresholds", ok, detail.join(", "));
}

#[test]
fn criterion_05_e91_chsh() {
    let n_pairs = 204_000;
    let ideal = ChannelConfig::ideal();

    let record = run_e91(n_pairs, &PairSource::singlet(), &ideal, &AdversaryConfig::None, 105);
    let checks = match &record.transcript {
        Transcript::EntangledPairs(slots) => slots
            .iter()
            .filter(|s| s.phase == qkdsim::protocols::PairPhase::Check)
            .count(),
        Transcript::PrepareMeasure(_) => 0,
    };
    let est = record.statistics.chsh.unwrap();
    let singlet_ok = checks >= 100_000 && (est.s.abs() - 2.0 * SQRT_2).abs() <= E91_S_TOLERANCE && !record.is_aborted();

    let product = PairSource::Quantum(TwoQubitState::basis_product(0, 1));
    let sep = run_e91(n_pairs, &product, &ideal, &AdversaryConfig::None, 205);
    let sep_est = sep.statistics.chsh.unwrap();
    let sep_ok = sep_est.s.abs() <= 2.0 + 3.0 * sep_est.sigma && sep.is_aborted();

    let settings = E91Settings::default().chsh;
    let singlet = TwoQubitState::singlet();
    let dirs = [0.0, std::f64::consts::FRAC_PI_2];
    let [e1, e2, e3, e4] = settings
        .pairs()
        .map(|(p, q)| oracle_intercepted_correlation(&singlet, &dirs, p.angle(), q.angle()));
    let oracle = chsh_value(e1, e2, e3, e4);
    let ir = run_e91(
        n_pairs,
        &PairSource::singlet(),
        &ideal,
        &AdversaryConfig::intercept_resend(),
        305,
    );
    let ir_est = ir.statistics.chsh.unwrap();
    let ir_ok = (oracle.abs() - SQRT_2).abs() < EXACT && (ir_est.s - oracle).abs() <= 3.0 * ir_est.sigma;

    verdict(
        5,
        "E91 CHSH",
        singlet_ok && sep_ok && ir_ok,
        format!(
            "singlet |S| = {:.4} ({checks} checks); separable |S| = {:.4} ± {:.4} aborted={}; \
             intercept-resend S = {:.4} vs oracle {:.4} ± {:.4}",
            est.s.abs(),
            sep_est.s.abs(),
            sep_est.sigma,
            sep.is_aborted(),
            ir_est.s,
            oracle,
            3.0 * ir_est.sigma
        ),
    );
}

#[test]
fn criterion_06_agm06() {
    let record = run_agm06(
        SLOTS,
        &PairSource::singlet(),
        &ChannelConfig::ideal(),
        &AdversaryConfig::None,
        106,
    );
    let agm = record.statistics.agm06.unwrap();
    let est = record.statistics.chsh.unwrap();
    let q = agm.q.unwrap();
    let quantum_ok = q <= AGM06_Q_MAX && est.s - 2.0 >= 3.0 * est.sigma && est.verdict == BellVerdict::Violated;

    let lhv_max = deterministic_strategies()
        .map(|[a, a2, b, b2]| chsh_value(a * b, a * b2, a2 * b, a2 * b2).abs())
        .fold(0.0, f64::max);
    let lhv_ok = lhv_max == 2.0 && lhv_chsh_max() == 2.0 && deterministic_strategies().count() == 16;

    verdict(
        6,
        "AGM06",
        quantum_ok && lhv_ok,
        format!(
            "Q = {q:.5}, S = {:.4} ± {:.4} (probability form {:.4}); max deterministic |S| = {lhv_max}",
            est.s, est.sigma, agm.probability_s
        ),
    );
}

#[test]
fn criterion_07_privacy_amplification() {
    let key = [1, 0, 1, 1, 0, 1];
    let subsets = vec![vec![0, 1, 2, 3], vec![2, 3, 4, 5]];
    let out = privacy_amplify_with_subsets(&key, EveBound::new(3), 1, &subsets).unwrap();
    let example_ok = out == vec![1, 1];

    // Eve knows the first t bits exactly and guesses the rest; she can
    // replay the public subsets from the same rng state.
    let (n, t, trials) = (64, 16, 10_000);
    let mut key_rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    for trial in 0..trials {
        let key: Vec<u8> = (0..n).map(|_| key_rng.random_range(0..2u8)).collect();
        let mut eve_key = key.clone();
        for b in eve_key.iter_mut().skip(t) {
            *b = key_rng.random_range(0..2u8);
        }
        let public = SeedStreams::new(trial).stream(StreamId::Public);
        let final_key = privacy_amplify(&key, EveBound::new(t), 0, &mut public.clone()).unwrap();
        let guess = privacy_amplify(&eve_key, EveBound::new(t), 0, &mut public.clone()).unwrap();
        hits += usize::from(final_key[0] == guess[0]);
    }
    // A random parity that touches any unknown bit is a fair coin for Eve.
    let oracle = 0.5 + 0.5f64.powi((n - t) as i32 + 1);
    let accuracy = hits as f64 / trials as f64;
    let guess_ok = within_3sigma(hits, trials as usize, oracle);
    verdict(
        7,
        "privacy amplification",
        example_ok && guess_ok,
        format!("6-bit example → {out:?}; Eve accuracy {accuracy:.4} vs {oracle:.4}"),
    );
}

#[test]
fn criterion_08_reconciliation() {
    let n = 10_000;
    let schedule = BlockSchedule::for_qber(0.05, BlockSchedule::DEFAULT_PASSES);
    let mut clean = 0;
    for seed in 0..100u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let key_a: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let key_b: Vec<u8> = key_a
            .iter()
            .map(|&b| if rng.random::<f64>() < 0.05 { b ^ 1 } else { b })
            .collect();
        let mut public = SeedStreams::new(seed).stream(StreamId::Public);
        let rec = parity_reconcile(&key_a, &key_b, &schedule, &mut public).unwrap();
        clean += usize::from(rec.key_b == key_a);
    }
    verdict(
        8,
        "reconciliation",
        clean >= 99,
        format!("{clean}/100 trials without residual errors"),
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    let mut case_rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut sampler = SeedStreams::new(109).stream(StreamId::BobDetector);
    let mut passed = 0;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let state = random_state(&mut case_rng);
        let a = setting(case_rng.random_range(-3.2..3.2));
        let b = setting(case_rng.random_range(-3.2..3.2));
        let dist = exact_joint_distribution(&state, a, b);
        let mut counts = [0u64; 4];
        for _ in 0..20_000 {
            let o = sample_pair(&state, a, b, &mut sampler);
            counts[OUTCOME_ORDER.iter().position(|&x| x == o).unwrap()] += 1;
        }
        let (stat, _, crit) = chi_square(&counts, &dist.as_array(), CHI_ALPHA);
        passed += usize::from(stat <= crit);
        worst = worst.max(stat / crit);
    }
    verdict(
        9,
        "oracle equivalence",
        passed == 20,
        format!("{passed}/20 cases pass chi-square at α = {CHI_ALPHA}; max stat/critical {worst:.3}"),
    );
}

#[test]
fn criterion_10_no_signalling() {
    let mut case_rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    let mut exact_dev = 0.0f64;
    for _ in 0..200 {
        let state = random_state(&mut case_rng);
        let [a, b1, b2] = [0; 3].map(|_| setting(case_rng.random_range(-3.2..3.2)));
        let d1 = exact_joint_distribution(&state, a, b1);
        let d2 = exact_joint_distribution(&state, a, b2);
        exact_dev = exact_dev.max((d1.alice_plus() - d2.alice_plus()).abs());
        let e1 = exact_joint_distribution(&state, b1, a);
        let e2 = exact_joint_distribution(&state, b2, a);
        exact_dev = exact_dev.max((e1.bob_plus() - e2.bob_plus()).abs());
    }

    let mut sampler = SeedStreams::new(110).stream(StreamId::BobDetector);
    let mut within = 0;
    let mut total = 0;
    for _ in 0..5 {
        let state = random_state(&mut case_rng);
        let alice = [
            setting(case_rng.random_range(-3.2..3.2)),
            setting(case_rng.random_range(-3.2..3.2)),
        ];
        let bob = [
            setting(case_rng.random_range(-3.2..3.2)),
            setting(case_rng.random_range(-3.2..3.2)),
        ];
        let mut tally = CorrelationTally::new();
        for &a in &alice {
            for &b in &bob {
                for _ in 0..25_000 {
                    let (x, y) = sample_pair(&state, a, b, &mut sampler);
                    tally.record(a, b, x, y);
                }
            }
        }
        for c in marginal_comparisons(&tally) {
            total += 1;
            within += usize::from(c.deviation <= 3.0 * c.sigma);
        }
    }
    verdict(
        10,
        "no-signalling",
        exact_dev <= EXACT && within == total,
        format!("exact deviation {exact_dev:.2e}; {within}/{total} sampled marginals within 3σ"),
    );
}

#[test]
fn criterion_11_determinism() {
    let mut ok = true;
    let mut checked = 0;
    for protocol in [ProtocolId::Bb84, ProtocolId::Sarg04, ProtocolId::E91, ProtocolId::Agm06] {
        let mut config = ExperimentConfig::new(protocol, 4_000, 2024);
        config.trials = 3;
        config.channel = ChannelConfig::ideal().with_flip(0.02);
        let first = run_experiment(&config).unwrap();
        let second = run_experiment(&config).unwrap();
        for format in [OutputFormat::JsonLines, OutputFormat::Csv, OutputFormat::Human] {
            ok &= report_string(&first, format) == report_string(&second, format);
            checked += 1;
        }
    }
    verdict(11, "determinism", ok, format!("{checked} report pairs byte-identical"));
}
