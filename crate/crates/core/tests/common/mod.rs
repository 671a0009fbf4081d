//! Oracles and statistical helpers shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qkdsim::quantum::{MeasurementSetting, TwoQubitState};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Spin eigenvector along angle `theta` in the x–z plane, written out from
/// the half-angle form rather than taken from the library.
pub fn eigvec(theta: f64, plus: bool) -> [Complex64; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    if plus {
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)]
    } else {
        [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)]
    }
}

/// `|⟨e_a ⊗ e_b|ψ⟩|²` for the four outcome pairs in order `++, +−, −+, −−`.
pub fn oracle_joint(state: &TwoQubitState, a: f64, b: f64) -> [f64; 4] {
    let amp = state.amplitudes();
    let mut out = [0.0; 4];
    for (k, (pa, pb)) in [(true, true), (true, false), (false, true), (false, false)]
        .into_iter()
        .enumerate()
    {
        let ea = eigvec(a, pa);
        let eb = eigvec(b, pb);
        let mut overlap = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                overlap += (ea[i] * eb[j]).conj() * amp[i * 2 + j];
            }
        }
        out[k] = overlap.norm_sqr();
    }
    out
}

pub fn oracle_correlation(state: &TwoQubitState, a: f64, b: f64) -> f64 {
    let p = oracle_joint(state, a, b);
    p[0] + p[3] - p[1] - p[2]
}

pub fn random_state<R: Rng>(rng: &mut R) -> TwoQubitState {
    loop {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        for a in amps.iter_mut() {
            *a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        if let Ok(s) = TwoQubitState::normalized(amps) {
            if amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3 {
                return s;
            }
        }
    }
}

pub fn setting(x: f64) -> MeasurementSetting {
    MeasurementSetting::new(x).unwrap()
}

/// Pearson chi-square goodness of fit. Cells with expected count below 5
/// are pooled (smallest first) until the pool reaches 5, and the pool is
/// folded into the smallest remaining cell if it never does. Returns
/// `(statistic, degrees of freedom, critical value at alpha)`.
pub fn chi_square(observed: &[u64], probs: &[f64], alpha: f64) -> (f64, usize, f64) {
    let n: u64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| (o as f64, p * n as f64))
        .collect();
    cells.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for c in cells {
        if pool.1 < 5.0 {
            pool = (pool.0 + c.0, pool.1 + c.1);
        } else {
            merged.push(c);
        }
    }
    if pool.1 >= 5.0 || merged.is_empty() {
        merged.push(pool);
    } else {
        merged[0].0 += pool.0;
        merged[0].1 += pool.1;
    }
    if merged.len() < 2 {
        return (0.0, 0, f64::INFINITY);
    }
    let stat = merged.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = merged.len() - 1;
    let crit = ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha);
    (stat, df, crit)
}

/// Three-sigma binomial band check.
pub fn within_3sigma(successes: usize, n: usize, p: f64) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (successes as f64 / n as f64 - p).abs() <= 3.0 * sigma
}

fn photon_p0(pol: f64, analyzer: f64) -> f64 {
    (pol - analyzer).cos().powi(2)
}

/// Sifted error rate of BB84 under full intercept-resend, by enumerating
/// Alice's basis and bit, Eve's basis and outcome. Bob measures in Alice's
/// basis (only those slots are sifted).
pub fn bb84_intercept_qber() -> f64 {
    let bases = [0.0, std::f64::consts::FRAC_PI_4];
    let mut err = 0.0;
    let mut weight = 0.0;
    for &alice in &bases {
        for bit in 0..2u8 {
            let sent = alice + f64::from(bit) * std::f64::consts::FRAC_PI_2;
            for &eve in &bases {
                let p_case = 0.25 * 0.5;
                for eve_bit in 0..2u8 {
                    let p0 = photon_p0(sent, eve);
                    let p_eve = if eve_bit == 0 { p0 } else { 1.0 - p0 };
                    let resent = eve + f64::from(eve_bit) * std::f64::consts::FRAC_PI_2;
                    let bob0 = photon_p0(resent, alice);
                    let p_wrong = if bit == 0 { 1.0 - bob0 } else { bob0 };
                    err += p_case * p_eve * p_wrong;
                }
                weight += p_case;
            }
        }
    }
    err / weight
}

/// Correlation `E(a, b)` after Eve measures Bob's half of `state` along a
/// direction drawn uniformly from `eve_dirs` and resends her eigenstate.
pub fn oracle_intercepted_correlation(state: &TwoQubitState, eve_dirs: &[f64], a: f64, b: f64) -> f64 {
    let amp = state.amplitudes();
    let mut e = 0.0;
    for &dir in eve_dirs {
        for plus in [true, false] {
            let eb = eigvec(dir, plus);
            let alice = [
                eb[0].conj() * amp[0] + eb[1].conj() * amp[1],
                eb[0].conj() * amp[2] + eb[1].conj() * amp[3],
            ];
            let p = alice[0].norm_sqr() + alice[1].norm_sqr();
            if p < 1e-15 {
                continue;
            }
            let post = TwoQubitState::product(alice, eb).unwrap();
            e += p * oracle_correlation(&post, a, b) / eve_dirs.len() as f64;
        }
    }
    e
}
