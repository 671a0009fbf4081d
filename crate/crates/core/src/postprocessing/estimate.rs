use rand::seq::index::sample;
use rand::Rng;

use crate::error::PostprocessError;

/// Result of publicly comparing a random sample of the sifted keys.
#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub qber: f64,
    pub sample_size: usize,
    pub errors: usize,
    /// Keys with the sampled positions removed.
    pub key_a: Vec<u8>,
    pub key_b: Vec<u8>,
}

/// Compares `max(1, round(fraction·n))` random positions and discards them.
pub fn estimate_qber<R: Rng + ?Sized>(
    key_a: &[u8],
    key_b: &[u8],
    sample_fraction: f64,
    rng: &mut R,
) -> Result<QberEstimate, PostprocessError> {
    if key_a.len() != key_b.len() {
        return Err(PostprocessError::LengthMismatch(key_a.len(), key_b.len()));
    }
    if key_a.is_empty() {
        return Err(PostprocessError::EmptyKey);
    }
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(PostprocessError::SampleFraction(sample_fraction));
    }
    let n = key_a.len();
    let k = ((sample_fraction * n as f64).round() as usize).clamp(1, n);
    let mut sampled = vec![false; n];
    for i in sample(rng, n, k) {
        sampled[i] = true;
    }
    let errors = (0..n).filter(|&i| sampled[i] && key_a[i] != key_b[i]).count();
    let keep = |key: &[u8]| {
        key.iter()
            .zip(&sampled)
            .filter(|(_, &s)| !s)
            .map(|(&b, _)| b)
            .collect::<Vec<u8>>()
    };
    Ok(QberEstimate {
        qber: errors as f64 / k as f64,
        sample_size: k,
        errors,
        key_a: keep(key_a),
        key_b: keep(key_b),
    })
}
