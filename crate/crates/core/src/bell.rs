//! Correlation estimates, CHSH statistics and the no-signalling check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::BellError;
use crate::quantum::{exact_joint_distribution, JointDistribution, MeasurementSetting, Spin, TwoQubitState};

/// Boundary of the CHSH inequality for local hidden-variable models.
pub const LHV_BOUND: f64 = 2.0;

/// Statistical band (in standard deviations) for Bell verdicts.
pub const VERDICT_SIGMAS: f64 = 3.0;

/// Outcome counts for one setting pair. Weights are `f64` so exact
/// probability vectors can be tallied alongside sampled counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl PairCounts {
    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn add(&mut self, alice: Spin, bob: Spin, weight: f64) {
        match (alice, bob) {
            (Spin::Plus, Spin::Plus) => self.pp += weight,
            (Spin::Plus, Spin::Minus) => self.pm += weight,
            (Spin::Minus, Spin::Plus) => self.mp += weight,
            (Spin::Minus, Spin::Minus) => self.mm += weight,
        }
    }

    pub fn correlation(&self) -> Option<f64> {
        let t = self.total();
        (t > 0.0).then(|| (self.pp + self.mm - self.pm - self.mp) / t)
    }

    pub fn p_equal(&self) -> Option<f64> {
        let t = self.total();
        (t > 0.0).then(|| (self.pp + self.mm) / t)
    }

    pub fn alice_plus(&self) -> Option<f64> {
        let t = self.total();
        (t > 0.0).then(|| (self.pp + self.pm) / t)
    }

    pub fn bob_plus(&self) -> Option<f64> {
        let t = self.total();
        (t > 0.0).then(|| (self.pp + self.mp) / t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TallyEntry {
    pub alice: MeasurementSetting,
    pub bob: MeasurementSetting,
    #[serde(flatten)]
    pub counts: PairCounts,
}

/// `N±±(p, q)` for every setting pair seen. Tallies merge by addition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<TallyEntry>", into = "Vec<TallyEntry>")]
pub struct CorrelationTally {
    cells: BTreeMap<(MeasurementSetting, MeasurementSetting), PairCounts>,
}

impl From<Vec<TallyEntry>> for CorrelationTally {
    fn from(entries: Vec<TallyEntry>) -> Self {
        let mut t = CorrelationTally::default();
        for e in entries {
            let c = t.cells.entry((e.alice, e.bob)).or_default();
            c.pp += e.counts.pp;
            c.pm += e.counts.pm;
            c.mp += e.counts.mp;
            c.mm += e.counts.mm;
        }
        t
    }
}

impl From<CorrelationTally> for Vec<TallyEntry> {
    fn from(t: CorrelationTally) -> Self {
        t.entries().collect()
    }
}

impl CorrelationTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, p: MeasurementSetting, q: MeasurementSetting, alice: Spin, bob: Spin) {
        self.cells.entry((p, q)).or_default().add(alice, bob, 1.0);
    }

    /// Adds `weight` times an exact outcome distribution.
    pub fn add_distribution(
        &mut self,
        p: MeasurementSetting,
        q: MeasurementSetting,
        dist: &JointDistribution,
        weight: f64,
    ) {
        let c = self.cells.entry((p, q)).or_default();
        c.pp += weight * dist.pp;
        c.pm += weight * dist.pm;
        c.mp += weight * dist.mp;
        c.mm += weight * dist.mm;
    }

    pub fn merge(&mut self, other: &CorrelationTally) {
        for (key, counts) in &other.cells {
            let c = self.cells.entry(*key).or_default();
            c.pp += counts.pp;
            c.pm += counts.pm;
            c.mp += counts.mp;
            c.mm += counts.mm;
        }
    }

    pub fn counts(&self, p: MeasurementSetting, q: MeasurementSetting) -> Option<&PairCounts> {
        self.cells.get(&(p, q))
    }

    pub fn entries(&self) -> impl Iterator<Item = TallyEntry> + '_ {
        self.cells
            .iter()
            .map(|(&(alice, bob), &counts)| TallyEntry { alice, bob, counts })
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn nonempty(&self, p: MeasurementSetting, q: MeasurementSetting) -> Result<&PairCounts, BellError> {
        self.counts(p, q)
            .filter(|c| c.total() > 0.0)
            .ok_or(BellError::EmptySettingPair {
                alice: p.angle(),
                bob: q.angle(),
            })
    }
}

/// `E(p, q) = (n++ + n−− − n+− − n−+) / total`.
pub fn estimate_correlation(
    tally: &CorrelationTally,
    p: MeasurementSetting,
    q: MeasurementSetting,
) -> Result<f64, BellError> {
    let c = tally.nonempty(p, q)?;
    Ok(c.correlation().expect("nonempty"))
}

/// `S = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)`. Local models satisfy `|S| ≤ 2`.
pub fn chsh_value(e_ab: f64, e_ab2: f64, e_a2b: f64, e_a2b2: f64) -> f64 {
    e_ab + e_ab2 + e_a2b - e_a2b2
}

/// `S = P(a=b|1,1) + P(a=b|1,2) + P(a=b|2,1) − P(a≠b|2,2)`, the probability
/// form used to report AGM06 sessions.
///
/// Note this combination is not a Bell functional: perfectly correlated
/// classical outcomes give `S = 3`. Security decisions use [`chsh_value`] on
/// the same four setting pairs instead.
pub fn agm06_s(p_eq_11: f64, p_eq_12: f64, p_eq_21: f64, p_neq_22: f64) -> f64 {
    p_eq_11 + p_eq_12 + p_eq_21 - p_neq_22
}

/// The two settings per side entering a CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: MeasurementSetting,
    pub a_prime: MeasurementSetting,
    pub b: MeasurementSetting,
    pub b_prime: MeasurementSetting,
}

impl ChshSettings {
    /// Setting pairs in the order `(a,b), (a,b′), (a′,b), (a′,b′)`.
    pub fn pairs(&self) -> [(MeasurementSetting, MeasurementSetting); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }

    /// Exact `S` for a quantum state at these settings.
    pub fn exact_s(&self, state: &TwoQubitState) -> f64 {
        let [e1, e2, e3, e4] = self
            .pairs()
            .map(|(p, q)| exact_joint_distribution(state, p, q).correlation());
        chsh_value(e1, e2, e3, e4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellVerdict {
    /// `|S| − 2` exceeds the statistical band.
    Violated,
    /// `|S|` is within the band around 2.
    Inconclusive,
    /// `|S|` sits below 2 by more than the band.
    NotViolated,
}

impl BellVerdict {
    pub fn from_estimate(s: f64, sigma: f64) -> Self {
        let margin = s.abs() - LHV_BOUND;
        let band = VERDICT_SIGMAS * sigma;
        if margin > band {
            BellVerdict::Violated
        } else if margin < -band {
            BellVerdict::NotViolated
        } else {
            BellVerdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub s: f64,
    pub sigma: f64,
    pub verdict: BellVerdict,
}

/// `S` with its standard error `σ = √Σ (1 − E²)/n` from sampled counts.
pub fn estimate_chsh(tally: &CorrelationTally, settings: &ChshSettings) -> Result<ChshEstimate, BellError> {
    let mut es = [0.0; 4];
    let mut var = 0.0;
    for (e, (p, q)) in es.iter_mut().zip(settings.pairs()) {
        let c = tally.nonempty(p, q)?;
        *e = c.correlation().expect("nonempty");
        var += (1.0 - *e * *e) / c.total();
    }
    let s = chsh_value(es[0], es[1], es[2], es[3]);
    let sigma = var.sqrt();
    Ok(ChshEstimate {
        s,
        sigma,
        verdict: BellVerdict::from_estimate(s, sigma),
    })
}

/// The AGM06 probability-form statistic with its standard error.
pub fn estimate_agm06_s(tally: &CorrelationTally, settings: &ChshSettings) -> Result<(f64, f64), BellError> {
    let mut ps = [0.0; 4];
    let mut var = 0.0;
    for (i, (p, q)) in settings.pairs().into_iter().enumerate() {
        let c = tally.nonempty(p, q)?;
        let eq = c.p_equal().expect("nonempty");
        ps[i] = if i == 3 { 1.0 - eq } else { eq };
        var += ps[i] * (1.0 - ps[i]) / c.total();
    }
    Ok((agm06_s(ps[0], ps[1], ps[2], ps[3]), var.sqrt()))
}

/// Largest `|S|` reachable by deterministic local strategies (all 16
/// assignments of ±1 to `a, a′, b, b′`).
pub fn lhv_chsh_max() -> f64 {
    deterministic_strategies()
        .map(|[a, a2, b, b2]| chsh_value(a * b, a * b2, a2 * b, a2 * b2).abs())
        .fold(0.0, f64::max)
}

/// All 16 deterministic outcome assignments `[a, a′, b, b′]`.
pub fn deterministic_strategies() -> impl Iterator<Item = [f64; 4]> {
    (0u8..16).map(|m| {
        let bit = |k: u8| if m >> k & 1 == 0 { 1.0 } else { -1.0 };
        [bit(0), bit(1), bit(2), bit(3)]
    })
}

/// One comparison of a party's marginal across two settings of the other party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalComparison {
    /// `true` if Alice's marginal is compared (Alice's setting shared).
    pub alice_side: bool,
    pub shared: MeasurementSetting,
    pub other_1: MeasurementSetting,
    pub other_2: MeasurementSetting,
    pub deviation: f64,
    /// Binomial standard error of the difference, from pooled estimates.
    pub sigma: f64,
}

/// Every marginal comparison the tally supports, on both sides.
pub fn marginal_comparisons(tally: &CorrelationTally) -> Vec<MarginalComparison> {
    let entries: Vec<TallyEntry> = tally.entries().filter(|e| e.counts.total() > 0.0).collect();
    let mut out = Vec::new();
    for (i, x) in entries.iter().enumerate() {
        for y in &entries[i + 1..] {
            if x.alice == y.alice {
                out.push(compare(true, x.alice, x, y, |c| c.alice_plus()));
            }
            if x.bob == y.bob {
                out.push(compare(false, x.bob, x, y, |c| c.bob_plus()));
            }
        }
    }
    out
}

fn compare(
    alice_side: bool,
    shared: MeasurementSetting,
    x: &TallyEntry,
    y: &TallyEntry,
    marginal: impl Fn(&PairCounts) -> Option<f64>,
) -> MarginalComparison {
    let (px, py) = (
        marginal(&x.counts).expect("nonempty"),
        marginal(&y.counts).expect("nonempty"),
    );
    let (nx, ny) = (x.counts.total(), y.counts.total());
    let pooled = (px * nx + py * ny) / (nx + ny);
    let sigma = (pooled * (1.0 - pooled) * (1.0 / nx + 1.0 / ny)).sqrt();
    let (other_1, other_2) = if alice_side { (x.bob, y.bob) } else { (x.alice, y.alice) };
    MarginalComparison {
        alice_side,
        shared,
        other_1,
        other_2,
        deviation: (px - py).abs(),
        sigma,
    }
}

/// Largest change in one party's outcome marginal caused by the other
/// party's setting choice.
pub fn no_signalling_deviation(tally: &CorrelationTally) -> Result<f64, BellError> {
    let comparisons = marginal_comparisons(tally);
    if comparisons.is_empty() {
        return Err(BellError::NoSharedSetting);
    }
    Ok(comparisons.iter().map(|c| c.deviation).fold(0.0, f64::max))
}
