//! Continue/abort decisions over a finished session.

use serde::{Deserialize, Serialize};

use crate::bell::BellVerdict;

use super::record::{AbortReason, ProtocolId, SessionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionMetric {
    /// Mismatch fraction of the sifted keys.
    SiftedQber,
    /// Fraction of all transmitted slots without a correct sifted bit.
    Aggregate,
}

impl DecisionMetric {
    pub fn name(self) -> &'static str {
        match self {
            DecisionMetric::SiftedQber => "sifted-qber",
            DecisionMetric::Aggregate => "aggregate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionRule {
    pub metric: DecisionMetric,
    /// Abort when the metric is strictly greater than this.
    pub threshold: f64,
}

impl Default for DecisionRule {
    /// Aggregate error rate with threshold 0.5.
    fn default() -> Self {
        Self::aggregate(0.5)
    }
}

impl DecisionRule {
    pub fn aggregate(threshold: f64) -> Self {
        Self {
            metric: DecisionMetric::Aggregate,
            threshold,
        }
    }

    pub fn sifted_qber(threshold: f64) -> Self {
        Self {
            metric: DecisionMetric::SiftedQber,
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Continue,
    Abort(AbortReason),
}

impl Decision {
    pub fn is_continue(&self) -> bool {
        matches!(self, Decision::Continue)
    }

    pub fn into_abort(self) -> Option<AbortReason> {
        match self {
            Decision::Continue => None,
            Decision::Abort(r) => Some(r),
        }
    }
}

fn threshold_check(metric: DecisionMetric, value: f64, threshold: f64) -> Decision {
    if value > threshold {
        Decision::Abort(AbortReason::ErrorThreshold {
            metric: metric.name().to_string(),
            value,
            threshold,
        })
    } else {
        Decision::Continue
    }
}

/// Prepare-and-measure decision: abort iff the rule's metric is strictly
/// above its threshold. Without sifted bits the sifted QBER is undefined and
/// the session aborts.
pub fn bb84_decision(record: &SessionRecord, rule: &DecisionRule) -> Decision {
    let stats = &record.statistics;
    match rule.metric {
        DecisionMetric::Aggregate => threshold_check(rule.metric, stats.aggregate_error_rate, rule.threshold),
        DecisionMetric::SiftedQber => match stats.qber {
            Some(q) => threshold_check(rule.metric, q, rule.threshold),
            None => Decision::Abort(AbortReason::NoSiftedKey),
        },
    }
}

/// Bell-test decision for pair protocols: continue only on a violation
/// beyond the statistical band.
pub fn bell_decision(record: &SessionRecord) -> Decision {
    match record.statistics.chsh {
        Some(est) if est.verdict == BellVerdict::Violated => Decision::Continue,
        Some(est) => Decision::Abort(AbortReason::BellNotViolated {
            s: est.s,
            sigma: est.sigma,
        }),
        None => Decision::Abort(AbortReason::BellNotViolated {
            s: f64::NAN,
            sigma: f64::NAN,
        }),
    }
}

/// Decision for any protocol. Pair protocols must pass the Bell test first;
/// a sifted-QBER rule then also applies to their key. The aggregate metric
/// only applies to prepare-and-measure protocols.
pub fn session_decision(record: &SessionRecord, rule: &DecisionRule) -> Decision {
    if record.statistics.sifted_len == 0 {
        return Decision::Abort(AbortReason::NoSiftedKey);
    }
    match record.protocol {
        ProtocolId::Bb84 | ProtocolId::Sarg04 => bb84_decision(record, rule),
        ProtocolId::E91 | ProtocolId::Agm06 => {
            let bell = bell_decision(record);
            if !bell.is_continue() || rule.metric == DecisionMetric::Aggregate {
                return bell;
            }
            bb84_decision(record, rule)
        }
    }
}

impl SessionRecord {
    /// Records the outcome of `decision` in the abort field.
    pub fn apply_decision(&mut self, decision: Decision) {
        self.abort = decision.into_abort();
    }

    pub fn is_aborted(&self) -> bool {
        self.abort.is_some()
    }
}
