//! Fitness, precision and the conformance report.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{build_graph, ContextIndex};
use crate::ocel::{Activity, EventLog};
use crate::ocpn::AcceptingOcpn;
use crate::replay::{replay_all, ReplayConfig};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("the log has no events")]
    EmptyLog,
    #[error(transparent)]
    Config(#[from] crate::replay::ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDiagnostic {
    pub id: String,
    pub context_digest: String,
    pub en_log: Vec<String>,
    pub en_model: Vec<String>,
    pub replayable: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
    pub reached_final: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    #[serde(with = "as_f64")]
    pub fitness: BigRational,
    #[serde(with = "as_opt_f64")]
    pub precision: Option<BigRational>,
    pub num_events: usize,
    pub num_replayable: usize,
    #[serde(with = "as_f64")]
    pub skipped_fraction: BigRational,
    /// Some replay hit `max_states`; affected events carry partial sets.
    pub truncated: bool,
    pub per_event: Vec<EventDiagnostic>,
    pub config: ReplayConfig,
}

impl ConformanceReport {
    /// `fitness=1.00 precision=0.89 skipped=0%`
    pub fn summary(&self, decimals: u32) -> String {
        let precision = self
            .precision
            .as_ref()
            .map(|p| round_half_up(p, decimals))
            .unwrap_or_else(|| "undefined".into());
        let skipped = &self.skipped_fraction * BigRational::from_integer(BigInt::from(100));
        format!(
            "fitness={} precision={} skipped={}%",
            round_half_up(&self.fitness, decimals),
            precision,
            round_half_up(&skipped, 0)
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Decimal rendering of a non-negative rational, rounding half up.
pub fn round_half_up(value: &BigRational, decimals: u32) -> String {
    let scale = BigInt::from(10u32).pow(decimals);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let scaled = (value * BigRational::from_integer(scale.clone()) + half).floor().to_integer();
    if decimals == 0 {
        return scaled.to_string();
    }
    let int = &scaled / &scale;
    let frac = (&scaled % &scale).to_string();
    format!("{int}.{frac:0>width$}", width = decimals as usize)
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn labels(set: &BTreeSet<Activity>) -> Vec<String> {
    set.iter().map(|a| a.to_string()).collect()
}

/// Replays every context group once and assembles both metrics.
pub fn check(log: &EventLog, net: &AcceptingOcpn, cfg: &ReplayConfig) -> Result<ConformanceReport, MetricsError> {
    cfg.validate()?;
    if log.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let graph = build_graph(log);
    let index = ContextIndex::new(log, &graph);
    let groups = replay_all(net, log, &graph, &index, cfg);

    let n = log.len();
    let mut per_event: Vec<Option<EventDiagnostic>> = vec![None; n];
    let mut fitness_sum = BigRational::zero();
    let mut precision_sum = BigRational::zero();
    let mut num_replayable = 0usize;
    let mut truncated = false;

    for (group, replay) in index.groups().iter().zip(&groups) {
        let (context, members) = group;
        let en_log: BTreeSet<Activity> = members.iter().map(|&e| log.event(e).activity.clone()).collect();
        let en_model = &replay.outcome.enabled;
        let common = en_log.intersection(en_model).count();
        let replayable = !en_model.is_empty();
        truncated |= replay.outcome.truncated;

        let k = members.len();
        fitness_sum += ratio(common * k, en_log.len());
        if replayable {
            num_replayable += k;
            precision_sum += ratio(common * k, en_model.len());
        }
        let digest = context.digest();
        for (e, own) in &replay.per_event {
            per_event[*e] = Some(EventDiagnostic {
                id: log.event(*e).id.clone(),
                context_digest: digest.clone(),
                en_log: labels(&en_log),
                en_model: labels(en_model),
                replayable,
                truncated: replay.outcome.truncated,
                reached_final: own.reached_final,
            });
        }
    }

    let precision = (num_replayable > 0).then(|| precision_sum / BigRational::from_integer(BigInt::from(num_replayable)));
    Ok(ConformanceReport {
        fitness: fitness_sum / BigRational::from_integer(BigInt::from(n)),
        precision,
        num_events: n,
        num_replayable,
        skipped_fraction: BigRational::one() - ratio(num_replayable, n),
        truncated,
        per_event: per_event.into_iter().map(|d| d.expect("every event belongs to a group")).collect(),
        config: cfg.clone(),
    })
}

pub fn fitness(log: &EventLog, net: &AcceptingOcpn, cfg: &ReplayConfig) -> Result<BigRational, MetricsError> {
    Ok(check(log, net, cfg)?.fitness)
}

/// `None` when no event is replayable.
pub fn precision(log: &EventLog, net: &AcceptingOcpn, cfg: &ReplayConfig) -> Result<Option<BigRational>, MetricsError> {
    Ok(check(log, net, cfg)?.precision)
}

mod as_f64 {
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(r.to_f64().unwrap_or(f64::NAN))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let v = f64::deserialize(d)?;
        BigRational::from_float(v).ok_or_else(|| D::Error::custom("non-finite metric"))
    }
}

mod as_opt_f64 {
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_f64(r.to_f64().unwrap_or(f64::NAN)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<f64>::deserialize(d)?
            .map(|v| BigRational::from_float(v).ok_or_else(|| D::Error::custom("non-finite metric")))
            .transpose()
    }
}

/// Lossy view of a rational for display and comparisons with tolerances.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
