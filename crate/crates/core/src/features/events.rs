//! Per-event aggregation of vector statistics.
//!
//! For an event of module `m` (the record's sender), each statistic is summed
//! over the samples that fall in `[previous event of m, next event of m]`.
//! The first event of a module starts the interval at 0, the last one ends it
//! at the simulation end.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{NodeId, Stat, TraceRecord, VectorSample};

/// Which nodes' samples enter the sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AggregationScope {
    /// Every node in the run.
    #[default]
    Network,
    /// Only the sender and receiver of the event.
    Endpoints,
}

impl std::str::FromStr for AggregationScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "network" => Ok(AggregationScope::Network),
            "endpoints" => Ok(AggregationScope::Endpoints),
            other => Err(Error::config("aggregation_scope", format!("unknown scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    time: f64,
    node: NodeId,
    value: f64,
}

/// Samples split by statistic, each list in time order.
pub struct SampleIndex {
    by_stat: Vec<Vec<Sample>>,
}

impl SampleIndex {
    pub fn new(vectors: &[VectorSample]) -> Result<Self> {
        let mut by_stat = vec![Vec::new(); Stat::ALL.len()];
        for s in vectors {
            if !s.time.is_finite() || !s.value.is_finite() {
                return Err(Error::Data(format!("non-finite {} sample of {} at t={}", s.stat, s.node, s.time)));
            }
            by_stat[s.stat.index()].push(Sample { time: s.time, node: s.node, value: s.value });
        }
        let missing: Vec<&str> = Stat::ALL
            .iter()
            .filter(|s| by_stat[s.index()].is_empty())
            .map(|s| s.name())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!("vector statistics missing: {}", missing.join(", "))));
        }
        for list in &mut by_stat {
            // Stable, so same-time samples keep their file order.
            list.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
        Ok(SampleIndex { by_stat })
    }

    /// Sum of `stat` over samples with `lo <= time <= hi`, optionally
    /// restricted to `nodes`. Samples are added in time order.
    pub fn sum(&self, stat: Stat, lo: f64, hi: f64, nodes: Option<&[NodeId]>) -> f64 {
        let list = &self.by_stat[stat.index()];
        let start = list.partition_point(|s| s.time < lo);
        let mut total = 0.0;
        for s in list[start..].iter().take_while(|s| s.time <= hi) {
            if nodes.map_or(true, |n| n.contains(&s.node)) {
                total += s.value;
            }
        }
        total
    }
}

/// `[previous, next]` event time of each record's module.
pub fn event_intervals(trace: &[TraceRecord], sim_end: f64) -> Vec<(f64, f64)> {
    let mut by_module: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for (i, r) in trace.iter().enumerate() {
        by_module.entry(r.sender).or_default().push(i);
    }
    let mut out = vec![(0.0, sim_end); trace.len()];
    for events in by_module.values_mut() {
        events.sort_by(|&a, &b| trace[a].time.total_cmp(&trace[b].time).then(a.cmp(&b)));
        for (k, &i) in events.iter().enumerate() {
            let lo = if k > 0 { trace[events[k - 1]].time } else { 0.0 };
            let hi = events.get(k + 1).map_or(sim_end, |&j| trace[j].time);
            out[i] = (lo, hi);
        }
    }
    out
}

/// One value per statistic (in `Stat::ALL` order) for every trace record.
pub fn aggregate_event_features(
    trace: &[TraceRecord],
    vectors: &[VectorSample],
    sim_end: f64,
    scope: AggregationScope,
) -> Result<Vec<[f64; 11]>> {
    let index = SampleIndex::new(vectors)?;
    let intervals = event_intervals(trace, sim_end);
    Ok(trace
        .iter()
        .zip(intervals)
        .map(|(r, (lo, hi))| {
            let endpoints = [r.sender, r.receiver];
            let nodes = match scope {
                AggregationScope::Network => None,
                AggregationScope::Endpoints => Some(&endpoints[..]),
            };
            let mut values = [0.0; 11];
            for stat in Stat::ALL {
                values[stat.index()] = index.sum(stat, lo, hi, nodes);
            }
            values
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{run_scenario, ScenarioConfig};

    fn sample(node: NodeId, stat: Stat, time: f64, value: f64) -> VectorSample {
        VectorSample { node, stat, time, value }
    }

    /// Every stat present once at a far-away time so the index accepts the input.
    fn padding() -> Vec<VectorSample> {
        Stat::ALL.iter().map(|&s| sample(NodeId::satellite(2), s, 1e9, 100.0)).collect()
    }

    #[test]
    fn interval_sum_across_nodes() {
        let a = NodeId::end_user(0);
        let b = NodeId::end_user(1);
        let mut v = vec![
            sample(a, Stat::RcvdPk, 9.0, 2.0),
            sample(b, Stat::RcvdPk, 10.0, 1.0),
            sample(a, Stat::RcvdPk, 11.0, 3.0),
            sample(a, Stat::RcvdPk, 12.5, 50.0),
        ];
        v.extend(padding());
        let index = SampleIndex::new(&v).unwrap();
        assert_eq!(index.sum(Stat::RcvdPk, 8.0, 12.0, None), 6.0);
        assert_eq!(index.sum(Stat::SentPk, 8.0, 12.0, None), 0.0);
        assert_eq!(index.sum(Stat::RcvdPk, 8.0, 12.0, Some(&[b])), 1.0);
    }

    #[test]
    fn lone_event_spans_the_whole_run() {
        let out = run_scenario(&ScenarioConfig::preset(1, 1.0, 3).unwrap()).unwrap();
        let intervals = event_intervals(&out.trace, out.duration);
        let mut counts: HashMap<NodeId, usize> = HashMap::new();
        for r in &out.trace {
            *counts.entry(r.sender).or_default() += 1;
        }
        for (r, iv) in out.trace.iter().zip(&intervals) {
            if counts[&r.sender] == 1 {
                assert_eq!(*iv, (0.0, out.duration));
            }
        }
        let values =
            aggregate_event_features(&out.trace, &out.vectors, out.duration, AggregationScope::Network).unwrap();
        let whole = SampleIndex::new(&out.vectors).unwrap();
        for (r, (iv, vals)) in out.trace.iter().zip(intervals.iter().zip(&values)) {
            if *iv == (0.0, out.duration) {
                assert_eq!(vals[0], whole.sum(Stat::RcvdPk, 0.0, out.duration, None), "{}", r.sender);
            }
        }
    }

    #[test]
    fn missing_stat_is_a_schema_error() {
        let v: Vec<_> = padding().into_iter().filter(|s| s.stat != Stat::Snir).collect();
        match SampleIndex::new(&v) {
            Err(Error::Schema(msg)) => assert!(msg.contains("snir"), "{msg}"),
            other => panic!("unexpected {:?}", other.err()),
        }
    }
}
