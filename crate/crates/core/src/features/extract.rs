//! Trace and vector files to feature rows.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{NodeId, PacketType, Schedule, TraceRecord, VectorSample, SAT_ZONE1};

use super::events::{aggregate_event_features, AggregationScope};
use super::flows::{flow_stats, segment_flows, FlowStats};
use super::label::{label_rows, Label};
use super::schema::{Dataset, FeatureRow, RowIdentity, SchemaKind};
use super::timediff::time_diffs;

/// Time range used for the flow rate denominators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FlowSpan {
    /// Flow statistics only see packets of the current analysis window.
    #[default]
    Window,
    /// Flow statistics cover the whole flow segment in the capture.
    Lifetime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub scope: AggregationScope,
    /// Satellite whose traffic the flow-based layout captures.
    pub vantage: NodeId,
    /// Analysis window length in seconds.
    pub window: f64,
    pub flow_span: FlowSpan,
    /// Trailing horizon for the vantage throughput, in seconds.
    pub throughput_horizon: f64,
    /// Span used for single-packet flow rates.
    pub single_packet_span: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            scope: AggregationScope::Network,
            vantage: SAT_ZONE1,
            window: 30.0,
            flow_span: FlowSpan::Window,
            throughput_horizon: 1.0,
            single_packet_span: 0.1,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be > 0, got {v}")))
            }
        };
        positive("window", self.window)?;
        positive("throughput_horizon", self.throughput_horizon)?;
        positive("single_packet_span", self.single_packet_span)?;
        self.vantage.validate()
    }
}

fn check_time_order(trace: &[TraceRecord]) -> Result<()> {
    if let Some(i) = trace.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(Error::Data(format!(
            "trace is not time-ordered at record {} ({} after {})",
            i + 1,
            trace[i + 1].time,
            trace[i].time
        )));
    }
    Ok(())
}

type StreamKey = (NodeId, NodeId, PacketType);

fn stream_key(r: &TraceRecord) -> StreamKey {
    (r.sender, r.receiver, r.packet_type)
}

/// Full-surveillance rows, one per trace record, labeled Normal.
pub fn extract_full(
    trace: &[TraceRecord],
    vectors: &[VectorSample],
    sim_end: f64,
    scope: AggregationScope,
) -> Result<Vec<FeatureRow>> {
    check_time_order(trace)?;
    let times: Vec<f64> = trace.iter().map(|r| r.time).collect();
    let keys: Vec<StreamKey> = trace.iter().map(stream_key).collect();
    let diffs = time_diffs(&times, &keys);
    let stats = aggregate_event_features(trace, vectors, sim_end, scope)?;
    Ok(trace
        .iter()
        .zip(diffs.into_iter().zip(stats))
        .map(|(r, (d, s))| {
            let mut features = Vec::with_capacity(19);
            features.extend_from_slice(&d);
            features.extend_from_slice(&[
                r.size as f64,
                r.channel as f64,
                r.duration,
                r.packet_type.code(),
            ]);
            features.extend_from_slice(&s);
            FeatureRow {
                identity: RowIdentity::from_record(r, SchemaKind::FullSurveillance),
                features,
                label: Label::Normal,
            }
        })
        .collect())
}

/// Records sent or received by `vantage`, in trace order.
pub fn vantage_records(trace: &[TraceRecord], vantage: NodeId) -> Vec<&TraceRecord> {
    trace
        .iter()
        .filter(|r| r.sender == vantage || r.receiver == vantage)
        .collect()
}

/// Flow statistics of every record in `records`, computed over the records given.
pub fn flow_features(records: &[&TraceRecord], single_packet_span: f64) -> Vec<FlowStats> {
    let (assignment, keys) = segment_flows(records);
    let mut members: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); keys.len()];
    for (r, &seg) in records.iter().zip(&assignment) {
        members[seg].0.push(r.time);
        members[seg].1.push(r.size as f64);
    }
    let stats: Vec<FlowStats> = members
        .iter()
        .map(|(t, s)| flow_stats(t, s, single_packet_span))
        .collect();
    assignment.iter().map(|&seg| stats[seg]).collect()
}

/// Flow-layout features of one analysis window's records (time-ordered).
///
/// Everything is computed from the window's records alone, which is what an
/// online detector sees when the window closes.
pub fn window_features(records: &[&TraceRecord], config: &ExtractConfig) -> Vec<Vec<f64>> {
    let times: Vec<f64> = records.iter().map(|r| r.time).collect();
    let keys: Vec<StreamKey> = records.iter().map(|r| stream_key(r)).collect();
    let diffs = time_diffs(&times, &keys);
    let throughput = trailing_throughput(records, config.throughput_horizon);
    let flows = flow_features(records, config.single_packet_span);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut f = Vec::with_capacity(14);
            f.extend_from_slice(&diffs[i]);
            f.extend_from_slice(&[
                r.size as f64,
                r.channel as f64,
                r.packet_type.code(),
                r.snir,
                throughput[i],
            ]);
            f.extend_from_slice(&flows[i]);
            f
        })
        .collect()
}

/// Bits per second over `(t - horizon, t]` up to and including each record.
fn trailing_throughput(records: &[&TraceRecord], horizon: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(records.len());
    let mut left = 0;
    let mut bits = 0.0;
    for (i, r) in records.iter().enumerate() {
        bits += r.size as f64 * 8.0;
        while records[left].time <= r.time - horizon {
            bits -= records[left].size as f64 * 8.0;
            left += 1;
        }
        debug_assert!(left <= i);
        out.push(bits / horizon);
    }
    out
}

/// Window index of a timestamp.
pub fn window_index(time: f64, window: f64) -> u64 {
    (time / window).floor().max(0.0) as u64
}

/// Flow-layout rows for the vantage satellite, labeled Normal.
pub fn extract_vantage(trace: &[TraceRecord], config: &ExtractConfig) -> Result<Vec<FeatureRow>> {
    config.validate()?;
    check_time_order(trace)?;
    let captured = vantage_records(trace, config.vantage);
    let mut rows = Vec::with_capacity(captured.len());
    let mut start = 0;
    while start < captured.len() {
        let w = window_index(captured[start].time, config.window);
        let end = start
            + captured[start..]
                .iter()
                .position(|r| window_index(r.time, config.window) != w)
                .unwrap_or(captured.len() - start);
        let chunk = &captured[start..end];
        for (r, features) in chunk.iter().zip(window_features(chunk, config)) {
            rows.push(FeatureRow {
                identity: RowIdentity::from_record(r, SchemaKind::Vantage),
                features,
                label: Label::Normal,
            });
        }
        start = end;
    }
    if config.flow_span == FlowSpan::Lifetime {
        let whole = flow_features(&captured, config.single_packet_span);
        for (row, stats) in rows.iter_mut().zip(whole) {
            row.features[9..14].copy_from_slice(&stats);
        }
    }
    Ok(rows)
}

/// Extracts and labels a dataset in the requested layout.
///
/// The full-surveillance layout needs the vector statistics.
pub fn build_dataset(
    schema: SchemaKind,
    trace: &[TraceRecord],
    vectors: Option<&[VectorSample]>,
    sim_end: f64,
    schedule: &Schedule,
    config: &ExtractConfig,
) -> Result<Dataset> {
    let mut rows = match schema {
        SchemaKind::FullSurveillance => {
            let vectors = vectors.ok_or_else(|| {
                Error::config("vectors", "the full-surveillance layout needs vector statistics")
            })?;
            extract_full(trace, vectors, sim_end, config.scope)?
        }
        SchemaKind::Vantage => extract_vantage(trace, config)?,
    };
    label_rows(&mut rows, schedule)?;
    Dataset::new(schema, rows)
}

/// Count of rows per window, for diagnostics.
pub fn window_sizes(rows: &[FeatureRow], window: f64) -> HashMap<u64, usize> {
    let mut out = HashMap::new();
    for r in rows {
        *out.entry(window_index(r.identity.send_time, window)).or_insert(0) += 1;
    }
    out
}
