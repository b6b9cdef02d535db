use std::collections::BTreeMap;
use std::fmt;

use super::config::{Mode, WindowConfig};
use crate::error::{Error, Result};
use crate::features::{FlowKey, Label};
use crate::simcore::TraceRecord;

/// Evidence behind an alert.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub global_fraction: f64,
    /// Flow with the largest fraction of the class.
    pub flow: FlowKey,
    pub flow_fraction: f64,
    pub class_packets: usize,
    pub window_packets: usize,
    pub flow_packets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alert {
    pub window_index: u64,
    pub start: f64,
    pub end: f64,
    pub mode: Mode,
    pub class: Label,
    pub evidence: Evidence,
}

pub const ALERT_HEADER: &str = "window_index,start,end,mode,class,global_fraction,flow_key,flow_fraction";

impl fmt::Display for Alert {
    /// One alert log line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.window_index,
            self.start,
            self.end,
            self.mode,
            self.class.name(),
            self.evidence.global_fraction,
            self.evidence.flow,
            self.evidence.flow_fraction
        )
    }
}

/// Per-class packet counts of one classified window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSummary {
    pub index: u64,
    pub start: f64,
    pub end: f64,
    pub packets: usize,
    /// Packets per class index.
    pub class_counts: [usize; 4],
    /// Per flow: packet count and packets per class.
    pub flows: BTreeMap<FlowKey, (usize, [usize; 4])>,
}

impl WindowSummary {
    /// Counts classes over `records`, whose predicted class indices are
    /// `predictions`.
    pub fn new(index: u64, period: f64, records: &[TraceRecord], predictions: &[usize]) -> Result<Self> {
        if records.len() != predictions.len() {
            return Err(Error::dimension("window predictions", records.len(), predictions.len()));
        }
        let mut class_counts = [0; 4];
        let mut flows: BTreeMap<FlowKey, (usize, [usize; 4])> = BTreeMap::new();
        for (r, &c) in records.iter().zip(predictions) {
            if c >= 4 {
                return Err(Error::Label(format!("class index {c} outside 0..4")));
            }
            class_counts[c] += 1;
            let e = flows.entry(FlowKey::of(r)).or_default();
            e.0 += 1;
            e.1[c] += 1;
        }
        Ok(WindowSummary {
            index,
            start: index as f64 * period,
            end: (index + 1) as f64 * period,
            packets: records.len(),
            class_counts,
            flows,
        })
    }

    /// Fraction of window packets per class; zeros for an empty window.
    pub fn global_fractions(&self) -> [f64; 4] {
        let n = self.packets.max(1) as f64;
        self.class_counts.map(|c| c as f64 / n)
    }

    /// Flow with the largest fraction of `class`; ties go to the smaller key.
    pub fn worst_flow(&self, class: usize) -> Option<(&FlowKey, f64, usize)> {
        let mut best: Option<(&FlowKey, f64, usize)> = None;
        for (k, (n, counts)) in &self.flows {
            let f = counts[class] as f64 / *n as f64;
            if best.is_none_or(|(_, b, _)| f > b) {
                best = Some((k, f, *n));
            }
        }
        best
    }

    /// Alerts of one mode for this window.
    pub fn alerts(&self, config: &WindowConfig, mode: Mode) -> Vec<Alert> {
        let mut out = Vec::new();
        if self.packets == 0 {
            return out;
        }
        let global = self.global_fractions();
        for label in [Label::UdpFlood, Label::Rain, Label::Jamming] {
            let c = label.index();
            if self.class_counts[c] == 0 {
                continue;
            }
            let Some((flow, flow_fraction, flow_packets)) = self.worst_flow(c) else { continue };
            let raise = match mode {
                Mode::Safe => true,
                Mode::Normal => config
                    .thresholds
                    .for_class(label)
                    .is_some_and(|t| t.holds(global[c], flow_fraction)),
            };
            if raise {
                out.push(Alert {
                    window_index: self.index,
                    start: self.start,
                    end: self.end,
                    mode,
                    class: label,
                    evidence: Evidence {
                        global_fraction: global[c],
                        flow: *flow,
                        flow_fraction,
                        class_packets: self.class_counts[c],
                        window_packets: self.packets,
                        flow_packets,
                    },
                });
            }
        }
        out
    }
}

/// Records of one window, handed from the ingester to the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedWindow {
    pub index: u64,
    /// Sorted by time.
    pub records: Vec<TraceRecord>,
}

/// Buffers records into windows keyed on their timestamps.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    period: f64,
    slack: f64,
    open: BTreeMap<u64, Vec<TraceRecord>>,
    watermark: f64,
    pub ingested: u64,
    pub dropped: u64,
}

impl WindowBuffer {
    pub fn new(period: f64, slack: f64) -> Self {
        WindowBuffer { period, slack, open: BTreeMap::new(), watermark: f64::NEG_INFINITY, ingested: 0, dropped: 0 }
    }

    fn index(&self, t: f64) -> u64 {
        (t / self.period).floor().max(0.0) as u64
    }

    /// Adds a record and returns the windows that can no longer change.
    ///
    /// A record older than the newest seen minus the slack is dropped.
    pub fn ingest(&mut self, record: TraceRecord) -> Vec<ClosedWindow> {
        self.ingested += 1;
        if !record.time.is_finite() || record.time < self.watermark - self.slack {
            self.dropped += 1;
            return Vec::new();
        }
        self.watermark = self.watermark.max(record.time);
        let idx = self.index(record.time);
        self.open.entry(idx).or_default().push(record);
        self.close_until(self.watermark - self.slack)
    }

    /// Closes windows that ended at or before `t`.
    fn close_until(&mut self, t: f64) -> Vec<ClosedWindow> {
        let mut out = Vec::new();
        while let Some((&idx, _)) = self.open.first_key_value() {
            if (idx + 1) as f64 * self.period > t {
                break;
            }
            let records = self.open.remove(&idx).expect("key just seen");
            out.push(close(idx, records));
        }
        out
    }

    /// Closes every remaining window.
    pub fn flush(&mut self) -> Vec<ClosedWindow> {
        std::mem::take(&mut self.open).into_iter().map(|(i, r)| close(i, r)).collect()
    }
}

fn close(index: u64, mut records: Vec<TraceRecord>) -> ClosedWindow {
    records.sort_by(|a, b| a.time.total_cmp(&b.time));
    ClosedWindow { index, records }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::config::Thresholds;
    use crate::simcore::{NodeId, Outcome, PacketType, SAT_ZONE1};
    use std::net::Ipv4Addr;

    pub(crate) fn record(t: f64, port_src: u16) -> TraceRecord {
        TraceRecord {
            time: t,
            packet_id: 0,
            sender: NodeId::end_user(1),
            receiver: SAT_ZONE1,
            ip_src: Ipv4Addr::new(10, 1, 0, 2),
            port_src,
            ip_dst: Ipv4Addr::new(10, 2, 0, 12),
            port_dst: 9000,
            channel: 1,
            frequency: 1616e6,
            size: 500,
            packet_type: PacketType::Udp,
            hop_index: 0,
            outcome: Outcome::Delivered,
            snir: 1e5,
            duration: 0.001,
        }
    }

    #[test]
    fn window_closes_on_the_next_window_record() {
        let mut b = WindowBuffer::new(30.0, 0.5);
        for t in [1.0, 10.0, 29.0] {
            assert!(b.ingest(record(t, 1)).is_empty());
        }
        let closed = b.ingest(record(31.0, 1));
        assert_eq!(closed.len(), 1);
        assert_eq!((closed[0].index, closed[0].records.len()), (0, 3));
    }

    #[test]
    fn late_records_within_slack_land_in_their_window() {
        let mut b = WindowBuffer::new(30.0, 0.5);
        assert!(b.ingest(record(29.0, 1)).is_empty());
        assert!(b.ingest(record(30.2, 1)).is_empty());
        // 0.4 s late: still window 0, which stays open until t >= 30.5.
        assert!(b.ingest(record(29.8, 1)).is_empty());
        let closed = b.ingest(record(30.6, 1));
        assert_eq!(closed[0].records.iter().map(|r| r.time).collect::<Vec<_>>(), vec![29.0, 29.8]);
        // 1 s late: dropped.
        assert!(b.ingest(record(29.6, 1)).is_empty());
        assert_eq!(b.dropped, 1);
        let rest = b.flush();
        assert_eq!(rest.len(), 1);
        assert_eq!(rest[0].records.len(), 2);
    }

    fn window(flood_in_flow: usize, other_flood: usize, total: usize) -> WindowSummary {
        let mut records = Vec::new();
        let mut preds = Vec::new();
        for i in 0..50 {
            records.push(record(i as f64 * 0.1, 7));
            preds.push(if i < flood_in_flow { 1 } else { 0 });
        }
        for i in 50..total {
            records.push(record(i as f64 * 0.01, 8 + (i % 10) as u16));
            preds.push(if i - 50 < other_flood { 1 } else { 0 });
        }
        WindowSummary::new(0, 30.0, &records, &preds).unwrap()
    }

    #[test]
    fn flood_rule() {
        let s = window(40, 260, 1000);
        assert_eq!(s.global_fractions()[1], 0.3);
        let (_, f, n) = s.worst_flow(1).unwrap();
        assert_eq!((f, n), (0.8, 50));
        let c = WindowConfig::default();
        let normal = s.alerts(&c, Mode::Normal);
        assert_eq!(normal.len(), 1);
        assert_eq!(normal[0].class, Label::UdpFlood);
        assert_eq!(normal[0].evidence.flow.port_src, 7);
    }

    #[test]
    fn single_jamming_packet_is_safe_mode_only() {
        let records: Vec<TraceRecord> = (0..1000).map(|i| record(i as f64 * 0.01, (i % 20) as u16)).collect();
        let mut preds = vec![0; 1000];
        preds[17] = 3;
        let s = WindowSummary::new(2, 30.0, &records, &preds).unwrap();
        assert!(s.alerts(&WindowConfig::default(), Mode::Normal).is_empty());
        let safe = s.alerts(&WindowConfig::default(), Mode::Safe);
        assert_eq!(safe.len(), 1);
        assert_eq!(safe[0].class, Label::Jamming);
        assert_eq!((safe[0].start, safe[0].end), (60.0, 90.0));
    }

    #[test]
    fn all_normal_means_no_alerts() {
        let records: Vec<TraceRecord> = (0..10).map(|i| record(i as f64, 1)).collect();
        let s = WindowSummary::new(0, 30.0, &records, &[0; 10]).unwrap();
        let c = WindowConfig { thresholds: Thresholds::default(), ..WindowConfig::default() };
        assert!(s.alerts(&c, Mode::Normal).is_empty());
        assert!(s.alerts(&c, Mode::Safe).is_empty());
        assert!(WindowSummary::new(0, 30.0, &[], &[]).unwrap().alerts(&c, Mode::Safe).is_empty());
    }

    #[test]
    fn alert_line_format() {
        let s = window(40, 260, 1000);
        let line = s.alerts(&WindowConfig::default(), Mode::Normal)[0].to_string();
        assert_eq!(line, "0,0,30,Normal,UDP_Flood_attack,0.3,10.1.0.2:7>10.2.0.12:9000/UDP,0.8");
        assert_eq!(ALERT_HEADER.split(',').count(), line.split(',').count());
    }
}
