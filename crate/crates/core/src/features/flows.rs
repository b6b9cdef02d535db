//! Flow identity and per-flow rate and inter-arrival statistics.

use std::collections::{BTreeMap, HashMap};
use std::net::Ipv4Addr;

use crate::simcore::{PacketType, TraceRecord};

/// Five-tuple naming a flow. Ordering is lexicographic over the fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub ip_src: Ipv4Addr,
    pub port_src: u16,
    pub ip_dst: Ipv4Addr,
    pub port_dst: u16,
    pub packet_type: PacketType,
}

impl FlowKey {
    pub fn of(r: &TraceRecord) -> Self {
        FlowKey {
            ip_src: r.ip_src,
            port_src: r.port_src,
            ip_dst: r.ip_dst,
            port_dst: r.port_dst,
            packet_type: r.packet_type,
        }
    }
}

impl std::fmt::Display for FlowKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}:{}>{}:{}/{}",
            self.ip_src, self.port_src, self.ip_dst, self.port_dst, self.packet_type
        )
    }
}

/// `[FlowBytes_s, FlowPackets_s, meanT_b_2P, maxT_b_2P, minT_b_2P]`.
pub type FlowStats = [f64; 5];

/// Statistics of one flow from its packet times (ascending) and sizes.
///
/// With fewer than two packets the span falls back to `single_packet_span`
/// and the inter-arrival statistics are 0.
pub fn flow_stats(times: &[f64], sizes: &[f64], single_packet_span: f64) -> FlowStats {
    debug_assert_eq!(times.len(), sizes.len());
    let n = times.len();
    if n == 0 {
        return [0.0; 5];
    }
    let total: f64 = sizes.iter().sum();
    let span = times[n - 1] - times[0];
    let span = if n < 2 || span <= 0.0 { single_packet_span } else { span };
    let (mut sum, mut max, mut min) = (0.0, f64::NEG_INFINITY, f64::INFINITY);
    for w in times.windows(2) {
        let gap = w[1] - w[0];
        sum += gap;
        max = max.max(gap);
        min = min.min(gap);
    }
    let (mean, max, min) = if n < 2 { (0.0, 0.0, 0.0) } else { (sum / (n - 1) as f64, max, min) };
    [total / span, n as f64 / span, mean, max, min]
}

/// Assigns every record to a flow segment.
///
/// A segment is a run of one five-tuple with no intervening ICMP
/// unreachable travelling back from its destination to its source.
/// Returns, per record, an index into the returned segment list.
pub fn segment_flows(records: &[&TraceRecord]) -> (Vec<usize>, Vec<FlowKey>) {
    // (dst ip, src ip) -> count of unreachables seen so far
    let mut epochs: HashMap<(Ipv4Addr, Ipv4Addr), u32> = HashMap::new();
    let mut ids: BTreeMap<(FlowKey, u32), usize> = BTreeMap::new();
    let mut keys = Vec::new();
    let mut assignment = Vec::with_capacity(records.len());
    for r in records {
        let key = FlowKey::of(r);
        let epoch = if key.packet_type == PacketType::Udp {
            epochs.get(&(key.ip_src, key.ip_dst)).copied().unwrap_or(0)
        } else {
            0
        };
        let next = ids.len();
        let id = *ids.entry((key, epoch)).or_insert_with(|| {
            keys.push(key);
            next
        });
        assignment.push(id);
        if key.packet_type == PacketType::Icmp {
            // The unreachable goes dst -> src of the interrupted flow.
            *epochs.entry((key.ip_dst, key.ip_src)).or_insert(0) += 1;
        }
    }
    (assignment, keys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definition_arithmetic() {
        let s = flow_stats(&[0.0, 0.5, 1.5], &[100.0, 200.0, 300.0], 0.1);
        assert_eq!(s, [400.0, 2.0, 0.75, 1.0, 0.5]);
    }

    #[test]
    fn single_packet_uses_the_fallback_span() {
        let s = flow_stats(&[3.0], &[50.0], 0.1);
        assert_eq!(s, [500.0, 10.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_packets() {
        let s = flow_stats(&[1.0, 1.25], &[10.0, 10.0], 0.1);
        assert_eq!(&s[2..], &[0.25, 0.25, 0.25]);
    }
}
