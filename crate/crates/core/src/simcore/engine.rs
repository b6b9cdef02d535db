//! Single-threaded discrete-event engine.
//!
//! Events are ordered by `(time, sequence)`; the sequence number is assigned
//! at scheduling time, so equal-time events run in the order they were
//! scheduled. Every random draw comes from a per-source ChaCha stream derived
//! from the scenario seed, which makes traffic generation independent of
//! network outcomes.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, Span};
use super::node::{NodeId, NodeKind, NUM_END_USERS, ZONE_SIZE};
use super::radio::{compute_snir, distance, Emission};
use super::topology::{build_topology, jam_partner, Topology};
use super::trace::{Outcome, PacketType, Stat, TraceRecord, VectorSample};
use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const ICMP_UNREACHABLE_SIZE: u32 = 56;

/// Everything one simulation run produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOutput {
    pub trace: Vec<TraceRecord>,
    pub vectors: Vec<VectorSample>,
    /// Simulated seconds covered by the run.
    pub duration: f64,
}

/// Runs one scenario to completion. Identical configs give identical output.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimOutput> {
    let topology = build_topology(config)?;
    Simulator::new(config, topology)?.run()
}

#[derive(Debug, Clone)]
struct Packet {
    id: u64,
    src: NodeId,
    dst: NodeId,
    port_src: u16,
    port_dst: u16,
    size: u32,
    kind: PacketType,
    hop_index: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrafficClass {
    Benign,
    Flood,
    Jam,
}

/// An application flow generator bound to one node.
struct Source {
    node: NodeId,
    class: TrafficClass,
    rng: ChaCha8Rng,
    peer: NodeId,
    port_src: u16,
    port_dst: u16,
    expires: f64,
}

struct Interface {
    from: NodeId,
    to: NodeId,
    busy: bool,
    queue: VecDeque<Packet>,
}

struct Transmission {
    sender: NodeId,
    receiver: NodeId,
    channel: u16,
    start: f64,
    end: f64,
    power: f64,
    record: usize,
    packet: Packet,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Generate(usize),
    TxEnd(usize),
    Arrival(usize),
    Sample,
}

struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Per-node accumulators for the current sampling interval.
#[derive(Default, Clone)]
struct Bin {
    counters: [f64; Stat::ALL.len()],
    snir_sum: f64,
    snir_count: u64,
    bits_received: f64,
}

struct Simulator<'a> {
    config: &'a ScenarioConfig,
    topology: Topology,
    node_slot: HashMap<NodeId, usize>,
    positions: Vec<[f64; 2]>,
    interfaces: Vec<Interface>,
    interface_of: HashMap<(NodeId, NodeId), usize>,
    channel_txs: HashMap<u16, Vec<usize>>,
    txs: Vec<Transmission>,
    sources: Vec<Source>,
    heap: BinaryHeap<Event>,
    seq: u64,
    next_packet_id: u64,
    trace: Vec<TraceRecord>,
    vectors: Vec<VectorSample>,
    bins: Vec<Bin>,
    last_sample: f64,
    max_airtime: f64,
    events: u64,
}

impl<'a> Simulator<'a> {
    fn new(config: &'a ScenarioConfig, topology: Topology) -> Result<Self> {
        let node_slot: HashMap<NodeId, usize> = topology
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, i))
            .collect();
        let positions = topology
            .nodes
            .iter()
            .map(|n| config.position(*n))
            .collect::<Result<Vec<_>>>()?;
        let mut interfaces = Vec::new();
        let mut interface_of = HashMap::new();
        for link in &topology.links {
            for (from, to) in [(link.a, link.b), (link.b, link.a)] {
                interface_of.insert((from, to), interfaces.len());
                interfaces.push(Interface {
                    from,
                    to,
                    busy: false,
                    queue: VecDeque::new(),
                });
            }
        }
        let largest = [config.normal_size.hi, config.attack_size.hi, config.jam_size.hi]
            .into_iter()
            .fold(ICMP_UNREACHABLE_SIZE as f64, f64::max);
        let bins = vec![Bin::default(); topology.nodes.len()];
        let mut sim = Simulator {
            config,
            topology,
            node_slot,
            positions,
            interfaces,
            interface_of,
            channel_txs: HashMap::new(),
            txs: Vec::new(),
            sources: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            next_packet_id: 0,
            trace: Vec::new(),
            vectors: Vec::new(),
            bins,
            last_sample: 0.0,
            max_airtime: largest.ceil() * 8.0 / config.link_bitrate,
            events: 0,
        };
        sim.install_sources()?;
        Ok(sim)
    }

    fn install_sources(&mut self) -> Result<()> {
        let c = self.config;
        let add = |sim: &mut Self, node: NodeId, class: TrafficClass, peer: NodeId| {
            let stream = sim.sources.len() as u64 + 1;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            rng.set_stream(stream);
            sim.sources.push(Source {
                node,
                class,
                rng,
                peer,
                port_src: 0,
                port_dst: 0,
                expires: f64::NEG_INFINITY,
            });
        };
        for i in 0..NUM_END_USERS {
            let eu = NodeId::end_user(i);
            add(self, eu, TrafficClass::Benign, eu);
        }
        if c.scenario == 2 {
            for &eu in &c.affected_terminals {
                add(self, eu, TrafficClass::Flood, eu);
            }
        }
        for k in 0..c.num_jamusers {
            let user = NodeId::jam_user(k);
            let craft = jam_partner(c, user)?;
            add(self, user, TrafficClass::Jam, craft);
            add(self, craft, TrafficClass::Jam, user);
        }
        for s in 0..self.sources.len() {
            let interval = self.interval_of(self.sources[s].class);
            let first = self.sources[s].rng.gen_range(0.0..interval.hi);
            if first < c.duration {
                self.schedule(first, EventKind::Generate(s));
            }
        }
        let mut k = 1u64;
        loop {
            let t = k as f64 * c.stat_sample_interval;
            if t >= c.duration {
                break;
            }
            self.schedule(t, EventKind::Sample);
            k += 1;
        }
        Ok(())
    }

    fn interval_of(&self, class: TrafficClass) -> Span {
        match class {
            TrafficClass::Benign => self.config.normal_send_interval,
            TrafficClass::Flood => self.config.attack_send_interval,
            TrafficClass::Jam => self.config.jam_send_interval,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn bump(&mut self, node: NodeId, stat: Stat, by: f64) {
        let slot = self.node_slot[&node];
        self.bins[slot].counters[stat.index()] += by;
    }

    fn run(mut self) -> Result<SimOutput> {
        while let Some(event) = self.heap.pop() {
            self.events += 1;
            if self.events > self.config.max_events {
                return Err(Error::Simulation {
                    time: event.time,
                    message: format!("event budget of {} exhausted", self.config.max_events),
                });
            }
            match event.kind {
                EventKind::Generate(s) => self.on_generate(event.time, s)?,
                EventKind::TxEnd(iface) => self.on_tx_end(event.time, iface)?,
                EventKind::Arrival(tx) => self.on_arrival(event.time, tx)?,
                EventKind::Sample => self.emit_sample(event.time),
            }
        }
        self.emit_sample(self.config.duration);
        Ok(SimOutput {
            trace: self.trace,
            vectors: self.vectors,
            duration: self.config.duration,
        })
    }

    fn on_generate(&mut self, now: f64, s: usize) -> Result<()> {
        let c = self.config;
        let class = self.sources[s].class;
        if class != TrafficClass::Jam && now >= self.sources[s].expires {
            self.renew_flow(s, now);
        }
        let size_range = match class {
            TrafficClass::Benign => c.normal_size,
            TrafficClass::Flood => c.attack_size,
            TrafficClass::Jam => c.jam_size,
        };
        let interval = self.interval_of(class);
        let src = &mut self.sources[s];
        let size = src.rng.gen_range(size_range.lo as u32..=size_range.hi as u32);
        let gap = src.rng.gen_range(interval.lo..=interval.hi);
        let packet = Packet {
            id: self.next_packet_id,
            src: src.node,
            dst: src.peer,
            port_src: src.port_src,
            port_dst: src.port_dst,
            size,
            kind: PacketType::Udp,
            hop_index: 0,
        };
        let node = src.node;
        self.next_packet_id += 1;
        self.bump(node, Stat::RcvdPkFromHl, 1.0);
        self.send(now, node, packet)?;
        if now + gap < c.duration {
            self.schedule(now + gap, EventKind::Generate(s));
        }
        Ok(())
    }

    fn renew_flow(&mut self, s: usize, now: f64) {
        let c = self.config;
        let src = &mut self.sources[s];
        let me = src.node.index;
        match src.class {
            TrafficClass::Benign => {
                let mut peer = src.rng.gen_range(0..NUM_END_USERS - 1);
                if peer >= me {
                    peer += 1;
                }
                src.peer = NodeId::end_user(peer);
                src.port_src = c.benign_src_ports[src.rng.gen_range(0..c.benign_src_ports.len())];
                src.port_dst = c.benign_dst_ports[src.rng.gen_range(0..c.benign_dst_ports.len())];
            }
            TrafficClass::Flood => {
                // Flood targets sit across the inter-satellite path.
                let other_zone = if me < ZONE_SIZE { ZONE_SIZE } else { 0 };
                src.peer = NodeId::end_user(other_zone + src.rng.gen_range(0..ZONE_SIZE));
                src.port_src = c.malicious_src_port.unwrap_or(0);
                src.port_dst = c.malicious_dst_port.unwrap_or(0);
            }
            TrafficClass::Jam => {}
        }
        src.expires = now + c.flow_lifetime;
    }

    /// Hands a packet to the interface toward its next hop.
    fn send(&mut self, now: f64, at: NodeId, packet: Packet) -> Result<()> {
        let next = self.topology.next_hop(at, packet.dst)?;
        let iface = self.interface_of[&(at, next)];
        if !self.interfaces[iface].busy {
            self.start_tx(now, iface, packet)
        } else if self.interfaces[iface].queue.len() < self.config.queue_capacity {
            self.interfaces[iface].queue.push_back(packet);
            Ok(())
        } else {
            self.record_queue_drop(now, at, next, packet)
        }
    }

    fn base_record(&self, now: f64, sender: NodeId, receiver: NodeId, p: &Packet) -> Result<TraceRecord> {
        let link = self
            .topology
            .link(sender, receiver)
            .ok_or_else(|| Error::Simulation {
                time: now,
                message: format!("no link {sender} -> {receiver}"),
            })?;
        Ok(TraceRecord {
            time: now,
            packet_id: p.id,
            sender,
            receiver,
            ip_src: ip(p.src),
            port_src: p.port_src,
            ip_dst: ip(p.dst),
            port_dst: p.port_dst,
            channel: link.channel,
            frequency: link.frequency_hz,
            size: p.size,
            packet_type: p.kind,
            hop_index: p.hop_index,
            outcome: Outcome::Delivered,
            snir: 0.0,
            duration: 0.0,
        })
    }

    fn record_queue_drop(&mut self, now: f64, at: NodeId, next: NodeId, packet: Packet) -> Result<()> {
        let mut record = self.base_record(now, at, next, &packet)?;
        record.outcome = Outcome::DroppedQueue;
        self.trace.push(record);
        self.bump(at, Stat::SentPk, 1.0);
        self.bump(at, Stat::DropPkByQueue, 1.0);
        Ok(())
    }

    fn start_tx(&mut self, now: f64, iface: usize, packet: Packet) -> Result<()> {
        let (from, to) = (self.interfaces[iface].from, self.interfaces[iface].to);
        let airtime = packet.size as f64 * 8.0 / self.config.link_bitrate;
        let mut record = self.base_record(now, from, to, &packet)?;
        record.duration = airtime;
        let record_index = self.trace.len();
        let channel = record.channel;
        self.trace.push(record);

        let propagation = self.distance(from, to) / SPEED_OF_LIGHT;
        let tx = self.txs.len();
        self.txs.push(Transmission {
            sender: from,
            receiver: to,
            channel,
            start: now,
            end: now + airtime,
            power: self.tx_power(from),
            record: record_index,
            packet,
        });
        self.channel_txs.entry(channel).or_default().push(tx);
        self.interfaces[iface].busy = true;
        self.bump(from, Stat::SentPk, 1.0);
        self.bump(from, Stat::SentDownPk, 1.0);
        self.schedule(now + airtime, EventKind::TxEnd(iface));
        self.schedule(now + airtime + propagation, EventKind::Arrival(tx));
        Ok(())
    }

    fn on_tx_end(&mut self, now: f64, iface: usize) -> Result<()> {
        self.interfaces[iface].busy = false;
        if now < self.config.duration {
            if let Some(next) = self.interfaces[iface].queue.pop_front() {
                self.start_tx(now, iface, next)?;
            }
        }
        Ok(())
    }

    fn on_arrival(&mut self, now: f64, tx: usize) -> Result<()> {
        let snir = self.snir_of(tx).map_err(|e| Error::Simulation {
            time: now,
            message: e.to_string(),
        })?;
        let (receiver, size) = (self.txs[tx].receiver, self.txs[tx].packet.size);
        let slot = self.node_slot[&receiver];
        self.bins[slot].snir_sum += snir;
        self.bins[slot].snir_count += 1;

        let outcome = if snir < self.config.snir_success_threshold {
            Outcome::DroppedSnir
        } else {
            self.bump(receiver, Stat::RcvdPkFromLl, 1.0);
            self.bins[slot].bits_received += size as f64 * 8.0;
            self.accept(now, tx)?
        };
        let record = self.txs[tx].record;
        self.trace[record].snir = snir;
        self.trace[record].outcome = outcome;
        Ok(())
    }

    /// Handles a successfully decoded packet at the receiver.
    fn accept(&mut self, now: f64, tx: usize) -> Result<Outcome> {
        let receiver = self.txs[tx].receiver;
        let packet = self.txs[tx].packet.clone();
        if receiver != packet.dst {
            self.bump(receiver, Stat::RcvdPk, 1.0);
            if now < self.config.duration {
                let forwarded = Packet {
                    hop_index: packet.hop_index + 1,
                    ..packet
                };
                self.send(now, receiver, forwarded)?;
            }
            return Ok(Outcome::Delivered);
        }
        let listening = receiver.kind != NodeKind::EndUser
            || packet.kind == PacketType::Icmp
            || self.config.benign_dst_ports.contains(&packet.port_dst);
        if listening {
            self.bump(receiver, Stat::RcvdPk, 1.0);
            self.bump(receiver, Stat::PassedUpPk, 1.0);
            return Ok(Outcome::Delivered);
        }
        self.bump(receiver, Stat::DroppedPkWrongPort, 1.0);
        if now < self.config.duration {
            let icmp = Packet {
                id: self.next_packet_id,
                src: receiver,
                dst: packet.src,
                port_src: 0,
                port_dst: 0,
                size: ICMP_UNREACHABLE_SIZE,
                kind: PacketType::Icmp,
                hop_index: 0,
            };
            self.next_packet_id += 1;
            self.send(now, receiver, icmp)?;
        }
        Ok(Outcome::DroppedWrongPort)
    }

    fn snir_of(&self, tx: usize) -> Result<f64> {
        let t = &self.txs[tx];
        let signal = Emission::new(
            t.power,
            self.distance(t.sender, t.receiver),
            self.exponent(t.sender, t.receiver),
        );
        let mut interferers = Vec::new();
        if let Some(list) = self.channel_txs.get(&t.channel) {
            let horizon = t.start - self.max_airtime;
            for &other in list.iter().rev() {
                let o = &self.txs[other];
                if o.start < horizon {
                    break;
                }
                if other == tx || o.sender == t.receiver {
                    continue;
                }
                if o.start < t.end && o.end > t.start {
                    interferers.push(Emission::new(
                        o.power,
                        self.distance(o.sender, t.receiver),
                        self.exponent(o.sender, t.receiver),
                    ));
                }
            }
        }
        compute_snir(&signal, &interferers, self.config.noise_floor, self.config.min_distance)
    }

    fn exponent(&self, a: NodeId, b: NodeId) -> f64 {
        if self.config.is_affected(a) || self.config.is_affected(b) {
            self.config.path_loss_exponent_affected
        } else {
            self.config.path_loss_exponent_default
        }
    }

    fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        distance(self.positions[self.node_slot[&a]], self.positions[self.node_slot[&b]])
    }

    fn tx_power(&self, node: NodeId) -> f64 {
        match node.kind {
            NodeKind::EndUser => self.config.tx_power_enduser,
            NodeKind::Satellite => self.config.tx_power_satellite,
            NodeKind::JamCraft => self.config.tx_power_jamcraft,
            NodeKind::JamUser => self.config.tx_power_jamuser,
        }
    }

    fn emit_sample(&mut self, time: f64) {
        let span = (time - self.last_sample).max(f64::MIN_POSITIVE);
        for (slot, node) in self.topology.nodes.iter().enumerate() {
            let queue_len: usize = self
                .interfaces
                .iter()
                .filter(|i| i.from == *node)
                .map(|i| i.queue.len())
                .sum();
            let bin = std::mem::take(&mut self.bins[slot]);
            for stat in Stat::ALL {
                let value = match stat {
                    Stat::DataQueueLen => queue_len as f64,
                    Stat::Snir if bin.snir_count > 0 => bin.snir_sum / bin.snir_count as f64,
                    Stat::Snir => 0.0,
                    Stat::Throughput => bin.bits_received / span,
                    counter => bin.counters[counter.index()],
                };
                self.vectors.push(VectorSample {
                    node: *node,
                    stat,
                    time,
                    value,
                });
            }
        }
        self.last_sample = time;
    }
}

fn ip(node: NodeId) -> Ipv4Addr {
    node.ip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::node::SAT_ZONE1;

    fn run(scenario: u8, duration: f64, seed: u64) -> SimOutput {
        run_scenario(&ScenarioConfig::preset(scenario, duration, seed).unwrap()).unwrap()
    }

    #[test]
    fn benign_traffic_respects_the_table_ranges() {
        let out = run(1, 10.0, 3);
        assert!(!out.trace.is_empty());
        for r in &out.trace {
            if r.packet_type == PacketType::Udp {
                assert!((40..=635).contains(&r.size), "{r:?}");
                assert!([2000, 9901, 9902].contains(&r.port_dst));
                assert!([5555, 3099, 2099].contains(&r.port_src));
            }
            assert!(r.time >= 0.0 && r.time <= 10.0);
            assert!(r.snir >= 0.0);
        }
    }

    #[test]
    fn flood_traffic_uses_malicious_ports_and_sizes() {
        let out = run(2, 5.0, 3);
        let flood: Vec<_> = out.trace.iter().filter(|r| r.port_src == 2001).collect();
        assert!(!flood.is_empty());
        for r in flood {
            assert_eq!(r.port_dst, 2002);
            assert!((4000..=5000).contains(&r.size));
        }
    }

    #[test]
    fn same_seed_same_output() {
        assert_eq!(run(4, 3.0, 11), run(4, 3.0, 11));
        assert_ne!(run(1, 3.0, 11).trace, run(1, 3.0, 12).trace);
    }

    #[test]
    fn hops_of_a_packet_have_increasing_times() {
        let out = run(1, 5.0, 5);
        let mut last: HashMap<u64, (u16, f64)> = HashMap::new();
        for r in &out.trace {
            if let Some((hop, t)) = last.get(&r.packet_id) {
                assert!(r.hop_index > *hop);
                assert!(r.time > *t);
            }
            last.insert(r.packet_id, (r.hop_index, r.time));
        }
    }

    #[test]
    fn counters_are_conserved() {
        let out = run(2, 4.0, 9);
        let mut sent: HashMap<NodeId, f64> = HashMap::new();
        let mut rcvd: HashMap<NodeId, f64> = HashMap::new();
        for s in &out.vectors {
            match s.stat {
                Stat::SentPk => *sent.entry(s.node).or_default() += s.value,
                Stat::RcvdPk => *rcvd.entry(s.node).or_default() += s.value,
                _ => {}
            }
        }
        for (node, total) in sent {
            let records = out.trace.iter().filter(|r| r.sender == node).count();
            assert_eq!(total as usize, records, "sentPK for {node}");
        }
        for (node, total) in rcvd {
            let records = out
                .trace
                .iter()
                .filter(|r| r.receiver == node && r.outcome == Outcome::Delivered)
                .count();
            assert_eq!(total as usize, records, "rcvdPK for {node}");
        }
    }

    #[test]
    fn flood_overloads_the_inter_satellite_queue() {
        let out = run(2, 5.0, 1);
        assert!(out
            .trace
            .iter()
            .any(|r| r.outcome == Outcome::DroppedQueue && r.sender == SAT_ZONE1));
        assert!(out.trace.iter().any(|r| r.packet_type == PacketType::Icmp));
    }

    #[test]
    fn samples_are_time_ordered_per_node_and_stat() {
        let out = run(1, 1.05, 2);
        let mut last: HashMap<(NodeId, Stat), f64> = HashMap::new();
        for s in &out.vectors {
            if let Some(t) = last.insert((s.node, s.stat), s.time) {
                assert!(s.time > t);
            }
            if s.stat.is_counter() {
                assert!(s.value >= 0.0);
            }
        }
        let times: Vec<f64> = out
            .vectors
            .iter()
            .filter(|s| s.node == SAT_ZONE1 && s.stat == Stat::SentPk)
            .map(|s| s.time)
            .collect();
        assert_eq!(times.len(), 11);
        assert_eq!(*times.last().unwrap(), 1.05);
    }

    #[test]
    fn event_budget_is_a_simulation_error() {
        let mut c = ScenarioConfig::preset(1, 5.0, 1).unwrap();
        c.max_events = 100;
        assert!(matches!(run_scenario(&c), Err(Error::Simulation { .. })));
    }
}
