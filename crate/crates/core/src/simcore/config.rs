//! Scenario parameterization and the flat `key = value` config file format.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::node::{NodeId, NodeKind, NUM_END_USERS, SAT_RELAY, SAT_ZONE1, SAT_ZONE2, ZONE_SIZE};
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Span { lo, hi }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::config(field, "bounds must be finite"));
        }
        if self.lo <= 0.0 {
            return Err(Error::config(field, format!("lower bound {} must be > 0", self.lo)));
        }
        if self.lo > self.hi {
            return Err(Error::config(
                field,
                format!("lower bound {} exceeds upper bound {}", self.lo, self.hi),
            ));
        }
        Ok(())
    }
}

/// Full parameterization of one traffic scenario.
///
/// Scenario ids: 1 benign, 2 UDP flood, 3 rain and thunderstorms, 4 jamming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: u8,
    /// Seconds of simulated time.
    pub duration: f64,
    pub seed: u64,
    /// Flood sources in scenario 2, rain-affected terminals in scenario 3.
    pub affected_terminals: Vec<NodeId>,
    pub benign_src_ports: Vec<u16>,
    pub benign_dst_ports: Vec<u16>,
    pub malicious_src_port: Option<u16>,
    pub malicious_dst_port: Option<u16>,
    /// Bytes.
    pub normal_size: Span,
    pub attack_size: Span,
    pub jam_size: Span,
    /// Seconds between consecutive sends of one flow.
    pub normal_send_interval: Span,
    pub attack_send_interval: Span,
    pub jam_send_interval: Span,
    pub path_loss_exponent_default: f64,
    pub path_loss_exponent_affected: f64,
    /// Watts.
    pub tx_power_satellite: f64,
    pub tx_power_enduser: f64,
    pub tx_power_jamcraft: f64,
    pub tx_power_jamuser: f64,
    pub num_jamcrafts: u16,
    pub num_jamusers: u16,
    /// Channels of the zone-1 ↔ relay and relay ↔ zone-2 satellite links.
    pub inter_satellite_channels: [u16; 2],
    /// Radio channel of every terminal and jamming ground agent.
    pub channels: BTreeMap<NodeId, u16>,
    /// 2-D coordinates in meters.
    pub positions: BTreeMap<NodeId, [f64; 2]>,
    pub terminal_frequency_hz: f64,
    pub inter_satellite_frequency_hz: f64,
    /// Watts.
    pub noise_floor: f64,
    pub snir_success_threshold: f64,
    pub stat_sample_interval: f64,
    /// Bits per second on every radio link.
    pub link_bitrate: f64,
    /// Packets per outgoing interface.
    pub queue_capacity: usize,
    /// Seconds before a terminal re-draws its peer and port pair.
    pub flow_lifetime: f64,
    /// Distances below this are clamped (meters).
    pub min_distance: f64,
    pub max_events: u64,
}

/// Preset sets for the two dataset variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Full-surveillance dataset, seconds-scale scenario intervals.
    Dataset1,
    /// Satellite-vantage dataset, hundreds-of-seconds intervals.
    Dataset2,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "dataset1" | "1" => Ok(Preset::Dataset1),
            "dataset2" | "2" => Ok(Preset::Dataset2),
            other => Err(Error::config("preset", format!("unknown preset `{other}`"))),
        }
    }

    /// `(scenario, start, end)` simulation-time intervals.
    pub fn intervals(self) -> [(u8, f64, f64); 4] {
        match self {
            Preset::Dataset1 => [
                (1, 0.0, 90.0),
                (2, 90.0, 123.0),
                (3, 124.0, 250.0),
                (4, 250.0, 330.0),
            ],
            Preset::Dataset2 => [
                (1, 0.0, 900.0),
                (2, 900.0, 1500.0),
                (4, 1500.0, 3000.0),
                (3, 3000.0, 4500.0),
            ],
        }
    }

    pub fn duration_of(self, scenario: u8) -> Option<f64> {
        self.intervals()
            .iter()
            .find(|(s, _, _)| *s == scenario)
            .map(|(_, start, end)| end - start)
    }
}

impl ScenarioConfig {
    /// Default configuration for a scenario with Table-style parameters.
    pub fn preset(scenario: u8, duration: f64, seed: u64) -> Result<Self> {
        if !(1..=4).contains(&scenario) {
            return Err(Error::config(
                "scenario",
                format!("unknown scenario id {scenario} (expected 1..4)"),
            ));
        }
        let mut channels = BTreeMap::new();
        let mut positions = BTreeMap::new();
        positions.insert(SAT_ZONE1, [0.0, 0.0]);
        positions.insert(SAT_RELAY, [20_000.0, 0.0]);
        positions.insert(SAT_ZONE2, [40_000.0, 0.0]);
        for i in 0..NUM_END_USERS {
            let node = NodeId::end_user(i);
            let slot = i % ZONE_SIZE;
            let center = if i < ZONE_SIZE { [0.0, 0.0] } else { [40_000.0, 0.0] };
            let radius = 150.0 + 40.0 * slot as f64;
            let angle = TAU * slot as f64 / ZONE_SIZE as f64;
            positions.insert(
                node,
                [center[0] + radius * angle.cos(), center[1] + radius * angle.sin()],
            );
            channels.insert(node, i);
        }

        let (affected, mal_src, mal_dst, num_jamcrafts, num_jamusers) = match scenario {
            2 => ((0..6).map(NodeId::end_user).collect(), Some(2001), Some(2002), 0, 0),
            3 => ((ZONE_SIZE..NUM_END_USERS).map(NodeId::end_user).collect(), None, None, 0, 0),
            4 => (Vec::new(), None, None, 1, 10),
            _ => (Vec::new(), None, None, 0, 0),
        };
        for c in 0..num_jamcrafts {
            positions.insert(NodeId::jam_craft(c), [900.0, 600.0 + 100.0 * c as f64]);
        }
        for k in 0..num_jamusers {
            let node = NodeId::jam_user(k);
            let angle = TAU * (k as f64 + 0.5) / num_jamusers as f64;
            positions.insert(node, [2_500.0 * angle.cos(), 2_500.0 * angle.sin()]);
            channels.insert(node, k % ZONE_SIZE);
        }

        Ok(ScenarioConfig {
            scenario,
            duration,
            seed,
            affected_terminals: affected,
            benign_src_ports: vec![5555, 3099, 2099],
            benign_dst_ports: vec![2000, 9901, 9902],
            malicious_src_port: mal_src,
            malicious_dst_port: mal_dst,
            normal_size: Span::new(40.0, 635.0),
            attack_size: Span::new(4000.0, 5000.0),
            jam_size: Span::new(12_000.0, 12_500.0),
            normal_send_interval: Span::new(0.100, 0.400),
            attack_send_interval: Span::new(0.020, 0.050),
            jam_send_interval: Span::new(0.100, 0.120),
            path_loss_exponent_default: 2.0,
            path_loss_exponent_affected: if scenario == 3 { 4.0 } else { 2.0 },
            tx_power_satellite: 7.0,
            tx_power_enduser: 7.0,
            tx_power_jamcraft: 12.0,
            tx_power_jamuser: 20.0,
            num_jamcrafts,
            num_jamusers,
            inter_satellite_channels: [30, 31],
            channels,
            positions,
            terminal_frequency_hz: 1616e6,
            inter_satellite_frequency_hz: 23180e6,
            noise_floor: 1e-10,
            snir_success_threshold: 10.0,
            stat_sample_interval: 0.1,
            link_bitrate: 1e6,
            queue_capacity: 100,
            flow_lifetime: 10.0,
            min_distance: 1.0,
            max_events: 200_000_000,
        })
    }

    /// Preset for a scenario using the dataset's interval length as duration.
    pub fn for_dataset(preset: Preset, scenario: u8, seed: u64) -> Result<Self> {
        let duration = preset.duration_of(scenario).ok_or_else(|| {
            Error::config("scenario", format!("unknown scenario id {scenario} (expected 1..4)"))
        })?;
        Self::preset(scenario, duration, seed)
    }

    pub fn is_affected(&self, node: NodeId) -> bool {
        self.affected_terminals.contains(&node)
    }

    pub fn position(&self, node: NodeId) -> Result<[f64; 2]> {
        self.positions
            .get(&node)
            .copied()
            .ok_or_else(|| Error::config("positions", format!("no position for {node}")))
    }

    pub fn channel(&self, node: NodeId) -> Result<u16> {
        self.channels
            .get(&node)
            .copied()
            .ok_or_else(|| Error::config("channel_map", format!("no channel for {node}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.scenario) {
            return Err(Error::config(
                "scenario",
                format!("unknown scenario id {} (expected 1..4)", self.scenario),
            ));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::config("duration", "must be > 0"));
        }
        self.normal_size.validate("normal_packets_size")?;
        self.attack_size.validate("attack_packets_size")?;
        self.jam_size.validate("jam_packets_size")?;
        self.normal_send_interval.validate("normal_transmission_rate")?;
        self.attack_send_interval.validate("attack_transmission_rate")?;
        self.jam_send_interval.validate("jam_transmission_rate")?;
        positive("path_loss", self.path_loss_exponent_default)?;
        positive("affected_path_loss", self.path_loss_exponent_affected)?;
        positive("satellite_transmitter_power", self.tx_power_satellite)?;
        positive("enduser_transmitter_power", self.tx_power_enduser)?;
        positive("jamcraft_transmitter_power", self.tx_power_jamcraft)?;
        positive("jamuser_transmitter_power", self.tx_power_jamuser)?;
        positive("terminal_frequency", self.terminal_frequency_hz)?;
        positive("inter_satellite_frequency", self.inter_satellite_frequency_hz)?;
        positive("stat_sample_interval", self.stat_sample_interval)?;
        positive("link_bitrate", self.link_bitrate)?;
        positive("flow_lifetime", self.flow_lifetime)?;
        positive("min_distance", self.min_distance)?;
        positive("snir_threshold", self.snir_success_threshold)?;
        if !(self.noise_floor.is_finite() && self.noise_floor >= 0.0) {
            return Err(Error::config("noise_floor", "must be finite and >= 0"));
        }
        if self.queue_capacity == 0 {
            return Err(Error::config("queue_capacity", "must be >= 1"));
        }
        if self.benign_src_ports.is_empty() {
            return Err(Error::config("benign_source_ports", "must not be empty"));
        }
        if self.benign_dst_ports.is_empty() {
            return Err(Error::config("benign_destination_ports", "must not be empty"));
        }
        for node in &self.affected_terminals {
            node.validate()?;
            if !node.is_end_user() {
                return Err(Error::config(
                    "affected_terminals",
                    format!("{node} is not an end user"),
                ));
            }
        }

        let malicious = self.malicious_src_port.is_some() || self.malicious_dst_port.is_some();
        if self.scenario == 2 {
            if self.malicious_src_port.is_none() {
                return Err(Error::config("malicious_source_port", "required by scenario 2"));
            }
            if self.malicious_dst_port.is_none() {
                return Err(Error::config("malicious_destination_port", "required by scenario 2"));
            }
            if self.affected_terminals.is_empty() {
                return Err(Error::config("affected_terminals", "scenario 2 needs infected terminals"));
            }
            if let Some(p) = self.malicious_dst_port {
                if self.benign_dst_ports.contains(&p) {
                    return Err(Error::config(
                        "malicious_destination_port",
                        "must differ from the benign destination ports",
                    ));
                }
            }
        } else if malicious {
            let field = if self.malicious_src_port.is_some() {
                "malicious_source_port"
            } else {
                "malicious_destination_port"
            };
            return Err(Error::config(
                field,
                format!("only scenario 2 may set malicious ports (scenario {})", self.scenario),
            ));
        }
        if self.scenario == 4 {
            if self.num_jamcrafts == 0 {
                return Err(Error::config("number_of_jamcrafts", "scenario 4 needs >= 1 JamCraft"));
            }
            if self.num_jamusers == 0 {
                return Err(Error::config(
                    "number_of_ground_agents",
                    "scenario 4 needs >= 1 JamUser",
                ));
            }
        }

        for i in 0..NUM_END_USERS {
            let node = NodeId::end_user(i);
            self.position(node)?;
            self.channel(node)?;
        }
        for sat in [SAT_ZONE1, SAT_ZONE2, SAT_RELAY] {
            self.position(sat)?;
        }
        for c in 0..self.num_jamcrafts {
            self.position(NodeId::jam_craft(c))?;
        }
        for k in 0..self.num_jamusers {
            let node = NodeId::jam_user(k);
            self.position(node)?;
            self.channel(node)?;
        }
        for (node, pos) in &self.positions {
            if !(pos[0].is_finite() && pos[1].is_finite()) {
                return Err(Error::config("positions", format!("{node} has a non-finite coordinate")));
            }
        }
        Ok(())
    }

    /// Parses a config file, starting from the scenario preset and applying
    /// every key. Unknown keys are errors.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), "expected `key = value`")
            })?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        let scenario = match entries.iter().find(|(k, _)| k == "scenario") {
            Some((_, v)) => parse_num::<u8>("scenario", v)?,
            None => return Err(Error::config("scenario", "missing required key")),
        };
        let mut config = Self::preset(scenario, 1.0, 0)?;
        for (key, value) in &entries {
            config.apply(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_kv_str(&text)
    }

    /// Applies one `key = value` override.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(node) = key.strip_prefix("position.") {
            let node: NodeId = node.parse().map_err(|_| Error::config(key, "bad node name"))?;
            let xy = parse_list::<f64>(key, value)?;
            if xy.len() != 2 {
                return Err(Error::config(key, "expected `x,y`"));
            }
            self.positions.insert(node, [xy[0], xy[1]]);
            return Ok(());
        }
        if let Some(node) = key.strip_prefix("channel.") {
            let node: NodeId = node.parse().map_err(|_| Error::config(key, "bad node name"))?;
            self.channels.insert(node, parse_num(key, value)?);
            return Ok(());
        }
        match key {
            "scenario" => {
                let scenario: u8 = parse_num(key, value)?;
                if scenario != self.scenario {
                    return Err(Error::config(key, "scenario cannot change after the preset is chosen"));
                }
            }
            "duration" => self.duration = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "affected_terminals" => {
                self.affected_terminals = if is_none(value) {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| {
                            let v = v.trim();
                            match v.parse::<u16>() {
                                Ok(i) => Ok(NodeId::end_user(i)),
                                Err(_) => v.parse::<NodeId>().map_err(|_| Error::config(key, format!("bad terminal `{v}`"))),
                            }
                        })
                        .collect::<Result<_>>()?
                };
            }
            "benign_source_ports" => self.benign_src_ports = parse_list(key, value)?,
            "benign_destination_ports" => self.benign_dst_ports = parse_list(key, value)?,
            "malicious_source_port" => self.malicious_src_port = parse_opt(key, value)?,
            "malicious_destination_port" => self.malicious_dst_port = parse_opt(key, value)?,
            "normal_packets_size" => self.normal_size = parse_span(key, value)?,
            "attack_packets_size" => self.attack_size = parse_span(key, value)?,
            "jam_packets_size" => self.jam_size = parse_span(key, value)?,
            "normal_transmission_rate" => self.normal_send_interval = parse_span(key, value)?,
            "attack_transmission_rate" => self.attack_send_interval = parse_span(key, value)?,
            "jam_transmission_rate" => self.jam_send_interval = parse_span(key, value)?,
            "path_loss" => self.path_loss_exponent_default = parse_num(key, value)?,
            "affected_path_loss" => self.path_loss_exponent_affected = parse_num(key, value)?,
            "satellite_transmitter_power" => self.tx_power_satellite = parse_num(key, value)?,
            "enduser_transmitter_power" => self.tx_power_enduser = parse_num(key, value)?,
            "jamcraft_transmitter_power" => self.tx_power_jamcraft = parse_num(key, value)?,
            "jamuser_transmitter_power" => self.tx_power_jamuser = parse_num(key, value)?,
            "number_of_jamcrafts" => self.num_jamcrafts = parse_num(key, value)?,
            "number_of_ground_agents" => self.num_jamusers = parse_num(key, value)?,
            "inter_satellite_communication_channel" => {
                let ch = parse_list::<u16>(key, value)?;
                if ch.len() != 2 {
                    return Err(Error::config(key, "expected two channels"));
                }
                self.inter_satellite_channels = [ch[0], ch[1]];
            }
            "terminal_frequency" => self.terminal_frequency_hz = parse_num(key, value)?,
            "inter_satellite_frequency" => self.inter_satellite_frequency_hz = parse_num(key, value)?,
            "noise_floor" => self.noise_floor = parse_num(key, value)?,
            "snir_threshold" => self.snir_success_threshold = parse_num(key, value)?,
            "stat_sample_interval" => self.stat_sample_interval = parse_num(key, value)?,
            "link_bitrate" => self.link_bitrate = parse_num(key, value)?,
            "queue_capacity" => self.queue_capacity = parse_num(key, value)?,
            "flow_lifetime" => self.flow_lifetime = parse_num(key, value)?,
            "min_distance" => self.min_distance = parse_num(key, value)?,
            "max_events" => self.max_events = parse_num(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Serializes every field in the same format `from_kv_str` accepts.
    pub fn to_kv_string(&self) -> String {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        }
        fn opt(v: Option<u16>) -> String {
            v.map_or_else(|| "/".to_string(), |p| p.to_string())
        }
        fn span(s: Span) -> String {
            format!("{},{}", s.lo, s.hi)
        }
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenario", self.scenario.to_string());
        kv("duration", self.duration.to_string());
        kv("seed", self.seed.to_string());
        kv(
            "affected_terminals",
            if self.affected_terminals.is_empty() {
                "/".into()
            } else {
                list(&self.affected_terminals.iter().map(|n| n.index).collect::<Vec<_>>())
            },
        );
        kv("benign_source_ports", list(&self.benign_src_ports));
        kv("benign_destination_ports", list(&self.benign_dst_ports));
        kv("malicious_source_port", opt(self.malicious_src_port));
        kv("malicious_destination_port", opt(self.malicious_dst_port));
        kv("normal_packets_size", span(self.normal_size));
        kv("attack_packets_size", span(self.attack_size));
        kv("jam_packets_size", span(self.jam_size));
        kv("normal_transmission_rate", span(self.normal_send_interval));
        kv("attack_transmission_rate", span(self.attack_send_interval));
        kv("jam_transmission_rate", span(self.jam_send_interval));
        kv("path_loss", self.path_loss_exponent_default.to_string());
        kv("affected_path_loss", self.path_loss_exponent_affected.to_string());
        kv("satellite_transmitter_power", self.tx_power_satellite.to_string());
        kv("enduser_transmitter_power", self.tx_power_enduser.to_string());
        kv("jamcraft_transmitter_power", self.tx_power_jamcraft.to_string());
        kv("jamuser_transmitter_power", self.tx_power_jamuser.to_string());
        kv("number_of_jamcrafts", self.num_jamcrafts.to_string());
        kv("number_of_ground_agents", self.num_jamusers.to_string());
        kv("inter_satellite_communication_channel", list(&self.inter_satellite_channels));
        kv("terminal_frequency", self.terminal_frequency_hz.to_string());
        kv("inter_satellite_frequency", self.inter_satellite_frequency_hz.to_string());
        kv("noise_floor", self.noise_floor.to_string());
        kv("snir_threshold", self.snir_success_threshold.to_string());
        kv("stat_sample_interval", self.stat_sample_interval.to_string());
        kv("link_bitrate", self.link_bitrate.to_string());
        kv("queue_capacity", self.queue_capacity.to_string());
        kv("flow_lifetime", self.flow_lifetime.to_string());
        kv("min_distance", self.min_distance.to_string());
        kv("max_events", self.max_events.to_string());
        for (node, ch) in &self.channels {
            kv(&format!("channel.{node}"), ch.to_string());
        }
        for (node, pos) in &self.positions {
            kv(&format!("position.{node}"), format!("{},{}", pos[0], pos[1]));
        }
        out
    }

    pub fn kind_count(&self, kind: NodeKind) -> u16 {
        match kind {
            NodeKind::EndUser => NUM_END_USERS,
            NodeKind::Satellite => 3,
            NodeKind::JamCraft => self.num_jamcrafts,
            NodeKind::JamUser => self.num_jamusers,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0 (got {v})")))
    }
}

fn is_none(v: &str) -> bool {
    matches!(v.trim(), "/" | "" | "none")
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse `{}`", v.trim())))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|item| parse_num(key, item)).collect()
}

fn parse_opt(key: &str, v: &str) -> Result<Option<u16>> {
    if is_none(v) {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_span(key: &str, v: &str) -> Result<Span> {
    let parts = parse_list::<f64>(key, v)?;
    match parts.as_slice() {
        [lo, hi] => Ok(Span::new(*lo, *hi)),
        _ => Err(Error::config(key, "expected `lo,hi`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in 1..=4 {
            ScenarioConfig::preset(s, 10.0, 1).unwrap().validate().unwrap();
        }
        assert!(ScenarioConfig::preset(5, 10.0, 1).is_err());
    }

    #[test]
    fn preset_values_follow_the_scenario_table() {
        let c = ScenarioConfig::preset(2, 33.0, 1).unwrap();
        assert_eq!(c.affected_terminals.len(), 6);
        assert_eq!((c.malicious_src_port, c.malicious_dst_port), (Some(2001), Some(2002)));
        assert_eq!(c.attack_size, Span::new(4000.0, 5000.0));
        assert_eq!(c.attack_send_interval, Span::new(0.02, 0.05));
        assert_eq!(c.inter_satellite_channels, [30, 31]);
        let c = ScenarioConfig::preset(3, 126.0, 1).unwrap();
        assert_eq!(c.affected_terminals.len(), 10);
        assert_eq!(c.path_loss_exponent_affected, 4.0);
        let c = ScenarioConfig::preset(4, 80.0, 1).unwrap();
        assert_eq!((c.num_jamcrafts, c.num_jamusers), (1, 10));
        assert_eq!((c.tx_power_jamcraft, c.tx_power_jamuser), (12.0, 20.0));
        assert_eq!(Preset::Dataset1.duration_of(2), Some(33.0));
        assert_eq!(Preset::Dataset2.duration_of(4), Some(1500.0));
    }

    #[test]
    fn malicious_ports_are_scenario_two_only() {
        let mut c = ScenarioConfig::preset(1, 10.0, 1).unwrap();
        c.malicious_src_port = Some(2001);
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "malicious_source_port"),
            other => panic!("unexpected {other:?}"),
        }
        let mut c = ScenarioConfig::preset(2, 10.0, 1).unwrap();
        c.malicious_dst_port = None;
        assert!(c.validate().is_err());
    }

    #[test]
    fn jamming_needs_jammers() {
        let mut c = ScenarioConfig::preset(4, 10.0, 1).unwrap();
        c.num_jamcrafts = 0;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "number_of_jamcrafts"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_range_names_the_field() {
        let mut c = ScenarioConfig::preset(1, 10.0, 1).unwrap();
        c.normal_size = Span::new(700.0, 40.0);
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "normal_packets_size"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kv_round_trip() {
        let c = ScenarioConfig::preset(4, 80.0, 99).unwrap();
        let text = c.to_kv_string();
        assert_eq!(ScenarioConfig::from_kv_str(&text).unwrap(), c);
    }

    #[test]
    fn kv_overrides_and_unknown_keys() {
        let c = ScenarioConfig::from_kv_str(
            "scenario = 3\nduration = 12.5 # seconds\naffected_path_loss = 3.5\nposition.EndUser[3] = 5,6\n",
        )
        .unwrap();
        assert_eq!(c.duration, 12.5);
        assert_eq!(c.path_loss_exponent_affected, 3.5);
        assert_eq!(c.positions[&NodeId::end_user(3)], [5.0, 6.0]);
        match ScenarioConfig::from_kv_str("scenario = 1\nbogus = 3\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "bogus"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(ScenarioConfig::from_kv_str("duration = 3\n").is_err());
    }
}
