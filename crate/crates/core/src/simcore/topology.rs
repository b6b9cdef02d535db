use std::collections::HashMap;

use super::config::ScenarioConfig;
use super::node::{NodeId, NodeKind, NUM_END_USERS, SAT_RELAY, SAT_ZONE1, SAT_ZONE2};
use crate::error::{Error, Result};

/// Bidirectional radio link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub channel: u16,
    pub frequency_hz: f64,
}

impl Link {
    pub fn connects(&self, x: NodeId, y: NodeId) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

/// One directed transmission step along a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
}

impl Hop {
    pub fn new(from: NodeId, to: NodeId) -> Self {
        Hop { from, to }
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub nodes: Vec<NodeId>,
    pub links: Vec<Link>,
    index: HashMap<(NodeId, NodeId), usize>,
}

/// Builds the node set, links and channel assignment for a scenario.
pub fn build_topology(config: &ScenarioConfig) -> Result<Topology> {
    config.validate()?;
    let mut nodes = Vec::new();
    let mut links = Vec::new();

    for sat in [SAT_ZONE1, SAT_ZONE2, SAT_RELAY] {
        nodes.push(sat);
    }
    for i in 0..NUM_END_USERS {
        let eu = NodeId::end_user(i);
        nodes.push(eu);
        links.push(Link {
            a: eu,
            b: covering_satellite(eu)?,
            channel: config.channel(eu)?,
            frequency_hz: config.terminal_frequency_hz,
        });
    }
    let [ch_a, ch_b] = config.inter_satellite_channels;
    links.push(Link {
        a: SAT_ZONE1,
        b: SAT_RELAY,
        channel: ch_a,
        frequency_hz: config.inter_satellite_frequency_hz,
    });
    links.push(Link {
        a: SAT_RELAY,
        b: SAT_ZONE2,
        channel: ch_b,
        frequency_hz: config.inter_satellite_frequency_hz,
    });
    for c in 0..config.num_jamcrafts {
        nodes.push(NodeId::jam_craft(c));
    }
    for k in 0..config.num_jamusers {
        let user = NodeId::jam_user(k);
        nodes.push(user);
        links.push(Link {
            a: user,
            b: jam_partner(config, user)?,
            channel: config.channel(user)?,
            frequency_hz: config.terminal_frequency_hz,
        });
    }

    let mut index = HashMap::new();
    for (i, link) in links.iter().enumerate() {
        index.insert((link.a, link.b), i);
        index.insert((link.b, link.a), i);
    }
    Ok(Topology { nodes, links, index })
}

/// Satellite serving an end user's zone.
pub fn covering_satellite(node: NodeId) -> Result<NodeId> {
    match node.zone() {
        Some(1) => Ok(SAT_ZONE1),
        Some(2) => Ok(SAT_ZONE2),
        _ => Err(Error::config("node", format!("{node} has no covering satellite"))),
    }
}

/// The JamCraft a ground agent exchanges noise with.
pub fn jam_partner(config: &ScenarioConfig, user: NodeId) -> Result<NodeId> {
    if config.num_jamcrafts == 0 {
        return Err(Error::config("number_of_jamcrafts", "no JamCraft to pair with"));
    }
    Ok(NodeId::jam_craft(user.index % config.num_jamcrafts))
}

impl Topology {
    pub fn link(&self, from: NodeId, to: NodeId) -> Option<&Link> {
        self.index.get(&(from, to)).map(|&i| &self.links[i])
    }

    pub fn link_index(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.index.get(&(from, to)).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    /// Static next hop from `at` toward `dst`.
    pub fn next_hop(&self, at: NodeId, dst: NodeId) -> Result<NodeId> {
        let unreachable =
            || Error::config("route", format!("no static route from {at} to {dst}"));
        if at == dst {
            return Err(unreachable());
        }
        if self.link(at, dst).is_some() && !(at.is_end_user() && dst.is_end_user()) {
            return Ok(dst);
        }
        match (at.kind, dst.kind) {
            (NodeKind::EndUser, NodeKind::EndUser) => covering_satellite(at),
            (NodeKind::Satellite, NodeKind::EndUser) => {
                let target = covering_satellite(dst)?;
                if at == target {
                    Ok(dst)
                } else if at == SAT_RELAY {
                    Ok(target)
                } else {
                    Ok(SAT_RELAY)
                }
            }
            _ => Err(unreachable()),
        }
    }

    /// Full hop sequence from `src` to `dst` using the static route table.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Result<Vec<Hop>> {
        let mut hops = Vec::new();
        let mut at = src;
        while at != dst {
            let next = self.next_hop(at, dst)?;
            if self.link(at, next).is_none() {
                return Err(Error::config("route", format!("missing link {at} -> {next}")));
            }
            hops.push(Hop::new(at, next));
            at = next;
            if hops.len() > 8 {
                return Err(Error::config("route", format!("routing loop from {src} to {dst}")));
            }
        }
        Ok(hops)
    }
}
