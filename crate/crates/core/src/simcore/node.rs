use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of earth terminals in the topology.
pub const NUM_END_USERS: u16 = 20;
/// Terminals `0..ZONE_SIZE` are covered by satellite 0, the rest by satellite 1.
pub const ZONE_SIZE: u16 = 10;
pub const NUM_SATELLITES: u16 = 3;

/// Satellite covering zone 1 (terminals 0..9).
pub const SAT_ZONE1: NodeId = NodeId::satellite(0);
/// Satellite covering zone 2 (terminals 10..19).
pub const SAT_ZONE2: NodeId = NodeId::satellite(1);
/// Relay satellite between the two coverage satellites.
pub const SAT_RELAY: NodeId = NodeId::satellite(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    EndUser,
    Satellite,
    JamCraft,
    /// Ground agent exchanging noise with a jamming aircraft.
    JamUser,
}

impl NodeKind {
    fn module_name(self) -> &'static str {
        match self {
            NodeKind::EndUser => "EndUser",
            NodeKind::Satellite => "Satellite",
            NodeKind::JamCraft => "JamCraft",
            NodeKind::JamUser => "JamUser",
        }
    }
}

/// A node of the simulated network, printed in module form (`Satellite[0]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: u16,
}

impl NodeId {
    pub const fn new(kind: NodeKind, index: u16) -> Self {
        NodeId { kind, index }
    }

    pub const fn end_user(index: u16) -> Self {
        NodeId::new(NodeKind::EndUser, index)
    }

    pub const fn satellite(index: u16) -> Self {
        NodeId::new(NodeKind::Satellite, index)
    }

    pub const fn jam_craft(index: u16) -> Self {
        NodeId::new(NodeKind::JamCraft, index)
    }

    pub const fn jam_user(index: u16) -> Self {
        NodeId::new(NodeKind::JamUser, index)
    }

    pub fn is_end_user(&self) -> bool {
        self.kind == NodeKind::EndUser
    }

    /// Coverage zone (1 or 2) of an end user, `None` for every other node.
    pub fn zone(&self) -> Option<u8> {
        match self.kind {
            NodeKind::EndUser if self.index < ZONE_SIZE => Some(1),
            NodeKind::EndUser => Some(2),
            _ => None,
        }
    }

    /// Synthetic address `10.z.0.k`.
    ///
    /// End users use their zone for `z`; satellites use 0 and jammers 3.
    pub fn ip(&self) -> Ipv4Addr {
        let host = (self.index + 1) as u8;
        match self.kind {
            NodeKind::EndUser => Ipv4Addr::new(10, self.zone().unwrap_or(0), 0, host),
            NodeKind::Satellite => Ipv4Addr::new(10, 0, 0, host),
            NodeKind::JamCraft => Ipv4Addr::new(10, 3, 0, host),
            NodeKind::JamUser => Ipv4Addr::new(10, 3, 1, host),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let limit = match self.kind {
            NodeKind::EndUser => Some(NUM_END_USERS),
            NodeKind::Satellite => Some(NUM_SATELLITES),
            _ => None,
        };
        match limit {
            Some(limit) if self.index >= limit => Err(Error::config(
                "node",
                format!("{self} is out of range (max index {})", limit - 1),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.kind.module_name(), self.index)
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Data(format!("invalid node name `{s}`"));
        let s = s.trim();
        let open = s.find('[').ok_or_else(bad)?;
        let index = s[open + 1..]
            .strip_suffix(']')
            .ok_or_else(bad)?
            .parse::<u16>()
            .map_err(|_| bad())?;
        let kind = match &s[..open] {
            "EndUser" => NodeKind::EndUser,
            "Satellite" => NodeKind::Satellite,
            "JamCraft" => NodeKind::JamCraft,
            "JamUser" => NodeKind::JamUser,
            _ => return Err(bad()),
        };
        Ok(NodeId { kind, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips() {
        for node in [
            NodeId::end_user(17),
            NodeId::satellite(0),
            NodeId::jam_craft(0),
            NodeId::jam_user(9),
        ] {
            assert_eq!(node.to_string().parse::<NodeId>().unwrap(), node);
        }
        assert!("Satellite[x]".parse::<NodeId>().is_err());
        assert!("Drone[1]".parse::<NodeId>().is_err());
    }

    #[test]
    fn zones_and_addresses() {
        assert_eq!(NodeId::end_user(9).zone(), Some(1));
        assert_eq!(NodeId::end_user(10).zone(), Some(2));
        assert_eq!(NodeId::satellite(1).zone(), None);
        assert_eq!(NodeId::end_user(12).ip(), Ipv4Addr::new(10, 2, 0, 13));
    }

    #[test]
    fn index_ranges() {
        assert!(NodeId::end_user(19).validate().is_ok());
        assert!(NodeId::end_user(20).validate().is_err());
        assert!(NodeId::satellite(3).validate().is_err());
    }
}
