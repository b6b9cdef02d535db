use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::Schedule;

use super::schema::FeatureRow;

/// Traffic class of a dataset row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Normal,
    UdpFlood,
    Rain,
    Jamming,
}

/// Two-class view used by binary classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryLabel {
    Normal,
    Attack,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Normal, Label::UdpFlood, Label::Rain, Label::Jamming];

    pub fn name(self) -> &'static str {
        match self {
            Label::Normal => "Normal",
            Label::UdpFlood => "UDP_Flood_attack",
            Label::Rain => "Rain_and_Thunderstorms",
            Label::Jamming => "Jamming_attack",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Label::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Label(format!("class index {i} out of range")))
    }

    /// Label of the scenario whose interval contains a row.
    pub fn for_scenario(scenario: u8) -> Result<Self> {
        match scenario {
            1 => Ok(Label::Normal),
            2 => Ok(Label::UdpFlood),
            3 => Ok(Label::Rain),
            4 => Ok(Label::Jamming),
            other => Err(Error::Label(format!("no label for scenario {other}"))),
        }
    }

    /// Class index for a classifier with `classes` outputs (2 or 4).
    pub fn class_index(self, classes: usize) -> Result<usize> {
        match classes {
            2 => Ok(binary_collapse(self).index()),
            4 => Ok(self.index()),
            n => Err(Error::Label(format!("unsupported class count {n}"))),
        }
    }
}

impl BinaryLabel {
    pub fn name(self) -> &'static str {
        match self {
            BinaryLabel::Normal => "Normal",
            BinaryLabel::Attack => "Attack",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Label(format!("unknown label `{s}`")))
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rain is a natural disturbance, not an attack.
pub fn binary_collapse(label: Label) -> BinaryLabel {
    match label {
        Label::Normal | Label::Rain => BinaryLabel::Normal,
        Label::UdpFlood | Label::Jamming => BinaryLabel::Attack,
    }
}

/// Class names in index order for a classifier with `classes` outputs.
pub fn class_names(classes: usize) -> Result<Vec<&'static str>> {
    match classes {
        2 => Ok(vec![BinaryLabel::Normal.name(), BinaryLabel::Attack.name()]),
        4 => Ok(Label::ALL.iter().map(|l| l.name()).collect()),
        n => Err(Error::Label(format!("unsupported class count {n}"))),
    }
}

/// Label of one row given the schedule.
///
/// Inside a flood interval only packets on the malicious port pair are
/// attack traffic. Rain and jamming degrade every link, so the whole
/// interval carries their label.
pub fn label_for(
    send_time: f64,
    port_src: u16,
    port_dst: u16,
    schedule: &Schedule,
) -> Result<Label> {
    let entry = schedule
        .entry_at(send_time)
        .ok_or_else(|| Error::Label(format!("sendTime {send_time} is outside every schedule interval")))?;
    let label = Label::for_scenario(entry.scenario)?;
    if label != Label::UdpFlood {
        return Ok(label);
    }
    let src_ok = entry.malicious_src_port.map_or(true, |p| p == port_src);
    let dst_ok = entry.malicious_dst_port.map_or(true, |p| p == port_dst);
    Ok(if src_ok && dst_ok { Label::UdpFlood } else { Label::Normal })
}

pub fn label_rows(rows: &mut [FeatureRow], schedule: &Schedule) -> Result<()> {
    for row in rows {
        let id = &row.identity;
        row.label = label_for(id.send_time, id.port_src, id.port_dst, schedule)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::ScheduleEntry;
    use proptest::prelude::*;

    fn dataset1_schedule() -> Schedule {
        let e = |start, end, scenario, ports: Option<(u16, u16)>| ScheduleEntry {
            start,
            end,
            scenario,
            malicious_src_port: ports.map(|p| p.0),
            malicious_dst_port: ports.map(|p| p.1),
        };
        Schedule {
            entries: vec![
                e(0.0, 90.0, 1, None),
                e(90.0, 123.0, 2, Some((2001, 2002))),
                e(124.0, 250.0, 3, None),
                e(250.0, 330.0, 4, None),
            ],
        }
    }

    #[test]
    fn benign_interval_is_normal() {
        assert_eq!(label_for(50.0, 5555, 2000, &dataset1_schedule()).unwrap(), Label::Normal);
    }

    #[test]
    fn flood_ports_carry_the_attack_label() {
        let s = dataset1_schedule();
        assert_eq!(label_for(100.0, 2001, 2002, &s).unwrap(), Label::UdpFlood);
        assert_eq!(label_for(100.0, 5555, 2000, &s).unwrap(), Label::Normal);
        assert_eq!(label_for(100.0, 0, 0, &s).unwrap(), Label::Normal);
    }

    #[test]
    fn disturbance_intervals_label_everything() {
        let s = dataset1_schedule();
        assert_eq!(label_for(200.0, 5555, 2000, &s).unwrap(), Label::Rain);
        assert_eq!(label_for(260.0, 0, 0, &s).unwrap(), Label::Jamming);
    }

    #[test]
    fn gap_between_intervals_is_an_error() {
        assert!(matches!(label_for(123.5, 1, 2, &dataset1_schedule()), Err(Error::Label(_))));
        assert!(label_for(330.0, 1, 2, &dataset1_schedule()).is_err());
    }

    #[test]
    fn empty_rows_stay_empty() {
        let mut rows: Vec<FeatureRow> = Vec::new();
        label_rows(&mut rows, &dataset1_schedule()).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn collapse_table() {
        assert_eq!(binary_collapse(Label::Rain), BinaryLabel::Normal);
        assert_eq!(binary_collapse(Label::Jamming), BinaryLabel::Attack);
        assert_eq!(binary_collapse(Label::Normal), BinaryLabel::Normal);
        assert_eq!(binary_collapse(Label::UdpFlood), BinaryLabel::Attack);
        assert!("Hail".parse::<Label>().is_err());
    }

    proptest! {
        #[test]
        fn every_row_gets_exactly_one_label(t in 0.0f64..330.0, ps in any::<u16>(), pd in any::<u16>()) {
            let s = dataset1_schedule();
            let got = label_for(t, ps, pd, &s);
            let inside = s.entries.iter().filter(|e| t >= e.start && t < e.end).count();
            prop_assert_eq!(got.is_ok(), inside == 1);
            if let Ok(l) = got {
                prop_assert_eq!(l.name().parse::<Label>().unwrap(), l);
            }
        }

        #[test]
        fn collapse_is_total_and_onto(i in 0usize..4) {
            let image: std::collections::BTreeSet<_> = Label::ALL.iter().map(|&l| binary_collapse(l)).collect();
            prop_assert_eq!(image.len(), 2);
            let l = Label::from_index(i).unwrap();
            prop_assert!(l.class_index(2).unwrap() < 2);
        }
    }
}
