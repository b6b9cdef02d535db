//! Concatenation of scenario runs into one labeled timeline.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::config::{Preset, ScenarioConfig};
use super::engine::{run_scenario, SimOutput};
use crate::error::{Error, Result};

pub const SCHEDULE_HEADER: &str = "start,end,scenario,malicious_src_port,malicious_dst_port";

/// One scenario occupying `[start, end)` of the combined timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub start: f64,
    pub end: f64,
    pub scenario: u8,
    pub malicious_src_port: Option<u16>,
    pub malicious_dst_port: Option<u16>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    /// Single-scenario schedule covering `[0, duration)`.
    pub fn single(config: &ScenarioConfig) -> Self {
        Schedule {
            entries: vec![ScheduleEntry {
                start: 0.0,
                end: config.duration,
                scenario: config.scenario,
                malicious_src_port: config.malicious_src_port,
                malicious_dst_port: config.malicious_dst_port,
            }],
        }
    }

    /// Entry whose interval contains `time`.
    pub fn entry_at(&self, time: f64) -> Option<&ScheduleEntry> {
        self.entries.iter().find(|e| time >= e.start && time < e.end)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sorted: Vec<_> = self.entries.iter().collect();
        sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
        for e in &sorted {
            if !(e.start.is_finite() && e.end.is_finite() && e.start < e.end) {
                return Err(Error::config("schedule", format!("bad interval [{}, {})", e.start, e.end)));
            }
            if !(1..=4).contains(&e.scenario) {
                return Err(Error::config("schedule", format!("unknown scenario {}", e.scenario)));
            }
        }
        for pair in sorted.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::config(
                    "schedule",
                    format!("intervals starting at {} and {} overlap", pair[0].start, pair[1].start),
                ));
            }
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "{SCHEDULE_HEADER}")?;
        let port = |p: Option<u16>| p.map_or_else(String::new, |p| p.to_string());
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{}",
                e.start,
                e.end,
                e.scenario,
                port(e.malicious_src_port),
                port(e.malicious_dst_port)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != SCHEDULE_HEADER {
            return Err(Error::Schema(format!("schedule header `{header}` does not match")));
        }
        let mut entries = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let get = |i: usize| row.get(i).unwrap_or("").trim().to_string();
            let num = |i: usize| -> Result<f64> {
                get(i).parse().map_err(|_| Error::Data(format!("bad schedule value `{}`", get(i))))
            };
            let port = |i: usize| -> Result<Option<u16>> {
                let v = get(i);
                if v.is_empty() {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| Error::Data(format!("bad port `{v}`")))
                }
            };
            entries.push(ScheduleEntry {
                start: num(0)?,
                end: num(1)?,
                scenario: get(2).parse().map_err(|_| Error::Data(format!("bad scenario `{}`", get(2))))?,
                malicious_src_port: port(3)?,
                malicious_dst_port: port(4)?,
            });
        }
        let schedule = Schedule { entries };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}

/// Runs each `(start, config)` and shifts its output onto a shared timeline.
///
/// Packet ids are renumbered so they stay unique across runs.
pub fn run_schedule(runs: &[(f64, ScenarioConfig)]) -> Result<(SimOutput, Schedule)> {
    let mut combined = SimOutput::default();
    let mut schedule = Schedule::default();
    let mut id_offset = 0u64;
    for (start, config) in runs {
        let out = run_scenario(config)?;
        let mut max_id = None;
        for mut r in out.trace {
            max_id = max_id.max(Some(r.packet_id));
            r.time += start;
            r.packet_id += id_offset;
            combined.trace.push(r);
        }
        for mut s in out.vectors {
            s.time += start;
            combined.vectors.push(s);
        }
        if let Some(m) = max_id {
            id_offset += m + 1;
        }
        combined.duration = combined.duration.max(start + config.duration);
        schedule.entries.push(ScheduleEntry {
            start: *start,
            end: start + config.duration,
            scenario: config.scenario,
            malicious_src_port: config.malicious_src_port,
            malicious_dst_port: config.malicious_dst_port,
        });
    }
    schedule.validate()?;
    Ok((combined, schedule))
}

/// The preset's four scenario intervals, each scaled by `time_scale`.
///
/// Every scenario run gets its own seed derived from `seed`.
pub fn preset_runs(preset: Preset, seed: u64, time_scale: f64) -> Result<Vec<(f64, ScenarioConfig)>> {
    if !(time_scale.is_finite() && time_scale > 0.0) {
        return Err(Error::config("time_scale", "must be > 0"));
    }
    preset
        .intervals()
        .iter()
        .map(|&(scenario, start, end)| {
            let run_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(scenario as u64);
            let config = ScenarioConfig::preset(scenario, (end - start) * time_scale, run_seed)?;
            Ok((start * time_scale, config))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_timeline_is_offset_and_labeled() {
        let runs = vec![
            (0.0, ScenarioConfig::preset(1, 2.0, 1).unwrap()),
            (2.0, ScenarioConfig::preset(2, 1.0, 2).unwrap()),
        ];
        let (out, schedule) = run_schedule(&runs).unwrap();
        assert_eq!(schedule.entries.len(), 2);
        assert_eq!(schedule.entry_at(2.5).unwrap().scenario, 2);
        assert_eq!(schedule.entry_at(2.5).unwrap().malicious_src_port, Some(2001));
        assert!(schedule.entry_at(3.0).is_none());
        assert!(out.trace.windows(2).all(|w| w[0].time <= w[1].time));
        let late = out.trace.iter().filter(|r| r.time >= 2.0).count();
        assert!(late > 0);
        let ids: std::collections::HashSet<_> = out.trace.iter().map(|r| (r.packet_id, r.hop_index, r.sender)).collect();
        assert_eq!(ids.len(), out.trace.len());
    }

    #[test]
    fn schedule_file_round_trip() {
        let runs = preset_runs(Preset::Dataset1, 5, 1.0).unwrap();
        let schedule = Schedule {
            entries: runs
                .iter()
                .map(|(start, c)| ScheduleEntry {
                    start: *start,
                    end: start + c.duration,
                    scenario: c.scenario,
                    malicious_src_port: c.malicious_src_port,
                    malicious_dst_port: c.malicious_dst_port,
                })
                .collect(),
        };
        let mut buf = Vec::new();
        schedule.write(&mut buf).unwrap();
        assert_eq!(Schedule::read(buf.as_slice()).unwrap(), schedule);
        assert_eq!(schedule.entries[2].start, 124.0);
    }

    #[test]
    fn overlapping_intervals_are_rejected() {
        let e = |start, end| ScheduleEntry { start, end, scenario: 1, malicious_src_port: None, malicious_dst_port: None };
        let s = Schedule { entries: vec![e(0.0, 10.0), e(5.0, 20.0)] };
        assert!(s.validate().is_err());
    }
}
