use std::io::BufRead;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::simcore::trace::TRACE_HEADER;
use crate::simcore::TraceRecord;

/// Largest tolerated share of malformed lines.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

/// Streams trace records from a trace file, optionally paced in real time.
///
/// Malformed lines are skipped and counted. Once input is exhausted, the
/// iterator yields one error if more than 1% of lines were malformed.
pub struct Replay<R> {
    lines: std::io::Lines<R>,
    speed_factor: f64,
    pub lines_read: u64,
    pub malformed: u64,
    origin: Option<(f64, Instant)>,
    header_checked: bool,
    done: bool,
}

impl<R: BufRead> Replay<R> {
    /// `speed_factor` scales original inter-record gaps; `f64::INFINITY`
    /// replays as fast as possible.
    pub fn new(reader: R, speed_factor: f64) -> Result<Self> {
        if !(speed_factor > 0.0) {
            return Err(Error::config("speed_factor", format!("must be > 0, got {speed_factor}")));
        }
        Ok(Replay {
            lines: reader.lines(),
            speed_factor,
            lines_read: 0,
            malformed: 0,
            origin: None,
            header_checked: false,
            done: false,
        })
    }

    fn pace(&mut self, t: f64) {
        if self.speed_factor.is_infinite() {
            return;
        }
        let (t0, start) = *self.origin.get_or_insert((t, Instant::now()));
        let due = Duration::from_secs_f64(((t - t0) / self.speed_factor).max(0.0));
        if let Some(wait) = due.checked_sub(start.elapsed()) {
            std::thread::sleep(wait);
        }
    }
}

impl<R: BufRead> Iterator for Replay<R> {
    type Item = Result<TraceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next() {
                Some(Ok(line)) => line,
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
                None => {
                    self.done = true;
                    if self.malformed as f64 > MAX_MALFORMED_FRACTION * self.lines_read as f64 {
                        return Some(Err(Error::Data(format!(
                            "{} of {} trace lines malformed (limit {}%)",
                            self.malformed,
                            self.lines_read,
                            MAX_MALFORMED_FRACTION * 100.0
                        ))));
                    }
                    return None;
                }
            };
            if !self.header_checked {
                self.header_checked = true;
                if line.trim_end() == TRACE_HEADER {
                    continue;
                }
            }
            if line.trim().is_empty() {
                continue;
            }
            self.lines_read += 1;
            match TraceRecord::parse_csv_line(&line) {
                Ok(r) => {
                    self.pace(r.time);
                    return Some(Ok(r));
                }
                Err(e) => {
                    self.malformed += 1;
                    log::warn!("skipping malformed trace line {}: {e}", self.lines_read);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::trace::write_trace;
    use crate::simcore::{run_scenario, ScenarioConfig};

    fn trace_text(n: usize) -> (Vec<TraceRecord>, String) {
        let out = run_scenario(&ScenarioConfig::preset(1, 3.0, 4).unwrap()).unwrap();
        let records: Vec<TraceRecord> = out.trace.into_iter().take(n).collect();
        let mut buf = Vec::new();
        write_trace(&mut buf, &records).unwrap();
        (records, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn replays_every_line() {
        let (records, text) = trace_text(200);
        let back: Vec<TraceRecord> = Replay::new(text.as_bytes(), f64::INFINITY).unwrap().map(|r| r.unwrap()).collect();
        assert_eq!(back.len(), records.len());
        assert_eq!(back[5].packet_id, records[5].packet_id);
    }

    #[test]
    fn a_few_bad_lines_are_skipped() {
        let (_, text) = trace_text(300);
        let text = text.replacen("UDP", "???", 1);
        let mut replay = Replay::new(text.as_bytes(), f64::INFINITY).unwrap();
        let got: Vec<_> = replay.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(got.len(), 299);
        assert_eq!(replay.malformed, 1);
    }

    #[test]
    fn too_many_bad_lines_abort() {
        let (_, text) = trace_text(50);
        let text = text.replacen("UDP", "???", 2);
        let result: Result<Vec<_>> = Replay::new(text.as_bytes(), f64::INFINITY).unwrap().collect();
        assert!(matches!(result, Err(Error::Data(_))));
    }

    #[test]
    fn paced_replay_takes_scaled_time() {
        let (records, text) = trace_text(2000);
        let span = records.last().unwrap().time - records[0].time;
        let start = Instant::now();
        let n = Replay::new(text.as_bytes(), span / 0.05).unwrap().count();
        assert_eq!(n, records.len());
        assert!(start.elapsed() >= Duration::from_millis(45));
        assert!(Replay::new(text.as_bytes(), 0.0).is_err());
    }
}
