use std::sync::mpsc;

use super::config::{Mode, WindowConfig};
use super::window::{Alert, ClosedWindow, WindowBuffer, WindowSummary};
use crate::error::{Error, Result};
use crate::features::schema::FEATURES_VANTAGE;
use crate::features::{window_features, ExtractConfig};
use crate::harness::Predictor;
use crate::simcore::TraceRecord;

/// Classifies closed windows and applies the alert rules.
#[derive(Debug, Clone)]
pub struct Detector {
    pub config: WindowConfig,
    pub predictor: Predictor,
    pub extract: ExtractConfig,
}

/// Outcome of a detection run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub alerts: Vec<Alert>,
    /// `(window index, packets)` of every processed window, in order.
    pub windows: Vec<(u64, usize)>,
    /// Records offered to the window buffer.
    pub ingested: u64,
    /// Records rejected for arriving too late.
    pub dropped: u64,
    /// Records not seen by the vantage satellite.
    pub ignored: u64,
}

/// Per-window callback: summary and the alerts raised for it.
pub type WindowHook<'a> = &'a mut (dyn FnMut(&WindowSummary, &[Alert]) + Send);

impl Detector {
    /// Errors unless the predictor is a four-class model over the
    /// flow-layout features.
    pub fn new(config: WindowConfig, predictor: Predictor, extract: ExtractConfig) -> Result<Self> {
        config.validate()?;
        extract.validate()?;
        if predictor.classes() != 4 {
            return Err(Error::config(
                "model",
                format!("the detector needs a 4-class model, got {} classes", predictor.classes()),
            ));
        }
        predictor.check_columns(&FEATURES_VANTAGE).map_err(|e| match e {
            Error::Schema(m) => Error::config("model", m),
            other => other,
        })?;
        let extract = ExtractConfig { window: config.period, ..extract };
        Ok(Detector { config, predictor, extract })
    }

    pub fn summarize(&self, window: &ClosedWindow) -> Result<WindowSummary> {
        let refs: Vec<&TraceRecord> = window.records.iter().collect();
        let rows = window_features(&refs, &self.extract);
        let predictions = if rows.is_empty() { Vec::new() } else { self.predictor.predict(&FEATURES_VANTAGE, &rows)? };
        WindowSummary::new(window.index, self.config.period, &window.records, &predictions)
    }

    /// Alerts of the configured mode for one window.
    pub fn close_window(&self, window: &ClosedWindow) -> Result<Vec<Alert>> {
        Ok(self.summarize(window)?.alerts(&self.config, self.config.mode))
    }

    /// Alerts of several modes from a single classification pass.
    pub fn close_window_modes(&self, window: &ClosedWindow, modes: &[Mode]) -> Result<Vec<Alert>> {
        let s = self.summarize(window)?;
        Ok(modes.iter().flat_map(|&m| s.alerts(&self.config, m)).collect())
    }

    fn captured(&self, r: &TraceRecord) -> bool {
        r.sender == self.extract.vantage || r.receiver == self.extract.vantage
    }

    fn process(&self, w: &ClosedWindow, report: &mut RunReport, hook: &mut Option<WindowHook<'_>>) -> Result<()> {
        let summary = self.summarize(w)?;
        let alerts = summary.alerts(&self.config, self.config.mode);
        if let Some(h) = hook.as_mut() {
            h(&summary, &alerts);
        }
        report.windows.push((w.index, w.records.len()));
        report.alerts.extend(alerts);
        Ok(())
    }

    /// Ingests and detects on the calling thread.
    pub fn run<I>(&self, records: I, mut hook: Option<WindowHook<'_>>) -> Result<RunReport>
    where
        I: IntoIterator<Item = Result<TraceRecord>>,
    {
        let mut buffer = WindowBuffer::new(self.config.period, self.config.slack);
        let mut report = RunReport::default();
        for r in records {
            let r = r?;
            if !self.captured(&r) {
                report.ignored += 1;
                continue;
            }
            for w in buffer.ingest(r) {
                self.process(&w, &mut report, &mut hook)?;
            }
        }
        for w in buffer.flush() {
            self.process(&w, &mut report, &mut hook)?;
        }
        report.ingested = buffer.ingested;
        report.dropped = buffer.dropped;
        Ok(report)
    }

    /// Ingests on the calling thread and detects on a second one; closed
    /// windows are handed over whole. Gives the same report as [`run`](Self::run).
    pub fn run_threaded<I>(&self, records: I, mut hook: Option<WindowHook<'_>>) -> Result<RunReport>
    where
        I: IntoIterator<Item = Result<TraceRecord>>,
    {
        let (tx, rx) = mpsc::channel::<ClosedWindow>();
        std::thread::scope(|scope| {
            let detector = scope.spawn(move || -> Result<RunReport> {
                let mut report = RunReport::default();
                for w in rx {
                    self.process(&w, &mut report, &mut hook)?;
                }
                Ok(report)
            });

            let mut buffer = WindowBuffer::new(self.config.period, self.config.slack);
            let mut ignored = 0;
            let ingest = (|| -> Result<()> {
                for r in records {
                    let r = r?;
                    if !self.captured(&r) {
                        ignored += 1;
                        continue;
                    }
                    for w in buffer.ingest(r) {
                        // A closed receiver means the detector failed; its error is reported below.
                        if tx.send(w).is_err() {
                            return Ok(());
                        }
                    }
                }
                for w in buffer.flush() {
                    if tx.send(w).is_err() {
                        return Ok(());
                    }
                }
                Ok(())
            })();
            drop(tx);
            let detected = detector.join().map_err(|_| Error::Data("detector thread panicked".into()))?;
            ingest?;
            let mut report = detected?;
            report.ingested = buffer.ingested;
            report.dropped = buffer.dropped;
            report.ignored = ignored;
            Ok(report)
        })
    }
}
