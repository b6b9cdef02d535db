//! Windowed detector: buffers replayed packets into fixed windows keyed on
//! their timestamps, classifies every packet when a window closes, and raises
//! per-class alerts.

pub mod config;
pub mod detector;
pub mod replay;
pub mod window;

pub use config::{ClassThreshold, Mode, Thresholds, WindowConfig};
pub use detector::{Detector, RunReport, WindowHook};
pub use replay::Replay;
pub use window::{Alert, ClosedWindow, Evidence, WindowBuffer, WindowSummary, ALERT_HEADER};
