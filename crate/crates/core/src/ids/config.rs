use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;

/// Operating point of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Alert only when the class's threshold rule holds.
    Normal,
    /// Alert on any packet classified as an attack class.
    Safe,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Normal => "Normal",
            Mode::Safe => "Safe",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Mode::Normal),
            "safe" => Ok(Mode::Safe),
            _ => Err(Error::config("mode", format!("unknown mode `{s}` (normal or safe)"))),
        }
    }
}

/// Normal-mode rule of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassThreshold {
    /// Bound on the window fraction of packets classified as the class.
    pub global_fraction: f64,
    /// Lower bound on the largest per-flow fraction.
    pub flow_fraction: f64,
    /// `true`: global fraction must be at least the bound; `false`: at most.
    pub global_is_minimum: bool,
}

impl ClassThreshold {
    pub fn holds(&self, global: f64, flow: f64) -> bool {
        let g = if self.global_is_minimum { global >= self.global_fraction } else { global <= self.global_fraction };
        g && flow >= self.flow_fraction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub flood: ClassThreshold,
    pub rain: ClassThreshold,
    pub jamming: ClassThreshold,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            flood: ClassThreshold { global_fraction: 0.20, flow_fraction: 0.70, global_is_minimum: true },
            rain: ClassThreshold { global_fraction: 0.10, flow_fraction: 0.20, global_is_minimum: false },
            jamming: ClassThreshold { global_fraction: 0.20, flow_fraction: 0.90, global_is_minimum: false },
        }
    }
}

impl Thresholds {
    /// Rule for an attack class; `None` for Normal.
    pub fn for_class(&self, label: Label) -> Option<&ClassThreshold> {
        match label {
            Label::Normal => None,
            Label::UdpFlood => Some(&self.flood),
            Label::Rain => Some(&self.rain),
            Label::Jamming => Some(&self.jamming),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("flood", &self.flood), ("rain", &self.rain), ("jamming", &self.jamming)] {
            for (what, v) in [("global_fraction", t.global_fraction), ("flow_fraction", t.flow_fraction)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::config(format!("thresholds.{name}.{what}"), format!("{v} outside [0,1]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Window length in seconds.
    pub period: f64,
    pub mode: Mode,
    pub thresholds: Thresholds,
    /// How far a record may trail the newest one seen and still be accepted.
    pub slack: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { period: 30.0, mode: Mode::Normal, thresholds: Thresholds::default(), slack: 0.5 }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::config("period", format!("must be > 0, got {}", self.period)));
        }
        if !(self.slack.is_finite() && self.slack >= 0.0) {
            return Err(Error::config("slack", format!("must be >= 0, got {}", self.slack)));
        }
        self.thresholds.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_bounds() {
        let t = Thresholds::default();
        assert!(t.flood.holds(0.30, 0.80));
        assert!(!t.flood.holds(0.19, 0.80));
        assert!(t.rain.holds(0.05, 0.25));
        assert!(!t.rain.holds(0.15, 0.25));
        assert!(t.jamming.holds(0.2, 0.9));
        assert!(!t.jamming.holds(0.1, 0.89));
        let flipped = ClassThreshold { global_is_minimum: true, ..t.rain };
        assert!(flipped.holds(0.15, 0.25));
    }

    #[test]
    fn config_checks() {
        assert!(WindowConfig::default().validate().is_ok());
        assert!(WindowConfig { period: 0.0, ..WindowConfig::default() }.validate().is_err());
        let mut c = WindowConfig::default();
        c.thresholds.rain.flow_fraction = 1.5;
        assert!(matches!(c.validate(), Err(Error::Config { .. })));
        assert_eq!("SAFE".parse::<Mode>().unwrap(), Mode::Safe);
        assert!("loud".parse::<Mode>().is_err());
    }
}
