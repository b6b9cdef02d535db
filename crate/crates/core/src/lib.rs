//! Simulation, dataset generation, neural classification and windowed
//! intrusion detection for a small LEO satellite network.
//!
//! The pipeline is:
//!
//! 1. [`simcore`] runs a deterministic discrete-event simulation of the
//!    20-terminal / 3-satellite topology under one of four traffic scenarios
//!    and produces a packet trace plus per-node statistic series.
//! 2. [`features`] turns those outputs into labeled, min-max normalized
//!    datasets, either the full-surveillance per-event schema or the
//!    satellite-vantage per-flow schema.
//! 3. [`neural`] holds the from-scratch MLP / RNN / GRU / LSTM / CNN models
//!    with hand-written backpropagation.
//! 4. [`harness`] splits, trains, evaluates, and combines models.
//! 5. [`ids`] replays traces through a windowed detector that raises alerts.

pub mod cli;
pub mod error;
pub mod features;
pub mod harness;
pub mod ids;
pub mod neural;
pub mod simcore;

pub use error::{Error, Result};
