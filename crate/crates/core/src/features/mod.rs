//! Labeled feature tables built from simulator output.

pub mod events;
pub mod extract;
pub mod flows;
pub mod label;
pub mod normalize;
pub mod schema;
pub mod timediff;

pub use events::{aggregate_event_features, AggregationScope, SampleIndex};
pub use extract::{build_dataset, extract_full, extract_vantage, window_features, ExtractConfig, FlowSpan};
pub use flows::{flow_stats, FlowKey};
pub use label::{binary_collapse, class_names, label_for, label_rows, BinaryLabel, Label};
pub use normalize::{normalize, NormalizationParams};
pub use schema::{Dataset, FeatureRow, RowIdentity, SchemaKind};
