use leoids::features::schema::FEATURES_VANTAGE;
use leoids::features::{ExtractConfig, SchemaKind};
use leoids::harness::Predictor;
use leoids::ids::*;
use leoids::neural::{Model, ModelConfig, ModelFile};
use leoids::simcore::trace::write_trace;
use leoids::simcore::*;
use leoids::Error;
use proptest::prelude::*;

fn model(inputs: usize, classes: usize, seed: u64) -> ModelFile {
    let mut config = ModelConfig::mlp(inputs, &[16], classes);
    config.seed = seed;
    ModelFile {
        model: Model::new(config).unwrap(),
        feature_columns: FEATURES_VANTAGE.iter().take(inputs).map(|s| s.to_string()).collect(),
        normalization: None,
    }
}

fn detector(mode: Mode, period: f64) -> Detector {
    let config = WindowConfig { mode, period, ..WindowConfig::default() };
    Detector::new(config, Predictor::Single(model(14, 4, 5)), ExtractConfig::default()).unwrap()
}

fn trace(scenario: u8, duration: f64, seed: u64) -> Vec<TraceRecord> {
    run_scenario(&ScenarioConfig::preset(scenario, duration, seed).unwrap()).unwrap().trace
}

fn ok(records: &[TraceRecord]) -> impl Iterator<Item = leoids::Result<TraceRecord>> + '_ {
    records.iter().cloned().map(Ok)
}

#[test]
fn a_120_second_trace_has_four_windows() {
    let t = trace(1, 120.0, 3);
    let mut text = Vec::new();
    write_trace(&mut text, &t).unwrap();
    let replay = Replay::new(text.as_slice(), f64::INFINITY).unwrap();
    let report = detector(Mode::Normal, 30.0).run(replay, None).unwrap();
    assert_eq!(report.windows.iter().map(|w| w.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
}

#[test]
fn threaded_and_single_threaded_runs_agree() {
    let t = trace(2, 20.0, 8);
    for mode in [Mode::Normal, Mode::Safe] {
        let d = detector(mode, 4.0);
        let a = d.run(ok(&t), None).unwrap();
        let b = d.run_threaded(ok(&t), None).unwrap();
        assert_eq!(a, b);
        assert!(a.windows.len() >= 5);
    }
}

#[test]
fn paced_and_unpaced_replay_give_the_same_alerts() {
    let t = trace(4, 3.0, 2);
    let mut text = Vec::new();
    write_trace(&mut text, &t).unwrap();
    let d = detector(Mode::Safe, 0.5);
    let fast = d.run(Replay::new(text.as_slice(), f64::INFINITY).unwrap(), None).unwrap();
    // Three seconds of trace replayed in about 30 ms.
    let paced = d.run_threaded(Replay::new(text.as_slice(), 100.0).unwrap(), None).unwrap();
    assert_eq!(fast.alerts, paced.alerts);
    assert_eq!(fast.windows, paced.windows);
}

#[test]
fn every_normal_alert_has_a_safe_twin() {
    let t = trace(2, 12.0, 4);
    let d = detector(Mode::Normal, 3.0);
    let mut checked = 0;
    let mut hook = |s: &WindowSummary, _: &[Alert]| {
        let normal = s.alerts(&d.config, Mode::Normal);
        let safe = s.alerts(&d.config, Mode::Safe);
        for a in &normal {
            assert!(safe.iter().any(|b| b.class == a.class && b.window_index == a.window_index && b.evidence == a.evidence));
        }
        let g: f64 = s.global_fractions().iter().sum();
        if s.packets > 0 {
            assert!((g - 1.0).abs() < 1e-12, "fractions sum to {g}");
        }
        for a in normal.iter().chain(&safe) {
            assert!((0.0..=1.0).contains(&a.evidence.global_fraction));
            assert!((0.0..=1.0).contains(&a.evidence.flow_fraction));
            assert_ne!(a.class, leoids::features::Label::Normal);
        }
        checked += 1;
    };
    d.run(ok(&t), Some(&mut hook)).unwrap();
    assert_eq!(checked, 4);
}

#[test]
fn models_for_the_other_layout_are_rejected() {
    let mut full = model(19, 4, 1);
    full.feature_columns = SchemaKind::FullSurveillance.feature_columns().iter().map(|s| s.to_string()).collect();
    let full = Detector::new(WindowConfig::default(), Predictor::Single(full), ExtractConfig::default());
    assert!(matches!(full, Err(Error::Config { .. })));
    // A subset of the flow-layout columns is fine.
    assert!(Detector::new(WindowConfig::default(), Predictor::Single(model(10, 4, 1)), ExtractConfig::default()).is_ok());
    let binary = Detector::new(WindowConfig::default(), Predictor::Single(model(14, 2, 1)), ExtractConfig::default());
    assert!(matches!(binary, Err(Error::Config { .. })));
}

#[test]
fn records_away_from_the_vantage_are_ignored() {
    let t = trace(1, 5.0, 6);
    let report = detector(Mode::Safe, 1.0).run(ok(&t), None).unwrap();
    let seen = t.iter().filter(|r| r.sender == SAT_ZONE1 || r.receiver == SAT_ZONE1).count() as u64;
    assert_eq!(report.ingested, seen);
    assert_eq!(report.ignored, t.len() as u64 - seen);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Jittered arrival order: every accepted record lands in exactly one window.
    #[test]
    fn windows_partition_the_accepted_records(
        jitter in proptest::collection::vec(-1.0f64..0.3, 1..400),
        period in 0.5f64..5.0,
        slack in 0.0f64..0.8,
    ) {
        let base = trace(1, 4.0, 1);
        let records: Vec<TraceRecord> = base
            .iter()
            .filter(|r| r.receiver == SAT_ZONE1)
            .zip(jitter.iter().cycle())
            .map(|(r, j)| TraceRecord { time: (r.time + j).max(0.0), ..r.clone() })
            .collect();
        let mut buffer = WindowBuffer::new(period, slack);
        let mut windows = Vec::new();
        for r in &records {
            windows.extend(buffer.ingest(r.clone()));
        }
        windows.extend(buffer.flush());
        let total: usize = windows.iter().map(|w| w.records.len()).sum();
        prop_assert_eq!(total as u64, buffer.ingested - buffer.dropped);
        prop_assert_eq!(buffer.ingested, records.len() as u64);
        let mut indices: Vec<u64> = windows.iter().map(|w| w.index).collect();
        let n = indices.len();
        indices.sort();
        indices.dedup();
        prop_assert_eq!(indices.len(), n, "a window was closed twice");
        for w in &windows {
            for r in &w.records {
                prop_assert_eq!((r.time / period).floor() as u64, w.index);
            }
        }
    }
}
