//! Replays the golden cases written by `tests/oracle/sight_oracle.py`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sight::{Scores, Sight, SightConfig, StepTrace, StreamRecord};

#[derive(Deserialize)]
pub struct Case {
    pub config: SightConfig,
    pub weights: Vec<Vec<f64>>,
    pub records: Vec<Rec>,
    pub trace: Vec<Row>,
}

#[derive(Deserialize)]
pub struct Rec {
    pub feature: Vec<f64>,
    pub logits: Option<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
}

#[derive(Deserialize)]
pub struct Row {
    pub raw: Vec<f64>,
    pub expected_state: Vec<f64>,
    pub expected_state_degenerate: bool,
    pub discrepancy: f64,
    pub surprise: f64,
    pub routing: Vec<f64>,
    pub calibrated_prior: Vec<f64>,
    pub temporal_prior: Vec<f64>,
    pub refined: Vec<f64>,
    pub annihilated: bool,
    pub prototypes: Option<Vec<Vec<f64>>>,
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/oracle")
}

pub fn load_cases() -> Vec<(String, Case)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("oracle fixtures present")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let case = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
            (name, case)
        })
        .collect()
}

fn record(t: usize, r: &Rec) -> StreamRecord {
    let scores = match (&r.logits, &r.probs) {
        (Some(l), None) => Scores::Logits(l.clone()),
        (None, Some(p)) => Scores::Probs(p.clone()),
        _ => panic!("record {t} must carry exactly one of logits/probs"),
    };
    StreamRecord::new(t as u64, r.feature.clone(), scores)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest absolute difference found, and where.
#[derive(Clone, Debug, Default)]
pub struct Gap {
    pub value: f64,
    pub step: usize,
    pub field: &'static str,
}

/// Largest absolute difference over every trace field of one case, or the
/// first flag mismatch.
pub fn compare(case: &Case) -> Result<Gap, String> {
    let mut sight = Sight::from_weights(&case.weights, case.config)
        .map_err(|e| e.to_string())?
        .with_prototype_snapshots(true);
    let mut worst = Gap::default();
    for (t, (rec, want)) in case.records.iter().zip(&case.trace).enumerate() {
        let got: StepTrace = sight.step(&record(t, rec)).map_err(|e| format!("step {t}: {e}"))?;
        if got.annihilated != want.annihilated || got.expected_state_degenerate != want.expected_state_degenerate {
            return Err(format!("step {t}: flags differ"));
        }
        let fields: [(&'static str, &[f64], &[f64]); 8] = [
            ("raw", got.raw.as_slice(), &want.raw),
            ("expected_state", got.expected_state.as_slice(), &want.expected_state),
            ("routing", got.routing.as_slice(), &want.routing),
            ("calibrated_prior", got.calibrated_prior.as_slice(), &want.calibrated_prior),
            ("temporal_prior", got.temporal_prior.as_slice(), &want.temporal_prior),
            ("refined", got.refined.as_slice(), &want.refined),
            ("discrepancy", &[got.discrepancy], &[want.discrepancy]),
            ("surprise", &[got.surprise], &[want.surprise]),
        ];
        let mut note = |field, value| {
            if value > worst.value {
                worst = Gap { value, step: t, field };
            }
        };
        for (field, a, b) in fields {
            note(field, max_diff(a, b));
        }
        if let Some(protos) = &want.prototypes {
            let snap = got.prototypes.as_ref().expect("snapshots enabled");
            for (a, b) in snap.iter().zip(protos) {
                note("prototypes", max_diff(a, b));
            }
        }
    }
    if case.records.len() != case.trace.len() {
        return Err("trace length differs from record count".into());
    }
    Ok(worst)
}
