use serde::Serialize;
use sight::geometry::{argmax, SIMPLEX_TOLERANCE};
use sight::io::{read_stream, PredictionRow, RunManifest, TraceKind, TraceWriter};
use sight::metrics::Evaluator;

use super::{check_compatible, load_weights, method_spec};
use crate::error::{CliError, CliResult};
use crate::{plot, RunArgs};

#[derive(Serialize)]
struct StepRow {
    t: u64,
    label: Option<usize>,
    prediction: usize,
    confidence: f64,
    lambda: Option<f64>,
}

/// Hard checks on every step: refined belief on the simplex, gate in [0, 1].
fn check_step(t: u64, refined: &[f64], lambda: Option<f64>) -> CliResult {
    let sum: f64 = refined.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE || refined.iter().any(|p| !(*p >= 0.0)) {
        return Err(CliError::Invariant(format!("step {t}: refined belief {refined:?} is off the simplex")));
    }
    if let Some(l) = lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(CliError::Invariant(format!("step {t}: surprise {l} outside [0, 1]")));
        }
    }
    Ok(())
}

pub fn run(a: RunArgs) -> CliResult {
    let spec = method_spec(&a.method)?;
    let weights = load_weights(&a.inputs.weights)?;
    if !a.inputs.stream.exists() {
        return Err(CliError::Usage(format!("stream file {} not found", a.inputs.stream.display())));
    }
    let reader = read_stream(&a.inputs.stream, a.inputs.scores.into())?;
    let mut method = spec.build(&weights.weights)?;
    if a.snapshots {
        if let sight::baselines::MethodSpec::Sight(cfg) = &spec {
            method = Box::new(sight::Sight::from_weights(&weights.weights, *cfg)?.with_prototype_snapshots(true));
        }
    }
    let kind = match spec {
        sight::baselines::MethodSpec::Sight(_) => TraceKind::Steps,
        _ => TraceKind::Predictions,
    };
    let mut trace = a.trace.as_ref().map(|p| TraceWriter::create(p, kind)).transpose()?;
    let mut eval = Evaluator::new(spec.name(), weights.num_classes());
    let mut rows = Vec::new();
    let mut first = true;
    for record in reader {
        let record = record.map_err(|e| CliError::from(e).context(a.inputs.stream.display()))?;
        if first {
            check_compatible(Some(&record), &weights)?;
            first = false;
        }
        let out = method.step(&record)?;
        check_step(record.t, out.refined.as_slice(), out.surprise)?;
        eval.push(record.label, out.refined.as_slice(), out.surprise, out.annihilated)?;
        if let Some(w) = trace.as_mut() {
            match &out.trace {
                Some(st) => w.write_step(st)?,
                None => w.write_prediction(&PredictionRow {
                    t: record.t,
                    label: record.label,
                    refined: out.refined.clone(),
                    surprise: out.surprise,
                    annihilated: out.annihilated,
                })?,
            }
        }
        if a.plot.is_some() {
            let p = argmax(out.refined.as_slice());
            rows.push(StepRow {
                t: record.t,
                label: record.label,
                prediction: p,
                confidence: out.refined.as_slice()[p],
                lambda: out.surprise,
            });
        }
    }
    if let Some(w) = trace {
        w.finish()?;
    }
    let report = eval.finish();
    super::write_json(&a.report, &report)?;

    let mut manifest = RunManifest::start(spec.name(), None, serde_json::to_value(&spec).expect("spec serializes"));
    manifest.add_input("stream", &a.inputs.stream)?;
    manifest.add_input("weights", &a.inputs.weights)?;
    manifest.add_output("report", &a.report)?;
    if let Some(p) = &a.trace {
        manifest.add_output("trace", p)?;
    }
    if let Some(p) = &a.plot {
        plot::write_rows(p, rows)?;
        manifest.add_output("plot", p)?;
    }
    manifest.finish();
    let manifest_path = a.manifest.clone().unwrap_or_else(|| {
        let mut p = a.report.clone().into_os_string();
        p.push(".manifest.json");
        p.into()
    });
    manifest.write(&manifest_path)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match report.macro_f1 {
        Some(f1) => println!("{}: macro-F1 {f1:.4} over {} labeled steps", report.method, report.n_labeled),
        None => println!("{}: {} steps, no labels", report.method, report.n_steps),
    }
    if let (Some(b), Some(w)) = (report.lambda_at_boundaries, report.lambda_within_segments) {
        println!("lambda at boundaries {b:.4}, within segments {w:.4}");
    }
    Ok(())
}
