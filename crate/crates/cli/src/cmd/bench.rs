use serde::Serialize;
use sight::bench::{fit_state_size, measure_latency, state_size_sweep, LatencyReport, StateSizeFit, SWEEP_CLASSES, SWEEP_DIMS};
use sight::Sight;

use super::{check_compatible, load_stream, load_weights, sight_config};
use crate::error::CliResult;
use crate::{plot, BenchArgs};

#[derive(Serialize)]
struct BenchReport {
    latency: LatencyReport,
    state_bytes: usize,
    state_size_fit: StateSizeFit,
}

pub fn run(a: BenchArgs) -> CliResult {
    let cfg = sight_config(a.config.as_deref())?;
    let weights = load_weights(&a.inputs.weights)?;
    let stream = load_stream(&a.inputs)?;
    check_compatible(stream.first(), &weights)?;
    let latency = measure_latency(&weights.weights, cfg, &stream, a.warmup.min(stream.len().saturating_sub(1)))?;

    let mut adapter = Sight::from_weights(&weights.weights, cfg)?;
    if let Some(r) = stream.first() {
        adapter.advance(&r.feature, &r.scores)?;
    }
    let state_bytes = adapter.state().state_bytes();
    let fit = fit_state_size(state_size_sweep(&SWEEP_CLASSES, &SWEEP_DIMS, cfg)?)?;

    println!(
        "latency  K={} d={}  p50 {:.2} us  p95 {:.2} us  mean {:.2} us over {} steps",
        latency.num_classes, latency.dim, latency.p50_us, latency.p95_us, latency.mean_us, latency.n_steps
    );
    println!("state    {state_bytes} bytes");
    println!(
        "fit      bytes = {:.3}·K·d + {:.3}·K + {:.3}  (max residual {:.2e})",
        fit.c_kd, fit.c_k, fit.c_0, fit.max_relative_residual
    );
    if let Some(p) = &a.plot {
        plot::write_rows(p, &fit.points)?;
    }
    if let Some(p) = &a.out {
        super::write_json(
            p,
            &BenchReport {
                latency,
                state_bytes,
                state_size_fit: fit,
            },
        )?;
    }
    Ok(())
}
