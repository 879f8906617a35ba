use rayon::prelude::*;
use serde::Serialize;
use sight::baselines::MethodSpec;
use sight::metrics::evaluate;
use sight::simulator::{permute_stream, Order};

use super::{check_compatible, load_stream, load_weights, sight_config};
use crate::error::{CliError, CliResult};
use crate::{plot, thread_pool, PermTestArgs};

#[derive(Serialize)]
struct Cell {
    method: String,
    order: Order,
    seed: u64,
    macro_f1: f64,
}

#[derive(Serialize)]
struct Summary {
    method: String,
    order: Order,
    mean: f64,
    /// Sample standard deviation across seeds; 0 for a single seed.
    sd: f64,
    per_seed: Vec<f64>,
}

#[derive(Serialize)]
struct Table {
    seeds: Vec<u64>,
    rows: Vec<Summary>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

pub fn run(a: PermTestArgs) -> CliResult {
    let sight_cfg = sight_config(a.config.as_deref())?;
    let specs: Vec<MethodSpec> = a
        .methods
        .iter()
        .map(|m| {
            Ok(match MethodSpec::by_name(m)? {
                MethodSpec::Sight(_) => MethodSpec::Sight(sight_cfg),
                other => other,
            })
        })
        .collect::<CliResult<_>>()?;
    let weights = load_weights(&a.inputs.weights)?;
    let stream = load_stream(&a.inputs)?;
    check_compatible(stream.first(), &weights)?;
    if stream.iter().all(|r| r.label.is_none()) {
        return Err(CliError::Data("perm-test needs a labeled stream".into()));
    }

    let jobs: Vec<(u64, Order)> = a
        .seeds
        .iter()
        .flat_map(|s| Order::ALL.map(|o| (*s, o)))
        .collect();
    let pool = thread_pool()?;
    let cells: Vec<Cell> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, order)| {
                let s = permute_stream(&stream, order, seed);
                specs
                    .iter()
                    .map(|spec| {
                        let r = evaluate(spec.build(&weights.weights)?.as_mut(), &s)?;
                        Ok(Cell {
                            method: spec.name().into(),
                            order,
                            seed,
                            macro_f1: r.macro_f1.expect("labeled stream"),
                        })
                    })
                    .collect::<CliResult<Vec<_>>>()
            })
            .collect::<CliResult<Vec<_>>>()
            .map(|v| v.into_iter().flatten().collect())
    })?;

    let mut rows = Vec::new();
    for spec in &specs {
        for order in Order::ALL {
            let per_seed: Vec<f64> = a
                .seeds
                .iter()
                .map(|s| {
                    cells
                        .iter()
                        .find(|c| c.method == spec.name() && c.order == order && c.seed == *s)
                        .expect("every job ran")
                        .macro_f1
                })
                .collect();
            let (mean, sd) = mean_sd(&per_seed);
            rows.push(Summary {
                method: spec.name().into(),
                order,
                mean,
                sd,
                per_seed,
            });
        }
    }

    println!("{:<14} {:>16} {:>16} {:>16}", "method", "chronological", "block32", "shuffle");
    for chunk in rows.chunks(3) {
        let cols: Vec<String> = chunk.iter().map(|r| format!("{:.4} ± {:.4}", r.mean, r.sd)).collect();
        println!("{:<14} {:>16} {:>16} {:>16}", chunk[0].method, cols[0], cols[1], cols[2]);
    }
    if let Some(p) = &a.out {
        super::write_json(
            p,
            &Table {
                seeds: a.seeds.clone(),
                rows,
            },
        )?;
    }
    if let Some(p) = &a.plot {
        plot::write_rows(p, &cells)?;
    }
    Ok(())
}
