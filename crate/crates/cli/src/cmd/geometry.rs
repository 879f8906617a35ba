use serde::Serialize;
use sight::simulator::{directional_ranking, validate_transition_geometry, DirectionalRanking, GeometryReport};
use sight::{PrototypeBank, EPSILON};

use super::{check_compatible, load_stream, load_weights};
use crate::error::CliResult;
use crate::{plot, GeometryArgs};

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    geometry: GeometryReport,
    directional: DirectionalRanking,
}

#[derive(Serialize)]
struct Row {
    kind: &'static str,
    similarity: f64,
}

pub fn run(a: GeometryArgs) -> CliResult {
    let weights = load_weights(&a.inputs.weights)?;
    let stream = load_stream(&a.inputs)?;
    check_compatible(stream.first(), &weights)?;
    let bank = PrototypeBank::from_weights(&weights.weights, EPSILON)?;
    let mut geometry = validate_transition_geometry(&stream, &bank, EPSILON)?;
    let directional = directional_ranking(&stream, &bank, EPSILON)?;

    println!(
        "within   n={:<6} mean {:.4}  sd {:.4}",
        geometry.n_within, geometry.within_mean, geometry.within_sd
    );
    println!(
        "boundary n={:<6} mean {:.4}  sd {:.4}",
        geometry.n_boundary, geometry.boundary_mean, geometry.boundary_sd
    );
    match geometry.separability {
        Some(s) => println!("separability {s:.2} pooled SD"),
        None => println!("separability undefined (zero spread)"),
    }
    println!(
        "directional top-1 {:.4} over {} boundaries (random {:.4})",
        directional.top1_accuracy, directional.n_boundaries, directional.random_baseline
    );

    if let Some(p) = &a.plot {
        let within = geometry.within.iter().map(|s| Row {
            kind: "within",
            similarity: *s,
        });
        let boundary = geometry.boundary.iter().map(|s| Row {
            kind: "boundary",
            similarity: *s,
        });
        plot::write_rows(p, within.chain(boundary))?;
    }
    if let Some(p) = &a.out {
        // per-step values go to the plot file, not the summary
        geometry.within.clear();
        geometry.boundary.clear();
        super::write_json(p, &Report { geometry, directional })?;
    }
    Ok(())
}
