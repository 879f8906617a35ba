use serde_json::json;
use sight::baselines::SourceOnly;
use sight::io::{read_json_config, write_classifier_weights, write_stream, write_stream_csv, ClassifierWeights, RunManifest};
use sight::metrics::evaluate;
use sight::simulator::{generate_stream, segments, SimConfig};

use crate::error::{CliError, CliResult};
use crate::SimulateArgs;

pub fn run(a: SimulateArgs) -> CliResult {
    if a.length == 0 {
        return Err(CliError::Usage("--length must be at least 1".into()));
    }
    if !a.config.exists() {
        return Err(CliError::Usage(format!("config file {} not found", a.config.display())));
    }
    let cfg: SimConfig = read_json_config(&a.config)?;
    cfg.validate()?;
    let stream = generate_stream(&cfg, a.length, a.seed)?;

    std::fs::create_dir_all(&a.out)?;
    let mut manifest = RunManifest::start("simulate", Some(a.seed), serde_json::to_value(&cfg).expect("config serializes"));
    manifest.add_input("config", &a.config)?;
    let stream_path = a.out.join("stream.jsonl");
    write_stream(&stream_path, &stream)?;
    manifest.add_output("stream", &stream_path)?;
    if a.csv {
        let p = a.out.join("stream.csv");
        write_stream_csv(&p, &stream)?;
        manifest.add_output("stream_csv", &p)?;
    }
    let weights_path = a.out.join("weights.json");
    write_classifier_weights(&weights_path, &ClassifierWeights::from(cfg.planted_head()))?;
    manifest.add_output("weights", &weights_path)?;
    manifest.config = json!({ "simulator": manifest.config, "length": a.length });
    manifest.finish();
    manifest.write(a.out.join("manifest.json"))?;

    let labels: Vec<Option<usize>> = stream.iter().map(|r| r.label).collect();
    let segs = segments(&labels);
    let mut counts = vec![0usize; cfg.num_classes];
    for l in labels.iter().flatten() {
        counts[*l] += 1;
    }
    let src = evaluate(&mut SourceOnly::new(), &stream)?;
    println!("records            {}", stream.len());
    println!("segments           {}", segs.len());
    println!("mean segment len   {:.2}", stream.len() as f64 / segs.len() as f64);
    let marg: Vec<String> = counts
        .iter()
        .map(|c| format!("{:.3}", *c as f64 / stream.len() as f64))
        .collect();
    println!("class marginals    [{}]", marg.join(", "));
    if let Some(f1) = src.macro_f1 {
        println!("source-only mF1    {f1:.4}");
    }
    println!("wrote              {}", a.out.display());
    Ok(())
}
