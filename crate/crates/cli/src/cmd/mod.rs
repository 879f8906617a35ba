pub mod bench;
pub mod geometry;
pub mod perm;
pub mod run;
pub mod simulate;

use std::path::Path;

use serde_json::Value;
use sight::baselines::MethodSpec;
use sight::io::{read_classifier_weights, read_json_config, read_stream, ClassifierWeights};
use sight::{SightConfig, StreamRecord};

use crate::error::{CliError, CliResult};
use crate::{Inputs, MethodArgs};

pub fn load_weights(path: &Path) -> CliResult<ClassifierWeights> {
    if !path.exists() {
        return Err(CliError::Usage(format!("weights file {} not found", path.display())));
    }
    read_classifier_weights(path).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn load_stream(inputs: &Inputs) -> CliResult<Vec<StreamRecord>> {
    let path = &inputs.stream;
    if !path.exists() {
        return Err(CliError::Usage(format!("stream file {} not found", path.display())));
    }
    read_stream(path, inputs.scores.into())
        .and_then(|r| r.collect())
        .map_err(|e| CliError::from(e).context(path.display()))
}

/// Stream and weights must agree on `K` and `d`.
pub fn check_compatible(first: Option<&StreamRecord>, w: &ClassifierWeights) -> CliResult {
    let Some(r) = first else { return Ok(()) };
    if r.num_classes() != w.num_classes() || r.dim() != w.dim() {
        return Err(CliError::Data(format!(
            "stream has K={} classes and d={} features, weights have K={} and d={}",
            r.num_classes(),
            r.dim(),
            w.num_classes(),
            w.dim()
        )));
    }
    Ok(())
}

fn read_object(path: &Path) -> CliResult<serde_json::Map<String, Value>> {
    if !path.exists() {
        return Err(CliError::Usage(format!("config file {} not found", path.display())));
    }
    match read_json_config::<Value>(path)? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Usage(format!("{}: expected a JSON object", path.display()))),
    }
}

/// Builds the method from its name, an optional parameter file and
/// ablation flags.
pub fn method_spec(args: &MethodArgs) -> CliResult<MethodSpec> {
    let mut spec = match &args.config {
        None => MethodSpec::by_name(&args.method)?,
        Some(path) => {
            let mut obj = read_object(path)?;
            match obj.get("method") {
                Some(Value::String(m)) if *m != args.method => {
                    return Err(CliError::Usage(format!(
                        "{} is for method `{m}`, not `{}`",
                        path.display(),
                        args.method
                    )))
                }
                _ => {}
            }
            MethodSpec::by_name(&args.method)?;
            obj.insert("method".into(), Value::String(args.method.clone()));
            serde_json::from_value(Value::Object(obj))
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    if !args.ablations.is_empty() {
        let MethodSpec::Sight(cfg) = &mut spec else {
            return Err(CliError::Usage("--ablate only applies to --method sight".into()));
        };
        let mut a = cfg.ablations;
        for name in &args.ablations {
            a = a.with(name)?;
        }
        *cfg = cfg.with_ablations(a);
    }
    if let MethodSpec::Sight(cfg) = &spec {
        cfg.validate()?;
    }
    Ok(spec)
}

/// Adapter parameters from an optional file.
pub fn sight_config(path: Option<&Path>) -> CliResult<SightConfig> {
    let cfg = match path {
        None => SightConfig::default(),
        Some(p) => {
            let obj = read_object(p)?;
            serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult {
    Ok(sight::io::write_json(path, value)?)
}
