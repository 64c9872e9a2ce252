use std::path::{Path, PathBuf};

use dpfilter_cli::config::{Experiment, ExperimentConfig};
use serde_json::Value;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema() -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/experiment.schema.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn examples() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::fs::read_dir(repo_root().join("configs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

/// Every key of `value` must be declared by `schema`; tagged unions are
/// resolved through the `kind` constant of each `oneOf` branch.
fn keys_declared(value: &Value, schema: &Value, path: &str, missing: &mut Vec<String>) {
    if let Some(branches) = schema.get("oneOf").and_then(Value::as_array) {
        let kind = value.get("kind");
        let branch = branches
            .iter()
            .find(|b| b["properties"]["kind"]["const"] == *kind.unwrap_or(&Value::Null));
        match branch {
            Some(b) => keys_declared(value, b, path, missing),
            None => missing.push(format!("{path} (no branch for kind {kind:?})")),
        }
        return;
    }
    match value {
        Value::Object(map) => {
            let props = schema.get("properties").and_then(Value::as_object);
            for (k, v) in map {
                if v.is_null() {
                    continue;
                }
                match props.and_then(|p| p.get(k)) {
                    Some(s) => keys_declared(v, s, &format!("{path}.{k}"), missing),
                    None => missing.push(format!("{path}.{k}")),
                }
            }
        }
        Value::Array(items) => {
            if let Some(s) = schema.get("items") {
                for (i, v) in items.iter().enumerate() {
                    keys_declared(v, s, &format!("{path}[{i}]"), missing);
                }
            }
        }
        _ => {}
    }
}

#[test]
fn example_configs_parse_and_build() {
    let list = examples();
    assert!(list.len() >= 6);
    for (name, text) in list {
        let cfg = ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        Experiment::build(cfg, true).unwrap_or_else(|e| panic!("{name}: {e:#}"));
    }
}

#[test]
fn schema_declares_every_accepted_field() {
    let schema = schema();
    for (name, text) in examples() {
        let raw: Value = serde_json::from_str(&text).unwrap();
        let mut missing = Vec::new();
        keys_declared(&raw, &schema, "", &mut missing);
        // the parsed form includes every default the CLI fills in
        let parsed = serde_json::to_value(ExperimentConfig::parse(&text).unwrap()).unwrap();
        keys_declared(&parsed, &schema, "", &mut missing);
        assert!(missing.is_empty(), "{name}: {missing:?}");
    }
}

#[test]
fn schema_rejects_what_the_parser_rejects() {
    let schema = schema();
    for section in [
        "constants",
        "grid",
        "kernel",
        "run",
        "outputs",
        "hamiltonian",
    ] {
        assert_eq!(
            schema["properties"][section]["additionalProperties"], false,
            "{section}"
        );
    }
    let required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    let (_, text) = &examples()[0];
    let full: Value = serde_json::from_str(text).unwrap();
    for key in &required {
        let mut v = full.clone();
        v.as_object_mut().unwrap().remove(*key);
        assert!(
            ExperimentConfig::parse(&v.to_string()).is_err(),
            "{key} should be required"
        );
    }
}
