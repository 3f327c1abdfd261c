//! The on-disk model format: UTF-8 JSON with exact rational probabilities.
//!
//! Probabilities are strings, either `"n/d"` or a decimal with at most six
//! fractional digits; both parse exactly, so serialization round-trips
//! entrywise with no precision loss. Entries may be sparse (missing cells
//! are zero); duplicates are rejected.

use serde::{Deserialize, Serialize};

use ptm_core::model::{OnticModel, OperationalModel};
use ptm_core::prob::Rational;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryRecord {
    pub x: String,
    pub y: String,
    pub a: String,
    pub b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    pub p: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub prep_settings: Vec<String>,
    pub meas_settings: Vec<String>,
    pub prep_outputs: Vec<String>,
    pub meas_outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<String>>,
    pub entries: Vec<EntryRecord>,
}

/// A parsed model of either kind.
#[derive(Debug, Clone)]
pub enum ParsedModel {
    Operational(OperationalModel),
    Ontic(OnticModel),
}

impl ParsedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ParsedModel::Operational(_) => "operational",
            ParsedModel::Ontic(_) => "ontic",
        }
    }

    /// The operational statistics: identity for operational models, the
    /// λ-marginal for ontic ones.
    pub fn operational(&self) -> Result<OperationalModel, CliError> {
        match self {
            ParsedModel::Operational(m) => Ok(m.clone()),
            ParsedModel::Ontic(m) => m
                .to_operational()
                .map_err(|e| CliError::input(format!("invalid model: {e}"))),
        }
    }

    pub fn ontic(&self) -> Result<&OnticModel, CliError> {
        match self {
            ParsedModel::Ontic(m) => Ok(m),
            ParsedModel::Operational(_) => Err(CliError::input(
                "this command needs an ontic model (kind = \"ontic\")",
            )),
        }
    }
}

/// Parses a probability literal under the file format's rules: `"n/d"`, an
/// integer, or a decimal with at most six fractional digits.
pub fn parse_probability(literal: &str) -> Result<Rational, CliError> {
    if let Some((_, frac)) = literal.trim().split_once('.') {
        if frac.len() > 6 {
            return Err(CliError::input(format!(
                "decimal literal {literal:?} has more than 6 fractional digits; \
                 use an exact fraction \"n/d\" instead"
            )));
        }
    }
    let value = Rational::parse(literal)
        .map_err(|e| CliError::input(format!("bad probability literal: {e}")))?;
    Ok(value)
}

pub fn parse_model_file(text: &str) -> Result<ParsedModel, CliError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        CliError::input(format!(
            "model file is not valid JSON (line {}, column {}): {e}",
            e.line(),
            e.column()
        ))
    })?;
    model_from_file(&file)
}

pub fn model_from_file(file: &ModelFile) -> Result<ParsedModel, CliError> {
    let refs = |v: &[String]| -> Vec<String> { v.to_vec() };
    let (x, y, a, b) = (
        refs(&file.prep_settings),
        refs(&file.meas_settings),
        refs(&file.prep_outputs),
        refs(&file.meas_outputs),
    );
    match file.kind.as_str() {
        "operational" => {
            if file.lambda.is_some() || file.entries.iter().any(|e| e.lambda.is_some()) {
                return Err(CliError::input(
                    "operational model files must not carry lambda data",
                ));
            }
            let mut cells: Vec<(Vec<String>, Rational)> = Vec::new();
            for entry in &file.entries {
                let p = parse_probability(&entry.p)?;
                cells.push((
                    vec![
                        entry.x.clone(),
                        entry.y.clone(),
                        entry.a.clone(),
                        entry.b.clone(),
                    ],
                    p,
                ));
            }
            let mut seen: Vec<&Vec<String>> = Vec::new();
            for (key, _) in &cells {
                if seen.contains(&key) {
                    return Err(CliError::input(format!("duplicate entry for {key:?}")));
                }
                seen.push(key);
            }
            let model = OperationalModel::from_fn(
                &to_refs(&x),
                &to_refs(&y),
                &to_refs(&a),
                &to_refs(&b),
                |cx, cy, ca, cb| {
                    cells
                        .iter()
                        .find(|(k, _)| k[0] == cx && k[1] == cy && k[2] == ca && k[3] == cb)
                        .map(|(_, p)| p.clone())
                        .unwrap_or_else(Rational::zero)
                },
            )
            .map_err(|e| CliError::input(format!("bad model structure: {e}")))?;
            check_entry_labels(file, None)?;
            Ok(ParsedModel::Operational(model))
        }
        "ontic" => {
            let lambda = file.lambda.clone().ok_or_else(|| {
                CliError::input("ontic model files need a top-level \"lambda\" list")
            })?;
            let mut cells: Vec<(Vec<String>, Rational)> = Vec::new();
            for entry in &file.entries {
                let l = entry.lambda.clone().ok_or_else(|| {
                    CliError::input("every entry of an ontic model needs a \"lambda\" label")
                })?;
                let p = parse_probability(&entry.p)?;
                cells.push((
                    vec![
                        entry.x.clone(),
                        entry.y.clone(),
                        entry.a.clone(),
                        entry.b.clone(),
                        l,
                    ],
                    p,
                ));
            }
            let mut seen: Vec<&Vec<String>> = Vec::new();
            for (key, _) in &cells {
                if seen.contains(&key) {
                    return Err(CliError::input(format!("duplicate entry for {key:?}")));
                }
                seen.push(key);
            }
            let model = OnticModel::from_fn(
                &to_refs(&x),
                &to_refs(&y),
                &to_refs(&a),
                &to_refs(&b),
                &to_refs(&lambda),
                |cx, cy, ca, cb, cl| {
                    cells
                        .iter()
                        .find(|(k, _)| {
                            k[0] == cx && k[1] == cy && k[2] == ca && k[3] == cb && k[4] == cl
                        })
                        .map(|(_, p)| p.clone())
                        .unwrap_or_else(Rational::zero)
                },
            )
            .map_err(|e| CliError::input(format!("bad model structure: {e}")))?;
            check_entry_labels(file, Some(&lambda))?;
            Ok(ParsedModel::Ontic(model))
        }
        other => Err(CliError::input(format!(
            "unknown model kind {other:?}; expected \"operational\" or \"ontic\""
        ))),
    }
}

/// Rejects entries whose labels are not declared in the alphabets (the
/// dense builders would silently treat them as zero otherwise).
fn check_entry_labels(file: &ModelFile, lambda: Option<&[String]>) -> Result<(), CliError> {
    for entry in &file.entries {
        let checks = [
            (&entry.x, &file.prep_settings, "x"),
            (&entry.y, &file.meas_settings, "y"),
            (&entry.a, &file.prep_outputs, "a"),
            (&entry.b, &file.meas_outputs, "b"),
        ];
        for (label, alphabet, which) in checks {
            if !alphabet.contains(label) {
                return Err(CliError::input(format!(
                    "entry label {label:?} for {which} is not in the declared alphabet"
                )));
            }
        }
        if let (Some(space), Some(l)) = (lambda, &entry.lambda) {
            if !space.contains(l) {
                return Err(CliError::input(format!(
                    "entry lambda {l:?} is not in the declared ontic space"
                )));
            }
        }
    }
    Ok(())
}

fn to_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn file_from_operational(model: &OperationalModel) -> ModelFile {
    let mut entries = Vec::new();
    for x in &model.prep_settings {
        for y in &model.meas_settings {
            for a in &model.prep_outputs {
                for b in &model.meas_outputs {
                    let p = model.probability(x, y, a, b).expect("cell");
                    entries.push(EntryRecord {
                        x: x.clone(),
                        y: y.clone(),
                        a: a.clone(),
                        b: b.clone(),
                        lambda: None,
                        p: p.to_string(),
                    });
                }
            }
        }
    }
    ModelFile {
        kind: "operational".to_string(),
        prep_settings: model.prep_settings.clone(),
        meas_settings: model.meas_settings.clone(),
        prep_outputs: model.prep_outputs.clone(),
        meas_outputs: model.meas_outputs.clone(),
        lambda: None,
        entries,
    }
}

pub fn file_from_ontic(model: &OnticModel) -> ModelFile {
    let mut entries = Vec::new();
    for x in &model.prep_settings {
        for y in &model.meas_settings {
            for a in &model.prep_outputs {
                for b in &model.meas_outputs {
                    for lambda in &model.lambda_space {
                        let p = model.probability(x, y, a, b, lambda).expect("cell");
                        entries.push(EntryRecord {
                            x: x.clone(),
                            y: y.clone(),
                            a: a.clone(),
                            b: b.clone(),
                            lambda: Some(lambda.clone()),
                            p: p.to_string(),
                        });
                    }
                }
            }
        }
    }
    ModelFile {
        kind: "ontic".to_string(),
        prep_settings: model.prep_settings.clone(),
        meas_settings: model.meas_settings.clone(),
        prep_outputs: model.prep_outputs.clone(),
        meas_outputs: model.meas_outputs.clone(),
        lambda: Some(model.lambda_space.clone()),
        entries,
    }
}

/// Canonical serialized form: pretty JSON with sorted keys and a trailing
/// newline, identical bytes for identical models.
pub fn render_model_file(file: &ModelFile) -> String {
    let value = serde_json::to_value(file).expect("model file serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value renders");
    text.push('\n');
    text
}
