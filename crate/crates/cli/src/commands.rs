use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use ptm_core::audit::{audit_lemma, explain_conflation, AuditReport, StepVerdict, StepWitness};
use ptm_core::conditions::{check_all_conditions, ConditionName, ConditionReport};
use ptm_core::fixtures::{counterexample_model, counterexample_reverse, singlet_stats, FixtureId};
use ptm_core::inequalities::{
    chsh, correlation_summary, local_bound_oracle, wigner_check, CorrelationSummary,
    InequalityError, InequalityResult, LocalObjective,
};
use ptm_core::model::{check_no_signalling, sample_run, OnticModel, SignallingVerdict, SplitMix64};
use ptm_core::prob::Rational;
use ptm_core::timereverse::{canonical_ontological_reverse, find_ontological_reverse, ReverseError};

use crate::modelfile::{
    file_from_ontic, file_from_operational, parse_model_file, parse_probability,
    render_model_file, ModelFile, ParsedModel,
};
use crate::CliError;

/// What a command hands back to `main`: a text rendering, a JSON value with
/// deterministic (sorted) keys, and the process exit code.
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub code: i32,
}

fn load(path: &Path) -> Result<ParsedModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_model_file(&text)
}

fn reverse_error(e: ReverseError) -> CliError {
    match e {
        ReverseError::SignallingRequired { ref flag, .. } => {
            CliError::signalling(format!("{e} [{flag}]"))
        }
        other => CliError::input(other.to_string()),
    }
}

fn inequality_error(e: InequalityError) -> CliError {
    match e {
        InequalityError::UnsupportedShape { .. } => CliError::shape(e.to_string()),
        other => CliError::input(other.to_string()),
    }
}

fn signalling_json(v: &SignallingVerdict) -> Value {
    serde_json::to_value(v).expect("verdict serializes")
}

fn conditions_json(report: &ConditionReport) -> Value {
    serde_json::to_value(report).expect("report serializes")
}

fn model_shape_line(model: &ParsedModel) -> String {
    match model {
        ParsedModel::Operational(m) => format!(
            "model: operational  |X|={} |Y|={} |A|={} |B|={}",
            m.prep_settings.len(),
            m.meas_settings.len(),
            m.prep_outputs.len(),
            m.meas_outputs.len()
        ),
        ParsedModel::Ontic(m) => format!(
            "model: ontic  |X|={} |Y|={} |A|={} |B|={} |L|={}",
            m.prep_settings.len(),
            m.meas_settings.len(),
            m.prep_outputs.len(),
            m.meas_outputs.len(),
            m.lambda_space.len()
        ),
    }
}

// ---------------------------------------------------------------------------
// check

pub fn cmd_check(path: &Path, require: Option<&str>) -> Result<Outcome, CliError> {
    let required: Vec<ConditionName> = match require {
        None => Vec::new(),
        Some(list) => {
            let mut names = Vec::new();
            for key in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let name = ConditionName::parse(key).ok_or_else(|| {
                    CliError::input(format!(
                        "unknown condition name {key:?}; expected one of: {}",
                        ConditionName::ALL.map(|c| c.key()).join(", ")
                    ))
                })?;
                names.push(name);
            }
            names
        }
    };

    let model = load(path)?;
    let mut text = String::new();
    text.push_str(&model_shape_line(&model));
    text.push('\n');

    let (validation, conditions, signalling) = match &model {
        ParsedModel::Ontic(m) => {
            let validation = m.validate();
            let conditions = Some(
                check_all_conditions(m).map_err(|e| CliError::input(e.to_string()))?,
            );
            let signalling = match m.to_operational() {
                Ok(op) => Some(
                    check_no_signalling(&op).map_err(|e| CliError::input(e.to_string()))?,
                ),
                Err(_) => None,
            };
            (validation, conditions, signalling)
        }
        ParsedModel::Operational(m) => {
            let validation = m.validate();
            let signalling = Some(
                check_no_signalling(m).map_err(|e| CliError::input(e.to_string()))?,
            );
            (validation, None, signalling)
        }
    };

    text.push_str(&format!("validation: {validation}\n"));
    if let Some(v) = &signalling {
        text.push_str(&format!(
            "no-signalling: forward={} retro={}\n",
            if v.no_forward_signalling { "ok" } else { "VIOLATED" },
            if v.no_retro_signalling { "ok" } else { "VIOLATED" },
        ));
    }
    if let Some(report) = &conditions {
        text.push_str("conditions:\n");
        for outcome in &report.outcomes {
            text.push_str(&format!(
                "  {:<20} {}  {}\n",
                outcome.name.key(),
                if outcome.passed { "PASS" } else { "FAIL" },
                outcome.detail
            ));
        }
    } else {
        text.push_str("conditions: skipped (operational model; condition checks need kind = \"ontic\")\n");
    }

    let mut required_failures: Vec<String> = Vec::new();
    for name in &required {
        let passed = conditions
            .as_ref()
            .and_then(|r| r.outcome(*name))
            .map(|o| o.passed)
            .unwrap_or(false);
        if !passed {
            required_failures.push(name.key().to_string());
        }
    }
    let code = if required_failures.is_empty() { 0 } else { 1 };
    if !required_failures.is_empty() {
        text.push_str(&format!(
            "required conditions failed: {}\n",
            required_failures.join(", ")
        ));
    }

    let json = json!({
        "kind": model.kind(),
        "validation": serde_json::to_value(&validation).expect("serializes"),
        "no_signalling": signalling.as_ref().map(signalling_json),
        "conditions": conditions.as_ref().map(conditions_json),
        "required_failures": required_failures,
    });
    Ok(Outcome { text, json, code })
}

// ---------------------------------------------------------------------------
// reverse

pub fn cmd_reverse(
    path: &Path,
    ontological: bool,
    output: Option<&Path>,
) -> Result<Outcome, CliError> {
    let model = load(path)?;
    let (reverse_file, verification, bijection): (ModelFile, String, Option<Vec<(String, String)>>) =
        if ontological {
            let ontic = model.ontic()?;
            let pair = canonical_ontological_reverse(ontic).map_err(reverse_error)?;
            pair.verify().map_err(reverse_error)?;
            (
                file_from_ontic(&pair.reverse),
                "defining equality re-checked entrywise: pass".to_string(),
                Some(pair.f.pairs().to_vec()),
            )
        } else {
            let operational = model.operational()?;
            let reversed = ptm_core::timereverse::operational_reverse(&operational)
                .map_err(reverse_error)?;
            let verdict = ptm_core::timereverse::is_operational_reverse(&operational, &reversed)
                .map_err(reverse_error)?;
            let note = if verdict.matches {
                "P'(b,a|y,x) = P(a,b|x,y) re-checked entrywise: pass".to_string()
            } else {
                "re-check FAILED".to_string()
            };
            (file_from_operational(&reversed), note, None)
        };

    let rendered = render_model_file(&reverse_file);
    if let Some(out_path) = output {
        fs::write(out_path, &rendered)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", out_path.display())))?;
    }

    let mut text = String::new();
    text.push_str(&model_shape_line(&model));
    text.push('\n');
    if let Some(f) = &bijection {
        let is_identity = f.iter().all(|(s, d)| s == d);
        text.push_str(&format!(
            "bijection f: {}\n",
            if is_identity {
                "identity".to_string()
            } else {
                f.iter()
                    .map(|(s, d)| format!("{s} -> {d}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            }
        ));
    }
    text.push_str(&format!("verification: {verification}\n"));
    match output {
        Some(p) => text.push_str(&format!("reverse model written to {}\n", p.display())),
        None => {
            text.push_str("reverse model:\n");
            text.push_str(&rendered);
        }
    }

    let json = json!({
        "reverse": serde_json::to_value(&reverse_file).expect("serializes"),
        "bijection": bijection,
        "verification": verification,
    });
    Ok(Outcome { text, json, code: 0 })
}

// ---------------------------------------------------------------------------
// audit

fn verdict_word(v: &StepVerdict) -> &'static str {
    match v {
        StepVerdict::Holds { .. } => "HOLDS",
        StepVerdict::Fails { .. } => "FAILS",
        StepVerdict::Vacuous => "VACUOUS",
    }
}

fn witness_line(v: &StepVerdict) -> String {
    match v {
        StepVerdict::Fails { witness } => format!("  witness: {witness}"),
        StepVerdict::Holds { vacuous_cells } if *vacuous_cells > 0 => {
            format!("  ({vacuous_cells} zero-probability cells vacuous)")
        }
        _ => String::new(),
    }
}

fn render_audit_text(report: &AuditReport) -> String {
    let mut text = String::new();
    text.push_str("derivation audit (canonical reverse pair, f = identity):\n");
    for (i, step) in report.steps.iter().enumerate() {
        text.push_str(&format!(
            "  [{}] {:<8} {:<7} {}{}\n",
            i + 1,
            match step.side {
                ptm_core::audit::StepSide::Original => "original",
                ptm_core::audit::StepSide::Reverse => "reverse",
            },
            verdict_word(&step.verdict),
            step.statement,
            witness_line(&step.verdict),
        ));
    }
    text.push_str(&format!("summary: {}\n", report.summary.text));
    text
}

pub fn cmd_audit(path: &Path) -> Result<Outcome, CliError> {
    let model = load(path)?;
    let ontic = model.ontic()?;
    let pair = canonical_ontological_reverse(ontic).map_err(reverse_error)?;
    let report = audit_lemma(&pair).map_err(|e| CliError::input(e.to_string()))?;
    let finding = explain_conflation(&pair).map_err(|e| CliError::input(e.to_string()))?;

    let mut text = String::new();
    text.push_str(&model_shape_line(&model));
    text.push('\n');
    text.push_str(&render_audit_text(&report));
    text.push_str("conflation finding:\n");
    for (label, clause) in [
        ("original independence", &finding.original_independence),
        ("reverse independence", &finding.reverse_independence),
        ("transported claim", &finding.conflated_claim),
    ] {
        text.push_str(&format!(
            "  {:<22} {:<6} {}\n",
            label,
            if clause.holds { "HOLDS" } else { "FAILS" },
            clause.statement
        ));
    }
    text.push_str(&format!("  note: {}\n", finding.note));

    let json = json!({
        "steps": serde_json::to_value(&report.steps).expect("serializes"),
        "summary": serde_json::to_value(&report.summary).expect("serializes"),
        "conflation": serde_json::to_value(&finding).expect("serializes"),
    });
    Ok(Outcome { text, json, code: 0 })
}

// ---------------------------------------------------------------------------
// bell

pub struct BellSettings {
    pub x0: Option<String>,
    pub x1: Option<String>,
    pub y0: Option<String>,
    pub y1: Option<String>,
}

fn pick_setting(
    flag: &Option<String>,
    alphabet: &[String],
    index: usize,
    what: &str,
) -> Result<String, CliError> {
    match flag {
        Some(label) => {
            if alphabet.contains(label) {
                Ok(label.clone())
            } else {
                Err(CliError::input(format!(
                    "{what} label {label:?} is not a declared setting"
                )))
            }
        }
        None => alphabet.get(index).cloned().ok_or_else(|| {
            CliError::input(format!(
                "model has fewer than {} {what} settings; pass explicit setting flags",
                index + 1
            ))
        }),
    }
}

fn summary_text(summary: &CorrelationSummary) -> String {
    let mut text = String::from("correlation summary (exact, decimals for reading):\n");
    text.push_str("  x        y        p_agree      p_disagree   E\n");
    for cell in &summary.cells {
        text.push_str(&format!(
            "  {:<8} {:<8} {:<12} {:<12} {}  ({:.4})\n",
            cell.x,
            cell.y,
            cell.p_agree.to_string(),
            cell.p_disagree.to_string(),
            cell.correlator,
            cell.correlator.to_f64()
        ));
    }
    text
}

fn inequality_text(result: &InequalityResult, bound: &Rational) -> String {
    let mut text = String::new();
    match result.name.as_str() {
        "wigner" => {
            text.push_str(&format!(
                "wigner: p_agree({},{}) + p_agree({},{}) >= p_agree({},{})\n",
                result.terms[0].x,
                result.terms[0].y,
                result.terms[1].x,
                result.terms[1].y,
                result.terms[2].x,
                result.terms[2].y,
            ));
            text.push_str(&format!(
                "  lhs = {} ({:.4}), rhs = {} ({:.4}) -> {}\n",
                result.lhs,
                result.lhs.to_f64(),
                result.rhs,
                result.rhs.to_f64(),
                if result.violated { "VIOLATED" } else { "satisfied" }
            ));
            if let Some(flag) = result.anticorrelated_at_equal_settings {
                text.push_str(&format!(
                    "  perfect anticorrelation at equal settings: {}\n",
                    if flag { "yes" } else { "NO (inequality not applicable as intended)" }
                ));
            }
            text.push_str(&format!(
                "  classical bound of the violation margin (enumerated): {bound}\n"
            ));
        }
        _ => {
            text.push_str("chsh: S = |E1 + E2 + E3 - E4| maximized over sign placements\n");
            for term in &result.terms {
                text.push_str(&format!(
                    "  E({}, {}) = {} ({:.4}) coefficient {}\n",
                    term.x,
                    term.y,
                    term.value,
                    term.value.to_f64(),
                    term.coefficient
                ));
            }
            text.push_str(&format!(
                "  S = {} ({:.4}), classical bound {} (enumerated: {bound}) -> {}\n",
                result.lhs,
                result.lhs.to_f64(),
                result.rhs,
                if result.violated { "VIOLATED" } else { "satisfied" }
            ));
        }
    }
    text
}

pub fn cmd_bell(
    path: &Path,
    inequality: &str,
    settings: &BellSettings,
) -> Result<Outcome, CliError> {
    let model = load(path)?;
    let operational = model.operational()?;
    let summary = correlation_summary(&operational, None).map_err(inequality_error)?;

    let x0 = pick_setting(&settings.x0, &operational.prep_settings, 0, "x0")?;
    let x1 = pick_setting(&settings.x1, &operational.prep_settings, 1, "x1")?;
    let y0 = pick_setting(&settings.y0, &operational.meas_settings, 0, "y0")?;
    let y1 = pick_setting(&settings.y1, &operational.meas_settings, 1, "y1")?;

    let (result, bound) = match inequality {
        "wigner" => {
            let triple = [
                (x0.as_str(), y1.as_str()),
                (x1.as_str(), y0.as_str()),
                (x1.as_str(), y1.as_str()),
            ];
            let result = wigner_check(&summary, &triple).map_err(inequality_error)?;
            let margin = LocalObjective::wigner_margin(&triple, &[(x0.as_str(), y0.as_str())]);
            let bound =
                local_bound_oracle(&operational.prep_settings, &operational.meas_settings, &margin)
                    .map_err(inequality_error)?;
            (result, bound)
        }
        "chsh" => {
            let result = chsh(&summary, &x0, &x1, &y0, &y1).map_err(inequality_error)?;
            let objective = LocalObjective::chsh_form(&x0, &x1, &y0, &y1, 3);
            let bound = local_bound_oracle(
                &operational.prep_settings,
                &operational.meas_settings,
                &objective,
            )
            .map_err(inequality_error)?;
            (result, bound)
        }
        other => {
            return Err(CliError::input(format!(
                "unknown inequality {other:?}; expected wigner or chsh"
            )))
        }
    };

    let mut text = String::new();
    text.push_str(&model_shape_line(&model));
    text.push('\n');
    text.push_str(&summary_text(&summary));
    text.push_str(&inequality_text(&result, &bound));

    let json = json!({
        "summary": serde_json::to_value(&summary).expect("serializes"),
        "result": serde_json::to_value(&result).expect("serializes"),
        "classical_bound": bound.to_string(),
    });
    Ok(Outcome { text, json, code: 0 })
}

// ---------------------------------------------------------------------------
// sample

fn settings_prior(
    model: &OnticModel,
    spec: Option<&str>,
) -> Result<Vec<(String, String, Rational)>, CliError> {
    match spec {
        None | Some("uniform") => {
            let n = model.prep_settings.len() * model.meas_settings.len();
            let p = Rational::one() / Rational::from_int(n as i64);
            let mut cells = Vec::with_capacity(n);
            for x in &model.prep_settings {
                for y in &model.meas_settings {
                    cells.push((x.clone(), y.clone(), p.clone()));
                }
            }
            Ok(cells)
        }
        Some(path) => {
            #[derive(serde::Deserialize)]
            struct DistFile {
                entries: Vec<DistEntry>,
            }
            #[derive(serde::Deserialize)]
            struct DistEntry {
                x: String,
                y: String,
                p: String,
            }
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {path}: {e}")))?;
            let file: DistFile = serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("bad settings distribution: {e}")))?;
            let mut cells = Vec::new();
            let mut total = Rational::zero();
            for x in &model.prep_settings {
                for y in &model.meas_settings {
                    let p = file
                        .entries
                        .iter()
                        .find(|e| &e.x == x && &e.y == y)
                        .map(|e| parse_probability(&e.p))
                        .transpose()?
                        .unwrap_or_else(Rational::zero);
                    total += &p;
                    cells.push((x.clone(), y.clone(), p));
                }
            }
            for entry in &file.entries {
                if !model.prep_settings.contains(&entry.x)
                    || !model.meas_settings.contains(&entry.y)
                {
                    return Err(CliError::input(format!(
                        "settings distribution names unknown pair ({}, {})",
                        entry.x, entry.y
                    )));
                }
            }
            if !total.is_one() {
                return Err(CliError::input(format!(
                    "settings distribution sums to {total}, not 1"
                )));
            }
            Ok(cells)
        }
    }
}

fn draw_settings<'a>(
    cells: &'a [(String, String, Rational)],
    rng: &mut SplitMix64,
) -> (&'a str, &'a str) {
    let draw = rng.next_u64();
    let mut cumulative = Rational::zero();
    for (x, y, p) in cells {
        if p.is_zero() {
            continue;
        }
        cumulative += p;
        if ptm_core::model::u64_draw_below(draw, &cumulative) {
            return (x, y);
        }
    }
    let (x, y, _) = cells
        .iter()
        .rev()
        .find(|(_, _, p)| !p.is_zero())
        .expect("distribution has mass");
    (x, y)
}

pub fn cmd_sample(
    path: &Path,
    runs: i64,
    seed: u64,
    settings_dist: Option<&str>,
) -> Result<Outcome, CliError> {
    if runs <= 0 {
        return Err(CliError::input("run count must be positive"));
    }
    let model = load(path)?;
    let ontic = model.ontic()?;
    let report = ontic.validate();
    if !report.is_valid() {
        return Err(CliError::input(format!("invalid model: {report}")));
    }
    let prior = settings_prior(ontic, settings_dist)?;

    let mut rng = SplitMix64::new(seed);
    #[derive(Default, Clone)]
    struct CellCount {
        runs: u64,
        disagree: u64,
    }
    let mut counts: Vec<((String, String), CellCount)> = prior
        .iter()
        .map(|(x, y, _)| ((x.clone(), y.clone()), CellCount::default()))
        .collect();

    for _ in 0..runs {
        let (x, y) = draw_settings(&prior, &mut rng);
        let record = sample_run(ontic, x, y, &mut rng)
            .map_err(|e| CliError::input(e.to_string()))?;
        let slot = counts
            .iter_mut()
            .find(|((cx, cy), _)| cx == x && cy == y)
            .expect("cell exists");
        slot.1.runs += 1;
        if record.a != record.b {
            slot.1.disagree += 1;
        }
    }

    // Exact disagreement probabilities per cell (same-label pairing).
    let operational = ontic
        .to_operational()
        .map_err(|e| CliError::input(e.to_string()))?;
    let exact_disagree = |x: &str, y: &str| -> Rational {
        let mut total = Rational::zero();
        for a in &operational.prep_outputs {
            for b in &operational.meas_outputs {
                if a != b {
                    total += operational.probability(x, y, a, b).expect("cell");
                }
            }
        }
        total
    };

    let mut text = format!(
        "sampled {runs} runs with seed {seed} (settings: {})\n",
        settings_dist.unwrap_or("uniform")
    );
    text.push_str("  x        y        n        empirical   exact        within-3-sigma\n");
    let mut json_cells = Vec::new();
    let mut all_within = true;
    for ((x, y), cell) in &counts {
        let exact = exact_disagree(x, y);
        let exact_f = exact.to_f64();
        let (empirical, within) = if cell.runs == 0 {
            (f64::NAN, true)
        } else {
            let empirical = cell.disagree as f64 / cell.runs as f64;
            let sigma = (exact_f * (1.0 - exact_f) / cell.runs as f64).sqrt();
            let within = if sigma == 0.0 {
                // Degenerate cells must match exactly.
                Rational::new(cell.disagree as i64, cell.runs as i64) == exact
            } else {
                (empirical - exact_f).abs() <= 3.0 * sigma
            };
            (empirical, within)
        };
        all_within &= within;
        text.push_str(&format!(
            "  {:<8} {:<8} {:<8} {:<11} {:<12} {}\n",
            x,
            y,
            cell.runs,
            if empirical.is_nan() {
                "-".to_string()
            } else {
                format!("{empirical:.6}")
            },
            exact.to_string(),
            if within { "yes" } else { "NO" }
        ));
        json_cells.push(json!({
            "x": x,
            "y": y,
            "runs": cell.runs,
            "disagreements": cell.disagree,
            "empirical_disagree": if empirical.is_nan() { Value::Null } else { json!(format!("{empirical:.6}")) },
            "exact_disagree": exact.to_string(),
            "within_three_sigma": within,
        }));
    }
    let json = json!({
        "runs": runs,
        "seed": seed,
        "cells": json_cells,
        "all_within_three_sigma": all_within,
    });
    Ok(Outcome { text, json, code: 0 })
}

// ---------------------------------------------------------------------------
// export

fn fixture_file(id: FixtureId) -> ModelFile {
    match id {
        FixtureId::Counterexample => file_from_ontic(&counterexample_model()),
        FixtureId::CounterexampleReverse => file_from_ontic(&counterexample_reverse().reverse),
        FixtureId::SingletStats => file_from_operational(&singlet_stats()),
    }
}

pub fn cmd_export(name: &str, output: Option<&Path>) -> Result<Outcome, CliError> {
    let id = FixtureId::parse(name).ok_or_else(|| {
        CliError::input(format!(
            "unknown fixture {name:?}; available: {}",
            FixtureId::ALL.map(|f| f.name()).join(", ")
        ))
    })?;
    let file = fixture_file(id);
    let rendered = render_model_file(&file);
    let text = match output {
        Some(path) => {
            fs::write(path, &rendered)
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            format!("fixture {name} written to {}\n", path.display())
        }
        None => rendered.clone(),
    };
    let json = serde_json::to_value(&file).expect("serializes");
    Ok(Outcome { text, json, code: 0 })
}

// ---------------------------------------------------------------------------
// demo

pub fn cmd_demo() -> Result<Outcome, CliError> {
    let dir = std::env::temp_dir().join(format!("ptmverify-demo-{}", std::process::id()));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::input(format!("cannot create work dir: {e}")))?;
    let result = run_demo(&dir);
    let _ = fs::remove_dir_all(&dir);
    result
}

fn write_and_reload(dir: &Path, name: &str, file: &ModelFile) -> Result<ParsedModel, CliError> {
    let path = dir.join(name);
    fs::write(&path, render_model_file(file))
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::input(format!("cannot read back {}: {e}", path.display())))?;
    parse_model_file(&text)
}

fn record(line: &str, ok: bool, checks: &mut Vec<(String, bool)>) {
    checks.push((line.to_string(), ok));
}

fn run_demo(dir: &Path) -> Result<Outcome, CliError> {
    let mut text = String::new();
    let mut checks: Vec<(String, bool)> = Vec::new();

    // Round trips through the serialized model files.
    let counterexample_src = counterexample_model();
    let pair_src = counterexample_reverse();
    let singlet_src = singlet_stats();

    let counterexample = write_and_reload(
        dir,
        "counterexample.json",
        &file_from_ontic(&counterexample_src),
    )?;
    let reverse_fixture = write_and_reload(
        dir,
        "counterexample-reverse.json",
        &file_from_ontic(&pair_src.reverse),
    )?;
    let singlet = write_and_reload(dir, "singlet-stats.json", &file_from_operational(&singlet_src))?;

    let counterexample = counterexample.ontic()?.clone();
    let reverse_fixture = reverse_fixture.ontic()?.clone();
    let singlet = singlet.operational()?;

    let round_trip_ok = counterexample.joint == counterexample_src.joint
        && reverse_fixture.joint == pair_src.reverse.joint
        && singlet.joint == singlet_src.joint;
    record("model files round-trip entrywise", round_trip_ok, &mut checks);

    // 1. Five conditions.
    let report = check_all_conditions(&counterexample)
        .map_err(|e| CliError::input(e.to_string()))?;
    let conditions_ok = report.all_pass();
    text.push_str("conditions on the counterexample (from the serialized file):\n");
    for outcome in &report.outcomes {
        text.push_str(&format!(
            "  {:<20} {}\n",
            outcome.name.key(),
            if outcome.passed { "PASS" } else { "FAIL" }
        ));
    }
    record("all five conditions pass", conditions_ok, &mut checks);

    // 2. Reverses.
    let pair = canonical_ontological_reverse(&counterexample).map_err(reverse_error)?;
    let canonical_ok = pair.f.is_identity() && pair.verify().is_ok();
    record(
        "canonical reverse verifies with f = identity",
        canonical_ok,
        &mut checks,
    );
    let solutions = find_ontological_reverse(&counterexample, &reverse_fixture)
        .map_err(reverse_error)?;
    let expected_f = pair_src.f.pairs().to_vec();
    let search_ok = solutions.len() == 1 && solutions[0].pairs() == expected_f.as_slice();
    text.push_str(&format!(
        "bijection search against the relabeled reverse: {} solution(s); relabeling map {}\n",
        solutions.len(),
        if search_ok { "found" } else { "NOT FOUND" }
    ));
    record(
        "exhaustive search finds exactly the relabeling map",
        search_ok,
        &mut checks,
    );

    // 3. Inequalities.
    let operational = counterexample
        .to_operational()
        .map_err(|e| CliError::input(e.to_string()))?;
    let summary = correlation_summary(&operational, None).map_err(inequality_error)?;
    let wigner = wigner_check(&summary, &[("0", "-30"), ("30", "0"), ("30", "-30")])
        .map_err(inequality_error)?;
    let chsh_result = chsh(&summary, "0", "30", "0", "-30").map_err(inequality_error)?;
    let chsh_bound = local_bound_oracle(
        &operational.prep_settings,
        &operational.meas_settings,
        &LocalObjective::chsh_form("0", "30", "0", "-30", 3),
    )
    .map_err(inequality_error)?;
    let wigner_bound = local_bound_oracle(
        &operational.prep_settings,
        &operational.meas_settings,
        &LocalObjective::wigner_margin(&[("0", "-30"), ("30", "0"), ("30", "-30")], &[("0", "0")]),
    )
    .map_err(inequality_error)?;
    let inequalities_ok = wigner.violated
        && wigner.lhs == Rational::new(1, 2)
        && wigner.rhs == Rational::new(3, 4)
        && chsh_result.violated
        && chsh_result.lhs == Rational::new(5, 2)
        && chsh_bound == Rational::from_int(2)
        && wigner_bound == Rational::zero();
    text.push_str(&format!(
        "inequalities: wigner lhs {} vs rhs {} ({}), chsh S = {} (bound {}, enumerated)\n",
        wigner.lhs,
        wigner.rhs,
        if wigner.violated { "VIOLATED" } else { "satisfied" },
        chsh_result.lhs,
        chsh_bound,
    ));
    record(
        "wigner and chsh are violated with oracle-certified bounds",
        inequalities_ok,
        &mut checks,
    );

    // 4. Audit.
    let audit = audit_lemma(&pair).map_err(|e| CliError::input(e.to_string()))?;
    text.push_str(&render_audit_text(&audit));
    use ptm_core::audit::StepId as S;
    let witness_ok = matches!(
        &audit.step(S::OnticUnconditional).verdict,
        StepVerdict::Fails { witness: StepWitness::ConditionalVaries(w) }
            if w.outcome.get("lambda") == Some("(0,up)")
                && w.probability_a == Rational::new(1, 2)
                && w.probability_b == Rational::zero()
    );
    let audit_ok = [
        S::ForwardDecomposition,
        S::BayesIdentity,
        S::SubstitutedDecomposition,
        S::OnticIgnoresMeasSetting,
        S::ReverseOnticIndependence,
        S::OutcomeScreening,
        S::PrepOutcomeScreening,
    ]
    .iter()
    .all(|id| audit.step(*id).verdict.holds())
        && !audit.step(S::OnticIgnoresPrepSetting).verdict.holds()
        && !audit.step(S::OnticUnconditional).verdict.holds()
        && witness_ok;
    record(
        "audit isolates the transported settings-independence claim",
        audit_ok,
        &mut checks,
    );

    let all_ok = checks.iter().all(|(_, ok)| *ok);
    text.push_str("\nsummary:\n");
    text.push_str(&format!(
        "  five conditions         : {}\n",
        if conditions_ok { "PASS" } else { "FAIL" }
    ));
    text.push_str(&format!(
        "  inequality violation    : {}\n",
        if inequalities_ok {
            "VIOLATED (wigner 1/2 < 3/4; chsh S = 5/2 > 2)"
        } else {
            "NOT ESTABLISHED"
        }
    ));
    text.push_str(&format!(
        "  unconditional-l claim   : {}\n",
        if audit_ok {
            "FAILS (witness lambda=(0,up): p = 1/2 at x=0 vs 0 at x=30)"
        } else {
            "NOT ESTABLISHED"
        }
    ));
    text.push_str(&format!(
        "  overall                 : {}\n",
        if all_ok { "ok" } else { "FAILED" }
    ));

    let json = json!({
        "checks": checks
            .iter()
            .map(|(line, ok)| json!({ "check": line, "ok": ok }))
            .collect::<Vec<_>>(),
        "conditions_pass": conditions_ok,
        "wigner": serde_json::to_value(&wigner).expect("serializes"),
        "chsh": serde_json::to_value(&chsh_result).expect("serializes"),
        "audit_summary": serde_json::to_value(&audit.summary).expect("serializes"),
        "ok": all_ok,
    });
    Ok(Outcome {
        text,
        json,
        code: if all_ok { 0 } else { 1 },
    })
}

