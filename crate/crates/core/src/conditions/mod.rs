//! Checkers for the five named causal conditions, Bell's locality
//! factorization, and causal-graph acyclicity.
//!
//! Condition checks that quantify over settings as random variables (such as
//! λ-mediation) run on the model's joint lifted with a uniform settings
//! distribution; the verdicts are the same for every full-support settings
//! distribution, since only conditionals given the settings are compared.

mod graph;

pub use graph::{check_acyclic, AcyclicityVerdict, CausalGraph, GraphError};

use std::fmt;

use serde::Serialize;

use crate::model::{
    ModelError, OnticModel, ValidationIssue, VAR_MEAS_OUTPUT, VAR_MEAS_SETTING, VAR_ONTIC,
    VAR_PREP_OUTPUT, VAR_PREP_SETTING,
};
use crate::prob::{check_independence, Assignment, DependenceWitness, IndependenceVerdict, Rational};
use crate::timereverse::{check_time_symmetry, TimeSymmetryVerdict};

/// The five conditions of the purported no-go derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionName {
    FreeChoice,
    Realism,
    LambdaMediation,
    NoRetrocausality,
    TimeSymmetry,
}

impl ConditionName {
    pub const ALL: [ConditionName; 5] = [
        ConditionName::FreeChoice,
        ConditionName::Realism,
        ConditionName::LambdaMediation,
        ConditionName::NoRetrocausality,
        ConditionName::TimeSymmetry,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            ConditionName::FreeChoice => "free_choice",
            ConditionName::Realism => "realism",
            ConditionName::LambdaMediation => "lambda_mediation",
            ConditionName::NoRetrocausality => "no_retrocausality",
            ConditionName::TimeSymmetry => "time_symmetry",
        }
    }

    pub fn parse(key: &str) -> Option<ConditionName> {
        ConditionName::ALL.iter().copied().find(|c| c.key() == key)
    }
}

impl fmt::Display for ConditionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

/// Concrete evidence for a failed check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ConditionWitness {
    UnnormalizedRow { row: Assignment, sum: Rational },
    EmptyOnticSpace,
    ImproperProbability { at: Assignment, value: Rational },
    Dependence(DependenceWitness),
    NoSignallingObstruction { flag: String },
}

/// Verdict for one of the five conditions, with a witness whenever it fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionOutcome {
    pub name: ConditionName,
    pub passed: bool,
    pub detail: String,
    pub witness: Option<ConditionWitness>,
}

impl ConditionOutcome {
    fn pass(name: ConditionName, detail: impl Into<String>) -> Self {
        ConditionOutcome {
            name,
            passed: true,
            detail: detail.into(),
            witness: None,
        }
    }

    fn fail(name: ConditionName, detail: impl Into<String>, witness: ConditionWitness) -> Self {
        ConditionOutcome {
            name,
            passed: false,
            detail: detail.into(),
            witness: Some(witness),
        }
    }
}

/// Per-condition verdicts in fixed order; every failure carries a witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub outcomes: Vec<ConditionOutcome>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn outcome(&self, name: ConditionName) -> Option<&ConditionOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

/// Verdict of the Bell locality factorization check (not one of the five
/// conditions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalityVerdict {
    pub local: bool,
    pub detail: String,
    pub witness: Option<DependenceWitness>,
}

/// Free choice: the settings are jointly unconstrained, i.e. the model's
/// table is defined and normalized for every pair in the full setting
/// product space.
pub fn check_free_choice(model: &OnticModel) -> Result<ConditionOutcome, ModelError> {
    for (row, sum) in model.joint.row_sums() {
        if !sum.is_one() {
            return Ok(ConditionOutcome::fail(
                ConditionName::FreeChoice,
                format!("setting pair {row} is missing or unnormalized (sum {sum})"),
                ConditionWitness::UnnormalizedRow { row, sum },
            ));
        }
    }
    Ok(ConditionOutcome::pass(
        ConditionName::FreeChoice,
        "every setting pair in the full product space carries a normalized distribution",
    ))
}

/// Realism: a nonempty finite ontic space, and a proper joint distribution
/// over `(a, b, λ)` for every setting pair, so every run determines definite
/// values for all five variables.
pub fn check_realism(model: &OnticModel) -> Result<ConditionOutcome, ModelError> {
    let report = model.validate();
    if let Some(issue) = report.issues.first() {
        let (detail, witness) = match issue {
            ValidationIssue::EmptyOnticSpace => (
                "the ontic space is empty".to_string(),
                ConditionWitness::EmptyOnticSpace,
            ),
            ValidationIssue::EmptyAlphabet { which } => (
                format!("alphabet {which:?} is empty"),
                ConditionWitness::EmptyOnticSpace,
            ),
            ValidationIssue::UnnormalizedRow { row, sum } => (
                format!("row {row} carries total probability {sum}, not 1"),
                ConditionWitness::UnnormalizedRow {
                    row: row.clone(),
                    sum: sum.clone(),
                },
            ),
            ValidationIssue::ImproperProbability { at, value } => (
                format!("entry {at} has value {value} outside [0, 1]"),
                ConditionWitness::ImproperProbability {
                    at: at.clone(),
                    value: value.clone(),
                },
            ),
        };
        return Ok(ConditionOutcome::fail(ConditionName::Realism, detail, witness));
    }
    Ok(ConditionOutcome::pass(
        ConditionName::Realism,
        "finite nonempty ontic space with a proper distribution per setting pair",
    ))
}

/// λ-mediation: the ontic state screens the measurement outcome from the
/// preparation variables, `p(b | λ, a, x, y) = p(b | λ, y)` — checked as
/// `b ⫫ {a, x} | {λ, y}` exactly, with zero-probability conditioning
/// assignments vacuous.
pub fn check_lambda_mediation(model: &OnticModel) -> Result<ConditionOutcome, ModelError> {
    let lifted = model.lifted_joint(None)?;
    let verdict = check_independence(
        &lifted,
        &[VAR_MEAS_OUTPUT],
        &[VAR_PREP_OUTPUT, VAR_PREP_SETTING],
        &[VAR_ONTIC, VAR_MEAS_SETTING],
    )?;
    Ok(match verdict {
        IndependenceVerdict::Independent => ConditionOutcome::pass(
            ConditionName::LambdaMediation,
            "b is conditionally independent of (a, x) given (lambda, y)",
        ),
        IndependenceVerdict::Dependent { witness } => ConditionOutcome::fail(
            ConditionName::LambdaMediation,
            format!("mediation fails {witness}"),
            ConditionWitness::Dependence(*witness),
        ),
    })
}

/// No retrocausality: non-input variables are conditionally independent of
/// the input in their future, checked as the two exact independences that
/// license the forward decomposition: `a ⫫ y | x` and `λ ⫫ y | (a, x)`.
pub fn check_no_retrocausality(model: &OnticModel) -> Result<ConditionOutcome, ModelError> {
    let lifted = model.lifted_joint(None)?;
    let output_clause = check_independence(
        &lifted,
        &[VAR_PREP_OUTPUT],
        &[VAR_MEAS_SETTING],
        &[VAR_PREP_SETTING],
    )?;
    if let IndependenceVerdict::Dependent { witness } = output_clause {
        return Ok(ConditionOutcome::fail(
            ConditionName::NoRetrocausality,
            format!("preparation outcome depends on the later setting: {witness}"),
            ConditionWitness::Dependence(*witness),
        ));
    }
    let ontic_clause = check_independence(
        &lifted,
        &[VAR_ONTIC],
        &[VAR_MEAS_SETTING],
        &[VAR_PREP_OUTPUT, VAR_PREP_SETTING],
    )?;
    if let IndependenceVerdict::Dependent { witness } = ontic_clause {
        return Ok(ConditionOutcome::fail(
            ConditionName::NoRetrocausality,
            format!("ontic state depends on the later setting: {witness}"),
            ConditionWitness::Dependence(*witness),
        ));
    }
    Ok(ConditionOutcome::pass(
        ConditionName::NoRetrocausality,
        "a independent of y given x, and lambda independent of y given (a, x), exactly",
    ))
}

/// Bell's locality factorization for the two-wing reading of the model:
/// `p(a,b|x,y,λ) = p(a|x,λ) · p(b|y,λ)` wherever `p(λ|x,y) > 0`, checked as
/// the three exact conditional independences it is equivalent to.
pub fn check_bell_locality(model: &OnticModel) -> Result<LocalityVerdict, ModelError> {
    struct FactorCheck {
        failure: &'static str,
        a: &'static [&'static str],
        b: &'static [&'static str],
        given: &'static [&'static str],
    }
    const CHECKS: [FactorCheck; 3] = [
        FactorCheck {
            failure: "outcomes are not screened off by (x, y, lambda)",
            a: &[VAR_PREP_OUTPUT],
            b: &[VAR_MEAS_OUTPUT],
            given: &[VAR_PREP_SETTING, VAR_MEAS_SETTING, VAR_ONTIC],
        },
        FactorCheck {
            failure: "a depends on the distant setting y given (x, lambda)",
            a: &[VAR_PREP_OUTPUT],
            b: &[VAR_MEAS_SETTING],
            given: &[VAR_PREP_SETTING, VAR_ONTIC],
        },
        FactorCheck {
            failure: "b depends on the distant setting x given (y, lambda)",
            a: &[VAR_MEAS_OUTPUT],
            b: &[VAR_PREP_SETTING],
            given: &[VAR_MEAS_SETTING, VAR_ONTIC],
        },
    ];
    let lifted = model.lifted_joint(None)?;
    for check in CHECKS {
        if let IndependenceVerdict::Dependent { witness } =
            check_independence(&lifted, check.a, check.b, check.given)?
        {
            return Ok(LocalityVerdict {
                local: false,
                detail: format!("factorization fails: {}: {witness}", check.failure),
                witness: Some(*witness),
            });
        }
    }
    Ok(LocalityVerdict {
        local: true,
        detail: "p(a,b|x,y,lambda) factorizes as p(a|x,lambda) * p(b|y,lambda)".to_string(),
        witness: None,
    })
}

/// Runs the five conditions in the report order; time symmetry delegates to
/// the time-reverse machinery.
pub fn check_all_conditions(model: &OnticModel) -> Result<ConditionReport, ModelError> {
    let outcomes = vec![
        check_free_choice(model)?,
        check_realism(model)?,
        check_lambda_mediation(model)?,
        check_no_retrocausality(model)?,
        time_symmetry_outcome(model)?,
    ];
    Ok(ConditionReport { outcomes })
}

fn time_symmetry_outcome(model: &OnticModel) -> Result<ConditionOutcome, ModelError> {
    let verdict = check_time_symmetry(model)?;
    Ok(match verdict {
        TimeSymmetryVerdict {
            symmetric: true, ..
        } => ConditionOutcome::pass(
            ConditionName::TimeSymmetry,
            "an ontological time reverse exists (canonical identity-map construction)",
        ),
        TimeSymmetryVerdict {
            symmetric: false,
            obstruction,
        } => {
            let flag = match &obstruction {
                Some(v) if !v.no_forward_signalling => "forward signalling",
                Some(_) => "retro signalling",
                None => "signalling",
            }
            .to_string();
            ConditionOutcome::fail(
                ConditionName::TimeSymmetry,
                format!("no-signalling violated ({flag}); the reverse construction is unavailable"),
                ConditionWitness::NoSignallingObstruction { flag },
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OperationalModel;

    /// b copies x through lambda while a stays fair: mediated but signalling.
    fn signalling_ontic() -> OnticModel {
        OnticModel::from_fn(
            &["0", "1"],
            &["m"],
            &["u", "d"],
            &["0", "1"],
            &["l0", "l1"],
            |x, _, _, b, l| {
                let carried = if l == "l1" { "1" } else { "0" };
                if carried == x && b == carried {
                    Rational::new(1, 2)
                } else {
                    Rational::zero()
                }
            },
        )
        .unwrap()
    }

    /// b copies y deterministically, lambda constant: mediation fails on x?
    /// No: b depends only on y here, so mediation holds; used for locality.
    fn y_copy_model() -> OnticModel {
        OnticModel::from_fn(&["p"], &["0", "1"], &["u"], &["0", "1"], &["l"], |_, y, _, b, _| {
            if b == y {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .unwrap()
    }

    #[test]
    fn free_choice_fails_on_missing_row() {
        let mut model = y_copy_model();
        // Zero out one whole setting row: that pair is "missing".
        model.joint = crate::prob::ProbTable::from_fn(
            model.joint.outcome_vars().to_vec(),
            model.joint.cond_vars().to_vec(),
            |cell| {
                if cell.expect(VAR_MEAS_SETTING) == "1" {
                    Rational::zero()
                } else if cell.expect(VAR_MEAS_OUTPUT) == cell.expect(VAR_MEAS_SETTING) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            },
        )
        .unwrap();
        let outcome = check_free_choice(&model).unwrap();
        assert!(!outcome.passed);
        match outcome.witness {
            Some(ConditionWitness::UnnormalizedRow { row, .. }) => {
                assert_eq!(row.get(VAR_MEAS_SETTING), Some("1"));
            }
            other => panic!("expected row witness, got {other:?}"),
        }
    }

    #[test]
    fn realism_fails_on_empty_ontic_space_and_deficient_rows() {
        let mut model = y_copy_model();
        model.lambda_space.clear();
        assert!(!check_realism(&model).unwrap().passed);

        let deficient = OnticModel::from_fn(&["p"], &["m"], &["u"], &["v"], &["l"], |_, _, _, _, _| {
            Rational::new(9, 10)
        })
        .unwrap();
        let outcome = check_realism(&deficient).unwrap();
        assert!(!outcome.passed);
        assert!(matches!(
            outcome.witness,
            Some(ConditionWitness::UnnormalizedRow { .. })
        ));
    }

    #[test]
    fn mediation_holds_when_b_is_a_function_of_lambda_and_y() {
        assert!(check_lambda_mediation(&y_copy_model()).unwrap().passed);
    }

    #[test]
    fn singleton_setting_models_satisfy_free_choice() {
        let model = OnticModel::from_fn(&["p"], &["m"], &["u", "d"], &["v"], &["l"], |_, _, a, _, _| {
            if a == "u" {
                Rational::new(1, 3)
            } else {
                Rational::new(2, 3)
            }
        })
        .unwrap();
        assert!(check_free_choice(&model).unwrap().passed);
    }

    #[test]
    fn mediation_fails_when_b_reads_x_directly() {
        // lambda constant, b copies x: nothing mediates.
        let model = OnticModel::from_fn(
            &["0", "1"],
            &["m"],
            &["u"],
            &["0", "1"],
            &["l"],
            |x, _, _, b, _| {
                if b == x {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            },
        )
        .unwrap();
        let outcome = check_lambda_mediation(&model).unwrap();
        assert!(!outcome.passed);
        assert!(matches!(
            outcome.witness,
            Some(ConditionWitness::Dependence(_))
        ));
    }

    #[test]
    fn no_retrocausality_fails_when_lambda_shifts_with_y() {
        let model = OnticModel::from_fn(
            &["p"],
            &["0", "1"],
            &["u"],
            &["v"],
            &["l0", "l1"],
            |_, y, _, _, l| {
                let wanted = if y == "0" { "l0" } else { "l1" };
                if l == wanted {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            },
        )
        .unwrap();
        let outcome = check_no_retrocausality(&model).unwrap();
        assert!(!outcome.passed);
    }

    #[test]
    fn no_retrocausality_fails_when_a_copies_y() {
        let model = OnticModel::from_fn(
            &["p"],
            &["0", "1"],
            &["0", "1"],
            &["v"],
            &["l"],
            |_, y, a, _, _| {
                if a == y {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            },
        )
        .unwrap();
        let outcome = check_no_retrocausality(&model).unwrap();
        assert!(!outcome.passed);
        assert!(outcome.detail.contains("preparation outcome"));
    }

    #[test]
    fn time_symmetry_fails_with_reason_on_signalling_model() {
        let outcome = time_symmetry_outcome(&signalling_ontic()).unwrap();
        assert!(!outcome.passed);
        assert!(matches!(
            outcome.witness,
            Some(ConditionWitness::NoSignallingObstruction { .. })
        ));
    }

    #[test]
    fn singlet_statistics_with_trivial_lambda_are_nonlocal() {
        let singlet = OperationalModel::from_fn(
            &["0", "30"],
            &["0", "-30"],
            &["up", "down"],
            &["up", "down"],
            |x, y, a, b| {
                let agree = match (x, y) {
                    ("0", "0") => Rational::zero(),
                    ("30", "-30") => Rational::new(3, 4),
                    _ => Rational::new(1, 4),
                };
                if a == b {
                    agree / Rational::from_int(2)
                } else {
                    (Rational::one() - agree) / Rational::from_int(2)
                }
            },
        )
        .unwrap();
        let ontic = singlet.with_trivial_ontic("l0").unwrap();
        let verdict = check_bell_locality(&ontic).unwrap();
        assert!(!verdict.local);
    }

    #[test]
    fn deterministic_function_of_lambda_and_y_is_local() {
        assert!(check_bell_locality(&y_copy_model()).unwrap().local);
    }
}
