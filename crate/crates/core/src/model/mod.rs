//! The prepare-transform-measure experiment data model.
//!
//! An [`OperationalModel`] is the observable statistics `P(a,b|x,y)` of an
//! experiment whose preparation takes setting `x` and shows output `a`, and
//! whose measurement takes setting `y` and shows output `b`. An
//! [`OnticModel`] extends it with a finite ontic state space and a joint
//! `p(a,b,λ|x,y)` whose λ-marginal recovers the operational statistics.
//!
//! Settings are exogenous: models store no distribution over `(x,y)`.
//! Checks that need one (and the sampler, via the CLI) take an explicit
//! settings distribution, defaulting to uniform. Models are immutable after
//! validation and all checks are pure.

mod sampler;

pub use sampler::{sample_run, u64_draw_below, RunRecord, SplitMix64};

use std::fmt;

use serde::Serialize;

use crate::prob::{Assignment, IrrelevanceWitness, ProbError, ProbTable, Rational, Variable};
use thiserror::Error;

/// Canonical variable names used in every model table.
pub const VAR_PREP_SETTING: &str = "x";
pub const VAR_MEAS_SETTING: &str = "y";
pub const VAR_PREP_OUTPUT: &str = "a";
pub const VAR_MEAS_OUTPUT: &str = "b";
pub const VAR_ONTIC: &str = "lambda";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error(transparent)]
    Prob(#[from] ProbError),

    #[error("model failed validation: {report}")]
    Invalid { report: ValidationReport },

    #[error("channel input space {got:?} does not match the model's ontic space {expected:?}")]
    SpaceMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("unknown {variable} label {label:?}")]
    UnknownSetting { variable: String, label: String },

    #[error("transformation kernel row {row} sums to {sum}, not 1")]
    UnnormalizedChannel { row: Assignment, sum: Rational },
}

/// One defect found by validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ValidationIssue {
    EmptyAlphabet { which: String },
    EmptyOnticSpace,
    UnnormalizedRow { row: Assignment, sum: Rational },
    ImproperProbability { at: Assignment, value: Rational },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::EmptyAlphabet { which } => {
                write!(f, "alphabet {which:?} is empty")
            }
            ValidationIssue::EmptyOnticSpace => write!(f, "ontic space is empty"),
            ValidationIssue::UnnormalizedRow { row, sum } => {
                write!(f, "row {row} sums to {sum}, not 1")
            }
            ValidationIssue::ImproperProbability { at, value } => {
                write!(f, "entry {at} has value {value} outside [0, 1]")
            }
        }
    }
}

/// Validation outcome: empty iff the model is well formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

fn validate_table(
    joint: &ProbTable,
    alphabets: &[(&str, &[String])],
    report: &mut ValidationReport,
) {
    for (which, labels) in alphabets {
        if labels.is_empty() {
            let issue = if *which == VAR_ONTIC {
                ValidationIssue::EmptyOnticSpace
            } else {
                ValidationIssue::EmptyAlphabet {
                    which: which.to_string(),
                }
            };
            report.issues.push(issue);
        }
    }
    if !report.issues.is_empty() {
        // Tables over empty alphabets have no rows to speak about.
        return;
    }
    for (at, value) in joint.iter() {
        if !value.is_proper_probability() {
            report.issues.push(ValidationIssue::ImproperProbability {
                at,
                value: value.clone(),
            });
        }
    }
    for (row, sum) in joint.row_sums() {
        if !sum.is_one() {
            report
                .issues
                .push(ValidationIssue::UnnormalizedRow { row, sum });
        }
    }
}

/// Observable statistics `P(a,b|x,y)` of a PTM experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationalModel {
    pub prep_settings: Vec<String>,
    pub meas_settings: Vec<String>,
    pub prep_outputs: Vec<String>,
    pub meas_outputs: Vec<String>,
    pub joint: ProbTable,
}

impl OperationalModel {
    /// Builds the model by evaluating `p` on every `(x, y, a, b)` cell.
    pub fn from_fn<F>(
        prep_settings: &[&str],
        meas_settings: &[&str],
        prep_outputs: &[&str],
        meas_outputs: &[&str],
        mut p: F,
    ) -> Result<Self, ModelError>
    where
        F: FnMut(&str, &str, &str, &str) -> Rational,
    {
        let joint = ProbTable::from_fn(
            vec![
                Variable::new(VAR_PREP_OUTPUT, prep_outputs.iter().copied()),
                Variable::new(VAR_MEAS_OUTPUT, meas_outputs.iter().copied()),
            ],
            vec![
                Variable::new(VAR_PREP_SETTING, prep_settings.iter().copied()),
                Variable::new(VAR_MEAS_SETTING, meas_settings.iter().copied()),
            ],
            |cell| {
                p(
                    cell.expect(VAR_PREP_SETTING),
                    cell.expect(VAR_MEAS_SETTING),
                    cell.expect(VAR_PREP_OUTPUT),
                    cell.expect(VAR_MEAS_OUTPUT),
                )
            },
        )?;
        Ok(OperationalModel {
            prep_settings: prep_settings.iter().map(|s| s.to_string()).collect(),
            meas_settings: meas_settings.iter().map(|s| s.to_string()).collect(),
            prep_outputs: prep_outputs.iter().map(|s| s.to_string()).collect(),
            meas_outputs: meas_outputs.iter().map(|s| s.to_string()).collect(),
            joint,
        })
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        validate_table(
            &self.joint,
            &[
                (VAR_PREP_SETTING, &self.prep_settings),
                (VAR_MEAS_SETTING, &self.meas_settings),
                (VAR_PREP_OUTPUT, &self.prep_outputs),
                (VAR_MEAS_OUTPUT, &self.meas_outputs),
            ],
            &mut report,
        );
        report
    }

    /// `P(a, b | x, y)` at explicit labels.
    pub fn probability(&self, x: &str, y: &str, a: &str, b: &str) -> Result<Rational, ModelError> {
        Ok(self
            .joint
            .value(&[
                (VAR_PREP_SETTING, x),
                (VAR_MEAS_SETTING, y),
                (VAR_PREP_OUTPUT, a),
                (VAR_MEAS_OUTPUT, b),
            ])?
            .clone())
    }

    /// Extends the model with a one-point ontic space (the ontic state
    /// carries no information).
    pub fn with_trivial_ontic(&self, lambda_label: &str) -> Result<OnticModel, ModelError> {
        let op = self.clone();
        OnticModel::from_fn(
            &str_refs(&op.prep_settings),
            &str_refs(&op.meas_settings),
            &str_refs(&op.prep_outputs),
            &str_refs(&op.meas_outputs),
            &[lambda_label],
            |x, y, a, b, _| op.probability(x, y, a, b).expect("operational cell"),
        )
    }
}

pub(crate) fn str_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Ontic extension `p(a,b,λ|x,y)` of an operational model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnticModel {
    pub prep_settings: Vec<String>,
    pub meas_settings: Vec<String>,
    pub prep_outputs: Vec<String>,
    pub meas_outputs: Vec<String>,
    pub lambda_space: Vec<String>,
    pub joint: ProbTable,
}

impl OnticModel {
    /// Builds the model by evaluating `p` on every `(x, y, a, b, λ)` cell.
    pub fn from_fn<F>(
        prep_settings: &[&str],
        meas_settings: &[&str],
        prep_outputs: &[&str],
        meas_outputs: &[&str],
        lambda_space: &[&str],
        mut p: F,
    ) -> Result<Self, ModelError>
    where
        F: FnMut(&str, &str, &str, &str, &str) -> Rational,
    {
        let joint = ProbTable::from_fn(
            vec![
                Variable::new(VAR_PREP_OUTPUT, prep_outputs.iter().copied()),
                Variable::new(VAR_MEAS_OUTPUT, meas_outputs.iter().copied()),
                Variable::new(VAR_ONTIC, lambda_space.iter().copied()),
            ],
            vec![
                Variable::new(VAR_PREP_SETTING, prep_settings.iter().copied()),
                Variable::new(VAR_MEAS_SETTING, meas_settings.iter().copied()),
            ],
            |cell| {
                p(
                    cell.expect(VAR_PREP_SETTING),
                    cell.expect(VAR_MEAS_SETTING),
                    cell.expect(VAR_PREP_OUTPUT),
                    cell.expect(VAR_MEAS_OUTPUT),
                    cell.expect(VAR_ONTIC),
                )
            },
        )?;
        Ok(OnticModel {
            prep_settings: prep_settings.iter().map(|s| s.to_string()).collect(),
            meas_settings: meas_settings.iter().map(|s| s.to_string()).collect(),
            prep_outputs: prep_outputs.iter().map(|s| s.to_string()).collect(),
            meas_outputs: meas_outputs.iter().map(|s| s.to_string()).collect(),
            lambda_space: lambda_space.iter().map(|s| s.to_string()).collect(),
            joint,
        })
    }

    /// Reports every normalization or alphabet defect; empty iff valid.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        validate_table(
            &self.joint,
            &[
                (VAR_PREP_SETTING, &self.prep_settings),
                (VAR_MEAS_SETTING, &self.meas_settings),
                (VAR_PREP_OUTPUT, &self.prep_outputs),
                (VAR_MEAS_OUTPUT, &self.meas_outputs),
                (VAR_ONTIC, &self.lambda_space),
            ],
            &mut report,
        );
        report
    }

    /// `p(a, b, λ | x, y)` at explicit labels.
    pub fn probability(
        &self,
        x: &str,
        y: &str,
        a: &str,
        b: &str,
        lambda: &str,
    ) -> Result<Rational, ModelError> {
        Ok(self
            .joint
            .value(&[
                (VAR_PREP_SETTING, x),
                (VAR_MEAS_SETTING, y),
                (VAR_PREP_OUTPUT, a),
                (VAR_MEAS_OUTPUT, b),
                (VAR_ONTIC, lambda),
            ])?
            .clone())
    }

    /// The λ-marginal: the operational statistics this extension realizes.
    pub fn to_operational(&self) -> Result<OperationalModel, ModelError> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(ModelError::Invalid { report });
        }
        let joint = self.joint.marginalize(&[VAR_PREP_OUTPUT, VAR_MEAS_OUTPUT])?;
        Ok(OperationalModel {
            prep_settings: self.prep_settings.clone(),
            meas_settings: self.meas_settings.clone(),
            prep_outputs: self.prep_outputs.clone(),
            meas_outputs: self.meas_outputs.clone(),
            joint,
        })
    }

    /// Uniform settings distribution over this model's `(x, y)` space.
    pub fn uniform_settings(&self) -> ProbTable {
        ProbTable::uniform(vec![
            Variable::new(VAR_PREP_SETTING, self.prep_settings.iter().map(String::as_str)),
            Variable::new(VAR_MEAS_SETTING, self.meas_settings.iter().map(String::as_str)),
        ])
        .expect("settings alphabets are nonempty")
    }

    /// The unconditional joint `p(a,b,λ,x,y)` under a settings distribution
    /// (uniform when `prior` is `None`). Checks that quantify over settings
    /// as random variables run on this table; for any full-support settings
    /// distribution they yield the same verdicts.
    pub fn lifted_joint(&self, prior: Option<&ProbTable>) -> Result<ProbTable, ModelError> {
        let uniform;
        let prior = match prior {
            Some(p) => p,
            None => {
                uniform = self.uniform_settings();
                &uniform
            }
        };
        Ok(self.joint.with_prior(prior)?)
    }
}

/// A stochastic channel `p(λ_out | λ_in)` applied between preparation and
/// measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationChannel {
    pub input_space: Vec<String>,
    pub output_space: Vec<String>,
    pub kernel: ProbTable,
}

impl TransformationChannel {
    pub fn from_fn<F>(
        input_space: &[&str],
        output_space: &[&str],
        mut k: F,
    ) -> Result<Self, ModelError>
    where
        F: FnMut(&str, &str) -> Rational,
    {
        let kernel = ProbTable::from_fn(
            vec![Variable::new("lambda_out", output_space.iter().copied())],
            vec![Variable::new("lambda_in", input_space.iter().copied())],
            |cell| k(cell.expect("lambda_in"), cell.expect("lambda_out")),
        )?;
        for (row, sum) in kernel.row_sums() {
            if !sum.is_one() {
                return Err(ModelError::UnnormalizedChannel { row, sum });
            }
        }
        Ok(TransformationChannel {
            input_space: input_space.iter().map(|s| s.to_string()).collect(),
            output_space: output_space.iter().map(|s| s.to_string()).collect(),
            kernel,
        })
    }

    /// The identity channel on a space.
    pub fn identity(space: &[&str]) -> Self {
        TransformationChannel::from_fn(space, space, |l_in, l_out| {
            if l_in == l_out {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .expect("identity kernel is row-stochastic")
    }
}

/// Composes a transformation into the ontic model:
/// `p'(a,b,λ_out|x,y) = Σ_{λ_in} p(λ_out|λ_in) · p(a,b,λ_in|x,y)`.
///
/// The identity channel returns an entrywise-equal model.
pub fn compose_transformation(
    prep_stage: &OnticModel,
    channel: &TransformationChannel,
) -> Result<OnticModel, ModelError> {
    if channel.input_space != prep_stage.lambda_space {
        return Err(ModelError::SpaceMismatch {
            expected: prep_stage.lambda_space.clone(),
            got: channel.input_space.clone(),
        });
    }
    let out_space = str_refs(&channel.output_space);
    OnticModel::from_fn(
        &str_refs(&prep_stage.prep_settings),
        &str_refs(&prep_stage.meas_settings),
        &str_refs(&prep_stage.prep_outputs),
        &str_refs(&prep_stage.meas_outputs),
        &out_space,
        |x, y, a, b, l_out| {
            let mut total = Rational::zero();
            for l_in in &prep_stage.lambda_space {
                let k = channel
                    .kernel
                    .value(&[("lambda_in", l_in.as_str()), ("lambda_out", l_out)])
                    .expect("kernel cell");
                if k.is_zero() {
                    continue;
                }
                let p = prep_stage
                    .probability(x, y, a, b, l_in)
                    .expect("ontic cell");
                total += k * p;
            }
            total
        },
    )
}

/// No-signalling verdict: forward means the measurement outcome marginal
/// `p(b|x,y)` ignores the preparation setting `x`; retro means the
/// preparation outcome marginal `p(a|x,y)` ignores the measurement setting
/// `y`. Witnesses carry the first violation found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignallingVerdict {
    pub no_forward_signalling: bool,
    pub forward_witness: Option<IrrelevanceWitness>,
    pub no_retro_signalling: bool,
    pub retro_witness: Option<IrrelevanceWitness>,
}

impl SignallingVerdict {
    pub fn is_no_signalling(&self) -> bool {
        self.no_forward_signalling && self.no_retro_signalling
    }
}

pub fn check_no_signalling(model: &OperationalModel) -> Result<SignallingVerdict, ModelError> {
    let p_b = model.joint.marginalize(&[VAR_MEAS_OUTPUT])?;
    let forward_witness = p_b.independent_of_conditioner(VAR_PREP_SETTING)?;
    let p_a = model.joint.marginalize(&[VAR_PREP_OUTPUT])?;
    let retro_witness = p_a.independent_of_conditioner(VAR_MEAS_SETTING)?;
    Ok(SignallingVerdict {
        no_forward_signalling: forward_witness.is_none(),
        forward_witness,
        no_retro_signalling: retro_witness.is_none(),
        retro_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Rational {
        Rational::new(1, 2)
    }

    /// a fair and independent of everything; b copies x.
    fn forward_signalling_model() -> OperationalModel {
        OperationalModel::from_fn(&["0", "1"], &["m"], &["u", "d"], &["0", "1"], |x, _, _, b| {
            if b == x {
                half()
            } else {
                Rational::zero()
            }
        })
        .unwrap()
    }

    #[test]
    fn validation_flags_unnormalized_rows() {
        let model = OnticModel::from_fn(&["0"], &["0"], &["u"], &["u"], &["l"], |_, _, _, _, _| {
            Rational::new(9, 10)
        })
        .unwrap();
        let report = model.validate();
        assert!(!report.is_valid());
        assert!(matches!(
            report.issues[0],
            ValidationIssue::UnnormalizedRow { .. }
        ));
    }

    #[test]
    fn validation_flags_empty_ontic_space() {
        // The table itself cannot be built over an empty alphabet, so an
        // empty-Λ model is represented with the issue surfaced by validate.
        let model = OnticModel::from_fn(&["0"], &["0"], &["u"], &["u"], &["l"], |_, _, _, _, _| {
            Rational::one()
        });
        let mut model = model.unwrap();
        model.lambda_space.clear();
        let report = model.validate();
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::EmptyOnticSpace)));
    }

    #[test]
    fn trivial_ontic_extension_round_trips() {
        let op = forward_signalling_model();
        let ontic = op.with_trivial_ontic("l0").unwrap();
        assert_eq!(ontic.to_operational().unwrap().joint, op.joint);
    }

    #[test]
    fn identity_channel_composition_is_entrywise_equal() {
        let op = forward_signalling_model();
        let ontic = op.with_trivial_ontic("l0").unwrap();
        let id = TransformationChannel::identity(&["l0"]);
        assert_eq!(compose_transformation(&ontic, &id).unwrap(), ontic);
    }

    #[test]
    fn collapsing_channel_yields_point_mass_marginal() {
        let op = forward_signalling_model();
        let ontic = op.with_trivial_ontic("l0").unwrap();
        let collapse = TransformationChannel::from_fn(&["l0"], &["sink", "other"], |_, out| {
            if out == "sink" {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        let composed = compose_transformation(&ontic, &collapse).unwrap();
        let marginal = composed.joint.marginalize(&[VAR_ONTIC]).unwrap();
        for (assignment, p) in marginal.iter() {
            if assignment.get(VAR_ONTIC) == Some("sink") {
                assert!(p.is_one());
            } else {
                assert!(p.is_zero());
            }
        }
    }

    #[test]
    fn channel_space_mismatch_is_an_error() {
        let op = forward_signalling_model();
        let ontic = op.with_trivial_ontic("l0").unwrap();
        let wrong = TransformationChannel::identity(&["other"]);
        assert!(matches!(
            compose_transformation(&ontic, &wrong),
            Err(ModelError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn signalling_model_is_flagged_with_witness() {
        let verdict = check_no_signalling(&forward_signalling_model()).unwrap();
        assert!(!verdict.no_forward_signalling);
        assert!(verdict.forward_witness.is_some());
        assert!(verdict.no_retro_signalling);
    }

    #[test]
    fn single_setting_models_are_vacuously_no_signalling() {
        let m = OperationalModel::from_fn(&["0"], &["0"], &["u", "d"], &["u", "d"], |_, _, a, b| {
            if a == b {
                Rational::zero()
            } else {
                half()
            }
        })
        .unwrap();
        let verdict = check_no_signalling(&m).unwrap();
        assert!(verdict.is_no_signalling());
    }
}
