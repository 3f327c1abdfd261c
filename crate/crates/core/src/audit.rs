//! Step-by-step audit of the independence derivation.
//!
//! Given a reverse pair, the audit evaluates each claimed equality of the
//! derivation chain in exact arithmetic against the concrete tables and
//! reports which steps hold and which fail, with witnesses. The chain runs:
//! the forward decomposition licensed by no-retrocausality, the Bayes
//! identity, the substituted decomposition, the original-side independence
//! `p(λ|x,y) = p(λ|x)`, the reverse-side independence carried by the
//! pairing, then the three claims the derivation draws from them: the
//! transported settings independence `p(λ|x,y) = p(λ|y)`, the unconditional
//! claim `p(λ|x,y) = p(λ)`, and the two screening equalities.
//!
//! Conditionals that quantify over settings (such as `p(λ|a,x)`) are
//! computed under a uniform settings distribution; for any full-support
//! distribution the verdicts are identical. Zero-probability conditionals
//! are reported as vacuous, never silently passed.

use std::fmt;

use serde::Serialize;

use crate::inequalities::{
    chsh, correlation_summary, wigner_check, CorrelationSummary, InequalityError, InequalityResult,
};
use crate::model::{
    check_no_signalling, ModelError, OnticModel, OperationalModel, SignallingVerdict,
    VAR_MEAS_OUTPUT, VAR_MEAS_SETTING, VAR_ONTIC, VAR_PREP_OUTPUT, VAR_PREP_SETTING,
};
use crate::prob::{
    check_independence, Assignment, IndependenceVerdict, IrrelevanceWitness, ProbError, ProbTable,
    Rational, Variable,
};
use crate::timereverse::{ReverseError, ReversePair};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AuditError {
    #[error("reverse pair invariant does not hold: {0}")]
    InvalidPair(ReverseError),

    #[error("settings distribution must give every setting pair positive probability; zero at {at}")]
    SettingsNotFullSupport { at: Assignment },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Prob(#[from] ProbError),

    #[error(transparent)]
    Inequality(#[from] InequalityError),
}

/// The audited steps, in derivation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepId {
    /// `p(a,b,λ|x,y) = p(b|λ,x,a,y) · p(λ|a,x) · p(a|x)`
    ForwardDecomposition,
    /// `p(λ|a,x) = p(a|λ,x) · p(λ|x) / p(a|x)`
    BayesIdentity,
    /// `p(a,b,λ|x,y) = p(b|λ,x,a,y) · p(a|λ,x) · p(λ|x)`
    SubstitutedDecomposition,
    /// `p(λ|x,y) = p(λ|x)`
    OnticIgnoresMeasSetting,
    /// Reverse side: `p'(f(λ)|y,x) = p'(f(λ)|x)`
    ReverseOnticIndependence,
    /// `p(λ|x,y) = p(λ|y)` — the transported claim
    OnticIgnoresPrepSetting,
    /// `p(λ|x,y) = p(λ)`
    OnticUnconditional,
    /// `p(b|λ,x,y) = p(b|λ,y)`
    OutcomeScreening,
    /// `p(a|λ,x,y) = p(a|λ,x)`
    PrepOutcomeScreening,
}

impl StepId {
    pub fn statement(&self) -> &'static str {
        match self {
            StepId::ForwardDecomposition => "p(a,b,l|x,y) = p(b|l,x,a,y) * p(l|a,x) * p(a|x)",
            StepId::BayesIdentity => "p(l|a,x) = p(a|l,x) * p(l|x) / p(a|x)",
            StepId::SubstitutedDecomposition => {
                "p(a,b,l|x,y) = p(b|l,x,a,y) * p(a|l,x) * p(l|x)"
            }
            StepId::OnticIgnoresMeasSetting => "p(l|x,y) = p(l|x)",
            StepId::ReverseOnticIndependence => "reverse: p'(f(l)|y,x) = p'(f(l)|x)",
            StepId::OnticIgnoresPrepSetting => "p(l|x,y) = p(l|y)",
            StepId::OnticUnconditional => "p(l|x,y) = p(l)",
            StepId::OutcomeScreening => "p(b|l,x,y) = p(b|l,y)",
            StepId::PrepOutcomeScreening => "p(a|l,x,y) = p(a|l,x)",
        }
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StepId::ForwardDecomposition => "forward-decomposition",
            StepId::BayesIdentity => "bayes-identity",
            StepId::SubstitutedDecomposition => "substituted-decomposition",
            StepId::OnticIgnoresMeasSetting => "ontic-ignores-meas-setting",
            StepId::ReverseOnticIndependence => "reverse-ontic-independence",
            StepId::OnticIgnoresPrepSetting => "ontic-ignores-prep-setting",
            StepId::OnticUnconditional => "ontic-unconditional",
            StepId::OutcomeScreening => "outcome-screening",
            StepId::PrepOutcomeScreening => "prep-outcome-screening",
        };
        write!(f, "{name}")
    }
}

/// Which model a step is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepSide {
    Original,
    Reverse,
}

/// Failure witness: either a mismatching decomposition entry, or a
/// conditional that changes with the supposedly irrelevant setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StepWitness {
    EntryMismatch {
        at: Assignment,
        lhs: Rational,
        rhs: Rational,
    },
    ConditionalVaries(IrrelevanceWitness),
}

impl fmt::Display for StepWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepWitness::EntryMismatch { at, lhs, rhs } => {
                write!(f, "at {at}: lhs {lhs}, rhs {rhs}")
            }
            StepWitness::ConditionalVaries(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
// The witness stays inline so callers can pattern-match the nested shapes.
#[allow(clippy::large_enum_variant)]
pub enum StepVerdict {
    /// Every defined comparison holds; `vacuous_cells` comparisons were
    /// skipped at zero-probability conditionals.
    Holds { vacuous_cells: usize },
    Fails { witness: StepWitness },
    /// No comparison was defined at all.
    Vacuous,
}

impl StepVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, StepVerdict::Holds { .. } | StepVerdict::Vacuous)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditStep {
    pub id: StepId,
    pub statement: String,
    pub side: StepSide,
    pub verdict: StepVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditSummary {
    pub first_failing: Option<StepId>,
    pub text: String,
}

/// Ordered per-step verdicts plus a summary naming the first failing
/// inference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub steps: Vec<AuditStep>,
    pub summary: AuditSummary,
}

impl AuditReport {
    pub fn step(&self, id: StepId) -> &AuditStep {
        self.steps
            .iter()
            .find(|s| s.id == id)
            .expect("all steps are always present")
    }
}

/// Product of all label assignments of `vars`, as name/label pairs.
fn assignments(vars: &[Variable]) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for v in vars {
        let mut next = Vec::with_capacity(out.len() * v.labels.len());
        for partial in &out {
            for label in &v.labels {
                let mut assignment = partial.clone();
                assignment.push((v.name.clone(), label.clone()));
                next.push(assignment);
            }
        }
        out = next;
    }
    out
}

fn as_refs(pairs: &[(String, String)]) -> Vec<(&str, &str)> {
    pairs.iter().map(|(n, l)| (n.as_str(), l.as_str())).collect()
}

/// Lifted-joint conditional machinery: marginal tables of the unconditional
/// `p(a,b,λ,x,y)` under a settings distribution, with ratio lookups.
struct Conditionals {
    full: ProbTable,
    m_lxay: ProbTable,
    m_lax: ProbTable,
    m_lx: ProbTable,
    m_ax: ProbTable,
    m_x: ProbTable,
}

impl Conditionals {
    fn new(model: &OnticModel, settings: Option<&ProbTable>) -> Result<Self, AuditError> {
        let full = model.lifted_joint(settings)?;
        Ok(Conditionals {
            m_lxay: full.marginalize(&[VAR_ONTIC, VAR_PREP_SETTING, VAR_PREP_OUTPUT, VAR_MEAS_SETTING])?,
            m_lax: full.marginalize(&[VAR_ONTIC, VAR_PREP_OUTPUT, VAR_PREP_SETTING])?,
            m_lx: full.marginalize(&[VAR_ONTIC, VAR_PREP_SETTING])?,
            m_ax: full.marginalize(&[VAR_PREP_OUTPUT, VAR_PREP_SETTING])?,
            m_x: full.marginalize(&[VAR_PREP_SETTING])?,
            full,
        })
    }

    fn value(table: &ProbTable, pairs: &[(&str, &str)]) -> Rational {
        let relevant: Vec<(&str, &str)> = pairs
            .iter()
            .filter(|(n, _)| table.outcome_var(n).is_some() || table.cond_var(n).is_some())
            .cloned()
            .collect();
        table.value(&relevant).expect("marginal cell").clone()
    }

    /// `p(b | λ, x, a, y)` as (numerator, denominator).
    fn b_given_lxay(&self, pairs: &[(&str, &str)]) -> (Rational, Rational) {
        (
            Self::value(&self.full, pairs),
            Self::value(&self.m_lxay, pairs),
        )
    }

    /// `p(λ | a, x)` as (numerator, denominator).
    fn l_given_ax(&self, pairs: &[(&str, &str)]) -> (Rational, Rational) {
        (Self::value(&self.m_lax, pairs), Self::value(&self.m_ax, pairs))
    }

    /// `p(a | λ, x)` as (numerator, denominator).
    fn a_given_lx(&self, pairs: &[(&str, &str)]) -> (Rational, Rational) {
        (Self::value(&self.m_lax, pairs), Self::value(&self.m_lx, pairs))
    }

    /// `p(λ | x)` as (numerator, denominator).
    fn l_given_x(&self, pairs: &[(&str, &str)]) -> (Rational, Rational) {
        (Self::value(&self.m_lx, pairs), Self::value(&self.m_x, pairs))
    }

    /// `p(a | x)` as (numerator, denominator).
    fn a_given_x(&self, pairs: &[(&str, &str)]) -> (Rational, Rational) {
        (Self::value(&self.m_ax, pairs), Self::value(&self.m_x, pairs))
    }
}

/// Checks an entrywise product decomposition `p(a,b,λ|x,y) = Π factors`,
/// where each factor is a conditional given as (numerator, denominator)
/// from the lifted joint. Cells where a factor is undefined (zero
/// denominator) are vacuous; such cells necessarily carry zero probability.
fn check_decomposition<F>(model: &OnticModel, factors: F) -> Result<StepVerdict, AuditError>
where
    F: Fn(&Conditionals, &[(&str, &str)]) -> Vec<(Rational, Rational)>,
{
    let conds = Conditionals::new(model, None)?;
    let mut vacuous = 0usize;
    let mut compared = 0usize;
    let all_vars: Vec<Variable> = model
        .joint
        .cond_vars()
        .iter()
        .chain(model.joint.outcome_vars())
        .cloned()
        .collect();
    for assignment in assignments(&all_vars) {
        let pairs = as_refs(&assignment);
        let lhs = model.joint.value(&pairs)?.clone();
        let parts = factors(&conds, &pairs);
        if parts.iter().any(|(_, den)| den.is_zero()) {
            vacuous += 1;
            if !lhs.is_zero() {
                // Unreachable for full-support settings distributions; kept
                // as a hard failure rather than a silent skip.
                return Ok(StepVerdict::Fails {
                    witness: StepWitness::EntryMismatch {
                        at: Assignment(assignment),
                        lhs,
                        rhs: Rational::zero(),
                    },
                });
            }
            continue;
        }
        let mut rhs = Rational::one();
        for (num, den) in parts {
            rhs = rhs * (num / den);
        }
        compared += 1;
        if lhs != rhs {
            return Ok(StepVerdict::Fails {
                witness: StepWitness::EntryMismatch {
                    at: Assignment(assignment),
                    lhs,
                    rhs,
                },
            });
        }
    }
    Ok(if compared == 0 {
        StepVerdict::Vacuous
    } else {
        StepVerdict::Holds {
            vacuous_cells: vacuous,
        }
    })
}

/// Verdict for "this normalized conditional table ignores `varied`".
fn table_ignores(table: &ProbTable, varied: &str) -> Result<StepVerdict, AuditError> {
    Ok(match table.independent_of_conditioner(varied)? {
        None => StepVerdict::Holds { vacuous_cells: 0 },
        Some(w) => StepVerdict::Fails {
            witness: StepWitness::ConditionalVaries(w),
        },
    })
}

/// Verdict for a screening equality: the model conditional
/// `num_full/den_full` (given all settings) must equal the reduced
/// conditional `num_reduced/den_reduced` (with one setting summed out under
/// the uniform settings distribution) wherever the full conditional is
/// defined. The verdict is identical for every full-support settings
/// distribution: equal slices average to themselves, unequal slices always
/// disagree with some average.
fn conditional_matches_reduced(
    num_full: &ProbTable,
    den_full: &ProbTable,
    num_reduced: &ProbTable,
    den_reduced: &ProbTable,
) -> Result<StepVerdict, AuditError> {
    let all_vars: Vec<Variable> = num_full
        .cond_vars()
        .iter()
        .chain(num_full.outcome_vars())
        .cloned()
        .collect();
    let mut vacuous = 0usize;
    let mut compared = 0usize;
    for assignment in assignments(&all_vars) {
        let pairs = as_refs(&assignment);
        let den = Conditionals::value(den_full, &pairs);
        if den.is_zero() {
            vacuous += 1;
            continue;
        }
        let lhs = Conditionals::value(num_full, &pairs) / den;
        let reduced_den = Conditionals::value(den_reduced, &pairs);
        // A positive full conditional forces positive mass in the reduction.
        debug_assert!(!reduced_den.is_zero());
        let rhs = Conditionals::value(num_reduced, &pairs) / reduced_den;
        compared += 1;
        if lhs != rhs {
            return Ok(StepVerdict::Fails {
                witness: StepWitness::EntryMismatch {
                    at: Assignment(assignment),
                    lhs,
                    rhs,
                },
            });
        }
    }
    Ok(if compared == 0 {
        StepVerdict::Vacuous
    } else {
        StepVerdict::Holds {
            vacuous_cells: vacuous,
        }
    })
}

/// Audits the full derivation chain on a reverse pair. Steps are evaluated
/// independently of one another, in derivation order, each against the
/// concrete tables.
pub fn audit_lemma(pair: &ReversePair) -> Result<AuditReport, AuditError> {
    pair.verify().map_err(AuditError::InvalidPair)?;

    let original = &pair.original;
    let reverse = &pair.reverse;

    let mut steps = Vec::with_capacity(9);

    // (a) Forward decomposition.
    steps.push(AuditStep {
        id: StepId::ForwardDecomposition,
        statement: StepId::ForwardDecomposition.statement().to_string(),
        side: StepSide::Original,
        verdict: check_decomposition(original, |c, pairs| {
            vec![c.b_given_lxay(pairs), c.l_given_ax(pairs), c.a_given_x(pairs)]
        })?,
    });

    // (b) Bayes identity, evaluated as written.
    steps.push(AuditStep {
        id: StepId::BayesIdentity,
        statement: StepId::BayesIdentity.statement().to_string(),
        side: StepSide::Original,
        verdict: bayes_identity_step(original)?,
    });

    // (c) Substituted decomposition.
    steps.push(AuditStep {
        id: StepId::SubstitutedDecomposition,
        statement: StepId::SubstitutedDecomposition.statement().to_string(),
        side: StepSide::Original,
        verdict: check_decomposition(original, |c, pairs| {
            vec![c.b_given_lxay(pairs), c.a_given_lx(pairs), c.l_given_x(pairs)]
        })?,
    });

    let ontic_marginal = original.joint.marginalize(&[VAR_ONTIC])?;

    // (d) Original-side independence from the later setting.
    steps.push(AuditStep {
        id: StepId::OnticIgnoresMeasSetting,
        statement: StepId::OnticIgnoresMeasSetting.statement().to_string(),
        side: StepSide::Original,
        verdict: table_ignores(&ontic_marginal, VAR_MEAS_SETTING)?,
    });

    // (e) Reverse-side independence: the reverse's ontic marginal, which the
    // pairing pins to the original's, still ignores the original's later
    // setting y (the reverse model's own preparation setting). This is the
    // independence legitimately carried to the reverse side by f.
    let reverse_ontic_marginal = reverse.joint.marginalize(&[VAR_ONTIC])?;
    steps.push(AuditStep {
        id: StepId::ReverseOnticIndependence,
        statement: StepId::ReverseOnticIndependence.statement().to_string(),
        side: StepSide::Reverse,
        verdict: table_ignores(&reverse_ontic_marginal, VAR_PREP_SETTING)?,
    });

    // (f) The transported claim: independence from the earlier setting.
    steps.push(AuditStep {
        id: StepId::OnticIgnoresPrepSetting,
        statement: StepId::OnticIgnoresPrepSetting.statement().to_string(),
        side: StepSide::Original,
        verdict: table_ignores(&ontic_marginal, VAR_PREP_SETTING)?,
    });

    // (g) The unconditional claim: independent of both settings.
    let unconditional = match table_ignores(&ontic_marginal, VAR_PREP_SETTING)? {
        StepVerdict::Holds { .. } => table_ignores(&ontic_marginal, VAR_MEAS_SETTING)?,
        fails => fails,
    };
    steps.push(AuditStep {
        id: StepId::OnticUnconditional,
        statement: StepId::OnticUnconditional.statement().to_string(),
        side: StepSide::Original,
        verdict: unconditional,
    });

    // (h) Outcome screening from the preparation setting:
    // p(b|l,x,y) = p(b|l,y), with the right side reduced under uniform
    // settings.
    let lifted = original.lifted_joint(None)?;
    let num_bl = original.joint.marginalize(&[VAR_MEAS_OUTPUT, VAR_ONTIC])?;
    steps.push(AuditStep {
        id: StepId::OutcomeScreening,
        statement: StepId::OutcomeScreening.statement().to_string(),
        side: StepSide::Original,
        verdict: conditional_matches_reduced(
            &num_bl,
            &ontic_marginal,
            &lifted.marginalize(&[VAR_MEAS_OUTPUT, VAR_ONTIC, VAR_MEAS_SETTING])?,
            &lifted.marginalize(&[VAR_ONTIC, VAR_MEAS_SETTING])?,
        )?,
    });

    // (i) Preparation-outcome screening from the measurement setting:
    // p(a|l,x,y) = p(a|l,x).
    let num_al = original.joint.marginalize(&[VAR_PREP_OUTPUT, VAR_ONTIC])?;
    steps.push(AuditStep {
        id: StepId::PrepOutcomeScreening,
        statement: StepId::PrepOutcomeScreening.statement().to_string(),
        side: StepSide::Original,
        verdict: conditional_matches_reduced(
            &num_al,
            &ontic_marginal,
            &lifted.marginalize(&[VAR_PREP_OUTPUT, VAR_ONTIC, VAR_PREP_SETTING])?,
            &lifted.marginalize(&[VAR_ONTIC, VAR_PREP_SETTING])?,
        )?,
    });

    let first_failing = steps
        .iter()
        .find(|s| !s.verdict.holds())
        .map(|s| s.id);
    let text = match first_failing {
        None => "every audited step holds on this pair".to_string(),
        Some(id) => {
            let step = steps.iter().find(|s| s.id == id).unwrap();
            let witness = match &step.verdict {
                StepVerdict::Fails { witness } => format!(" ({witness})"),
                _ => String::new(),
            };
            format!("first failing step: {id} [{}]{}", step.statement, witness)
        }
    };

    Ok(AuditReport {
        steps,
        summary: AuditSummary {
            first_failing,
            text,
        },
    })
}

fn bayes_identity_step(model: &OnticModel) -> Result<StepVerdict, AuditError> {
    let conds = Conditionals::new(model, None)?;
    let vars = vec![
        model
            .joint
            .outcome_var(VAR_ONTIC)
            .expect("ontic variable present")
            .clone(),
        model
            .joint
            .outcome_var(VAR_PREP_OUTPUT)
            .expect("prep outcome present")
            .clone(),
        model
            .joint
            .cond_var(VAR_PREP_SETTING)
            .expect("prep setting present")
            .clone(),
    ];
    let mut vacuous = 0usize;
    let mut compared = 0usize;
    for assignment in assignments(&vars) {
        let pairs = as_refs(&assignment);
        let (lhs_num, lhs_den) = conds.l_given_ax(&pairs);
        let (lik_num, lik_den) = conds.a_given_lx(&pairs);
        let (pri_num, pri_den) = conds.l_given_x(&pairs);
        let (mar_num, mar_den) = conds.a_given_x(&pairs);
        if lhs_den.is_zero() || lik_den.is_zero() || pri_den.is_zero() || mar_den.is_zero()
            || mar_num.is_zero()
        {
            vacuous += 1;
            continue;
        }
        compared += 1;
        let lhs = lhs_num / lhs_den;
        let rhs = (lik_num / lik_den) * (pri_num / pri_den) / (mar_num / mar_den);
        if lhs != rhs {
            return Ok(StepVerdict::Fails {
                witness: StepWitness::EntryMismatch {
                    at: Assignment(assignment),
                    lhs,
                    rhs,
                },
            });
        }
    }
    Ok(if compared == 0 {
        StepVerdict::Vacuous
    } else {
        StepVerdict::Holds {
            vacuous_cells: vacuous,
        }
    })
}

/// One clause of the conflation finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClauseFinding {
    pub statement: String,
    pub holds: bool,
    pub witness: Option<StepWitness>,
}

fn clause_of(step: &AuditStep) -> ClauseFinding {
    ClauseFinding {
        statement: step.statement.clone(),
        holds: step.verdict.holds(),
        witness: match &step.verdict {
            StepVerdict::Fails { witness } => Some(witness.clone()),
            _ => None,
        },
    }
}

/// The structured diagnosis: the original-side independence, the reverse-side
/// independence actually carried by the pairing, and the transported claim on
/// the original model, each with its audited verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflationFinding {
    pub original_independence: ClauseFinding,
    pub reverse_independence: ClauseFinding,
    pub conflated_claim: ClauseFinding,
    pub note: String,
}

/// Distinguishes the independences the derivation is entitled to from the
/// claim it actually uses, with verdicts pulled from the audit.
pub fn explain_conflation(pair: &ReversePair) -> Result<ConflationFinding, AuditError> {
    let report = audit_lemma(pair)?;
    let original = clause_of(report.step(StepId::OnticIgnoresMeasSetting));
    let reverse = clause_of(report.step(StepId::ReverseOnticIndependence));
    let conflated = clause_of(report.step(StepId::OnticIgnoresPrepSetting));

    let note = if !original.holds {
        "the original-side independence already fails, so the audit stopped distinguishing the \
         legitimate reverse-side reading from the transported claim"
            .to_string()
    } else if conflated.holds {
        "all three readings hold on this pair; the transported claim does no damage here"
            .to_string()
    } else {
        "the pairing maps the reverse's ontic marginal onto the original's, so the only \
         independence available on the reverse side is the original one (from the later setting \
         y); treating the reverse's ontic state as independent of its own later setting x \
         amounts, back on the original model, to the failing claim below"
            .to_string()
    };
    Ok(ConflationFinding {
        original_independence: original,
        reverse_independence: reverse,
        conflated_claim: conflated,
        note,
    })
}

/// Result of the forced-substitution reductio.
#[derive(Debug, Clone)]
pub struct MediationConsequence {
    /// `p~(a,b,λ|x,y) = p(b|λ,y) · p(λ) · p(a|x)` with the stated settings
    /// distribution feeding the conditionals.
    pub recomputed: OnticModel,
    pub operational: OperationalModel,
    /// `b ⫫ {a,x} | y` on the recomputed model (holds by construction).
    pub screening: IndependenceVerdict,
    pub no_signalling: SignallingVerdict,
    pub summary: Option<CorrelationSummary>,
    pub wigner: Option<InequalityResult>,
    pub chsh: Option<InequalityResult>,
    /// Whether any evaluated inequality is still violated (it cannot be).
    pub any_violation: bool,
}

/// Forces the settings-independent ontic marginal `p(λ)` into the
/// substituted decomposition and recomputes the operational statistics:
/// `p~(a,b,λ|x,y) := p(b|λ,y) · p(λ) · p(a|x)`.
///
/// The measurement factor no longer sees `a` or `x`, so the recomputed model
/// carries zero preparation–measurement correlation; the verdict reports the
/// recomputed summary and confirms no inequality violation survives. Any
/// full-support settings distribution may be supplied (`None` = uniform).
pub fn mediation_consequence_check(
    model: &OnticModel,
    settings: Option<&ProbTable>,
) -> Result<MediationConsequence, AuditError> {
    let lifted = model.lifted_joint(settings)?;
    let settings_marginal = lifted.marginalize(&[VAR_PREP_SETTING, VAR_MEAS_SETTING])?;
    for (at, p) in settings_marginal.iter() {
        if p.is_zero() {
            return Err(AuditError::SettingsNotFullSupport { at });
        }
    }

    let p_lambda = lifted.marginalize(&[VAR_ONTIC])?;
    let m_bly = lifted.marginalize(&[VAR_MEAS_OUTPUT, VAR_ONTIC, VAR_MEAS_SETTING])?;
    let m_ly = lifted.marginalize(&[VAR_ONTIC, VAR_MEAS_SETTING])?;
    let m_ax = lifted.marginalize(&[VAR_PREP_OUTPUT, VAR_PREP_SETTING])?;
    let m_x = lifted.marginalize(&[VAR_PREP_SETTING])?;

    let n_meas_outputs = Rational::from_int(model.meas_outputs.len() as i64);
    let recomputed = OnticModel::from_fn(
        &refs(&model.prep_settings),
        &refs(&model.meas_settings),
        &refs(&model.prep_outputs),
        &refs(&model.meas_outputs),
        &refs(&model.lambda_space),
        |x, y, a, b, lambda| {
            let lam = Conditionals::value(&p_lambda, &[(VAR_ONTIC, lambda)]);
            if lam.is_zero() {
                return Rational::zero();
            }
            let den = Conditionals::value(&m_ly, &[(VAR_ONTIC, lambda), (VAR_MEAS_SETTING, y)]);
            // Rows of p(b|λ,y) never reached under this λ default to
            // uniform, keeping the table normalized; the λ-weight is zero
            // there anyway unless λ only appears under other settings.
            let b_factor = if den.is_zero() {
                Rational::one() / n_meas_outputs.clone()
            } else {
                let num = Conditionals::value(
                    &m_bly,
                    &[
                        (VAR_MEAS_OUTPUT, b),
                        (VAR_ONTIC, lambda),
                        (VAR_MEAS_SETTING, y),
                    ],
                );
                num / den
            };
            let a_factor = {
                let num = Conditionals::value(
                    &m_ax,
                    &[(VAR_PREP_OUTPUT, a), (VAR_PREP_SETTING, x)],
                );
                let den = Conditionals::value(&m_x, &[(VAR_PREP_SETTING, x)]);
                num / den
            };
            b_factor * lam * a_factor
        },
    )?;

    let operational = recomputed.to_operational()?;
    let screening = check_independence(
        &recomputed.lifted_joint(settings)?,
        &[VAR_MEAS_OUTPUT],
        &[VAR_PREP_OUTPUT, VAR_PREP_SETTING],
        &[VAR_MEAS_SETTING],
    )?;
    let no_signalling = check_no_signalling(&operational)?;

    let binary = operational.prep_outputs.len() == 2 && operational.meas_outputs.len() == 2;
    let two_by_two = operational.prep_settings.len() == 2 && operational.meas_settings.len() == 2;
    let (summary, wigner, chsh_result) = if binary {
        let summary = match correlation_summary(&operational, None) {
            Ok(s) => Some(s),
            Err(InequalityError::UnsupportedShape { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        if let (Some(summary), true) = (&summary, two_by_two) {
            let x0 = operational.prep_settings[0].as_str();
            let x1 = operational.prep_settings[1].as_str();
            let y0 = operational.meas_settings[0].as_str();
            let y1 = operational.meas_settings[1].as_str();
            let wigner = wigner_check(summary, &[(x0, y1), (x1, y0), (x1, y1)])?;
            let chsh_result = chsh(summary, x0, x1, y0, y1)?;
            (Some(summary.clone()), Some(wigner), Some(chsh_result))
        } else {
            (summary, None, None)
        }
    } else {
        (None, None, None)
    };
    let any_violation = wigner.as_ref().map(|w| w.violated).unwrap_or(false)
        || chsh_result.as_ref().map(|c| c.violated).unwrap_or(false);

    Ok(MediationConsequence {
        recomputed,
        operational,
        screening,
        no_signalling,
        summary,
        wigner,
        chsh: chsh_result,
        any_violation,
    })
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}
