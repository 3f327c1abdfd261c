//! Construction and verification of operational and ontological time
//! reverses.
//!
//! The operational reverse of `P(a,b|x,y)` is the experiment with the
//! preparation and measurement roles swapped whose statistics satisfy
//! `P'(b,a|y,x) = P(a,b|x,y)`. An ontological reverse additionally matches
//! the full joint through a bijection `f` between the ontic spaces:
//! `p'(b,a,f(λ)|y,x) = p(a,b,λ|x,y)`. The defining equality pins the
//! reverse table completely once `f` is chosen, so reverses are built by
//! transcription and candidates are tested by exhaustive bijection search.

use std::fmt;

use serde::Serialize;

use crate::model::{
    check_no_signalling, ModelError, OnticModel, OperationalModel, SignallingVerdict,
};
use crate::prob::{Assignment, Rational};
use thiserror::Error;

/// Cap on the exhaustive bijection search: `8! = 40_320` candidates.
pub const MAX_SEARCH_LAMBDA: usize = 8;

/// The first entry at which a claimed reverse pair breaks the defining
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairMismatch {
    pub at: Assignment,
    pub original: Rational,
    pub reverse: Rational,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ReverseError {
    #[error("the construction requires a no-signalling model; violated flag: {flag}")]
    SignallingRequired {
        flag: String,
        verdict: Box<SignallingVerdict>,
    },

    #[error("alphabet mismatch: {what}")]
    AlphabetMismatch { what: String },

    #[error("ontic spaces have different sizes: {original} vs {candidate}")]
    SizeMismatch { original: usize, candidate: usize },

    #[error(
        "ontic space of size {size} exceeds the bijection search cap of {MAX_SEARCH_LAMBDA} \
         ({size}! candidates)"
    )]
    SearchSpaceTooLarge { size: usize },

    #[error("bijection is not a one-to-one map: {what}")]
    BadBijection { what: String },

    #[error(
        "reverse pair equality fails at {}: original {}, reverse {}",
        .0.at, .0.original, .0.reverse
    )]
    PairInvariantViolated(Box<PairMismatch>),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A one-to-one map between two ontic spaces, stored as forward pairs in
/// source-space order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bijection {
    pairs: Vec<(String, String)>,
}

impl Bijection {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self, ReverseError> {
        for (i, (src, dst)) in pairs.iter().enumerate() {
            for (src2, dst2) in &pairs[..i] {
                if src == src2 {
                    return Err(ReverseError::BadBijection {
                        what: format!("source {src:?} mapped twice"),
                    });
                }
                if dst == dst2 {
                    return Err(ReverseError::BadBijection {
                        what: format!("target {dst:?} hit twice"),
                    });
                }
            }
        }
        Ok(Bijection { pairs })
    }

    pub fn identity(space: &[String]) -> Self {
        Bijection {
            pairs: space.iter().map(|l| (l.clone(), l.clone())).collect(),
        }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn apply(&self, source: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(s, _)| s == source)
            .map(|(_, d)| d.as_str())
    }

    pub fn invert(&self, target: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(_, d)| d == target)
            .map(|(s, _)| s.as_str())
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.iter().all(|(s, d)| s == d)
    }

    /// Source labels in stored order.
    pub fn sources(&self) -> Vec<&str> {
        self.pairs.iter().map(|(s, _)| s.as_str()).collect()
    }
}

impl fmt::Display for Bijection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, d)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s} -> {d}")?;
        }
        Ok(())
    }
}

/// An ontic model, a reverse ontic model, and the bijection certifying that
/// the reverse matches the original's full joint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversePair {
    pub original: OnticModel,
    pub reverse: OnticModel,
    pub f: Bijection,
}

impl ReversePair {
    /// Re-checks the defining equality
    /// `p'(b, a, f(λ) | y, x) = p(a, b, λ | x, y)` entrywise.
    pub fn verify(&self) -> Result<(), ReverseError> {
        check_role_swap_ontic(&self.original, &self.reverse)?;
        for x in &self.original.prep_settings {
            for y in &self.original.meas_settings {
                for a in &self.original.prep_outputs {
                    for b in &self.original.meas_outputs {
                        for lambda in &self.original.lambda_space {
                            let image = self.f.apply(lambda).ok_or_else(|| {
                                ReverseError::BadBijection {
                                    what: format!("no image for {lambda:?}"),
                                }
                            })?;
                            let original = self.original.probability(x, y, a, b, lambda)?;
                            let reverse = self.reverse.probability(y, x, b, a, image)?;
                            if original != reverse {
                                return Err(ReverseError::PairInvariantViolated(Box::new(
                                    PairMismatch {
                                        at: Assignment::from_pairs(&[
                                            ("x", x),
                                            ("y", y),
                                            ("a", a),
                                            ("b", b),
                                            ("lambda", lambda),
                                        ]),
                                        original,
                                        reverse,
                                    },
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn signalling_flag(verdict: &SignallingVerdict) -> String {
    if !verdict.no_forward_signalling {
        "forward signalling (p(b|x,y) depends on x)".to_string()
    } else {
        "retro signalling (p(a|x,y) depends on y)".to_string()
    }
}

fn require_no_signalling(model: &OperationalModel) -> Result<(), ReverseError> {
    let verdict = check_no_signalling(model)?;
    if verdict.is_no_signalling() {
        Ok(())
    } else {
        Err(ReverseError::SignallingRequired {
            flag: signalling_flag(&verdict),
            verdict: Box::new(verdict),
        })
    }
}

/// Builds the operational time reverse: prep settings become the old
/// measurement settings and vice versa, with `P'(b,a|y,x) := P(a,b|x,y)`.
///
/// Guaranteed to be a realizable experiment only in the no-signalling
/// sector, so a signalling model is an error naming the violated flag.
pub fn operational_reverse(model: &OperationalModel) -> Result<OperationalModel, ReverseError> {
    require_no_signalling(model)?;
    let m = model.clone();
    let reversed = OperationalModel::from_fn(
        &refs(&m.meas_settings),
        &refs(&m.prep_settings),
        &refs(&m.meas_outputs),
        &refs(&m.prep_outputs),
        |rx, ry, ra, rb| {
            // reverse coordinates: (x', y', a', b') = (y, x, b, a)
            m.probability(ry, rx, rb, ra).expect("operational cell")
        },
    )?;
    Ok(reversed)
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Verdict of an operational-reverse comparison, with the first mismatching
/// entry as witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReverseMatchVerdict {
    pub matches: bool,
    pub witness: Option<(Assignment, Rational, Rational)>,
}

fn check_role_swap_operational(
    m1: &OperationalModel,
    m2: &OperationalModel,
) -> Result<(), ReverseError> {
    let checks = [
        (&m2.prep_settings, &m1.meas_settings, "prep settings"),
        (&m2.meas_settings, &m1.prep_settings, "meas settings"),
        (&m2.prep_outputs, &m1.meas_outputs, "prep outputs"),
        (&m2.meas_outputs, &m1.prep_outputs, "meas outputs"),
    ];
    for (got, want, what) in checks {
        if got != want {
            return Err(ReverseError::AlphabetMismatch {
                what: format!("candidate {what} {got:?} should be {want:?}"),
            });
        }
    }
    Ok(())
}

fn check_role_swap_ontic(original: &OnticModel, candidate: &OnticModel) -> Result<(), ReverseError> {
    let checks = [
        (&candidate.prep_settings, &original.meas_settings, "prep settings"),
        (&candidate.meas_settings, &original.prep_settings, "meas settings"),
        (&candidate.prep_outputs, &original.meas_outputs, "prep outputs"),
        (&candidate.meas_outputs, &original.prep_outputs, "meas outputs"),
    ];
    for (got, want, what) in checks {
        if got != want {
            return Err(ReverseError::AlphabetMismatch {
                what: format!("candidate {what} {got:?} should be {want:?}"),
            });
        }
    }
    Ok(())
}

/// Checks `P_{m2}(b, a | y, x) = P_{m1}(a, b | x, y)` for all assignments.
pub fn is_operational_reverse(
    m1: &OperationalModel,
    m2: &OperationalModel,
) -> Result<ReverseMatchVerdict, ReverseError> {
    check_role_swap_operational(m1, m2)?;
    for x in &m1.prep_settings {
        for y in &m1.meas_settings {
            for a in &m1.prep_outputs {
                for b in &m1.meas_outputs {
                    let p1 = m1.probability(x, y, a, b)?;
                    let p2 = m2.probability(y, x, b, a)?;
                    if p1 != p2 {
                        return Ok(ReverseMatchVerdict {
                            matches: false,
                            witness: Some((
                                Assignment::from_pairs(&[
                                    ("x", x),
                                    ("y", y),
                                    ("a", a),
                                    ("b", b),
                                ]),
                                p1,
                                p2,
                            )),
                        });
                    }
                }
            }
        }
    }
    Ok(ReverseMatchVerdict {
        matches: true,
        witness: None,
    })
}

/// Transcribes the ontological reverse determined by a bijection `f`:
/// `p'(b, a, f(λ) | y, x) := p(a, b, λ | x, y)` over the target ontic space
/// in `f`'s image order. The resulting pair satisfies the defining equality
/// by construction.
pub fn ontological_reverse_with(
    original: &OnticModel,
    f: &Bijection,
) -> Result<OnticModel, ReverseError> {
    let sources = f.sources();
    if sources.len() != original.lambda_space.len()
        || original
            .lambda_space
            .iter()
            .any(|l| !sources.contains(&l.as_str()))
    {
        return Err(ReverseError::BadBijection {
            what: "map sources do not cover the model's ontic space".to_string(),
        });
    }
    let m = original.clone();
    let targets: Vec<String> = m
        .lambda_space
        .iter()
        .map(|l| f.apply(l).expect("total map").to_string())
        .collect();
    let f = f.clone();
    let reversed = OnticModel::from_fn(
        &refs(&m.meas_settings),
        &refs(&m.prep_settings),
        &refs(&m.meas_outputs),
        &refs(&m.prep_outputs),
        &targets.iter().map(String::as_str).collect::<Vec<_>>(),
        |rx, ry, ra, rb, mu| {
            let lambda = f.invert(mu).expect("surjective map");
            m.probability(ry, rx, rb, ra, lambda).expect("ontic cell")
        },
    )?;
    Ok(reversed)
}

/// The canonical reverse construction: identify the ontic spaces (`f` is the
/// identity) and transcribe `p'(b,a,λ|y,x) := p(a,b,λ|x,y)`.
///
/// Valid as an experiment of the theory only in the no-signalling sector, so
/// a signalling model is an error.
pub fn canonical_ontological_reverse(original: &OnticModel) -> Result<ReversePair, ReverseError> {
    let operational = original.to_operational()?;
    require_no_signalling(&operational)?;
    let f = Bijection::identity(&original.lambda_space);
    let reverse = ontological_reverse_with(original, &f)?;
    Ok(ReversePair {
        original: original.clone(),
        reverse,
        f,
    })
}

/// Returns every bijection `f: Λ → Λ'` under which `candidate` is an exact
/// ontological time reverse of `original`, in lexicographic order of the
/// target-index sequence (following the two models' declared ontic orders).
/// An empty list means the candidate is not an ontological reverse.
pub fn find_ontological_reverse(
    original: &OnticModel,
    candidate: &OnticModel,
) -> Result<Vec<Bijection>, ReverseError> {
    check_role_swap_ontic(original, candidate)?;
    let n = original.lambda_space.len();
    if candidate.lambda_space.len() != n {
        return Err(ReverseError::SizeMismatch {
            original: n,
            candidate: candidate.lambda_space.len(),
        });
    }
    if n > MAX_SEARCH_LAMBDA {
        return Err(ReverseError::SearchSpaceTooLarge { size: n });
    }

    let mut solutions = Vec::new();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    search_permutations(original, candidate, &mut perm, &mut used, &mut solutions)?;
    Ok(solutions)
}

fn search_permutations(
    original: &OnticModel,
    candidate: &OnticModel,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
    solutions: &mut Vec<Bijection>,
) -> Result<(), ReverseError> {
    let n = original.lambda_space.len();
    if perm.len() == n {
        let pairs: Vec<(String, String)> = perm
            .iter()
            .enumerate()
            .map(|(src, &dst)| {
                (
                    original.lambda_space[src].clone(),
                    candidate.lambda_space[dst].clone(),
                )
            })
            .collect();
        let f = Bijection { pairs };
        if reverse_equality_holds(original, candidate, &f)? {
            solutions.push(f);
        }
        return Ok(());
    }
    for dst in 0..n {
        if used[dst] {
            continue;
        }
        // Prune: the partial map must already satisfy the equality on the
        // source fixed so far.
        perm.push(dst);
        used[dst] = true;
        let src = perm.len() - 1;
        if source_consistent(original, candidate, src, dst)? {
            search_permutations(original, candidate, perm, used, solutions)?;
        }
        used[dst] = false;
        perm.pop();
    }
    Ok(())
}

fn source_consistent(
    original: &OnticModel,
    candidate: &OnticModel,
    src: usize,
    dst: usize,
) -> Result<bool, ReverseError> {
    let lambda = &original.lambda_space[src];
    let mu = &candidate.lambda_space[dst];
    for x in &original.prep_settings {
        for y in &original.meas_settings {
            for a in &original.prep_outputs {
                for b in &original.meas_outputs {
                    if original.probability(x, y, a, b, lambda)?
                        != candidate.probability(y, x, b, a, mu)?
                    {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

fn reverse_equality_holds(
    original: &OnticModel,
    candidate: &OnticModel,
    f: &Bijection,
) -> Result<bool, ReverseError> {
    let pair = ReversePair {
        original: original.clone(),
        reverse: candidate.clone(),
        f: f.clone(),
    };
    match pair.verify() {
        Ok(()) => Ok(true),
        Err(ReverseError::PairInvariantViolated(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Time-symmetry verdict: symmetric when an ontological time reverse exists.
/// In the no-signalling sector the canonical construction is a complete
/// existence witness; outside it no valid reverse construction exists and
/// the obstruction is reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimeSymmetryVerdict {
    pub symmetric: bool,
    pub obstruction: Option<SignallingVerdict>,
}

pub fn check_time_symmetry(model: &OnticModel) -> Result<TimeSymmetryVerdict, ModelError> {
    let operational = model.to_operational()?;
    let verdict = check_no_signalling(&operational)?;
    if verdict.is_no_signalling() {
        Ok(TimeSymmetryVerdict {
            symmetric: true,
            obstruction: None,
        })
    } else {
        Ok(TimeSymmetryVerdict {
            symmetric: false,
            obstruction: Some(verdict),
        })
    }
}
