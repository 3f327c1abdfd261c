//! Built-in models and graphs.
//!
//! The central fixture is the timelike counterexample: a
//! prepare-transform-measure model that reproduces singlet statistics by
//! relaying the preparation data to the measurement through the ontic state.
//! It satisfies all five causal conditions, cannot signal, violates the
//! Wigner and CHSH inequalities, and carries a relabeled ontological time
//! reverse; the audit of the independence derivation on its reverse pair
//! locates the invalid inference.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::conditions::CausalGraph;
use crate::model::{ModelError, OnticModel, OperationalModel};
use crate::prob::Rational;
use crate::timereverse::{ontological_reverse_with, Bijection, ReversePair};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FixtureError {
    #[error("deterministic strategy has no output for ({setting}, {lambda})")]
    PartialStrategy { setting: String, lambda: String },

    #[error("bad ontic distribution: {detail}")]
    BadDistribution { detail: String },

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Identifiers for the exportable built-in models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureId {
    /// The timelike counterexample model (ontic).
    Counterexample,
    /// Its relabeled ontological time reverse (ontic).
    CounterexampleReverse,
    /// The singlet-statistics operational table.
    SingletStats,
}

impl FixtureId {
    pub const ALL: [FixtureId; 3] = [
        FixtureId::Counterexample,
        FixtureId::CounterexampleReverse,
        FixtureId::SingletStats,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FixtureId::Counterexample => "counterexample",
            FixtureId::CounterexampleReverse => "counterexample-reverse",
            FixtureId::SingletStats => "singlet-stats",
        }
    }

    pub fn parse(name: &str) -> Option<FixtureId> {
        FixtureId::ALL.iter().copied().find(|f| f.name() == name)
    }
}

fn ontic_label(x: &str, a: &str) -> String {
    format!("({x},{a})")
}

/// The measurement response `p(b | y, λ)` of the counterexample: the eight
/// up-probabilities, with down taking the complement.
pub fn counterexample_kernel(y: &str, lambda: &str, b: &str) -> Rational {
    let up = match (y, lambda) {
        ("0", "(0,up)") => Rational::zero(),
        ("0", "(0,down)") => Rational::one(),
        ("0", "(30,up)") => Rational::new(1, 4),
        ("0", "(30,down)") => Rational::new(3, 4),
        ("-30", "(0,up)") => Rational::new(1, 4),
        ("-30", "(0,down)") => Rational::new(3, 4),
        ("-30", "(30,up)") => Rational::new(3, 4),
        ("-30", "(30,down)") => Rational::new(1, 4),
        _ => panic!("not a counterexample (y, lambda) pair: ({y}, {lambda})"),
    };
    match b {
        "up" => up,
        "down" => Rational::one() - up,
        _ => panic!("not a counterexample outcome: {b}"),
    }
}

/// The timelike counterexample.
///
/// The preparation takes `x` in {0, 30}, emits `a` in {up, down} with
/// probability 1/2 each (which is what blocks signalling), and sends out the
/// ontic state `λ = (x, a)`. The measurement combines `λ` with its own
/// setting `y` in {0, -30} and answers through
/// [`counterexample_kernel`]: `p(a,b,λ|x,y) = 1/2 · [λ = (x,a)] · p(b|y,λ)`.
pub fn counterexample_model() -> OnticModel {
    OnticModel::from_fn(
        &["0", "30"],
        &["0", "-30"],
        &["up", "down"],
        &["up", "down"],
        &["(0,up)", "(0,down)", "(30,up)", "(30,down)"],
        |x, y, a, b, lambda| {
            if lambda != ontic_label(x, a) {
                return Rational::zero();
            }
            Rational::new(1, 2) * counterexample_kernel(y, lambda, b)
        },
    )
    .expect("counterexample table is well formed")
}

/// The counterexample's ontological time reverse with the preparation
/// inputs relabeled: the map fixes the 0-states and sends the 30-states to
/// -30-states.
pub fn counterexample_reverse() -> ReversePair {
    let original = counterexample_model();
    let f = Bijection::new(vec![
        ("(0,up)".to_string(), "(0,up)".to_string()),
        ("(0,down)".to_string(), "(0,down)".to_string()),
        ("(30,up)".to_string(), "(-30,up)".to_string()),
        ("(30,down)".to_string(), "(-30,down)".to_string()),
    ])
    .expect("relabeling is one-to-one");
    let reverse = ontological_reverse_with(&original, &f).expect("transcription succeeds");
    ReversePair {
        original,
        reverse,
        f,
    }
}

/// The singlet-statistics operational table over the same settings:
/// disagreement probability 1 at (0,0), 3/4 at (30,0) and (0,-30), 1/4 at
/// (30,-30), with uniform single-wing marginals. Entries beyond the
/// disagreement rates are fixed by splitting agreement and disagreement
/// symmetrically between the two matching cell pairs.
pub fn singlet_stats() -> OperationalModel {
    OperationalModel::from_fn(
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
    .expect("singlet table is well formed")
}

/// A deterministic local strategy: outcome functions for both wings plus a
/// distribution over the shared ontic state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub prep_settings: Vec<String>,
    pub meas_settings: Vec<String>,
    pub prep_outputs: Vec<String>,
    pub meas_outputs: Vec<String>,
    pub lambda_space: Vec<String>,
    /// `(x, λ) -> a`
    pub prep_map: BTreeMap<(String, String), String>,
    /// `(y, λ) -> b`
    pub meas_map: BTreeMap<(String, String), String>,
    /// Distribution over λ.
    pub rho: Vec<(String, Rational)>,
}

/// Builds `p(a,b,λ|x,y) = ρ(λ) · [a = fa(x,λ)] · [b = fb(y,λ)]`: a model
/// that factorizes through λ by construction and therefore always passes the
/// Bell locality check.
pub fn deterministic_local(strategy: &DeterministicStrategy) -> Result<OnticModel, FixtureError> {
    let total: Rational = strategy.rho.iter().map(|(_, p)| p.clone()).sum();
    if !total.is_one() {
        return Err(FixtureError::BadDistribution {
            detail: format!("rho sums to {total}, not 1"),
        });
    }
    for (x, l) in strategy
        .prep_settings
        .iter()
        .flat_map(|x| strategy.lambda_space.iter().map(move |l| (x, l)))
    {
        if !strategy.prep_map.contains_key(&(x.clone(), l.clone())) {
            return Err(FixtureError::PartialStrategy {
                setting: x.clone(),
                lambda: l.clone(),
            });
        }
    }
    for (y, l) in strategy
        .meas_settings
        .iter()
        .flat_map(|y| strategy.lambda_space.iter().map(move |l| (y, l)))
    {
        if !strategy.meas_map.contains_key(&(y.clone(), l.clone())) {
            return Err(FixtureError::PartialStrategy {
                setting: y.clone(),
                lambda: l.clone(),
            });
        }
    }

    let s = strategy.clone();
    let model = OnticModel::from_fn(
        &s.prep_settings.iter().map(String::as_str).collect::<Vec<_>>(),
        &s.meas_settings.iter().map(String::as_str).collect::<Vec<_>>(),
        &s.prep_outputs.iter().map(String::as_str).collect::<Vec<_>>(),
        &s.meas_outputs.iter().map(String::as_str).collect::<Vec<_>>(),
        &s.lambda_space.iter().map(String::as_str).collect::<Vec<_>>(),
        |x, y, a, b, lambda| {
            let weight = s
                .rho
                .iter()
                .find(|(l, _)| l == lambda)
                .map(|(_, p)| p.clone())
                .unwrap_or_else(Rational::zero);
            let fa = &s.prep_map[&(x.to_string(), lambda.to_string())];
            let fb = &s.meas_map[&(y.to_string(), lambda.to_string())];
            if fa == a && fb == b {
                weight
            } else {
                Rational::zero()
            }
        },
    )?;
    Ok(model)
}

/// A single-λ binary strategy over arbitrary settings, encoding the two
/// outcome functions as bit masks (bit `i` set means output "up" at setting
/// index `i`). Handy for enumerating all deterministic strategies.
pub fn binary_local_strategy(
    prep_settings: &[&str],
    meas_settings: &[&str],
    f_bits: u64,
    g_bits: u64,
) -> DeterministicStrategy {
    let lambda = "*".to_string();
    let bit_output = |bits: u64, i: usize| -> String {
        if (bits >> i) & 1 == 1 {
            "up".to_string()
        } else {
            "down".to_string()
        }
    };
    let mut prep_map = BTreeMap::new();
    for (i, x) in prep_settings.iter().enumerate() {
        prep_map.insert((x.to_string(), lambda.clone()), bit_output(f_bits, i));
    }
    let mut meas_map = BTreeMap::new();
    for (i, y) in meas_settings.iter().enumerate() {
        meas_map.insert((y.to_string(), lambda.clone()), bit_output(g_bits, i));
    }
    DeterministicStrategy {
        prep_settings: prep_settings.iter().map(|s| s.to_string()).collect(),
        meas_settings: meas_settings.iter().map(|s| s.to_string()).collect(),
        prep_outputs: vec!["up".to_string(), "down".to_string()],
        meas_outputs: vec!["up".to_string(), "down".to_string()],
        lambda_space: vec![lambda.clone()],
        prep_map,
        meas_map,
        rho: vec![(lambda, Rational::one())],
    }
}

/// The prepare-transform-measure influence diagram: setting `x` into the
/// preparation, visible output `a`, the prepared state flowing through the
/// transformation into the measurement, which combines it with setting `y`
/// to produce `b`.
pub fn ptm_graph() -> CausalGraph {
    CausalGraph::new(
        &["x", "P", "a", "T", "M", "y", "b"],
        &[
            ("x", "P"),
            ("P", "a"),
            ("P", "T"),
            ("T", "M"),
            ("y", "M"),
            ("M", "b"),
        ],
        &["x", "y"],
    )
    .expect("diagram is well formed")
}

/// The two-wing Bell-test influence diagram: one preparation feeding two
/// measurements, each combining the shared state with its own setting.
pub fn bell_test_graph() -> CausalGraph {
    CausalGraph::new(
        &["P", "M1", "M2", "x", "y", "a", "b"],
        &[
            ("P", "M1"),
            ("P", "M2"),
            ("x", "M1"),
            ("M1", "a"),
            ("y", "M2"),
            ("M2", "b"),
        ],
        &["x", "y"],
    )
    .expect("diagram is well formed")
}
