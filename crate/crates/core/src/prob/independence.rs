use std::fmt;

use serde::Serialize;

use super::table::Assignment;
use super::{ProbError, ProbTable, Rational};

/// Witness of a conditional dependence: an assignment where the defining
/// product equality `p(a,b,c)·p(c) = p(a,c)·p(b,c)` fails, carried with both
/// sides so the violation can be re-checked exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependenceWitness {
    pub a: Assignment,
    pub b: Assignment,
    pub given: Assignment,
    /// Extra conditioning-set assignment of the table, if any.
    pub conditioners: Assignment,
    /// `p(a,b,c)·p(c)` at the witness.
    pub joint_side: Rational,
    /// `p(a,c)·p(b,c)` at the witness.
    pub product_side: Rational,
}

impl fmt::Display for DependenceWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at A={}, B={}, C={}",
            self.a, self.b, self.given
        )?;
        if !self.conditioners.0.is_empty() {
            write!(f, ", conditioners {}", self.conditioners)?;
        }
        write!(
            f,
            ": p(a,b,c)*p(c) = {} but p(a,c)*p(b,c) = {}",
            self.joint_side, self.product_side
        )
    }
}

/// Outcome of an exact conditional-independence test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum IndependenceVerdict {
    Independent,
    Dependent { witness: Box<DependenceWitness> },
}

impl IndependenceVerdict {
    pub fn is_independent(&self) -> bool {
        matches!(self, IndependenceVerdict::Independent)
    }
}

/// Tests `A ⫫ B | C` exactly on a table whose outcome variables include
/// `A ∪ B ∪ C`.
///
/// The test uses the cross-multiplied form `p(a,b,c)·p(c) = p(a,c)·p(b,c)`,
/// so conditioning assignments `c` with `p(c) = 0` hold vacuously and no
/// division is ever performed. If the table has a conditioning set of its
/// own, the test is run separately for every assignment of it; independence
/// must hold in each.
pub fn check_independence(
    table: &ProbTable,
    a_vars: &[&str],
    b_vars: &[&str],
    c_vars: &[&str],
) -> Result<IndependenceVerdict, ProbError> {
    for group in [a_vars, b_vars, c_vars] {
        for name in group {
            if table.cond_var(name).is_some() {
                return Err(ProbError::NotAnOutcomeVariable {
                    name: name.to_string(),
                });
            }
            if table.outcome_var(name).is_none() {
                return Err(ProbError::UnknownVariable {
                    name: name.to_string(),
                });
            }
        }
    }
    let all_names: Vec<&str> = a_vars.iter().chain(b_vars).chain(c_vars).copied().collect();
    for (i, name) in all_names.iter().enumerate() {
        if all_names[i + 1..].contains(name) {
            return Err(ProbError::OverlappingSets {
                name: name.to_string(),
            });
        }
    }

    let abc: Vec<&str> = a_vars
        .iter()
        .chain(b_vars)
        .chain(c_vars)
        .copied()
        .collect();
    let ac: Vec<&str> = a_vars.iter().chain(c_vars).copied().collect();
    let bc: Vec<&str> = b_vars.iter().chain(c_vars).copied().collect();

    let p_abc = table.marginalize(&abc)?;
    let p_ac = table.marginalize(&ac)?;
    let p_bc = table.marginalize(&bc)?;
    let p_c = table.marginalize(c_vars)?;

    for (assignment, joint) in p_abc.iter() {
        let pairs: Vec<(&str, &str)> = assignment
            .0
            .iter()
            .map(|(n, l)| (n.as_str(), l.as_str()))
            .collect();
        let select = |names: &[&str], include_conds: bool| -> Vec<(&str, &str)> {
            pairs
                .iter()
                .filter(|(n, _)| {
                    names.contains(n) || (include_conds && table.cond_var(n).is_some())
                })
                .cloned()
                .collect()
        };
        let c_pairs = select(c_vars, true);
        let ac_pairs = select(&ac, true);
        let bc_pairs = select(&bc, true);

        let pc = p_c.value(&c_pairs)?;
        let joint_side = joint * pc;
        let product_side = p_ac.value(&ac_pairs)? * p_bc.value(&bc_pairs)?;
        if joint_side != product_side {
            let restrict = |names: &[&str]| {
                Assignment(
                    assignment
                        .0
                        .iter()
                        .filter(|(n, _)| names.contains(&n.as_str()))
                        .cloned()
                        .collect(),
                )
            };
            let conditioners = Assignment(
                assignment
                    .0
                    .iter()
                    .filter(|(n, _)| table.cond_var(n).is_some())
                    .cloned()
                    .collect(),
            );
            return Ok(IndependenceVerdict::Dependent {
                witness: Box::new(DependenceWitness {
                    a: restrict(a_vars),
                    b: restrict(b_vars),
                    given: restrict(c_vars),
                    conditioners,
                    joint_side,
                    product_side,
                }),
            });
        }
    }
    Ok(IndependenceVerdict::Independent)
}
