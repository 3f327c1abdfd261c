use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{ProbError, Rational};

/// A named finite variable with an ordered label alphabet.
///
/// Variable identity is by name; labels are opaque strings and keep their
/// declaration order (no implicit sorting), so table iteration and witness
/// selection are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub name: String,
    pub labels: Vec<String>,
}

impl Variable {
    pub fn new(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Variable {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A full or partial assignment of labels to named variables, used in
/// errors, witnesses and reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct Assignment(pub Vec<(String, String)>);

impl Assignment {
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Assignment(
            pairs
                .iter()
                .map(|(n, l)| (n.to_string(), l.to_string()))
                .collect(),
        )
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, l)| l.as_str())
    }

    /// Label for `name`; panics when absent. Intended for table builders
    /// that receive full assignments.
    pub fn expect(&self, name: &str) -> &str {
        self.get(name)
            .unwrap_or_else(|| panic!("assignment has no variable {name:?}"))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (name, label)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}={label}")?;
        }
        write!(f, ")")
    }
}

/// Witness that a conditional table changes when one conditioning variable
/// changes: the same outcome cell has two different probabilities at two
/// labels of the varied conditioner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IrrelevanceWitness {
    pub outcome: Assignment,
    pub fixed_conditioners: Assignment,
    pub varied_conditioner: String,
    pub label_a: String,
    pub probability_a: Rational,
    pub label_b: String,
    pub probability_b: Rational,
}

impl fmt::Display for IrrelevanceWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p{} given {} is {} at {}={} but {} at {}={}",
            self.outcome,
            self.fixed_conditioners,
            self.probability_a,
            self.varied_conditioner,
            self.label_a,
            self.probability_b,
            self.varied_conditioner,
            self.label_b,
        )
    }
}

fn space_size(vars: &[Variable]) -> usize {
    vars.iter().map(|v| v.labels.len()).product()
}

/// All index vectors of a product space in row-major order.
fn each_index(dims: &[usize]) -> Vec<Vec<usize>> {
    if dims.contains(&0) {
        return Vec::new();
    }
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    loop {
        out.push(idx.clone());
        let mut pos = dims.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dims[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn flat_index(dims: &[usize], idx: &[usize]) -> usize {
    let mut flat = 0usize;
    for (d, i) in dims.iter().zip(idx) {
        flat = flat * d + i;
    }
    flat
}

fn check_vars(outcomes: &[Variable], conds: &[Variable]) -> Result<(), ProbError> {
    let mut seen = BTreeMap::new();
    for v in outcomes.iter().chain(conds) {
        if v.labels.is_empty() {
            return Err(ProbError::EmptyAlphabet {
                name: v.name.clone(),
            });
        }
        if seen.insert(v.name.clone(), ()).is_some() {
            return Err(ProbError::DuplicateVariable {
                name: v.name.clone(),
            });
        }
    }
    Ok(())
}

/// A finite conditional probability table `p(outcomes | conditioners)`,
/// stored densely over the full product space in exact rationals.
///
/// The layout is row-major with the conditioning variables slowest: each
/// conditioning assignment owns one contiguous block of outcome cells. For
/// every conditioning assignment the outcome block of a valid table sums to
/// exactly 1; construction does not force this (model validation reports
/// defects instead), but every operation preserves it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbTable {
    outcome_vars: Vec<Variable>,
    cond_vars: Vec<Variable>,
    values: Vec<Rational>,
}

impl ProbTable {
    /// Builds a table by evaluating `f` on every full assignment. `f`
    /// receives `(name, label)` pairs covering conditioners then outcomes.
    pub fn from_fn<F>(
        outcomes: Vec<Variable>,
        conds: Vec<Variable>,
        mut f: F,
    ) -> Result<Self, ProbError>
    where
        F: FnMut(&Assignment) -> Rational,
    {
        check_vars(&outcomes, &conds)?;
        let cond_dims: Vec<usize> = conds.iter().map(|v| v.labels.len()).collect();
        let out_dims: Vec<usize> = outcomes.iter().map(|v| v.labels.len()).collect();
        let mut values = Vec::with_capacity(space_size(&conds) * space_size(&outcomes));
        for cond_idx in each_index(&cond_dims) {
            for out_idx in each_index(&out_dims) {
                let mut pairs = Vec::with_capacity(conds.len() + outcomes.len());
                for (v, &i) in conds.iter().zip(&cond_idx) {
                    pairs.push((v.name.clone(), v.labels[i].clone()));
                }
                for (v, &i) in outcomes.iter().zip(&out_idx) {
                    pairs.push((v.name.clone(), v.labels[i].clone()));
                }
                values.push(f(&Assignment(pairs)));
            }
        }
        Ok(ProbTable {
            outcome_vars: outcomes,
            cond_vars: conds,
            values,
        })
    }

    /// Builds a table from explicit entries. With `dense` every cell of the
    /// product space must appear exactly once; in sparse mode missing cells
    /// are zero. Duplicate entries are rejected in both modes.
    pub fn from_entries<'a, I>(
        outcomes: Vec<Variable>,
        conds: Vec<Variable>,
        dense: bool,
        entries: I,
    ) -> Result<Self, ProbError>
    where
        I: IntoIterator<Item = (&'a [(&'a str, &'a str)], Rational)>,
    {
        check_vars(&outcomes, &conds)?;
        let size = space_size(&conds) * space_size(&outcomes);
        let mut values = vec![Rational::zero(); size];
        let mut filled = vec![false; size];
        let table_shell = ProbTable {
            outcome_vars: outcomes,
            cond_vars: conds,
            values: Vec::new(),
        };
        for (pairs, p) in entries {
            let flat = table_shell.flat_of_pairs(pairs)?;
            if filled[flat] {
                return Err(ProbError::DuplicateEntry {
                    assignment: Assignment::from_pairs(pairs),
                });
            }
            filled[flat] = true;
            values[flat] = p;
        }
        if dense {
            if let Some(missing) = filled.iter().position(|f| !f) {
                return Err(ProbError::MissingEntry {
                    assignment: table_shell.assignment_of_flat(missing),
                });
            }
        }
        Ok(ProbTable {
            values,
            ..table_shell
        })
    }

    /// Unconditional uniform distribution over the given variables.
    pub fn uniform(vars: Vec<Variable>) -> Result<Self, ProbError> {
        check_vars(&vars, &[])?;
        let n = space_size(&vars);
        let p = Rational::one() / Rational::from_int(n as i64);
        Ok(ProbTable {
            outcome_vars: vars,
            cond_vars: Vec::new(),
            values: vec![p; n],
        })
    }

    pub fn outcome_vars(&self) -> &[Variable] {
        &self.outcome_vars
    }

    pub fn cond_vars(&self) -> &[Variable] {
        &self.cond_vars
    }

    pub fn outcome_var(&self, name: &str) -> Option<&Variable> {
        self.outcome_vars.iter().find(|v| v.name == name)
    }

    pub fn cond_var(&self, name: &str) -> Option<&Variable> {
        self.cond_vars.iter().find(|v| v.name == name)
    }

    fn cond_dims(&self) -> Vec<usize> {
        self.cond_vars.iter().map(|v| v.labels.len()).collect()
    }

    fn out_dims(&self) -> Vec<usize> {
        self.outcome_vars.iter().map(|v| v.labels.len()).collect()
    }

    fn out_size(&self) -> usize {
        space_size(&self.outcome_vars)
    }

    /// Maps a full assignment (given as pairs in any order, covering every
    /// variable exactly once) to the flat value index.
    fn flat_of_pairs(&self, pairs: &[(&str, &str)]) -> Result<usize, ProbError> {
        let mut cond_idx = vec![usize::MAX; self.cond_vars.len()];
        let mut out_idx = vec![usize::MAX; self.outcome_vars.len()];
        for (name, label) in pairs {
            let unknown_label = || ProbError::UnknownLabel {
                variable: name.to_string(),
                label: label.to_string(),
            };
            if let Some(pos) = self.cond_vars.iter().position(|v| &v.name == name) {
                cond_idx[pos] = self.cond_vars[pos]
                    .label_index(label)
                    .ok_or_else(unknown_label)?;
            } else if let Some(pos) = self.outcome_vars.iter().position(|v| &v.name == name) {
                out_idx[pos] = self.outcome_vars[pos]
                    .label_index(label)
                    .ok_or_else(unknown_label)?;
            } else {
                return Err(ProbError::UnknownVariable {
                    name: name.to_string(),
                });
            }
        }
        for (v, &i) in self.cond_vars.iter().zip(&cond_idx) {
            if i == usize::MAX {
                return Err(ProbError::IncompleteAssignment {
                    name: v.name.clone(),
                });
            }
        }
        for (v, &i) in self.outcome_vars.iter().zip(&out_idx) {
            if i == usize::MAX {
                return Err(ProbError::IncompleteAssignment {
                    name: v.name.clone(),
                });
            }
        }
        let c = flat_index(&self.cond_dims(), &cond_idx);
        let o = flat_index(&self.out_dims(), &out_idx);
        Ok(c * self.out_size() + o)
    }

    fn assignment_of_flat(&self, flat: usize) -> Assignment {
        let out_size = self.out_size();
        let mut c = flat / out_size;
        let mut o = flat % out_size;
        let mut pairs = Vec::with_capacity(self.cond_vars.len() + self.outcome_vars.len());
        let cond_dims = self.cond_dims();
        let out_dims = self.out_dims();
        let mut cond_idx = vec![0usize; cond_dims.len()];
        for pos in (0..cond_dims.len()).rev() {
            cond_idx[pos] = c % cond_dims[pos];
            c /= cond_dims[pos];
        }
        let mut out_idx = vec![0usize; out_dims.len()];
        for pos in (0..out_dims.len()).rev() {
            out_idx[pos] = o % out_dims[pos];
            o /= out_dims[pos];
        }
        for (v, i) in self.cond_vars.iter().zip(cond_idx) {
            pairs.push((v.name.clone(), v.labels[i].clone()));
        }
        for (v, i) in self.outcome_vars.iter().zip(out_idx) {
            pairs.push((v.name.clone(), v.labels[i].clone()));
        }
        Assignment(pairs)
    }

    /// Probability at a full assignment, given as `(name, label)` pairs in
    /// any order covering every variable of the table.
    pub fn value(&self, pairs: &[(&str, &str)]) -> Result<&Rational, ProbError> {
        Ok(&self.values[self.flat_of_pairs(pairs)?])
    }

    /// Iterates `(assignment, probability)` over every cell in row-major
    /// order (conditioners slowest).
    pub fn iter(&self) -> impl Iterator<Item = (Assignment, &Rational)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(flat, p)| (self.assignment_of_flat(flat), p))
    }

    /// Sum of the outcome block for every conditioning assignment.
    pub fn row_sums(&self) -> Vec<(Assignment, Rational)> {
        let out_size = self.out_size();
        let cond_dims = self.cond_dims();
        each_index(&cond_dims)
            .into_iter()
            .enumerate()
            .map(|(row, cond_idx)| {
                let sum: Rational = self.values[row * out_size..(row + 1) * out_size]
                    .iter()
                    .sum();
                let pairs = self
                    .cond_vars
                    .iter()
                    .zip(&cond_idx)
                    .map(|(v, &i)| (v.name.clone(), v.labels[i].clone()))
                    .collect();
                (Assignment(pairs), sum)
            })
            .collect()
    }

    /// True when every conditioning row sums to exactly 1 and every entry is
    /// a proper probability.
    pub fn is_normalized(&self) -> bool {
        self.values.iter().all(Rational::is_proper_probability)
            && self.row_sums().iter().all(|(_, s)| s.is_one())
    }

    /// Sums out every outcome variable not named in `keep`. Conditioning
    /// variables are untouched; naming one is an error, as is naming an
    /// unknown variable.
    pub fn marginalize(&self, keep: &[&str]) -> Result<ProbTable, ProbError> {
        for name in keep {
            if self.cond_var(name).is_some() {
                return Err(ProbError::NotAnOutcomeVariable {
                    name: name.to_string(),
                });
            }
            if self.outcome_var(name).is_none() {
                return Err(ProbError::UnknownVariable {
                    name: name.to_string(),
                });
            }
        }
        let kept: Vec<Variable> = self
            .outcome_vars
            .iter()
            .filter(|v| keep.contains(&v.name.as_str()))
            .cloned()
            .collect();
        let kept_positions: Vec<usize> = self
            .outcome_vars
            .iter()
            .enumerate()
            .filter(|(_, v)| keep.contains(&v.name.as_str()))
            .map(|(i, _)| i)
            .collect();
        let out_dims = self.out_dims();
        let kept_dims: Vec<usize> = kept_positions.iter().map(|&i| out_dims[i]).collect();
        let new_out_size: usize = kept_dims.iter().product::<usize>().max(1);
        let rows = space_size(&self.cond_vars);
        let mut values = vec![Rational::zero(); rows * new_out_size];
        for (o, out_idx) in each_index(&out_dims).into_iter().enumerate() {
            let kept_idx: Vec<usize> = kept_positions.iter().map(|&i| out_idx[i]).collect();
            let ko = flat_index(&kept_dims, &kept_idx);
            for row in 0..rows {
                let v = &self.values[row * self.out_size() + o];
                values[row * new_out_size + ko] += v;
            }
        }
        Ok(ProbTable {
            outcome_vars: kept,
            cond_vars: self.cond_vars.clone(),
            values,
        })
    }

    /// Conditions the table on a partial assignment.
    ///
    /// Pinned conditioning variables are sliced out (no renormalization is
    /// needed). Pinned outcome variables are removed and the remaining
    /// outcome block is renormalized per conditioning row by exact division;
    /// a row that gives the pinned event probability zero is a
    /// [`ProbError::ZeroConditioning`] error.
    pub fn condition(&self, on: &[(&str, &str)]) -> Result<ProbTable, ProbError> {
        let mut cond_pins: Vec<Option<usize>> = vec![None; self.cond_vars.len()];
        let mut out_pins: Vec<Option<usize>> = vec![None; self.outcome_vars.len()];
        for (name, label) in on {
            if let Some(pos) = self.cond_vars.iter().position(|v| &v.name == name) {
                let i = self.cond_vars[pos].label_index(label).ok_or_else(|| {
                    ProbError::UnknownLabel {
                        variable: name.to_string(),
                        label: label.to_string(),
                    }
                })?;
                cond_pins[pos] = Some(i);
            } else if let Some(pos) = self.outcome_vars.iter().position(|v| &v.name == name) {
                let i = self.outcome_vars[pos].label_index(label).ok_or_else(|| {
                    ProbError::UnknownLabel {
                        variable: name.to_string(),
                        label: label.to_string(),
                    }
                })?;
                out_pins[pos] = Some(i);
            } else {
                return Err(ProbError::UnknownVariable {
                    name: name.to_string(),
                });
            }
        }

        let new_conds: Vec<Variable> = self
            .cond_vars
            .iter()
            .zip(&cond_pins)
            .filter(|(_, pin)| pin.is_none())
            .map(|(v, _)| v.clone())
            .collect();
        let new_outs: Vec<Variable> = self
            .outcome_vars
            .iter()
            .zip(&out_pins)
            .filter(|(_, pin)| pin.is_none())
            .map(|(v, _)| v.clone())
            .collect();
        let new_cond_dims: Vec<usize> = new_conds.iter().map(|v| v.labels.len()).collect();
        let new_out_dims: Vec<usize> = new_outs.iter().map(|v| v.labels.len()).collect();
        let new_out_size: usize = new_out_dims.iter().product::<usize>().max(1);

        let out_dims = self.out_dims();
        let mut values = Vec::with_capacity(space_size(&new_conds) * new_out_size);
        for new_cond_idx in each_index(&new_cond_dims) {
            // Rebuild the full conditioning index for this row.
            let mut cond_idx = Vec::with_capacity(self.cond_vars.len());
            let mut free_pos = 0usize;
            for pin in &cond_pins {
                match pin {
                    Some(i) => cond_idx.push(*i),
                    None => {
                        cond_idx.push(new_cond_idx[free_pos]);
                        free_pos += 1;
                    }
                }
            }
            let row = flat_index(&self.cond_dims(), &cond_idx);
            let base = row * self.out_size();

            // Collect the consistent outcome cells in new-table order.
            let mut selected: Vec<Rational> = Vec::with_capacity(new_out_size);
            for new_out_idx in each_index(&new_out_dims) {
                let mut out_idx = Vec::with_capacity(self.outcome_vars.len());
                let mut free = 0usize;
                for pin in &out_pins {
                    match pin {
                        Some(i) => out_idx.push(*i),
                        None => {
                            out_idx.push(new_out_idx[free]);
                            free += 1;
                        }
                    }
                }
                selected.push(self.values[base + flat_index(&out_dims, &out_idx)].clone());
            }

            let pins_present = out_pins.iter().any(Option::is_some);
            if pins_present {
                let norm: Rational = {
                    // Probability of the pinned event within this row.
                    let mut z = Rational::zero();
                    for (o, out_idx) in each_index(&out_dims).into_iter().enumerate() {
                        let consistent = out_pins
                            .iter()
                            .zip(&out_idx)
                            .all(|(pin, &i)| pin.map(|p| p == i).unwrap_or(true));
                        if consistent {
                            z += &self.values[base + o];
                        }
                    }
                    z
                };
                if norm.is_zero() {
                    let mut pairs: Vec<(String, String)> = self
                        .cond_vars
                        .iter()
                        .zip(&cond_idx)
                        .map(|(v, &i)| (v.name.clone(), v.labels[i].clone()))
                        .collect();
                    for (v, pin) in self.outcome_vars.iter().zip(&out_pins) {
                        if let Some(i) = pin {
                            pairs.push((v.name.clone(), v.labels[*i].clone()));
                        }
                    }
                    return Err(ProbError::ZeroConditioning {
                        assignment: Assignment(pairs),
                    });
                }
                for v in selected {
                    values.push(v / &norm);
                }
            } else {
                values.extend(selected);
            }
        }
        Ok(ProbTable {
            outcome_vars: new_outs,
            cond_vars: new_conds,
            values,
        })
    }

    /// Multiplies the table by an unconditional prior over a subset of its
    /// conditioning variables, moving those variables into the outcome set:
    /// `p(outs | conds)` with prior `q(sub)` becomes `p(outs, sub | rest)`.
    ///
    /// The prior's variables must match the table's conditioners exactly
    /// (name and label order).
    pub fn with_prior(&self, prior: &ProbTable) -> Result<ProbTable, ProbError> {
        if !prior.cond_vars.is_empty() {
            return Err(ProbError::IncompatibleTables(
                "prior must be unconditional".to_string(),
            ));
        }
        for pv in &prior.outcome_vars {
            match self.cond_var(&pv.name) {
                Some(cv) if cv.labels == pv.labels => {}
                Some(_) => {
                    return Err(ProbError::IncompatibleTables(format!(
                        "label alphabets for {:?} differ between table and prior",
                        pv.name
                    )))
                }
                None => {
                    return Err(ProbError::UnknownVariable {
                        name: pv.name.clone(),
                    })
                }
            }
        }
        let lifted: Vec<&str> = prior.outcome_vars.iter().map(|v| v.name.as_str()).collect();
        let new_outs: Vec<Variable> = self
            .outcome_vars
            .iter()
            .cloned()
            .chain(prior.outcome_vars.iter().cloned())
            .collect();
        let new_conds: Vec<Variable> = self
            .cond_vars
            .iter()
            .filter(|v| !lifted.contains(&v.name.as_str()))
            .cloned()
            .collect();
        ProbTable::from_fn(new_outs, new_conds, |cell| {
            let full: Vec<(&str, &str)> = cell
                .0
                .iter()
                .map(|(n, l)| (n.as_str(), l.as_str()))
                .collect();
            let prior_pairs: Vec<(&str, &str)> = full
                .iter()
                .filter(|(n, _)| lifted.contains(n))
                .cloned()
                .collect();
            let q = prior.value(&prior_pairs).expect("prior cell");
            let p = self.value(&full).expect("table cell");
            q * p
        })
    }

    /// Checks whether the table's values are unaffected by one conditioning
    /// variable: returns `None` when `p(outcomes | ..., name=l)` is the same
    /// for every label `l`, otherwise the first counterexample in row-major
    /// order.
    pub fn independent_of_conditioner(
        &self,
        name: &str,
    ) -> Result<Option<IrrelevanceWitness>, ProbError> {
        let pos = self
            .cond_vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| ProbError::UnknownVariable {
                name: name.to_string(),
            })?;
        let cond_dims = self.cond_dims();
        let out_size = self.out_size();
        for cond_idx in each_index(&cond_dims) {
            if cond_idx[pos] != 0 {
                continue;
            }
            let base_row = flat_index(&cond_dims, &cond_idx);
            for alt in 1..cond_dims[pos] {
                let mut alt_idx = cond_idx.clone();
                alt_idx[pos] = alt;
                let alt_row = flat_index(&cond_dims, &alt_idx);
                for o in 0..out_size {
                    let p_a = &self.values[base_row * out_size + o];
                    let p_b = &self.values[alt_row * out_size + o];
                    if p_a != p_b {
                        let outcome_assignment = {
                            let full = self.assignment_of_flat(base_row * out_size + o);
                            Assignment(
                                full.0
                                    .iter()
                                    .filter(|(n, _)| self.outcome_var(n).is_some())
                                    .cloned()
                                    .collect(),
                            )
                        };
                        let fixed = Assignment(
                            self.cond_vars
                                .iter()
                                .zip(&cond_idx)
                                .filter(|(v, _)| v.name != name)
                                .map(|(v, &i)| (v.name.clone(), v.labels[i].clone()))
                                .collect(),
                        );
                        return Ok(Some(IrrelevanceWitness {
                            outcome: outcome_assignment,
                            fixed_conditioners: fixed,
                            varied_conditioner: name.to_string(),
                            label_a: self.cond_vars[pos].labels[0].clone(),
                            probability_a: p_a.clone(),
                            label_b: self.cond_vars[pos].labels[alt].clone(),
                            probability_b: p_b.clone(),
                        }));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Bayes inversion: from `p(a | λ, x)`, `p(λ | x)` and `p(a | x)` computes
/// `p(λ | a, x) = p(a | λ, x) · p(λ | x) / p(a | x)`, exactly.
///
/// `a`, `λ` and `x` may each be several variables: the λ-block is
/// `p_l_given_x`'s outcome set, the x-block its conditioning set, and the
/// a-block `p_a_given_x`'s outcome set. Division by a zero `p(a | x)` is a
/// [`ProbError::ZeroConditioning`] error.
pub fn bayes_invert(
    p_a_given_lx: &ProbTable,
    p_l_given_x: &ProbTable,
    p_a_given_x: &ProbTable,
) -> Result<ProbTable, ProbError> {
    let lambda_vars = p_l_given_x.outcome_vars().to_vec();
    let x_vars = p_l_given_x.cond_vars().to_vec();
    let a_vars = p_a_given_x.outcome_vars().to_vec();
    if p_a_given_x.cond_vars() != x_vars.as_slice() {
        return Err(ProbError::IncompatibleTables(
            "p(a|x) and p(l|x) disagree on the conditioning variables".to_string(),
        ));
    }
    if p_a_given_lx.outcome_vars() != a_vars.as_slice() {
        return Err(ProbError::IncompatibleTables(
            "p(a|l,x) and p(a|x) disagree on the outcome variables".to_string(),
        ));
    }
    {
        let mut expected: Vec<&Variable> = lambda_vars.iter().chain(&x_vars).collect();
        let mut got: Vec<&Variable> = p_a_given_lx.cond_vars().iter().collect();
        expected.sort_by(|u, v| u.name.cmp(&v.name));
        got.sort_by(|u, v| u.name.cmp(&v.name));
        if expected != got {
            return Err(ProbError::IncompatibleTables(
                "p(a|l,x) must condition on exactly the l and x variables".to_string(),
            ));
        }
    }
    for (assignment, p) in p_a_given_x.iter() {
        if p.is_zero() {
            return Err(ProbError::ZeroConditioning { assignment });
        }
    }
    let new_conds: Vec<Variable> = a_vars.iter().cloned().chain(x_vars.iter().cloned()).collect();
    ProbTable::from_fn(lambda_vars, new_conds, |cell| {
        let full: Vec<(&str, &str)> = cell
            .0
            .iter()
            .map(|(n, l)| (n.as_str(), l.as_str()))
            .collect();
        let pick = |vars: &[Variable]| -> Vec<(&str, &str)> {
            full.iter()
                .filter(|(n, _)| vars.iter().any(|v| v.name == *n))
                .cloned()
                .collect()
        };
        let ax: Vec<(&str, &str)> = pick(p_a_given_x.outcome_vars())
            .into_iter()
            .chain(pick(p_a_given_x.cond_vars()))
            .collect();
        let marginal = p_a_given_x.value(&ax).expect("p(a|x) cell");
        let likelihood = p_a_given_lx.value(&full).expect("p(a|l,x) cell");
        let prior_pairs: Vec<(&str, &str)> = pick(p_l_given_x.outcome_vars())
            .into_iter()
            .chain(pick(p_l_given_x.cond_vars()))
            .collect();
        let prior = p_l_given_x.value(&prior_pairs).expect("p(l|x) cell");
        likelihood * prior / marginal
    })
}
