//! Bell-type inequality evaluation on operational statistics.
//!
//! Works entirely in exact rationals: agreement/disagreement tables,
//! correlators, the Wigner agreement-form inequality, CHSH, and a
//! brute-force oracle that certifies the classical bounds by enumerating
//! every deterministic local strategy rather than trusting textbook
//! constants.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, OperationalModel};
use crate::prob::Rational;

/// Strategy enumeration cap: `2^(|X| + |Y|)` pairs must stay below this.
pub const MAX_STRATEGY_COUNT: u64 = 1 << 20;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InequalityError {
    #[error("unsupported shape: {detail}")]
    UnsupportedShape { detail: String },

    #[error("summary has no entry for setting pair ({x}, {y})")]
    MissingSettingPair { x: String, y: String },

    #[error("{count} deterministic strategies exceed the enumeration cap {MAX_STRATEGY_COUNT}")]
    TooManyStrategies { count: u64 },

    #[error("no deterministic strategy satisfies the stated constraints")]
    NoFeasibleStrategy,

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exact statistics for one setting pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettingPairStat {
    pub x: String,
    pub y: String,
    pub p_agree: Rational,
    pub p_disagree: Rational,
    /// `E = p_agree - p_disagree`.
    pub correlator: Rational,
}

/// Agreement/disagreement statistics for every setting pair of a
/// binary-outcome model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrelationSummary {
    /// Which measurement outcome counts as agreeing with each preparation
    /// outcome.
    pub agree_map: Vec<(String, String)>,
    pub cells: Vec<SettingPairStat>,
}

impl CorrelationSummary {
    pub fn stat(&self, x: &str, y: &str) -> Option<&SettingPairStat> {
        self.cells.iter().find(|c| c.x == x && c.y == y)
    }

    fn require(&self, x: &str, y: &str) -> Result<&SettingPairStat, InequalityError> {
        self.stat(x, y).ok_or_else(|| InequalityError::MissingSettingPair {
            x: x.to_string(),
            y: y.to_string(),
        })
    }
}

/// Computes exact agreement/disagreement probabilities and correlators per
/// setting pair.
///
/// Both outcome alphabets must be binary. `agree_map` pairs each
/// preparation outcome with the measurement outcome counted as agreement;
/// `None` uses same-label pairing, which requires the two alphabets to
/// coincide as sets.
pub fn correlation_summary(
    model: &OperationalModel,
    agree_map: Option<&[(String, String)]>,
) -> Result<CorrelationSummary, InequalityError> {
    if model.prep_outputs.len() != 2 || model.meas_outputs.len() != 2 {
        return Err(InequalityError::UnsupportedShape {
            detail: format!(
                "binary outcomes required on both sides, got {} and {}",
                model.prep_outputs.len(),
                model.meas_outputs.len()
            ),
        });
    }
    let map: Vec<(String, String)> = match agree_map {
        Some(m) => {
            let mut m = m.to_vec();
            m.retain(|(a, _)| model.prep_outputs.contains(a));
            if m.len() != 2
                || m[0].0 == m[1].0
                || m[0].1 == m[1].1
                || !m.iter().all(|(a, b)| {
                    model.prep_outputs.contains(a) && model.meas_outputs.contains(b)
                })
            {
                return Err(InequalityError::UnsupportedShape {
                    detail: "agreement map must pair each preparation outcome with a distinct \
                             measurement outcome"
                        .to_string(),
                });
            }
            m
        }
        None => {
            if model
                .prep_outputs
                .iter()
                .any(|a| !model.meas_outputs.contains(a))
            {
                return Err(InequalityError::UnsupportedShape {
                    detail: "same-label agreement pairing needs matching outcome alphabets; \
                             provide an explicit agreement map"
                        .to_string(),
                });
            }
            model
                .prep_outputs
                .iter()
                .map(|a| (a.clone(), a.clone()))
                .collect()
        }
    };

    let mut cells = Vec::new();
    for x in &model.prep_settings {
        for y in &model.meas_settings {
            let mut p_agree = Rational::zero();
            let mut p_disagree = Rational::zero();
            for a in &model.prep_outputs {
                let agrees_with = map
                    .iter()
                    .find(|(pa, _)| pa == a)
                    .map(|(_, b)| b.clone())
                    .expect("map covers prep outputs");
                for b in &model.meas_outputs {
                    let p = model.probability(x, y, a, b)?;
                    if *b == agrees_with {
                        p_agree += p;
                    } else {
                        p_disagree += p;
                    }
                }
            }
            let correlator = &p_agree - &p_disagree;
            cells.push(SettingPairStat {
                x: x.clone(),
                y: y.clone(),
                p_agree,
                p_disagree,
                correlator,
            });
        }
    }
    Ok(CorrelationSummary {
        agree_map: map,
        cells,
    })
}

/// One itemized term of an inequality evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InequalityTerm {
    pub x: String,
    pub y: String,
    /// `"p_agree"` or `"E"`.
    pub quantity: String,
    pub coefficient: Rational,
    pub value: Rational,
}

/// Result of one inequality evaluation, exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InequalityResult {
    pub name: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub violated: bool,
    pub terms: Vec<InequalityTerm>,
    /// For the Wigner form: whether the model shows perfect anticorrelation
    /// at same-label setting pairs (reported, not enforced); `None` when no
    /// such pair exists.
    pub anticorrelated_at_equal_settings: Option<bool>,
}

/// The Wigner agreement-form inequality
/// `p_agree(x1,y1) + p_agree(x2,y2) >= p_agree(x3,y3)`, intended for models
/// with perfect anticorrelation at equal settings. Violated iff the
/// comparison strictly fails.
pub fn wigner_check(
    summary: &CorrelationSummary,
    triple: &[(&str, &str); 3],
) -> Result<InequalityResult, InequalityError> {
    let s1 = summary.require(triple[0].0, triple[0].1)?.clone();
    let s2 = summary.require(triple[1].0, triple[1].1)?.clone();
    let s3 = summary.require(triple[2].0, triple[2].1)?.clone();
    let lhs = &s1.p_agree + &s2.p_agree;
    let rhs = s3.p_agree.clone();
    let anticorrelated = {
        let equal_pairs: Vec<&SettingPairStat> =
            summary.cells.iter().filter(|c| c.x == c.y).collect();
        if equal_pairs.is_empty() {
            None
        } else {
            Some(equal_pairs.iter().all(|c| c.p_agree.is_zero()))
        }
    };
    let term = |s: &SettingPairStat, coefficient: Rational| InequalityTerm {
        x: s.x.clone(),
        y: s.y.clone(),
        quantity: "p_agree".to_string(),
        coefficient,
        value: s.p_agree.clone(),
    };
    Ok(InequalityResult {
        name: "wigner".to_string(),
        violated: lhs < rhs,
        terms: vec![
            term(&s1, Rational::one()),
            term(&s2, Rational::one()),
            term(&s3, -Rational::one()),
        ],
        lhs,
        rhs,
        anticorrelated_at_equal_settings: anticorrelated,
    })
}

/// CHSH: `S = |E(x0,y0) + E(x0,y1) + E(x1,y0) - E(x1,y1)|` maximized over
/// the four placements of the minus sign; violated iff `S > 2`.
pub fn chsh(
    summary: &CorrelationSummary,
    x0: &str,
    x1: &str,
    y0: &str,
    y1: &str,
) -> Result<InequalityResult, InequalityError> {
    let stats = [
        summary.require(x0, y0)?.clone(),
        summary.require(x0, y1)?.clone(),
        summary.require(x1, y0)?.clone(),
        summary.require(x1, y1)?.clone(),
    ];
    let mut best: Option<(Rational, usize)> = None;
    for minus_at in 0..4 {
        let mut total = Rational::zero();
        for (i, s) in stats.iter().enumerate() {
            if i == minus_at {
                total -= &s.correlator;
            } else {
                total += &s.correlator;
            }
        }
        let magnitude = total.abs();
        if best.as_ref().map(|(m, _)| magnitude > *m).unwrap_or(true) {
            best = Some((magnitude, minus_at));
        }
    }
    let (s_value, minus_at) = best.expect("four placements evaluated");
    let terms = stats
        .iter()
        .enumerate()
        .map(|(i, s)| InequalityTerm {
            x: s.x.clone(),
            y: s.y.clone(),
            quantity: "E".to_string(),
            coefficient: if i == minus_at {
                -Rational::one()
            } else {
                Rational::one()
            },
            value: s.correlator.clone(),
        })
        .collect();
    Ok(InequalityResult {
        name: "chsh".to_string(),
        violated: s_value > Rational::from_int(2),
        lhs: s_value,
        rhs: Rational::from_int(2),
        terms,
        anticorrelated_at_equal_settings: None,
    })
}

/// A linear functional over agreement probabilities, optionally constrained
/// to strategies that disagree at stated setting pairs:
/// `constant + Σ coefficient · p_agree(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalObjective {
    pub constant: Rational,
    pub terms: Vec<(String, String, Rational)>,
    pub require_disagree_at: Vec<(String, String)>,
}

impl LocalObjective {
    /// CHSH with the minus sign at `minus_at` (index into the
    /// `(x0,y0), (x0,y1), (x1,y0), (x1,y1)` order), written in agreement
    /// probabilities via `E = 2·p_agree - 1`.
    pub fn chsh_form(x0: &str, x1: &str, y0: &str, y1: &str, minus_at: usize) -> Self {
        let pairs = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)];
        let mut constant = Rational::zero();
        let mut terms = Vec::new();
        for (i, (x, y)) in pairs.iter().enumerate() {
            let sign = if i == minus_at {
                -Rational::one()
            } else {
                Rational::one()
            };
            terms.push((x.to_string(), y.to_string(), Rational::from_int(2) * &sign));
            constant -= &sign;
        }
        LocalObjective {
            constant,
            terms,
            require_disagree_at: Vec::new(),
        }
    }

    /// The Wigner violation margin `p_agree(x3,y3) - p_agree(x1,y1) -
    /// p_agree(x2,y2)` under perfect anticorrelation at the given pairs;
    /// classically bounded by 0.
    pub fn wigner_margin(triple: &[(&str, &str); 3], anticorrelated_at: &[(&str, &str)]) -> Self {
        LocalObjective {
            constant: Rational::zero(),
            terms: vec![
                (triple[2].0.to_string(), triple[2].1.to_string(), Rational::one()),
                (triple[0].0.to_string(), triple[0].1.to_string(), -Rational::one()),
                (triple[1].0.to_string(), triple[1].1.to_string(), -Rational::one()),
            ],
            require_disagree_at: anticorrelated_at
                .iter()
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .collect(),
        }
    }

    /// Evaluates the functional on a summary's exact agreement values.
    pub fn evaluate(&self, summary: &CorrelationSummary) -> Result<Rational, InequalityError> {
        let mut total = self.constant.clone();
        for (x, y, coefficient) in &self.terms {
            let stat = summary.require(x, y)?;
            total += coefficient * &stat.p_agree;
        }
        Ok(total)
    }
}

/// Exact maximum of the objective over every deterministic local strategy:
/// all pairs of functions `X -> {0, 1}`, `Y -> {0, 1}`, where agreement at
/// `(x, y)` means the two bits coincide (outcome labels are abstracted away
/// by the agreement pairing).
pub fn local_bound_oracle(
    prep_settings: &[String],
    meas_settings: &[String],
    objective: &LocalObjective,
) -> Result<Rational, InequalityError> {
    let nx = prep_settings.len() as u32;
    let ny = meas_settings.len() as u32;
    let bits = u64::from(nx + ny);
    if bits >= 63 || (1u64 << bits) > MAX_STRATEGY_COUNT {
        return Err(InequalityError::TooManyStrategies {
            count: 1u64.checked_shl(bits as u32).unwrap_or(u64::MAX),
        });
    }
    let setting_index = |labels: &[String], wanted: &str| -> Result<usize, InequalityError> {
        labels.iter().position(|l| l == wanted).ok_or_else(|| {
            InequalityError::MissingSettingPair {
                x: wanted.to_string(),
                y: "(unknown setting)".to_string(),
            }
        })
    };

    let mut best: Option<Rational> = None;
    for f_bits in 0..(1u64 << nx) {
        for g_bits in 0..(1u64 << ny) {
            let f = |x: usize| (f_bits >> x) & 1;
            let g = |y: usize| (g_bits >> y) & 1;
            let mut feasible = true;
            for (x, y) in &objective.require_disagree_at {
                let xi = setting_index(prep_settings, x)?;
                let yi = setting_index(meas_settings, y)?;
                if f(xi) == g(yi) {
                    feasible = false;
                    break;
                }
            }
            if !feasible {
                continue;
            }
            let mut value = objective.constant.clone();
            for (x, y, coefficient) in &objective.terms {
                let xi = setting_index(prep_settings, x)?;
                let yi = setting_index(meas_settings, y)?;
                if f(xi) == g(yi) {
                    value += coefficient;
                }
            }
            if best.as_ref().map(|b| value > *b).unwrap_or(true) {
                best = Some(value);
            }
        }
    }
    best.ok_or(InequalityError::NoFeasibleStrategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OperationalModel;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Uncorrelated fair coins on both wings.
    fn uncorrelated() -> OperationalModel {
        OperationalModel::from_fn(
            &["0", "1"],
            &["0", "1"],
            &["up", "down"],
            &["up", "down"],
            |_, _, _, _| Rational::new(1, 4),
        )
        .unwrap()
    }

    #[test]
    fn summary_requires_binary_outcomes() {
        let ternary = OperationalModel::from_fn(
            &["0"],
            &["0"],
            &["a", "b", "c"],
            &["up", "down"],
            |_, _, _, _| Rational::new(1, 6),
        )
        .unwrap();
        assert!(matches!(
            correlation_summary(&ternary, None),
            Err(InequalityError::UnsupportedShape { .. })
        ));
    }

    #[test]
    fn uncorrelated_model_has_zero_correlators_and_no_violations() {
        let summary = correlation_summary(&uncorrelated(), None).unwrap();
        for cell in &summary.cells {
            assert_eq!(cell.correlator, Rational::zero());
            assert!((&cell.p_agree + &cell.p_disagree).is_one());
        }
        let chsh_result = chsh(&summary, "0", "1", "0", "1").unwrap();
        assert_eq!(chsh_result.lhs, Rational::zero());
        assert!(!chsh_result.violated);
    }

    #[test]
    fn fully_anticorrelated_model_does_not_violate_wigner() {
        let m = OperationalModel::from_fn(
            &["0", "1"],
            &["0", "1"],
            &["up", "down"],
            &["up", "down"],
            |_, _, a, b| {
                if a == b {
                    Rational::zero()
                } else {
                    Rational::new(1, 2)
                }
            },
        )
        .unwrap();
        let summary = correlation_summary(&m, None).unwrap();
        let result = wigner_check(&summary, &[("0", "1"), ("1", "0"), ("1", "1")]).unwrap();
        assert_eq!(result.lhs, Rational::zero());
        assert_eq!(result.rhs, Rational::zero());
        assert!(!result.violated);
        assert_eq!(result.anticorrelated_at_equal_settings, Some(true));
    }

    #[test]
    fn chsh_bound_over_two_by_two_settings_is_two() {
        let x = labels(&["0", "1"]);
        let y = labels(&["0", "1"]);
        for minus_at in 0..4 {
            let objective = LocalObjective::chsh_form("0", "1", "0", "1", minus_at);
            let bound = local_bound_oracle(&x, &y, &objective).unwrap();
            assert_eq!(bound, Rational::from_int(2), "placement {minus_at}");
        }
    }

    #[test]
    fn wigner_margin_bound_under_anticorrelation_is_zero() {
        let x = labels(&["0", "30"]);
        let y = labels(&["0", "-30"]);
        let objective = LocalObjective::wigner_margin(
            &[("0", "-30"), ("30", "0"), ("30", "-30")],
            &[("0", "0")],
        );
        let bound = local_bound_oracle(&x, &y, &objective).unwrap();
        assert_eq!(bound, Rational::zero());
    }

    #[test]
    fn single_setting_correlator_bound_is_one() {
        let x = labels(&["only"]);
        let y = labels(&["only"]);
        let objective = LocalObjective {
            constant: -Rational::one(),
            terms: vec![("only".to_string(), "only".to_string(), Rational::from_int(2))],
            require_disagree_at: Vec::new(),
        };
        assert_eq!(
            local_bound_oracle(&x, &y, &objective).unwrap(),
            Rational::one()
        );
    }

    #[test]
    fn missing_setting_pair_is_a_structural_error() {
        let summary = correlation_summary(&uncorrelated(), None).unwrap();
        assert!(matches!(
            wigner_check(&summary, &[("0", "7"), ("1", "0"), ("1", "1")]),
            Err(InequalityError::MissingSettingPair { .. })
        ));
    }

    #[test]
    fn explicit_agreement_map_flips_the_statistics() {
        let m = OperationalModel::from_fn(
            &["0"],
            &["0"],
            &["up", "down"],
            &["up", "down"],
            |_, _, a, b| {
                if a == b {
                    Rational::new(1, 2)
                } else {
                    Rational::zero()
                }
            },
        )
        .unwrap();
        let same = correlation_summary(&m, None).unwrap();
        assert!(same.stat("0", "0").unwrap().p_agree.is_one());
        let crossed = vec![
            ("up".to_string(), "down".to_string()),
            ("down".to_string(), "up".to_string()),
        ];
        let flipped = correlation_summary(&m, Some(&crossed)).unwrap();
        assert!(flipped.stat("0", "0").unwrap().p_agree.is_zero());
    }
}
