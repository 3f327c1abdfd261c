//! Seeded random generators for tests: small exact tables, no-signalling
//! operational models, and locally factorized ontic models.
//!
//! Everything is driven by [`SplitMix64`], so suites are reproducible run to
//! run. Weights are drawn as small integers and normalized by exact
//! division, keeping every generated distribution exactly normalized.

use crate::model::{OnticModel, OperationalModel, SplitMix64};
use crate::prob::{ProbTable, Rational, Variable};

/// A random vector of `n` exact weights summing to exactly 1.
pub fn random_distribution(rng: &mut SplitMix64, n: usize) -> Vec<Rational> {
    assert!(n > 0);
    let mut weights: Vec<i64> = (0..n).map(|_| (rng.next_u64() % 9) as i64).collect();
    if weights.iter().all(|w| *w == 0) {
        weights[(rng.next_u64() % n as u64) as usize] = 1;
    }
    let total: i64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| Rational::new(w, total))
        .collect()
}

/// A random unconditional table over two or three small variables.
pub fn random_small_table(rng: &mut SplitMix64) -> ProbTable {
    let three_vars = rng.next_u64().is_multiple_of(2);
    let mut vars = vec![
        Variable::new("u", ["0", "1"]),
        Variable::new("v", ["0", "1"]),
    ];
    if three_vars {
        vars.push(Variable::new("w", ["0", "1", "2"]));
    }
    let cells: usize = vars.iter().map(|v| v.labels.len()).product();
    let weights = random_distribution(rng, cells);
    let mut i = 0;
    ProbTable::from_fn(vars, vec![], |_| {
        let w = weights[i].clone();
        i += 1;
        w
    })
    .expect("random table is well formed")
}

/// A random no-signalling operational model over 2x2 settings and binary
/// outcomes, built as an exact mixture of product strategies
/// `P(a,b|x,y) = Σ_k w_k p_k(a|x) q_k(b|y)`.
pub fn random_no_signalling_model(rng: &mut SplitMix64) -> OperationalModel {
    let components = 1 + (rng.next_u64() % 3) as usize;
    let weights = random_distribution(rng, components);
    // Per component: p(a=up|x) for each x, q(b=up|y) for each y.
    let mut p_up: Vec<Vec<Rational>> = Vec::new();
    let mut q_up: Vec<Vec<Rational>> = Vec::new();
    for _ in 0..components {
        p_up.push(vec![
            Rational::new((rng.next_u64() % 5) as i64, 4),
            Rational::new((rng.next_u64() % 5) as i64, 4),
        ]);
        q_up.push(vec![
            Rational::new((rng.next_u64() % 5) as i64, 4),
            Rational::new((rng.next_u64() % 5) as i64, 4),
        ]);
    }
    let xs = ["0", "1"];
    let ys = ["0", "1"];
    OperationalModel::from_fn(&xs, &ys, &["up", "down"], &["up", "down"], |x, y, a, b| {
        let xi = if x == "0" { 0 } else { 1 };
        let yi = if y == "0" { 0 } else { 1 };
        let mut total = Rational::zero();
        for k in 0..components {
            let pa = if a == "up" {
                p_up[k][xi].clone()
            } else {
                Rational::one() - p_up[k][xi].clone()
            };
            let qb = if b == "up" {
                q_up[k][yi].clone()
            } else {
                Rational::one() - q_up[k][yi].clone()
            };
            total += &weights[k] * pa * qb;
        }
        total
    })
    .expect("mixture model is well formed")
}

/// A random locally factorized ontic model
/// `p(a,b,λ|x,y) = ρ(λ) · p(a|x,λ) · p(b|y,λ)` over 2x2 settings, binary
/// outcomes and a small ontic space. Such models satisfy no-signalling,
/// λ-mediation and no-retrocausality by construction.
pub fn random_local_ontic_model(rng: &mut SplitMix64) -> OnticModel {
    let n_lambda = 1 + (rng.next_u64() % 3) as usize;
    let lambda_labels: Vec<String> = (0..n_lambda).map(|i| format!("l{i}")).collect();
    let rho = random_distribution(rng, n_lambda);
    // p(a=up | x, λ) and p(b=up | y, λ) as quarters.
    let mut wing_a = Vec::new();
    let mut wing_b = Vec::new();
    for _ in 0..n_lambda {
        wing_a.push([
            Rational::new((rng.next_u64() % 5) as i64, 4),
            Rational::new((rng.next_u64() % 5) as i64, 4),
        ]);
        wing_b.push([
            Rational::new((rng.next_u64() % 5) as i64, 4),
            Rational::new((rng.next_u64() % 5) as i64, 4),
        ]);
    }
    let lambda_refs: Vec<&str> = lambda_labels.iter().map(String::as_str).collect();
    OnticModel::from_fn(
        &["0", "1"],
        &["0", "1"],
        &["up", "down"],
        &["up", "down"],
        &lambda_refs,
        |x, y, a, b, lambda| {
            let li = lambda_labels
                .iter()
                .position(|l| l == lambda)
                .expect("known lambda");
            let xi = if x == "0" { 0 } else { 1 };
            let yi = if y == "0" { 0 } else { 1 };
            let pa = if a == "up" {
                wing_a[li][xi].clone()
            } else {
                Rational::one() - wing_a[li][xi].clone()
            };
            let pb = if b == "up" {
                wing_b[li][yi].clone()
            } else {
                Rational::one() - wing_b[li][yi].clone()
            };
            rho[li].clone() * pa * pb
        },
    )
    .expect("local ontic model is well formed")
}

/// A random mediated, non-retrocausal (but generally signalling) ontic
/// model: `p(a,b,λ|x,y) = p(a|x) · p(λ|a,x) · p(b|λ,y)` with random exact
/// kernels.
pub fn random_mediated_model(rng: &mut SplitMix64) -> OnticModel {
    let n_lambda = 2 + (rng.next_u64() % 2) as usize;
    let lambda_labels: Vec<String> = (0..n_lambda).map(|i| format!("l{i}")).collect();
    let xs = ["0", "1"];
    let ys = ["0", "1"];
    let outs = ["up", "down"];

    // p(a=up|x)
    let a_up: Vec<Rational> = (0..2)
        .map(|_| Rational::new((rng.next_u64() % 5) as i64, 4))
        .collect();
    // p(λ|a,x): 4 rows of n_lambda weights.
    let mut lam_rows = Vec::new();
    for _ in 0..4 {
        lam_rows.push(random_distribution(rng, n_lambda));
    }
    // p(b=up|λ,y)
    let mut b_up = Vec::new();
    for _ in 0..n_lambda {
        b_up.push([
            Rational::new((rng.next_u64() % 5) as i64, 4),
            Rational::new((rng.next_u64() % 5) as i64, 4),
        ]);
    }

    let lambda_refs: Vec<&str> = lambda_labels.iter().map(String::as_str).collect();
    OnticModel::from_fn(&xs, &ys, &outs, &outs, &lambda_refs, |x, y, a, b, lambda| {
        let xi = if x == "0" { 0 } else { 1 };
        let yi = if y == "0" { 0 } else { 1 };
        let ai = if a == "up" { 0 } else { 1 };
        let li = lambda_labels
            .iter()
            .position(|l| l == lambda)
            .expect("known lambda");
        let pa = if ai == 0 {
            a_up[xi].clone()
        } else {
            Rational::one() - a_up[xi].clone()
        };
        let plam = lam_rows[xi * 2 + ai][li].clone();
        let pb = if b == "up" {
            b_up[li][yi].clone()
        } else {
            Rational::one() - b_up[li][yi].clone()
        };
        pa * plam * pb
    })
    .expect("mediated model is well formed")
}
