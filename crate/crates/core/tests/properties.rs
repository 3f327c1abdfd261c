//! Property suites over randomly generated exact models: marginalization
//! algebra, independence-checker symmetry and witness self-certification,
//! reversal involution, deterministic-local bounds, and audit invariants.

use proptest::prelude::*;

use ptm_core::audit::{audit_lemma, explain_conflation, mediation_consequence_check, StepId};
use ptm_core::conditions::{check_bell_locality, check_lambda_mediation, check_no_retrocausality};
use ptm_core::fixtures::{binary_local_strategy, deterministic_local};
use ptm_core::inequalities::{
    chsh, correlation_summary, local_bound_oracle, wigner_check, LocalObjective,
};
use ptm_core::model::{check_no_signalling, OnticModel, SplitMix64};
use ptm_core::prob::{check_independence, IndependenceVerdict};
use ptm_core::testkit::{
    random_local_ontic_model, random_mediated_model, random_no_signalling_model,
    random_small_table,
};
use ptm_core::timereverse::{
    canonical_ontological_reverse, ontological_reverse_with, operational_reverse, Bijection,
    ReversePair,
};
use ptm_core::Rational;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Summing out v1 then v2 equals v2 then v1, entrywise.
    #[test]
    fn marginalization_commutes(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let table = random_small_table(&mut rng);
        let names: Vec<String> = table.outcome_vars().iter().map(|v| v.name.clone()).collect();
        prop_assume!(names.len() >= 2);
        let keep_after_first: Vec<&str> =
            names[1..].iter().map(String::as_str).collect();
        let keep_after_second: Vec<&str> = std::iter::once(names[0].as_str())
            .chain(names[2..].iter().map(String::as_str))
            .collect();
        let keep_both: Vec<&str> = names[2..].iter().map(String::as_str).collect();

        let first_then_second = table
            .marginalize(&keep_after_first).unwrap()
            .marginalize(&keep_both).unwrap();
        let second_then_first = table
            .marginalize(&keep_after_second).unwrap()
            .marginalize(&keep_both).unwrap();
        prop_assert_eq!(first_then_second, second_then_first);
    }

    /// Any marginalize/condition chain keeps total mass exactly 1.
    #[test]
    fn mass_is_exactly_preserved(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let table = random_small_table(&mut rng);
        let total: Rational = table.iter().map(|(_, p)| p.clone()).sum();
        prop_assert!(total.is_one());

        let names: Vec<String> = table.outcome_vars().iter().map(|v| v.name.clone()).collect();
        let marginal = table.marginalize(&[names[0].as_str()]).unwrap();
        let total: Rational = marginal.iter().map(|(_, p)| p.clone()).sum();
        prop_assert!(total.is_one());

        // Condition on the first label of the first variable; conditioning
        // on a zero-probability branch errors and leaves nothing to check.
        let label = table.outcome_vars()[0].labels[0].clone();
        if let Ok(conditioned) = table.condition(&[(names[0].as_str(), label.as_str())]) {
            let total: Rational = conditioned.iter().map(|(_, p)| p.clone()).sum();
            prop_assert!(total.is_one());
        }
    }

    /// The CHSH statistic never exceeds the algebraic maximum 4.
    #[test]
    fn chsh_is_algebraically_bounded(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let model = random_no_signalling_model(&mut rng);
        let summary = correlation_summary(&model, None).unwrap();
        let result = chsh(&summary, "0", "1", "0", "1").unwrap();
        prop_assert!(result.lhs <= Rational::from_int(4));
    }
}

#[test]
fn independence_symmetry_and_witness_self_certification() {
    let mut rng = SplitMix64::new(0x1dea);
    for round in 0..1_000 {
        let table = random_small_table(&mut rng);
        let verdict_ab = check_independence(&table, &["u"], &["v"], &[]).unwrap();
        let verdict_ba = check_independence(&table, &["v"], &["u"], &[]).unwrap();
        assert_eq!(
            verdict_ab.is_independent(),
            verdict_ba.is_independent(),
            "symmetry broken in round {round}"
        );
        if let IndependenceVerdict::Dependent { witness } = &verdict_ab {
            // Recompute both sides of the defining equality from scratch.
            let assignment: Vec<(&str, &str)> = witness
                .a
                .0
                .iter()
                .chain(&witness.b.0)
                .chain(&witness.given.0)
                .map(|(n, l)| (n.as_str(), l.as_str()))
                .collect();
            let p_ab = table
                .marginalize(&["u", "v"])
                .unwrap()
                .value(&assignment)
                .unwrap()
                .clone();
            let p_a = table.marginalize(&["u"]).unwrap();
            let p_b = table.marginalize(&["v"]).unwrap();
            let pa = p_a
                .value(&[("u", witness.a.get("u").unwrap())])
                .unwrap()
                .clone();
            let pb = p_b
                .value(&[("v", witness.b.get("v").unwrap())])
                .unwrap()
                .clone();
            // Empty C: p(c) = 1, so the equality reduces to p(a,b) = p(a)p(b).
            assert_eq!(witness.joint_side, p_ab);
            assert_eq!(witness.product_side, &pa * &pb);
            assert_ne!(p_ab, pa * pb, "witness does not certify in round {round}");
        }
    }
}

#[test]
fn operational_reversal_is_an_involution_on_no_signalling_models() {
    let mut rng = SplitMix64::new(0x5eed);
    for round in 0..100 {
        let model = random_no_signalling_model(&mut rng);
        assert!(
            check_no_signalling(&model).unwrap().is_no_signalling(),
            "generator produced a signalling model in round {round}"
        );
        let reversed = operational_reverse(&model).unwrap();
        let back = operational_reverse(&reversed).unwrap();
        assert_eq!(back, model, "involution failed in round {round}");
    }
}

#[test]
fn deterministic_strategies_never_violate_the_inequalities() {
    let xs = ["0", "30"];
    let ys = ["0", "-30"];
    let triple = [("0", "-30"), ("30", "0"), ("30", "-30")];
    let margin = LocalObjective::wigner_margin(&triple, &[("0", "0")]);
    let prep: Vec<String> = xs.iter().map(|s| s.to_string()).collect();
    let meas: Vec<String> = ys.iter().map(|s| s.to_string()).collect();
    let wigner_bound = local_bound_oracle(&prep, &meas, &margin).unwrap();
    assert_eq!(wigner_bound, Rational::zero());

    for f_bits in 0..4u64 {
        for g_bits in 0..4u64 {
            let strategy = binary_local_strategy(&xs, &ys, f_bits, g_bits);
            let model = deterministic_local(&strategy).unwrap();
            assert!(check_bell_locality(&model).unwrap().local);

            let op = model.to_operational().unwrap();
            let summary = correlation_summary(&op, None).unwrap();

            // CHSH stays within the certified classical bound.
            let result = chsh(&summary, "0", "30", "0", "-30").unwrap();
            assert!(!result.violated, "strategy ({f_bits}, {g_bits})");
            for minus_at in 0..4 {
                let objective = LocalObjective::chsh_form("0", "30", "0", "-30", minus_at);
                let bound = local_bound_oracle(&prep, &meas, &objective).unwrap();
                let value = objective.evaluate(&summary).unwrap();
                assert!(
                    value <= bound,
                    "oracle consistency broken for ({f_bits}, {g_bits})"
                );
            }

            // Wigner, under the perfect-anticorrelation precondition.
            let anticorrelated = summary.stat("0", "0").unwrap().p_agree.is_zero();
            if anticorrelated {
                let result = wigner_check(&summary, &triple).unwrap();
                assert!(!result.violated, "strategy ({f_bits}, {g_bits})");
                assert!(margin.evaluate(&summary).unwrap() <= wigner_bound);
            }
        }
    }
}

#[test]
fn early_audit_steps_hold_for_mediated_non_retrocausal_models() {
    let mut rng = SplitMix64::new(0xabcd);
    for round in 0..50 {
        let model = random_mediated_model(&mut rng);
        assert!(check_lambda_mediation(&model).unwrap().passed);
        assert!(check_no_retrocausality(&model).unwrap().passed);

        // The transcribed identity-map reverse satisfies the pair invariant
        // regardless of signalling, which is all the audit needs.
        let f = Bijection::identity(&model.lambda_space);
        let reverse = ontological_reverse_with(&model, &f).unwrap();
        let pair = ReversePair {
            original: model,
            reverse,
            f,
        };
        let report = audit_lemma(&pair).unwrap();
        for id in [
            StepId::ForwardDecomposition,
            StepId::BayesIdentity,
            StepId::SubstitutedDecomposition,
            StepId::OnticIgnoresMeasSetting,
        ] {
            assert!(
                report.step(id).verdict.holds(),
                "{id} failed in round {round}: {:?}",
                report.step(id).verdict
            );
        }
    }
}

#[test]
fn reverse_side_independence_holds_for_canonical_pairs() {
    let mut rng = SplitMix64::new(0xfeed);
    for round in 0..50 {
        let model = random_local_ontic_model(&mut rng);
        assert!(
            check_no_signalling(&model.to_operational().unwrap())
                .unwrap()
                .is_no_signalling(),
            "local models cannot signal (round {round})"
        );
        let pair = canonical_ontological_reverse(&model).unwrap();
        let report = audit_lemma(&pair).unwrap();
        assert!(
            report.step(StepId::ReverseOnticIndependence).verdict.holds(),
            "round {round}"
        );
    }
}

#[test]
fn retrocausal_models_fail_the_ontic_independence_step() {
    // The ontic state copies the measurement setting.
    let model = OnticModel::from_fn(
        &["p", "q"],
        &["0", "1"],
        &["u", "d"],
        &["u", "d"],
        &["l0", "l1"],
        |_, y, _, _, l| {
            let wanted = if y == "0" { "l0" } else { "l1" };
            if l == wanted {
                Rational::new(1, 4)
            } else {
                Rational::zero()
            }
        },
    )
    .unwrap();
    assert!(!check_no_retrocausality(&model).unwrap().passed);

    let f = Bijection::identity(&model.lambda_space);
    let reverse = ontological_reverse_with(&model, &f).unwrap();
    let pair = ReversePair {
        original: model,
        reverse,
        f,
    };
    let report = audit_lemma(&pair).unwrap();
    assert!(!report.step(StepId::OnticIgnoresMeasSetting).verdict.holds());
    // The decomposition the independence is summed out of breaks with it.
    assert!(!report.step(StepId::ForwardDecomposition).verdict.holds());
    assert!(report.summary.first_failing.is_some());

    let finding = explain_conflation(&pair).unwrap();
    assert!(!finding.original_independence.holds);
    assert!(finding.note.contains("stopped distinguishing"));
}

#[test]
fn point_mass_ontic_space_satisfies_every_step() {
    // Product statistics with a single ontic state.
    let model = OnticModel::from_fn(
        &["0", "1"],
        &["0", "1"],
        &["u", "d"],
        &["u", "d"],
        &["l0"],
        |x, y, a, b, _| {
            let pa = if (a == "u") == (x == "0") {
                Rational::new(3, 4)
            } else {
                Rational::new(1, 4)
            };
            let pb = if (b == "u") == (y == "0") {
                Rational::new(2, 3)
            } else {
                Rational::new(1, 3)
            };
            pa * pb
        },
    )
    .unwrap();
    let pair = canonical_ontological_reverse(&model).unwrap();
    let report = audit_lemma(&pair).unwrap();
    for step in &report.steps {
        assert!(step.verdict.holds(), "{} failed: {:?}", step.id, step.verdict);
    }
    assert_eq!(report.summary.first_failing, None);

    let finding = explain_conflation(&pair).unwrap();
    assert!(finding.original_independence.holds);
    assert!(finding.reverse_independence.holds);
    assert!(finding.conflated_claim.holds);
}

#[test]
fn forced_substitution_is_a_no_op_on_settings_free_models() {
    // Already satisfies the unconditional claim: p(λ|x,y) = p(λ).
    let model = OnticModel::from_fn(
        &["0", "1"],
        &["0", "1"],
        &["u", "d"],
        &["u", "d"],
        &["l0", "l1"],
        |x, y, a, b, l| {
            let rho = if l == "l0" {
                Rational::new(1, 3)
            } else {
                Rational::new(2, 3)
            };
            let pa = if (a == "u") == (x == "0") {
                Rational::new(3, 4)
            } else {
                Rational::new(1, 4)
            };
            let pb = if (b == "u") == ((y == "0") ^ (l == "l1")) {
                Rational::new(5, 8)
            } else {
                Rational::new(3, 8)
            };
            rho * pa * pb
        },
    )
    .unwrap();
    let consequence = mediation_consequence_check(&model, None).unwrap();
    assert_eq!(consequence.recomputed.joint, model.joint);
}

#[test]
fn forced_substitution_always_removes_forward_signalling() {
    let mut rng = SplitMix64::new(0xcafe);
    for _ in 0..30 {
        let model = random_mediated_model(&mut rng);
        let consequence = mediation_consequence_check(&model, None).unwrap();
        assert!(consequence.no_signalling.no_forward_signalling);
        assert!(consequence.screening.is_independent());
        assert!(!consequence.any_violation);
    }
}
