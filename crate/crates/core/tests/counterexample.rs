//! End-to-end behavior of the built-in counterexample: condition checks,
//! no-signalling, reverses, inequalities, the derivation audit and the
//! forced-substitution reductio, all in exact arithmetic.

use ptm_core::audit::{
    audit_lemma, explain_conflation, mediation_consequence_check, StepId, StepVerdict, StepWitness,
};
use ptm_core::conditions::{check_all_conditions, check_bell_locality, ConditionName};
use ptm_core::fixtures::{counterexample_model, counterexample_reverse, singlet_stats};
use ptm_core::inequalities::{
    chsh, correlation_summary, local_bound_oracle, wigner_check, LocalObjective,
};
use ptm_core::model::{
    check_no_signalling, sample_run, SplitMix64, VAR_MEAS_OUTPUT, VAR_ONTIC, VAR_PREP_OUTPUT,
};
use ptm_core::prob::{bayes_invert, check_independence, IndependenceVerdict, ProbError, Variable};
use ptm_core::timereverse::{
    canonical_ontological_reverse, find_ontological_reverse, is_operational_reverse,
    operational_reverse,
};
use ptm_core::Rational;

#[test]
fn all_five_conditions_pass_exactly() {
    let model = counterexample_model();
    let report = check_all_conditions(&model).unwrap();
    assert!(report.all_pass(), "{report:?}");
    for name in ConditionName::ALL {
        assert!(report.outcome(name).unwrap().passed, "{name} failed");
    }
}

#[test]
fn no_signalling_with_exact_half_marginals() {
    let op = counterexample_model().to_operational().unwrap();
    let verdict = check_no_signalling(&op).unwrap();
    assert!(verdict.is_no_signalling());

    let half = Rational::new(1, 2);
    let p_a = op.joint.marginalize(&[VAR_PREP_OUTPUT]).unwrap();
    for (_, p) in p_a.iter() {
        assert_eq!(*p, half);
    }
    let p_b = op.joint.marginalize(&[VAR_MEAS_OUTPUT]).unwrap();
    for (_, p) in p_b.iter() {
        assert_eq!(*p, half);
    }
}

#[test]
fn marginalizing_out_everything_but_b_gives_uniform_halves() {
    let model = counterexample_model();
    let p_b = model.joint.marginalize(&[VAR_MEAS_OUTPUT]).unwrap();
    for (_, p) in p_b.iter() {
        assert_eq!(*p, Rational::new(1, 2));
    }
}

#[test]
fn ontic_marginal_restricted_to_one_setting() {
    let model = counterexample_model();
    let restricted = model
        .joint
        .marginalize(&[VAR_ONTIC])
        .unwrap()
        .condition(&[("x", "0")])
        .unwrap();
    for y in ["0", "-30"] {
        assert_eq!(
            restricted.value(&[("lambda", "(0,up)"), ("y", y)]).unwrap(),
            &Rational::new(1, 2)
        );
        assert_eq!(
            restricted
                .value(&[("lambda", "(0,down)"), ("y", y)])
                .unwrap(),
            &Rational::new(1, 2)
        );
        assert_eq!(
            restricted.value(&[("lambda", "(30,up)"), ("y", y)]).unwrap(),
            &Rational::zero()
        );
    }
}

#[test]
fn conditioning_on_the_preparation_outcome_pins_the_rest() {
    let model = counterexample_model();
    let sliced = model
        .joint
        .condition(&[("x", "0"), ("y", "0"), ("a", "up")])
        .unwrap();
    assert_eq!(
        sliced
            .value(&[("b", "down"), ("lambda", "(0,up)")])
            .unwrap(),
        &Rational::one()
    );
}

#[test]
fn conditioning_on_an_impossible_ontic_state_errors() {
    let model = counterexample_model();
    let err = model
        .joint
        .condition(&[("x", "0"), ("lambda", "(30,up)")])
        .unwrap_err();
    match err {
        ProbError::ZeroConditioning { assignment } => {
            assert_eq!(assignment.get("lambda"), Some("(30,up)"));
            assert_eq!(assignment.get("x"), Some("0"));
        }
        other => panic!("expected ZeroConditioning, got {other:?}"),
    }
}

#[test]
fn bayes_inversion_recovers_the_deterministic_posterior() {
    // The three conditionals of the counterexample preparation stage.
    let lambda_var = Variable::new(
        "lambda",
        ["(0,up)", "(0,down)", "(30,up)", "(30,down)"],
    );
    let x_var = Variable::new("x", ["0", "30"]);
    let a_var = Variable::new("a", ["up", "down"]);
    let lambda_of = |x: &str, a: &str| format!("({x},{a})");

    let p_a_given_lx = ptm_core::ProbTable::from_fn(
        vec![a_var.clone()],
        vec![lambda_var.clone(), x_var.clone()],
        |cell| {
            let lambda = cell.expect("lambda");
            let x = cell.expect("x");
            if !lambda.starts_with(&format!("({x},")) {
                // impossible (λ, x) rows: any proper filler distribution
                return Rational::new(1, 2);
            }
            if lambda == lambda_of(x, cell.expect("a")) {
                Rational::one()
            } else {
                Rational::zero()
            }
        },
    )
    .unwrap();
    let p_l_given_x = ptm_core::ProbTable::from_fn(
        vec![lambda_var.clone()],
        vec![x_var.clone()],
        |cell| {
            if cell.expect("lambda").starts_with(&format!("({},", cell.expect("x"))) {
                Rational::new(1, 2)
            } else {
                Rational::zero()
            }
        },
    )
    .unwrap();
    let p_a_given_x =
        ptm_core::ProbTable::from_fn(vec![a_var], vec![x_var], |_| Rational::new(1, 2)).unwrap();

    let posterior = bayes_invert(&p_a_given_lx, &p_l_given_x, &p_a_given_x).unwrap();
    assert_eq!(
        posterior
            .value(&[("lambda", "(0,up)"), ("a", "up"), ("x", "0")])
            .unwrap(),
        &Rational::one()
    );
    assert_eq!(
        posterior
            .value(&[("lambda", "(0,down)"), ("a", "up"), ("x", "0")])
            .unwrap(),
        &Rational::zero()
    );
}

#[test]
fn mediation_independence_and_the_settings_dependence_of_lambda() {
    let model = counterexample_model();
    let lifted = model.lifted_joint(None).unwrap();
    // b is screened from (a, x) by (lambda, y).
    assert!(check_independence(&lifted, &["b"], &["a", "x"], &["lambda", "y"])
        .unwrap()
        .is_independent());
    // lambda is not unconditionally independent of x.
    match check_independence(&lifted, &["lambda"], &["x"], &[]).unwrap() {
        IndependenceVerdict::Dependent { witness } => {
            assert_eq!(witness.a.get("lambda"), Some("(0,up)"));
        }
        IndependenceVerdict::Independent => panic!("lambda must depend on x"),
    }
}

#[test]
fn counterexample_read_spacelike_passes_bell_locality() {
    let verdict = check_bell_locality(&counterexample_model()).unwrap();
    assert!(verdict.local, "{}", verdict.detail);
}

#[test]
fn correlation_summary_matches_the_stated_statistics() {
    let op = counterexample_model().to_operational().unwrap();
    let summary = correlation_summary(&op, None).unwrap();

    let cell = |x: &str, y: &str| summary.stat(x, y).unwrap();
    assert_eq!(cell("0", "0").p_disagree, Rational::one());
    assert_eq!(cell("30", "0").p_disagree, Rational::new(3, 4));
    assert_eq!(cell("0", "-30").p_disagree, Rational::new(3, 4));
    assert_eq!(cell("30", "-30").p_disagree, Rational::new(1, 4));
    assert_eq!(cell("30", "0").correlator, Rational::new(-1, 2));
    assert_eq!(cell("0", "0").correlator, Rational::from_int(-1));
    assert_eq!(cell("30", "-30").correlator, Rational::new(1, 2));
}

#[test]
fn wigner_is_violated_exactly() {
    let op = counterexample_model().to_operational().unwrap();
    let summary = correlation_summary(&op, None).unwrap();
    let result = wigner_check(&summary, &[("0", "-30"), ("30", "0"), ("30", "-30")]).unwrap();
    assert_eq!(result.lhs, Rational::new(1, 2));
    assert_eq!(result.rhs, Rational::new(3, 4));
    assert!(result.violated);
    assert_eq!(result.anticorrelated_at_equal_settings, Some(true));
}

#[test]
fn chsh_reaches_five_halves() {
    let op = counterexample_model().to_operational().unwrap();
    let summary = correlation_summary(&op, None).unwrap();
    let result = chsh(&summary, "0", "30", "0", "-30").unwrap();
    assert_eq!(result.lhs, Rational::new(5, 2));
    assert!(result.violated);
}

#[test]
fn oracle_certifies_both_classical_bounds_independently() {
    let op = counterexample_model().to_operational().unwrap();
    for minus_at in 0..4 {
        let objective = LocalObjective::chsh_form("0", "30", "0", "-30", minus_at);
        assert_eq!(
            local_bound_oracle(&op.prep_settings, &op.meas_settings, &objective).unwrap(),
            Rational::from_int(2)
        );
    }
    let margin = LocalObjective::wigner_margin(
        &[("0", "-30"), ("30", "0"), ("30", "-30")],
        &[("0", "0")],
    );
    assert_eq!(
        local_bound_oracle(&op.prep_settings, &op.meas_settings, &margin).unwrap(),
        Rational::zero()
    );
    // The counterexample's margin exceeds the certified bound.
    let summary = correlation_summary(&op, None).unwrap();
    assert_eq!(margin.evaluate(&summary).unwrap(), Rational::new(1, 4));
}

#[test]
fn operational_reverse_of_the_counterexample() {
    let op = counterexample_model().to_operational().unwrap();
    let reversed = operational_reverse(&op).unwrap();
    assert_eq!(
        reversed.probability("0", "0", "down", "up").unwrap(),
        Rational::new(1, 2)
    );
    assert!(is_operational_reverse(&op, &reversed).unwrap().matches);
    assert_eq!(operational_reverse(&reversed).unwrap(), op);
}

#[test]
fn bijection_search_finds_exactly_the_relabeling_map() {
    let pair = counterexample_reverse();
    let solutions = find_ontological_reverse(&pair.original, &pair.reverse).unwrap();
    assert_eq!(solutions.len(), 1, "the relabeling map is unique");
    assert_eq!(solutions[0], pair.f);
    // Every returned solution satisfies the defining equality.
    for f in solutions {
        let candidate = ptm_core::timereverse::ReversePair {
            original: pair.original.clone(),
            reverse: pair.reverse.clone(),
            f,
        };
        candidate.verify().unwrap();
    }
}

#[test]
fn swapping_two_ontic_states_through_a_channel_exchanges_their_response_rows() {
    use ptm_core::model::{compose_transformation, TransformationChannel};
    let model = counterexample_model();
    let space: Vec<&str> = model.lambda_space.iter().map(String::as_str).collect();
    let swap = TransformationChannel::from_fn(&space, &space, |l_in, l_out| {
        let image = match l_in {
            "(0,up)" => "(0,down)",
            "(0,down)" => "(0,up)",
            other => other,
        };
        if l_out == image {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
    .unwrap();
    let composed = compose_transformation(&model, &swap).unwrap();
    for x in &model.prep_settings {
        for y in &model.meas_settings {
            for a in &model.prep_outputs {
                for b in &model.meas_outputs {
                    assert_eq!(
                        composed.probability(x, y, a, b, "(0,up)").unwrap(),
                        model.probability(x, y, a, b, "(0,down)").unwrap()
                    );
                    assert_eq!(
                        composed.probability(x, y, a, b, "(30,up)").unwrap(),
                        model.probability(x, y, a, b, "(30,up)").unwrap()
                    );
                }
            }
        }
    }
}

#[test]
fn breaking_the_reverse_table_empties_the_bijection_search() {
    let pair = counterexample_reverse();
    // Permute the response probabilities of the candidate's (0,up)/(0,down)
    // states without renaming them: no bijection can repair the mismatch.
    let broken = ptm_core::model::OnticModel::from_fn(
        &pair.reverse.prep_settings.iter().map(String::as_str).collect::<Vec<_>>(),
        &pair.reverse.meas_settings.iter().map(String::as_str).collect::<Vec<_>>(),
        &pair.reverse.prep_outputs.iter().map(String::as_str).collect::<Vec<_>>(),
        &pair.reverse.meas_outputs.iter().map(String::as_str).collect::<Vec<_>>(),
        &pair.reverse.lambda_space.iter().map(String::as_str).collect::<Vec<_>>(),
        |x, y, a, b, lambda| {
            // Swap outcome roles of a for the two 0-states only.
            let flipped = if a == "up" { "down" } else { "up" };
            match lambda {
                "(0,up)" | "(0,down)" => pair
                    .reverse
                    .probability(x, y, flipped, b, lambda)
                    .unwrap(),
                _ => pair.reverse.probability(x, y, a, b, lambda).unwrap(),
            }
        },
    )
    .unwrap();
    let solutions = find_ontological_reverse(&pair.original, &broken).unwrap();
    assert!(solutions.is_empty());
}

#[test]
fn canonical_reverse_verifies_with_identity_and_matches_operational_reverse() {
    let model = counterexample_model();
    let pair = canonical_ontological_reverse(&model).unwrap();
    assert!(pair.f.is_identity());
    pair.verify().unwrap();
    let search = find_ontological_reverse(&model, &pair.reverse).unwrap();
    assert!(search.iter().any(|f| f.is_identity()));

    let via_ontic = pair.reverse.to_operational().unwrap();
    let via_operational = operational_reverse(&model.to_operational().unwrap()).unwrap();
    assert_eq!(via_ontic.joint, via_operational.joint);
}

#[test]
fn audit_locates_the_transported_independence_as_the_first_failure() {
    let pair = counterexample_reverse();
    let report = audit_lemma(&pair).unwrap();

    for id in [
        StepId::ForwardDecomposition,
        StepId::BayesIdentity,
        StepId::SubstitutedDecomposition,
        StepId::OnticIgnoresMeasSetting,
        StepId::ReverseOnticIndependence,
    ] {
        assert!(report.step(id).verdict.holds(), "{id} should hold");
    }
    for id in [StepId::OutcomeScreening, StepId::PrepOutcomeScreening] {
        assert!(report.step(id).verdict.holds(), "{id} should hold");
    }

    for id in [StepId::OnticIgnoresPrepSetting, StepId::OnticUnconditional] {
        match &report.step(id).verdict {
            StepVerdict::Fails {
                witness: StepWitness::ConditionalVaries(w),
            } => {
                assert_eq!(w.outcome.get("lambda"), Some("(0,up)"));
                assert_eq!(w.varied_conditioner, "x");
                assert_eq!(w.label_a, "0");
                assert_eq!(w.probability_a, Rational::new(1, 2));
                assert_eq!(w.label_b, "30");
                assert_eq!(w.probability_b, Rational::zero());
            }
            other => panic!("{id} should fail with a varying conditional, got {other:?}"),
        }
    }
    assert_eq!(
        report.summary.first_failing,
        Some(StepId::OnticIgnoresPrepSetting)
    );
}

#[test]
fn audit_of_the_canonical_pair_gives_the_same_diagnosis() {
    let pair = canonical_ontological_reverse(&counterexample_model()).unwrap();
    let report = audit_lemma(&pair).unwrap();
    assert!(report.step(StepId::OnticIgnoresMeasSetting).verdict.holds());
    assert!(report.step(StepId::ReverseOnticIndependence).verdict.holds());
    assert!(!report.step(StepId::OnticIgnoresPrepSetting).verdict.holds());
    assert!(!report.step(StepId::OnticUnconditional).verdict.holds());
    assert!(report.step(StepId::OutcomeScreening).verdict.holds());
    assert!(report.step(StepId::PrepOutcomeScreening).verdict.holds());
}

#[test]
fn conflation_finding_reads_holds_holds_fails() {
    let finding = explain_conflation(&counterexample_reverse()).unwrap();
    assert!(finding.original_independence.holds);
    assert!(finding.reverse_independence.holds);
    assert!(!finding.conflated_claim.holds);
    assert!(finding.conflated_claim.witness.is_some());
}

#[test]
fn forced_substitution_kills_every_correlation_under_two_settings_priors() {
    let model = counterexample_model();

    let skewed = ptm_core::ProbTable::from_fn(
        vec![
            Variable::new("x", ["0", "30"]),
            Variable::new("y", ["0", "-30"]),
        ],
        vec![],
        |cell| {
            let px = if cell.expect("x") == "0" {
                Rational::new(1, 3)
            } else {
                Rational::new(2, 3)
            };
            let py = if cell.expect("y") == "0" {
                Rational::new(1, 4)
            } else {
                Rational::new(3, 4)
            };
            px * py
        },
    )
    .unwrap();

    for settings in [None, Some(&skewed)] {
        let consequence = mediation_consequence_check(&model, settings).unwrap();
        assert!(consequence.screening.is_independent());
        assert!(consequence.no_signalling.no_forward_signalling);
        let summary = consequence.summary.as_ref().unwrap();
        for cell in &summary.cells {
            assert_eq!(cell.p_agree, Rational::new(1, 2), "at ({}, {})", cell.x, cell.y);
        }
        assert!(!consequence.any_violation);
        assert!(!consequence.wigner.as_ref().unwrap().violated);
        assert!(!consequence.chsh.as_ref().unwrap().violated);
    }
}

#[test]
fn sampled_runs_respect_the_support() {
    let model = counterexample_model();
    let mut rng = SplitMix64::new(99);
    for _ in 0..2_000 {
        let record = sample_run(&model, "0", "0", &mut rng).unwrap();
        assert_ne!(record.a, record.b, "outcomes always disagree at (0, 0)");
        assert!(
            record.lambda == "(0,up)" || record.lambda == "(0,down)",
            "zero mass elsewhere at x = 0"
        );
    }
    let mut rng_a = SplitMix64::new(5);
    let mut rng_b = SplitMix64::new(5);
    assert_eq!(
        sample_run(&model, "30", "-30", &mut rng_a).unwrap(),
        sample_run(&model, "30", "-30", &mut rng_b).unwrap()
    );
}

#[test]
fn singlet_statistics_coincide_with_the_counterexample() {
    let op = counterexample_model().to_operational().unwrap();
    assert_eq!(op.joint, singlet_stats().joint);
}
