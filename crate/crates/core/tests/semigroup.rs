use hermgraph::exec::stream_rng;
use hermgraph::graph::{FamilyKind, GraphFamily, Rule};
use hermgraph::instances::{random_instance, InstanceSpec, PotentialKind};
use hermgraph::semigroup::{
    contraction_certificate, heat_apply, heat_matrix, log_grid, resolvent_apply, semigroup_law_defect,
    truncation_consistency, ConnectionRule, InitialRule, PotentialRule,
};
use hermgraph::{Execution, LpExponent, Section};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heat_flow_contracts_in_l2(seed in any::<u64>(), t in 0.0f64..20.0) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Accretive)).unwrap();
        let a = inst.operator().unwrap();
        let u = Section::random(&inst.bundle, &mut stream_rng(seed, 20));
        let out = heat_apply(&a, t, &u).unwrap().output;
        let m = inst.graph.measure();
        let norm = |s: &Section| hermgraph::bundle::lp_norm(s, m, LpExponent::Finite(2.0)).unwrap();
        prop_assert!(norm(&out) <= norm(&u) * (1.0 + 1e-10));
    }

    #[test]
    fn resolvent_inverts_the_shifted_operator(seed in any::<u64>(), xi in 0.01f64..100.0) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Accretive)).unwrap();
        let a = inst.operator().unwrap();
        let f = Section::random(&inst.bundle, &mut stream_rng(seed, 21));
        let r = resolvent_apply(&a, xi, &f).unwrap();
        prop_assert!(r.residual <= 1e-10);
        let back = a.apply_section(&r.output).unwrap();
        let lhs = back.sub(&f.sub(&r.output.scale(hermgraph::C64::from(xi))));
        let err = lhs.fiber_norms().into_iter().fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * (1.0 + f.fiber_norms().into_iter().fold(0.0, f64::max)));
    }

    #[test]
    fn semigroup_law(seed in any::<u64>(), t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Arbitrary)).unwrap();
        let a = inst.operator().unwrap();
        let u = Section::random(&inst.bundle, &mut stream_rng(seed, 22));
        prop_assert!(semigroup_law_defect(&a, t, s, &u).unwrap() <= 1e-9);
    }
}

#[test]
fn heat_at_zero_is_the_identity() {
    let inst = random_instance(1, InstanceSpec::bundle(PotentialKind::Arbitrary)).unwrap();
    let a = inst.operator().unwrap();
    let u = Section::random(&inst.bundle, &mut stream_rng(1, 0));
    assert_eq!(heat_apply(&a, 0.0, &u).unwrap().output, u);
    assert!(heat_matrix(&a, -1.0).is_err());
}

#[test]
fn certificate_is_independent_of_execution_mode() {
    let inst = random_instance(9, InstanceSpec::bundle(PotentialKind::Accretive)).unwrap();
    let a = inst.operator().unwrap();
    let ps = [LpExponent::Finite(1.0), LpExponent::Finite(2.5), LpExponent::Infinity];
    let grid = log_grid(1e-2, 1e2, 5);
    let seq = contraction_certificate(&a, &ps, &grid, &grid, 16, 4, Execution::Sequential).unwrap();
    let par = contraction_certificate(&a, &ps, &grid, &grid, 16, 4, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(seq.passes(1e-10));
}

#[test]
fn dirichlet_truncations_of_a_tree_converge() {
    let family = GraphFamily::unit(FamilyKind::BinaryTree).with_weight(Rule::geometric(1.0, 0.5));
    let report = truncation_consistency(
        &family,
        &ConnectionRule::Random { dim: 2, seed: 5 },
        &PotentialRule::ByGeneration(Rule::constant(0.5)),
        &[2, 3, 4, 5, 6],
        1.0,
        &InitialRule::RootIndicator,
    )
    .unwrap();
    assert!(report.monotone, "differences {:?}", report.differences);
    assert!(report.final_difference < report.differences[0]);
}
