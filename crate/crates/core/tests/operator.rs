use hermgraph::bundle::{gauge_transform, inner_product, lp_norm, magnetic_connection};
use hermgraph::exec::stream_rng;
use hermgraph::instances::{random_instance, InstanceSpec, PotentialKind};
use hermgraph::linalg::{haar_unitary, max_abs};
use hermgraph::operator::{assemble, assemble_with, schrodinger_apply, AssemblyMode};
use hermgraph::{Bundle, CMatrix, LpExponent, Potential, Section, WeightedGraph, C64};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn connection_maps_are_unitary_and_reversible(seed in any::<u64>()) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Zero)).unwrap();
        prop_assert!(inst.connection.max_unitarity_defect() <= 1e-12);
        for (x, y, _) in inst.graph.edges() {
            let forward = inst.connection.map(x, y);
            let back = inst.connection.map(y, x);
            prop_assert!(max_abs(&(forward.adjoint() - back)) == 0.0);
        }
    }

    #[test]
    fn bundle_laplacian_is_nonnegative(seed in any::<u64>()) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Zero)).unwrap();
        let values = inst.operator().unwrap().pencil_eigenvalues().unwrap();
        prop_assert!(values[0] >= -1e-12, "lowest eigenvalue {}", values[0]);
    }

    #[test]
    fn symmetric_for_self_adjoint_potential(seed in any::<u64>()) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::SelfAdjoint)).unwrap();
        let mut rng = stream_rng(seed, 1);
        let u = Section::random(&inst.bundle, &mut rng);
        let v = Section::random(&inst.bundle, &mut rng);
        let op = inst.operator().unwrap();
        let m = inst.graph.measure();
        let left = inner_product(&op.apply_section(&u).unwrap(), &v, m).unwrap();
        let right = inner_product(&u, &op.apply_section(&v).unwrap(), m).unwrap();
        prop_assert!((left - right).norm() <= 1e-12 * (1.0 + left.norm()));
    }

    #[test]
    fn dense_sparse_and_matrix_free_agree(seed in any::<u64>()) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Arbitrary)).unwrap();
        let (g, b, c, w) = (&inst.graph, &inst.bundle, &inst.connection, &inst.potential);
        let dense = assemble_with(g, b, c, w, AssemblyMode::Dense).unwrap();
        let sparse = assemble_with(g, b, c, w, AssemblyMode::Sparse).unwrap();
        prop_assert!(sparse.is_sparse() && !dense.is_sparse());
        prop_assert!(max_abs(&(dense.to_dense() - sparse.to_dense())) == 0.0);
        let u = Section::random(b, &mut stream_rng(seed, 2));
        let direct = schrodinger_apply(g, b, c, w, &u).unwrap();
        let via_matrix = sparse.apply_section(&u).unwrap();
        let diff = direct.sub(&via_matrix).fiber_norms().into_iter().fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12 * (1.0 + direct.fiber_norms().into_iter().fold(0.0, f64::max)));
    }

    #[test]
    fn gauge_transform_intertwines(seed in any::<u64>()) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Arbitrary)).unwrap();
        let mut rng = stream_rng(seed, 3);
        let gauge: Vec<CMatrix> = (0..inst.graph.n()).map(|x| haar_unitary(&mut rng, inst.bundle.dim(x))).collect();
        let conn = gauge_transform(&inst.connection, &inst.bundle, &gauge).unwrap();
        let w = inst.potential.conjugated(&gauge);
        let u = Section::random(&inst.bundle, &mut rng);
        let gu = Section::from_values((0..u.n()).map(|x| &gauge[x] * u.at(x)).collect());
        let lhs = schrodinger_apply(&inst.graph, &inst.bundle, &conn, &w, &gu).unwrap();
        let hu = schrodinger_apply(&inst.graph, &inst.bundle, &inst.connection, &inst.potential, &u).unwrap();
        let rhs = Section::from_values((0..u.n()).map(|x| &gauge[x] * hu.at(x)).collect());
        let diff = lhs.sub(&rhs).fiber_norms().into_iter().fold(0.0, f64::max);
        prop_assert!(diff <= 1e-11 * (1.0 + hu.fiber_norms().into_iter().fold(0.0, f64::max)));
    }

    #[test]
    fn lp_norm_is_homogeneous(seed in any::<u64>(), p in 1.0f64..6.0, s in -3.0f64..3.0) {
        let inst = random_instance(seed, InstanceSpec::bundle(PotentialKind::Zero)).unwrap();
        let u = Section::random(&inst.bundle, &mut stream_rng(seed, 4));
        let m = inst.graph.measure();
        for exp in [LpExponent::Finite(p), LpExponent::Infinity] {
            let a = lp_norm(&u.scale(C64::from(s)), m, exp).unwrap();
            let b = s.abs() * lp_norm(&u, m, exp).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }
    }
}

#[test]
fn constants_are_harmonic_for_the_flat_connection() {
    let g = WeightedGraph::new(vec![1.0, 2.0, 0.5, 1.5], &[(0, 1, 1.0), (1, 2, 0.3), (2, 3, 2.0), (3, 0, 0.7)]).unwrap();
    let bundle = Bundle::uniform(4, 2).unwrap();
    let conn = hermgraph::bundle::identity_connection(&g, &bundle).unwrap();
    let op = assemble(&g, &bundle, &conn, &Potential::zeros(&bundle)).unwrap();
    let u = Section::random(&Bundle::uniform(1, 2).unwrap(), &mut stream_rng(0, 0));
    let constant = Section::from_values(vec![u.at(0).clone(); 4]);
    let out = op.apply_section(&constant).unwrap();
    assert!(out.fiber_norms().iter().all(|&v| v < 1e-14));
}

#[test]
fn magnetic_flux_lifts_the_bottom_of_the_spectrum() {
    let g = WeightedGraph::cycle(4);
    let bundle = Bundle::uniform(4, 1).unwrap();
    let flat = magnetic_connection(&g, &[]).unwrap();
    let phased: Vec<_> = g.edges().map(|(x, y, _)| (x, y, if (x, y) == (0, 3) { -1.0 } else { 1.0 })).collect();
    let twisted = magnetic_connection(&g, &phased).unwrap();
    let bottom = |c| assemble(&g, &bundle, c, &Potential::zeros(&bundle)).unwrap().pencil_eigenvalues().unwrap()[0];
    assert!(bottom(&flat).abs() < 1e-14);
    assert!(bottom(&twisted) > 0.1);
}
