//! Problem diagonal, spectral scalars and statevector kernels against dense
//! matrix oracles and brute-force scans.

mod common;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dense, oracles};
use oracles::{random_graph, random_state, to_dense};
use falqon_core::graph::{assign_weights, enumerate_cubic_topologies, WeightedGraph};
use falqon_core::hamiltonian::{
    build_problem_diagonal, gap_midpoint, gap_problem, ground_data, scalar_features, DEGENERACY_TOL,
};
use falqon_core::simulator::{
    apply_layer, apply_problem_phase, commutator_expectation, expect_problem,
    init_minus_state, success_probability, LayerParams, StateVector,
};

fn triangle() -> WeightedGraph {
    WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
}

#[test]
fn diagonal_matches_per_edge_brute_force() {
    let inst = assign_weights(&enumerate_cubic_topologies(8).unwrap()[3], 99);
    let hp = build_problem_diagonal(&inst).unwrap();
    for x in 0..256usize {
        let z = |k: usize| if x >> k & 1 == 0 { 1.0 } else { -1.0 };
        let expected: f64 = inst.edges().iter().map(|e| -e.w * (1.0 - z(e.u) * z(e.v)) / 2.0).sum();
        assert!((hp.values()[x] - expected).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn dense_problem_and_driver_match_implicit_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=4 {
        let g = random_graph(n.max(2), &mut rng);
        let n = g.n();
        let hp = build_problem_diagonal(&g).unwrap();
        let dense_hp = dense::problem_matrix(&g);
        for i in 0..1 << n {
            for j in 0..1 << n {
                let expected = if i == j { hp.values()[i] } else { 0.0 };
                assert!((dense_hp[(i, j)].re - expected).abs() < 1e-14 && dense_hp[(i, j)].im == 0.0);
            }
        }
        let hd = dense::driver_matrix(n);
        let driver = falqon_core::hamiltonian::DriverSpec { n };
        for col in 0..1 << n {
            let mut e = vec![0.0; 1 << n];
            e[col] = 1.0;
            let mut out = vec![0.0; 1 << n];
            driver.apply_real(&e, &mut out);
            for (row, v) in out.iter().enumerate() {
                assert_eq!(*v, hd[(row, col)].re);
            }
        }
    }
}

#[test]
fn generic_weights_have_a_complementary_ground_pair() {
    let topologies = enumerate_cubic_topologies(8).unwrap();
    for seed in 0..100u64 {
        let inst = assign_weights(&topologies[seed as usize % topologies.len()], 1000 + seed);
        let hp = build_problem_diagonal(&inst).unwrap();
        // Exhaustive scan oracle.
        let min = hp.values().iter().copied().fold(f64::INFINITY, f64::min);
        let scan: Vec<usize> = (0..256).filter(|&x| hp.values()[x] == min).collect();
        let (e_min, set) = ground_data(hp.values(), DEGENERACY_TOL);
        assert_eq!(e_min, min);
        assert_eq!(set, scan);
        assert_eq!(set.len(), 2, "seed {seed}");
        assert_eq!(set[0] ^ set[1], 255);
    }
}

#[test]
fn problem_gap_matches_sort_and_scan() {
    let inst = assign_weights(&enumerate_cubic_topologies(8).unwrap()[1], 5);
    let hp = build_problem_diagonal(&inst).unwrap();
    let mut sorted = hp.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let next = sorted.iter().find(|&&v| v > sorted[0] + 1e-12 * sorted[0].abs()).unwrap();
    assert_eq!(gap_problem(hp.values(), DEGENERACY_TOL).unwrap(), next - sorted[0]);
}

#[test]
fn midpoint_gap_matches_dense_diagonalization() {
    let edge = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
    assert!((gap_midpoint(&edge).unwrap() - dense::midpoint_gap(&edge)).abs() < 1e-10);
    let topologies = enumerate_cubic_topologies(8).unwrap();
    for seed in 0..20u64 {
        let inst = assign_weights(&topologies[seed as usize % topologies.len()], 300 + seed);
        let krylov = gap_midpoint(&inst).unwrap();
        let exact = dense::midpoint_gap(&inst);
        assert!((krylov - exact).abs() < 1e-9, "seed {seed}: {krylov} vs {exact}");
    }
}

#[test]
fn midpoint_gap_is_relabeling_invariant() {
    let inst = assign_weights(&enumerate_cubic_topologies(10).unwrap()[7], 21);
    let base = gap_midpoint(&inst).unwrap();
    for seed in 0..5 {
        let g = inst.graph().relabel(&common::permutation(10, seed));
        assert!((gap_midpoint(&g).unwrap() - base).abs() < 1e-9);
    }
}

#[test]
fn zero_weight_graph_features() {
    let g = WeightedGraph::new(4, (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v, 0.0)))).unwrap();
    assert!((gap_midpoint(&g).unwrap() - 1.0).abs() < 1e-10);
    let inst = assign_weights(&enumerate_cubic_topologies(4).unwrap()[0], 8);
    let a = scalar_features(&inst).unwrap();
    let b = scalar_features(&inst).unwrap();
    assert_eq!(a.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn triangle_observables() {
    let hp = build_problem_diagonal(&triangle()).unwrap();
    let psi = init_minus_state(3).unwrap();
    assert!((expect_problem(&psi, &hp).unwrap() + 1.5).abs() < 1e-15);
    assert!((success_probability(&psi, hp.ground_set()).unwrap() - 0.75).abs() < 1e-15);
    assert!(commutator_expectation(&psi, &hp).unwrap().abs() < 1e-15);
    for x in 0..8 {
        let basis = StateVector::basis(3, x).unwrap();
        assert_eq!(commutator_expectation(&basis, &hp).unwrap(), 0.0);
    }
    let ground = StateVector::basis(3, hp.ground_set()[0]).unwrap();
    assert_eq!(expect_problem(&ground, &hp).unwrap(), hp.e_min());
    assert_eq!(success_probability(&ground, hp.ground_set()).unwrap(), 1.0);
}

#[test]
fn commutator_after_one_phase_layer_on_the_triangle() {
    let g = triangle();
    let hp = build_problem_diagonal(&g).unwrap();
    let mut psi = init_minus_state(3).unwrap();
    apply_problem_phase(&mut psi, &hp, 0.3, 1.0).unwrap();
    let oracle = dense::commutator(&to_dense(&psi), &dense::driver_matrix(3), &dense::problem_matrix(&g));
    let value = commutator_expectation(&psi, &hp).unwrap();
    assert!((value - oracle).abs() < 1e-12);
    assert!(value.abs() > 1e-3, "the phase layer must break the symmetry");
}

#[test]
fn layer_factors_and_observables_match_dense_oracles() {
    assert!(oracles::simulator_oracle_error(50, 7) < 1e-12);
}

#[test]
fn norm_is_preserved_over_many_layers() {
    let inst = assign_weights(&enumerate_cubic_topologies(8).unwrap()[0], 4);
    let hp = build_problem_diagonal(&inst).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut psi = init_minus_state(8).unwrap();
    for _ in 0..1000 {
        apply_layer(&mut psi, &hp, LayerParams { dt: 0.01, beta: rng.gen_range(-3.0..3.0), b: 1.0 }).unwrap();
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn observables_are_covariant_under_relabeling() {
    let inst = assign_weights(&enumerate_cubic_topologies(6).unwrap()[1], 17);
    let perm = common::permutation(6, 2);
    let relabeled = inst.graph().relabel(&perm);
    let (hp, hq) = (build_problem_diagonal(&inst).unwrap(), build_problem_diagonal(&relabeled).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi = random_state(6, &mut rng);
    // Bit k of x moves to bit perm[k].
    let map = |x: usize| (0..6).filter(|&k| x >> k & 1 == 1).map(|k| 1 << perm[k]).sum::<usize>();
    let mut amps = vec![Complex64::new(0.0, 0.0); 64];
    for (x, a) in psi.amplitudes().iter().enumerate() {
        amps[map(x)] = *a;
    }
    let phi = StateVector::from_amplitudes(6, amps).unwrap();
    assert!((expect_problem(&psi, &hp).unwrap() - expect_problem(&phi, &hq).unwrap()).abs() < 1e-12);
    assert!((commutator_expectation(&psi, &hp).unwrap() - commutator_expectation(&phi, &hq).unwrap()).abs() < 1e-12);
    assert!(
        (success_probability(&psi, hp.ground_set()).unwrap() - success_probability(&phi, hq.ground_set()).unwrap())
            .abs()
            < 1e-12
    );
}
