//! Feedback loop, linear annealing and replay against dense oracles, plus the
//! unweighted-baseline transfer protocol.

mod common;

use common::dense;
use falqon_core::graph::{assign_weights, enumerate_cubic_topologies, WeightedGraph};
use falqon_core::schedules::{
    linear_schedule, replay_curve, run_falqon, unweighted_baseline, CurveSource, ParameterCurve, TRAJECTORY_CSV_HEADER,
};

fn path4() -> WeightedGraph {
    WeightedGraph::new(4, [(0, 1, 0.7), (1, 2, 1.9), (2, 3, 1.2), (0, 3, 0.4), (0, 2, 1.1)]).unwrap()
}

#[test]
fn feedback_loop_matches_dense_simulation() {
    let g = path4();
    let (curve, traj) = run_falqon(&g, 0.05, 60).unwrap();
    let (betas, energies) = dense::falqon(&g, 0.05, 60);
    for (a, b) in curve.betas().iter().zip(&betas) {
        assert!((a - b).abs() < 1e-11, "{a} vs {b}");
    }
    for (a, b) in traj.energies().iter().zip(&energies) {
        assert!((a - b).abs() < 1e-11);
    }
    assert_eq!(curve.betas()[0], 0.0);
}

#[test]
fn linear_schedule_matches_dense_product() {
    let g = WeightedGraph::new(3, [(0, 1, 1.3), (1, 2, 0.6)]).unwrap();
    let schedule = linear_schedule(0.1, 10).unwrap();
    let traj = replay_curve(&g, &schedule).unwrap();
    let (hp, hd) = (dense::problem_matrix(&g), dense::driver_matrix(3));
    let mut psi = dense::minus_state(3);
    for (j, &(a, b)) in schedule.pairs().iter().enumerate() {
        psi = dense::layer(&hd, &hp, 0.1, a, b) * psi;
        assert!((traj.records[j + 1].energy - dense::expectation(&psi, &hp).re).abs() < 1e-12);
    }
    assert_eq!(schedule.pairs()[9], (0.0, 1.0));
    assert_eq!(schedule.pairs()[4], (0.5, 0.5));
}

#[test]
fn descent_and_ratio_monotonicity_at_nominal_step() {
    let inst = assign_weights(&enumerate_cubic_topologies(6).unwrap()[0], 12);
    let (curve, traj) = run_falqon(&inst, 0.01, 1001).unwrap();
    assert_eq!(curve.source(), CurveSource::Falqon);
    for w in traj.records.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-9);
        assert!(w[1].approx_ratio >= w[0].approx_ratio - 1e-9);
    }
    for (j, r) in traj.records.iter().enumerate().skip(1) {
        // beta_{j+1} = -A_j as recorded
        if j < 1001 {
            assert_eq!(curve.betas()[j], -r.feedback.unwrap());
        }
    }
}

#[test]
fn zero_curve_only_adds_phases() {
    let inst = assign_weights(&enumerate_cubic_topologies(6).unwrap()[1], 3);
    let zero = ParameterCurve::new(0.01, vec![0.0; 50], CurveSource::External).unwrap();
    let traj = replay_curve(&inst, &zero).unwrap();
    let e0 = traj.records[0].energy;
    assert!(traj.records.iter().all(|r| (r.energy - e0).abs() < 1e-12));
}

#[test]
fn near_unit_weights_make_the_baseline_close() {
    let topo = &enumerate_cubic_topologies(8).unwrap()[2];
    let near = topo.reweighted(&vec![1.01; 12], 0).unwrap();
    let spread = assign_weights(topo, 77);
    let mean_dev = |inst: &falqon_core::graph::GraphInstance| {
        let (reference, _) = run_falqon(inst, 0.01, 300).unwrap();
        let base = unweighted_baseline(inst, 0.01, 300).unwrap();
        reference.betas().iter().zip(base.betas()).map(|(a, b)| (a - b).abs()).sum::<f64>() / 300.0
    };
    assert!(mean_dev(&near) < 0.2 * mean_dev(&spread));
}

#[test]
fn baseline_is_falqon_of_the_stripped_instance() {
    let inst = assign_weights(&enumerate_cubic_topologies(6).unwrap()[0], 5);
    let base = unweighted_baseline(&inst, 0.01, 200).unwrap();
    let (stripped, _) = run_falqon(&inst.strip_weights(), 0.01, 200).unwrap();
    assert_eq!(base.betas(), stripped.betas());
    assert_eq!(base.source(), CurveSource::UnweightedBaseline);
    // Transfer protocol: the baseline replays on the weighted instance.
    let traj = replay_curve(&inst, &base).unwrap();
    assert_eq!(traj.ell(), 200);
    assert!(traj.records.iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r.approx_ratio)));
}

#[test]
fn curve_file_and_trajectory_csv_formats() {
    let inst = assign_weights(&enumerate_cubic_topologies(4).unwrap()[0], 1);
    let (curve, traj) = run_falqon(&inst, 0.01, 5).unwrap();
    let text = curve.to_text(&["note".to_string()]);
    assert!(text.starts_with("# dt=0.010000000000000000 ell=5 source=falqon\n# note\n"));
    assert_eq!(ParameterCurve::from_text(&text).unwrap(), curve);
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRAJECTORY_CSV_HEADER);
    assert_eq!(lines.count(), 6);
}

#[test]
fn replay_is_bitwise_deterministic() {
    let inst = assign_weights(&enumerate_cubic_topologies(8).unwrap()[4], 2);
    let (curve, _) = run_falqon(&inst, 0.01, 100).unwrap();
    assert_eq!(replay_curve(&inst, &curve).unwrap(), replay_curve(&inst, &curve).unwrap());
}
