//! Randomized sweeps of library kernels against direct oracles, returning the
//! worst deviation so callers choose the tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use falqon_core::graph::WeightedGraph;
use falqon_core::hamiltonian::build_problem_diagonal;
use falqon_core::simulator::{
    apply_driver_rotations, apply_layer, apply_problem_phase, commutator_expectation, expect_problem,
    success_probability, LayerParams, StateVector,
};
use falqon_core::training::{distill_loss, finite_diff1, finite_diff2, spectral_penalty, total_variation, LossWeights};

use super::dense;

pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let mut amps: Vec<Complex64> =
        (0..1 << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(n, amps).expect("state")
}

/// A random simple graph on `n` vertices with weights in `(0, 2]`.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> WeightedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.7) {
                edges.push((u, v, 2.0 * (1.0 - rng.gen::<f64>())));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1.0));
    }
    WeightedGraph::new(n, edges).expect("graph")
}

pub fn to_dense(s: &StateVector) -> dense::CVec {
    dense::CVec::from_column_slice(s.amplitudes())
}

pub fn max_dev(a: &StateVector, b: &dense::CVec) -> f64 {
    a.amplitudes().iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Worst absolute deviation of the phase, driver and full-layer factors and of
/// `⟨H_p⟩`, `A` and `φ` from dense-matrix oracles over `trials` random
/// (state, instance) pairs with 2 to 4 qubits.
pub fn simulator_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let n = 2 + trial % 3;
        let g = random_graph(n, &mut rng);
        let hp = build_problem_diagonal(&g).expect("diagonal");
        let (dense_hp, dense_hd) = (dense::problem_matrix(&g), dense::driver_matrix(n));
        let psi = random_state(n, &mut rng);
        let (dt, beta, b) = (rng.gen_range(0.01..0.5), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..1.5));
        let v = to_dense(&psi);

        let mut s = psi.clone();
        apply_problem_phase(&mut s, &hp, dt, b).expect("phase");
        worst = worst.max(max_dev(&s, &(dense::evolve(&dense_hp, dt * b) * &v)));

        let mut s = psi.clone();
        apply_driver_rotations(&mut s, dt, beta).expect("driver");
        worst = worst.max(max_dev(&s, &(dense::evolve(&dense_hd, dt * beta) * &v)));

        let mut s = psi.clone();
        apply_layer(&mut s, &hp, LayerParams { dt, beta, b }).expect("layer");
        worst = worst.max(max_dev(&s, &(dense::layer(&dense_hd, &dense_hp, dt, beta, b) * &v)));

        let energy = dense::expectation(&v, &dense_hp).re;
        worst = worst.max((expect_problem(&psi, &hp).expect("energy") - energy).abs());
        let a = dense::commutator(&v, &dense_hd, &dense_hp);
        worst = worst.max((commutator_expectation(&psi, &hp).expect("feedback") - a).abs());
        let projector: f64 = hp.ground_set().iter().map(|&gi| v[gi].norm_sqr()).sum();
        worst = worst.max((success_probability(&psi, hp.ground_set()).expect("success") - projector).abs());
    }
    worst
}

/// `Σ_m ω_m⁴ |Σ_j β_j e^{-2πimj/ℓ}|²` by direct summation, with the frequency
/// of bin `m` taken as the smaller of `m` and its alias `ℓ - m`.
pub fn direct_spectral(curve: &[f64]) -> f64 {
    let ell = curve.len();
    (0..ell)
        .map(|m| {
            let f: Complex64 =
                curve.iter().enumerate().map(|(j, &b)| b * Complex64::cis(-2.0 * PI * (m * j) as f64 / ell as f64)).sum();
            let k = if 2 * m <= ell { m } else { ell - m };
            (2.0 * PI * k as f64 / ell as f64).powi(4) * f.norm_sqr()
        })
        .sum()
}

pub fn random_curve(rng: &mut ChaCha8Rng, ell: usize) -> Vec<f64> {
    (0..ell).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Term-by-term evaluation written without the library's helpers.
pub fn direct_terms(pred: &[f64], target: &[f64]) -> [f64; 5] {
    let l = pred.len();
    let r: Vec<f64> = (0..l).map(|j| pred[j] - target[j]).collect();
    let level = r.iter().map(|x| x * x).sum();
    let slope = (0..l - 1).map(|j| (r[j + 1] - r[j]).powi(2)).sum();
    let curvature = (1..l - 1).map(|j| (r[j + 1] - 2.0 * r[j] + r[j - 1]).powi(2)).sum();
    let tv = (0..l - 1).map(|j| (pred[j + 1] - pred[j]).abs()).sum();
    [level, slope, curvature, direct_spectral(pred), tv]
}

pub fn weights_array(w: &LossWeights) -> [f64; 6] {
    [w.level, w.slope, w.curvature, w.spectral, w.tv, w.scalar]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Over `curves` random curves of random length in `[3, 1001]`: the worst
/// relative deviation of the spectral penalty, TV and both finite differences
/// from direct oracles, and the worst relative deviation of the distillation
/// loss total from the weighted sum of its terms.
pub fn loss_kernel_oracle_errors(curves: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = LossWeights::NOMINAL;
    let (mut kernels, mut additivity) = (0.0f64, 0.0f64);
    for _ in 0..curves {
        let ell = rng.gen_range(3..=1001);
        let c = random_curve(&mut rng, ell);
        kernels = kernels.max(rel(spectral_penalty(&c), direct_spectral(&c)));
        let tv: f64 = c.windows(2).map(|p| (p[1] - p[0]).abs()).sum();
        kernels = kernels.max(rel(total_variation(&c), tv));
        for (j, d) in finite_diff1(&c).expect("d1").iter().enumerate() {
            kernels = kernels.max(rel(*d, c[j + 1] - c[j]));
        }
        for (j, d) in finite_diff2(&c).expect("d2").iter().enumerate() {
            kernels = kernels.max(rel(*d, c[j + 2] - 2.0 * c[j + 1] + c[j]));
        }

        let target = random_curve(&mut rng, ell);
        let (s_hat, s) = (random_curve(&mut rng, 6), random_curve(&mut rng, 6));
        let loss = distill_loss(&c, &target, &s_hat, &s, &w).expect("loss");
        let sum: f64 = weights_array(&w).iter().zip(loss.terms()).map(|(k, t)| k * t).sum();
        additivity = additivity.max(rel(loss.total, sum));
    }
    (kernels, additivity)
}
