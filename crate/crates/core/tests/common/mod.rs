//! Helpers shared by the integration tests: golden files and dense oracles.
#![allow(dead_code)]

pub mod dense;
pub mod oracles;

use std::path::PathBuf;

use falqon_core::fmt::sig17;
use falqon_core::graph::{assign_weights, enumerate_cubic_topologies, GraphInstance};

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

/// Compares `values` against a stored snapshot, or rewrites the snapshot when
/// `FALQON_BLESS` is set in the environment.
pub fn check_golden(name: &str, values: &[f64], tol: f64) {
    let path = golden_path(name);
    if std::env::var_os("FALQON_BLESS").is_some() {
        let text: String = values.iter().map(|v| sig17(*v) + "\n").collect();
        std::fs::write(&path, text).expect("write golden file");
        return;
    }
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {} ({e}); rerun with FALQON_BLESS=1", path.display()));
    let stored: Vec<f64> = text.lines().map(|l| l.trim().parse().expect("golden value")).collect();
    assert_eq!(stored.len(), values.len(), "golden {name}: length");
    for (j, (a, b)) in stored.iter().zip(values).enumerate() {
        assert!((a - b).abs() <= tol, "golden {name}[{j}]: stored {a} vs computed {b}");
    }
}

/// The `index`-th topology on `n` vertices with weights drawn from `seed`.
pub fn weighted_instance(n: usize, index: usize, seed: u64) -> GraphInstance {
    let topologies = enumerate_cubic_topologies(n).expect("enumeration");
    assign_weights(&topologies[index], seed)
}

/// A random permutation of `0..n` from a small deterministic generator.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    perm
}

/// Worst relative error between reverse-mode gradients of the full student
/// loss and central finite differences (step `1e-6`) over `coords` sampled
/// coordinates. Relative errors use `max(|analytic|, |numeric|, 1e-2)` as the
/// denominator so that coordinates with vanishing gradients are compared
/// absolutely.
pub fn student_gradient_check(seed: u64, coords: usize) -> f64 {
    use falqon_core::model::{GraphTensors, ModelConfig, Student};
    use falqon_core::training::{distill_loss, student_loss_and_grad, LossWeights};
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inst = weighted_instance(6, 1, seed);
    let graph = GraphTensors::new(&inst).expect("graph tensors");
    let ell = 32;
    let teacher_curve: Vec<f64> = (0..ell).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let scalars: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = LossWeights::NOMINAL;
    let (student, params) = Student::new(ModelConfig::reduced(8, ell), seed).expect("student");
    let (_, grads) = student_loss_and_grad(&student, &params, &graph, &teacher_curve, &scalars, &w).expect("gradients");

    let loss_at = |store: &falqon_core::params::ParamStore| {
        let pred = student.predict(store, &graph).expect("prediction");
        distill_loss(&pred.values, &teacher_curve, pred.aux_scalars.as_deref().expect("aux scalars"), &scalars, &w)
            .expect("loss")
            .total
    };
    let ids: Vec<_> = params.ids().collect();
    let total = params.num_scalars();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..coords {
        // Uniform over all scalar coordinates.
        let mut flat = rng.gen_range(0..total);
        let id = *ids
            .iter()
            .find(|&&id| {
                let len = params.get(id).len();
                if flat < len {
                    true
                } else {
                    flat -= len;
                    false
                }
            })
            .expect("coordinate in range");
        let mut plus = params.clone();
        plus.get_mut(id).data_mut()[flat] += h;
        let mut minus = params.clone();
        minus.get_mut(id).data_mut()[flat] -= h;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
        let analytic = grads.get(id).data()[flat];
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-2);
        worst = worst.max(rel);
    }
    worst
}
