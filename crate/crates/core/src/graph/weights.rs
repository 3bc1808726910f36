//! Edge-weight sampling.
//!
//! Streams come from ChaCha8, a counter-based generator: a 64-bit seed fixes
//! the key, so every weight vector is reproducible from `(topology, seed)`.
//! Per-record seeds are derived from a master seed with SplitMix64.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GraphInstance;

/// Upper end of the nominal weight interval `(0, WEIGHT_MAX]`.
pub const WEIGHT_MAX: f64 = 2.0;

/// Draws one weight per edge (in stored edge order) uniformly from `(0, 2]`.
///
/// A unit draw `u` in `[0, 1)` maps to `2 (1 - u)`, so zero is excluded.
pub fn assign_weights_with<R: Rng + ?Sized>(topology: &GraphInstance, rng: &mut R) -> GraphInstance {
    let weights: Vec<f64> = (0..topology.num_edges())
        .map(|_| WEIGHT_MAX * (1.0 - rng.gen::<f64>()))
        .collect();
    topology.reweighted(&weights, topology.seed()).expect("sampled weights are positive")
}

pub fn assign_weights(topology: &GraphInstance, seed: u64) -> GraphInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = assign_weights_with(topology, &mut rng);
    inst.reweighted(&inst.weights(), seed).expect("weights already validated")
}

/// SplitMix64 finalizer applied to `master` mixed with each component of `path`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample_cubic_topology;
    use rand::RngCore;

    /// Always yields the bit pattern that `gen::<f64>()` maps to exactly 0.5.
    struct Half;

    impl RngCore for Half {
        fn next_u32(&mut self) -> u32 {
            (self.next_u64() >> 32) as u32
        }
        fn next_u64(&mut self) -> u64 {
            1 << 63
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0)
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    #[test]
    fn midpoint_draw_gives_unit_weights() {
        let topo = sample_cubic_topology(8, 1).unwrap();
        let g = assign_weights_with(&topo, &mut Half);
        assert!(g.edges().iter().all(|e| e.w == 1.0));
    }

    #[test]
    fn weights_in_range_and_seeded() {
        let topo = sample_cubic_topology(12, 5).unwrap();
        for seed in 0..50 {
            let g = assign_weights(&topo, seed);
            assert!(g.edges().iter().all(|e| e.w > 0.0 && e.w <= WEIGHT_MAX));
            assert_eq!(g.seed(), seed);
            assert_eq!(g, assign_weights(&topo, seed));
        }
        assert_ne!(assign_weights(&topo, 1).weights(), assign_weights(&topo, 2).weights());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, &[8, 0, 1]);
        assert_eq!(a, derive_seed(7, &[8, 0, 1]));
        assert_ne!(a, derive_seed(7, &[8, 1, 0]));
        assert_ne!(a, derive_seed(8, &[8, 0, 1]));
    }
}
