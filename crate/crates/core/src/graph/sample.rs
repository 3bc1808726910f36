//! Random connected cubic graphs from the pairing (configuration) model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{canonical_permutation, GraphInstance, WeightedGraph};
use crate::error::{Error, Result};

/// Pairs `3n` half-edges uniformly at random and rejects pairings with loops,
/// parallel edges or more than one component. The result is canonically
/// labeled and unit-weighted; `seed` is recorded on the instance.
pub fn sample_cubic_topology(n: usize, seed: u64) -> Result<GraphInstance> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::invalid(format!("cubic graphs need even n >= 4, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
    loop {
        points.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = points
            .chunks_exact(2)
            .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
            .collect();
        if edges.iter().any(|&(u, v)| u == v) {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let g = WeightedGraph::new(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))?;
        if !g.is_connected() {
            continue;
        }
        let canon = g.relabel(&canonical_permutation(&g));
        return GraphInstance::new(canon, seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_graphs_are_cubic_and_connected() {
        for (n, seed) in [(14, 1), (16, 2), (18, 3), (20, 7)] {
            let g = sample_cubic_topology(n, seed).unwrap();
            assert_eq!(g.num_edges(), 3 * n / 2);
            assert!(g.is_cubic() && g.is_connected());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(sample_cubic_topology(20, 7).unwrap(), sample_cubic_topology(20, 7).unwrap());
    }

    #[test]
    fn four_vertices_is_k4() {
        for seed in 0..5 {
            let g = sample_cubic_topology(4, seed).unwrap();
            assert_eq!(g.num_edges(), 6);
            assert_eq!(g.topology_id(), "C~");
        }
    }

    #[test]
    fn rejects_odd_n() {
        assert!(sample_cubic_topology(7, 0).is_err());
    }
}
