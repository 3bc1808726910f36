//! Canonical vertex labeling by colour refinement and individualization.
//!
//! The search explores every branch of the individualization tree (no
//! automorphism pruning) and keeps the leaf whose relabeled edge list is
//! lexicographically smallest. Edge weights only break ties between leaves
//! with identical topology, so the unweighted part of the certificate is a
//! topology invariant on its own.

use std::cmp::Ordering;

use super::WeightedGraph;

/// Refines `colors` (cell ranks `0..k`) to the coarsest equitable partition
/// finer than the input. Cell order is derived only from colours, never from
/// vertex indices.
fn refine(adj: &[Vec<usize>], colors: &mut [u32]) {
    let n = colors.len();
    let mut cells = count_cells(colors);
    let mut sigs: Vec<(u32, Vec<u32>)> = vec![(0, Vec::new()); n];
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        for v in 0..n {
            let (c, nb) = &mut sigs[v];
            *c = colors[v];
            nb.clear();
            nb.extend(adj[v].iter().map(|&u| colors[u]));
            nb.sort_unstable();
        }
        order.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]));
        let mut rank = 0u32;
        for i in 0..n {
            if i > 0 && sigs[order[i]] != sigs[order[i - 1]] {
                rank += 1;
            }
            colors[order[i]] = rank;
        }
        let new_cells = rank as usize + 1;
        if new_cells == cells {
            return;
        }
        cells = new_cells;
    }
}

fn count_cells(colors: &[u32]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// Splits `v` out of its cell, placing it first.
fn individualize(colors: &[u32], v: usize) -> Vec<u32> {
    let c = colors[v];
    colors
        .iter()
        .enumerate()
        .map(|(u, &cu)| {
            if u == v || cu < c {
                cu
            } else {
                cu + 1
            }
        })
        .collect()
}

struct Leaf {
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    labels: Vec<usize>,
}

fn cmp_weights(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn relabeled(g: &WeightedGraph, labels: &[usize]) -> (Vec<(usize, usize)>, Vec<f64>) {
    let mut e: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (labels[e.u], labels[e.v]);
            (a.min(b), a.max(b), e.w)
        })
        .collect();
    e.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    (e.iter().map(|x| (x.0, x.1)).collect(), e.iter().map(|x| x.2).collect())
}

fn search(g: &WeightedGraph, adj: &[Vec<usize>], colors: Vec<u32>, best: &mut Option<Leaf>) {
    let n = colors.len();
    if count_cells(&colors) == n {
        let labels: Vec<usize> = colors.iter().map(|&c| c as usize).collect();
        let (edges, weights) = relabeled(g, &labels);
        let better = match best {
            None => true,
            Some(b) => match edges.cmp(&b.edges) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => cmp_weights(&weights, &b.weights) == Ordering::Less,
            },
        };
        if better {
            *best = Some(Leaf { edges, weights, labels });
        }
        return;
    }
    // Target cell: the lowest-ranked cell among the smallest non-singleton cells.
    let mut sizes = vec![0usize; n];
    for &c in &colors {
        sizes[c as usize] += 1;
    }
    let target = (0..n)
        .filter(|&c| sizes[c] > 1)
        .min_by_key(|&c| (sizes[c], c))
        .expect("non-discrete partition has a non-singleton cell") as u32;
    for v in 0..n {
        if colors[v] == target {
            let mut child = individualize(&colors, v);
            refine(adj, &mut child);
            search(g, adj, child, best);
        }
    }
}

/// Returns `perm` with `perm[v]` the canonical label of vertex `v`.
///
/// Isomorphic graphs (with weights carried along the isomorphism) produce
/// identical edge lists after relabeling by their respective permutations.
/// When the input is already canonical the identity is returned.
pub fn canonical_permutation(g: &WeightedGraph) -> Vec<usize> {
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    let adj = g.adjacency();
    // Initial partition by degree, which is a relabeling invariant.
    let mut colors: Vec<u32> = adj.iter().map(|a| a.len() as u32).collect();
    let mut distinct = colors.clone();
    distinct.sort_unstable();
    distinct.dedup();
    for c in colors.iter_mut() {
        *c = distinct.binary_search(c).unwrap() as u32;
    }
    refine(&adj, &mut colors);
    let mut best = None;
    search(g, &adj, colors, &mut best);
    let leaf = best.expect("search always reaches a leaf");

    let identity: Vec<usize> = (0..n).collect();
    let (id_edges, id_weights) = relabeled(g, &identity);
    if id_edges == leaf.edges && cmp_weights(&id_weights, &leaf.weights) == Ordering::Equal {
        identity
    } else {
        leaf.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> WeightedGraph {
        let e = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)];
        WeightedGraph::new(8, e.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
    }

    #[test]
    fn refinement_splits_by_degree_neighbourhood() {
        // Path 0-1-2-3: endpoints vs inner vertices.
        let g = WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let adj = g.adjacency();
        let mut colors = vec![0; 4];
        refine(&adj, &mut colors);
        assert_eq!(colors[0], colors[3]);
        assert_eq!(colors[1], colors[2]);
        assert_ne!(colors[0], colors[1]);
    }

    #[test]
    fn relabelings_agree() {
        let g = cube();
        let perm = [3, 7, 0, 5, 1, 6, 2, 4];
        let h = g.relabel(&perm);
        let cg = g.relabel(&canonical_permutation(&g));
        let ch = h.relabel(&canonical_permutation(&h));
        assert_eq!(cg, ch);
    }

    #[test]
    fn canonical_is_fixed_point() {
        let g = cube();
        let c = g.relabel(&canonical_permutation(&g));
        let p = canonical_permutation(&c);
        assert_eq!(p, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn weights_break_ties() {
        // K4 with one heavy edge: all relabelings agree and the heavy edge lands last.
        let base = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for heavy in 0..6 {
            let g = WeightedGraph::new(
                4,
                base.iter().enumerate().map(|(i, &(u, v))| (u, v, if i == heavy { 2.0 } else { 1.0 })),
            )
            .unwrap();
            let c = g.relabel(&canonical_permutation(&g));
            assert_eq!(c.edges()[5].w, 2.0);
        }
    }
}
