//! Exhaustive generation of connected cubic graphs by isomorph rejection.
//!
//! Candidates are built in breadth-first labeled form: vertex 0 is the root,
//! vertices are processed in label order and each one fills its free degree
//! slots with already-discovered vertices or freshly numbered ones. Every
//! connected cubic graph has such a labeling; duplicates are removed by
//! canonical form.

use std::collections::HashSet;

use super::{canonical_permutation, GraphInstance, WeightedGraph};
use crate::error::{Error, Result};

/// Largest vertex count accepted by [`enumerate_cubic_topologies`].
pub const MAX_EXHAUSTIVE_N: usize = 12;

struct Generator {
    n: usize,
    adj: Vec<Vec<usize>>,
    next: usize,
    seen: HashSet<Vec<(usize, usize)>>,
    found: Vec<WeightedGraph>,
}

impl Generator {
    fn leaf(&mut self) {
        let mut edges = Vec::with_capacity(3 * self.n / 2);
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    edges.push((u, v, 1.0));
                }
            }
        }
        let g = WeightedGraph::new(self.n, edges).expect("generator builds simple graphs");
        let canon = g.relabel(&canonical_permutation(&g));
        let key: Vec<(usize, usize)> = canon.edges().iter().map(|e| (e.u, e.v)).collect();
        if self.seen.insert(key) {
            self.found.push(canon);
        }
    }

    fn connect(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    fn disconnect(&mut self, a: usize, b: usize) {
        self.adj[a].pop();
        self.adj[b].pop();
    }

    fn visit(&mut self, v: usize) {
        if v == self.n {
            if self.next == self.n {
                self.leaf();
            }
            return;
        }
        if v >= self.next {
            // Vertex never reached from the root: disconnected.
            return;
        }
        let free = 3 - self.adj[v].len();
        let candidates: Vec<usize> = (v + 1..self.next)
            .filter(|&w| self.adj[w].len() < 3 && !self.adj[v].contains(&w))
            .collect();
        let max_new = free.min(self.n - self.next);
        for fresh in 0..=max_new {
            let reuse = free - fresh;
            if reuse > candidates.len() {
                continue;
            }
            let mut pick: Vec<usize> = (0..reuse).collect();
            loop {
                for &i in &pick {
                    self.connect(v, candidates[i]);
                }
                let start = self.next;
                for k in 0..fresh {
                    self.connect(v, start + k);
                }
                self.next += fresh;
                self.visit(v + 1);
                self.next -= fresh;
                for k in (0..fresh).rev() {
                    self.disconnect(v, start + k);
                }
                for &i in pick.iter().rev() {
                    self.disconnect(v, candidates[i]);
                }
                if !next_combination(&mut pick, candidates.len()) {
                    break;
                }
            }
        }
    }
}

/// Advances `pick` to the next k-combination of `0..m` in lexicographic order.
fn next_combination(pick: &mut [usize], m: usize) -> bool {
    let k = pick.len();
    for i in (0..k).rev() {
        if pick[i] < m - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All connected non-isomorphic cubic graphs on `n` vertices, canonically
/// labeled, unit-weighted, ordered by canonical edge list.
pub fn enumerate_cubic_topologies(n: usize) -> Result<Vec<GraphInstance>> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::invalid(format!("cubic graphs need even n >= 4, got {n}")));
    }
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Unsupported(format!(
            "exhaustive enumeration is limited to n <= {MAX_EXHAUSTIVE_N}; use the sampler for n = {n}"
        )));
    }
    let mut gen = Generator { n, adj: vec![Vec::with_capacity(3); n], next: 1, seen: HashSet::new(), found: Vec::new() };
    gen.visit(0);
    let mut found = gen.found;
    found.sort_by(|a, b| {
        let ka: Vec<_> = a.edges().iter().map(|e| (e.u, e.v)).collect();
        let kb: Vec<_> = b.edges().iter().map(|e| (e.u, e.v)).collect();
        ka.cmp(&kb)
    });
    found.into_iter().map(|g| GraphInstance::new(g, 0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations() {
        let mut p = vec![0, 1];
        let mut all = vec![p.clone()];
        while next_combination(&mut p, 4) {
            all.push(p.clone());
        }
        assert_eq!(all.len(), 6);
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 3));
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_cubic_topologies(4).unwrap().len(), 1);
        assert_eq!(enumerate_cubic_topologies(6).unwrap().len(), 2);
        assert_eq!(enumerate_cubic_topologies(8).unwrap().len(), 5);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(enumerate_cubic_topologies(5), Err(Error::InvalidArgument(_))));
        assert!(matches!(enumerate_cubic_topologies(2), Err(Error::InvalidArgument(_))));
        assert!(matches!(enumerate_cubic_topologies(14), Err(Error::Unsupported(_))));
    }
}
