//! graph6 encoding of unweighted topologies, used as the topology identifier.

use super::WeightedGraph;
use crate::error::{Error, Result};

pub fn to_graph6(g: &WeightedGraph) -> String {
    let n = g.n();
    let mut out = Vec::new();
    if n < 63 {
        out.push(n as u8 + 63);
    } else {
        out.push(126);
        for shift in [12, 6, 0] {
            out.push(((n >> shift) & 0x3f) as u8 + 63);
        }
    }
    let mut adj = vec![false; n * n];
    for e in g.edges() {
        adj[e.u * n + e.v] = true;
        adj[e.v * n + e.u] = true;
    }
    let mut bits = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 1..n {
        for i in 0..j {
            bits.push(adj[i * n + j]);
        }
    }
    for chunk in bits.chunks(6) {
        let mut byte = 0u8;
        for (k, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 1 << (5 - k);
            }
        }
        out.push(byte + 63);
    }
    String::from_utf8(out).expect("graph6 is ASCII")
}

pub fn from_graph6(s: &str) -> Result<WeightedGraph> {
    let bytes = s.trim().as_bytes();
    let bad = || Error::parse(format!("malformed graph6 string {s:?}"));
    if bytes.is_empty() || bytes.iter().any(|&b| !(63..=126).contains(&b)) {
        return Err(bad());
    }
    let (n, body) = if bytes[0] != 126 {
        ((bytes[0] - 63) as usize, &bytes[1..])
    } else {
        if bytes.len() < 4 {
            return Err(bad());
        }
        let n = bytes[1..4].iter().fold(0usize, |acc, &b| (acc << 6) | (b - 63) as usize);
        (n, &bytes[4..])
    };
    let nbits = n * n.saturating_sub(1) / 2;
    if body.len() != nbits.div_ceil(6) {
        return Err(bad());
    }
    let bit = |k: usize| (body[k / 6] - 63) >> (5 - k % 6) & 1 == 1;
    let mut edges = Vec::new();
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bit(k) {
                edges.push((i, j, 1.0));
            }
            k += 1;
        }
    }
    WeightedGraph::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_is_c_tilde() {
        let k4 = WeightedGraph::new(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(to_graph6(&k4), "C~");
        assert_eq!(from_graph6("C~").unwrap(), k4);
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_graph6("").is_err());
        assert!(from_graph6("C~~").is_err());
        assert!(from_graph6("C\u{7f}").is_err());
    }
}
