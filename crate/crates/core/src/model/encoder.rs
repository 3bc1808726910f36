//! Message-passing node encoders.

use crate::error::Result;
use crate::params::{Initializer, ParamId, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

use super::{GraphTensors, Linear, ModelConfig};

/// Message-passing flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    /// `h' = MLP((1 + ε) h_v + Σ_u relu(h_u + embed(w_uv)))`.
    Isomorphism,
    /// Multi-head attention with edge embeddings added to keys and values.
    Attention,
}

#[derive(Debug, Clone)]
enum Block {
    Isomorphism { edge: Linear, eps: ParamId, mlp_in: Linear, mlp_out: Linear },
    Attention { query: Linear, key: Linear, value: Linear, edge: Linear, out: Linear, skip: Linear },
}

/// Input lift plus a stack of message-passing blocks.
#[derive(Debug, Clone)]
pub struct Encoder {
    kind: EncoderKind,
    hidden: usize,
    heads: usize,
    input: Linear,
    blocks: Vec<Block>,
}

impl Encoder {
    pub(crate) fn new(store: &mut ParamStore, init: &mut Initializer, prefix: &str, kind: EncoderKind, cfg: &ModelConfig) -> Self {
        let d = cfg.hidden;
        let input = Linear::new(store, init, &format!("{prefix}.input"), 1, d);
        let blocks = (0..cfg.layers)
            .map(|l| {
                let p = format!("{prefix}.block{l}");
                match kind {
                    EncoderKind::Isomorphism => Block::Isomorphism {
                        edge: Linear::new(store, init, &format!("{p}.edge"), 1, d),
                        eps: store.insert(format!("{p}.eps"), Tensor::zeros(1, 1)),
                        mlp_in: Linear::new(store, init, &format!("{p}.mlp_in"), d, d),
                        mlp_out: Linear::new(store, init, &format!("{p}.mlp_out"), d, d),
                    },
                    EncoderKind::Attention => Block::Attention {
                        query: Linear::new(store, init, &format!("{p}.query"), d, d),
                        key: Linear::new(store, init, &format!("{p}.key"), d, d),
                        value: Linear::new(store, init, &format!("{p}.value"), d, d),
                        edge: Linear::without_bias(store, init, &format!("{p}.edge"), 1, d),
                        out: Linear::new(store, init, &format!("{p}.out"), d, d),
                        skip: Linear::new(store, init, &format!("{p}.skip"), d, d),
                    },
                }
            })
            .collect();
        Self { kind, hidden: d, heads: cfg.heads, input, blocks }
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    /// Node embeddings (`n x d`) for the constant unit node feature.
    pub fn forward(&self, tape: &mut Tape, g: &GraphTensors) -> Result<Var> {
        let ones = tape.constant(Tensor::filled(g.n(), 1, 1.0));
        let mut h = self.input.forward(tape, ones)?;
        let w = tape.constant(g.edge_weight().clone());
        for (l, block) in self.blocks.iter().enumerate() {
            h = self.block(tape, block, g, h, w)?;
            if l + 1 < self.blocks.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    fn block(&self, tape: &mut Tape, block: &Block, g: &GraphTensors, h: Var, w: Var) -> Result<Var> {
        match block {
            Block::Isomorphism { edge, eps, mlp_in, mlp_out } => {
                let e = edge.forward(tape, w)?;
                let h_src = tape.gather_rows(h, g.src())?;
                let m = tape.add(h_src, e)?;
                let m = tape.relu(m);
                let agg = tape.segment_sum(m, g.dst(), g.n())?;
                let eps = tape.param(*eps);
                let eh = tape.mul_scalar(h, eps)?;
                let pre = tape.add(h, eh)?;
                let pre = tape.add(pre, agg)?;
                let x = mlp_in.forward(tape, pre)?;
                let x = tape.relu(x);
                mlp_out.forward(tape, x)
            }
            Block::Attention { query, key, value, edge, out, skip } => {
                let head_dim = self.hidden / self.heads;
                let e = edge.forward(tape, w)?;
                let q = query.forward(tape, h)?;
                let k = key.forward(tape, h)?;
                let v = value.forward(tape, h)?;
                let q_dst = tape.gather_rows(q, g.dst())?;
                let k_src = tape.gather_rows(k, g.src())?;
                let k_src = tape.add(k_src, e)?;
                let v_src = tape.gather_rows(v, g.src())?;
                let v_src = tape.add(v_src, e)?;
                let qk = tape.mul(q_dst, k_src)?;
                let scores = tape.sum_col_blocks(qk, head_dim)?;
                let scores = tape.scale(scores, 1.0 / (head_dim as f64).sqrt());
                let alpha = tape.segment_softmax(scores, g.dst(), g.n())?;
                let alpha = tape.repeat_cols(alpha, head_dim);
                let msg = tape.mul(alpha, v_src)?;
                let agg = tape.segment_sum(msg, g.dst(), g.n())?;
                let mixed = out.forward(tape, agg)?;
                let res = skip.forward(tape, h)?;
                tape.add(mixed, res)
            }
        }
    }
}
