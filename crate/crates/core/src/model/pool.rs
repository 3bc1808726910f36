//! Graph-level readout: mean, sum, max, gated attention and Set2Set pooling.

use crate::error::Result;
use crate::params::{Initializer, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

use super::{GraphTensors, Linear, ModelConfig};

/// Parameters of the learned pooling heads.
#[derive(Debug, Clone)]
pub struct Pooling {
    hidden: usize,
    steps: usize,
    gate: Linear,
    transform: Linear,
    lstm_input: Linear,
    lstm_hidden: Linear,
}

impl Pooling {
    pub(crate) fn new(store: &mut ParamStore, init: &mut Initializer, prefix: &str, cfg: &ModelConfig) -> Self {
        let d = cfg.hidden;
        Self {
            hidden: d,
            steps: cfg.set2set_steps,
            gate: Linear::new(store, init, &format!("{prefix}.gate"), d, 1),
            transform: Linear::new(store, init, &format!("{prefix}.transform"), d, d),
            lstm_input: Linear::new(store, init, &format!("{prefix}.lstm_input"), 2 * d, 4 * d),
            lstm_hidden: Linear::without_bias(store, init, &format!("{prefix}.lstm_hidden"), d, 4 * d),
        }
    }

    /// The `1 x 6d` summary `[mean, sum, max, attention, set2set]` of node embeddings `h`.
    pub fn forward(&self, tape: &mut Tape, g: &GraphTensors, h: Var) -> Result<Var> {
        let d = self.hidden;
        let whole = g.whole();
        let sum = tape.segment_sum(h, whole.clone(), 1)?;
        let mean = tape.scale(sum, 1.0 / g.n() as f64);
        let max = tape.segment_max(h, whole.clone(), 1)?;

        let gate = self.gate.forward(tape, h)?;
        let alpha = tape.segment_softmax(gate, whole.clone(), 1)?;
        let alpha = tape.repeat_cols(alpha, d);
        let t = self.transform.forward(tape, h)?;
        let weighted = tape.mul(alpha, t)?;
        let attention = tape.segment_sum(weighted, whole.clone(), 1)?;

        let mut q_star = tape.constant(Tensor::zeros(1, 2 * d));
        let mut hid = tape.constant(Tensor::zeros(1, d));
        let mut cell = tape.constant(Tensor::zeros(1, d));
        for _ in 0..self.steps {
            let a = self.lstm_input.forward(tape, q_star)?;
            let b = self.lstm_hidden.forward(tape, hid)?;
            let gates = tape.add(a, b)?;
            let i = tape.slice_cols(gates, 0, d)?;
            let i = tape.sigmoid(i);
            let f = tape.slice_cols(gates, d, d)?;
            let f = tape.sigmoid(f);
            let c = tape.slice_cols(gates, 2 * d, d)?;
            let c = tape.tanh(c);
            let o = tape.slice_cols(gates, 3 * d, d)?;
            let o = tape.sigmoid(o);
            let keep = tape.mul(f, cell)?;
            let write = tape.mul(i, c)?;
            cell = tape.add(keep, write)?;
            let tc = tape.tanh(cell);
            hid = tape.mul(o, tc)?;

            let qt = tape.transpose(hid);
            let e = tape.matmul(h, qt)?;
            let a = tape.segment_softmax(e, whole.clone(), 1)?;
            let a = tape.repeat_cols(a, d);
            let r = tape.mul(a, h)?;
            let r = tape.segment_sum(r, whole.clone(), 1)?;
            q_star = tape.concat_cols(&[hid, r])?;
        }
        tape.concat_cols(&[mean, sum, max, attention, q_star])
    }
}
