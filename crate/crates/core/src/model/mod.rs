//! Graph-network surrogates that map a weighted cubic graph to a parameter curve.
//!
//! Both networks share the same skeleton: a constant node feature is lifted to
//! width `d`, refined by three message-passing blocks and summarized into one
//! graph vector `z` of width `6d` (mean, sum, max, gated attention, Set2Set).
//!
//! - The [`Teacher`] uses isomorphism-style blocks and a readout whose first
//!   stage is generated by a hypernetwork from the instance scalars.
//! - The [`Student`] uses multi-head attention blocks, predicts the scalars
//!   itself from `z` and needs nothing but the graph at inference time.

mod checkpoint;
mod encoder;
mod pool;
mod student;
mod teacher;

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::hamiltonian::SCALAR_DIM;
use crate::params::{Initializer, ParamId, ParamStore};
use crate::schedules::{CurveSource, ParameterCurve, NOMINAL_ELL};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, TensorEntry, CHECKPOINT_FORMAT};
pub use encoder::{Encoder, EncoderKind};
pub use pool::Pooling;
pub use student::{Student, StudentOutput};
pub use teacher::{Teacher, UNSTANDARDIZED_THRESHOLD};

/// Architecture hyperparameters shared by teacher and student.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Node embedding width `d`.
    pub hidden: usize,
    /// Hidden width of the teacher's hypernetwork.
    pub hyper_hidden: usize,
    /// Output curve length.
    pub ell: usize,
    /// Number of message-passing blocks.
    pub layers: usize,
    /// Attention heads in the student blocks; must divide `hidden`.
    pub heads: usize,
    /// Processing steps of the Set2Set readout.
    pub set2set_steps: usize,
    /// Number of graph-level scalars.
    pub scalar_dim: usize,
}

impl ModelConfig {
    pub fn nominal() -> Self {
        Self {
            hidden: 96,
            hyper_hidden: 224,
            ell: NOMINAL_ELL,
            layers: 3,
            heads: 4,
            set2set_steps: 3,
            scalar_dim: SCALAR_DIM,
        }
    }

    /// Nominal architecture with a different width and curve length.
    pub fn reduced(hidden: usize, ell: usize) -> Self {
        Self { hidden, ell, ..Self::nominal() }
    }

    /// Width of the pooled graph summary `z`.
    pub fn summary_dim(&self) -> usize {
        6 * self.hidden
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden", self.hidden),
            ("hyper_hidden", self.hyper_hidden),
            ("ell", self.ell),
            ("layers", self.layers),
            ("heads", self.heads),
            ("set2set_steps", self.set2set_steps),
            ("scalar_dim", self.scalar_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("model {name} must be positive")));
        }
        if self.hidden % self.heads != 0 {
            return Err(Error::invalid(format!(
                "hidden width {} is not divisible by {} heads",
                self.hidden, self.heads
            )));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::nominal()
    }
}

/// Index structure of one graph as consumed by the networks.
///
/// Every undirected edge contributes two directed messages.
#[derive(Debug, Clone)]
pub struct GraphTensors {
    n: usize,
    src: Rc<Vec<usize>>,
    dst: Rc<Vec<usize>>,
    edge_weight: Tensor,
    whole: Rc<Vec<usize>>,
}

impl GraphTensors {
    pub fn new(graph: &WeightedGraph) -> Result<Self> {
        if graph.n() == 0 {
            return Err(Error::invalid("graph has no vertices"));
        }
        let m = graph.num_edges();
        let (mut src, mut dst, mut w) = (Vec::with_capacity(2 * m), Vec::with_capacity(2 * m), Vec::with_capacity(2 * m));
        for e in graph.edges() {
            src.extend([e.u, e.v]);
            dst.extend([e.v, e.u]);
            w.extend([e.w, e.w]);
        }
        Ok(Self {
            n: graph.n(),
            src: Rc::new(src),
            dst: Rc::new(dst),
            edge_weight: Tensor::column(w),
            whole: Rc::new(vec![0; graph.n()]),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_messages(&self) -> usize {
        self.src.len()
    }

    pub(crate) fn src(&self) -> Rc<Vec<usize>> {
        self.src.clone()
    }

    pub(crate) fn dst(&self) -> Rc<Vec<usize>> {
        self.dst.clone()
    }

    pub(crate) fn edge_weight(&self) -> &Tensor {
        &self.edge_weight
    }

    /// Segment map sending every node to segment 0.
    pub(crate) fn whole(&self) -> Rc<Vec<usize>> {
        self.whole.clone()
    }
}

/// Affine map `x W + b` on row vectors.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

impl Linear {
    pub(crate) fn new(store: &mut ParamStore, init: &mut Initializer, name: &str, fan_in: usize, fan_out: usize) -> Self {
        let weight = store.insert(format!("{name}.weight"), init.weight(fan_in, fan_out));
        let bias = Some(store.insert(format!("{name}.bias"), Tensor::zeros(1, fan_out)));
        Self { weight, bias }
    }

    pub(crate) fn without_bias(store: &mut ParamStore, init: &mut Initializer, name: &str, fan_in: usize, fan_out: usize) -> Self {
        let weight = store.insert(format!("{name}.weight"), init.weight(fan_in, fan_out));
        Self { weight, bias: None }
    }

    pub(crate) fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(self.weight);
        let y = tape.matmul(x, w)?;
        match self.bias {
            Some(b) => {
                let b = tape.param(b);
                tape.add_row(y, b)
            }
            None => Ok(y),
        }
    }
}

/// Which network produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Producer {
    Teacher,
    Student,
}

/// A predicted parameter curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePrediction {
    pub values: Vec<f64>,
    pub producer: Producer,
    /// Predicted graph-level scalars (student only).
    pub aux_scalars: Option<Vec<f64>>,
}

impl CurvePrediction {
    pub fn to_curve(&self, dt: f64) -> Result<ParameterCurve> {
        ParameterCurve::new(dt, self.values.clone(), CurveSource::Surrogate)
    }
}

fn finite_row(tape: &Tape, v: Var, what: &str) -> Result<Vec<f64>> {
    let t = tape.value(v);
    if !t.is_finite() {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(t.data().to_vec())
}
