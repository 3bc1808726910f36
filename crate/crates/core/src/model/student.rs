//! Student network: attention encoder, auxiliary scalar head and curve head.

use crate::error::Result;
use crate::params::{Initializer, ParamId, ParamStore};
use crate::tape::{Tape, Var};

use super::{finite_row, CurvePrediction, Encoder, EncoderKind, GraphTensors, Linear, ModelConfig, Pooling, Producer};

/// Outputs of one student forward pass.
#[derive(Debug, Clone, Copy)]
pub struct StudentOutput {
    /// `1 x ell` curve.
    pub curve: Var,
    /// `1 x scalar_dim` predicted scalars.
    pub scalars: Var,
}

/// Student architecture: `ŝ = head(z)`, curve `= MLP([z, ŝ])`.
#[derive(Debug, Clone)]
pub struct Student {
    config: ModelConfig,
    encoder: Encoder,
    pool: Pooling,
    scalar_hidden: Linear,
    scalar_out: Linear,
    curve_hidden: Linear,
    curve_out: Linear,
}

impl Student {
    pub fn new(config: ModelConfig, seed: u64) -> Result<(Self, ParamStore)> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut init = Initializer::new(seed);
        let d = config.hidden;
        let zd = config.summary_dim();
        let encoder = Encoder::new(&mut store, &mut init, "student.encoder", EncoderKind::Attention, &config);
        let pool = Pooling::new(&mut store, &mut init, "student.pool", &config);
        let scalar_hidden = Linear::new(&mut store, &mut init, "student.scalar_hidden", zd, d);
        let scalar_out = Linear::new(&mut store, &mut init, "student.scalar_out", d, config.scalar_dim);
        let curve_hidden = Linear::new(&mut store, &mut init, "student.curve_hidden", zd + config.scalar_dim, d);
        let curve_out = Linear::new(&mut store, &mut init, "student.curve_out", d, config.ell);
        Ok((Self { config, encoder, pool, scalar_hidden, scalar_out, curve_hidden, curve_out }, store))
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Bias of the curve head's output layer.
    pub fn curve_bias(&self) -> ParamId {
        self.curve_out.bias.expect("curve head has a bias")
    }

    pub fn curve_weight(&self) -> ParamId {
        self.curve_out.weight
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn pool(&self) -> &Pooling {
        &self.pool
    }

    pub fn forward(&self, tape: &mut Tape, g: &GraphTensors) -> Result<StudentOutput> {
        let h = self.encoder.forward(tape, g)?;
        let z = self.pool.forward(tape, g, h)?;
        let a = self.scalar_hidden.forward(tape, z)?;
        let a = tape.relu(a);
        let scalars = self.scalar_out.forward(tape, a)?;
        let zs = tape.concat_cols(&[z, scalars])?;
        let b = self.curve_hidden.forward(tape, zs)?;
        let b = tape.relu(b);
        let curve = self.curve_out.forward(tape, b)?;
        Ok(StudentOutput { curve, scalars })
    }

    pub fn predict(&self, store: &ParamStore, g: &GraphTensors) -> Result<CurvePrediction> {
        let mut tape = Tape::new(store);
        let out = self.forward(&mut tape, g)?;
        Ok(CurvePrediction {
            values: finite_row(&tape, out.curve, "student curve")?,
            producer: Producer::Student,
            aux_scalars: Some(finite_row(&tape, out.scalars, "student scalars")?),
        })
    }
}
