//! Teacher network: isomorphism-style encoder and a scalar-conditioned readout.

use crate::error::{Error, Result};
use crate::params::{Initializer, ParamId, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

use super::{finite_row, CurvePrediction, Encoder, EncoderKind, GraphTensors, Linear, ModelConfig, Pooling, Producer};

/// Standardized scalars beyond this magnitude trigger a warning.
pub const UNSTANDARDIZED_THRESHOLD: f64 = 10.0;

/// Teacher architecture.
///
/// A hypernetwork maps the standardized scalars `s` to the weight matrix
/// `W(s)` (`6d x d`) and bias `b(s)` of the first readout stage,
/// `u = relu(z W(s) + b(s))`; a static second stage maps `u` to the curve.
#[derive(Debug, Clone)]
pub struct Teacher {
    config: ModelConfig,
    encoder: Encoder,
    pool: Pooling,
    hyper_in: Linear,
    hyper_out: Linear,
    readout: Linear,
}

impl Teacher {
    /// Builds the architecture and a freshly initialized parameter store.
    pub fn new(config: ModelConfig, seed: u64) -> Result<(Self, ParamStore)> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut init = Initializer::new(seed);
        let d = config.hidden;
        let zd = config.summary_dim();
        let encoder = Encoder::new(&mut store, &mut init, "teacher.encoder", EncoderKind::Isomorphism, &config);
        let pool = Pooling::new(&mut store, &mut init, "teacher.pool", &config);
        let hyper_in = Linear::new(&mut store, &mut init, "teacher.hyper_in", config.scalar_dim, config.hyper_hidden);
        let hyper_out = Linear::new(&mut store, &mut init, "teacher.hyper_out", config.hyper_hidden, zd * d + d);
        // Stored at unit variance; the fan-in scaling is applied at run time
        // (see `weight_gain`).
        let unit = init.uniform(config.hyper_hidden, zd * d + d, 3f64.sqrt());
        store.get_mut(hyper_out.weight).data_mut().copy_from_slice(unit.data());
        let readout = Linear::new(&mut store, &mut init, "teacher.readout", d, config.ell);
        Ok((Self { config, encoder, pool, hyper_in, hyper_out, readout }, store))
    }

    /// Run-time multiplier of the generated stage-I weights.
    ///
    /// Every generated entry is a sum over `hyper_hidden` nonnegative hidden
    /// activations, and stage I sums `6d` of those entries, so an Adam step of
    /// size `lr` on the raw hypernetwork weights would move each stage-I
    /// pre-activation by `O(lr · hyper_hidden · 6d)`. Scaling the generated
    /// matrix by `1/sqrt(hyper_hidden · 6d)` (with unit-variance raw weights)
    /// keeps the initial function at fan-in scale and the per-step change
    /// proportionate, in the manner of an equalized learning rate.
    pub fn weight_gain(&self) -> f64 {
        1.0 / ((self.config.hyper_hidden * self.config.summary_dim()) as f64).sqrt()
    }

    /// Run-time multiplier of the generated stage-I bias, `1/sqrt(hyper_hidden)`.
    pub fn bias_gain(&self) -> f64 {
        1.0 / (self.config.hyper_hidden as f64).sqrt()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Bias of the static output stage.
    pub fn readout_bias(&self) -> ParamId {
        self.readout.bias.expect("readout has a bias")
    }

    pub fn readout_weight(&self) -> ParamId {
        self.readout.weight
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn pool(&self) -> &Pooling {
        &self.pool
    }

    /// Records the forward pass and returns the `1 x ell` curve.
    pub fn forward(&self, tape: &mut Tape, g: &GraphTensors, s: &[f64]) -> Result<Var> {
        if s.len() != self.config.scalar_dim {
            return Err(Error::DimensionMismatch { expected: self.config.scalar_dim, got: s.len() });
        }
        if s.iter().any(|v| v.abs() > UNSTANDARDIZED_THRESHOLD) {
            log::warn!("teacher scalars look unstandardized (|s_i| > {UNSTANDARDIZED_THRESHOLD}): {s:?}");
        }
        let d = self.config.hidden;
        let zd = self.config.summary_dim();
        let h = self.encoder.forward(tape, g)?;
        let z = self.pool.forward(tape, g, h)?;
        let sv = tape.constant(Tensor::row_vector(s.to_vec()));
        let a = self.hyper_in.forward(tape, sv)?;
        let a = tape.relu(a);
        let generated = self.hyper_out.forward(tape, a)?;
        let w = tape.slice_cols(generated, 0, zd * d)?;
        let w = tape.reshape(w, zd, d)?;
        let w = tape.scale(w, self.weight_gain());
        let b = tape.slice_cols(generated, zd * d, d)?;
        let b = tape.scale(b, self.bias_gain());
        let u = tape.matmul(z, w)?;
        let u = tape.add(u, b)?;
        let u = tape.relu(u);
        self.readout.forward(tape, u)
    }

    pub fn predict(&self, store: &ParamStore, g: &GraphTensors, s: &[f64]) -> Result<CurvePrediction> {
        let mut tape = Tape::new(store);
        let y = self.forward(&mut tape, g, s)?;
        Ok(CurvePrediction { values: finite_row(&tape, y, "teacher prediction")?, producer: Producer::Teacher, aux_scalars: None })
    }
}
