//! Named parameter tensors and seeded initialization.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Handle to one tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Ordered collection of named, trainable tensors.
///
/// Registration order is the serialization order, so two stores built by the
/// same constructor are layout-compatible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Sets every parameter to zero.
    pub fn zero_all(&mut self) {
        for t in &mut self.tensors {
            t.data_mut().fill(0.0);
        }
    }

    /// Fails with [`Error::NonFinite`] naming the first tensor holding a NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        match self.iter().find(|(_, t)| !t.is_finite()) {
            Some((name, _)) => Err(Error::NonFinite(format!("parameter {name}"))),
            None => Ok(()),
        }
    }

    /// Copies values from `other`, which must have the same names and shapes.
    pub fn copy_from(&mut self, other: &ParamStore) -> Result<()> {
        if self.names != other.names {
            return Err(Error::invalid("parameter layouts differ"));
        }
        for (dst, src) in self.tensors.iter_mut().zip(&other.tensors) {
            if dst.shape() != src.shape() {
                return Err(Error::DimensionMismatch { expected: dst.len(), got: src.len() });
            }
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }
}

/// Seeded source of initial parameter values.
///
/// Weights are uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`; biases start at zero.
#[derive(Debug, Clone)]
pub struct Initializer {
    rng: ChaCha8Rng,
}

impl Initializer {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, rows: usize, cols: usize, bound: f64) -> Tensor {
        let data = (0..rows * cols).map(|_| self.rng.gen_range(-bound..=bound)).collect();
        Tensor::from_vec(rows, cols, data).expect("shape matches by construction")
    }

    /// Weight matrix of shape `fan_in x fan_out`.
    pub fn weight(&mut self, fan_in: usize, fan_out: usize) -> Tensor {
        self.uniform(fan_in, fan_out, 1.0 / (fan_in.max(1) as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insertion_order_is_layout() {
        let mut init = Initializer::new(3);
        let mut p = ParamStore::new();
        let a = p.insert("a", init.weight(4, 2));
        let b = p.insert("b", Tensor::zeros(1, 2));
        assert_eq!(p.num_scalars(), 10);
        assert_eq!(p.id_of("b"), Some(b));
        assert_eq!(p.name(a), "a");
        assert!(p.get(a).data().iter().all(|x| x.abs() <= 0.5));
        assert_eq!(Initializer::new(3).weight(4, 2), *p.get(a));
    }

    #[test]
    fn non_finite_is_named() {
        let mut p = ParamStore::new();
        p.insert("ok", Tensor::zeros(1, 1));
        p.insert("bad", Tensor::filled(1, 1, f64::NAN));
        let msg = p.check_finite().unwrap_err().to_string();
        assert!(msg.contains("bad"));
    }
}
