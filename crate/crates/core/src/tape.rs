//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are not
//! copied onto the tape: a parameter leaf reads its value straight from the
//! borrowed [`ParamStore`]. The scalar loss is evaluated outside the tape, so
//! [`Tape::backward`] takes seed gradients (`dL/dy` for each output `y`) and
//! returns `dL/dθ` for every parameter tensor `θ` in the store.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Const,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    MulScalar(Var, Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Gather(Var, Rc<Vec<usize>>),
    SegmentSum(Var, Rc<Vec<usize>>),
    SegmentMax(Var, Vec<usize>),
    SegmentSoftmax(Var, Rc<Vec<usize>>),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    Reshape(Var),
    Transpose(Var),
    RepeatCols(Var, usize),
    SumColBlocks(Var, usize),
}

impl Op {
    fn label(&self) -> &'static str {
        match self {
            Op::Const => "const",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddRow(..) => "add_row",
            Op::Scale(..) => "scale",
            Op::MulScalar(..) => "mul_scalar",
            Op::Relu(_) => "relu",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Gather(..) => "gather",
            Op::SegmentSum(..) => "segment_sum",
            Op::SegmentMax(..) => "segment_max",
            Op::SegmentSoftmax(..) => "segment_softmax",
            Op::Concat(_) => "concat",
            Op::SliceCols(..) => "slice_cols",
            Op::Reshape(_) => "reshape",
            Op::Transpose(_) => "transpose",
            Op::RepeatCols(..) => "repeat_cols",
            Op::SumColBlocks(..) => "sum_col_blocks",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Option<Tensor>,
}

/// Gradients for every tensor of a [`ParamStore`], in store order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self { tensors: store.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect() }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.index()]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// Euclidean norm over all coordinates.
    pub fn norm(&self) -> f64 {
        self.tensors.iter().flat_map(|t| t.data()).map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Recording of one forward pass.
pub struct Tape<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self { store, nodes: Vec::new() }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value: Some(value) });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.op, &node.value) {
            (Op::Param(id), _) => self.store.get(*id),
            (_, Some(t)) => t,
            (_, None) => unreachable!("non-parameter node without a value"),
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Const, t)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node { op: Op::Param(id), value: None });
        Var(self.nodes.len() - 1)
    }

    fn same_shape(&self, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::DimensionMismatch { expected: sa.0 * sa.1, got: sb.0 * sb.1 });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.cols() != tb.rows() {
            return Err(Error::DimensionMismatch { expected: ta.cols(), got: tb.rows() });
        }
        let out = ta.matmul(tb);
        Ok(self.push(Op::MatMul(a, b), out))
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::from_vec(ta.rows(), ta.cols(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b)?;
        let out = self.zip(a, b, |x, y| x + y);
        Ok(self.push(Op::Add(a, b), out))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b)?;
        let out = self.zip(a, b, |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), out))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b)?;
        let out = self.zip(a, b, |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), out))
    }

    /// Adds the `1 x c` row vector `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (ta, tr) = (self.value(a), self.value(row));
        if tr.rows() != 1 || tr.cols() != ta.cols() {
            return Err(Error::DimensionMismatch { expected: ta.cols(), got: tr.len() });
        }
        let mut out = ta.clone();
        for r in 0..out.rows() {
            out.row_mut(r).iter_mut().zip(tr.data()).for_each(|(o, b)| *o += b);
        }
        Ok(self.push(Op::AddRow(a, row), out))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).map(|x| k * x);
        self.push(Op::Scale(a, k), out)
    }

    /// Multiplies `a` by the `1 x 1` value `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        let ts = self.value(s);
        if ts.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: ts.len() });
        }
        let k = ts.data()[0];
        let out = self.value(a).map(|x| k * x);
        Ok(self.push(Op::MulScalar(a, s), out))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(Op::Relu(a), out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), out)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(Op::Sigmoid(a), out)
    }

    /// Row `i` of the result is row `index[i]` of `a`.
    pub fn gather_rows(&mut self, a: Var, index: Rc<Vec<usize>>) -> Result<Var> {
        let ta = self.value(a);
        if let Some(&bad) = index.iter().find(|&&i| i >= ta.rows()) {
            return Err(Error::invalid(format!("gather index {bad} out of range for {} rows", ta.rows())));
        }
        let mut out = Tensor::zeros(index.len(), ta.cols());
        for (i, &src) in index.iter().enumerate() {
            out.row_mut(i).copy_from_slice(ta.row(src));
        }
        Ok(self.push(Op::Gather(a, index), out))
    }

    fn check_segments(&self, a: Var, segment: &[usize], count: usize) -> Result<()> {
        let rows = self.value(a).rows();
        if segment.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: segment.len() });
        }
        if let Some(&bad) = segment.iter().find(|&&s| s >= count) {
            return Err(Error::invalid(format!("segment id {bad} out of range for {count} segments")));
        }
        Ok(())
    }

    /// Sums the rows of `a` into `count` output rows according to `segment`.
    pub fn segment_sum(&mut self, a: Var, segment: Rc<Vec<usize>>, count: usize) -> Result<Var> {
        self.check_segments(a, &segment, count)?;
        let ta = self.value(a);
        let mut out = Tensor::zeros(count, ta.cols());
        for (i, &s) in segment.iter().enumerate() {
            out.row_mut(s).iter_mut().zip(ta.row(i)).for_each(|(o, x)| *o += x);
        }
        Ok(self.push(Op::SegmentSum(a, segment), out))
    }

    /// Columnwise maximum over the rows of each segment; empty segments give zero.
    pub fn segment_max(&mut self, a: Var, segment: Rc<Vec<usize>>, count: usize) -> Result<Var> {
        self.check_segments(a, &segment, count)?;
        let ta = self.value(a);
        let cols = ta.cols();
        let mut arg = vec![usize::MAX; count * cols];
        for (i, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                let slot = &mut arg[s * cols + c];
                if *slot == usize::MAX || ta.at(i, c) > ta.at(*slot, c) {
                    *slot = i;
                }
            }
        }
        let data = arg
            .iter()
            .enumerate()
            .map(|(k, &i)| if i == usize::MAX { 0.0 } else { ta.at(i, k % cols) })
            .collect();
        let out = Tensor::from_vec(count, cols, data)?;
        Ok(self.push(Op::SegmentMax(a, arg), out))
    }

    /// Columnwise softmax over the rows of each segment.
    pub fn segment_softmax(&mut self, a: Var, segment: Rc<Vec<usize>>, count: usize) -> Result<Var> {
        self.check_segments(a, &segment, count)?;
        let ta = self.value(a);
        let cols = ta.cols();
        let mut max = vec![f64::NEG_INFINITY; count * cols];
        for (i, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                max[s * cols + c] = max[s * cols + c].max(ta.at(i, c));
            }
        }
        let mut out = Tensor::zeros(ta.rows(), cols);
        let mut denom = vec![0.0; count * cols];
        for (i, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                let e = (ta.at(i, c) - max[s * cols + c]).exp();
                out.row_mut(i)[c] = e;
                denom[s * cols + c] += e;
            }
        }
        for (i, &s) in segment.iter().enumerate() {
            for c in 0..cols {
                out.row_mut(i)[c] /= denom[s * cols + c];
            }
        }
        Ok(self.push(Op::SegmentSoftmax(a, segment), out))
    }

    /// Horizontal concatenation.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.shape(parts[0]).0;
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut out = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let tp = self.value(p);
            if tp.rows() != rows {
                return Err(Error::DimensionMismatch { expected: rows, got: tp.rows() });
            }
            for r in 0..rows {
                out.row_mut(r)[offset..offset + tp.cols()].copy_from_slice(tp.row(r));
            }
            offset += tp.cols();
        }
        Ok(self.push(Op::Concat(parts.to_vec()), out))
    }

    /// Columns `start..start + width` of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let ta = self.value(a);
        if start + width > ta.cols() {
            return Err(Error::DimensionMismatch { expected: ta.cols(), got: start + width });
        }
        let mut out = Tensor::zeros(ta.rows(), width);
        for r in 0..ta.rows() {
            out.row_mut(r).copy_from_slice(&ta.row(r)[start..start + width]);
        }
        Ok(self.push(Op::SliceCols(a, start), out))
    }

    /// Reinterprets the row-major data of `a` with a new shape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let out = Tensor::from_vec(rows, cols, self.value(a).data().to_vec())?;
        Ok(self.push(Op::Reshape(a), out))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(Op::Transpose(a), out)
    }

    /// Repeats every column `times` times in place: column `j` of the result is column `j / times` of `a`.
    pub fn repeat_cols(&mut self, a: Var, times: usize) -> Var {
        let ta = self.value(a);
        let mut out = Tensor::zeros(ta.rows(), ta.cols() * times);
        for r in 0..ta.rows() {
            let src = ta.row(r);
            for (j, o) in out.row_mut(r).iter_mut().enumerate() {
                *o = src[j / times];
            }
        }
        self.push(Op::RepeatCols(a, times), out)
    }

    /// Sums consecutive blocks of `width` columns: the inverse pattern of [`Tape::repeat_cols`].
    pub fn sum_col_blocks(&mut self, a: Var, width: usize) -> Result<Var> {
        let ta = self.value(a);
        if width == 0 || ta.cols() % width != 0 {
            return Err(Error::invalid(format!("{} columns do not split into blocks of {width}", ta.cols())));
        }
        let mut out = Tensor::zeros(ta.rows(), ta.cols() / width);
        for r in 0..ta.rows() {
            let src = ta.row(r);
            for (j, o) in out.row_mut(r).iter_mut().enumerate() {
                *o = src[j * width..(j + 1) * width].iter().sum();
            }
        }
        Ok(self.push(Op::SumColBlocks(a, width), out))
    }

    /// Propagates the seed gradients back to every parameter.
    ///
    /// Each seed pairs an output with the gradient of the (external) scalar loss
    /// with respect to it. Parameters the seeds do not depend on receive zeros.
    pub fn backward(&self, seeds: &[(Var, &Tensor)]) -> Result<Gradients> {
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        for &(v, g) in seeds {
            if self.shape(v) != g.shape() {
                return Err(Error::DimensionMismatch { expected: self.value(v).len(), got: g.len() });
            }
            accumulate(&mut grads, v, g.clone());
        }
        let mut out = Gradients::zeros_like(self.store);
        for i in (0..self.nodes.len()).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !g.is_finite() {
                let what = match node.op {
                    Op::Param(id) => format!("gradient of parameter {}", self.store.name(id)),
                    ref op => format!("gradient of {} node #{i}", op.label()),
                };
                return Err(Error::NonFinite(what));
            }
            self.propagate(Var(i), &node.op, g, &mut grads, &mut out);
        }
        Ok(out)
    }

    fn propagate(&self, me: Var, op: &Op, g: Tensor, grads: &mut [Option<Tensor>], out: &mut Gradients) {
        match *op {
            Op::Const => {}
            Op::Param(id) => out.tensors[id.index()].add_assign(&g),
            Op::MatMul(a, b) => {
                accumulate(grads, a, g.matmul_nt(self.value(b)));
                accumulate(grads, b, self.value(a).matmul_tn(&g));
            }
            Op::Add(a, b) => {
                accumulate(grads, a, g.clone());
                accumulate(grads, b, g);
            }
            Op::Sub(a, b) => {
                accumulate(grads, b, g.map(|x| -x));
                accumulate(grads, a, g);
            }
            Op::Mul(a, b) => {
                accumulate(grads, a, hadamard(&g, self.value(b)));
                accumulate(grads, b, hadamard(&g, self.value(a)));
            }
            Op::AddRow(a, row) => {
                let mut gr = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    gr.data_mut().iter_mut().zip(g.row(r)).for_each(|(o, x)| *o += x);
                }
                accumulate(grads, row, gr);
                accumulate(grads, a, g);
            }
            Op::Scale(a, k) => accumulate(grads, a, g.map(|x| k * x)),
            Op::MulScalar(a, s) => {
                let k = self.value(s).data()[0];
                let ds: f64 = g.data().iter().zip(self.value(a).data()).map(|(x, y)| x * y).sum();
                accumulate(grads, s, Tensor::filled(1, 1, ds));
                accumulate(grads, a, g.map(|x| k * x));
            }
            Op::Relu(a) => {
                let ga = zip_with(&g, self.value(a), |g, x| if x > 0.0 { g } else { 0.0 });
                accumulate(grads, a, ga);
            }
            Op::Tanh(a) => {
                let ga = zip_with(&g, self.value(me), |g, y| g * (1.0 - y * y));
                accumulate(grads, a, ga);
            }
            Op::Sigmoid(a) => {
                let ga = zip_with(&g, self.value(me), |g, y| g * y * (1.0 - y));
                accumulate(grads, a, ga);
            }
            Op::Gather(a, ref index) => {
                let ta = self.value(a);
                let mut ga = Tensor::zeros(ta.rows(), ta.cols());
                for (i, &src) in index.iter().enumerate() {
                    ga.row_mut(src).iter_mut().zip(g.row(i)).for_each(|(o, x)| *o += x);
                }
                accumulate(grads, a, ga);
            }
            Op::SegmentSum(a, ref segment) => {
                let mut ga = Tensor::zeros(segment.len(), g.cols());
                for (i, &s) in segment.iter().enumerate() {
                    ga.row_mut(i).copy_from_slice(g.row(s));
                }
                accumulate(grads, a, ga);
            }
            Op::SegmentMax(a, ref arg) => {
                let ta = self.value(a);
                let cols = ta.cols();
                let mut ga = Tensor::zeros(ta.rows(), cols);
                for (k, &i) in arg.iter().enumerate() {
                    if i != usize::MAX {
                        ga.row_mut(i)[k % cols] += g.data()[k];
                    }
                }
                accumulate(grads, a, ga);
            }
            Op::SegmentSoftmax(a, ref segment) => {
                let y = self.value(me);
                let cols = y.cols();
                let count = segment.iter().max().map_or(0, |m| m + 1);
                let mut dot = vec![0.0; count * cols];
                for (i, &s) in segment.iter().enumerate() {
                    for c in 0..cols {
                        dot[s * cols + c] += y.at(i, c) * g.at(i, c);
                    }
                }
                let mut ga = Tensor::zeros(y.rows(), cols);
                for (i, &s) in segment.iter().enumerate() {
                    for c in 0..cols {
                        ga.row_mut(i)[c] = y.at(i, c) * (g.at(i, c) - dot[s * cols + c]);
                    }
                }
                accumulate(grads, a, ga);
            }
            Op::Concat(ref parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    let mut gp = Tensor::zeros(g.rows(), w);
                    for r in 0..g.rows() {
                        gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + w]);
                    }
                    accumulate(grads, p, gp);
                    offset += w;
                }
            }
            Op::SliceCols(a, start) => {
                let (rows, cols) = self.shape(a);
                let mut ga = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    ga.row_mut(r)[start..start + g.cols()].copy_from_slice(g.row(r));
                }
                accumulate(grads, a, ga);
            }
            Op::Reshape(a) => {
                let (rows, cols) = self.shape(a);
                accumulate(grads, a, Tensor::from_vec(rows, cols, g.into_data()).expect("same length"));
            }
            Op::Transpose(a) => accumulate(grads, a, g.transpose()),
            Op::RepeatCols(a, times) => {
                let (rows, cols) = self.shape(a);
                let mut ga = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    let src = g.row(r);
                    for (j, o) in ga.row_mut(r).iter_mut().enumerate() {
                        *o = src[j * times..(j + 1) * times].iter().sum();
                    }
                }
                accumulate(grads, a, ga);
            }
            Op::SumColBlocks(a, width) => {
                let (rows, cols) = self.shape(a);
                let mut ga = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    let src = g.row(r);
                    for (j, o) in ga.row_mut(r).iter_mut().enumerate() {
                        *o = src[j / width];
                    }
                }
                accumulate(grads, a, ga);
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn zip_with(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

fn hadamard(a: &Tensor, b: &Tensor) -> Tensor {
    zip_with(a, b, |x, y| x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Initializer;

    /// Sum of `probe ⊙ f(params)`, with its gradient checked against central differences.
    fn check_op(build: impl Fn(&mut Tape, &[Var]) -> Var, shapes: &[(usize, usize)], seed: u64) {
        let mut init = Initializer::new(seed);
        let mut store = ParamStore::new();
        let ids: Vec<_> = shapes.iter().enumerate().map(|(i, &(r, c))| store.insert(format!("p{i}"), init.uniform(r, c, 1.0))).collect();
        let eval = |store: &ParamStore| -> (f64, Option<Gradients>, Tensor) {
            let mut tape = Tape::new(store);
            let vars: Vec<_> = ids.iter().map(|&id| tape.param(id)).collect();
            let y = build(&mut tape, &vars);
            let ty = tape.value(y).clone();
            let probe = Initializer::new(99).uniform(ty.rows(), ty.cols(), 1.0);
            let f = ty.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum();
            let g = tape.backward(&[(y, &probe)]).unwrap();
            (f, Some(g), ty)
        };
        let (_, g, _) = eval(&store);
        let g = g.unwrap();
        let h = 1e-6;
        for &id in &ids {
            for k in 0..store.get(id).len() {
                let mut plus = store.clone();
                plus.get_mut(id).data_mut()[k] += h;
                let mut minus = store.clone();
                minus.get_mut(id).data_mut()[k] -= h;
                let fd = (eval(&plus).0 - eval(&minus).0) / (2.0 * h);
                let an = g.get(id).data()[k];
                assert!((fd - an).abs() < 1e-7 * (1.0 + an.abs()), "param {} coord {k}: fd {fd} vs {an}", id.index());
            }
        }
    }

    #[test]
    fn elementwise_and_matmul_gradients() {
        check_op(|t, v| t.matmul(v[0], v[1]).unwrap(), &[(3, 4), (4, 2)], 1);
        check_op(|t, v| { let s = t.add(v[0], v[1]).unwrap(); t.sub(s, v[1]).unwrap() }, &[(2, 3), (2, 3)], 2);
        check_op(|t, v| t.mul(v[0], v[1]).unwrap(), &[(2, 3), (2, 3)], 3);
        check_op(|t, v| t.add_row(v[0], v[1]).unwrap(), &[(3, 2), (1, 2)], 4);
        check_op(|t, v| t.mul_scalar(v[0], v[1]).unwrap(), &[(3, 2), (1, 1)], 5);
        check_op(|t, v| { let a = t.tanh(v[0]); let b = t.sigmoid(a); t.scale(b, -1.5) }, &[(2, 5)], 6);
        check_op(|t, v| t.relu(v[0]), &[(4, 4)], 7);
    }

    #[test]
    fn structural_gradients() {
        let idx = Rc::new(vec![2, 0, 0, 1]);
        check_op(move |t, v| t.gather_rows(v[0], idx.clone()).unwrap(), &[(3, 2)], 8);
        let seg = Rc::new(vec![1, 0, 1, 1, 0]);
        let s1 = seg.clone();
        check_op(move |t, v| t.segment_sum(v[0], s1.clone(), 2).unwrap(), &[(5, 3)], 9);
        let s2 = seg.clone();
        check_op(move |t, v| t.segment_max(v[0], s2.clone(), 2).unwrap(), &[(5, 3)], 10);
        let s3 = seg;
        check_op(move |t, v| t.segment_softmax(v[0], s3.clone(), 2).unwrap(), &[(5, 3)], 11);
        check_op(|t, v| t.concat_cols(&[v[0], v[1], v[0]]).unwrap(), &[(2, 2), (2, 3)], 12);
        check_op(|t, v| t.slice_cols(v[0], 1, 2).unwrap(), &[(3, 4)], 13);
        check_op(|t, v| { let r = t.reshape(v[0], 2, 6).unwrap(); t.transpose(r) }, &[(3, 4)], 14);
        check_op(|t, v| t.repeat_cols(v[0], 3), &[(2, 2)], 15);
        check_op(|t, v| t.sum_col_blocks(v[0], 2).unwrap(), &[(2, 6)], 16);
    }

    #[test]
    fn quadratic_toy_loss_has_closed_form_gradient() {
        let mut store = ParamStore::new();
        let w = store.insert("w", Tensor::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.0, 1.5, -0.5]).unwrap());
        let unused = store.insert("unused", Tensor::filled(2, 2, 3.0));
        let x = Tensor::column(vec![1.0, 2.0, -1.0]);
        let y = Tensor::column(vec![0.25, -0.75]);
        let mut tape = Tape::new(&store);
        let wv = tape.param(w);
        let xv = tape.constant(x.clone());
        let wx = tape.matmul(wv, xv).unwrap();
        let r: Vec<f64> = tape.value(wx).data().iter().zip(y.data()).map(|(a, b)| a - b).collect();
        let seed = Tensor::column(r.iter().map(|v| 2.0 * v).collect());
        let g = tape.backward(&[(wx, &seed)]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(g.get(w).at(i, j), 2.0 * r[i] * x.data()[j]);
            }
        }
        assert!(g.get(unused).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shared_parameter_accumulates() {
        let mut store = ParamStore::new();
        let a = store.insert("a", Tensor::filled(1, 1, 3.0));
        let mut tape = Tape::new(&store);
        let v1 = tape.param(a);
        let v2 = tape.param(a);
        let y = tape.mul(v1, v2).unwrap();
        let g = tape.backward(&[(y, &Tensor::filled(1, 1, 1.0))]).unwrap();
        assert_eq!(g.get(a).data(), &[6.0]);
    }

    #[test]
    fn non_finite_gradient_names_tensor() {
        let mut store = ParamStore::new();
        let a = store.insert("weights.alpha", Tensor::filled(1, 2, 1.0));
        let mut tape = Tape::new(&store);
        let v = tape.param(a);
        let y = tape.scale(v, 2.0);
        let err = tape.backward(&[(y, &Tensor::from_vec(1, 2, vec![f64::NAN, 0.0]).unwrap())]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert!(err.to_string().contains("scale"));
    }

    #[test]
    fn shape_errors() {
        let store = ParamStore::new();
        let mut tape = Tape::new(&store);
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 2));
        assert!(tape.matmul(a, b).is_err());
        assert!(tape.add(a, b).is_err());
        assert!(tape.sum_col_blocks(a, 2).is_err());
    }
}
