//! Teacher-then-student training with batch size one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::graph::derive_seed;
use crate::model::{GraphTensors, ModelConfig, Student, Teacher};
use crate::params::ParamStore;
use crate::tape::{Gradients, Tape};
use crate::tensor::Tensor;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{distill_loss, distill_loss_grad, teacher_loss, teacher_loss_grad, LossBreakdown, LossWeights};

const TEACHER_INIT: u64 = 1;
const STUDENT_INIT: u64 = 2;
const SHUFFLE: u64 = 3;

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    /// Epochs per phase.
    pub epochs: usize,
    pub lr: f64,
    /// Learning rate of the student phase; `lr` when absent.
    #[serde(default)]
    pub student_lr: Option<f64>,
    pub weights: LossWeights,
    pub model: ModelConfig,
    pub adam: AdamConfig,
    /// Per-epoch learning-rate multiplier.
    #[serde(default)]
    pub lr_decay: LrDecay,
    /// Start both curve readouts at the mean training reference curve: the
    /// final readout bias is set to that curve and the final readout weight
    /// to zero, so the first prediction is smooth instead of white noise.
    #[serde(default)]
    pub mean_curve_init: bool,
    /// Echo of the dataset location, for provenance only.
    #[serde(default)]
    pub dataset: Option<String>,
}

impl TrainConfig {
    pub fn nominal(seed: u64) -> Self {
        Self {
            seed,
            epochs: 100,
            lr: 1e-3,
            student_lr: None,
            lr_decay: LrDecay::Constant,
            weights: LossWeights::NOMINAL,
            model: ModelConfig::nominal(),
            adam: AdamConfig::default(),
            mean_curve_init: false,
            dataset: None,
        }
    }

    /// Reduced-scale setting for quick end-to-end runs: hidden width 32, 30
    /// epochs, full-length curves.
    ///
    /// At batch size one the per-step noise of Adam injects broadband energy
    /// into the 1001-wide readout, which the spectral term then fights; the
    /// lower base rates with a cosine decay let both phases settle instead of
    /// hovering at that noise floor. Readouts start at the mean training curve.
    pub fn mini(seed: u64) -> Self {
        Self {
            epochs: 30,
            lr: 5e-4,
            student_lr: Some(3e-4),
            lr_decay: LrDecay::Cosine,
            model: ModelConfig::reduced(32, crate::schedules::NOMINAL_ELL),
            mean_curve_init: true,
            ..Self::nominal(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.weights.validate()?;
        for lr in std::iter::once(self.lr).chain(self.student_lr) {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::invalid(format!("learning rate must be positive, got {lr}")));
            }
        }
        Ok(())
    }
}

/// Learning-rate multiplier as a function of the epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrDecay {
    /// The base rate throughout.
    #[default]
    Constant,
    /// Half-cosine from the base rate in the first epoch towards zero after the last.
    Cosine,
}

impl LrDecay {
    /// Multiplier for `epoch` (1-based) of `epochs`.
    pub fn factor(self, epoch: usize, epochs: usize) -> f64 {
        match self {
            LrDecay::Constant => 1.0,
            LrDecay::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * (epoch - 1) as f64 / epochs as f64).cos()),
        }
    }
}

/// One supervised example: a graph, its standardized scalars and its reference curve.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub graph: GraphTensors,
    pub scalars: Vec<f64>,
    pub reference: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Teacher,
    Student,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Teacher => "teacher",
            Phase::Student => "student",
        }
    }
}

/// Mean per-sample losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub phase: Phase,
    pub train_loss: f64,
    /// `None` when the validation split is empty.
    pub val_loss: Option<f64>,
}

pub struct TrainOutcome {
    pub teacher: Teacher,
    pub teacher_params: ParamStore,
    pub student: Student,
    pub student_params: ParamStore,
    /// Teacher parameters of the epoch with the lowest validation loss; the
    /// student is distilled from these.
    pub teacher_best_params: ParamStore,
    /// Student parameters of the epoch with the lowest validation loss.
    pub student_best_params: ParamStore,
    pub history: Vec<HistoryRow>,
}

impl TrainOutcome {
    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from("epoch,phase,train_loss,val_loss\n");
    for r in rows {
        let val = r.val_loss.map(sig17).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.epoch, r.phase.as_str(), sig17(r.train_loss), val);
    }
    out
}

fn row_tensor(v: &[f64]) -> Tensor {
    Tensor::row_vector(v.to_vec())
}

/// Teacher loss against a reference curve and its parameter gradients.
pub fn teacher_loss_and_grad(
    teacher: &Teacher,
    params: &ParamStore,
    sample: &TrainingSample,
    weights: &LossWeights,
) -> Result<(LossBreakdown, Gradients)> {
    let mut tape = Tape::new(params);
    let y = teacher.forward(&mut tape, &sample.graph, &sample.scalars)?;
    let (loss, g) = teacher_loss_grad(tape.value(y).data(), &sample.reference, weights)?;
    check_loss(&loss, "teacher loss")?;
    let grads = tape.backward(&[(y, &row_tensor(&g))])?;
    Ok((loss, grads))
}

/// Distillation loss against a (frozen) teacher curve and the student's parameter gradients.
pub fn student_loss_and_grad(
    student: &Student,
    params: &ParamStore,
    graph: &GraphTensors,
    teacher_curve: &[f64],
    scalars: &[f64],
    weights: &LossWeights,
) -> Result<(LossBreakdown, Gradients)> {
    let mut tape = Tape::new(params);
    let out = student.forward(&mut tape, graph)?;
    let (loss, gc, gs) =
        distill_loss_grad(tape.value(out.curve).data(), teacher_curve, tape.value(out.scalars).data(), scalars, weights)?;
    check_loss(&loss, "distillation loss")?;
    let grads = tape.backward(&[(out.curve, &row_tensor(&gc)), (out.scalars, &row_tensor(&gs))])?;
    Ok((loss, grads))
}

fn check_loss(loss: &LossBreakdown, what: &str) -> Result<()> {
    if loss.total.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn mean(xs: impl Iterator<Item = Result<f64>>) -> Result<Option<f64>> {
    let (mut sum, mut count) = (0.0, 0usize);
    for x in xs {
        sum += x?;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Checkpoint files written into the output directory.
struct Outputs<'a> {
    dir: &'a Path,
    config: &'a TrainConfig,
}

impl Outputs<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn metadata(&self, phase: Phase, epoch: usize, val: Option<f64>) -> BTreeMap<String, serde_json::Value> {
        let mut m = BTreeMap::new();
        m.insert("phase".into(), json!(phase.as_str()));
        m.insert("epoch".into(), json!(epoch));
        m.insert("val_loss".into(), json!(val));
        m.insert("seed".into(), json!(self.config.seed));
        m.insert("lr".into(), json!(self.config.lr));
        m.insert("loss_weights".into(), json!(self.config.weights));
        let terms = match phase {
            Phase::Teacher => "level,slope,curvature,spectral,tv",
            Phase::Student => "level,slope,curvature,spectral,tv,scalar",
        };
        m.insert("loss_terms".into(), json!(terms));
        m
    }

    fn write_history(&self, rows: &[HistoryRow]) -> Result<()> {
        let mut text = format!(
            "# falqon-core {} training history\n# config: {}\n",
            env!("CARGO_PKG_VERSION"),
            serde_json::to_string(self.config)?
        );
        text.push_str(&history_csv(rows));
        fs::write(self.path("history.csv"), text)?;
        Ok(())
    }
}

/// Runs both phases: the teacher fits the reference curves, then the student
/// is distilled from the frozen teacher.
///
/// With an output directory, `{teacher,student}.json` (latest epoch),
/// `{teacher,student}_best.json` (lowest validation loss), `history.csv` and
/// `train_config.json` are rewritten after every epoch, so an aborted run
/// leaves the last good state on disk. The returned parameters are those of
/// the final epoch.
pub fn train(train: &[TrainingSample], val: &[TrainingSample], cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    for s in train.iter().chain(val) {
        if s.reference.len() != cfg.model.ell {
            return Err(Error::DimensionMismatch { expected: cfg.model.ell, got: s.reference.len() });
        }
        if s.scalars.len() != cfg.model.scalar_dim {
            return Err(Error::DimensionMismatch { expected: cfg.model.scalar_dim, got: s.scalars.len() });
        }
    }
    let outputs = out_dir.map(|dir| Outputs { dir, config: cfg });
    if let Some(o) = &outputs {
        fs::create_dir_all(o.dir)?;
        fs::write(o.path("train_config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    }
    let w = &cfg.weights;
    let mut history = Vec::new();

    let (teacher, mut tp) = Teacher::new(cfg.model.clone(), derive_seed(cfg.seed, &[TEACHER_INIT]))?;
    let (student, mut sp) = Student::new(cfg.model.clone(), derive_seed(cfg.seed, &[STUDENT_INIT]))?;
    if cfg.mean_curve_init {
        let mut mean = vec![0.0; cfg.model.ell];
        for s in train {
            mean.iter_mut().zip(&s.reference).for_each(|(m, r)| *m += r / train.len() as f64);
        }
        tp.get_mut(teacher.readout_bias()).data_mut().copy_from_slice(&mean);
        sp.get_mut(student.curve_bias()).data_mut().copy_from_slice(&mean);
        tp.get_mut(teacher.readout_weight()).data_mut().fill(0.0);
        sp.get_mut(student.curve_weight()).data_mut().fill(0.0);
    }
    if let Some(o) = &outputs {
        for name in ["teacher.json", "teacher_best.json"] {
            teacher.save(&tp, &o.path(name), o.metadata(Phase::Teacher, 0, None))?;
        }
        for name in ["student.json", "student_best.json"] {
            student.save(&sp, &o.path(name), o.metadata(Phase::Student, 0, None))?;
        }
        o.write_history(&history)?;
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = AdamState::new(&tp);
    let mut best = f64::INFINITY;
    let mut best_tp = tp.clone();
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[SHUFFLE, 0, epoch as u64])));
        let lr = cfg.lr * cfg.lr_decay.factor(epoch, cfg.epochs);
        let mut sum = 0.0;
        for &i in &order {
            let (loss, grads) = teacher_loss_and_grad(&teacher, &tp, &train[i], w)
                .map_err(|e| annotate(e, Phase::Teacher, epoch))?;
            sum += loss.total;
            adam_step(&mut tp, &grads, &mut adam, lr, &cfg.adam)?;
        }
        tp.check_finite().map_err(|e| annotate(e, Phase::Teacher, epoch))?;
        let val_loss = mean(val.iter().map(|s| {
            let pred = teacher.predict(&tp, &s.graph, &s.scalars)?;
            Ok(teacher_loss(&pred.values, &s.reference, w)?.total)
        }))
        .map_err(|e| annotate(e, Phase::Teacher, epoch))?;
        let row = HistoryRow { epoch, phase: Phase::Teacher, train_loss: sum / train.len() as f64, val_loss };
        log::info!("teacher epoch {epoch}: train {:.6e} val {:?}", row.train_loss, row.val_loss);
        history.push(row);
        let improved = val_loss.map_or(true, |v| v < best);
        if improved {
            best = val_loss.unwrap_or(best);
            best_tp.copy_from(&tp)?;
        }
        if let Some(o) = &outputs {
            let meta = o.metadata(Phase::Teacher, epoch, val_loss);
            teacher.save(&tp, &o.path("teacher.json"), meta.clone())?;
            if improved {
                teacher.save(&tp, &o.path("teacher_best.json"), meta)?;
            }
            o.write_history(&history)?;
        }
    }

    let targets = |set: &[TrainingSample]| -> Result<Vec<Vec<f64>>> {
        set.iter().map(|s| Ok(teacher.predict(&best_tp, &s.graph, &s.scalars)?.values)).collect()
    };
    let train_targets = targets(train)?;
    let val_targets = targets(val)?;
    let mut adam = AdamState::new(&sp);
    let mut best = f64::INFINITY;
    let mut best_sp = sp.clone();
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[SHUFFLE, 1, epoch as u64])));
        let lr = cfg.student_lr.unwrap_or(cfg.lr) * cfg.lr_decay.factor(epoch, cfg.epochs);
        let mut sum = 0.0;
        for &i in &order {
            let s = &train[i];
            let (loss, grads) = student_loss_and_grad(&student, &sp, &s.graph, &train_targets[i], &s.scalars, w)
                .map_err(|e| annotate(e, Phase::Student, epoch))?;
            sum += loss.total;
            adam_step(&mut sp, &grads, &mut adam, lr, &cfg.adam)?;
        }
        sp.check_finite().map_err(|e| annotate(e, Phase::Student, epoch))?;
        let val_loss = mean(val.iter().zip(&val_targets).map(|(s, t)| {
            let pred = student.predict(&sp, &s.graph)?;
            let s_hat = pred.aux_scalars.as_deref().unwrap_or_default();
            Ok(distill_loss(&pred.values, t, s_hat, &s.scalars, w)?.total)
        }))
        .map_err(|e| annotate(e, Phase::Student, epoch))?;
        let row = HistoryRow { epoch, phase: Phase::Student, train_loss: sum / train.len() as f64, val_loss };
        log::info!("student epoch {epoch}: train {:.6e} val {:?}", row.train_loss, row.val_loss);
        history.push(row);
        let improved = val_loss.map_or(true, |v| v < best);
        if improved {
            best = val_loss.unwrap_or(best);
            best_sp.copy_from(&sp)?;
        }
        if let Some(o) = &outputs {
            let meta = o.metadata(Phase::Student, epoch, val_loss);
            student.save(&sp, &o.path("student.json"), meta.clone())?;
            if improved {
                student.save(&sp, &o.path("student_best.json"), meta)?;
            }
            o.write_history(&history)?;
        }
    }

    Ok(TrainOutcome {
        teacher,
        teacher_params: tp,
        student,
        student_params: sp,
        teacher_best_params: best_tp,
        student_best_params: best_sp,
        history,
    })
}

fn annotate(e: Error, phase: Phase, epoch: usize) -> Error {
    match e {
        Error::NonFinite(what) => Error::NonFinite(format!("{what} ({} phase, epoch {epoch})", phase.as_str())),
        other => other,
    }
}
