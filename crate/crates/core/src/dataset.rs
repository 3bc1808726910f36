//! The reference-curve corpus: instances, FALQON curves, scalars, splits.
//!
//! A build plans one record per (size, topology, weight draw), computes every
//! record independently (in parallel, each with its own derived seed) and then
//! assigns splits and fits the scalar standardizer on the training split.
//!
//! On disk a dataset is a directory holding `manifest.json` and, under
//! `records/`, three files per record (`<id>.instance.json`, `<id>.curve.txt`,
//! `<id>.scalars.json`) plus a `<id>.done` marker written last. Markers make an
//! interrupted build resumable: finished records are read back, not recomputed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::to_json_sig17;
use crate::graph::{assign_weights, derive_seed, enumerate_cubic_topologies, GraphInstance};
use crate::hamiltonian::{build_problem_diagonal, scalar_features_with, ScalarFeatures, SCALAR_FORMAT};
use crate::model::GraphTensors;
use crate::schedules::{run_falqon_with, CurveSource, ParameterCurve, NOMINAL_DT, NOMINAL_ELL};
use crate::training::TrainingSample;

pub const MANIFEST_FORMAT: &str = "falqon-dataset/1";

/// Largest per-step energy increase tolerated before a reference run is rejected.
pub const MONOTONICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub sizes: Vec<usize>,
    pub draws_per_topology: usize,
    /// Use only the first `k` topologies (in enumeration order) of every size.
    #[serde(default)]
    pub max_topologies: Option<usize>,
    pub seed: u64,
    pub split_seed: u64,
    pub dt: f64,
    pub ell: usize,
    pub test_fraction: f64,
    pub val_fraction: f64,
    /// Keep all draws of one topology in the same split.
    #[serde(default)]
    pub split_by_topology: bool,
}

impl DatasetConfig {
    pub fn nominal() -> Self {
        Self {
            sizes: vec![4, 6, 8, 10, 12],
            draws_per_topology: 20,
            max_topologies: None,
            seed: 20_240,
            split_seed: 7,
            dt: NOMINAL_DT,
            ell: NOMINAL_ELL,
            test_fraction: 0.4,
            val_fraction: 0.2,
            split_by_topology: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.draws_per_topology == 0 {
            return Err(Error::invalid("dataset needs at least one size and one draw"));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 4 || n % 2 == 1) {
            return Err(Error::invalid(format!("cubic graphs need an even size >= 4, got {n}")));
        }
        let mut sorted = self.sizes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.sizes.len() {
            return Err(Error::invalid("dataset sizes must be distinct"));
        }
        for (name, f) in [("test_fraction", self.test_fraction), ("val_fraction", self.val_fraction)] {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {f}")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || self.ell == 0 {
            return Err(Error::invalid("dt must be positive and ell at least 1"));
        }
        Ok(())
    }
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self::nominal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One planned record, before any simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSpec {
    pub id: String,
    pub n: usize,
    pub topology_index: usize,
    pub draw: usize,
    pub instance: GraphInstance,
}

/// Lists every record of a configuration with its weighted instance.
pub fn plan_records(cfg: &DatasetConfig) -> Result<Vec<RecordSpec>> {
    cfg.validate()?;
    let mut specs = Vec::new();
    for &n in &cfg.sizes {
        let mut topologies = enumerate_cubic_topologies(n)?;
        if let Some(k) = cfg.max_topologies {
            topologies.truncate(k);
        }
        for (t, topology) in topologies.iter().enumerate() {
            for d in 0..cfg.draws_per_topology {
                let seed = derive_seed(cfg.seed, &[n as u64, t as u64, d as u64]);
                specs.push(RecordSpec {
                    id: format!("n{n:02}-t{t:04}-d{d:03}"),
                    n,
                    topology_index: t,
                    draw: d,
                    instance: assign_weights(topology, seed),
                });
            }
        }
    }
    Ok(specs)
}

/// Identity of a record as seen by the splitter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitKey {
    pub id: String,
    pub n: usize,
    pub topology_id: String,
}

fn stable_hash(seed: u64, text: &str) -> u64 {
    // FNV-1a, then mixed with the seed.
    let h = text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    derive_seed(seed, &[h])
}

fn round_count(total: usize, fraction: f64) -> usize {
    ((total as f64 * fraction).round() as usize).min(total)
}

/// Per-size stratified split: `test_fraction` of each size goes to test, then
/// `val_fraction` of the remainder to validation, the rest to training.
///
/// Within a stratum records are ordered by a seeded hash of their id, so the
/// assignment does not depend on the order of `keys`.
pub fn split_dataset(keys: &[SplitKey], seed: u64, test_fraction: f64, val_fraction: f64, by_topology: bool) -> Vec<Split> {
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        strata.entry(k.n).or_default().push(i);
    }
    let mut out = vec![Split::Train; keys.len()];
    for (n, members) in strata {
        if members.len() < 3 {
            log::warn!("size {n} has only {} records; split counts are best effort", members.len());
        }
        // Units are single records, or whole topologies when splitting by topology.
        let mut units: BTreeMap<(u64, String), Vec<usize>> = BTreeMap::new();
        for &i in &members {
            let unit = if by_topology { &keys[i].topology_id } else { &keys[i].id };
            units.entry((stable_hash(seed, unit), unit.clone())).or_default().push(i);
        }
        let n_test = round_count(members.len(), test_fraction);
        let n_val = round_count(members.len() - n_test, val_fraction);
        let (mut test, mut val) = (0, 0);
        for records in units.into_values() {
            let split = if test < n_test {
                test += records.len();
                Split::Test
            } else if val < n_val {
                val += records.len();
                Split::Val
            } else {
                Split::Train
            };
            for i in records {
                out[i] = split;
            }
        }
    }
    out
}

/// Per-component affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on the given rows with the population standard deviation; a
    /// component that is constant on the rows gets `std = 1`.
    pub fn fit<S: AsRef<[f64]>>(rows: &[S]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("cannot fit a standardizer on an empty split"))?;
        let dim = first.as_ref().len();
        let count = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            mean.iter_mut().zip(r).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; dim];
        for r in rows {
            var.iter_mut().zip(r.as_ref()).zip(&mean).for_each(|((v, x), m)| *v += (x - m) * (x - m));
        }
        let std = var.iter().map(|v| (v / count).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: x.len() });
        }
        Ok(x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect())
    }
}

/// A fully materialized record.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub instance: GraphInstance,
    pub reference_curve: ParameterCurve,
    pub scalars_raw: ScalarFeatures,
    pub scalars_std: Vec<f64>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub standardizer: Standardizer,
    pub records: Vec<DatasetRecord>,
}

/// Per-size split counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeCounts {
    pub n: usize,
    pub total: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn counts(&self) -> Vec<SizeCounts> {
        let mut by_size: BTreeMap<usize, SizeCounts> = BTreeMap::new();
        for r in &self.records {
            let n = r.instance.n();
            let c = by_size.entry(n).or_insert(SizeCounts { n, total: 0, train: 0, val: 0, test: 0 });
            c.total += 1;
            match r.split {
                Split::Train => c.train += 1,
                Split::Val => c.val += 1,
                Split::Test => c.test += 1,
            }
        }
        by_size.into_values().collect()
    }

    /// Training samples (graph tensors, standardized scalars, reference curve) of one split.
    pub fn samples(&self, split: Split) -> Result<Vec<TrainingSample>> {
        self.split(split)
            .map(|r| {
                Ok(TrainingSample {
                    graph: GraphTensors::new(&r.instance)?,
                    scalars: r.scalars_std.clone(),
                    reference: r.reference_curve.betas().to_vec(),
                })
            })
            .collect()
    }

    pub fn manifest(&self) -> Manifest {
        let counts = self.counts();
        let total: usize = counts.iter().map(|c| c.total).sum();
        let test: usize = counts.iter().map(|c| c.test).sum();
        Manifest {
            format_version: MANIFEST_FORMAT.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            scalar_format: SCALAR_FORMAT.to_string(),
            total_records: total,
            train_plus_val: total - test,
            test_records: test,
            counts,
            standardizer: self.standardizer.clone(),
            records: self
                .records
                .iter()
                .map(|r| ManifestEntry {
                    id: r.id.clone(),
                    n: r.instance.n(),
                    topology_id: r.instance.topology_id().to_string(),
                    seed: r.instance.seed(),
                    split: r.split,
                    scalars_raw: r.scalars_raw.to_vec(),
                    scalars_std: r.scalars_std.clone(),
                })
                .collect(),
        }
    }

    /// Writes `manifest.json`; record files are written during the build.
    pub fn write_manifest(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("manifest.json"), to_json_sig17(&self.manifest())?)?;
        Ok(())
    }

    /// Reads a dataset directory written by [`build_dataset`].
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.format_version != MANIFEST_FORMAT {
            return Err(Error::parse(format!("unsupported dataset format {:?}", manifest.format_version)));
        }
        let records = manifest
            .records
            .iter()
            .map(|e| {
                let files = RecordFiles::new(dir, &e.id);
                Ok(DatasetRecord {
                    id: e.id.clone(),
                    instance: GraphInstance::read(&files.instance)?,
                    reference_curve: ParameterCurve::read(&files.curve)?,
                    scalars_raw: ScalarFeatures::from_slice(&e.scalars_raw)?,
                    scalars_std: e.scalars_std.clone(),
                    split: e.split,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { config: manifest.config, standardizer: manifest.standardizer, records })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub n: usize,
    pub topology_id: String,
    pub seed: u64,
    pub split: Split,
    pub scalars_raw: Vec<f64>,
    pub scalars_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub tool_version: String,
    pub config: DatasetConfig,
    pub scalar_format: String,
    pub total_records: usize,
    pub train_plus_val: usize,
    pub test_records: usize,
    pub counts: Vec<SizeCounts>,
    pub standardizer: Standardizer,
    pub records: Vec<ManifestEntry>,
}

struct RecordFiles {
    instance: PathBuf,
    curve: PathBuf,
    scalars: PathBuf,
    done: PathBuf,
}

impl RecordFiles {
    fn new(dir: &Path, id: &str) -> Self {
        let base = dir.join("records");
        Self {
            instance: base.join(format!("{id}.instance.json")),
            curve: base.join(format!("{id}.curve.txt")),
            scalars: base.join(format!("{id}.scalars.json")),
            done: base.join(format!("{id}.done")),
        }
    }
}

/// Reference curve and scalars of one record.
fn compute_record(spec: &RecordSpec, dt: f64, ell: usize) -> Result<(ParameterCurve, ScalarFeatures)> {
    let hp = build_problem_diagonal(&spec.instance)?;
    let (curve, trajectory) = run_falqon_with(&hp, dt, ell)?;
    let energies = trajectory.energies();
    if let Some(j) = energies.windows(2).position(|w| w[1] > w[0] + MONOTONICITY_TOL) {
        return Err(Error::InvariantViolation(format!(
            "record {}: energy rises by {:e} at layer {}",
            spec.id,
            energies[j + 1] - energies[j],
            j + 1
        )));
    }
    Ok((curve, scalar_features_with(spec.instance.n(), &hp)?))
}

fn materialize(spec: &RecordSpec, cfg: &DatasetConfig, dir: Option<&Path>) -> Result<(ParameterCurve, ScalarFeatures)> {
    let Some(dir) = dir else { return compute_record(spec, cfg.dt, cfg.ell) };
    let files = RecordFiles::new(dir, &spec.id);
    if files.done.exists() {
        let stored = GraphInstance::read(&files.instance)?;
        if stored == spec.instance {
            let curve = ParameterCurve::read(&files.curve)?;
            let scalars: ScalarFeatures = serde_json::from_str(&fs::read_to_string(&files.scalars)?)?;
            if curve.ell() == cfg.ell && curve.dt() == cfg.dt && curve.source() == CurveSource::Falqon {
                return Ok((curve, scalars));
            }
        }
        log::warn!("record {} does not match the configuration; recomputing", spec.id);
        fs::remove_file(&files.done)?;
    }
    let (curve, scalars) = compute_record(spec, cfg.dt, cfg.ell)?;
    spec.instance.write(&files.instance)?;
    let note = vec![format!("# record={} instance_seed={}", spec.id, spec.instance.seed())];
    curve.write(&files.curve, &note)?;
    fs::write(&files.scalars, to_json_sig17(&scalars)?)?;
    fs::write(&files.done, "done\n")?;
    Ok((curve, scalars))
}

/// Builds every record of `cfg` on a pool of `threads` workers, assigns
/// splits and standardizes the scalars with training-split statistics.
///
/// With `dir`, record files and `manifest.json` are written there and
/// already-finished records are reused.
pub fn build_dataset(cfg: &DatasetConfig, dir: Option<&Path>, threads: usize) -> Result<Dataset> {
    let specs = plan_records(cfg)?;
    if let Some(dir) = dir {
        fs::create_dir_all(dir.join("records"))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start worker pool: {e}")))?;
    let computed: Vec<(ParameterCurve, ScalarFeatures)> =
        pool.install(|| specs.par_iter().map(|s| materialize(s, cfg, dir)).collect::<Result<_>>())?;

    let keys: Vec<SplitKey> = specs
        .iter()
        .map(|s| SplitKey { id: s.id.clone(), n: s.n, topology_id: s.instance.topology_id().to_string() })
        .collect();
    let splits = split_dataset(&keys, cfg.split_seed, cfg.test_fraction, cfg.val_fraction, cfg.split_by_topology);
    let train_rows: Vec<Vec<f64>> = computed
        .iter()
        .zip(&splits)
        .filter(|(_, s)| **s == Split::Train)
        .map(|((_, f), _)| f.to_vec())
        .collect();
    let standardizer = Standardizer::fit(&train_rows)?;
    let records = specs
        .into_iter()
        .zip(computed)
        .zip(splits)
        .map(|((spec, (curve, scalars)), split)| {
            Ok(DatasetRecord {
                id: spec.id,
                instance: spec.instance,
                reference_curve: curve,
                scalars_std: standardizer.apply(&scalars.to_vec())?,
                scalars_raw: scalars,
                split,
            })
        })
        .collect::<Result<_>>()?;
    let dataset = Dataset { config: cfg.clone(), standardizer, records };
    if let Some(dir) = dir {
        dataset.write_manifest(dir)?;
    }
    Ok(dataset)
}
