//! Generation, training, prediction and simulation commands.

use std::fmt::Write as _;

use rayon::prelude::*;

use falqon_core::dataset::{build_dataset, Dataset, DatasetConfig, Split};
use falqon_core::fmt::{sig17, to_json_sig17};
use falqon_core::graph::{assign_weights, derive_seed, enumerate_cubic_topologies, sample_cubic_topology};
use falqon_core::model::{GraphTensors, Student};
use falqon_core::schedules::{linear_schedule, replay_curve, run_falqon, ParameterCurve};
use falqon_core::training::{train, TrainConfig};
use falqon_core::{Error, Result};

use crate::args::{GenDataset, GenGraphs, Predict, Preset, Replay, RunAnneal, RunFalqon, Train};
use crate::output::{collect_instances, OutDir, Provenance};

/// Seed-derivation path component for sampled topologies.
const SAMPLE_STREAM: u64 = 0x5a;

pub fn gen_graphs(args: &GenGraphs, out: &OutDir, prov: &Provenance) -> Result<()> {
    if args.draws == 0 {
        return Err(Error::InvalidArgument("--draws must be at least 1".into()));
    }
    let mut index = String::from("file,n,topology,draw,seed,topology_id\n");
    for &n in &args.sizes {
        let topologies = match args.sample {
            Some(k) => (0..k)
                .map(|i| sample_cubic_topology(n, derive_seed(args.seed, &[SAMPLE_STREAM, n as u64, i as u64])))
                .collect::<Result<Vec<_>>>()?,
            None => enumerate_cubic_topologies(n)?,
        };
        let kind = if args.sample.is_some() { 's' } else { 't' };
        for (t, topology) in topologies.iter().enumerate() {
            let draws = if args.unweighted { 1 } else { args.draws };
            for d in 0..draws {
                let inst = if args.unweighted {
                    topology.strip_weights()
                } else {
                    assign_weights(topology, derive_seed(args.seed, &[n as u64, t as u64, d as u64]))
                };
                let name = format!("n{n:02}-{kind}{t:04}-d{d:03}.json");
                inst.write(&out.path(&name))?;
                writeln!(index, "{name},{n},{t},{d},{},{}", inst.seed(), inst.topology_id()).unwrap();
            }
        }
    }
    out.write_with_header("graphs.csv", prov, &index)?;
    Ok(())
}

pub fn gen_dataset(args: &GenDataset, out: &OutDir, prov: &Provenance, threads: usize) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<DatasetConfig>(&std::fs::read_to_string(path)?)?,
        None => DatasetConfig::nominal(),
    };
    if let Some(sizes) = &args.sizes {
        cfg.sizes = sizes.clone();
    }
    if let Some(d) = args.draws {
        cfg.draws_per_topology = d;
    }
    if let Some(ell) = args.ell {
        cfg.ell = ell;
    }
    cfg.split_by_topology |= args.split_by_topology;
    cfg.validate()?;
    let ds = build_dataset(&cfg, Some(out.dir()), threads)?;
    let mut csv = String::from("n,total,train,val,test\n");
    for c in ds.counts() {
        writeln!(csv, "{},{},{},{},{}", c.n, c.total, c.train, c.val, c.test).unwrap();
    }
    out.write_with_header("counts.csv", &prov.with(format!("dataset: {}", serde_json::to_string(&cfg)?)), &csv)?;
    let m = ds.manifest();
    println!("records {} train+val {} test {}", m.total_records, m.train_plus_val, m.test_records);
    Ok(())
}

pub fn train_cmd(args: &Train, out: &OutDir) -> Result<()> {
    let mut cfg = match (&args.config, args.preset) {
        (Some(path), _) => serde_json::from_str::<TrainConfig>(&std::fs::read_to_string(path)?)?,
        (None, Preset::Nominal) => TrainConfig::nominal(0),
        (None, Preset::Mini) => TrainConfig::mini(0),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    cfg.dataset = Some(args.dataset.display().to_string());
    let ds = Dataset::load(&args.dataset)?;
    if ds.config.ell != cfg.model.ell {
        return Err(Error::InvalidArgument(format!(
            "dataset curves have length {} but the model predicts {}",
            ds.config.ell, cfg.model.ell
        )));
    }
    let outcome = train(&ds.samples(Split::Train)?, &ds.samples(Split::Val)?, &cfg, Some(out.dir()))?;
    if let Some(last) = outcome.history.last() {
        println!("finished {} epochs; last {} train loss {}", cfg.epochs, last.phase.as_str(), sig17(last.train_loss));
    }
    Ok(())
}

pub fn predict(args: &Predict, out: &OutDir, prov: &Provenance) -> Result<()> {
    let (student, params, _) = Student::load(&args.model)?;
    let files = collect_instances(&args.inputs)?;
    files.par_iter().try_for_each(|f| {
        let inst = f.read()?;
        let pred = student.predict(&params, &GraphTensors::new(&inst)?)?;
        let mut lines = prov.with(format!("instance: {}", f.path.display()));
        if let Some(s) = &pred.aux_scalars {
            let s: Vec<String> = s.iter().map(|x| sig17(*x)).collect();
            lines = lines.with(format!("predicted standardized scalars: {}", s.join(",")));
        }
        pred.to_curve(args.dt)?.write(&out.path(&format!("{}.curve.txt", f.stem)), lines.lines())
    })
}

pub fn run_falqon_cmd(args: &RunFalqon, out: &OutDir, prov: &Provenance) -> Result<()> {
    let files = collect_instances(&args.inputs)?;
    files.par_iter().try_for_each(|f| {
        let inst = f.read()?;
        let (curve, traj) = run_falqon(&inst, args.dt, args.ell)?;
        let p = prov.with(format!("instance: {}", f.path.display()));
        curve.write(&out.path(&format!("{}.curve.txt", f.stem)), p.lines())?;
        out.write_with_header(&format!("{}.falqon.csv", f.stem), &p, &traj.to_csv())?;
        Ok(())
    })
}

pub fn run_anneal(args: &RunAnneal, out: &OutDir, prov: &Provenance) -> Result<()> {
    let schedule = linear_schedule(args.dt, args.ell)?;
    let mut csv = String::from("layer,a,b\n");
    for (j, (a, b)) in schedule.pairs().iter().enumerate() {
        writeln!(csv, "{},{},{}", j + 1, sig17(*a), sig17(*b)).unwrap();
    }
    out.write_with_header("linear_schedule.csv", prov, &csv)?;
    let files = collect_instances(&args.inputs)?;
    files.par_iter().try_for_each(|f| {
        let traj = replay_curve(f.read()?.graph(), &schedule)?;
        let p = prov.with(format!("instance: {}", f.path.display()));
        out.write_with_header(&format!("{}.linear.csv", f.stem), &p, &traj.to_csv())?;
        Ok(())
    })
}

pub fn replay(args: &Replay, out: &OutDir, prov: &Provenance) -> Result<()> {
    let files = collect_instances(std::slice::from_ref(&args.input))?;
    let inst = files[0].read()?;
    let curve = ParameterCurve::read(&args.curve)?;
    let traj = replay_curve(&inst, &curve)?;
    out.write_with_header(&format!("{}.replay.csv", files[0].stem), prov, &traj.to_csv())?;
    Ok(())
}

/// Writes a JSON summary (all floats at 17 significant digits).
pub fn write_json(out: &OutDir, name: &str, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(out.path(name), to_json_sig17(value)?)?;
    Ok(())
}
