//! Candidate-versus-reference evaluation: per-layer deviations, their
//! aggregates over instances and equal-layer comparisons with the linear
//! schedule.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use falqon_core::dataset::{Dataset, Split};
use falqon_core::fmt::sig17;
use falqon_core::graph::GraphInstance;
use falqon_core::metrics::{aggregate, deviations, DeviationSeries};
use falqon_core::schedules::{linear_schedule, replay_curve, run_falqon, unweighted_baseline, ParameterCurve, Trajectory};
use falqon_core::{Error, Result};

use crate::args::{EvalMode, Evaluate};
use crate::commands::write_json;
use crate::output::{collect_instances, curve_path, OutDir, Provenance};

const CURVE_SUFFIXES: &[&str] = &[".curve.txt"];

struct Case {
    name: String,
    instance: GraphInstance,
    reference: ParameterCurve,
}

struct Evaluated {
    name: String,
    n: usize,
    dev: DeviationSeries,
    reference: Trajectory,
    candidate: Trajectory,
    linear: Trajectory,
}

#[derive(Serialize)]
struct Summary {
    provenance: Vec<String>,
    mode: EvalMode,
    instances: usize,
    ell: usize,
    /// Layer-averaged mean absolute deviations.
    mean_abs_dbeta: f64,
    mean_abs_dratio: f64,
    mean_abs_dsuccess: f64,
    /// Means over instances at the final layer.
    final_ratio: Finals,
    final_success: Finals,
}

#[derive(Serialize)]
struct Finals {
    reference: f64,
    candidate: f64,
    linear: f64,
}

fn cases(args: &Evaluate) -> Result<Vec<Case>> {
    if let Some(dir) = &args.dataset {
        let split = match args.split.as_str() {
            "train" => Split::Train,
            "val" => Split::Val,
            _ => Split::Test,
        };
        let ds = Dataset::load(dir)?;
        return Ok(ds
            .records
            .into_iter()
            .filter(|r| r.split == split && args.size.map_or(true, |n| r.instance.n() == n))
            .map(|r| Case { name: r.id, instance: r.instance, reference: r.reference_curve })
            .collect());
    }
    if args.instances.is_empty() {
        return Err(Error::InvalidArgument("evaluate needs --dataset or --instances".into()));
    }
    collect_instances(&args.instances)?
        .into_par_iter()
        .map(|f| -> Result<Option<Case>> {
            let instance = f.read()?;
            if args.size.is_some_and(|n| n != instance.n()) {
                return Ok(None);
            }
            let reference = match &args.reference {
                Some(src) => ParameterCurve::read(&curve_path(src, &f.stem, CURVE_SUFFIXES)?)?,
                None => run_falqon(&instance, args.dt, args.ell)?.0,
            };
            Ok(Some(Case { name: f.stem, instance, reference }))
        })
        .filter_map(Result::transpose)
        .collect()
}

fn evaluate_case(args: &Evaluate, case: Case) -> Result<Evaluated> {
    let candidate = match (args.mode, &args.candidate) {
        (EvalMode::Baseline, _) => unweighted_baseline(&case.instance, case.reference.dt(), case.reference.ell())?,
        (_, Some(src)) => ParameterCurve::read(&curve_path(src, &case.name, CURVE_SUFFIXES)?)?,
        (EvalMode::SelfCheck, None) => case.reference.clone(),
        (EvalMode::Candidate, None) => return Err(Error::InvalidArgument("--mode candidate needs --candidate".into())),
    };
    // A self-check measures a curve against its own replay.
    let reference = if args.mode == EvalMode::SelfCheck { candidate.clone() } else { case.reference };
    let ref_traj = replay_curve(&case.instance, &reference)?;
    let cand_traj = replay_curve(&case.instance, &candidate)?;
    let linear = replay_curve(&case.instance, &linear_schedule(reference.dt(), reference.ell())?)?;
    let dev = deviations((&reference, &ref_traj), (&candidate, &cand_traj))?;
    Ok(Evaluated { name: case.name, n: case.instance.n(), dev, reference: ref_traj, candidate: cand_traj, linear })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

pub fn evaluate(args: &Evaluate, out: &OutDir, prov: &Provenance) -> Result<()> {
    let cases = cases(args)?;
    if cases.is_empty() {
        return Err(Error::InvalidArgument("no instances match the selection".into()));
    }
    let results: Vec<Evaluated> = cases.into_par_iter().map(|c| evaluate_case(args, c)).collect::<Result<_>>()?;
    let ell = results[0].dev.ell();
    if let Some(r) = results.iter().find(|r| r.dev.ell() != ell) {
        return Err(Error::DimensionMismatch { expected: ell, got: r.dev.ell() });
    }

    let mut long = String::from("instance,layer,abs_dbeta,abs_dratio,abs_dsuccess\n");
    for r in &results {
        for j in 0..ell {
            let d = &r.dev;
            let (b, a, s) = (d.beta[j], d.approx_ratio[j], d.success_prob[j]);
            writeln!(long, "{},{},{},{},{}", r.name, j + 1, sig17(b), sig17(a), sig17(s)).unwrap();
        }
    }
    out.write_with_header("deviations.csv", prov, &long)?;

    let beta = aggregate(&results.iter().map(|r| &r.dev.beta).collect::<Vec<_>>())?;
    let ratio = aggregate(&results.iter().map(|r| &r.dev.approx_ratio).collect::<Vec<_>>())?;
    let success = aggregate(&results.iter().map(|r| &r.dev.success_prob).collect::<Vec<_>>())?;
    for (name, agg) in [("beta", &beta), ("ratio", &ratio), ("success", &success)] {
        out.write_with_header(&format!("aggregate_{name}.csv"), prov, &agg.to_csv(1))?;
    }

    // Equal-layer comparison: instance means of r_A and φ after every layer.
    let mut per_layer = String::from(
        "layer,ratio_reference,ratio_candidate,ratio_linear,success_reference,success_candidate,success_linear\n",
    );
    for j in 0..=ell {
        let m = |f: &dyn Fn(&Evaluated) -> f64| sig17(mean(results.iter().map(f)));
        writeln!(
            per_layer,
            "{j},{},{},{},{},{},{}",
            m(&|r| r.reference.records[j].approx_ratio),
            m(&|r| r.candidate.records[j].approx_ratio),
            m(&|r| r.linear.records[j].approx_ratio),
            m(&|r| r.reference.records[j].success_prob),
            m(&|r| r.candidate.records[j].success_prob),
            m(&|r| r.linear.records[j].success_prob),
        )
        .unwrap();
    }
    out.write_with_header("equal_layer.csv", prov, &per_layer)?;

    let mut finals = String::from(
        "instance,n,ratio_reference,ratio_candidate,ratio_linear,success_reference,success_candidate,success_linear\n",
    );
    for r in &results {
        let (a, b, c) = (r.reference.last(), r.candidate.last(), r.linear.last());
        writeln!(
            finals,
            "{},{},{},{},{},{},{},{}",
            r.name,
            r.n,
            sig17(a.approx_ratio),
            sig17(b.approx_ratio),
            sig17(c.approx_ratio),
            sig17(a.success_prob),
            sig17(b.success_prob),
            sig17(c.success_prob)
        )
        .unwrap();
    }
    out.write_with_header("final_layer.csv", prov, &finals)?;

    let summary = Summary {
        provenance: prov.lines().to_vec(),
        mode: args.mode,
        instances: results.len(),
        ell,
        mean_abs_dbeta: beta.layer_average(),
        mean_abs_dratio: ratio.layer_average(),
        mean_abs_dsuccess: success.layer_average(),
        final_ratio: Finals {
            reference: mean(results.iter().map(|r| r.reference.last().approx_ratio)),
            candidate: mean(results.iter().map(|r| r.candidate.last().approx_ratio)),
            linear: mean(results.iter().map(|r| r.linear.last().approx_ratio)),
        },
        final_success: Finals {
            reference: mean(results.iter().map(|r| r.reference.last().success_prob)),
            candidate: mean(results.iter().map(|r| r.candidate.last().success_prob)),
            linear: mean(results.iter().map(|r| r.linear.last().success_prob)),
        },
    };
    write_json(out, "summary.json", &summary)?;
    println!(
        "instances {}  mean |dbeta| {}  mean |dr_A| {}  mean |dphi| {}",
        summary.instances,
        sig17(summary.mean_abs_dbeta),
        sig17(summary.mean_abs_dratio),
        sig17(summary.mean_abs_dsuccess)
    );
    Ok(())
}
