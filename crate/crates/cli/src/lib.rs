//! Runs configured experiments and writes CSV tables plus a JSON summary.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use lzsm::adiabatic::initial_ground_state;
use lzsm::analysis::{
    analyze_with_series, local_maxima, sweep_table, AnalysisOptions, SweepRow,
};
use lzsm::propagator::{evolve_converged_with, ConvergenceOptions, Hamiltonian, StateVector};
use lzsm::schedules::{ScheduleConfig, SymmetryAxis, TlsSchedule};
use lzsm::ssh::{
    qsl_time, reduced_schedule, reduced_transport_probability, spectrum_vs_time,
    transport_probability, ChainHamiltonian, ChainModel, TRANSPORT_HEADER,
};
use lzsm::table::Table;
use lzsm::verify::{run_suite, Suite, Target, VerifyReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{CliError, CliResult, Experiment, Resolution, RunConfig, SweepSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedRow {
    pub param: f64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub rows: usize,
    pub failed_rows: Vec<FailedRow>,
    /// Local maxima `[param, value]` per output column.
    pub peaks: BTreeMap<String, Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tm_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qsl_time: Option<f64>,
    pub wall_time_s: f64,
}

/// Executes `cfg`, writing every output under `cfg.out`.
pub fn run(cfg: &RunConfig) -> CliResult<Summary> {
    cfg.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&cfg.out)?;
    let body = || match cfg.experiment {
        Experiment::Ssh => run_ssh(cfg),
        _ => run_tls(cfg),
    };
    let mut summary = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(e.to_string()))?
            .install(body),
        None => body(),
    }?;
    summary.outputs.push("summary.json".into());
    summary.wall_time_s = started.elapsed().as_secs_f64();
    fs::write(cfg.out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

fn converged_steps<H: Hamiltonian + ?Sized>(h: &H, psi0: &StateVector, total: f64, tol: f64) -> lzsm::Result<usize> {
    let opts = ConvergenceOptions { tol, min_steps: 256, max_steps: 1 << 22 };
    Ok(evolve_converged_with(h, psi0, 0.0, total, opts)?.1)
}

fn tls_steps(sched: &TlsSchedule, res: Resolution) -> lzsm::Result<Option<usize>> {
    match res {
        Resolution::Default => Ok(None),
        Resolution::Steps(n) => Ok(Some(n)),
        Resolution::Tol(tol) => {
            converged_steps(sched, &initial_ground_state(sched)?, sched.total_time(), tol).map(Some)
        }
    }
}

fn chain_steps(model: &ChainModel, res: Resolution) -> lzsm::Result<Option<usize>> {
    match res {
        Resolution::Default => Ok(None),
        Resolution::Steps(n) => Ok(Some(n)),
        Resolution::Tol(tol) => {
            let psi0 = StateVector::basis(model.sites(), 0);
            converged_steps(&ChainHamiltonian(model), &psi0, model.total_time, tol).map(Some)
        }
    }
}

fn write_table(out: &Path, name: &str, table: &Table, outputs: &mut Vec<String>) -> CliResult<()> {
    fs::write(out.join(name), table.to_csv())?;
    outputs.push(name.into());
    Ok(())
}

fn finite_maxima(table: &Table, x: &str, y: &str) -> Vec<[f64; 2]> {
    let (xs, ys) = (table.column(x).unwrap_or_default(), table.column(y).unwrap_or_default());
    let (xs, ys): (Vec<f64>, Vec<f64>) = xs.into_iter().zip(ys).filter(|(_, v)| v.is_finite()).unzip();
    local_maxima(&xs, &ys).into_iter().map(|(a, b)| [a, b]).collect()
}

fn run_tls(cfg: &RunConfig) -> CliResult<Summary> {
    let mut outputs = Vec::new();
    let (params, schedules): (Vec<f64>, Vec<(TlsSchedule, SymmetryAxis)>) = match &cfg.sweep {
        Some(sweep) => {
            let values = sweep.values();
            let built = values
                .iter()
                .map(|&v| Ok(cfg.schedule_at(&sweep.axis, v)?.build()?))
                .collect::<CliResult<Vec<_>>>()?;
            (values, built)
        }
        None => {
            let sched = cfg.schedule.as_ref().expect("validated").build()?;
            (vec![cfg.default_param()], vec![sched])
        }
    };
    let analysed: Vec<(SweepRow, Option<Table>)> = params
        .par_iter()
        .zip(schedules.par_iter())
        .map(|(&param, (sched, axis))| {
            let result = tls_steps(sched, cfg.resolution).and_then(|n_steps| {
                analyze_with_series(sched, *axis, AnalysisOptions { n_steps, rule: cfg.tf_rule })
            });
            match result {
                Ok((report, occ)) => {
                    let mut t = Table::new(["t", "P_minus", "dP_minus"]);
                    for k in 0..occ.times.len() {
                        t.push(vec![occ.times[k], occ.p_minus[k], occ.dp_minus[k]]);
                    }
                    (SweepRow { param, result: Ok(report) }, Some(t))
                }
                Err(e) => (SweepRow { param, result: Err(e) }, None),
            }
        })
        .collect();
    let (rows, series): (Vec<SweepRow>, Vec<Option<Table>>) = analysed.into_iter().unzip();

    if rows.iter().all(|r| r.result.is_err()) {
        let first = rows.into_iter().next().expect("at least one row");
        return Err(first.result.unwrap_err().into());
    }
    let table = sweep_table(&rows);
    write_table(&cfg.out, "sweep.csv", &table, &mut outputs)?;
    if cfg.sweep.is_none() {
        if let Some(Some(occ)) = series.first() {
            write_table(&cfg.out, "occupation.csv", occ, &mut outputs)?;
        }
    }
    let failed_rows = rows
        .iter()
        .filter_map(|r| r.result.as_ref().err().map(|e| FailedRow { param: r.param, error: e.to_string() }))
        .collect();
    let max_tm_deviation = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|r| (r.p_mm_tm - r.p_mm_num).abs())
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    let mut peaks = BTreeMap::new();
    peaks.insert("P_mm_num".to_string(), finite_maxima(&table, "param", "P_mm_num"));
    peaks.insert("P_mm_tm".to_string(), finite_maxima(&table, "param", "P_mm_tm"));
    Ok(Summary {
        config: cfg.clone(),
        outputs,
        rows: rows.len(),
        failed_rows,
        peaks,
        max_tm_deviation,
        qsl_time: None,
        wall_time_s: 0.0,
    })
}

fn run_ssh(cfg: &RunConfig) -> CliResult<Summary> {
    let mut outputs = Vec::new();
    let base = cfg.chain.expect("validated");
    let totals = cfg.sweep.as_ref().map_or_else(|| vec![base.total_time], SweepSpec::values);
    let models = totals
        .iter()
        .map(|&t| Ok(base.with_total_time(t)?))
        .collect::<CliResult<Vec<_>>>()?;
    let results: Vec<lzsm::Result<(f64, f64)>> = models
        .par_iter()
        .map(|m| {
            let chain = transport_probability(m, chain_steps(m, cfg.resolution)?)?;
            let reduced_steps = tls_steps(&reduced_schedule(m)?, cfg.resolution)?;
            Ok((chain, reduced_transport_probability(m, reduced_steps)?))
        })
        .collect();
    if results.iter().all(|r| r.is_err()) {
        return Err(results.into_iter().next().expect("at least one row").unwrap_err().into());
    }
    let mut table = Table::new(TRANSPORT_HEADER);
    let mut failed_rows = Vec::new();
    for (&t, r) in totals.iter().zip(&results) {
        match r {
            Ok((a, b)) => table.push(vec![t, *a, *b]),
            Err(e) => {
                table.push(vec![t, f64::NAN, f64::NAN]);
                failed_rows.push(FailedRow { param: t, error: e.to_string() });
            }
        }
    }
    write_table(&cfg.out, "transport.csv", &table, &mut outputs)?;
    let n = cfg.spectrum_points - 1;
    let grid: Vec<f64> = (0..=n).map(|k| base.total_time * k as f64 / n as f64).collect();
    write_table(&cfg.out, "spectrum.csv", &spectrum_vs_time(&base, &grid)?, &mut outputs)?;
    let mut peaks = BTreeMap::new();
    peaks.insert("P_2N".to_string(), finite_maxima(&table, "T", "P_2N"));
    peaks.insert("P_mm_reduced".to_string(), finite_maxima(&table, "T", "P_mm_reduced"));
    Ok(Summary {
        config: cfg.clone(),
        outputs,
        rows: totals.len(),
        failed_rows,
        peaks,
        max_tm_deviation: None,
        qsl_time: Some(qsl_time(&base)?),
        wall_time_s: 0.0,
    })
}

/// Runs one verification suite, on `schedule` when given.
pub fn verify(suite: Suite, schedule: Option<&ScheduleConfig>) -> CliResult<VerifyReport> {
    let target = match schedule {
        Some(cfg) => {
            let (sched, axis) = cfg.build()?;
            Target { name: serde_json::to_string(cfg)?, sched, axis }
        }
        None => Target::default_example(),
    };
    Ok(run_suite(suite, &target)?)
}
