//! The separation experiment: basic trajectory against exact optima with
//! smaller buffers, next to the recurrence bounds.

use std::io::Write;

use num_rational::BigRational;
use serde::Serialize;

use crate::bounds::{t_hat, tau, TauParams};
use crate::genesis::{build_instance, GenesisError};
use crate::model::{Instance, Schedule};
use crate::optsolve::{SolveError, SolveLimits, Solver};
use crate::policies::{simulate, PolicyError, PolicyId};

pub const CSV_HEADER: &str =
    "ell,phases,beta,buffer,method,cost,tau_bound,t_hat_bound,ratio,optimal_flag";

/// Largest `ell` the experiment accepts unless forced.
pub const DEFAULT_ELL_LIMIT: u32 = 3;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExperimentRow {
    pub ell: u32,
    pub phases: u32,
    pub beta: u32,
    pub buffer: usize,
    pub method: String,
    pub cost: u64,
    pub tau_bound: Option<f64>,
    pub t_hat_bound: Option<u64>,
    /// `cost` over the optimum with buffer `ell`.
    pub ratio: Option<f64>,
    pub optimal_flag: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("solver gave no schedule for ell={ell} buffer={buffer}: {source}")]
    Solver {
        ell: u32,
        buffer: usize,
        source: SolveError,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One solved or simulated configuration, kept so callers can render it.
#[derive(Clone, Debug)]
pub struct Run {
    pub row: ExperimentRow,
    pub instance: Instance,
    pub schedule: Option<Schedule>,
}

#[derive(Clone, Debug)]
pub struct SeparationConfig {
    pub ell_max: u32,
    pub phases: Vec<u32>,
    pub limits: SolveLimits,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig {
            ell_max: DEFAULT_ELL_LIMIT,
            phases: vec![1, 2],
            limits: SolveLimits::default(),
        }
    }
}

fn rational(n: u32, d: u32) -> BigRational {
    BigRational::new((n as i64).into(), (d as i64).into())
}

/// Rows for every `ell` in `1..=ell_max` and every phase count: the basic
/// trajectory with buffer `ell`, the optimum with buffer `ell`, then the
/// optimum for each smaller buffer.
pub fn run_separation(config: &SeparationConfig) -> Result<Vec<Run>, ExperimentError> {
    let solver = Solver::new(config.limits);
    let mut runs = Vec::new();
    for ell in 1..=config.ell_max {
        for &phases in &config.phases {
            let instance = build_instance(ell, phases, 1, (1usize << ell) + 1)?;
            let solve = |buffer: usize| -> Result<(u64, bool, Option<Schedule>), ExperimentError> {
                match solver.solve(&instance, buffer) {
                    Ok(s) => Ok((s.report.total_cost, true, Some(s.schedule))),
                    Err(SolveError::ResourceExceeded {
                        upper_bound: Some(upper),
                        ..
                    }) => Ok((upper, false, None)),
                    Err(source) => Err(ExperimentError::Solver {
                        ell,
                        buffer,
                        source,
                    }),
                }
            };
            let full = ell as usize;
            let (opt_full, opt_exact, opt_schedule) = solve(full)?;
            let ratio = |cost: u64| Some(cost as f64 / opt_full as f64);
            let t_hat_bound = |buffer: usize| Some(phases as u64 * t_hat(buffer as u32, ell, 0));

            let (bt_schedule, bt) = simulate(PolicyId::BasicTrajectory, &instance, full)?;
            let row = |buffer, method: &str, cost, tau_bound, optimal_flag| ExperimentRow {
                ell,
                phases,
                beta: 1,
                buffer,
                method: method.to_string(),
                cost,
                tau_bound,
                t_hat_bound: t_hat_bound(buffer),
                ratio: ratio(cost),
                optimal_flag,
            };
            runs.push(Run {
                row: row(
                    full,
                    PolicyId::BasicTrajectory.name(),
                    bt.total_cost,
                    None,
                    false,
                ),
                instance: instance.clone(),
                schedule: Some(bt_schedule),
            });
            runs.push(Run {
                row: row(full, "opt", opt_full, None, opt_exact),
                instance: instance.clone(),
                schedule: opt_schedule,
            });
            for buffer in 1..full {
                let params = TauParams::new(rational(ell - buffer as u32, ell))
                    .expect("eta lies in (0, 1) for 0 < buffer < ell");
                let bound = tau(&rational(buffer as u32, 1), ell, 0, &params).to_f64();
                let (cost, exact, schedule) = solve(buffer)?;
                runs.push(Run {
                    row: row(buffer, "opt", cost, Some(phases as f64 * bound), exact),
                    instance: instance.clone(),
                    schedule,
                });
            }
        }
    }
    Ok(runs)
}

fn float_cell(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// Writes the rows under [`CSV_HEADER`]. Output is byte-identical for equal
/// rows.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), ExperimentError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        writer.write_record([
            row.ell.to_string(),
            row.phases.to_string(),
            row.beta.to_string(),
            row.buffer.to_string(),
            row.method.clone(),
            row.cost.to_string(),
            float_cell(row.tau_bound),
            row.t_hat_bound.map_or_else(String::new, |v| v.to_string()),
            float_cell(row.ratio),
            row.optimal_flag.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ExperimentRow]) -> String {
    let mut out = Vec::new();
    write_csv(rows, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("csv is utf-8")
}
