//! CSV schemas for traces, diagnostics and sweeps.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::sweep::HorizonSweepRow;
use crate::diagnostics::BiasVarianceTable;
use crate::error::Result;
use crate::q_learning::TraceRecord;
use crate::vr_q_learning::VrTraceRecord;

/// `trajectory,iter,samples,error`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub trajectory: u64,
    pub iter: usize,
    pub samples: u64,
    pub error: Option<f64>,
}

/// `trajectory,epoch,inner_iter,samples,error`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrTraceRow {
    pub trajectory: u64,
    pub epoch: usize,
    pub inner_iter: usize,
    pub samples: u64,
    pub error: Option<f64>,
}

/// `n,cell_s,cell_a,bias,var,stderr_bias,stderr_var`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVarianceRowCsv {
    pub n: usize,
    pub cell_s: usize,
    pub cell_a: usize,
    pub bias: f64,
    pub var: f64,
    pub stderr_bias: f64,
    pub stderr_var: f64,
}

/// `gamma,horizon,eps,mean_samples,trajectories`; `mean_samples` is empty
/// and `trajectories` counts only successful runs when a row is flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub horizon: f64,
    pub eps: f64,
    pub mean_samples: Option<f64>,
    pub trajectories: usize,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        Self {
            trajectory: r.trajectory,
            iter: r.iter,
            samples: r.samples,
            error: r.error,
        }
    }
}

impl From<&VrTraceRecord> for VrTraceRow {
    fn from(r: &VrTraceRecord) -> Self {
        Self {
            trajectory: r.trajectory,
            epoch: r.epoch,
            inner_iter: r.inner_iter,
            samples: r.samples,
            error: r.error,
        }
    }
}

impl From<&HorizonSweepRow> for SweepRow {
    fn from(r: &HorizonSweepRow) -> Self {
        Self {
            gamma: r.gamma,
            horizon: r.horizon,
            eps: r.eps,
            mean_samples: if r.flagged() { None } else { r.mean_samples },
            trajectories: r.reached,
        }
    }
}

pub fn bias_variance_rows(table: &BiasVarianceTable) -> Vec<BiasVarianceRowCsv> {
    table
        .rows
        .iter()
        .flat_map(|row| {
            row.cells.iter().map(move |c| BiasVarianceRowCsv {
                n: row.n,
                cell_s: c.s,
                cell_a: c.a,
                bias: c.bias,
                var: c.var,
                stderr_bias: c.stderr_bias,
                stderr_var: c.stderr_var,
            })
        })
        .collect()
}

/// Writes `rows` with a header line.
pub fn write_rows<W: Write, R: Serialize>(writer: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}
