//! Protocol and oracle evaluations over a `u` grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::Experiment;
use crate::interferometer::{run_protocol, DephasingModel, Variant};
use crate::parallel::Execution;
use crate::workstats::{chi_direct, ChiSample, Process};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub u: f64,
    pub omega_u: f64,
    pub chi: Complex64,
    pub chi_damped: Complex64,
}

/// Undamped and damped readout at every grid point, in grid order.
pub fn sweep(
    exp: &Experiment,
    grid: &[f64],
    variant: Variant,
    dephasing: &DephasingModel,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    dephasing.validate()?;
    let omega = exp.scenario().omega;
    exec.try_map(grid, |&u| {
        let chi = run_protocol(u, exp, variant, None)?.chi_readout;
        let chi_damped = run_protocol(u, exp, variant, Some(dephasing))?.chi_readout;
        Ok(SweepRow {
            u,
            omega_u: omega * u,
            chi,
            chi_damped,
        })
    })
}

/// Readout without dephasing.
pub fn readout_grid(exp: &Experiment, grid: &[f64], variant: Variant, exec: Execution) -> Result<Vec<Complex64>> {
    exec.try_map(grid, |&u| Ok(run_protocol(u, exp, variant, None)?.chi_readout))
}

/// [`chi_direct`] at every real grid point.
pub fn chi_direct_grid(process: &Process, grid: &[f64], exec: Execution) -> Result<Vec<ChiSample>> {
    exec.try_map(grid, |&u| chi_direct(Complex64::new(u, 0.0), process))
}
