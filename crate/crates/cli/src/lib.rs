//! Commands behind the `workcf` binary: grid sweeps to CSV, verification
//! reports and work-distribution dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use workcf::experiment::Experiment;
use workcf::interferometer::{applicable, compose_with_flips, controlled, composed_script_g, gates_g1_g2, gate_g_general};
use workcf::linalg::{distance_up_to_phase, expm};
use workcf::propagate::time_ordered;
use workcf::sweep::{chi_direct_grid, readout_grid, sweep};
use workcf::workstats::{chi_direct, chi_from_distribution, crooks_delta_f_at, tpm_distribution, DEFAULT_BIN_TOL};
use workcf::{DephasingModel, Error as CoreError, Execution, Scenario, SweepRow, Variant, WorkDistribution};

pub const SWEEP_HEADER: [&str; 7] = ["u", "omega_u", "re_chi", "im_chi", "re_chi_damped", "im_chi_damped", "abs_chi"];

/// A verification the `verify` command can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Jarzynski,
    Crooks,
    RouteEquivalence,
    Decomposition,
    Propagator,
    CutoffDoubling,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Jarzynski,
        Check::Crooks,
        Check::RouteEquivalence,
        Check::Decomposition,
        Check::Propagator,
        Check::CutoffDoubling,
    ];
}

fn default_variant() -> Variant {
    Variant::Appendix
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    /// Defaults to `u_only` at the scenario's `gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<DephasingModel>,
}

impl RunConfig {
    /// Thermal oscillator at `n̄ = 1`, `λ_t = 0.1 tanh(t)`, `τ = 10`, `Γ = 0.5`,
    /// cutoff 64, `u ∈ [0, 20]` step 0.05, appendix variant, all checks.
    pub fn preset_fig2c() -> Self {
        Self {
            scenario: Scenario::fig2c(),
            variant: Variant::Appendix,
            output_path: None,
            checks: all_checks(),
            dephasing: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            anyhow::anyhow!("invalid config at line {}, column {}: {e}", e.line(), e.column())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn dephasing_model(&self) -> Result<DephasingModel> {
        let m = match self.dephasing {
            Some(m) => m,
            None => DephasingModel::new(self.scenario.gamma)?,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Builds the file only after every row is computed, so failures leave no output.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    // Sibling temp file so the rename stays on one filesystem.
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(name);
    let written = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(e).with_context(|| format!("writing {}", path.display()));
    }
    Ok(())
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_value(r.u),
            fmt_value(r.omega_u),
            fmt_value(r.chi.re),
            fmt_value(r.chi.im),
            fmt_value(r.chi_damped.re),
            fmt_value(r.chi_damped.im),
            fmt_value(r.chi.norm()),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn run_sweep(cfg: &RunConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    if cfg.scenario.u_grid.is_empty() {
        bail!("u_grid is empty; nothing to sweep");
    }
    let exp = Experiment::new(&cfg.scenario)?;
    if !applicable(&exp, cfg.variant) {
        bail!("variant {} does not apply to this scenario", cfg.variant);
    }
    Ok(sweep(&exp, &cfg.scenario.u_grid, cfg.variant, &cfg.dephasing_model()?, exec)?)
}

/// Sweeps the grid and writes the CSV; returns the number of rows.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let rows = run_sweep(cfg, Execution::default())?;
    write_atomically(out, &sweep_csv(&rows)?)?;
    Ok(rows.len())
}

pub fn pw_csv(dist: &WorkDistribution) -> Result<Vec<u8>> {
    let total = dist.total_probability();
    if (total - 1.0).abs() > 1e-10 {
        bail!("work distribution sums to {total}");
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["W", "probability"])?;
    for &(x, p) in dist.points() {
        w.write_record([fmt_value(x), fmt_value(p)])?;
    }
    Ok(w.into_inner()?)
}

pub fn work_distribution(cfg: &RunConfig) -> Result<WorkDistribution> {
    let exp = Experiment::new(&cfg.scenario)?;
    Ok(tpm_distribution(exp.forward(), DEFAULT_BIN_TOL * cfg.scenario.omega)?)
}

pub fn cmd_pw(cfg: &RunConfig, out: &Path) -> Result<WorkDistribution> {
    let dist = work_distribution(cfg)?;
    write_atomically(out, &pw_csv(&dist)?)?;
    Ok(dist)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            residual,
            tolerance,
            // NaN residuals fail.
            passed: residual < tolerance,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub cutoff: usize,
    pub variant: Variant,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("verification at cutoff {} ({} variant)\n", self.cutoff, self.variant);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<6} {:<34} residual {:.3e}  tolerance {:.0e}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance,
                c.detail
            );
        }
        let _ = writeln!(s, "{}", if self.passed { "all checks passed" } else { "some checks failed" });
        s
    }
}

fn max_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn direct_values(exp: &Experiment, grid: &[f64]) -> Result<Vec<Complex64>> {
    Ok(chi_direct_grid(exp.forward(), grid, Execution::default())?
        .into_iter()
        .map(|s| s.value)
        .collect())
}

fn check_jarzynski(exp: &Experiment) -> Result<CheckResult> {
    let beta = exp.scenario().beta;
    let fe = exp.forward().free_energy()?;
    let jar = chi_direct(Complex64::new(0.0, beta), exp.forward())?.value;
    let target = (-beta * fe.delta_f).exp();
    Ok(CheckResult::new(
        "jarzynski",
        (jar - target).norm() / target,
        1e-6,
        format!("chi(i beta) = {:.12}, dF = {:.3e}", jar.re, fe.delta_f),
    ))
}

fn check_crooks(exp: &Experiment, grid: &[f64]) -> Result<CheckResult> {
    let fe = exp.forward().free_energy()?;
    let back = exp.backward()?;
    let mut worst: f64 = 0.0;
    let mut worst_phase: f64 = 0.0;
    let mut skipped = 0;
    for &u in grid {
        match crooks_delta_f_at(u, exp.forward(), &back) {
            Ok(est) => {
                worst = worst.max((est.delta_f - fe.delta_f).abs());
                worst_phase = worst_phase.max(est.ratio.arg().abs());
            }
            Err(CoreError::UndefinedRatio { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let mut result = CheckResult::new(
        "crooks",
        worst,
        1e-6,
        format!(
            "max |dF(u) - dF| over {} u values ({skipped} skipped at chi = 0), max ratio phase {worst_phase:.1e}",
            grid.len() - skipped
        ),
    );
    result.passed &= worst_phase < 1e-8;
    Ok(result)
}

fn check_routes(exp: &Experiment, variant: Variant, grid: &[f64]) -> Result<Vec<CheckResult>> {
    let direct = direct_values(exp, grid)?;
    let dist = tpm_distribution(exp.forward(), DEFAULT_BIN_TOL * exp.scenario().omega)?;
    let from_dist: Vec<Complex64> = grid.iter().map(|&u| chi_from_distribution(u, &dist).value).collect();
    let mut out = vec![CheckResult::new(
        "route_equivalence.distribution",
        max_norm(&direct, &from_dist),
        1e-9,
        format!("direct trace vs work distribution, {} points", grid.len()),
    )];
    if applicable(exp, variant) {
        let readout = readout_grid(exp, grid, variant, Execution::default())?;
        out.push(CheckResult::new(
            "route_equivalence.protocol",
            max_norm(&direct, &readout),
            1e-8,
            format!("{variant} readout vs direct trace, {} points", grid.len()),
        ));
    }
    Ok(out)
}

fn sample_grid(grid: &[f64], n: usize) -> Vec<f64> {
    if grid.len() <= n {
        return grid.to_vec();
    }
    (0..n).map(|k| grid[k * (grid.len() - 1) / (n - 1)]).collect()
}

fn check_decomposition(exp: &Experiment, grid: &[f64]) -> Result<Vec<CheckResult>> {
    let p = exp.forward();
    let mut general: f64 = 0.0;
    for &u in grid {
        let g = gate_g_general(u, p.h_initial(), p.h_final(), p.propagator())?;
        let (g1, g2) = gates_g1_g2(u, p.h_initial(), p.h_final(), p.propagator())?;
        general = general.max(compose_with_flips(&g1, &g2).max_abs_diff(&g));
    }
    let mut out = vec![CheckResult::new(
        "decomposition.general",
        general,
        1e-10,
        format!("flip-sandwiched split, {} u values", grid.len()),
    )];
    if applicable(exp, Variant::Appendix) {
        let d = exp.displacement();
        let mut worst: f64 = 0.0;
        for &u in grid {
            let ei = expm(p.h_initial(), Complex64::new(0.0, -u))?;
            let ef = expm(p.h_final(), Complex64::new(0.0, -u))?;
            let rhs = controlled(&(d * &ei), &(&ef * d));
            worst = worst.max(composed_script_g(u, exp).max_abs_diff(&rhs));
        }
        out.push(CheckResult::new(
            "decomposition.appendix",
            worst,
            1e-8,
            format!("conditioned-drive composition, {} u values", grid.len()),
        ));
    }
    Ok(out)
}

/// Steps used for the propagator check.
pub const PROPAGATOR_STEPS: usize = 1 << 14;

fn check_propagator(exp: &Experiment) -> Result<CheckResult> {
    let s = exp.scenario();
    let st = time_ordered(exp.system(), &s.drive, s.phi, s.tau, PROPAGATOR_STEPS)?.unitary;
    let low = (s.cutoff / 2).max(1);
    let cf = exp.forward().propagator();
    let residual = distance_up_to_phase(&st.leading_block(low), &cf.leading_block(low));
    Ok(CheckResult::new(
        "propagator",
        residual,
        1e-6,
        format!("stepped ({PROPAGATOR_STEPS} steps) vs closed form on the leading {low} Fock levels"),
    ))
}

fn check_cutoff(exp: &Experiment, grid: &[f64]) -> Result<CheckResult> {
    let s = exp.scenario();
    let doubled = Experiment::new(&s.clone().with_cutoff(2 * s.cutoff))?;
    let mut worst = max_norm(&direct_values(exp, grid)?, &direct_values(&doubled, grid)?);
    let beta = Complex64::new(0.0, s.beta);
    let j1 = chi_direct(beta, exp.forward())?.value;
    let j2 = chi_direct(beta, doubled.forward())?.value;
    worst = worst.max((j1 - j2).norm());
    let f1 = exp.forward().free_energy()?.delta_f;
    let f2 = doubled.forward().free_energy()?.delta_f;
    worst = worst.max((f1 - f2).abs());
    Ok(CheckResult::new(
        "cutoff_doubling",
        worst,
        1e-8,
        format!("chi on the grid, chi(i beta) and dF at cutoff {} vs {}", s.cutoff, 2 * s.cutoff),
    ))
}

/// Runs every enabled check. Operator-level checks use at most 9 grid points.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let exp = Experiment::new(&cfg.scenario)?;
    let grid = &cfg.scenario.u_grid;
    let mut checks = Vec::new();
    for check in &cfg.checks {
        match check {
            Check::Jarzynski => checks.push(check_jarzynski(&exp)?),
            Check::Crooks => checks.push(check_crooks(&exp, grid)?),
            Check::RouteEquivalence => checks.extend(check_routes(&exp, cfg.variant, grid)?),
            Check::Decomposition => checks.extend(check_decomposition(&exp, &sample_grid(grid, 9))?),
            Check::Propagator => checks.push(check_propagator(&exp)?),
            Check::CutoffDoubling => checks.push(check_cutoff(&exp, grid)?),
        }
    }
    Ok(VerifyReport {
        cutoff: cfg.scenario.cutoff,
        variant: cfg.variant,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Writes the JSON report to `out`.
pub fn write_report(report: &VerifyReport, out: &Path) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_atomically(out, &json)
}
