//! Hamiltonians, drive profiles and equilibrium quantities for the driven
//! oscillator coupled to a two-level ancilla.
//!
//! Energies and times are expressed in units of the oscillator frequency when
//! `omega = 1`, but nothing here assumes that.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, kron, qubit, ComplexMatrix, EigenSystem};

/// Default Fock-space truncation.
pub const DEFAULT_CUTOFF: usize = 64;

/// Time dependence of the work parameter `λ_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveProfile {
    /// `λ_0 = 0`, then `λ_final` for every `t > 0`.
    Sudden { lambda_final: f64 },
    /// `λ_final` at all times, including `t = 0`.
    Constant { lambda_final: f64 },
    /// `λ_final * tanh(ramp_rate * t)`.
    TanhRamp { lambda_final: f64, ramp_rate: f64 },
    /// Piecewise-linear through `(t, λ)` samples, clamped outside the table.
    Tabulated { table: Vec<(f64, f64)> },
}

impl DriveProfile {
    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("drive {what} must be finite")))
            }
        };
        match self {
            Self::Sudden { lambda_final } | Self::Constant { lambda_final } => {
                finite(*lambda_final, "lambda_final")
            }
            Self::TanhRamp {
                lambda_final,
                ramp_rate,
            } => {
                finite(*lambda_final, "lambda_final")?;
                finite(*ramp_rate, "ramp_rate")
            }
            Self::Tabulated { table } => {
                if table.is_empty() {
                    return Err(Error::InvalidParameter("drive table is empty".into()));
                }
                for &(t, l) in table {
                    finite(t, "table time")?;
                    finite(l, "table value")?;
                }
                if table.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidParameter(
                        "drive table times must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `λ_t`. Tabulated profiles clamp to their first/last sample outside the table.
    pub fn value_at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "drive evaluated at negative time {t}");
        match self {
            Self::Sudden { lambda_final } => {
                if t > 0.0 {
                    *lambda_final
                } else {
                    0.0
                }
            }
            Self::Constant { lambda_final } => *lambda_final,
            Self::TanhRamp {
                lambda_final,
                ramp_rate,
            } => lambda_final * (ramp_rate * t).tanh(),
            Self::Tabulated { table } => interpolate(table, t),
        }
    }

    /// `lim_{s→t+} λ_s`. Differs from [`value_at`](Self::value_at) only for the
    /// sudden profile at `t = 0`; quadratures use this so the jump does not
    /// register as a sample.
    pub fn right_limit(&self, t: f64) -> f64 {
        match self {
            Self::Sudden { lambda_final } => *lambda_final,
            _ => self.value_at(t),
        }
    }
}

fn interpolate(table: &[(f64, f64)], t: f64) -> f64 {
    let (t0, l0) = table[0];
    let (tn, ln) = table[table.len() - 1];
    if t <= t0 {
        return l0;
    }
    if t >= tn {
        return ln;
    }
    let k = table.partition_point(|&(ti, _)| ti <= t);
    let (ta, la) = table[k - 1];
    let (tb, lb) = table[k];
    la + (lb - la) * (t - ta) / (tb - ta)
}

/// Truncated harmonic oscillator with ladder operators in the Fock basis.
#[derive(Clone, Debug)]
pub struct OscillatorSystem {
    pub omega: f64,
    pub cutoff: usize,
    /// Annihilation operator, `b[n-1, n] = sqrt(n)`.
    pub b: ComplexMatrix,
    pub bdag: ComplexMatrix,
}

impl OscillatorSystem {
    pub fn new(omega: f64, cutoff: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if cutoff < 2 {
            return Err(Error::InvalidParameter(format!("Fock cutoff must be >= 2, got {cutoff}")));
        }
        let b = ComplexMatrix::from_fn(cutoff, cutoff, |i, j| {
            if j == i + 1 {
                Complex64::new((j as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let bdag = b.adjoint();
        Ok(Self {
            omega,
            cutoff,
            b,
            bdag,
        })
    }

    /// `b^† b`.
    pub fn number(&self) -> ComplexMatrix {
        let diag: Vec<f64> = (0..self.cutoff).map(|n| n as f64).collect();
        ComplexMatrix::from_real_diagonal(&diag)
    }

    /// `b^† e^{iφ} + b e^{-iφ}`.
    pub fn quadrature(&self, phi: f64) -> ComplexMatrix {
        let e = Complex64::from_polar(1.0, phi);
        &self.bdag.scale(e) + &self.b.scale(e.conj())
    }
}

/// `ω b^† b`, diagonal `(0, ω, 2ω, ...)`.
pub fn h_free(sys: &OscillatorSystem) -> ComplexMatrix {
    let diag: Vec<f64> = (0..sys.cutoff).map(|n| sys.omega * n as f64).collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// `ω b^† b + λ (b^† e^{iφ} + b e^{-iφ})`.
pub fn h_osc(sys: &OscillatorSystem, lambda: f64, phi: f64) -> ComplexMatrix {
    h_free(sys) + sys.quadrature(phi).scale_real(lambda)
}

/// Ancilla-conditioned drive: `ω b^† b ⊗ 1 + λ (b^† e^{iφ} + b e^{-iφ}) ⊗ |1><1|`.
pub fn h_micro(sys: &OscillatorSystem, lambda: f64, phi: f64) -> ComplexMatrix {
    kron(&h_free(sys), &ComplexMatrix::identity(2))
        + kron(&sys.quadrature(phi).scale_real(lambda), &qubit::proj1())
}

/// Charge-qubit coupling: `ω b^† b ⊗ 1 + λ (b + b^†) ⊗ Σ_x`.
///
/// Logical ancilla order is `(|a_-⟩, |a_+⟩)`; `Σ_x` is the same matrix in
/// either order.
pub fn h_nano(sys: &OscillatorSystem, lambda: f64) -> ComplexMatrix {
    kron(&h_free(sys), &ComplexMatrix::identity(2))
        + kron(&sys.quadrature(0.0).scale_real(lambda), &qubit::sigma_x())
}

/// [`h_nano`] plus the local beam term `λ (b + b^†) ⊗ 1`.
pub fn h_nano_plus(sys: &OscillatorSystem, lambda: f64) -> ComplexMatrix {
    h_nano(sys, lambda) + kron(&sys.quadrature(0.0).scale_real(lambda), &ComplexMatrix::identity(2))
}

/// Charge-qubit Hadamard `(Σ_x + Σ_z)/√2` with `Σ_z = |a_+><a_+| - |a_-><a_-|`,
/// written in the logical order `(|a_-⟩, |a_+⟩)`.
pub fn charge_qubit_hadamard() -> ComplexMatrix {
    (qubit::sigma_x() - qubit::sigma_z()).scale_real(FRAC_1_SQRT_2)
}

/// `(1 ⊗ H_A) M (1 ⊗ H_A)` with the charge-qubit Hadamard.
///
/// Applied to [`h_nano_plus`] this yields `ω b^† b + 2λ (b + b^†) ⊗ |a_+><a_+|`,
/// i.e. [`h_micro`] with coupling `2λ` and `φ = 0`.
pub fn nano_to_micro(h: &ComplexMatrix, sys: &OscillatorSystem) -> Result<ComplexMatrix> {
    let d = 2 * sys.cutoff;
    if h.rows() != d || h.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected a {d}x{d} system-ancilla operator, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let u = kron(&ComplexMatrix::identity(sys.cutoff), &charge_qubit_hadamard());
    Ok(&(&u * h) * &u)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    Ok(())
}

/// Normalized Boltzmann weights over an ascending spectrum. `β = ∞` spreads
/// the weight evenly over the (numerically) degenerate ground level.
pub fn boltzmann_weights(eigenvalues: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let Some(&e0) = eigenvalues.first() else {
        return Ok(Vec::new());
    };
    let raw: Vec<f64> = if beta.is_infinite() {
        let scale = eigenvalues.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        eigenvalues
            .iter()
            .map(|&e| if e - e0 <= 1e-12 * scale { 1.0 } else { 0.0 })
            .collect()
    } else {
        eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).collect()
    };
    let z: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / z).collect())
}

/// `ln Tr e^{-βH}` from a spectrum, shifted by the ground energy to avoid overflow.
pub fn log_partition(eigenvalues: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("partition function needs finite beta".into()));
    }
    let e0 = eigenvalues
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidParameter("empty spectrum".into()))?;
    let shifted: f64 = eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
    Ok(-beta * e0 + shifted.ln())
}

/// Gibbs state built from an existing eigendecomposition.
pub fn thermal_state_from(eig: &EigenSystem, beta: f64) -> Result<ComplexMatrix> {
    let p = boltzmann_weights(&eig.eigenvalues, beta)?;
    let w: Vec<Complex64> = p.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    Ok(&eig.eigenvectors.scale_columns(&w) * &eig.eigenvectors.adjoint())
}

/// `e^{-βH} / Tr e^{-βH}`; `β = f64::INFINITY` gives the ground-state projector.
pub fn thermal_state(h: &ComplexMatrix, beta: f64) -> Result<ComplexMatrix> {
    check_beta(beta)?;
    thermal_state_from(&hermitian_eig(h)?, beta)
}

/// Partition functions of the initial and final Hamiltonians and the free-energy change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergy {
    pub ln_z_initial: f64,
    pub ln_z_final: f64,
    /// `-(1/β) ln(Z_f / Z_i)`.
    pub delta_f: f64,
}

impl FreeEnergy {
    pub fn from_spectra(initial: &[f64], fin: &[f64], beta: f64) -> Result<Self> {
        let ln_z_initial = log_partition(initial, beta)?;
        let ln_z_final = log_partition(fin, beta)?;
        Ok(Self {
            ln_z_initial,
            ln_z_final,
            delta_f: -(ln_z_final - ln_z_initial) / beta,
        })
    }

    pub fn z_initial(&self) -> f64 {
        self.ln_z_initial.exp()
    }

    pub fn z_final(&self) -> f64 {
        self.ln_z_final.exp()
    }
}

pub fn partition_and_free_energy(h_i: &ComplexMatrix, h_f: &ComplexMatrix, beta: f64) -> Result<FreeEnergy> {
    FreeEnergy::from_spectra(
        &hermitian_eig(h_i)?.eigenvalues,
        &hermitian_eig(h_f)?.eigenvalues,
        beta,
    )
}

/// Inverse temperature from a mean thermal occupation: `β = ln(1 + 1/n̄)/ω`.
pub fn beta_from_nbar(nbar: f64, omega: f64) -> f64 {
    (1.0 + 1.0 / nbar).ln() / omega
}

/// Mean thermal occupation `1/(e^{βω} - 1)`.
pub fn nbar_from_beta(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// Full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioConfig", into = "ScenarioConfig")]
pub struct Scenario {
    pub omega: f64,
    /// Inverse temperature, resolved from either `beta` or `nbar` in the config.
    pub beta: f64,
    /// Drive phase `φ`.
    pub phi: f64,
    /// Process duration.
    pub tau: f64,
    /// Ancilla dephasing rate.
    pub gamma: f64,
    pub cutoff: usize,
    pub drive: DriveProfile,
    pub u_grid: Vec<f64>,
}

/// A `u` grid given either as explicit values or as an inclusive range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UGrid {
    Values(Vec<f64>),
    Range(GridRange),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    /// `start + k * step` for `k = 0..=round((stop - start)/step)`.
    pub fn expand(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::InvalidParameter(format!("bad u-grid range {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step).round() as usize;
        Ok((0..=n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

/// Serialized form of [`Scenario`]; the temperature may be given as `beta`,
/// `nbar`, or both (then they must agree).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "unit_omega")]
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    pub tau: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    pub drive: DriveProfile,
    pub u_grid: UGrid,
}

fn unit_omega() -> f64 {
    1.0
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

impl TryFrom<ScenarioConfig> for Scenario {
    type Error = Error;

    fn try_from(c: ScenarioConfig) -> Result<Self> {
        let beta = match (c.beta, c.nbar) {
            (Some(b), None) => b,
            (None, Some(n)) => beta_from_nbar(n, c.omega),
            (Some(b), Some(n)) => {
                let implied = nbar_from_beta(b, c.omega);
                if (implied - n).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "beta = {b} implies nbar = {implied}, but nbar = {n} was given"
                    )));
                }
                b
            }
            (None, None) => {
                return Err(Error::InvalidParameter("temperature missing: give beta or nbar".into()))
            }
        };
        let u_grid = match c.u_grid {
            UGrid::Values(v) => v,
            UGrid::Range(r) => r.expand()?,
        };
        let s = Scenario {
            omega: c.omega,
            beta,
            phi: c.phi,
            tau: c.tau,
            gamma: c.gamma,
            cutoff: c.cutoff,
            drive: c.drive,
            u_grid,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<Scenario> for ScenarioConfig {
    fn from(s: Scenario) -> Self {
        Self {
            omega: s.omega,
            beta: Some(s.beta),
            nbar: None,
            phi: s.phi,
            tau: s.tau,
            gamma: s.gamma,
            cutoff: s.cutoff,
            drive: s.drive,
            u_grid: UGrid::Values(s.u_grid),
        }
    }
}

impl Scenario {
    /// Thermal oscillator at `n̄ = 1` driven by `λ_t = 0.1 ω tanh(ω t)` for
    /// `τ = 10/ω`, ancilla dephasing `Γ = 5/τ`, `ω = 1`. Cutoff 64, grid
    /// `u ∈ [0, 20]` in steps of `0.05`.
    pub fn fig2c() -> Self {
        let omega = 1.0;
        let tau = 10.0;
        Self {
            omega,
            beta: beta_from_nbar(1.0, omega),
            phi: 0.0,
            tau,
            gamma: 5.0 / tau,
            cutoff: DEFAULT_CUTOFF,
            drive: DriveProfile::TanhRamp {
                lambda_final: 0.1 * omega,
                ramp_rate: omega,
            },
            u_grid: GridRange {
                start: 0.0,
                stop: 20.0,
                step: 0.05,
            }
            .expand()
            .expect("static grid"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive and finite, got {}", self.beta));
        }
        if !self.phi.is_finite() {
            return bad("phi must be finite".into());
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return bad(format!("tau must be >= 0, got {}", self.tau));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if self.cutoff < 2 {
            return bad(format!("cutoff must be >= 2, got {}", self.cutoff));
        }
        if self.u_grid.iter().any(|u| !u.is_finite()) {
            return bad("u_grid values must be finite".into());
        }
        self.drive.validate()
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn nbar(&self) -> f64 {
        nbar_from_beta(self.beta, self.omega)
    }

    pub fn system(&self) -> Result<OscillatorSystem> {
        OscillatorSystem::new(self.omega, self.cutoff)
    }

    /// `λ_0`.
    pub fn lambda_initial(&self) -> f64 {
        self.drive.value_at(0.0)
    }

    /// `λ_τ`; a sudden drive with `τ = 0` has not switched yet.
    pub fn lambda_final(&self) -> f64 {
        self.drive.value_at(self.tau)
    }
}
