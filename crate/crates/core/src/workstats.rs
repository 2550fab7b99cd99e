//! Exact work statistics of a two-point-measurement process.
//!
//! These are the oracles the interferometer is checked against: the work
//! distribution itself, the characteristic function evaluated directly as a
//! trace, its commuting-case simplification, and the Jarzynski and
//! Tasaki-Crooks relations built on top.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, EigenSystem};
use crate::model::{boltzmann_weights, log_partition, thermal_state_from, FreeEnergy};

/// Default merge tolerance for coinciding work values, in units of `ω`.
pub const DEFAULT_BIN_TOL: f64 = 1e-9;

/// Work values carrying no more probability than this are not reported.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// Initial state of the system before the first energy measurement.
#[derive(Clone, Debug)]
pub enum InitialState {
    /// Gibbs state of the initial Hamiltonian.
    Thermal { beta: f64 },
    /// Arbitrary density matrix.
    Density(ComplexMatrix),
}

/// Initial and final Hamiltonians, the propagator between them and the
/// initial state. Spectral decompositions are computed once on construction.
#[derive(Clone, Debug)]
pub struct Process {
    h_initial: ComplexMatrix,
    h_final: ComplexMatrix,
    propagator: ComplexMatrix,
    initial: InitialState,
    eig_initial: EigenSystem,
    eig_final: EigenSystem,
    rho0: ComplexMatrix,
}

impl Process {
    pub fn new(
        h_initial: ComplexMatrix,
        h_final: ComplexMatrix,
        propagator: ComplexMatrix,
        initial: InitialState,
    ) -> Result<Self> {
        let n = h_initial.rows();
        for (name, m) in [("final Hamiltonian", &h_final), ("propagator", &propagator)] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let residual = propagator.unitarity_residual();
        if residual > 1e-8 {
            return Err(Error::NotUnitary { residual });
        }
        let eig_initial = hermitian_eig(&h_initial)?;
        let eig_final = hermitian_eig(&h_final)?;
        let rho0 = match &initial {
            InitialState::Thermal { beta } => thermal_state_from(&eig_initial, *beta)?,
            InitialState::Density(rho) => {
                if rho.rows() != n || rho.cols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "initial state is {}x{}, expected {n}x{n}",
                        rho.rows(),
                        rho.cols()
                    )));
                }
                rho.clone()
            }
        };
        Ok(Self {
            h_initial,
            h_final,
            propagator,
            initial,
            eig_initial,
            eig_final,
            rho0,
        })
    }

    pub fn thermal(h_initial: ComplexMatrix, h_final: ComplexMatrix, propagator: ComplexMatrix, beta: f64) -> Result<Self> {
        Self::new(h_initial, h_final, propagator, InitialState::Thermal { beta })
    }

    pub fn dim(&self) -> usize {
        self.h_initial.rows()
    }

    pub fn h_initial(&self) -> &ComplexMatrix {
        &self.h_initial
    }

    pub fn h_final(&self) -> &ComplexMatrix {
        &self.h_final
    }

    pub fn propagator(&self) -> &ComplexMatrix {
        &self.propagator
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn rho0(&self) -> &ComplexMatrix {
        &self.rho0
    }

    pub fn eig_initial(&self) -> &EigenSystem {
        &self.eig_initial
    }

    pub fn eig_final(&self) -> &EigenSystem {
        &self.eig_final
    }

    pub fn beta(&self) -> Option<f64> {
        match self.initial {
            InitialState::Thermal { beta } => Some(beta),
            InitialState::Density(_) => None,
        }
    }

    /// Equilibrium free-energy change between the initial and final Hamiltonians.
    pub fn free_energy(&self) -> Result<FreeEnergy> {
        let beta = self.beta().ok_or_else(|| {
            Error::InvalidParameter("free energy needs a thermal initial state".into())
        })?;
        FreeEnergy::from_spectra(&self.eig_initial.eigenvalues, &self.eig_final.eigenvalues, beta)
    }

    /// `e^{-iuH_i} ρ_0`.
    ///
    /// For a thermal initial state the two factors share an eigenbasis and are
    /// combined in log space, which keeps `u = iβ` (and `-u + iβ`) finite at
    /// large cutoffs where `e^{βH_i}` alone would overflow.
    pub fn evolved_initial(&self, u: Complex64) -> Result<ComplexMatrix> {
        match self.initial {
            InitialState::Thermal { beta } if beta.is_finite() => {
                let values = &self.eig_initial.eigenvalues;
                let e0 = values[0];
                let ln_z = log_partition(values, beta)? + beta * e0;
                let (a, b) = (u.re, u.im);
                Ok(self.eig_initial.spectral_map(|l| {
                    Complex64::new(b * l - beta * (l - e0) - ln_z, -a * l).exp()
                }))
            }
            _ => Ok(&self.eig_initial.exp(-Complex64::i() * u) * &self.rho0),
        }
    }
}

/// Reversed process: start thermal in the final Hamiltonian and evolve with `U^†`.
pub fn backward_process(forward: &Process) -> Result<Process> {
    let beta = forward.beta().ok_or_else(|| {
        Error::InvalidParameter("backward process needs a thermal initial state".into())
    })?;
    Process::thermal(
        forward.h_final.clone(),
        forward.h_initial.clone(),
        forward.propagator.adjoint(),
        beta,
    )
}

/// A characteristic-function value `χ(u)`; `u` may be complex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSample {
    pub u: Complex64,
    pub value: Complex64,
}

/// Discrete work distribution, `W` strictly ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkDistribution {
    points: Vec<(f64, f64)>,
}

impl WorkDistribution {
    /// Sorts, merges values closer than `bin_tol` (probability-weighted
    /// mean position), clips round-off negatives, checks normalization and
    /// drops points at or below [`PROBABILITY_FLOOR`].
    pub fn from_points(mut raw: Vec<(f64, f64)>, bin_tol: f64) -> Result<Self> {
        for &(w, p) in &raw {
            if !w.is_finite() || !p.is_finite() {
                return Err(Error::InvalidParameter("non-finite work point".into()));
            }
            if p < -1e-10 {
                return Err(Error::InvalidParameter(format!("negative probability {p:e} at W = {w}")));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut anchor = f64::NEG_INFINITY;
        let mut weighted = 0.0;
        for (w, p) in raw {
            let p = p.max(0.0);
            match points.last_mut() {
                Some(last) if w - anchor <= bin_tol => {
                    last.1 += p;
                    weighted += p * w;
                    if last.1 > 0.0 {
                        last.0 = weighted / last.1;
                    }
                }
                _ => {
                    anchor = w;
                    weighted = p * w;
                    points.push((w, p));
                }
            }
        }
        let sum: f64 = points.iter().map(|p| p.1).sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Unnormalized { sum });
        }
        points.retain(|p| p.1 > PROBABILITY_FLOOR);
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }
}

/// Groups an ascending spectrum into runs whose neighbours differ by at most `tol`.
fn degenerate_blocks(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > tol {
            blocks.push(start..k);
            start = k;
        }
    }
    blocks
}

/// Two-point-measurement work distribution
/// `P(W) = Σ_{n,m} p_n p_{m|n} δ(W - (E'_m - E_n))`.
///
/// Degenerate initial levels are handled with the eigenprojector, so the
/// result does not depend on the basis chosen inside a degenerate block.
pub fn tpm_distribution(process: &Process, bin_tol: f64) -> Result<WorkDistribution> {
    let rho = &process.rho0;
    let scale = process.h_initial.frobenius_norm().max(1.0) * rho.frobenius_norm().max(1.0);
    let residual = rho.commutator(&process.h_initial).frobenius_norm();
    if residual > 1e-8 * scale {
        return Err(Error::NonCommuting { residual });
    }
    let v = &process.eig_initial.eigenvectors;
    let w = &process.eig_final.eigenvectors;
    let r = &(&v.adjoint() * rho) * v;
    let k = &(&w.adjoint() * &process.propagator) * v;
    let e_i = &process.eig_initial.eigenvalues;
    let e_f = &process.eig_final.eigenvalues;
    let n_f = e_f.len();

    let mut raw = Vec::with_capacity(n_f * e_i.len());
    for block in degenerate_blocks(e_i, bin_tol) {
        let energy = block.clone().map(|i| e_i[i]).sum::<f64>() / block.len() as f64;
        for (m, &em) in e_f.iter().enumerate() {
            let mut p = Complex64::new(0.0, 0.0);
            for a in block.clone() {
                for b in block.clone() {
                    p += k[(m, a)] * r[(a, b)] * k[(m, b)].conj();
                }
            }
            raw.push((em - energy, p.re));
        }
    }
    WorkDistribution::from_points(raw, bin_tol)
}

/// `χ(u) = Tr[U^† e^{iuH_f} U e^{-iuH_i} ρ_0]` for any complex `u`.
pub fn chi_direct(u: Complex64, process: &Process) -> Result<ChiSample> {
    let i = Complex64::i();
    let heisenberg = &(&process.propagator.adjoint() * &process.eig_final.exp(i * u)) * &process.propagator;
    let value = heisenberg.trace_of_product(&process.evolved_initial(u)?);
    Ok(ChiSample { u, value })
}

/// Commuting case `H_i = g_0 h`, `H_f = g_τ h`: `χ(u) = Tr[e^{i(g_τ - g_0) u h} ρ_0]`.
pub fn chi_commuting(u: Complex64, h: &ComplexMatrix, g0: f64, gtau: f64, rho0: &ComplexMatrix) -> Result<ChiSample> {
    let es = hermitian_eig(h)?;
    let value = es.exp(Complex64::i() * u * (gtau - g0)).trace_of_product(rho0);
    Ok(ChiSample { u, value })
}

/// `Σ_k p_k e^{iuW_k}`.
pub fn chi_from_distribution(u: f64, dist: &WorkDistribution) -> ChiSample {
    let value = dist
        .points
        .iter()
        .map(|&(w, p)| Complex64::from_polar(p, u * w))
        .sum();
    ChiSample {
        u: Complex64::new(u, 0.0),
        value,
    }
}

/// Free energy recovered from one forward/backward pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrooksEstimate {
    pub u: f64,
    /// `(1/β) ln|χ'(-u + iβ) / χ(u)|`.
    pub delta_f: f64,
    /// `χ'(-u + iβ) / χ(u)`; real and positive when the relation holds.
    pub ratio: Complex64,
}

/// Magnitude below which `χ(u)` is treated as a zero of the ratio.
pub const CROOKS_MIN_CHI: f64 = 1e-12;

/// `ΔF = (1/β) ln[χ'(-u + iβ) / χ(u)]`.
pub fn crooks_delta_f(forward: ChiSample, backward: ChiSample, beta: f64) -> Result<CrooksEstimate> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let expected = Complex64::new(-forward.u.re, beta - forward.u.im);
    if (backward.u - expected).norm() > 1e-12 * (1.0 + expected.norm()) {
        return Err(Error::InvalidParameter(format!(
            "backward sample at {} but -u + iβ = {expected}",
            backward.u
        )));
    }
    let magnitude = forward.value.norm();
    if magnitude < CROOKS_MIN_CHI {
        return Err(Error::UndefinedRatio {
            magnitude,
            threshold: CROOKS_MIN_CHI,
        });
    }
    let ratio = backward.value / forward.value;
    Ok(CrooksEstimate {
        u: forward.u.re,
        delta_f: ratio.norm().ln() / beta,
        ratio,
    })
}

/// Evaluates both characteristic functions and applies [`crooks_delta_f`].
pub fn crooks_delta_f_at(u: f64, forward: &Process, backward: &Process) -> Result<CrooksEstimate> {
    let beta = forward
        .beta()
        .ok_or_else(|| Error::InvalidParameter("Crooks relation needs a thermal forward process".into()))?;
    let fwd = chi_direct(Complex64::new(u, 0.0), forward)?;
    let bwd = chi_direct(Complex64::new(-u, beta), backward)?;
    crooks_delta_f(fwd, bwd, beta)
}

/// First two raw moments of the work.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkMoments {
    pub mean: f64,
    pub second: f64,
}

pub fn work_moments(dist: &WorkDistribution) -> WorkMoments {
    let (mean, second) = dist
        .points
        .iter()
        .fold((0.0, 0.0), |(m1, m2), &(w, p)| (m1 + p * w, m2 + p * w * w));
    WorkMoments { mean, second }
}

/// Symmetric five-point stencil `(-2h, -h, 0, h, 2h)`.
pub fn moment_stencil(h: f64) -> [f64; 5] {
    [-2.0 * h, -h, 0.0, h, 2.0 * h]
}

/// `<W^k> = (-i)^k d^kχ/du^k` at `u = 0` from χ on [`moment_stencil`].
pub fn chi_derivative_moments(chi: &[Complex64; 5], h: f64) -> WorkMoments {
    let [m2, m1, c0, p1, p2] = *chi;
    let d1 = (-p2 + p1 * 8.0 - m1 * 8.0 + m2) / (12.0 * h);
    let d2 = (-p2 + p1 * 16.0 - c0 * 30.0 + m1 * 16.0 - m2) / (12.0 * h * h);
    WorkMoments {
        mean: (-Complex64::i() * d1).re,
        second: (-d2).re,
    }
}

/// Boltzmann populations of a thermal process in the initial eigenbasis.
pub fn initial_populations(process: &Process) -> Result<Vec<f64>> {
    match process.initial {
        InitialState::Thermal { beta } => boltzmann_weights(&process.eig_initial.eigenvalues, beta),
        InitialState::Density(ref rho) => {
            let v = &process.eig_initial.eigenvectors;
            Ok((&(&v.adjoint() * rho) * v).diagonal().iter().map(|z| z.re).collect())
        }
    }
}
