//! Propagators of the driven oscillator `H(t) = ω b^†b + λ_t (b^† e^{iφ} + b e^{-iφ})`.
//!
//! Two independent routes are provided: a stepped product of exact
//! short-time exponentials ([`time_ordered`]) and the closed form
//! `U_τ = D(α_τ) e^{-i ω b^†b τ}` ([`closed_form`]). The global phase of the
//! displacement is fixed to zero, so the two agree only up to a phase; compare
//! them with [`distance_up_to_phase`](crate::linalg::distance_up_to_phase).
//!
//! In a truncated Fock space the stepped route evolves under the truncated
//! Hamiltonian, whose top levels do not obey `[b, b^†] = 1`. The routes
//! therefore agree on the low-lying block where the state has support, not
//! on the full truncated matrix.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::model::{h_free, DriveProfile, OscillatorSystem};
use crate::parallel::Execution;

/// Simpson intervals used for `α_τ` unless stated otherwise.
pub const DEFAULT_QUAD_STEPS: usize = 4096;

/// `|<N-1|D(α)|0>|` above this triggers a cutoff warning.
pub const SUPPORT_WARN_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorMethod {
    Stepped,
    ClosedForm,
}

#[derive(Clone, Debug)]
pub struct PropagatorResult {
    pub unitary: ComplexMatrix,
    /// Displacement amplitude `α_τ` (including the drive phase).
    pub alpha: Complex64,
    pub method: PropagatorMethod,
}

/// `e^{-i ω b^†b t}`, diagonal in the Fock basis.
pub fn free_evolution(sys: &OscillatorSystem, t: f64) -> ComplexMatrix {
    let phases: Vec<Complex64> = (0..sys.cutoff)
        .map(|n| Complex64::from_polar(1.0, -sys.omega * n as f64 * t))
        .collect();
    ComplexMatrix::from_diagonal(&phases)
}

/// `e^{+i ω b^†b τ}` realized as forward evolution `e^{-i ω b^†b (2π/ω - τ)}`.
///
/// `τ` outside `[0, 2π/ω]` is first reduced modulo the period.
pub fn inverse_free_evolution(sys: &OscillatorSystem, tau: f64) -> ComplexMatrix {
    let period = TAU / sys.omega;
    let reduced = if (0.0..=period).contains(&tau) {
        tau
    } else {
        tau.rem_euclid(period)
    };
    free_evolution(sys, period - reduced)
}

/// `|<N-1|M|0>|`: how much of the vacuum column reaches the top Fock level.
pub fn support_leak(m: &ComplexMatrix) -> f64 {
    m[(m.rows() - 1, 0)].norm()
}

/// `D(α) = exp(α b^† - α* b)`.
pub fn displacement(alpha: Complex64, sys: &OscillatorSystem) -> ComplexMatrix {
    // i(α b^† - α* b) is Hermitian; D = exp(-i · i(α b^† - α* b)).
    let i = Complex64::i();
    let generator = &sys.bdag.scale(i * alpha) - &sys.b.scale(i * alpha.conj());
    let d = hermitian_eig(&generator)
        .expect("displacement generator is Hermitian by construction")
        .exp(-i);
    let leak = support_leak(&d);
    if leak > SUPPORT_WARN_THRESHOLD {
        log::warn!(
            "displacement |alpha| = {:.3e} leaks {leak:.3e} into Fock level {}; raise the cutoff",
            alpha.norm(),
            sys.cutoff - 1
        );
    }
    d
}

/// `-i e^{-iω t1} ∫_{t0}^{t1} λ_t e^{iωt} dt` by composite Simpson with
/// `quad_steps` intervals (rounded up to even).
pub fn alpha_over(drive: &DriveProfile, omega: f64, t0: f64, t1: f64, quad_steps: usize) -> Complex64 {
    assert!(quad_steps >= 2, "Simpson quadrature needs at least two intervals");
    if t1 == t0 {
        return Complex64::new(0.0, 0.0);
    }
    let n = quad_steps + quad_steps % 2;
    let h = (t1 - t0) / n as f64;
    let f = |k: usize| {
        let t = t0 + k as f64 * h;
        let lambda = if k == 0 { drive.right_limit(t) } else { drive.value_at(t) };
        Complex64::from_polar(lambda, omega * t)
    };
    let mut sum = f(0) + f(n);
    for k in 1..n {
        sum += f(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = sum * (h / 3.0);
    -Complex64::i() * Complex64::from_polar(1.0, -omega * t1) * integral
}

/// Displacement amplitude `α_τ = -i e^{-iωτ} ∫_0^τ λ_t e^{iωt} dt`.
pub fn alpha_of_tau(drive: &DriveProfile, omega: f64, tau: f64, quad_steps: usize) -> Complex64 {
    alpha_over(drive, omega, 0.0, tau, quad_steps)
}

/// Stepped product `∏_k exp(-i dt H(t_k + dt/2))`, latest step left-most.
pub fn time_ordered_with<H>(hamiltonian: H, dim: usize, tau: f64, steps: usize, exec: Execution) -> Result<ComplexMatrix>
where
    H: Fn(f64) -> ComplexMatrix + Sync + Send,
{
    if steps == 0 {
        return Err(Error::InvalidParameter("time_ordered needs at least one step".into()));
    }
    if tau == 0.0 {
        return Ok(ComplexMatrix::identity(dim));
    }
    let dt = tau / steps as f64;
    let scale = Complex64::new(0.0, -dt);
    exec.try_ordered_product(steps, dim, |k| {
        let t_mid = (k as f64 + 0.5) * dt;
        Ok(hermitian_eig(&hamiltonian(t_mid))?.exp(scale))
    })
}

/// Numerically time-ordered propagator of the driven oscillator.
pub fn time_ordered(
    sys: &OscillatorSystem,
    drive: &DriveProfile,
    phi: f64,
    tau: f64,
    steps: usize,
) -> Result<PropagatorResult> {
    time_ordered_exec(sys, drive, phi, tau, steps, Execution::default())
}

pub fn time_ordered_exec(
    sys: &OscillatorSystem,
    drive: &DriveProfile,
    phi: f64,
    tau: f64,
    steps: usize,
    exec: Execution,
) -> Result<PropagatorResult> {
    let h0 = h_free(sys);
    let quad = sys.quadrature(phi);
    let unitary = time_ordered_with(|t| &h0 + &quad.scale_real(drive.value_at(t)), sys.cutoff, tau, steps, exec)?;
    Ok(PropagatorResult {
        unitary,
        alpha: Complex64::from_polar(1.0, phi) * alpha_of_tau(drive, sys.omega, tau, DEFAULT_QUAD_STEPS),
        method: PropagatorMethod::Stepped,
    })
}

/// `U_τ = D(e^{iφ} α_τ) e^{-i ω b^†b τ}` with the displacement phase set to zero.
pub fn closed_form(sys: &OscillatorSystem, drive: &DriveProfile, phi: f64, tau: f64) -> PropagatorResult {
    let alpha = Complex64::from_polar(1.0, phi) * alpha_of_tau(drive, sys.omega, tau, DEFAULT_QUAD_STEPS);
    let unitary = &displacement(alpha, sys) * &free_evolution(sys, tau);
    PropagatorResult {
        unitary,
        alpha,
        method: PropagatorMethod::ClosedForm,
    }
}
