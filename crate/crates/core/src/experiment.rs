//! A scenario with every scenario-level object prepared once: oscillator
//! operators, Hamiltonians and their spectra, the propagator and the
//! thermal state. Protocol runs over a `u` grid share one `Experiment`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, EigenSystem};
use crate::model::{h_free, h_osc, OscillatorSystem, Scenario};
use crate::propagate::{
    closed_form, displacement, free_evolution, inverse_free_evolution, time_ordered, PropagatorMethod,
    PropagatorResult,
};
use crate::workstats::{backward_process, Process};

#[derive(Clone, Debug)]
pub struct Experiment {
    scenario: Scenario,
    sys: OscillatorSystem,
    forward: Process,
    eig_free: EigenSystem,
    alpha: Complex64,
    method: PropagatorMethod,
    displacement: ComplexMatrix,
    free_tau: ComplexMatrix,
    inverse_free_tau: ComplexMatrix,
}

impl Experiment {
    /// Uses the closed-form propagator `D(α_τ) e^{-iH_free τ}`.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let sys = scenario.system()?;
        let prop = closed_form(&sys, &scenario.drive, scenario.phi, scenario.tau);
        Self::assemble(scenario, sys, prop)
    }

    /// Uses the stepped time-ordered propagator.
    pub fn stepped(scenario: &Scenario, steps: usize) -> Result<Self> {
        scenario.validate()?;
        let sys = scenario.system()?;
        let prop = time_ordered(&sys, &scenario.drive, scenario.phi, scenario.tau, steps)?;
        Self::assemble(scenario, sys, prop)
    }

    fn assemble(scenario: &Scenario, sys: OscillatorSystem, prop: PropagatorResult) -> Result<Self> {
        let h_i = h_osc(&sys, scenario.lambda_initial(), scenario.phi);
        let h_f = h_osc(&sys, scenario.lambda_final(), scenario.phi);
        let forward = Process::thermal(h_i, h_f, prop.unitary, scenario.beta)?;
        let h0 = h_free(&sys);
        Ok(Self {
            eig_free: hermitian_eig(&h0)?,
            displacement: displacement(prop.alpha, &sys),
            free_tau: free_evolution(&sys, scenario.tau),
            inverse_free_tau: inverse_free_evolution(&sys, scenario.tau),
            alpha: prop.alpha,
            method: prop.method,
            scenario: scenario.clone(),
            sys,
            forward,
        })
    }

    /// Multiplies the displacement used by the appendix gates by `e^{iε}`.
    pub fn with_displacement_phase(mut self, epsilon: f64) -> Self {
        self.displacement = self.displacement.scale(Complex64::from_polar(1.0, epsilon));
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn system(&self) -> &OscillatorSystem {
        &self.sys
    }

    pub fn forward(&self) -> &Process {
        &self.forward
    }

    pub fn backward(&self) -> Result<Process> {
        backward_process(&self.forward)
    }

    pub fn eig_free(&self) -> &EigenSystem {
        &self.eig_free
    }

    /// Spectrum of `H_osc(λ_τ)`.
    pub fn eig_final(&self) -> &EigenSystem {
        self.forward.eig_final()
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn method(&self) -> PropagatorMethod {
        self.method
    }

    /// `D(α_τ)`, including any phase set with [`with_displacement_phase`](Self::with_displacement_phase).
    pub fn displacement(&self) -> &ComplexMatrix {
        &self.displacement
    }

    /// `e^{-iH_free τ}`.
    pub fn free_tau(&self) -> &ComplexMatrix {
        &self.free_tau
    }

    /// `e^{+iH_free τ}` as forward evolution over the rest of the period.
    pub fn inverse_free_tau(&self) -> &ComplexMatrix {
        &self.inverse_free_tau
    }

    /// The appendix construction starts from the undriven oscillator.
    pub fn require_undriven_start(&self) -> Result<()> {
        let l0 = self.scenario.lambda_initial();
        if l0 != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "appendix gates need λ_0 = 0, scenario starts at {l0}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::distance_up_to_phase;
    use crate::model::DriveProfile;

    #[test]
    fn fig2c_objects() {
        let e = Experiment::new(&Scenario::fig2c().with_cutoff(32)).unwrap();
        assert_eq!(e.method(), PropagatorMethod::ClosedForm);
        assert_eq!(e.forward().h_initial(), &h_free(e.system()));
        let expected = (e.displacement() * e.free_tau()).max_abs_diff(e.forward().propagator());
        assert!(expected < 1e-12);
        assert!((e.free_tau() * e.inverse_free_tau()).max_abs_diff(&ComplexMatrix::identity(32)) < 1e-10);
        assert!(e.require_undriven_start().is_ok());
        let b = e.backward().unwrap();
        assert_eq!(b.h_final(), e.forward().h_initial());
    }

    #[test]
    fn displacement_phase_only_touches_gates() {
        let e = Experiment::new(&Scenario::fig2c().with_cutoff(16)).unwrap();
        let p = e.clone().with_displacement_phase(0.7);
        assert!(distance_up_to_phase(p.displacement(), e.displacement()) < 1e-12);
        assert!(p.displacement().max_abs_diff(e.displacement()) > 0.1);
        assert_eq!(p.forward().propagator(), e.forward().propagator());
    }

    #[test]
    fn constant_drive_starts_driven() {
        let mut s = Scenario::fig2c().with_cutoff(16);
        s.drive = DriveProfile::Constant { lambda_final: 0.1 };
        let e = Experiment::new(&s).unwrap();
        assert!(e.require_undriven_start().is_err());
        assert_eq!(e.forward().h_initial(), e.forward().h_final());
    }

    #[test]
    fn invalid_scenario_rejected() {
        let mut s = Scenario::fig2c();
        s.beta = -1.0;
        assert!(Experiment::new(&s).is_err());
    }
}
