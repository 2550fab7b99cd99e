//! Ancilla-assisted (Ramsey) measurement of the characteristic function.
//!
//! Joint operators act on system ⊗ ancilla, joint index `2·s + a`. The
//! ancilla starts in `|0⟩`, is rotated by a Hadamard, drives a sequence of
//! ancilla-controlled system evolutions, is rotated back, and is read out:
//! `χ = ⟨σ_z⟩ + i⟨σ_y⟩`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::linalg::{expm, hermitian_eig, kron, partial_trace_system, qubit, ComplexMatrix};
use crate::workstats::Process;

/// Relative commutator size accepted as "commuting".
pub const COMMUTING_TOL: f64 = 1e-10;

/// Largest allowed deviation of the joint trace from one.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-9;

/// Which gate sequence realizes the controlled evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `Ĝ(u) V̂(u)`; needs commuting initial and final Hamiltonians.
    Simple,
    /// `G₁`, flip, `G₂`, flip for an arbitrary propagator.
    General,
    /// `𝒢₁`, flip, `𝒢₂`, flip built from the ancilla-conditioned drive.
    Appendix,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Simple, Variant::General, Variant::Appendix];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Simple => "simple",
            Variant::General => "general",
            Variant::Appendix => "appendix",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant {s:?} (simple, general, appendix)")))
    }
}

/// How long the ancilla is exposed to dephasing for a given `u`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationRule {
    /// `|u|`.
    #[default]
    UOnly,
    /// `|u| + c₀`.
    UPlusConstant,
}

/// Phase damping of the ancilla at rate `Γ` while the controlled gates act.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingModel {
    pub gamma: f64,
    #[serde(default)]
    pub duration_rule: DurationRule,
    #[serde(default)]
    pub constant_time: f64,
}

impl DephasingModel {
    pub fn new(gamma: f64) -> Result<Self> {
        let m = Self {
            gamma,
            duration_rule: DurationRule::UOnly,
            constant_time: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_offset(gamma: f64, constant_time: f64) -> Result<Self> {
        let m = Self {
            gamma,
            duration_rule: DurationRule::UPlusConstant,
            constant_time,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.constant_time.is_finite() && self.constant_time >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "constant_time must be >= 0, got {}",
                self.constant_time
            )));
        }
        Ok(())
    }

    pub fn duration(&self, u: f64) -> f64 {
        match self.duration_rule {
            DurationRule::UOnly => u.abs(),
            DurationRule::UPlusConstant => u.abs() + self.constant_time,
        }
    }

    /// Total coherence factor `e^{-Γ t(u)}`.
    pub fn envelope(&self, u: f64) -> f64 {
        (-self.gamma * self.duration(u)).exp()
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub u: f64,
    /// Ancilla state after the final Hadamard.
    pub rho_a: ComplexMatrix,
    /// `⟨0|ρ'_A|1⟩` just before the final Hadamard.
    pub coherence: Complex64,
    /// `⟨σ_z⟩ + i⟨σ_y⟩` of `rho_a`.
    pub chi_readout: Complex64,
    pub damped: bool,
}

/// `(σ_x + σ_z)/√2`.
pub fn hadamard_ancilla() -> ComplexMatrix {
    (qubit::sigma_x() + qubit::sigma_z()).scale_real(std::f64::consts::FRAC_1_SQRT_2)
}

/// `block0 ⊗ |0⟩⟨0| + block1 ⊗ |1⟩⟨1|`.
pub fn controlled(block0: &ComplexMatrix, block1: &ComplexMatrix) -> ComplexMatrix {
    let n = block0.rows();
    assert!(
        block0.is_square() && block1.rows() == n && block1.cols() == n,
        "controlled blocks must be square and equal-sized"
    );
    let mut g = ComplexMatrix::zeros(2 * n, 2 * n);
    for s in 0..n {
        for t in 0..n {
            g[(2 * s, 2 * t)] = block0[(s, t)];
            g[(2 * s + 1, 2 * t + 1)] = block1[(s, t)];
        }
    }
    g
}

/// System block selected by ancilla rows `a` and columns `b`.
pub fn ancilla_block(m: &ComplexMatrix, a: usize, b: usize) -> ComplexMatrix {
    let n = m.rows() / 2;
    ComplexMatrix::from_fn(n, n, |s, t| m[(2 * s + a, 2 * t + b)])
}

/// `1_S ⊗ σ_x`.
pub fn ancilla_flip(dim_s: usize) -> ComplexMatrix {
    kron(&ComplexMatrix::identity(dim_s), &qubit::sigma_x())
}

/// `(1 ⊗ σ_x) G₂ (1 ⊗ σ_x) G₁`.
pub fn compose_with_flips(g1: &ComplexMatrix, g2: &ComplexMatrix) -> ComplexMatrix {
    let x = ancilla_flip(g1.rows() / 2);
    &(&(&x * g2) * &x) * g1
}

/// `V̂(u) = e^{-iH_i u} ⊗ 1_A`.
pub fn gate_v(u: f64, h_i: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(kron(&expm(h_i, Complex64::new(0.0, -u))?, &ComplexMatrix::identity(2)))
}

fn commutator_residual(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.commutator(b).frobenius_norm() / (a.frobenius_norm() * b.frobenius_norm()).max(1.0)
}

/// `Ĝ(u) = 1 ⊗ |0⟩⟨0| + e^{-i(H_f - H_i)u} ⊗ |1⟩⟨1|` for commuting `H_i`, `H_f`.
pub fn gate_g_simple(u: f64, h_i: &ComplexMatrix, h_f: &ComplexMatrix) -> Result<ComplexMatrix> {
    let residual = commutator_residual(h_i, h_f);
    if residual > COMMUTING_TOL {
        return Err(Error::NonCommuting { residual });
    }
    let block = expm(&(h_f - h_i), Complex64::new(0.0, -u))?;
    Ok(controlled(&ComplexMatrix::identity(h_i.rows()), &block))
}

/// `Ĝ(u,τ) = U e^{-iH_i u} ⊗ |0⟩⟨0| + e^{-iH_f u} U ⊗ |1⟩⟨1|`.
pub fn gate_g_general(u: f64, h_i: &ComplexMatrix, h_f: &ComplexMatrix, propagator: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (ei, ef) = evolutions(u, h_i, h_f)?;
    Ok(controlled(&(propagator * &ei), &(&ef * propagator)))
}

/// `G₁ = 1 ⊗ |0⟩⟨0| + e^{-iH_f u} U ⊗ |1⟩⟨1|`, `G₂ = 1 ⊗ |0⟩⟨0| + U e^{-iH_i u} ⊗ |1⟩⟨1|`.
pub fn gates_g1_g2(
    u: f64,
    h_i: &ComplexMatrix,
    h_f: &ComplexMatrix,
    propagator: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (ei, ef) = evolutions(u, h_i, h_f)?;
    Ok(split_gates(&ei, &ef, propagator))
}

fn evolutions(u: f64, h_i: &ComplexMatrix, h_f: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let s = Complex64::new(0.0, -u);
    Ok((expm(h_i, s)?, expm(h_f, s)?))
}

fn split_gates(ei: &ComplexMatrix, ef: &ComplexMatrix, propagator: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let id = ComplexMatrix::identity(ei.rows());
    (controlled(&id, &(ef * propagator)), controlled(&id, &(propagator * ei)))
}

/// `𝒦(τ) = (1 ⊗ |0⟩⟨0| + D(α_τ) ⊗ |1⟩⟨1|)(e^{-iH_free τ} ⊗ 1)`.
pub fn gate_k(exp: &Experiment) -> ComplexMatrix {
    controlled(exp.free_tau(), &(exp.displacement() * exp.free_tau()))
}

/// `𝒢(u) = e^{-iH_free u} ⊗ |0⟩⟨0| + e^{-iH_osc(λ_τ) u} ⊗ |1⟩⟨1|`.
pub fn gate_script_g(u: f64, exp: &Experiment) -> ComplexMatrix {
    let s = Complex64::new(0.0, -u);
    controlled(&exp.eig_free().exp(s), &exp.eig_final().exp(s))
}

/// `𝒢₁ = 𝒢(u) 𝒦(τ) e^{iH_free τ}` and `𝒢₂ = 𝒦(τ) e^{iH_free τ}`, with the
/// inverse free evolution realized as forward evolution over the rest of a period.
pub fn gates_script_g1_g2(u: f64, exp: &Experiment) -> (ComplexMatrix, ComplexMatrix) {
    let back = kron(exp.inverse_free_tau(), &ComplexMatrix::identity(2));
    let g2 = &gate_k(exp) * &back;
    let g1 = &gate_script_g(u, exp) * &g2;
    (g1, g2)
}

/// `(1 ⊗ σ_x) 𝒢₂ (1 ⊗ σ_x) 𝒢₁`.
pub fn composed_script_g(u: f64, exp: &Experiment) -> ComplexMatrix {
    let (g1, g2) = gates_script_g1_g2(u, exp);
    compose_with_flips(&g1, &g2)
}

/// Multiplies the ancilla coherences by `e^{-Γt}`. Accepts a 2×2 ancilla
/// state or a joint system ⊗ ancilla state.
pub fn dephase_ancilla(rho: &ComplexMatrix, gamma: f64, t: f64) -> Result<ComplexMatrix> {
    if !(gamma >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("dephasing needs gamma, t >= 0, got {gamma}, {t}")));
    }
    if !rho.is_square() || rho.rows() % 2 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not an ancilla-carrying state",
            rho.rows(),
            rho.cols()
        )));
    }
    let factor = (-gamma * t).exp();
    let mut out = rho.clone();
    for i in 0..rho.rows() {
        for j in 0..rho.cols() {
            if i % 2 != j % 2 {
                out[(i, j)] *= factor;
            }
        }
    }
    Ok(out)
}

/// `(1 ⊗ m) ρ (1 ⊗ m)^†` without forming the joint operator.
fn conjugate_ancilla_local(rho: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
    let n = rho.rows() / 2;
    let mc = |a: usize, c: usize| m[(a, c)];
    ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (s, a) = (i / 2, i % 2);
        let (t, b) = (j / 2, j % 2);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..2 {
            for d in 0..2 {
                acc += mc(a, c) * rho[(2 * s + c, 2 * t + d)] * mc(b, d).conj();
            }
        }
        acc
    })
}

enum Stage {
    AncillaLocal(ComplexMatrix),
    Joint(ComplexMatrix),
    Conditional(ComplexMatrix),
}

fn ramsey(u: f64, rho_s: &ComplexMatrix, stages: Vec<Stage>, dephasing: Option<&DephasingModel>) -> Result<ProtocolResult> {
    let h = hadamard_ancilla();
    let conditional = stages.iter().filter(|s| matches!(s, Stage::Conditional(_))).count();
    let slice = match dephasing {
        Some(m) if conditional > 0 => {
            m.validate()?;
            Some((m.gamma, m.duration(u) / conditional as f64))
        }
        _ => None,
    };

    let mut rho = conjugate_ancilla_local(&kron(rho_s, &qubit::proj0()), &h);
    for stage in stages {
        match stage {
            Stage::AncillaLocal(m) => rho = conjugate_ancilla_local(&rho, &m),
            Stage::Joint(g) => rho = rho.conjugate_by(&g),
            Stage::Conditional(g) => {
                rho = rho.conjugate_by(&g);
                if let Some((gamma, t)) = slice {
                    rho = dephase_ancilla(&rho, gamma, t)?;
                }
            }
        }
    }
    let drift = (rho.trace() - 1.0).norm();
    if drift > TRACE_DRIFT_LIMIT {
        return Err(Error::TraceDrift {
            drift,
            limit: TRACE_DRIFT_LIMIT,
        });
    }
    let dim_s = rho_s.rows();
    let pre = partial_trace_system(&rho, dim_s, 2)?;
    let rho_a = &(&h * &pre) * &h;
    let chi_readout = rho_a.trace_of_product(&qubit::sigma_z()) + Complex64::i() * rho_a.trace_of_product(&qubit::sigma_y());
    Ok(ProtocolResult {
        u,
        coherence: pre[(0, 1)],
        rho_a,
        chi_readout,
        damped: slice.is_some(),
    })
}

fn check_commuting(process: &Process) -> Result<()> {
    let residual = commutator_residual(process.h_initial(), process.h_final())
        .max(commutator_residual(process.h_initial(), process.propagator()));
    if residual > COMMUTING_TOL {
        return Err(Error::NonCommuting { residual });
    }
    Ok(())
}

/// Runs the simple or general protocol on an arbitrary process.
pub fn run_protocol_on(u: f64, process: &Process, variant: Variant, dephasing: Option<&DephasingModel>) -> Result<ProtocolResult> {
    let n = process.dim();
    let s = Complex64::new(0.0, -u);
    let stages = match variant {
        Variant::Simple => {
            check_commuting(process)?;
            let v = process.eig_initial().exp(s);
            let block = hermitian_eig(&(process.h_final() - process.h_initial()))?.exp(s);
            vec![
                Stage::Joint(kron(&v, &ComplexMatrix::identity(2))),
                Stage::Conditional(controlled(&ComplexMatrix::identity(n), &block)),
            ]
        }
        Variant::General => {
            let ei = process.eig_initial().exp(s);
            let ef = process.eig_final().exp(s);
            let (g1, g2) = split_gates(&ei, &ef, process.propagator());
            flip_sequence(g1, g2)
        }
        Variant::Appendix => {
            return Err(Error::InvalidParameter(
                "the appendix variant needs an oscillator experiment".into(),
            ))
        }
    };
    ramsey(u, process.rho0(), stages, dephasing)
}

fn flip_sequence(g1: ComplexMatrix, g2: ComplexMatrix) -> Vec<Stage> {
    vec![
        Stage::Conditional(g1),
        Stage::AncillaLocal(qubit::sigma_x()),
        Stage::Conditional(g2),
        Stage::AncillaLocal(qubit::sigma_x()),
    ]
}

/// Full Ramsey protocol at one `u`.
pub fn run_protocol(u: f64, exp: &Experiment, variant: Variant, dephasing: Option<&DephasingModel>) -> Result<ProtocolResult> {
    match variant {
        Variant::Appendix => {
            exp.require_undriven_start()?;
            let (g1, g2) = gates_script_g1_g2(u, exp);
            ramsey(u, exp.forward().rho0(), flip_sequence(g1, g2), dephasing)
        }
        _ => run_protocol_on(u, exp.forward(), variant, dephasing),
    }
}

/// Whether `variant` can run on `exp` at all.
pub fn applicable(exp: &Experiment, variant: Variant) -> bool {
    match variant {
        Variant::Simple => check_commuting(exp.forward()).is_ok(),
        Variant::General => true,
        Variant::Appendix => exp.require_undriven_start().is_ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::*;
    use crate::linalg::{hermitian_eig, partial_trace_system};
    use crate::model::{h_free, h_micro, DriveProfile, Scenario};
    use crate::workstats::{chi_direct, InitialState};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small_fig2c(n: usize) -> Experiment {
        Experiment::new(&Scenario::fig2c().with_cutoff(n)).unwrap()
    }

    #[test]
    fn hadamard_properties() {
        let h = hadamard_ancilla();
        assert!((&h * &h).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!((&(&h * &qubit::sigma_z()) * &h).max_abs_diff(&qubit::sigma_x()) < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h[(0, 0)] - s).norm() < 1e-16 && (h[(1, 0)] - s).norm() < 1e-16);
    }

    #[test]
    fn gate_v_structure() {
        let mut r = rng(61);
        let hi = random_hermitian(&mut r, 5);
        assert!(gate_v(0.0, &hi).unwrap().max_abs_diff(&ComplexMatrix::identity(10)) < 1e-12);
        let v = gate_v(0.83, &hi).unwrap();
        let block = expm(&hi, c(0.0, -0.83)).unwrap();
        assert!(v.max_abs_diff(&kron(&block, &ComplexMatrix::identity(2))) < 1e-14);
        assert!(ancilla_block(&v, 0, 1).frobenius_norm() == 0.0);
        let m = kron(&ComplexMatrix::identity(5), &random_matrix(&mut r, 2, 2));
        assert!(v.commutator(&m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn simple_gate() {
        let sys = crate::model::OscillatorSystem::new(1.0, 8).unwrap();
        let h = sys.number();
        let hf = h.scale_real(1.2);
        assert!(gate_g_simple(0.0, &h, &hf).unwrap().max_abs_diff(&ComplexMatrix::identity(16)) < 1e-12);
        assert!(gate_g_simple(1.1, &h, &h).unwrap().max_abs_diff(&ComplexMatrix::identity(16)) < 1e-12);
        let g = gate_g_simple(1.1, &h, &hf).unwrap();
        let oracle = expm(&(&hf - &h), c(0.0, -1.1)).unwrap();
        assert!(ancilla_block(&g, 1, 1).max_abs_diff(&oracle) < 1e-12);
        assert!(g.unitarity_residual() < 1e-12);
        let q = crate::model::h_osc(&sys, 0.1, 0.0);
        assert!(matches!(gate_g_simple(1.0, &h, &q), Err(Error::NonCommuting { .. })));
    }

    #[test]
    fn general_gate_decomposition_on_random_instances() {
        let mut r = rng(67);
        for _ in 0..3 {
            let (hi, hf) = (random_hermitian(&mut r, 16), random_hermitian(&mut r, 16));
            let u_tau = random_unitary(&mut r, 16);
            let u = r.gen_range(-3.0..3.0);
            let g = gate_g_general(u, &hi, &hf, &u_tau).unwrap();
            let (g1, g2) = gates_g1_g2(u, &hi, &hf, &u_tau).unwrap();
            assert!(compose_with_flips(&g1, &g2).max_abs_diff(&g) < 1e-10);
            assert!(g.unitarity_residual() < 1e-10);
        }
        let hi = random_hermitian(&mut r, 4);
        assert!(gate_g_general(0.0, &hi, &hi, &ComplexMatrix::identity(4))
            .unwrap()
            .max_abs_diff(&ComplexMatrix::identity(8))
            < 1e-12);
    }

    #[test]
    fn general_gate_reduces_to_simple_in_commuting_case() {
        let sys = crate::model::OscillatorSystem::new(1.0, 10).unwrap();
        let h = sys.number();
        let hf = h.scale_real(1.3);
        let u = 0.77;
        let g = gate_g_general(u, &h, &hf, &ComplexMatrix::identity(10)).unwrap();
        let simple = &gate_g_simple(u, &h, &hf).unwrap() * &gate_v(u, &h).unwrap();
        assert!(g.max_abs_diff(&simple) < 1e-10);
    }

    #[test]
    fn gate_k_blocks_and_limits() {
        let e = small_fig2c(24);
        let k = gate_k(&e);
        assert!(k.unitarity_residual() < 1e-10);
        let free = expm(&h_free(e.system()), c(0.0, -10.0)).unwrap();
        assert!(ancilla_block(&k, 0, 0).max_abs_diff(&free) < 1e-10);
        assert!(ancilla_block(&k, 1, 1).max_abs_diff(&(e.displacement() * &free)) < 1e-10);

        let mut s = Scenario::fig2c().with_cutoff(12);
        s.tau = 0.0;
        assert!(gate_k(&Experiment::new(&s).unwrap()).max_abs_diff(&ComplexMatrix::identity(24)) < 1e-12);
        let mut s = Scenario::fig2c().with_cutoff(12);
        s.drive = DriveProfile::TanhRamp {
            lambda_final: 0.0,
            ramp_rate: 1.0,
        };
        let e0 = Experiment::new(&s).unwrap();
        let free = kron(&expm(&h_free(e0.system()), c(0.0, -10.0)).unwrap(), &ComplexMatrix::identity(2));
        assert!(gate_k(&e0).max_abs_diff(&free) < 1e-12);
    }

    #[test]
    fn script_g_matches_conditioned_hamiltonian() {
        let e = small_fig2c(24);
        let lam = e.scenario().lambda_final();
        for u in [0.0, 0.4, 3.3] {
            let g = gate_script_g(u, &e);
            let oracle = expm(&h_micro(e.system(), lam, 0.0), c(0.0, -u)).unwrap();
            assert!(g.max_abs_diff(&oracle) < 1e-12, "u = {u}");
        }
        assert!(gate_script_g(0.0, &e).max_abs_diff(&ComplexMatrix::identity(48)) < 1e-14);
    }

    #[test]
    fn script_composition_identity() {
        let e = small_fig2c(32);
        let n = 32;
        let d = e.displacement();
        for u in [0.0, 1.7, 12.5] {
            let ei = expm(&h_free(e.system()), c(0.0, -u)).unwrap();
            let ef = expm(e.forward().h_final(), c(0.0, -u)).unwrap();
            let rhs = controlled(&(d * &ei), &(&ef * d));
            assert!(composed_script_g(u, &e).max_abs_diff(&rhs) < 1e-8, "u = {u}");
        }
        let mut s = Scenario::fig2c().with_cutoff(n);
        s.drive = DriveProfile::Sudden { lambda_final: 0.0 };
        let e0 = Experiment::new(&s).unwrap();
        let (_, g2) = gates_script_g1_g2(2.0, &e0);
        assert!(g2.max_abs_diff(&ComplexMatrix::identity(2 * n)) < 1e-10);
        assert!(composed_script_g(0.0, &e0).max_abs_diff(&ComplexMatrix::identity(2 * n)) < 1e-10);
    }

    #[test]
    fn dephasing_channel() {
        let plus = ComplexMatrix::from_rows(&[[c(0.5, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.5, 0.0)]]);
        assert_eq!(dephase_ancilla(&plus, 0.0, 3.0).unwrap(), plus);
        let mut last = 1.0 + 1e-12;
        for t in [0.0, 0.1, 0.5, 1.0, 4.0] {
            let d = dephase_ancilla(&plus, 0.5, t).unwrap();
            let purity = d.trace_of_product(&d).re;
            assert!((purity - (1.0 + (-2.0 * 0.5 * t).exp()) / 2.0).abs() < 1e-14);
            assert!(purity <= last);
            last = purity;
        }
        let gone = dephase_ancilla(&plus, 1.0, 1e4).unwrap();
        assert_eq!(gone[(0, 1)], c(0.0, 0.0));
        assert_eq!(gone[(0, 0)], c(0.5, 0.0));
        assert!(dephase_ancilla(&plus, 1.0, -1.0).is_err());

        let mut r = rng(71);
        let joint = random_density(&mut r, 8);
        let d = dephase_ancilla(&joint, 0.3, 2.0).unwrap();
        let ta = partial_trace_system(&joint, 4, 2).unwrap();
        let tb = partial_trace_system(&d, 4, 2).unwrap();
        assert!((tb[(0, 1)] - ta[(0, 1)] * (-0.6f64).exp()).norm() < 1e-14);
        assert!((tb[(0, 0)] - ta[(0, 0)]).norm() < 1e-14);
        assert!(hermitian_eig(&d).unwrap().eigenvalues[0] > -1e-12);
    }

    #[test]
    fn zero_u_reads_one_for_every_variant() {
        let mut s = Scenario::fig2c().with_cutoff(16);
        s.drive = DriveProfile::TanhRamp {
            lambda_final: 0.0,
            ramp_rate: 1.0,
        };
        let e = Experiment::new(&s).unwrap();
        for v in Variant::ALL {
            assert!(applicable(&e, v));
            let r = run_protocol(0.0, &e, v, None).unwrap();
            assert!((r.chi_readout - 1.0).norm() < 1e-10, "{v}");
            assert!(!r.damped);
        }
    }

    #[test]
    fn readout_matches_direct_trace() {
        let e = small_fig2c(32);
        assert!(!applicable(&e, Variant::Simple));
        for u in [0.3, 2.0, 7.5, 19.0] {
            let direct = chi_direct(c(u, 0.0), e.forward()).unwrap().value;
            for v in [Variant::General, Variant::Appendix] {
                let r = run_protocol(u, &e, v, None).unwrap();
                assert!((r.chi_readout - direct).norm() < 1e-8, "{v} u = {u}");
                assert!((r.coherence * 2.0 - direct).norm() < 1e-10, "{v} u = {u}");
                assert!((r.rho_a.trace() - 1.0).norm() < 1e-12);
                let ev = hermitian_eig(&r.rho_a).unwrap().eigenvalues;
                assert!(ev[0] > -1e-12 && ev[1] < 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn simple_variant_on_commuting_process() {
        let sys = crate::model::OscillatorSystem::new(1.0, 24).unwrap();
        let h = sys.number();
        let u_tau = expm(&h, c(0.0, -2.0)).unwrap();
        let p = Process::new(
            h.clone(),
            h.scale_real(1.2),
            u_tau,
            InitialState::Thermal { beta: std::f64::consts::LN_2 },
        )
        .unwrap();
        for u in [0.5, 4.0] {
            let direct = chi_direct(c(u, 0.0), &p).unwrap().value;
            for v in [Variant::Simple, Variant::General] {
                let r = run_protocol_on(u, &p, v, None).unwrap();
                assert!((r.chi_readout - direct).norm() < 1e-10, "{v}");
            }
        }
        assert!(run_protocol_on(0.5, &p, Variant::Appendix, None).is_err());
    }

    #[test]
    fn dephasing_damps_readout_by_envelope() {
        let e = small_fig2c(24);
        let model = DephasingModel::new(0.5).unwrap();
        let offset = DephasingModel::with_offset(0.5, 1.5).unwrap();
        for u in [0.0, 1.0, 6.0] {
            for v in [Variant::General, Variant::Appendix] {
                let clean = run_protocol(u, &e, v, None).unwrap().chi_readout;
                let damped = run_protocol(u, &e, v, Some(&model)).unwrap();
                assert!(damped.damped);
                assert!((damped.chi_readout - clean * (-0.5 * u).exp()).norm() < 1e-10);
                let shifted = run_protocol(u, &e, v, Some(&offset)).unwrap().chi_readout;
                assert!((shifted - clean * (-0.5 * (u + 1.5)).exp()).norm() < 1e-10);
                let ev = hermitian_eig(&damped.rho_a).unwrap().eigenvalues;
                assert!(ev[0] > -1e-12);
            }
        }
    }

    #[test]
    fn displacement_phase_is_inessential() {
        let e = small_fig2c(24);
        let mut r = rng(73);
        for _ in 0..3 {
            let eps = r.gen_range(0.0..std::f64::consts::TAU);
            let shifted = e.clone().with_displacement_phase(eps);
            for u in [0.9, 5.5] {
                let a = run_protocol(u, &e, Variant::Appendix, None).unwrap().chi_readout;
                let b = run_protocol(u, &shifted, Variant::Appendix, None).unwrap().chi_readout;
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("ramsey".parse::<Variant>().is_err());
        let m: DephasingModel = serde_json::from_str(r#"{"gamma": 0.5}"#).unwrap();
        assert_eq!(m, DephasingModel::new(0.5).unwrap());
        assert!(serde_json::from_str::<DephasingModel>(r#"{"gamma": 0.5, "rate": 1}"#).is_err());
        assert!(DephasingModel::new(-0.1).is_err());
    }
}
