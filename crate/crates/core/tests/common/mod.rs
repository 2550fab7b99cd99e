#![allow(dead_code)]

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workcf::linalg::{expm, ComplexMatrix};
use workcf::model::{DriveProfile, Scenario};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut impl Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(r: &mut impl Rng, n: usize) -> ComplexMatrix {
    let a = random_matrix(r, n);
    (&a + &a.adjoint()).scale_real(0.5)
}

pub fn random_unitary(r: &mut impl Rng, n: usize) -> ComplexMatrix {
    expm(&random_hermitian(r, n), c(0.0, -2.0)).unwrap()
}

/// 27 thermal tanh-ramp scenarios: β ∈ {ln2, 1, 2}, λ_final ∈ {0, 0.05, 0.1},
/// τ ∈ {0, 1, 10}, ω = 1.
pub fn corpus(cutoff: usize) -> Vec<Scenario> {
    let mut out = Vec::new();
    for beta in [LN_2, 1.0, 2.0] {
        for lambda in [0.0, 0.05, 0.1] {
            for tau in [0.0, 1.0, 10.0] {
                let mut s = Scenario::fig2c().with_cutoff(cutoff);
                s.beta = beta;
                s.tau = tau;
                s.drive = DriveProfile::TanhRamp {
                    lambda_final: lambda,
                    ramp_rate: 1.0,
                };
                out.push(s);
            }
        }
    }
    out
}

pub fn label(s: &Scenario) -> String {
    let lambda = match s.drive {
        DriveProfile::TanhRamp { lambda_final, .. } => lambda_final,
        _ => f64::NAN,
    };
    format!("beta={:.4} lambda={lambda} tau={}", s.beta, s.tau)
}

/// Distance up to a global phase restricted to the leading `k × k` block.
pub fn low_block_distance(a: &ComplexMatrix, b: &ComplexMatrix, k: usize) -> f64 {
    workcf::linalg::distance_up_to_phase(&a.leading_block(k), &b.leading_block(k))
}
