use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{frobenius_list, norm2, ComplexMatrix};

use super::kron::build_k;

/// Sufficient condition for the restoration iteration to have a solution:
/// `δ = min σ_min(K₁, K₂) − 2·max(‖dA₁₂‖₂, ‖dE₁₂‖₂)`,
/// `θ = ‖(dE₁₁, dE₂₂, dA₁₁, dA₂₂)‖_F`, `ω_q = √2·θ`, `κ₁ = θ·ω_q/δ²`;
/// the certificate holds when `δ > 0` and `κ₁ < 1/4`, and then
/// `‖(Y₁₂, Y₂₁)‖_F ≤ 2θ/δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCertificate {
    pub delta: f64,
    pub theta: f64,
    pub omega_q: f64,
    pub kappa1: f64,
    pub solution_bound: f64,
    pub precondition_ok: bool,
}

impl ConvergenceCertificate {
    /// Limit `κ = 2κ₁/(1 − 2κ₁ + √(1 − 4κ₁))` of the recursion
    /// `κ_{i+1} = κ₁(1 + κ_i)²` started at `κ₁`; it bounds all iterates.
    pub fn kappa_limit(&self) -> Option<f64> {
        if !self.precondition_ok {
            return None;
        }
        let k = self.kappa1;
        Some(2.0 * k / (1.0 - 2.0 * k + (1.0 - 4.0 * k).sqrt()))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn convergence_certificate(
    e_d: &ComplexMatrix,
    a_d: &ComplexMatrix,
    de11: &ComplexMatrix,
    da11: &ComplexMatrix,
    de22: &ComplexMatrix,
    da22: &ComplexMatrix,
    de12: &ComplexMatrix,
    da12: &ComplexMatrix,
) -> Result<ConvergenceCertificate> {
    let k = build_k(e_d, a_d)?;
    let delta = k.sigma_min() - 2.0 * norm2(da12).max(norm2(de12));
    let theta = frobenius_list(&[de11, de22, da11, da22]);
    let omega_q = std::f64::consts::SQRT_2 * theta;
    let kappa1 = if theta == 0.0 {
        0.0
    } else {
        theta * omega_q / (delta * delta)
    };
    Ok(ConvergenceCertificate {
        delta,
        theta,
        omega_q,
        kappa1,
        solution_bound: 2.0 * theta / delta,
        precondition_ok: delta > 0.0 && kappa1 < 0.25,
    })
}
