//! Fixed-point iteration for the quadratic restoration equations
//!
//! `dA₁₁ + A_ΔY₂₁ + Y₂₁ᴴA_Δᴴ + Y₂₁ᴴ dA₂₂ Y₂₁ = 0`,
//! `dE₁₁ + E_ΔY₂₁ − Y₂₁ᴴE_Δᴴ + Y₂₁ᴴ dE₂₂ Y₂₁ = 0`,
//! `dA₂₂ + A_ΔᴴY₁₂ + Y₁₂ᴴA_Δ + Y₁₂ᴴ dA₁₁ Y₁₂ = 0`,
//! `dE₂₂ − E_ΔᴴY₁₂ + Y₁₂ᴴE_Δ + Y₁₂ᴴ dE₁₁ Y₁₂ = 0`,
//!
//! which are the diagonal blocks of `Z₁ᴴ(sℰ' − 𝒜')Z₁` for
//! `Z₁ = [[I, Y₁₂, 0], [Y₂₁, I, 0], [0, 0, I]]`. Each step solves the linear
//! part with the quadratic terms of the previous iterate moved to the
//! right-hand side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_list, hermitian_part, skew_part, ComplexMatrix};
use crate::pencil::EvenPencil;

use super::linear::LinearStepSolver;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    pub max_iter: usize,
    /// Converged once `δ_k ≤ tol·‖(ℰ', 𝒜')‖_F`.
    pub tol: f64,
    /// When the residual stops halving, the iterate is still accepted if
    /// `δ_k ≤ stagnation_tol·‖(ℰ', 𝒜')‖_F`.
    pub stagnation_tol: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            max_iter: 20,
            tol: 1e-15,
            stagnation_tol: 1e-13,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IterationState {
    pub y21: ComplexMatrix,
    pub y12: ComplexMatrix,
    /// Number of linear solves performed.
    pub iteration: usize,
    /// `δ_k` at the returned iterate.
    pub residual: f64,
    /// `δ_0, δ_1, …` (one entry per iterate, starting from `Y = 0`).
    pub history: Vec<f64>,
    pub converged: bool,
    /// `max δ_{k+1}/δ_k²` over the recorded history.
    pub quadratic_constant: Option<f64>,
    /// `‖(ℰ', 𝒜')‖_F`, the scale the tolerances refer to.
    pub scale: f64,
}

/// The blocks of a perturbed even pencil that enter the restoration.
#[derive(Clone, Debug)]
pub struct RestorationBlocks {
    pub e_d: ComplexMatrix,
    pub a_d: ComplexMatrix,
    pub de11: ComplexMatrix,
    pub de22: ComplexMatrix,
    pub da11: ComplexMatrix,
    pub da22: ComplexMatrix,
}

impl RestorationBlocks {
    pub fn from_pencil(p: &EvenPencil) -> Result<Self> {
        let third = p.e_block(3, 1).norm() + p.e_block(3, 2).norm() + p.e_block(3, 3).norm();
        if third > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "E-calligraphic has a nonzero third block row ({third:.3e})"
            )));
        }
        Ok(Self {
            e_d: p.e_block(1, 2),
            a_d: p.a_block(1, 2),
            de11: skew_part(&p.e_block(1, 1)),
            de22: skew_part(&p.e_block(2, 2)),
            da11: hermitian_part(&p.a_block(1, 1)),
            da22: hermitian_part(&p.a_block(2, 2)),
        })
    }

    /// The four quadratic residual blocks at `(Y₂₁, Y₁₂)`, in the order
    /// `(A₁₁, A₂₂, E₁₁, E₂₂)`.
    pub fn residual_blocks(&self, y21: &ComplexMatrix, y12: &ComplexMatrix) -> [ComplexMatrix; 4] {
        let (a, e) = (&self.a_d, &self.e_d);
        let y21h = y21.adjoint();
        let y12h = y12.adjoint();
        [
            &self.da11 + a * y21 + &y21h * a.adjoint() + &y21h * &self.da22 * y21,
            &self.da22 + a.adjoint() * y12 + &y12h * a + &y12h * &self.da11 * y12,
            &self.de11 + e * y21 - &y21h * e.adjoint() + &y21h * &self.de22 * y21,
            &self.de22 - e.adjoint() * y12 + &y12h * e + &y12h * &self.de11 * y12,
        ]
    }
}

/// `δ = ‖(R_A₁₁, R_A₂₂, R_E₁₁, R_E₂₂)‖_F`.
pub fn residual_delta(blocks: &[ComplexMatrix]) -> f64 {
    let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
    frobenius_list(&refs)
}

fn quadratic_constant(history: &[f64]) -> Option<f64> {
    history
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / (w[0] * w[0]))
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
}

pub fn iterate_restoration(pert: &EvenPencil, opts: &IterationOptions) -> Result<IterationState> {
    let blocks = RestorationBlocks::from_pencil(pert)?;
    iterate_blocks(&blocks, pert.norm(), opts)
}

pub(crate) fn iterate_blocks(
    blocks: &RestorationBlocks,
    scale: f64,
    opts: &IterationOptions,
) -> Result<IterationState> {
    let n = blocks.e_d.nrows();
    let mut y21 = ComplexMatrix::zeros(n, n);
    let mut y12 = ComplexMatrix::zeros(n, n);
    let delta0 = residual_delta(&blocks.residual_blocks(&y21, &y12));
    let mut history = vec![delta0];
    let done = |state_y21, state_y12, iteration, residual, history: Vec<f64>, converged| IterationState {
        y21: state_y21,
        y12: state_y12,
        iteration,
        residual,
        quadratic_constant: quadratic_constant(&history),
        history,
        converged,
        scale,
    };
    if delta0 <= opts.tol * scale {
        return Ok(done(y21, y12, 0, delta0, history, true));
    }

    let solver = LinearStepSolver::new(&blocks.e_d, &blocks.a_d)?;
    let mut residual = delta0;
    for k in 1..=opts.max_iter {
        let y21h = y21.adjoint();
        let y12h = y12.adjoint();
        let (n21, n12) = solver.solve(
            &(-hermitian_part(&(&blocks.da11 + &y21h * &blocks.da22 * &y21))),
            &(-skew_part(&(&blocks.de11 + &y21h * &blocks.de22 * &y21))),
            &(-hermitian_part(&(&blocks.da22 + &y12h * &blocks.da11 * &y12))),
            &(-skew_part(&(&blocks.de22 + &y12h * &blocks.de11 * &y12))),
        )?;
        let next = residual_delta(&blocks.residual_blocks(&n21, &n12));
        if !next.is_finite() {
            return Err(Error::NonConvergence {
                iterations: k,
                residual: next,
            });
        }
        if next <= opts.tol * scale {
            history.push(next);
            return Ok(done(n21, n12, k, next, history, true));
        }
        if next > 0.5 * residual {
            // stagnation: keep whichever iterate is better
            let improved = next < residual;
            if improved {
                history.push(next);
                y21 = n21;
                y12 = n12;
                residual = next;
            }
            let converged = residual <= opts.stagnation_tol * scale;
            let iterations = if improved { k } else { k - 1 };
            return Ok(done(y21, y12, iterations, residual, history, converged));
        }
        history.push(next);
        y21 = n21;
        y12 = n12;
        residual = next;
    }
    Ok(done(y21, y12, opts.max_iter, residual, history, false))
}
