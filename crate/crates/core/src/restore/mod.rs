//! Restoration of a structurally perturbed even pencil: a congruence
//! `Z = diag(I + Ŷ, I_m)` that brings `(ℰ + Δℰ, 𝒜 + Δ𝒜)` back to the exact
//! block structure of a descriptor system, and the backward errors this
//! implies for the system matrices.

mod certificate;
mod iterate;
mod kron;
mod linear;
mod polar;

pub use certificate::{convergence_certificate, ConvergenceCertificate};
pub use iterate::{iterate_restoration, residual_delta, IterationOptions, IterationState, RestorationBlocks};
pub use kron::{build_k, KroneckerPair};
pub use linear::{linear_step_bound, solve_linear_step, LinearStepSolver};
pub use polar::{polar_restore, PolarBound, PolarRestore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block, frobenius_list, hermitian_defect, hermitian_eigenvalues, hermitian_part, identity, set_block, ComplexMatrix,
};
use crate::pencil::{build_even_pencil, EvenPencil, StructuredPerturbation};
use crate::systems::{descriptor_to_ph, validate_ph, DescriptorSystem, DEFAULT_VALIDATION_TOL};

/// `Z = [[I, Y₁₂(I+Y₂₂), 0], [Y₂₁, I+Y₂₂, 0], [0, 0, I_m]]`, i.e. the product
/// `[[I, Y₁₂, 0], [Y₂₁, I, 0], [0, 0, I]]·diag(I, I+Y₂₂, I)`. Returns `Z` and
/// `Ŷ = [[0, Y₁₂(I+Y₂₂)], [Y₂₁, Y₂₂]]`.
pub fn assemble_z(
    y21: &ComplexMatrix,
    y12: &ComplexMatrix,
    y22: &ComplexMatrix,
    n: usize,
    m: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if [y21, y12, y22].iter().any(|y| y.shape() != (n, n)) {
        return Err(Error::Dimension(format!("Y blocks must be {n}x{n}")));
    }
    let z22 = identity(n) + y22;
    let mut y_hat = ComplexMatrix::zeros(2 * n, 2 * n);
    set_block(&mut y_hat, 0, n, &(y12 * &z22));
    set_block(&mut y_hat, n, 0, y21);
    set_block(&mut y_hat, n, n, y22);
    let mut z = identity(2 * n + m);
    let top = identity(2 * n) + &y_hat;
    set_block(&mut z, 0, 0, &top);
    Ok((z, y_hat))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorBackwardErrors {
    pub de: ComplexMatrix,
    pub da: ComplexMatrix,
    pub db: ComplexMatrix,
    pub dc: ComplexMatrix,
    pub dd: ComplexMatrix,
}

impl DescriptorBackwardErrors {
    pub fn norm(&self) -> f64 {
        frobenius_list(&[&self.de, &self.da, &self.db, &self.dc, &self.dd])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhBackwardErrors {
    pub dr: ComplexMatrix,
    pub dj: ComplexMatrix,
    pub dg: ComplexMatrix,
    pub dp: ComplexMatrix,
}

impl PhBackwardErrors {
    /// `ΔR = −(ΔA+ΔAᴴ)/2`, `ΔJ = (ΔA−ΔAᴴ)/2`, `ΔG = (ΔB+ΔCᴴ)/2`,
    /// `ΔP = (ΔCᴴ−ΔB)/2`.
    pub fn from_descriptor(d: &DescriptorBackwardErrors) -> Self {
        let dch = d.dc.adjoint();
        Self {
            dr: -hermitian_part(&d.da),
            dj: crate::linalg::skew_part(&d.da),
            dg: (&d.db + &dch).scale(0.5),
            dp: (&dch - &d.db).scale(0.5),
        }
    }

    pub fn norm(&self) -> f64 {
        frobenius_list(&[&self.dr, &self.dj, &self.dg, &self.dp])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestorationOptions {
    pub iteration: IterationOptions,
    /// Zero blocks of the restored pencil must be below `zero_tol·‖(ℰ', 𝒜')‖_F`.
    pub zero_tol: f64,
    /// Reject originals that are not port-Hamiltonian.
    pub validate_original: bool,
}

impl Default for RestorationOptions {
    fn default() -> Self {
        Self {
            iteration: IterationOptions::default(),
            zero_tol: 1e-13,
            validate_original: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RestorationResult {
    pub z: ComplexMatrix,
    pub y_hat: ComplexMatrix,
    pub y21: ComplexMatrix,
    pub y12: ComplexMatrix,
    pub y22: ComplexMatrix,
    /// `‖(Y₂₁, Y₁₂)‖_F`, the size of the solution of the quadratic equations.
    pub y_norm: f64,
    pub restored: DescriptorSystem,
    pub restored_pencil: EvenPencil,
    pub backward_errors_descriptor: DescriptorBackwardErrors,
    pub backward_errors_ph: PhBackwardErrors,
    pub certificate: ConvergenceCertificate,
    pub linear_bound: Option<f64>,
    pub polar_bound: Option<PolarBound>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub quadratic_constant: Option<f64>,
    /// Largest zero-block entry norm of the congruence, relative to the
    /// perturbed pencil's norm.
    pub structure_defect: f64,
}

pub fn full_restoration(
    original: &DescriptorSystem,
    pert: &StructuredPerturbation,
    opts: &RestorationOptions,
) -> Result<RestorationResult> {
    let (n, m) = (original.order(), original.ports());
    if pert.n() != n || pert.m() != m {
        return Err(Error::Dimension("perturbation partition differs from system".into()));
    }
    if opts.validate_original {
        let report = validate_ph(&descriptor_to_ph(original), DEFAULT_VALIDATION_TOL);
        if !report.passed {
            let names: Vec<&str> = report.violations.iter().map(|v| v.constraint.as_str()).collect();
            return Err(Error::InvalidArgument(format!(
                "original system is not port-Hamiltonian: {}",
                names.join(", ")
            )));
        }
    }
    let pencil = build_even_pencil(original);
    let perturbed = pencil.perturbed(pert)?;
    let scale = perturbed.norm();
    let blocks = RestorationBlocks::from_pencil(&perturbed)?;

    let certificate = convergence_certificate(
        &blocks.e_d,
        &blocks.a_d,
        &blocks.de11,
        &blocks.da11,
        &blocks.de22,
        &blocks.da22,
        &pert.de12,
        &pert.da12,
    )?;
    let linear_bound = linear_step_bound(
        &original.e,
        &original.a,
        &blocks.de11,
        &blocks.da11,
        &blocks.de22,
        &blocks.da22,
        &pert.de12,
        &pert.da12,
    )?;

    let state = iterate::iterate_blocks(&blocks, scale, &opts.iteration)?;
    if !state.converged {
        return Err(Error::NonConvergence {
            iterations: state.iteration,
            residual: state.residual,
        });
    }

    // (1,2) block of Z₁ᴴℰ'Z₁ before the polar correction
    let e_mid = &blocks.de11 * &state.y12 + &blocks.e_d - state.y21.adjoint() * blocks.e_d.adjoint() * &state.y12
        + state.y21.adjoint() * &blocks.de22;
    let polar = polar_restore(&e_mid, Some(&original.e))?;
    let (z, y_hat) = assemble_z(&state.y21, &state.y12, &polar.y22, n, m)?;

    let zh = z.adjoint();
    let e2 = &zh * &perturbed.ecal * &z;
    let a2 = &zh * &perturbed.acal * &z;
    let zero_blocks = [
        block(&e2, 0, 0, n, n),
        block(&e2, n, n, n, n),
        block(&e2, 2 * n, 0, m, 2 * n + m),
        block(&e2, 0, 2 * n, 2 * n, m),
        block(&a2, 0, 0, n, n),
        block(&a2, n, n, n, n),
    ];
    let structure_defect = zero_blocks.iter().map(|b| b.norm()).fold(0.0, f64::max) / scale.max(f64::MIN_POSITIVE);
    if structure_defect > opts.zero_tol {
        return Err(Error::Restoration(format!(
            "zero blocks of the restored pencil reach {structure_defect:.3e} relative"
        )));
    }
    let e_block = block(&e2, 0, n, n, n);
    let e_defect = hermitian_defect(&e_block);
    if e_defect > 1e-12 * e_block.norm() {
        return Err(Error::Restoration(format!(
            "restored E is not Hermitian ({e_defect:.3e})"
        )));
    }
    let e_r = hermitian_part(&e_block);
    if !(hermitian_eigenvalues(&e_r)[0] > 0.0) {
        return Err(Error::Restoration("restored E is not positive definite".into()));
    }

    let a33 = block(&a2, 2 * n, 2 * n, m, m);
    let d_r = &original.d + (a33 - (&original.d + original.d.adjoint())).scale(0.5);
    let restored = DescriptorSystem::new(
        e_r,
        block(&a2, 0, n, n, n),
        block(&a2, 0, 2 * n, n, m),
        block(&a2, 2 * n, n, m, n),
        hermitian_part(&d_r) + crate::linalg::skew_part(&original.d),
    )?;
    let restored_pencil = build_even_pencil(&restored);
    let backward_errors_descriptor = DescriptorBackwardErrors {
        de: &restored.e - &original.e,
        da: &restored.a - &original.a,
        db: &restored.b - &original.b,
        dc: &restored.c - &original.c,
        dd: &restored.d - &original.d,
    };
    let backward_errors_ph = PhBackwardErrors::from_descriptor(&backward_errors_descriptor);

    Ok(RestorationResult {
        z,
        y_hat,
        y_norm: frobenius_list(&[&state.y21, &state.y12]),
        y21: state.y21,
        y12: state.y12,
        y22: polar.y22,
        restored,
        restored_pencil,
        backward_errors_descriptor,
        backward_errors_ph,
        certificate,
        linear_bound,
        polar_bound: polar.bound,
        residual_history: state.history,
        iterations: state.iteration,
        quadratic_constant: state.quadratic_constant,
        structure_defect,
    })
}
