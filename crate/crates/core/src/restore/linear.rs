//! Linear step of the restoration: the coupled equations
//! `P Y + Yᴴ Pᴴ = H` (Hermitian) and `Q Y − Yᴴ Qᴴ = S` (skew-Hermitian).
//!
//! The map `Y ↦ (PY + YᴴPᴴ, QY − YᴴQᴴ)` is only real-linear, so it is
//! realized as a square real system in `(Re Y, Im Y)`. The right-hand side
//! is parametrized isometrically: a Hermitian `H` contributes its real
//! diagonal and `√2·Re`, `√2·Im` of its strict upper triangle; a skew `S`
//! contributes its imaginary diagonal and the same off-diagonal pairs.

use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, ensure_square, frobenius_list, hermitian_defect, hermitian_part, skew_defect, skew_part, solve_real,
    ComplexMatrix,
};

use super::kron::build_k;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn herm_params(h: &ComplexMatrix, out: &mut [f64]) {
    let n = h.nrows();
    let mut k = 0;
    for i in 0..n {
        out[k] = h[(i, i)].re;
        k += 1;
    }
    for j in 0..n {
        for i in 0..j {
            out[k] = SQRT2 * h[(i, j)].re;
            out[k + 1] = SQRT2 * h[(i, j)].im;
            k += 2;
        }
    }
}

fn skew_params(s: &ComplexMatrix, out: &mut [f64]) {
    let n = s.nrows();
    let mut k = 0;
    for i in 0..n {
        out[k] = s[(i, i)].im;
        k += 1;
    }
    for j in 0..n {
        for i in 0..j {
            out[k] = SQRT2 * s[(i, j)].re;
            out[k + 1] = SQRT2 * s[(i, j)].im;
            k += 2;
        }
    }
}

/// Factored real-split operator for one `(P, Q)` pair.
#[derive(Clone)]
struct SplitOperator {
    n: usize,
    matrix: DMatrix<f64>,
    lu: nalgebra::linalg::FullPivLU<f64, Dyn, Dyn>,
    sigma_min: f64,
}

impl SplitOperator {
    fn new(p: &ComplexMatrix, q: &ComplexMatrix, what: &'static str) -> Result<Self> {
        let n = p.nrows();
        let nn = n * n;
        let mut matrix = DMatrix::<f64>::zeros(2 * nn, 2 * nn);
        let mut y = ComplexMatrix::zeros(n, n);
        for part in 0..2 {
            let unit = if part == 0 { c64(1.0, 0.0) } else { c64(0.0, 1.0) };
            for k in 0..nn {
                y[(k % n, k / n)] = unit;
                let h = p * &y + y.adjoint() * p.adjoint();
                let s = q * &y - y.adjoint() * q.adjoint();
                let mut col = matrix.column_mut(part * nn + k);
                herm_params(&h, &mut col.as_mut_slice()[..nn]);
                skew_params(&s, &mut col.as_mut_slice()[nn..]);
                y[(k % n, k / n)] = c64(0.0, 0.0);
            }
        }
        let sv = matrix.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > 1e-13 * smax) {
            return Err(Error::Singular {
                what,
                sigma_min: smin,
                condition: smax / smin,
            });
        }
        let lu = matrix.clone().full_piv_lu();
        Ok(Self {
            n,
            matrix,
            lu,
            sigma_min: smin,
        })
    }

    fn solve(&self, h: &ComplexMatrix, s: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.n;
        let nn = n * n;
        let mut b = DVector::<f64>::zeros(2 * nn);
        herm_params(h, &mut b.as_mut_slice()[..nn]);
        skew_params(s, &mut b.as_mut_slice()[nn..]);
        let x = solve_real(&self.lu, &self.matrix, &b).ok_or(Error::Singular {
            what: "restoration linear step",
            sigma_min: self.sigma_min,
            condition: f64::INFINITY,
        })?;
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            c64(x[j * n + i], x[nn + j * n + i])
        }))
    }
}

/// Both linear operators of the restoration for fixed coefficients
/// `E_Δ`, `A_Δ`, factored once and reused across iterations:
/// `Y₂₁`: `A_Δ Y + Yᴴ A_Δᴴ`, `E_Δ Y − Yᴴ E_Δᴴ`;
/// `Y₁₂`: `A_Δᴴ Y + Yᴴ A_Δ`, `−E_Δᴴ Y + Yᴴ E_Δ`.
#[derive(Clone)]
pub struct LinearStepSolver {
    lower: SplitOperator,
    upper: SplitOperator,
}

impl LinearStepSolver {
    pub fn new(e_d: &ComplexMatrix, a_d: &ComplexMatrix) -> Result<Self> {
        ensure_square(e_d)?;
        if e_d.shape() != a_d.shape() {
            return Err(Error::Dimension(format!(
                "E is {:?}, A is {:?}",
                e_d.shape(),
                a_d.shape()
            )));
        }
        Ok(Self {
            lower: SplitOperator::new(a_d, e_d, "linear operator for Y21")?,
            upper: SplitOperator::new(&a_d.adjoint(), &(-e_d.adjoint()), "linear operator for Y12")?,
        })
    }

    /// Smallest singular values of the two real operators.
    pub fn sigma_min(&self) -> (f64, f64) {
        (self.lower.sigma_min, self.upper.sigma_min)
    }

    /// Solves for `Y₂₁` with Hermitian right-hand side `h21` and skew
    /// right-hand side `s21`, and for `Y₁₂` likewise.
    pub fn solve(
        &self,
        h21: &ComplexMatrix,
        s21: &ComplexMatrix,
        h12: &ComplexMatrix,
        s12: &ComplexMatrix,
    ) -> Result<(ComplexMatrix, ComplexMatrix)> {
        Ok((self.lower.solve(h21, s21)?, self.upper.solve(h12, s12)?))
    }
}

fn check_diagonal_blocks(
    de11: &ComplexMatrix,
    da11: &ComplexMatrix,
    de22: &ComplexMatrix,
    da22: &ComplexMatrix,
) -> Result<()> {
    let checks: [(&'static str, f64, f64); 4] = [
        ("dE11", skew_defect(de11), de11.norm()),
        ("dE22", skew_defect(de22), de22.norm()),
        ("dA11", hermitian_defect(da11), da11.norm()),
        ("dA22", hermitian_defect(da22), da22.norm()),
    ];
    for (what, residual, scale) in checks {
        let tolerance = 1e-13 * scale.max(1.0);
        if residual > tolerance {
            return Err(Error::Symmetry {
                what,
                residual,
                tolerance,
            });
        }
    }
    Ok(())
}

/// Solution of the linearized restoration equations
/// `A_Δ Y₂₁ + Y₂₁ᴴA_Δᴴ = −dA₁₁`, `E_Δ Y₂₁ − Y₂₁ᴴE_Δᴴ = −dE₁₁` and
/// `A_ΔᴴY₁₂ + Y₁₂ᴴA_Δ = −dA₂₂`, `−E_ΔᴴY₁₂ + Y₁₂ᴴE_Δ = −dE₂₂`.
pub fn solve_linear_step(
    e_d: &ComplexMatrix,
    a_d: &ComplexMatrix,
    de11: &ComplexMatrix,
    da11: &ComplexMatrix,
    de22: &ComplexMatrix,
    da22: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = e_d.nrows();
    if [de11, da11, de22, da22].iter().any(|m| m.shape() != (n, n)) {
        return Err(Error::Dimension("diagonal perturbation blocks must be n x n".into()));
    }
    check_diagonal_blocks(de11, da11, de22, da22)?;
    let solver = LinearStepSolver::new(e_d, a_d)?;
    solver.solve(
        &(-hermitian_part(da11)),
        &(-skew_part(de11)),
        &(-hermitian_part(da22)),
        &(-skew_part(de22)),
    )
}

/// A-priori bound for the linear step, computed from the unperturbed pair
/// `(E, A)`: `√2‖(Y₂₁, Y₁₂)‖_F ≤ ‖(dE₁₁, dA₁₁, dE₂₂, dA₂₂)‖_F / (σ − 2δ̂)`
/// with `σ = min σ_min(K₁(E,A), K₂(E,A))` and
/// `δ̂ = max(‖dA₁₂‖₂, ‖dE₁₂‖₂)`. `None` when `δ̂ ≥ σ/2`.
#[allow(clippy::too_many_arguments)]
pub fn linear_step_bound(
    e: &ComplexMatrix,
    a: &ComplexMatrix,
    de11: &ComplexMatrix,
    da11: &ComplexMatrix,
    de22: &ComplexMatrix,
    da22: &ComplexMatrix,
    de12: &ComplexMatrix,
    da12: &ComplexMatrix,
) -> Result<Option<f64>> {
    let k = build_k(e, a)?;
    let delta_hat = crate::linalg::norm2(da12).max(crate::linalg::norm2(de12));
    let denom = k.sigma_min() - 2.0 * delta_hat;
    if denom <= 0.0 {
        return Ok(None);
    }
    Ok(Some(frobenius_list(&[de11, da11, de22, da22]) / denom))
}
