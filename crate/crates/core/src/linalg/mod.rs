//! Dense complex matrix services: vectorization, Kronecker products,
//! Hermitian/skew splits, inertia, singular triples, polar factors and
//! dense solves. Everything works in complex double precision.

mod qz;

pub use qz::{generalized_eigenvalues, GeneralizedEigenvalue};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from row-major entries, rejecting NaN/Inf.
pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = ComplexMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m)?;
    Ok(m)
}

/// Promotes a real row-major matrix to complex.
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<ComplexMatrix> {
    let entries: Vec<Complex64> = entries.iter().map(|&x| c64(x, 0.0)).collect();
    from_row_major(rows, cols, &entries)
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// Column-stacking vectorization.
pub fn vec(m: &ComplexMatrix) -> ComplexVector {
    // nalgebra storage is already column-major
    ComplexVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &ComplexVector, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.view_mut((i * rb, j * cb), (rb, cb))
                .zip_apply(b, |o, bv| *o = aij * bv);
        }
    }
    out
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn skew_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m - m.adjoint()).scale(0.5)
}

/// Splits a square matrix into its Hermitian part `W = (Y+Yᴴ)/2` and its
/// skew-Hermitian part `V = (Y−Yᴴ)/2`.
pub fn herm_skew_split(y: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    ensure_square(y)?;
    Ok((hermitian_part(y), skew_part(y)))
}

/// `‖M − Mᴴ‖_F`.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `‖M + Mᴴ‖_F`.
pub fn skew_defect(m: &ComplexMatrix) -> f64 {
    (m + m.adjoint()).norm()
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Smallest singular value; zero for empty matrices.
pub fn sigma_min(m: &ComplexMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Frobenius norm of a list of matrices.
pub fn frobenius_list(ms: &[&ComplexMatrix]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Eigenvalue sign counts of a Hermitian matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn new(positive: usize, negative: usize, zero: usize) -> Self {
        Self {
            positive,
            negative,
            zero,
        }
    }

    pub fn order(&self) -> usize {
        self.positive + self.negative + self.zero
    }
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}, {}, {}}}", self.positive, self.negative, self.zero)
    }
}

pub const DEFAULT_INERTIA_TOL: f64 = 1e-10;

/// Real eigenvalues of a Hermitian matrix (its Hermitian part is used), ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    if h.is_empty() {
        return Vec::new();
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(h));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Inertia with the relative zero threshold `tol·‖H‖₂`.
pub fn inertia(h: &ComplexMatrix, tol: f64) -> Result<Inertia> {
    ensure_square(h)?;
    let defect = hermitian_defect(h);
    let scale = h.norm();
    if defect > tol * scale {
        return Err(Error::Symmetry {
            what: "inertia input (Hermitian)",
            residual: defect,
            tolerance: tol * scale,
        });
    }
    let vals = hermitian_eigenvalues(h);
    let spectral = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let thresh = tol * spectral;
    let mut inertia = Inertia::new(0, 0, 0);
    for v in vals {
        if v > thresh {
            inertia.positive += 1;
        } else if v < -thresh {
            inertia.negative += 1;
        } else {
            inertia.zero += 1;
        }
    }
    Ok(inertia)
}

#[derive(Clone, Debug)]
pub struct SingularTriple {
    pub sigma: f64,
    pub u: ComplexVector,
    pub v: ComplexVector,
}

/// Smallest singular value with its left and right singular vectors, so that
/// `M v = σ u`.
pub fn smallest_singular_triple(m: &ComplexMatrix) -> SingularTriple {
    assert!(!m.is_empty(), "singular triple of an empty matrix");
    let svd = m.clone().svd(true, true);
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    let u = svd.u.as_ref().expect("u requested").column(idx).into_owned();
    let v = svd.v_t.as_ref().expect("v_t requested").row(idx).adjoint().into_owned();
    SingularTriple { sigma, u, v }
}

#[derive(Clone, Debug)]
pub struct PolarFactors {
    pub unitary: ComplexMatrix,
    pub hermitian: ComplexMatrix,
}

/// Polar decomposition `M = U·H` computed from the SVD.
pub fn polar_factor(m: &ComplexMatrix) -> Result<PolarFactors> {
    ensure_square(m)?;
    let svd = m.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let smin = s.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::Singular {
            what: "polar factor input",
            sigma_min: smin,
            condition: smax / smin,
        });
    }
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let unitary = &u * &v_t;
    let sigma = ComplexMatrix::from_diagonal(&s.map(|x| c64(x, 0.0)));
    let hermitian = hermitian_part(&(v_t.adjoint() * sigma * &v_t));
    Ok(PolarFactors { unitary, hermitian })
}

#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub x: ComplexVector,
    /// `σ_max/σ_min` of the coefficient matrix.
    pub condition: f64,
}

/// Solves `A x = b` with full pivoting and one step of iterative refinement.
pub fn solve_dense(a: &ComplexMatrix, b: &ComplexVector) -> Result<DenseSolution> {
    ensure_square(a)?;
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "{}x{} system with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let s = singular_values(a);
    let (smax, smin) = (s.first().copied().unwrap_or(0.0), s.last().copied().unwrap_or(0.0));
    let condition = smax / smin;
    if !(smin >= 1e-14 * smax) || smax == 0.0 {
        return Err(Error::Singular {
            what: "dense system",
            sigma_min: smin,
            condition,
        });
    }
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(b).ok_or(Error::Singular {
        what: "dense system",
        sigma_min: smin,
        condition,
    })?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(DenseSolution { x, condition })
}

/// Solves a real square system with full pivoting and one refinement step.
pub(crate) fn solve_real(
    lu: &nalgebra::linalg::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Option<DVector<f64>> {
    let mut x = lu.solve(b)?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Some(x)
}

/// Solves `A X = B` for several right-hand sides; same pivoting, refinement
/// and singularity threshold as [`solve_dense`].
pub fn solve_dense_multi(a: &ComplexMatrix, b: &ComplexMatrix, what: &'static str) -> Result<ComplexMatrix> {
    ensure_square(a)?;
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "{}x{} system with {} right-hand side rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let s = singular_values(a);
    let (smax, smin) = (s.first().copied().unwrap_or(0.0), s.last().copied().unwrap_or(0.0));
    if !(smin >= 1e-14 * smax) || smax == 0.0 {
        return Err(Error::Singular {
            what,
            sigma_min: smin,
            condition: smax / smin,
        });
    }
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(b).ok_or(Error::Singular {
        what,
        sigma_min: smin,
        condition: smax / smin,
    })?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

/// Fixed pseudo-random shifts used by the regularity test.
const REGULARITY_SHIFTS: [(f64, f64); 3] = [
    (0.6180339887, 1.3247179572),
    (-1.1892071150, 0.4142135624),
    (0.2718281828, -0.8660254038),
];

/// `det(λ₀E − A) ≢ 0`, tested through the rank of `λ₀E − A` at three fixed
/// complex shifts. The pencil is declared singular only if every shift is
/// rank deficient (`σ_min ≤ tol·(|λ₀|‖E‖₂ + ‖A‖₂)`).
pub fn is_regular_pencil(e: &ComplexMatrix, a: &ComplexMatrix, tol: f64) -> bool {
    if e.is_empty() {
        return true;
    }
    let scale_e = norm2(e);
    let scale_a = norm2(a);
    REGULARITY_SHIFTS.iter().any(|&(re, im)| {
        let shift = c64(re, im);
        let m = e.map(|z| z * shift) - a;
        let scale = shift.norm() * scale_e + scale_a;
        scale > 0.0 && sigma_min(&m) > tol * scale
    })
}

/// Block view helper: copies `rows x cols` starting at `(r0, c0)`.
pub fn block(m: &ComplexMatrix, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
    m.view((r0, c0), (rows, cols)).into_owned()
}

pub fn set_block(m: &mut ComplexMatrix, r0: usize, c0: usize, b: &ComplexMatrix) {
    m.view_mut((r0, c0), b.shape()).copy_from(b);
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}
