//! Even pencils `sℰ − 𝒜` attached to descriptor systems, the structured
//! perturbation model, and spectral/passivity diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block, c64, ensure_finite, generalized_eigenvalues, hermitian_defect, hermitian_part, identity, inertia,
    is_regular_pencil, norm2, set_block, sigma_min, skew_defect, skew_part, solve_dense_multi, ComplexMatrix, Inertia,
    DEFAULT_INERTIA_TOL, I,
};
use crate::rng;
use crate::systems::{DescriptorSystem, PHSystem};

/// `ℰ` skew-Hermitian, `𝒜` Hermitian, both `(2n+m)×(2n+m)` and partitioned
/// as `(n, n, m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenPencil {
    pub ecal: ComplexMatrix,
    pub acal: ComplexMatrix,
    pub n: usize,
    pub m: usize,
}

impl EvenPencil {
    pub fn new(ecal: ComplexMatrix, acal: ComplexMatrix, n: usize, m: usize) -> Result<Self> {
        let size = 2 * n + m;
        if ecal.shape() != (size, size) || acal.shape() != (size, size) {
            return Err(Error::Dimension(format!(
                "pencil blocks {:?}/{:?} do not match n={n}, m={m}",
                ecal.shape(),
                acal.shape()
            )));
        }
        ensure_finite(&ecal)?;
        ensure_finite(&acal)?;
        let (es, ah) = (skew_defect(&ecal), hermitian_defect(&acal));
        if es > 1e-12 * ecal.norm() {
            return Err(Error::Symmetry {
                what: "E-calligraphic",
                residual: es,
                tolerance: 1e-12 * ecal.norm(),
            });
        }
        if ah > 1e-12 * acal.norm() {
            return Err(Error::Symmetry {
                what: "A-calligraphic",
                residual: ah,
                tolerance: 1e-12 * acal.norm(),
            });
        }
        Ok(Self { ecal, acal, n, m })
    }

    pub fn size(&self) -> usize {
        2 * self.n + self.m
    }

    /// `‖(ℰ, 𝒜)‖_F`.
    pub fn norm(&self) -> f64 {
        (self.ecal.norm_squared() + self.acal.norm_squared()).sqrt()
    }

    /// Block `(i, j)` of `ℰ` with 1-based block indices in the `(n, n, m)`
    /// partition.
    pub fn e_block(&self, i: usize, j: usize) -> ComplexMatrix {
        self.part(&self.ecal, i, j)
    }

    pub fn a_block(&self, i: usize, j: usize) -> ComplexMatrix {
        self.part(&self.acal, i, j)
    }

    fn part(&self, m: &ComplexMatrix, i: usize, j: usize) -> ComplexMatrix {
        let offsets = [0, self.n, 2 * self.n, 2 * self.n + self.m];
        block(
            m,
            offsets[i - 1],
            offsets[j - 1],
            offsets[i] - offsets[i - 1],
            offsets[j] - offsets[j - 1],
        )
    }

    /// `(ℰ + Δℰ, 𝒜 + Δ𝒜)`.
    pub fn perturbed(&self, p: &StructuredPerturbation) -> Result<EvenPencil> {
        if p.n() != self.n || p.m() != self.m {
            return Err(Error::Dimension("perturbation partition differs from pencil".into()));
        }
        let (de, da) = assemble_perturbation(p)?;
        Ok(EvenPencil {
            ecal: &self.ecal + de,
            acal: &self.acal + da,
            n: self.n,
            m: self.m,
        })
    }

    /// `(Zᴴℰ Z, Zᴴ𝒜 Z)`, re-symmetrized to remove rounding asymmetry.
    pub fn congruence(&self, z: &ComplexMatrix) -> Result<EvenPencil> {
        if z.shape() != (self.size(), self.size()) {
            return Err(Error::Dimension("congruence factor has wrong size".into()));
        }
        let zh = z.adjoint();
        Ok(EvenPencil {
            ecal: skew_part(&(&zh * &self.ecal * z)),
            acal: hermitian_part(&(&zh * &self.acal * z)),
            n: self.n,
            m: self.m,
        })
    }
}

pub fn build_even_pencil(sys: &DescriptorSystem) -> EvenPencil {
    let (n, m) = (sys.order(), sys.ports());
    let size = 2 * n + m;
    let mut ecal = ComplexMatrix::zeros(size, size);
    set_block(&mut ecal, 0, n, &sys.e);
    set_block(&mut ecal, n, 0, &(-sys.e.adjoint()));
    let mut acal = ComplexMatrix::zeros(size, size);
    set_block(&mut acal, 0, n, &sys.a);
    set_block(&mut acal, 0, 2 * n, &sys.b);
    set_block(&mut acal, n, 0, &sys.a.adjoint());
    set_block(&mut acal, n, 2 * n, &sys.c.adjoint());
    set_block(&mut acal, 2 * n, 0, &sys.b.adjoint());
    set_block(&mut acal, 2 * n, n, &sys.c);
    set_block(&mut acal, 2 * n, 2 * n, &(&sys.d + sys.d.adjoint()));
    EvenPencil { ecal, acal, n, m }
}

/// `X̂ = diag(X, I_m/√2)` with `X = [[I, I], [I, −I]]/√2`.
pub fn x_hat(n: usize, m: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = ComplexMatrix::zeros(2 * n + m, 2 * n + m);
    for k in 0..n {
        x[(k, k)] = c64(s, 0.0);
        x[(k, n + k)] = c64(s, 0.0);
        x[(n + k, k)] = c64(s, 0.0);
        x[(n + k, n + k)] = c64(-s, 0.0);
    }
    for k in 0..m {
        x[(2 * n + k, 2 * n + k)] = c64(s, 0.0);
    }
    x
}

/// Even pencil in port-Hamiltonian coordinates, i.e. the congruence
/// `X̂ᴴ(sℰ − 𝒜)X̂` of the descriptor pencil written in terms of
/// `(E, J, R, G, P, S)`:
/// `𝒜 = [[−R, −J, G], [−Jᴴ, R, −P], [Gᴴ, −Pᴴ, S]]` and
/// `ℰ = ½[[E−Eᴴ, −(E+Eᴴ)], [E+Eᴴ, Eᴴ−E]]` (which is `[[0, −E], [E, 0]]` for
/// Hermitian `E`).
pub fn build_ph_even_pencil(ph: &PHSystem) -> EvenPencil {
    let (n, m) = (ph.order(), ph.ports());
    let size = 2 * n + m;
    let herm = hermitian_part(&ph.e);
    let skew = skew_part(&ph.e);
    let mut ecal = ComplexMatrix::zeros(size, size);
    set_block(&mut ecal, 0, 0, &skew);
    set_block(&mut ecal, 0, n, &(-&herm));
    set_block(&mut ecal, n, 0, &herm);
    set_block(&mut ecal, n, n, &(-&skew));
    let mut acal = ComplexMatrix::zeros(size, size);
    set_block(&mut acal, 0, 0, &(-&ph.r));
    set_block(&mut acal, 0, n, &(-&ph.j));
    set_block(&mut acal, 0, 2 * n, &ph.g);
    set_block(&mut acal, n, 0, &(-ph.j.adjoint()));
    set_block(&mut acal, n, n, &ph.r);
    set_block(&mut acal, n, 2 * n, &(-&ph.p));
    set_block(&mut acal, 2 * n, 0, &ph.g.adjoint());
    set_block(&mut acal, 2 * n, n, &(-ph.p.adjoint()));
    set_block(&mut acal, 2 * n, 2 * n, &ph.s);
    EvenPencil { ecal, acal, n, m }
}

/// Perturbation respecting the block structure of the even pencil: `Δℰ`
/// keeps a zero third block row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredPerturbation {
    pub de11: ComplexMatrix,
    pub de12: ComplexMatrix,
    pub de22: ComplexMatrix,
    pub da11: ComplexMatrix,
    pub da12: ComplexMatrix,
    pub da22: ComplexMatrix,
    pub da13: ComplexMatrix,
    pub da23: ComplexMatrix,
    pub da33: ComplexMatrix,
}

impl StructuredPerturbation {
    pub fn zeros(n: usize, m: usize) -> Self {
        let z = || ComplexMatrix::zeros(n, n);
        Self {
            de11: z(),
            de12: z(),
            de22: z(),
            da11: z(),
            da12: z(),
            da22: z(),
            da13: ComplexMatrix::zeros(n, m),
            da23: ComplexMatrix::zeros(n, m),
            da33: ComplexMatrix::zeros(m, m),
        }
    }

    pub fn n(&self) -> usize {
        self.de11.nrows()
    }

    pub fn m(&self) -> usize {
        self.da33.nrows()
    }

    fn blocks(&self) -> [&ComplexMatrix; 9] {
        [
            &self.de11, &self.de12, &self.de22, &self.da11, &self.da12, &self.da22, &self.da13, &self.da23, &self.da33,
        ]
    }

    /// `‖(Δℰ, Δ𝒜)‖_F` of the assembled matrices (off-diagonal blocks count
    /// twice).
    pub fn norm(&self) -> f64 {
        let diag = self.de11.norm_squared()
            + self.de22.norm_squared()
            + self.da11.norm_squared()
            + self.da22.norm_squared()
            + self.da33.norm_squared();
        let off =
            self.de12.norm_squared() + self.da12.norm_squared() + self.da13.norm_squared() + self.da23.norm_squared();
        (diag + 2.0 * off).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let s = |m: &ComplexMatrix| m.scale(factor);
        Self {
            de11: s(&self.de11),
            de12: s(&self.de12),
            de22: s(&self.de22),
            da11: s(&self.da11),
            da12: s(&self.da12),
            da22: s(&self.da22),
            da13: s(&self.da13),
            da23: s(&self.da23),
            da33: s(&self.da33),
        }
    }

    /// Reads the structured blocks out of full `(Δℰ, Δ𝒜)`; fails if `Δℰ` has
    /// a nonzero third block row or column.
    pub fn from_matrices(de: &ComplexMatrix, da: &ComplexMatrix, n: usize, m: usize) -> Result<Self> {
        let size = 2 * n + m;
        if de.shape() != (size, size) || da.shape() != (size, size) {
            return Err(Error::Dimension(
                "perturbation matrices do not match the partition".into(),
            ));
        }
        let third = block(de, 2 * n, 0, m, size).norm() + block(de, 0, 2 * n, size, m).norm();
        if third > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "perturbation of E-calligraphic has a nonzero third block row/column ({third:.3e})"
            )));
        }
        let p = Self {
            de11: block(de, 0, 0, n, n),
            de12: block(de, 0, n, n, n),
            de22: block(de, n, n, n, n),
            da11: block(da, 0, 0, n, n),
            da12: block(da, 0, n, n, n),
            da22: block(da, n, n, n, n),
            da13: block(da, 0, 2 * n, n, m),
            da23: block(da, n, 2 * n, n, m),
            da33: block(da, 2 * n, 2 * n, m, m),
        };
        assemble_perturbation(&p)?;
        Ok(p)
    }
}

fn symmetry_guard(what: &'static str, residual: f64, scale: f64) -> Result<()> {
    let tolerance = 1e-13 * scale.max(1.0);
    if residual > tolerance {
        return Err(Error::Symmetry {
            what,
            residual,
            tolerance,
        });
    }
    Ok(())
}

/// `Δℰ = [[dE11, dE12, 0], [−dE12ᴴ, dE22, 0], [0, 0, 0]]`,
/// `Δ𝒜 = [[dA11, dA12, dA13], [dA12ᴴ, dA22, dA23], [dA13ᴴ, dA23ᴴ, dA33]]`.
/// Diagonal blocks are projected onto their symmetry class after the
/// tolerance check, so the results are exactly skew-Hermitian/Hermitian.
pub fn assemble_perturbation(p: &StructuredPerturbation) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (n, m) = (p.n(), p.m());
    let nn = [&p.de11, &p.de12, &p.de22, &p.da11, &p.da12, &p.da22];
    if nn.iter().any(|b| b.shape() != (n, n))
        || p.da13.shape() != (n, m)
        || p.da23.shape() != (n, m)
        || p.da33.shape() != (m, m)
    {
        return Err(Error::Dimension("inconsistent perturbation block sizes".into()));
    }
    for b in p.blocks() {
        ensure_finite(b)?;
    }
    symmetry_guard("dE11", skew_defect(&p.de11), p.de11.norm())?;
    symmetry_guard("dE22", skew_defect(&p.de22), p.de22.norm())?;
    symmetry_guard("dA11", hermitian_defect(&p.da11), p.da11.norm())?;
    symmetry_guard("dA22", hermitian_defect(&p.da22), p.da22.norm())?;
    symmetry_guard("dA33", hermitian_defect(&p.da33), p.da33.norm())?;

    let size = 2 * n + m;
    let mut de = ComplexMatrix::zeros(size, size);
    set_block(&mut de, 0, 0, &skew_part(&p.de11));
    set_block(&mut de, 0, n, &p.de12);
    set_block(&mut de, n, 0, &(-p.de12.adjoint()));
    set_block(&mut de, n, n, &skew_part(&p.de22));
    let mut da = ComplexMatrix::zeros(size, size);
    set_block(&mut da, 0, 0, &hermitian_part(&p.da11));
    set_block(&mut da, 0, n, &p.da12);
    set_block(&mut da, 0, 2 * n, &p.da13);
    set_block(&mut da, n, 0, &p.da12.adjoint());
    set_block(&mut da, n, n, &hermitian_part(&p.da22));
    set_block(&mut da, n, 2 * n, &p.da23);
    set_block(&mut da, 2 * n, 0, &p.da13.adjoint());
    set_block(&mut da, 2 * n, n, &p.da23.adjoint());
    set_block(&mut da, 2 * n, 2 * n, &hermitian_part(&p.da33));
    Ok((de, da))
}

/// Blocks drawn from the perturbation stream of `seed`, projected onto
/// their symmetry class and rescaled so that `‖(Δℰ, Δ𝒜)‖_F = norm`.
pub fn random_structured_perturbation(n: usize, m: usize, norm: f64, seed: u64) -> Result<StructuredPerturbation> {
    if !(norm >= 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "perturbation norm must be nonnegative, got {norm}"
        )));
    }
    let mut r = rng::seeded(seed, rng::STREAM_PERTURBATION);
    let p = StructuredPerturbation {
        de11: rng::random_skew_hermitian(&mut r, n),
        de12: rng::complex_normal_matrix(&mut r, n, n),
        de22: rng::random_skew_hermitian(&mut r, n),
        da11: rng::random_hermitian(&mut r, n),
        da12: rng::complex_normal_matrix(&mut r, n, n),
        da22: rng::random_hermitian(&mut r, n),
        da13: rng::complex_normal_matrix(&mut r, n, m),
        da23: rng::complex_normal_matrix(&mut r, n, m),
        da33: rng::random_hermitian(&mut r, m),
    };
    let current = p.norm();
    Ok(if current > 0.0 { p.scaled(norm / current) } else { p })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticTolerances {
    /// `|β| ≤ infinite·max(‖ℰ‖₂, ‖𝒜‖₂)` marks an infinite eigenvalue.
    pub infinite: f64,
    /// `|Re λ| ≤ imaginary·(1+|λ|)` marks an imaginary-axis eigenvalue.
    pub imaginary: f64,
    /// Relative rank threshold for the regularity and index tests.
    pub rank: f64,
}

impl Default for DiagnosticTolerances {
    fn default() -> Self {
        Self {
            infinite: 1e-10,
            imaginary: 1e-8,
            rank: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PencilDiagnostics {
    pub regular: bool,
    pub finite_eigenvalues: Vec<Complex64>,
    pub infinite_count: usize,
    pub index_at_most_one: bool,
    pub imaginary_axis_eigenvalues: Vec<Complex64>,
    /// Regular, index at most one and no imaginary-axis eigenvalues.
    pub passivity_verdict: bool,
}

impl PencilDiagnostics {
    /// Largest distance between a finite eigenvalue and the mirror image
    /// `−λ̄` of its nearest partner, relative to `1+|λ|`.
    pub fn symmetry_defect(&self) -> f64 {
        self.finite_eigenvalues
            .iter()
            .map(|l| {
                let mirror = -l.conj();
                self.finite_eigenvalues
                    .iter()
                    .map(|k| (k - mirror).norm())
                    .fold(f64::INFINITY, f64::min)
                    / (1.0 + l.norm())
            })
            .fold(0.0, f64::max)
    }
}

/// `𝒜` compressed onto `ker ℰ` (computed from the eigendecomposition of the
/// Hermitian `iℰ`) is nonsingular ⇔ the pencil has index at most one.
fn index_at_most_one(p: &EvenPencil, tol: f64) -> bool {
    let h = hermitian_part(&p.ecal.map(|z| z * I));
    let eig = h.clone().symmetric_eigen();
    let scale = norm2(&h).max(f64::MIN_POSITIVE);
    let kernel: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k].abs() <= tol * scale)
        .collect();
    if kernel.is_empty() {
        return true;
    }
    let basis = ComplexMatrix::from_fn(h.nrows(), kernel.len(), |i, j| eig.eigenvectors[(i, kernel[j])]);
    let compressed = basis.adjoint() * &p.acal * &basis;
    sigma_min(&compressed) > tol * norm2(&p.acal).max(f64::MIN_POSITIVE)
}

pub fn pencil_eigenvalues(p: &EvenPencil, tol: &DiagnosticTolerances) -> Result<PencilDiagnostics> {
    if !is_regular_pencil(&p.ecal, &p.acal, tol.rank) {
        return Ok(PencilDiagnostics {
            regular: false,
            finite_eigenvalues: Vec::new(),
            infinite_count: 0,
            index_at_most_one: false,
            imaginary_axis_eigenvalues: Vec::new(),
            passivity_verdict: false,
        });
    }
    let scale = norm2(&p.ecal).max(norm2(&p.acal));
    let eigs = generalized_eigenvalues(&p.acal, &p.ecal)?;
    let mut finite = Vec::new();
    let mut infinite_count = 0;
    for ev in &eigs {
        match ev.finite(tol.infinite * scale) {
            Some(l) => finite.push(l),
            None => infinite_count += 1,
        }
    }
    let imaginary: Vec<Complex64> = finite
        .iter()
        .copied()
        .filter(|l| l.re.abs() <= tol.imaginary * (1.0 + l.norm()))
        .collect();
    let index_ok = index_at_most_one(p, tol.rank);
    Ok(PencilDiagnostics {
        regular: true,
        passivity_verdict: index_ok && imaginary.is_empty(),
        finite_eigenvalues: finite,
        infinite_count,
        index_at_most_one: index_ok,
        imaginary_axis_eigenvalues: imaginary,
    })
}

/// `(In(iℰ), In(𝒜 − iωℰ))`; both arguments are Hermitian for real `ω`.
pub fn inertia_checks(p: &EvenPencil, omega: f64) -> Result<(Inertia, Inertia)> {
    let ie = hermitian_part(&p.ecal.map(|z| z * I));
    let shifted = hermitian_part(&(&p.acal - p.ecal.map(|z| z * (I * omega))));
    Ok((
        inertia(&ie, DEFAULT_INERTIA_TOL)?,
        inertia(&shifted, DEFAULT_INERTIA_TOL)?,
    ))
}

#[derive(Clone, Debug)]
pub struct IndexOneTest {
    pub s_hat: ComplexMatrix,
    pub sigma_min: f64,
    pub index_at_most_one: bool,
}

/// Index test for `E = diag(E11, 0)` with `E11` of order `n1`:
/// `Ŝ = [[0, A22, B2], [A22ᴴ, 0, C2ᴴ], [B2ᴴ, C2, D+Dᴴ]]` must be
/// nonsingular, where `A22`, `B2`, `C2` are the blocks acting on the
/// algebraic part.
pub fn index_one_matrix(sys: &DescriptorSystem, n1: usize, tol: f64) -> Result<IndexOneTest> {
    let n = sys.order();
    let m = sys.ports();
    if n1 > n {
        return Err(Error::Dimension(format!("partition {n1} exceeds order {n}")));
    }
    let n2 = n - n1;
    let e_scale = sys.e.norm();
    let outside = (block(&sys.e, 0, n1, n1, n2).norm_squared()
        + block(&sys.e, n1, 0, n2, n1).norm_squared()
        + block(&sys.e, n1, n1, n2, n2).norm_squared())
    .sqrt();
    if outside > tol * e_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPartitioned(format!("off-partition mass {outside:.3e}")));
    }
    let a22 = block(&sys.a, n1, n1, n2, n2);
    let b2 = block(&sys.b, n1, 0, n2, m);
    let c2 = block(&sys.c, 0, n1, m, n2);
    let size = 2 * n2 + m;
    let mut s_hat = ComplexMatrix::zeros(size, size);
    set_block(&mut s_hat, 0, n2, &a22);
    set_block(&mut s_hat, 0, 2 * n2, &b2);
    set_block(&mut s_hat, n2, 0, &a22.adjoint());
    set_block(&mut s_hat, n2, 2 * n2, &c2.adjoint());
    set_block(&mut s_hat, 2 * n2, 0, &b2.adjoint());
    set_block(&mut s_hat, 2 * n2, n2, &c2);
    set_block(&mut s_hat, 2 * n2, 2 * n2, &(&sys.d + sys.d.adjoint()));
    let smin = sigma_min(&s_hat);
    Ok(IndexOneTest {
        index_at_most_one: smin > tol * norm2(&s_hat).max(1.0),
        sigma_min: smin,
        s_hat,
    })
}

/// `D ← D + (μ/2)I`, which raises every eigenvalue of `D + Dᴴ` by `μ`.
pub fn enforce_feedthrough(sys: &DescriptorSystem, mu: f64) -> Result<DescriptorSystem> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "feedthrough shift must be nonnegative, got {mu}"
        )));
    }
    let mut out = sys.clone();
    out.d += identity(sys.ports()).scale(mu / 2.0);
    Ok(out)
}

/// `𝓗 = blkdiag(E⁻¹A, −AᴴE⁻ᴴ) − [E⁻¹B; −Cᴴ](D+Dᴴ)⁻¹[C, BᴴE⁻ᴴ]`, the
/// Schur complement of the `(3,3)` block of the even pencil after scaling
/// by `E⁻¹`.
pub fn hamiltonian_matrix(sys: &DescriptorSystem) -> Result<ComplexMatrix> {
    let n = sys.order();
    let m = sys.ports();
    let einv_a = solve_dense_multi(&sys.e, &sys.a, "E")?;
    let einv_b = solve_dense_multi(&sys.e, &sys.b, "E")?;
    // BᴴE⁻ᴴ = (E⁻¹B)ᴴ, AᴴE⁻ᴴ = (E⁻¹A)ᴴ
    let dd = &sys.d + sys.d.adjoint();
    let mut left = ComplexMatrix::zeros(2 * n, m);
    set_block(&mut left, 0, 0, &einv_b);
    set_block(&mut left, n, 0, &(-sys.c.adjoint()));
    let mut right = ComplexMatrix::zeros(m, 2 * n);
    set_block(&mut right, 0, 0, &sys.c);
    set_block(&mut right, 0, n, &einv_b.adjoint());
    let correction = solve_dense_multi(&dd, &right, "D + D^H")?;
    let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
    set_block(&mut h, 0, 0, &einv_a);
    set_block(&mut h, n, n, &(-einv_a.adjoint()));
    Ok(h - left * correction)
}
