//! Complex single-shift QZ for the generalized eigenvalues of `λB − A`.
//!
//! Reduces `(A, B)` to Hessenberg-triangular form with Givens rotations and
//! then runs implicit single-shift sweeps. Zero diagonal entries of the
//! triangular factor are chased to the bottom and deflated as infinite
//! eigenvalues. Only eigenvalues are produced; the orthogonal factors are
//! not accumulated.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Eigenvalue `α/β` of the pencil `λB − A`; `β = 0` is an infinite eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedEigenvalue {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl GeneralizedEigenvalue {
    /// `α/β`, or `None` when `|β| ≤ tol`.
    pub fn finite(&self, tol: f64) -> Option<Complex64> {
        if self.beta.norm() <= tol {
            None
        } else {
            Some(self.alpha / self.beta)
        }
    }
}

#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: Complex64,
}

impl Rotation {
    /// Rotation with `[c s; −s̄ c]·[f; g] = [r; 0]`.
    fn zeroing(f: Complex64, g: Complex64) -> Self {
        let fa = f.norm();
        let ga = g.norm();
        if ga == 0.0 {
            return Rotation {
                c: 1.0,
                s: Complex64::new(0.0, 0.0),
            };
        }
        if fa == 0.0 {
            return Rotation {
                c: 0.0,
                s: g.conj() / ga,
            };
        }
        let norm = fa.hypot(ga);
        Rotation {
            c: fa / norm,
            s: (f / fa) * g.conj() / norm,
        }
    }

    /// Rows `p` (kept) and `q` (zeroed), columns in `cols`.
    fn rows(&self, m: &mut ComplexMatrix, p: usize, q: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let x = m[(p, j)];
            let y = m[(q, j)];
            m[(p, j)] = x * self.c + self.s * y;
            m[(q, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// Columns `p` (kept) and `q` (zeroed), rows in `rows`.
    fn cols(&self, m: &mut ComplexMatrix, p: usize, q: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let x = m[(i, p)];
            let y = m[(i, q)];
            m[(i, p)] = x * self.c + self.s * y;
            m[(i, q)] = -self.s.conj() * x + y * self.c;
        }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn hessenberg_triangular(h: &mut ComplexMatrix, t: &mut ComplexMatrix) {
    let n = h.nrows();
    // triangularize T with Givens from below
    for j in 0..n {
        for i in (j + 1..n).rev() {
            let g = Rotation::zeroing(t[(i - 1, j)], t[(i, j)]);
            g.rows(t, i - 1, i, 0..n);
            g.rows(h, i - 1, i, 0..n);
            t[(i, j)] = ZERO;
        }
    }
    if n < 3 {
        return;
    }
    for j in 0..n - 2 {
        for i in (j + 2..n).rev() {
            let g = Rotation::zeroing(h[(i - 1, j)], h[(i, j)]);
            g.rows(h, i - 1, i, 0..n);
            g.rows(t, i - 1, i, 0..n);
            h[(i, j)] = ZERO;
            let g = Rotation::zeroing(t[(i, i)], t[(i, i - 1)]);
            g.cols(t, i, i - 1, 0..n);
            g.cols(h, i, i - 1, 0..n);
            t[(i, i - 1)] = ZERO;
        }
    }
}

/// Eigenvalue of the trailing 2x2 pencil closest to `h22/t22`.
fn wilkinson_shift(h: &ComplexMatrix, t: &ComplexMatrix, k: usize) -> Complex64 {
    let (h11, h12, h21, h22) = (h[(k - 1, k - 1)], h[(k - 1, k)], h[(k, k - 1)], h[(k, k)]);
    let (t11, t12, t22) = (t[(k - 1, k - 1)], t[(k - 1, k)], t[(k, k)]);
    let a = t11 * t22;
    let b = -(h11 * t22 + h22 * t11 - h21 * t12);
    let c = h11 * h22 - h12 * h21;
    let target = h22 / t22;
    let disc = (b * b - a * c * 4.0).sqrt();
    let r1 = (-b + disc) / (a * 2.0);
    let r2 = (-b - disc) / (a * 2.0);
    let pick = if (r1 - target).norm() <= (r2 - target).norm() {
        r1
    } else {
        r2
    };
    if pick.re.is_finite() && pick.im.is_finite() {
        pick
    } else {
        target
    }
}

fn sweep(h: &mut ComplexMatrix, t: &mut ComplexMatrix, ilo: usize, ihi: usize, shift: Complex64) {
    let n = h.nrows();
    let g = Rotation::zeroing(h[(ilo, ilo)] - shift * t[(ilo, ilo)], h[(ilo + 1, ilo)]);
    g.rows(h, ilo, ilo + 1, ilo..n);
    g.rows(t, ilo, ilo + 1, ilo..n);
    for k in ilo..ihi {
        let g = Rotation::zeroing(t[(k + 1, k + 1)], t[(k + 1, k)]);
        g.cols(t, k + 1, k, 0..n);
        g.cols(h, k + 1, k, 0..n);
        t[(k + 1, k)] = ZERO;
        if k + 2 <= ihi {
            let g = Rotation::zeroing(h[(k + 1, k)], h[(k + 2, k)]);
            g.rows(h, k + 1, k + 2, k..n);
            g.rows(t, k + 1, k + 2, k..n);
            h[(k + 2, k)] = ZERO;
        }
    }
}

/// `T[ilo, ilo] = 0`: rotate zeros into the subdiagonal of `H` from the top.
fn split_top(h: &mut ComplexMatrix, t: &mut ComplexMatrix, ilo: usize, ihi: usize, btol: f64) {
    let n = h.nrows();
    for j in ilo..ihi {
        let g = Rotation::zeroing(h[(j, j)], h[(j + 1, j)]);
        g.rows(h, j, j + 1, j..n);
        g.rows(t, j, j + 1, j..n);
        h[(j + 1, j)] = ZERO;
        if t[(j + 1, j + 1)].norm() > btol {
            return;
        }
        t[(j + 1, j + 1)] = ZERO;
    }
}

/// `T[j, j] = 0` with `j > ilo`: chase the zero to `T[ihi, ihi]` and split
/// off an infinite eigenvalue at the bottom.
fn chase_to_bottom(h: &mut ComplexMatrix, t: &mut ComplexMatrix, j: usize, ihi: usize) {
    let n = h.nrows();
    for k in j..ihi {
        let g = Rotation::zeroing(t[(k, k + 1)], t[(k + 1, k + 1)]);
        g.rows(t, k, k + 1, k + 1..n);
        g.rows(h, k, k + 1, k - 1..n);
        t[(k + 1, k + 1)] = ZERO;
        let g = Rotation::zeroing(h[(k + 1, k)], h[(k + 1, k - 1)]);
        g.cols(h, k, k - 1, 0..n);
        g.cols(t, k, k - 1, 0..n);
        h[(k + 1, k - 1)] = ZERO;
    }
    let g = Rotation::zeroing(h[(ihi, ihi)], h[(ihi, ihi - 1)]);
    g.cols(h, ihi, ihi - 1, 0..n);
    g.cols(t, ihi, ihi - 1, 0..n);
    h[(ihi, ihi - 1)] = ZERO;
    t[(ihi, ihi - 1)] = ZERO;
}

/// Generalized eigenvalues of the square pencil `λB − A`, returned as
/// `(α, β)` pairs in the order they appear on the diagonal of the final
/// triangular pair.
pub fn generalized_eigenvalues(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<GeneralizedEigenvalue>> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "pencil pair {:?} / {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let n = a.nrows();
    let mut out = vec![
        GeneralizedEigenvalue {
            alpha: ZERO,
            beta: ZERO,
        };
        n
    ];
    if n == 0 {
        return Ok(out);
    }
    let mut h = a.clone();
    let mut t = b.clone();
    hessenberg_triangular(&mut h, &mut t);

    let ulp = f64::EPSILON;
    let atol = ulp * h.norm().max(f64::MIN_POSITIVE);
    let btol = ulp * t.norm().max(f64::MIN_POSITIVE);
    let max_iter = 100 * n;
    let mut iterations = 0;
    let mut since_deflation = 0;
    let mut ihi = n - 1;

    loop {
        if ihi == 0 {
            out[0] = GeneralizedEigenvalue {
                alpha: h[(0, 0)],
                beta: t[(0, 0)],
            };
            break;
        }
        for k in 1..=ihi {
            if h[(k, k - 1)].norm() <= atol {
                h[(k, k - 1)] = ZERO;
            }
        }
        let mut ilo = ihi;
        while ilo > 0 && h[(ilo, ilo - 1)] != ZERO {
            ilo -= 1;
        }
        if ilo == ihi {
            out[ihi] = GeneralizedEigenvalue {
                alpha: h[(ihi, ihi)],
                beta: t[(ihi, ihi)],
            };
            ihi -= 1;
            since_deflation = 0;
            continue;
        }
        if let Some(j) = (ilo..=ihi).find(|&j| t[(j, j)].norm() <= btol) {
            t[(j, j)] = ZERO;
            if j == ilo {
                split_top(&mut h, &mut t, ilo, ihi, btol);
            } else {
                chase_to_bottom(&mut h, &mut t, j, ihi);
            }
            since_deflation = 0;
            continue;
        }
        iterations += 1;
        since_deflation += 1;
        if iterations > max_iter {
            return Err(Error::QzFailure);
        }
        let shift = if since_deflation % 10 == 0 {
            // exceptional shift to break cycles
            h[(ihi, ihi)] / t[(ihi, ihi)]
                + Complex64::new(0.75, 0.25) * (h[(ihi, ihi - 1)].norm() / t[(ihi - 1, ihi - 1)].norm())
        } else {
            wilkinson_shift(&h, &t, ihi)
        };
        sweep(&mut h, &mut t, ilo, ihi, shift);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows, identity};
    use crate::rng::{complex_normal_matrix, seeded};

    fn finite_sorted(eigs: &[GeneralizedEigenvalue], tol: f64) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = eigs.iter().filter_map(|e| e.finite(tol)).collect();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    /// Oracle: ordinary eigenvalues of B⁻¹A via nalgebra's complex Schur form.
    fn oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> Vec<Complex64> {
        let m = b.clone().try_inverse().unwrap() * a;
        let schur = nalgebra::Schur::new(m);
        let mut v: Vec<Complex64> = schur.eigenvalues().unwrap().iter().copied().collect();
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    fn match_sets(x: &[Complex64], y: &[Complex64], tol: f64) -> bool {
        if x.len() != y.len() {
            return false;
        }
        let mut used = vec![false; y.len()];
        for a in x {
            let best = y
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|p, q| (p.1 - a).norm().total_cmp(&(q.1 - a).norm()));
            match best {
                Some((i, b)) if (b - a).norm() <= tol * (1.0 + a.norm()) => used[i] = true,
                _ => return false,
            }
        }
        true
    }

    #[test]
    fn diagonal_pencil() {
        let a = from_real_rows(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let b = identity(3);
        let eigs = generalized_eigenvalues(&a, &b).unwrap();
        let v = finite_sorted(&eigs, 1e-12);
        assert!(match_sets(&v, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)], 1e-14));
    }

    #[test]
    fn matches_schur_oracle_for_invertible_b() {
        for seed in 0..30 {
            let n = 1 + (seed as usize % 7);
            let mut rng = seeded(seed, 7);
            let a = complex_normal_matrix(&mut rng, n, n);
            let b = complex_normal_matrix(&mut rng, n, n) + identity(n).scale(2.0);
            let eigs = generalized_eigenvalues(&a, &b).unwrap();
            let got = finite_sorted(&eigs, 1e-12);
            assert!(match_sets(&got, &oracle(&a, &b), 1e-9), "seed {seed}");
        }
    }

    #[test]
    fn infinite_eigenvalues_counted() {
        // B singular of rank 2 with a generic A: one infinite eigenvalue
        for seed in 0..20 {
            let mut rng = seeded(seed, 8);
            let a = complex_normal_matrix(&mut rng, 3, 3);
            let f = complex_normal_matrix(&mut rng, 3, 2);
            let g = complex_normal_matrix(&mut rng, 2, 3);
            let b = &f * &g;
            let eigs = generalized_eigenvalues(&a, &b).unwrap();
            let tol = 1e-10 * a.norm().max(b.norm());
            let infinite = eigs.iter().filter(|e| e.finite(tol).is_none()).count();
            assert_eq!(infinite, 1, "seed {seed}");
            // finite ones satisfy det(λB − A) ≈ 0
            for lam in eigs.iter().filter_map(|e| e.finite(tol)) {
                let m = b.map(|z| z * lam) - &a;
                let s = crate::linalg::sigma_min(&m);
                assert!(s <= 1e-9 * (1.0 + lam.norm()) * a.norm().max(b.norm()), "seed {seed}");
            }
        }
    }

    #[test]
    fn zero_b_in_the_middle_and_top() {
        // already triangular B with zeros on the diagonal at several positions
        for zero_at in 0..4 {
            let mut rng = seeded(100 + zero_at as u64, 9);
            let a = complex_normal_matrix(&mut rng, 4, 4);
            let mut b = complex_normal_matrix(&mut rng, 4, 4);
            for i in 0..4 {
                for j in 0..i {
                    b[(i, j)] = ZERO;
                }
            }
            b[(zero_at, zero_at)] = ZERO;
            let eigs = generalized_eigenvalues(&a, &b).unwrap();
            let tol = 1e-10 * a.norm().max(b.norm());
            assert_eq!(eigs.iter().filter(|e| e.finite(tol).is_none()).count(), 1);
        }
    }
}
