//! Complex stability radius of a descriptor pair `(E, A)` under structured
//! perturbations `(ΔE, ΔA)`:
//! `ρ = inf_ω σ_min(A − iωE)/√(1+ω²)`, with `ω = ∞` contributing `σ_min(E)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_square, generalized_eigenvalues, is_regular_pencil, norm2, sigma_min, smallest_singular_triple,
    ComplexMatrix, SingularTriple, I,
};
use crate::restore::build_k;
use crate::systems::log_grid;
use num_complex::Complex64;

/// Minimizing frequency; `Infinite` means the infimum is attained as `ω → ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Frequency {
    Finite(f64),
    Infinite,
}

impl Frequency {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Frequency::Finite(w) => Some(*w),
            Frequency::Infinite => None,
        }
    }
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frequency::Finite(w) => write!(f, "{w:e}"),
            Frequency::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StabilityRadiusResult {
    pub rho: f64,
    pub omega_star: Frequency,
    /// Smallest singular triple of `A − iω*E` (or of `E` when `ω* = ∞`).
    pub triple: SingularTriple,
    /// `(ω, σ_min(A − iωE)/√(1+ω²))` for every grid point, sorted by `ω`.
    pub grid_trace: Vec<(f64, f64)>,
    /// Set when `(E, A)` already has a finite eigenvalue with `Re λ ≥ 0`.
    pub unstable_eigenvalue: Option<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub grid_points: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub refine_rel_width: f64,
    /// Eigenvalues with `Re λ ≥ −tol·(1+|λ|)` count as unstable.
    pub stability_tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            grid_points: 200,
            omega_min: 1e-8,
            omega_max: 1e8,
            refine_rel_width: 1e-10,
            stability_tol: 1e-10,
        }
    }
}

fn objective(e: &ComplexMatrix, a: &ComplexMatrix, omega: f64) -> f64 {
    let m = a - e.map(|z| z * (I * omega));
    sigma_min(&m) / (1.0 + omega * omega).sqrt()
}

/// Values within this relative distance count as ties.
const TIE_TOL: f64 = 1e-12;

fn ties(x: f64, y: f64) -> bool {
    (x - y).abs() <= TIE_TOL * x.abs().max(y.abs())
}

/// Ordering by value, ties broken toward the smaller `|ω|`.
fn better(candidate: (f64, f64), incumbent: (f64, f64)) -> bool {
    if ties(candidate.1, incumbent.1) {
        candidate.0.abs() < incumbent.0.abs()
    } else {
        candidate.1 < incumbent.1
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, best: (f64, f64), rel_width: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = best;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= rel_width * lo.abs().max(hi.abs()).max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
        for cand in [(x1, f1), (x2, f2)] {
            if better(cand, best) {
                best = cand;
            }
        }
    }
    best
}

pub fn stability_radius(
    e: &ComplexMatrix,
    a: &ComplexMatrix,
    opts: &StabilityOptions,
) -> Result<StabilityRadiusResult> {
    ensure_square(e)?;
    if e.shape() != a.shape() {
        return Err(Error::Dimension(format!("E is {:?}, A is {:?}", e.shape(), a.shape())));
    }
    if !is_regular_pencil(e, a, 1e-12) {
        return Err(Error::SingularPencil);
    }
    let scale = norm2(e).max(norm2(a));
    let eigs = generalized_eigenvalues(a, e)?;
    let unstable = eigs
        .iter()
        .filter_map(|ev| ev.finite(1e-10 * scale))
        .filter(|l| l.re >= -opts.stability_tol * (1.0 + l.norm()))
        .max_by(|x, y| x.re.total_cmp(&y.re));
    if let Some(lambda) = unstable {
        let triple = smallest_singular_triple(&(a - e.map(|z| z * (I * lambda.im))));
        return Ok(StabilityRadiusResult {
            rho: 0.0,
            omega_star: Frequency::Finite(lambda.im),
            triple,
            grid_trace: Vec::new(),
            unstable_eigenvalue: Some(lambda),
        });
    }

    let f = |w: f64| objective(e, a, w);
    let positive = log_grid(opts.omega_min, opts.omega_max, opts.grid_points);
    let mut omegas: Vec<f64> = positive
        .iter()
        .rev()
        .map(|w| -w)
        .chain([0.0])
        .chain(positive.iter().copied())
        .collect();
    omegas.dedup();
    let grid_trace: Vec<(f64, f64)> = omegas.iter().map(|&w| (w, f(w))).collect();

    let mut k_best = 0;
    for k in 1..grid_trace.len() {
        if better(grid_trace[k], grid_trace[k_best]) {
            k_best = k;
        }
    }
    let mut best = grid_trace[k_best];
    let lo = grid_trace[k_best.saturating_sub(1)].0;
    let hi = grid_trace[(k_best + 1).min(grid_trace.len() - 1)].0;
    if hi > lo {
        best = golden_section(&f, lo, hi, best, opts.refine_rel_width);
    }

    // ω = ∞ wins ties: a flat objective is attained in the limit as well
    let f_inf = sigma_min(e);
    if f_inf <= best.1 || ties(f_inf, best.1) {
        let triple = smallest_singular_triple(e);
        return Ok(StabilityRadiusResult {
            rho: triple.sigma,
            omega_star: Frequency::Infinite,
            triple,
            grid_trace,
            unstable_eigenvalue: None,
        });
    }
    let omega = best.0;
    let triple = smallest_singular_triple(&(a - e.map(|z| z * (I * omega))));
    Ok(StabilityRadiusResult {
        rho: triple.sigma / (1.0 + omega * omega).sqrt(),
        omega_star: Frequency::Finite(omega),
        triple,
        grid_trace,
        unstable_eigenvalue: None,
    })
}

/// Rank-one `(ΔE, ΔA)` of norm `ρ` that moves an eigenvalue of `(E, A)` onto
/// the imaginary axis at `iω*`: `ΔA = −σuvᴴ/(1+ω²)`, `ΔE = −iωσuvᴴ/(1+ω²)`,
/// so that `(A+ΔA − iω(E+ΔE)) v = 0`.
pub fn destabilizing_perturbation(res: &StabilityRadiusResult) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let omega = res.omega_star.finite().ok_or(Error::InfiniteFrequency)?;
    let t = &res.triple;
    let uv = &t.u * t.v.adjoint();
    let factor = -t.sigma / (1.0 + omega * omega);
    let da = uv.map(|z| z * factor);
    let de = uv.map(|z| z * (I * omega * factor));
    Ok((de, da))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KroneckerEstimate {
    pub sigma_min_k1: f64,
    pub sigma_min_k2: f64,
    /// `√2·ρ`, the upper bound both smallest singular values obey.
    pub bound: f64,
    pub ratio1: f64,
    pub ratio2: f64,
    pub holds: bool,
}

/// Compares `σ_min(K₁)`, `σ_min(K₂)` of the Kronecker operators with the
/// bound `√2·ρ(E, A)`.
pub fn kronecker_sigma_estimate(
    e: &ComplexMatrix,
    a: &ComplexMatrix,
    rho: &StabilityRadiusResult,
) -> Result<KroneckerEstimate> {
    let k = build_k(e, a)?;
    let s1 = sigma_min(&k.k1);
    let s2 = sigma_min(&k.k2);
    let bound = std::f64::consts::SQRT_2 * rho.rho;
    Ok(KroneckerEstimate {
        sigma_min_k1: s1,
        sigma_min_k2: s2,
        bound,
        ratio1: s1 / bound,
        ratio2: s2 / bound,
        holds: s1 <= bound * (1.0 + 1e-8) && s2 <= bound * (1.0 + 1e-8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_rows, identity};
    use crate::rng;
    use crate::systems::{ph_to_descriptor, random_strictly_passive, GeneratorOptions};

    fn scalar(x: f64) -> ComplexMatrix {
        from_real_rows(1, 1, &[x]).unwrap()
    }

    #[test]
    fn scalar_radius_is_min_of_alpha_and_one() {
        for alpha in [0.5, 2.0, 0.1, 7.0] {
            let res = stability_radius(&scalar(1.0), &scalar(-alpha), &StabilityOptions::default()).unwrap();
            assert!((res.rho - alpha.min(1.0)).abs() < 1e-6, "alpha {alpha}: {}", res.rho);
            if alpha < 1.0 {
                assert_eq!(res.omega_star, Frequency::Finite(0.0));
            } else {
                assert_eq!(res.omega_star, Frequency::Infinite);
            }
        }
    }

    #[test]
    fn identity_pair_is_tied_at_one() {
        let res = stability_radius(&identity(3), &(-identity(3)), &StabilityOptions::default()).unwrap();
        assert!((res.rho - 1.0).abs() < 1e-12);
        // the infinite candidate wins ties
        assert_eq!(res.omega_star, Frequency::Infinite);
    }

    #[test]
    fn unstable_pair_has_zero_radius() {
        let res = stability_radius(&scalar(1.0), &scalar(0.5), &StabilityOptions::default()).unwrap();
        assert_eq!(res.rho, 0.0);
        assert!(res.unstable_eigenvalue.is_some());
    }

    #[test]
    fn singular_pencil_rejected() {
        let z = ComplexMatrix::zeros(2, 2);
        assert!(matches!(
            stability_radius(&z, &z, &StabilityOptions::default()),
            Err(Error::SingularPencil)
        ));
    }

    #[test]
    fn scalar_destabilizing_perturbation() {
        let res = stability_radius(&scalar(1.0), &scalar(-0.5), &StabilityOptions::default()).unwrap();
        let (de, da) = destabilizing_perturbation(&res).unwrap();
        assert_eq!(de[(0, 0)].norm(), 0.0);
        assert!((da[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let res = stability_radius(&scalar(1.0), &scalar(-2.0), &StabilityOptions::default()).unwrap();
        assert!(matches!(
            destabilizing_perturbation(&res),
            Err(Error::InfiniteFrequency)
        ));
    }

    #[test]
    fn destabilized_pair_has_imaginary_eigenvalue() {
        for seed in 0..5 {
            let ph = random_strictly_passive(4, 2, seed, &GeneratorOptions::default()).unwrap();
            let sys = ph_to_descriptor(&ph);
            let res = stability_radius(&sys.e, &sys.a, &StabilityOptions::default()).unwrap();
            let Frequency::Finite(omega) = res.omega_star else {
                continue;
            };
            let (de, da) = destabilizing_perturbation(&res).unwrap();
            let norm = (de.norm_squared() + da.norm_squared()).sqrt();
            assert!((norm - res.rho).abs() <= 1e-10 * res.rho);
            let e2 = &sys.e + de;
            let a2 = &sys.a + da;
            let m = &a2 - e2.map(|z| z * (I * omega));
            assert!(sigma_min(&m) <= 1e-10 * norm2(&a2).max(1.0));
        }
    }

    #[test]
    fn radius_is_below_grid_values_and_sigma_e() {
        let mut r = rng::seeded(9, 0);
        for _ in 0..5 {
            let ph = random_strictly_passive(3, 1, 7, &GeneratorOptions::default()).unwrap();
            let sys = ph_to_descriptor(&ph);
            let res = stability_radius(&sys.e, &sys.a, &StabilityOptions::default()).unwrap();
            assert!(res.rho <= sigma_min(&sys.e) * (1.0 + 1e-14));
            for &(_, v) in &res.grid_trace {
                assert!(res.rho <= v * (1.0 + 1e-14));
            }
            let probe = rng::complex_normal_matrix(&mut r, 1, 1)[(0, 0)].re * 10.0;
            assert!(res.rho <= objective(&sys.e, &sys.a, probe) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn kronecker_bound_holds_on_scalar() {
        let res = stability_radius(&scalar(1.0), &scalar(-1.0), &StabilityOptions::default()).unwrap();
        let est = kronecker_sigma_estimate(&scalar(1.0), &scalar(-1.0), &res).unwrap();
        assert!((est.sigma_min_k1 - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(est.holds);
    }
}
