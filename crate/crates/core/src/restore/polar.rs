use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigenvalues, identity, norm2, polar_factor, sigma_min, ComplexMatrix};

#[derive(Clone, Debug)]
pub struct PolarRestore {
    /// Unitary `Z₂₂` with `(E + ΔE)·Z₂₂` Hermitian positive definite.
    pub z22: ComplexMatrix,
    pub y22: ComplexMatrix,
    pub bound: Option<PolarBound>,
}

/// `‖Y₂₂‖_F ≤ 2‖E⁻¹‖₂‖ΔE‖_F` for a Hermitian positive definite reference `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarBound {
    pub y22_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

/// With `E + ΔE = U·H` (polar decomposition), `Z₂₂ = Uᴴ` and
/// `(E + ΔE)Z₂₂ = U H Uᴴ`. An exactly Hermitian positive definite input
/// has the polar factor `U = I`, which is returned without rounding.
pub fn polar_restore(e_plus_de: &ComplexMatrix, reference: Option<&ComplexMatrix>) -> Result<PolarRestore> {
    let n = e_plus_de.nrows();
    let already_hermitian_pd = e_plus_de.is_square()
        && hermitian_defect(e_plus_de) == 0.0
        && hermitian_eigenvalues(e_plus_de).first().is_some_and(|&l| l > 0.0);
    let z22 = if already_hermitian_pd {
        identity(n)
    } else {
        polar_factor(e_plus_de)?.unitary.adjoint()
    };
    let y22 = &z22 - identity(z22.nrows());
    let bound = match reference {
        Some(e) => {
            if e.shape() != e_plus_de.shape() {
                return Err(Error::Dimension("reference E has the wrong size".into()));
            }
            let smin = sigma_min(e);
            if !(smin > 1e-14 * norm2(e)) {
                return Err(Error::Singular {
                    what: "reference E",
                    sigma_min: smin,
                    condition: norm2(e) / smin,
                });
            }
            let bound = 2.0 / smin * (e_plus_de - e).norm();
            let y22_norm = y22.norm();
            Some(PolarBound {
                y22_norm,
                bound,
                holds: y22_norm <= bound * (1.0 + 1e-12) + 1e-15,
            })
        }
        None => None,
    };
    Ok(PolarRestore { z22, y22, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, hermitian_defect, hermitian_eigenvalues};
    use crate::rng;

    #[test]
    fn hermitian_positive_input_is_fixed() {
        let mut r = rng::seeded(0, 4);
        let f = rng::complex_normal_matrix(&mut r, 3, 3);
        let e = crate::linalg::hermitian_part(&(&f * f.adjoint() + identity(3)));
        let p = polar_restore(&e, None).unwrap();
        assert_eq!(p.z22, identity(3));
        assert_eq!(p.y22.norm(), 0.0);
        // a rounding-level skew part goes through the general polar factor
        let mut tilted = e.clone();
        tilted[(0, 1)] += c64(0.0, 1e-12);
        let q = polar_restore(&tilted, Some(&e)).unwrap();
        assert!(q.y22.norm() < 1e-11);
        assert!(q.bound.unwrap().holds);
    }

    #[test]
    fn scalar_phase_is_rotated_back() {
        let mut e = identity(1);
        e[(0, 0)] = c64(1.0, 0.01);
        let p = polar_restore(&e, None).unwrap();
        let prod = e[(0, 0)] * p.z22[(0, 0)];
        assert!(prod.im.abs() < 1e-16);
        assert!(prod.re > 0.0);
        let phi = 0.01f64.atan();
        assert!((p.z22[(0, 0)] - c64(phi.cos(), -phi.sin())).norm() < 1e-15);
    }

    #[test]
    fn singular_input_rejected() {
        assert!(matches!(
            polar_restore(&ComplexMatrix::zeros(2, 2), None),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn polar_bound_on_random_instances() {
        for seed in 0..20 {
            let mut r = rng::seeded(seed, 4);
            let f = rng::complex_normal_matrix(&mut r, 4, 4);
            let e = (&f * f.adjoint()).scale(0.25) + identity(4).scale(0.1);
            let de = rng::complex_normal_matrix(&mut r, 4, 4);
            let de = de.scale(1e-6 / de.norm());
            let ep = &e + de;
            let p = polar_restore(&ep, Some(&e)).unwrap();
            assert!(p.bound.as_ref().unwrap().holds);
            let prod = &ep * &p.z22;
            assert!(hermitian_defect(&prod) < 1e-13);
            assert!(hermitian_eigenvalues(&crate::linalg::hermitian_part(&prod))[0] > 0.0);
        }
    }
}
