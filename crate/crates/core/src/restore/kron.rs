use crate::error::{Error, Result};
use crate::linalg::{ensure_square, identity, kron, sigma_min, ComplexMatrix};

/// Kronecker matrices of the linearized restoration equations:
/// `K₁ = [[I⊗E, −Ē⊗I], [I⊗A, Ā⊗I]]` maps `(vec Y, vec Yᴴ)` to
/// `(vec(EY − YᴴEᴴ), vec(AY + YᴴAᴴ))`, and
/// `K₂ = [[−I⊗Eᴴ, Eᵀ⊗I], [I⊗Aᴴ, Aᵀ⊗I]]` maps it to
/// `(vec(−EᴴY + YᴴE), vec(AᴴY + YᴴA))`.
#[derive(Clone, Debug)]
pub struct KroneckerPair {
    pub k1: ComplexMatrix,
    pub k2: ComplexMatrix,
    pub sigma_min_1: f64,
    pub sigma_min_2: f64,
}

impl KroneckerPair {
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min_1.min(self.sigma_min_2)
    }
}

fn stack(tl: ComplexMatrix, tr: ComplexMatrix, bl: ComplexMatrix, br: ComplexMatrix) -> ComplexMatrix {
    let k = tl.nrows();
    let mut out = ComplexMatrix::zeros(2 * k, 2 * k);
    out.view_mut((0, 0), (k, k)).copy_from(&tl);
    out.view_mut((0, k), (k, k)).copy_from(&tr);
    out.view_mut((k, 0), (k, k)).copy_from(&bl);
    out.view_mut((k, k), (k, k)).copy_from(&br);
    out
}

pub fn build_k(e: &ComplexMatrix, a: &ComplexMatrix) -> Result<KroneckerPair> {
    ensure_square(e)?;
    if e.shape() != a.shape() {
        return Err(Error::Dimension(format!("E is {:?}, A is {:?}", e.shape(), a.shape())));
    }
    let id = identity(e.nrows());
    let k1 = stack(
        kron(&id, e),
        -kron(&e.conjugate(), &id),
        kron(&id, a),
        kron(&a.conjugate(), &id),
    );
    let k2 = stack(
        -kron(&id, &e.adjoint()),
        kron(&e.transpose(), &id),
        kron(&id, &a.adjoint()),
        kron(&a.transpose(), &id),
    );
    Ok(KroneckerPair {
        sigma_min_1: sigma_min(&k1),
        sigma_min_2: sigma_min(&k2),
        k1,
        k2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_rows, vec, ComplexVector};
    use crate::rng;

    #[test]
    fn scalar_layout() {
        let one = from_real_rows(1, 1, &[1.0]).unwrap();
        let k = build_k(&one, &(-one.clone())).unwrap();
        assert_eq!(k.k1, from_real_rows(2, 2, &[1.0, -1.0, -1.0, -1.0]).unwrap());
        assert_eq!(k.k2, from_real_rows(2, 2, &[-1.0, 1.0, -1.0, -1.0]).unwrap());
        assert!((k.sigma_min_1 - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    fn stacked(y: &ComplexMatrix) -> ComplexVector {
        let (a, b) = (vec(y), vec(&y.adjoint()));
        ComplexVector::from_iterator(a.len() * 2, a.iter().chain(b.iter()).copied())
    }

    #[test]
    fn matches_bilinear_maps() {
        for seed in 0..5 {
            let mut r = rng::seeded(seed, 7);
            let e = rng::complex_normal_matrix(&mut r, 3, 3);
            let a = rng::complex_normal_matrix(&mut r, 3, 3);
            let y = rng::complex_normal_matrix(&mut r, 3, 3);
            let k = build_k(&e, &a).unwrap();
            let x = stacked(&y);

            let got1 = &k.k1 * &x;
            let want1 = stacked_pair(
                &(&e * &y - y.adjoint() * e.adjoint()),
                &(&a * &y + y.adjoint() * a.adjoint()),
            );
            assert!((got1 - want1).norm() <= 1e-13 * 10.0);

            let got2 = &k.k2 * &x;
            let want2 = stacked_pair(
                &(-e.adjoint() * &y + y.adjoint() * &e),
                &(a.adjoint() * &y + y.adjoint() * &a),
            );
            assert!((got2 - want2).norm() <= 1e-13 * 10.0);
        }
    }

    fn stacked_pair(p: &ComplexMatrix, q: &ComplexMatrix) -> ComplexVector {
        let (a, b) = (vec(p), vec(q));
        ComplexVector::from_iterator(a.len() * 2, a.iter().chain(b.iter()).copied())
    }
}
