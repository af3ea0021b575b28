//! Seeded random matrices. All generators use ChaCha8 (a counter-based
//! stream cipher PRNG) keyed by a 64-bit seed plus a stream id, so that
//! systems and perturbations drawn from the same seed are independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c64, hermitian_part, skew_part, ComplexMatrix};

pub const STREAM_SYSTEM: u64 = 0;
pub const STREAM_PERTURBATION: u64 = 1;

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Entries i.i.d. complex standard normal, `E|z|² = 1`.
pub fn complex_normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // column-major fill order is part of the reproducibility contract
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(scale * re, scale * im)
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    hermitian_part(&complex_normal_matrix(rng, n, n))
}

pub fn random_skew_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    skew_part(&complex_normal_matrix(rng, n, n))
}
