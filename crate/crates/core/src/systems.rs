//! Descriptor and port-Hamiltonian system models, conversion between the two
//! representations, frequency-domain evaluation and seeded generation of
//! strictly passive test systems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, block, c64, ensure_finite, generalized_eigenvalues, hermitian_defect, hermitian_eigenvalues, hermitian_part,
    identity, is_regular_pencil, norm2, set_block, sigma_min, skew_part, solve_dense_multi, ComplexMatrix, I,
};
use crate::rng;
use crate::stability::{stability_radius, StabilityOptions};

pub const DEFAULT_VALIDATION_TOL: f64 = 1e-10;

/// `E ẋ = A x + B u`, `y = C x + D u` with `n` states and `m` ports.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSystem {
    pub e: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
}

impl DescriptorSystem {
    pub fn new(
        e: ComplexMatrix,
        a: ComplexMatrix,
        b: ComplexMatrix,
        c: ComplexMatrix,
        d: ComplexMatrix,
    ) -> Result<Self> {
        let sys = Self { e, a, b, c, d };
        sys.check()?;
        Ok(sys)
    }

    fn check(&self) -> Result<()> {
        let n = self.e.nrows();
        let m = self.d.nrows();
        let shapes = [
            ("E", self.e.shape(), (n, n)),
            ("A", self.a.shape(), (n, n)),
            ("B", self.b.shape(), (n, m)),
            ("C", self.c.shape(), (m, n)),
            ("D", self.d.shape(), (m, m)),
        ];
        if n == 0 || m == 0 {
            return Err(Error::Dimension("n and m must be at least 1".into()));
        }
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        for m in [&self.e, &self.a, &self.b, &self.c, &self.d] {
            ensure_finite(m)?;
        }
        Ok(())
    }

    /// State dimension `n`.
    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    /// Input/output dimension `m`.
    pub fn ports(&self) -> usize {
        self.d.nrows()
    }
}

/// `E ẋ = (J−R) x + (G−P) u`, `y = (G+P)ᴴ x + (S−N) u`.
#[derive(Clone, Debug, PartialEq)]
pub struct PHSystem {
    pub e: ComplexMatrix,
    pub j: ComplexMatrix,
    pub r: ComplexMatrix,
    pub g: ComplexMatrix,
    pub p: ComplexMatrix,
    pub s: ComplexMatrix,
    pub n: ComplexMatrix,
}

impl PHSystem {
    pub fn new(
        e: ComplexMatrix,
        j: ComplexMatrix,
        r: ComplexMatrix,
        g: ComplexMatrix,
        p: ComplexMatrix,
        s: ComplexMatrix,
        n: ComplexMatrix,
    ) -> Result<Self> {
        let ph = Self { e, j, r, g, p, s, n };
        // shape rules coincide with the descriptor form
        ph_to_descriptor(&ph).check()?;
        for m in [&ph.j, &ph.r, &ph.p, &ph.n] {
            ensure_finite(m)?;
        }
        Ok(ph)
    }

    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    pub fn ports(&self) -> usize {
        self.s.nrows()
    }

    /// `𝒱 = [[J, G], [−Gᴴ, N]]`.
    pub fn structure_matrix(&self) -> ComplexMatrix {
        let (n, m) = (self.order(), self.ports());
        let mut v = ComplexMatrix::zeros(n + m, n + m);
        set_block(&mut v, 0, 0, &self.j);
        set_block(&mut v, 0, n, &self.g);
        set_block(&mut v, n, 0, &(-self.g.adjoint()));
        set_block(&mut v, n, n, &self.n);
        v
    }

    /// `𝒲 = [[R, P], [Pᴴ, S]]`.
    pub fn dissipation_matrix(&self) -> ComplexMatrix {
        let (n, m) = (self.order(), self.ports());
        let mut w = ComplexMatrix::zeros(n + m, n + m);
        set_block(&mut w, 0, 0, &self.r);
        set_block(&mut w, 0, n, &self.p);
        set_block(&mut w, n, 0, &self.p.adjoint());
        set_block(&mut w, n, n, &self.s);
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub constraint: String,
    pub measured: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Check>,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        let violations: Vec<Check> = checks.iter().filter(|c| !c.ok).cloned().collect();
        Self {
            passed: violations.is_empty(),
            violations,
            checks,
        }
    }
}

/// Residuals are compared as `measured ≤ tolerance`; PSD checks store the
/// negated smallest eigenvalue as the measured value.
fn check(constraint: &str, measured: f64, tolerance: f64) -> Check {
    Check {
        constraint: constraint.to_string(),
        measured,
        tolerance,
        ok: measured <= tolerance,
    }
}

fn psd_check(constraint: &str, h: &ComplexMatrix, tol: f64) -> Check {
    let lmin = hermitian_eigenvalues(h).first().copied().unwrap_or(0.0);
    check(constraint, -lmin, tol * norm2(h))
}

pub fn validate_ph(ph: &PHSystem, tol: f64) -> ValidationReport {
    let v = ph.structure_matrix();
    let w = ph.dissipation_matrix();
    ValidationReport::from_checks(vec![
        check("V skew-Hermitian", linalg::skew_defect(&v), tol * v.norm()),
        check("W Hermitian", hermitian_defect(&w), tol * w.norm()),
        psd_check("W positive semidefinite", &w, tol),
        check("E Hermitian", hermitian_defect(&ph.e), tol * ph.e.norm()),
        psd_check("E positive semidefinite", &ph.e, tol),
    ])
}

pub fn ph_to_descriptor(ph: &PHSystem) -> DescriptorSystem {
    DescriptorSystem {
        e: ph.e.clone(),
        a: &ph.j - &ph.r,
        b: &ph.g - &ph.p,
        c: (&ph.g + &ph.p).adjoint(),
        d: &ph.s - &ph.n,
    }
}

/// Closed-form Hermitian/skew splits; algebraically identical to the
/// multiplication by the unitary `X = [[I, I], [I, −I]]/√2`.
pub fn descriptor_to_ph(sys: &DescriptorSystem) -> PHSystem {
    let ch = sys.c.adjoint();
    PHSystem {
        e: sys.e.clone(),
        j: skew_part(&sys.a),
        r: -hermitian_part(&sys.a),
        g: (&sys.b + &ch).scale(0.5),
        p: (&ch - &sys.b).scale(0.5),
        s: hermitian_part(&sys.d),
        n: -skew_part(&sys.d),
    }
}

/// `𝒯(s) = D + C (sE − A)⁻¹ B`.
pub fn transfer_eval(sys: &DescriptorSystem, s: Complex64) -> Result<ComplexMatrix> {
    let resolvent = sys.e.map(|z| z * s) - &sys.a;
    let x = solve_dense_multi(&resolvent, &sys.b, "resolvent sE - A")?;
    Ok(&sys.d + &sys.c * x)
}

/// `Φ(iω) = 𝒯(iω) + 𝒯(iω)ᴴ`, exactly Hermitian.
pub fn popov_eval(sys: &DescriptorSystem, omega: f64) -> Result<ComplexMatrix> {
    let t = transfer_eval(sys, I * omega)?;
    Ok(hermitian_part(&t).scale(2.0))
}

/// Smallest eigenvalue of the Popov function over a symmetric log grid
/// `±[lo, hi]` plus `ω = 0`; returns `(ω, λ_min)` at the minimum.
pub fn popov_grid_minimum(sys: &DescriptorSystem, lo: f64, hi: f64, points: usize) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::INFINITY);
    for omega in log_grid(lo, hi, points).into_iter().flat_map(|w| [w, -w]).chain([0.0]) {
        let lmin = hermitian_eigenvalues(&popov_eval(sys, omega)?)[0];
        if lmin < best.1 {
            best = (omega, lmin);
        }
    }
    Ok(best)
}

pub(crate) fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64))
        .collect()
}

/// Rank of `[λE − A, B]` and `[λEᴴ − Aᴴ, Cᴴ]` at every finite generalized
/// eigenvalue of `(E, A)`.
pub fn controllability_observability_check(sys: &DescriptorSystem, tol: f64) -> Result<ValidationReport> {
    let n = sys.order();
    let m = sys.ports();
    if !is_regular_pencil(&sys.e, &sys.a, 1e-12) {
        return Err(Error::SingularPencil);
    }
    let scale = norm2(&sys.e).max(norm2(&sys.a));
    let eigs = generalized_eigenvalues(&sys.a, &sys.e)?;
    let mut checks = Vec::new();
    for lam in eigs.iter().filter_map(|e| e.finite(1e-10 * scale)) {
        let pencil = sys.e.map(|z| z * lam) - &sys.a;
        let mut ctrb = ComplexMatrix::zeros(n, n + m);
        set_block(&mut ctrb, 0, 0, &pencil);
        set_block(&mut ctrb, 0, n, &sys.b);
        let mut obsv = ComplexMatrix::zeros(n, n + m);
        set_block(&mut obsv, 0, 0, &pencil.adjoint());
        set_block(&mut obsv, 0, n, &sys.c.adjoint());
        let label = format!("{:.6e}{:+.6e}i", lam.re, lam.im);
        for (what, mat) in [("controllable", ctrb), ("observable", obsv)] {
            let smin = sigma_min(&mat);
            let thresh = tol * norm2(&mat).max(f64::MIN_POSITIVE);
            // measured: how far below the threshold the rank test falls
            checks.push(Check {
                constraint: format!("{what} at lambda = {label}"),
                measured: smin,
                tolerance: thresh,
                ok: smin > thresh,
            });
        }
    }
    Ok(ValidationReport::from_checks(checks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    /// Shift added to `MMᴴ/(n+m)` in the dissipation matrix.
    pub epsilon: f64,
    /// Shift added to `FFᴴ/n` in `E`; defaults to `epsilon`.
    pub e_shift: Option<f64>,
    /// When set, the damping is rescaled until `ρ(E, A)` is within a factor
    /// of 3 of this value.
    pub target_rho: Option<f64>,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            e_shift: None,
            target_rho: None,
        }
    }
}

/// Seeded strictly passive pH system:
/// `E = FFᴴ/n + e_shift·I`, `𝒲 = MMᴴ/(n+m) + ε·I`, `J`, `N` random
/// skew-Hermitian and `G` random, all from complex normal draws.
pub fn random_strictly_passive(n: usize, m: usize, seed: u64, opts: &GeneratorOptions) -> Result<PHSystem> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be at least 1".into()));
    }
    if !(opts.epsilon > 0.0) || opts.e_shift.is_some_and(|s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("generator shifts must be positive".into()));
    }
    let mut rng = rng::seeded(seed, rng::STREAM_SYSTEM);
    let f = rng::complex_normal_matrix(&mut rng, n, n);
    let mm = rng::complex_normal_matrix(&mut rng, n + m, n + m);
    let j = rng::random_skew_hermitian(&mut rng, n);
    let nn = rng::random_skew_hermitian(&mut rng, m);
    let g = rng::complex_normal_matrix(&mut rng, n, m);

    let e_shift = opts.e_shift.unwrap_or(opts.epsilon);
    let e = hermitian_part(&((&f * f.adjoint()).scale(1.0 / n as f64) + identity(n).scale(e_shift)));
    let w = hermitian_part(&((&mm * mm.adjoint()).scale(1.0 / (n + m) as f64) + identity(n + m).scale(opts.epsilon)));
    let ph = PHSystem {
        e,
        j,
        r: block(&w, 0, 0, n, n),
        g,
        p: block(&w, 0, n, n, m),
        s: block(&w, n, n, m, m),
        n: nn,
    };
    match opts.target_rho {
        Some(target) => Ok(calibrate_damping(&ph, target)?.system),
        None => Ok(ph),
    }
}

#[derive(Clone, Debug)]
pub struct Calibration {
    pub system: PHSystem,
    pub alpha: f64,
    pub rho: f64,
}

/// Scales the damping `R ← αR` (and `P ← √α P`, a congruence of `𝒲` that
/// keeps it positive definite) until `ρ(E, J − αR)` is within a factor of 3
/// of `target`. Bisection on `log α`, at most 40 stability-radius
/// evaluations after bracketing.
pub fn calibrate_damping(ph: &PHSystem, target: f64) -> Result<Calibration> {
    if !(target > 0.0) {
        return Err(Error::InvalidArgument("target_rho must be positive".into()));
    }
    let opts = StabilityOptions::default();
    let rho_at = |alpha: f64| -> Result<f64> {
        let a = &ph.j - ph.r.scale(alpha);
        Ok(stability_radius(&ph.e, &a, &opts)?.rho)
    };
    let gap = |rho: f64| (rho / target).ln();
    let accept = 3f64.ln();
    // a tighter internal goal keeps sweeps over several targets ordered
    let goal = 1.05f64.ln();

    let mut alpha = 1.0;
    let mut rho = rho_at(alpha)?;
    let (mut lo, mut hi);
    if gap(rho) > 0.0 {
        hi = alpha;
        lo = alpha;
        let mut steps = 0;
        while gap(rho) > 0.0 {
            lo /= 4.0;
            rho = rho_at(lo)?;
            steps += 1;
            if steps > 60 {
                return Err(Error::Calibration(format!("cannot reduce rho below {rho:.3e}")));
            }
        }
        alpha = lo;
    } else {
        lo = alpha;
        hi = alpha;
        let mut steps = 0;
        while gap(rho) < 0.0 {
            hi *= 4.0;
            rho = rho_at(hi)?;
            steps += 1;
            if steps > 30 {
                return Err(Error::Calibration(format!(
                    "target {target:.3e} exceeds reachable rho {rho:.3e}"
                )));
            }
        }
        alpha = hi;
    }
    for _ in 0..40 {
        if gap(rho).abs() <= goal {
            break;
        }
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        let r = rho_at(mid)?;
        if gap(r) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        alpha = mid;
        rho = r;
    }
    if gap(rho).abs() > accept {
        return Err(Error::Calibration(format!(
            "reached rho {rho:.3e} for target {target:.3e}"
        )));
    }
    let mut system = ph.clone();
    system.r = ph.r.scale(alpha);
    system.p = ph.p.scale(alpha.sqrt());
    Ok(Calibration { system, alpha, rho })
}

/// Complex unit used when promoting real scalars.
pub fn real(x: f64) -> Complex64 {
    c64(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_rows, inertia, Inertia};

    fn scalar(x: f64) -> ComplexMatrix {
        from_real_rows(1, 1, &[x]).unwrap()
    }

    fn trivial_ph() -> PHSystem {
        PHSystem::new(
            identity(2),
            ComplexMatrix::zeros(2, 2),
            identity(2),
            ComplexMatrix::zeros(2, 1),
            ComplexMatrix::zeros(2, 1),
            identity(1),
            ComplexMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn validate_ph_cases() {
        assert!(validate_ph(&trivial_ph(), 1e-10).passed);

        let mut bad = trivial_ph();
        bad.r = -identity(2);
        let report = validate_ph(&bad, 1e-10);
        assert!(!report.passed);
        assert!(report
            .violations
            .iter()
            .any(|v| v.constraint == "W positive semidefinite"));

        let mut bad = trivial_ph();
        bad.j = identity(2);
        let report = validate_ph(&bad, 1e-10);
        assert!(!report.passed);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].constraint, "V skew-Hermitian");
    }

    #[test]
    fn ph_to_descriptor_substitution() {
        let mut e1 = ComplexMatrix::zeros(2, 1);
        e1[(0, 0)] = real(1.0);
        let ph = PHSystem::new(
            identity(2),
            ComplexMatrix::zeros(2, 2),
            identity(2),
            e1.clone(),
            ComplexMatrix::zeros(2, 1),
            identity(1),
            ComplexMatrix::zeros(1, 1),
        )
        .unwrap();
        let sys = ph_to_descriptor(&ph);
        assert_eq!(sys.a, -identity(2));
        assert_eq!(sys.b, e1);
        assert_eq!(sys.c, e1.transpose());
        assert_eq!(sys.d, identity(1));

        let back = descriptor_to_ph(&sys);
        assert_eq!(back, ph);
    }

    #[test]
    fn zero_ph_gives_zero_descriptor() {
        let z = PHSystem {
            e: ComplexMatrix::zeros(2, 2),
            j: ComplexMatrix::zeros(2, 2),
            r: ComplexMatrix::zeros(2, 2),
            g: ComplexMatrix::zeros(2, 1),
            p: ComplexMatrix::zeros(2, 1),
            s: ComplexMatrix::zeros(1, 1),
            n: ComplexMatrix::zeros(1, 1),
        };
        let sys = ph_to_descriptor(&z);
        assert!([&sys.e, &sys.a, &sys.b, &sys.c, &sys.d].iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn skew_a_has_no_damping() {
        let mut r = rng::seeded(3, 0);
        let a = rng::random_skew_hermitian(&mut r, 3);
        let sys = DescriptorSystem::new(
            identity(3),
            a,
            rng::complex_normal_matrix(&mut r, 3, 2),
            rng::complex_normal_matrix(&mut r, 2, 3),
            identity(2),
        )
        .unwrap();
        assert_eq!(descriptor_to_ph(&sys).r.norm(), 0.0);
    }

    #[test]
    fn conversion_round_trip() {
        for seed in 0..10 {
            let mut r = rng::seeded(seed, 5);
            let sys = DescriptorSystem::new(
                rng::complex_normal_matrix(&mut r, 3, 3),
                rng::complex_normal_matrix(&mut r, 3, 3),
                rng::complex_normal_matrix(&mut r, 3, 2),
                rng::complex_normal_matrix(&mut r, 2, 3),
                rng::complex_normal_matrix(&mut r, 2, 2),
            )
            .unwrap();
            let back = ph_to_descriptor(&descriptor_to_ph(&sys));
            for (x, y) in [
                (&sys.a, &back.a),
                (&sys.b, &back.b),
                (&sys.c, &back.c),
                (&sys.d, &back.d),
            ] {
                assert!((x - y).norm() <= 1e-15 * x.norm().max(1.0) * 4.0);
            }
        }
    }

    fn scalar_sys(d: f64) -> DescriptorSystem {
        DescriptorSystem::new(scalar(1.0), scalar(-1.0), scalar(1.0), scalar(1.0), scalar(d)).unwrap()
    }

    #[test]
    fn transfer_eval_cases() {
        let sys = scalar_sys(0.0);
        assert!((transfer_eval(&sys, real(0.0)).unwrap()[(0, 0)] - real(1.0)).norm() < 1e-15);
        assert!(transfer_eval(&sys, real(1e8)).unwrap()[(0, 0)].norm() < 1e-7);
        assert!(matches!(transfer_eval(&sys, real(-1.0)), Err(Error::Singular { .. })));

        let mut r = rng::seeded(1, 5);
        let d = rng::complex_normal_matrix(&mut r, 2, 2);
        let sys = DescriptorSystem::new(
            identity(3),
            -identity(3),
            ComplexMatrix::zeros(3, 2),
            rng::complex_normal_matrix(&mut r, 2, 3),
            d.clone(),
        )
        .unwrap();
        assert_eq!(transfer_eval(&sys, c64(0.3, 2.0)).unwrap(), d);
    }

    #[test]
    fn popov_eval_cases() {
        assert!((popov_eval(&scalar_sys(0.0), 0.0).unwrap()[(0, 0)] - real(2.0)).norm() < 1e-15);
        let sys = DescriptorSystem::new(
            identity(2),
            -identity(2),
            ComplexMatrix::zeros(2, 2),
            identity(2),
            identity(2),
        )
        .unwrap();
        for w in [0.0, 1.0, -30.0] {
            assert_eq!(popov_eval(&sys, w).unwrap(), identity(2).scale(2.0));
        }
    }

    #[test]
    fn generated_systems_are_strictly_passive() {
        for seed in 0..8 {
            let (n, m) = (1 + seed as usize % 4, 1 + seed as usize % 3);
            let ph = random_strictly_passive(n, m, seed, &GeneratorOptions::default()).unwrap();
            assert!(validate_ph(&ph, DEFAULT_VALIDATION_TOL).passed);
            assert_eq!(inertia(&ph.e, 1e-10).unwrap(), Inertia::new(n, 0, 0));
            assert_eq!(
                inertia(&ph.dissipation_matrix(), 1e-10).unwrap(),
                Inertia::new(n + m, 0, 0)
            );
            let sys = ph_to_descriptor(&ph);
            let dd = &sys.d + sys.d.adjoint();
            assert!(hermitian_eigenvalues(&dd)[0] > 0.0);
            let (_, lmin) = popov_grid_minimum(&sys, 1e-4, 1e4, 50).unwrap();
            assert!(lmin > 0.0, "seed {seed}: {lmin}");
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_strictly_passive(3, 2, 42, &GeneratorOptions::default()).unwrap();
        let b = random_strictly_passive(3, 2, 42, &GeneratorOptions::default()).unwrap();
        let c = random_strictly_passive(3, 2, 43, &GeneratorOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn controllability_cases() {
        let mut e1 = ComplexMatrix::zeros(2, 1);
        e1[(0, 0)] = real(1.0);
        let sys = DescriptorSystem::new(identity(2), -identity(2), e1.clone(), e1.transpose(), identity(1)).unwrap();
        let report = controllability_observability_check(&sys, 1e-10).unwrap();
        assert!(!report.passed);
        assert!(report
            .violations
            .iter()
            .any(|v| v.constraint.starts_with("controllable")));

        let a = from_real_rows(2, 2, &[-1.0, 0.0, 0.0, -2.0]).unwrap();
        let b = from_real_rows(2, 1, &[1.0, 1.0]).unwrap();
        let sys = DescriptorSystem::new(identity(2), a, b.clone(), b.transpose(), identity(1)).unwrap();
        assert!(controllability_observability_check(&sys, 1e-10).unwrap().passed);

        let sys = DescriptorSystem::new(identity(2), -identity(2), identity(2), identity(2), identity(2)).unwrap();
        assert!(controllability_observability_check(&sys, 1e-10).unwrap().passed);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            DescriptorSystem::new(identity(2), identity(3), identity(2), identity(2), identity(2)),
            Err(Error::Dimension(_))
        ));
    }
}
