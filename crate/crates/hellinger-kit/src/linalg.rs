//! Dense complex matrix arithmetic shared by every other module: norms,
//! inversion with a condition estimate, Hermitian/positivity tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type MatrixC = DMatrix<Complex64>;
pub type VectorC = DVector<Complex64>;

/// Default relative tolerance on `‖M·M⁻¹ − E‖` accepted from `invert`.
pub const TOL_INV: f64 = 1e-10;
/// Condition estimates above this are treated as untrusted.
pub const COND_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("non-finite matrix")]
    NonFinite,
    #[error("ill-conditioned block (condition estimate {cond:.3e}, cap {cap:.3e})")]
    IllConditioned { cond: f64, cap: f64 },
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Which matrix norm the pipeline uses. The spectral norm is the default;
/// Frobenius is offered as a cheaper alternative (all verdicts are
/// norm-equivalence invariant in finite dimension).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    Spectral,
    Frobenius,
}

pub fn identity(n: usize) -> MatrixC {
    MatrixC::identity(n, n)
}

pub fn zero(n: usize) -> MatrixC {
    MatrixC::zeros(n, n)
}

pub fn scalar(n: usize, s: Complex64) -> MatrixC {
    identity(n) * s
}

pub fn is_finite(m: &MatrixC) -> bool {
    m.iter().all(|e| e.re.is_finite() && e.im.is_finite())
}

pub fn vec_is_finite(v: &VectorC) -> bool {
    v.iter().all(|e| e.re.is_finite() && e.im.is_finite())
}

/// Operator norm induced by the Euclidean vector norm (largest singular
/// value). Errors on non-finite input.
// Largest entry magnitude, used to prescale before anything that squares
// entries (SVD, norm_sqr sums) and would overflow past ~1e154.
fn entry_scale(m: &MatrixC) -> f64 {
    m.iter()
        .map(|e| e.re.abs().max(e.im.abs()))
        .fold(0.0f64, f64::max)
}

pub fn operator_norm(m: &MatrixC) -> Result<f64, LinalgError> {
    if !is_finite(m) {
        return Err(LinalgError::NonFinite);
    }
    let s = entry_scale(m);
    if s == 0.0 {
        return Ok(0.0);
    }
    // multiply by the real reciprocal: complex division would square `s`
    // in its denominator and overflow for large entries
    let scaled = m.map(|e| Complex64::new(e.re / s, e.im / s));
    Ok(s * scaled.singular_values().max())
}

pub fn frobenius_norm(m: &MatrixC) -> Result<f64, LinalgError> {
    if !is_finite(m) {
        return Err(LinalgError::NonFinite);
    }
    let s = entry_scale(m);
    if s == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = m.iter().map(|e| (e / s).norm_sqr()).sum();
    Ok(s * sum.sqrt())
}

pub fn norm(m: &MatrixC, kind: NormKind) -> Result<f64, LinalgError> {
    match kind {
        NormKind::Spectral => operator_norm(m),
        NormKind::Frobenius => frobenius_norm(m),
    }
}

/// Inverse of `m` together with a condition estimate `σ_max/σ_min`.
///
/// Fails when the matrix is singular to working precision or the condition
/// estimate exceeds `cond_cap`.
pub fn invert(m: &MatrixC, cond_cap: f64) -> Result<(MatrixC, f64), LinalgError> {
    if !is_finite(m) {
        return Err(LinalgError::NonFinite);
    }
    let s = entry_scale(m);
    if s == 0.0 {
        return Err(LinalgError::Singular);
    }
    let scaled = m.map(|e| Complex64::new(e.re / s, e.im / s));
    let sv = scaled.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || smax / smin > 1.0 / f64::EPSILON {
        return Err(LinalgError::Singular);
    }
    let cond = smax / smin;
    if cond > cond_cap {
        return Err(LinalgError::IllConditioned { cond, cap: cond_cap });
    }
    let inv = scaled
        .try_inverse()
        .ok_or(LinalgError::Singular)?
        .map(|e| Complex64::new(e.re / s, e.im / s));
    if !is_finite(&inv) {
        return Err(LinalgError::Singular);
    }
    Ok((inv, cond))
}

/// `(hermitian?, positive-definite?)` flags with relative tolerance `tol`.
pub fn is_hermitian_positive(m: &MatrixC, tol: f64) -> (bool, bool) {
    let scale = operator_norm(m).unwrap_or(f64::INFINITY);
    if !scale.is_finite() {
        return (false, false);
    }
    let defect = operator_norm(&(m - m.adjoint())).unwrap_or(f64::INFINITY);
    let hermitian = defect <= tol * scale.max(1.0);
    if !hermitian {
        return (false, false);
    }
    // symmetrize before the eigen call so roundoff skew cannot bias it
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigenvalues();
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    (true, min_eig > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> MatrixC {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        MatrixC::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_unitary(n: usize, seed: u64) -> MatrixC {
        let qr = random_matrix(n, seed).qr();
        qr.q()
    }

    #[test]
    fn norm_of_zero_and_identity() {
        assert_eq!(operator_norm(&zero(2)).unwrap(), 0.0);
        assert!((operator_norm(&identity(3)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norm_of_diagonal_is_max_modulus() {
        let m = MatrixC::from_diagonal(&VectorC::from_vec(vec![c(3.0, 0.0), c(0.0, -4.0)]));
        assert!((operator_norm(&m).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn norm_rejects_non_finite() {
        let mut m = identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert_eq!(operator_norm(&m), Err(LinalgError::NonFinite));
    }

    #[test]
    fn invert_identity_and_diagonal() {
        let (inv, _) = invert(&identity(3), COND_CAP).unwrap();
        assert!(operator_norm(&(inv - identity(3))).unwrap() < 1e-14);
        let d = MatrixC::from_diagonal(&VectorC::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]));
        let (inv, _) = invert(&d, COND_CAP).unwrap();
        assert!((inv[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((inv[(1, 1)] - c(0.25, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn permutation_is_its_own_inverse() {
        let mut p = zero(2);
        p[(0, 1)] = c(1.0, 0.0);
        p[(1, 0)] = c(1.0, 0.0);
        let (inv, _) = invert(&p, COND_CAP).unwrap();
        assert!(operator_norm(&(&p * &inv - identity(2))).unwrap() < TOL_INV);
        assert!(operator_norm(&(inv - &p)).unwrap() < 1e-14);
    }

    #[test]
    fn invert_rejects_singular() {
        let m = MatrixC::from_diagonal(&VectorC::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert!(matches!(invert(&m, COND_CAP), Err(LinalgError::Singular)));
    }

    #[test]
    fn invert_respects_cond_cap() {
        let m = MatrixC::from_diagonal(&VectorC::from_vec(vec![c(1.0, 0.0), c(1e-8, 0.0)]));
        assert!(matches!(invert(&m, 1e6), Err(LinalgError::IllConditioned { .. })));
    }

    #[test]
    fn hermitian_positive_flags() {
        assert_eq!(is_hermitian_positive(&identity(2), 1e-12), (true, true));
        let mut nilp = zero(2);
        nilp[(0, 1)] = c(1.0, 0.0);
        assert_eq!(is_hermitian_positive(&nilp, 1e-12), (false, false));
        let indef = MatrixC::from_diagonal(&VectorC::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
        assert_eq!(is_hermitian_positive(&indef, 1e-12), (true, false));
    }

    proptest! {
        #[test]
        fn submultiplicative(sa in 0u64..500, sb in 500u64..1000, n in 1usize..5) {
            let a = random_matrix(n, sa);
            let b = random_matrix(n, sb);
            let na = operator_norm(&a).unwrap();
            let nb = operator_norm(&b).unwrap();
            let nab = operator_norm(&(&a * &b)).unwrap();
            prop_assert!(nab <= na * nb * (1.0 + 1e-12));
        }

        #[test]
        fn inverse_roundtrip(seed in 0u64..1000, n in 1usize..5) {
            let a = random_matrix(n, seed) + identity(n) * c(3.0, 0.0);
            let (inv, _) = invert(&a, COND_CAP).unwrap();
            let defect = operator_norm(&(&a * &inv - identity(n))).unwrap();
            prop_assert!(defect <= TOL_INV);
        }

        #[test]
        fn unitary_invariance(seed in 0u64..1000, n in 1usize..5) {
            let m = random_matrix(n, seed);
            let u = random_unitary(n, seed.wrapping_add(17));
            let v = random_unitary(n, seed.wrapping_add(91));
            let base = operator_norm(&m).unwrap();
            let rotated = operator_norm(&(&u * &m * &v)).unwrap();
            prop_assert!((base - rotated).abs() <= 1e-10 * base.max(1.0));
        }
    }
}
