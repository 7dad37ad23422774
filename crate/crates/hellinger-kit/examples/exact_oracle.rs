//! The exact Gaussian-rational recursion as an oracle for the floating
//! engine: the counterexample family has the closed form
//! ‖Q_{2m}(0)‖ = (2m−1)!!/(2m)!!, verifiable without any tolerance.
//!
//! Run with: cargo run --example exact_oracle

use hellinger_kit::exact::{self, GaussRat};
use hellinger_kit::operator_model::OperatorFamily;
use hellinger_kit::recurrence;
use num_complex::Complex64;
use num_rational::BigRational;

fn main() {
    let family = OperatorFamily::hellinger_counterexample(2);
    let z0 = GaussRat::zero();
    let seq = exact::exact_fundamental_at_rational(&family, &z0, 20).unwrap();

    println!("exact ‖Q_{{2m}}(0)‖ against the double-factorial closed form:");
    for m in 0..=10u64 {
        let q = seq.q(2 * m as i64);
        let scalar = q.as_scalar_multiple_of_identity().unwrap();
        let modulus = exact::rational_modulus(&scalar).unwrap();
        let expected = if m == 0 {
            BigRational::from_integer(1.into())
        } else {
            BigRational::new(
                exact::double_factorial(2 * m - 1),
                exact::double_factorial(2 * m),
            )
        };
        println!(
            "  m = {m:<2} ‖Q_{:<2}‖ = {modulus}  (closed form {expected}, equal: {})",
            2 * m,
            modulus == expected
        );
    }

    // float engine vs exact oracle at a Gaussian-rational z
    let z = Complex64::new(0.5, 0.25);
    let zr = GaussRat::from_f64_pair(z.re, z.im).unwrap();
    let exact_seq = exact::exact_fundamental_at_rational(&family, &zr, 100).unwrap();
    let float_seq = recurrence::fundamental_system(&family, z, 100).unwrap();
    let mut worst = 0.0f64;
    for j in 0..=100i64 {
        let ex = exact_seq.q(j).to_matrixc();
        let dev = (&ex - float_seq.q(j)).norm() / ex.norm().max(1e-300);
        worst = worst.max(dev);
    }
    println!("\nmax relative float deviation over j ≤ 100 at z = {z}: {worst:.3e}");
}
