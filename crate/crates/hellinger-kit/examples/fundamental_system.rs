//! Build the four fundamental matrix solutions P, Q, P⁺, Q⁺ of a block
//! tridiagonal three-term recurrence and print their norms.
//!
//! Run with: cargo run --example fundamental_system

use hellinger_kit::linalg::NormKind;
use hellinger_kit::operator_model::OperatorFamily;
use hellinger_kit::recurrence::{self, FundamentalKind};
use num_complex::Complex64;

fn main() {
    // A_{j,j} = O, A_{j+1,j} = A_{j,j+1} = (j+1)·E with 2×2 blocks
    let family = OperatorFamily::hellinger_counterexample(2);
    let z = Complex64::new(0.0, 0.0);

    let fs = recurrence::fundamental_system(&family, z, 12).unwrap();
    println!("fundamental system at z = {z} (dim {}):", fs.dim());
    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "j", "‖P_j‖", "‖Q_j‖", "‖P⁺_j‖", "‖Q⁺_j‖");
    for j in -1..=12i64 {
        println!(
            "{j:>4} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            fs.p(j).norm(),
            fs.q(j).norm(),
            fs.p_plus(j).norm(),
            fs.q_plus(j).norm()
        );
    }

    // the log-rescaled trace reaches horizons where the raw recursion
    // would overflow
    let family = OperatorFamily::free_jacobi(1);
    let trace = recurrence::norm_trace(&family, Complex64::new(3.0, 0.0), 2000, NormKind::Spectral)
        .unwrap();
    let lam = (3.0 + 5f64.sqrt()) / 2.0;
    println!(
        "\nfree Jacobi at z = 3: ln‖Q_2000‖ = {:.2} (exact growth rate ln λ = {:.6}, λ = {lam:.4})",
        trace.ln_norm(FundamentalKind::Q, 2000),
        lam.ln()
    );
}
