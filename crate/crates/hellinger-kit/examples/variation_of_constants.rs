//! Solve the inhomogeneous equation l(U)_j − zU_j = F_j by variation of
//! constants: U_j = Q_j C_j^1 + P_j C_j^2 with recursively updated
//! coefficient sums.
//!
//! Run with: cargo run --example variation_of_constants

use hellinger_kit::linalg::{self, MatrixC};
use hellinger_kit::operator_model::OperatorFamily;
use hellinger_kit::recurrence::Side;
use hellinger_kit::voc::{self, InhomogeneousProblem};
use num_complex::Complex64;

fn main() {
    let n = 2;
    let family = OperatorFamily::free_jacobi(n);
    let z = Complex64::new(0.4, 0.1);
    let j_max = 25;

    // oscillating forcing
    let forcing: Vec<MatrixC> = (0..j_max)
        .map(|j| linalg::scalar(n, Complex64::new((j as f64).cos(), (j as f64 / 3.0).sin())))
        .collect();

    let problem = InhomogeneousProblem {
        family: family.clone(),
        z,
        forcing: forcing.clone(),
        side: Side::Right,
        base: (linalg::identity(n), linalg::zero(n)),
    };
    let sol = voc::solve_inhomogeneous(&problem).unwrap();
    println!("inhomogeneous solve at z = {z}, J = {j_max}:");
    println!("  max scaled residual of l(U) − zU = F: {:.3e}", sol.max_residual);
    for j in [0i64, 5, 10, 20, 25] {
        println!("  ‖U_{j}‖ = {:.6}", sol.value(j).norm());
    }

    // the coefficients satisfy the step system
    // Q_j ΔC¹_{j+1} + P_j ΔC²_{j+1} = O and
    // A_{j,j+1}(Q_{j+1} ΔC¹ + P_{j+1} ΔC²) = F_j at every index
    let fs = hellinger_kit::recurrence::fundamental_system(&family, z, j_max).unwrap();
    let coeffs = voc::voc_coefficients(
        &fs,
        &forcing,
        0,
        j_max,
        (&problem.base.0, &problem.base.1),
        Side::Right,
    )
    .unwrap();
    let defect = voc::delta_system_defect(&fs, &family, &coeffs, &forcing).unwrap();
    println!("  max step-system defect: {defect:.3e}");
}
