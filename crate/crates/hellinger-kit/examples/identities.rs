//! Verify the Wronskian-type identities linking the right solutions P, Q
//! with the left solutions P⁺, Q⁺ at every index.
//!
//! Run with: cargo run --example identities

use hellinger_kit::operator_model::OperatorFamily;
use hellinger_kit::recurrence;
use num_complex::Complex64;

fn main() {
    let family = OperatorFamily::hellinger_counterexample(3);
    let z = Complex64::new(0.7, -0.3);
    let fs = recurrence::fundamental_system(&family, z, 40).unwrap();
    let report = recurrence::check_identities(&fs, &family, 0, 39).unwrap();

    println!("identity defects over j = {}..={} at z = {z}:", report.j_lo, report.j_hi);
    for (name, defect) in &report.per_identity {
        println!("  {defect:.3e}  {name}");
    }
    println!(
        "\nworst: {:.3e} at j = {} ({})",
        report.max_defect, report.worst_j, report.worst_identity
    );

    // symmetry: for a symmetric family at real z, the left solutions are
    // the adjoints of the right ones
    let sym = family.check_symmetry(20).unwrap();
    println!("family symmetric: {}", sym.is_symmetric);
    let fs = recurrence::fundamental_system(&family, Complex64::new(0.5, 0.0), 10).unwrap();
    let dev = (fs.p_plus(7) - fs.p(7).adjoint()).norm();
    println!("‖P⁺_7 − P_7*‖ at z = 1/2: {dev:.3e}");
}
