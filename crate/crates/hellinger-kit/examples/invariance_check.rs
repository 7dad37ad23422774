//! Quantitative l^p invariance: if every right solution at z₀ is in l^p
//! and every left solution in l^q, the same holds at every other z. The
//! check finds the threshold index k₀ with
//! |z−z₀|·M_{k₀}^{q,+}(z₀)·M_{k₀}^p(z₀) ≤ 1/4 and verifies the tail bound
//! N_{k₀,J}^p ≤ 4·C_{k₀}·M_{k₀}^p(z₀) on a 64-point grid around z₀.
//!
//! Run with: cargo run --example invariance_check

use hellinger_kit::lp_analysis::{self, LpSettings};
use hellinger_kit::operator_model::OperatorFamily;
use num_complex::Complex64;

fn main() {
    let settings = LpSettings::default();
    let z0 = Complex64::new(0.0, 0.0);

    for (name, family, p) in [
        ("geometric (ratio 2), p = 2", OperatorFamily::geometric(2.0), 2.0),
        ("diag_geometric(2,3), p = 1 (so q = ∞)", OperatorFamily::diag_geometric(vec![2.0, 3.0]), 1.0),
    ] {
        let grid = lp_analysis::default_z_grid(z0);
        let report = lp_analysis::hellinger_check(&family, z0, p, &grid, 300, &settings).unwrap();
        println!("{name}:");
        println!(
            "  precondition: right {:?} at p = {}, left {:?} at q = {}{}",
            report.precondition_right,
            report.p,
            report.precondition_left,
            report.q,
            if report.symmetric_shortcut { " (symmetric shortcut)" } else { "" }
        );
        let passed = report
            .points
            .iter()
            .filter(|pt| pt.error.is_none() && pt.bound_ok)
            .count();
        println!("  grid points passing threshold + bound: {passed}/{}", report.points.len());
        let worst_k0 = report.points.iter().filter_map(|pt| pt.k0).max().unwrap();
        println!("  largest k₀ needed on the grid: {worst_k0}");
        // a sample faraway point
        let far = report
            .points
            .iter()
            .max_by(|a, b| {
                let da = Complex64::new(a.z[0], a.z[1]).norm();
                let db = Complex64::new(b.z[0], b.z[1]).norm();
                da.total_cmp(&db)
            })
            .unwrap();
        println!(
            "  |z| = {:.2}: k₀ = {:?}, product = {:.3e}, N = ({:.3e}, {:.3e}), 4·C·M = ({:.3e}, {:.3e})\n",
            Complex64::new(far.z[0], far.z[1]).norm(),
            far.k0,
            far.threshold_product,
            far.n_kj[0],
            far.n_kj[1],
            4.0 * far.c_k[0] * far.m_p_at_k0,
            4.0 * far.c_k[1] * far.m_p_at_k0,
        );
    }
}
