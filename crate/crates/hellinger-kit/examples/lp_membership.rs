//! Classify the growth of fundamental-solution norms and decide whether
//! every solution lies in l^p. Membership is inferred from fitted growth
//! models, never from truncated partial sums.
//!
//! Run with: cargo run --example lp_membership

use hellinger_kit::lp_analysis::{self, LpSettings, TailSide};
use hellinger_kit::operator_model::OperatorFamily;
use hellinger_kit::recurrence;
use num_complex::Complex64;

fn main() {
    let settings = LpSettings::default();
    let z = Complex64::new(0.0, 0.0);

    let cases: Vec<(&str, OperatorFamily, Vec<f64>)> = vec![
        (
            "geometric (ratio 2)",
            OperatorFamily::geometric(2.0),
            vec![1.0, 2.0, f64::INFINITY],
        ),
        (
            "free Jacobi",
            OperatorFamily::free_jacobi(1),
            vec![2.0, f64::INFINITY],
        ),
        (
            "counterexample (weights j+1)",
            OperatorFamily::hellinger_counterexample(2),
            vec![1.9, 2.0, 2.1, 3.0],
        ),
    ];

    for (name, family, ps) in &cases {
        println!("{name} at z = 0:");
        for &p in ps {
            let rep =
                lp_analysis::membership_verdict(family, z, p, 2000, TailSide::Plain, &settings)
                    .unwrap();
            println!(
                "  p = {:<4} → {:?}  (fits: {:?} α={:.3}, {:?} α={:.3})",
                if p.is_infinite() { "∞".to_string() } else { p.to_string() },
                rep.verdict,
                rep.first_family.classification,
                rep.first_family.exponent,
                rep.second_family.classification,
                rep.second_family.exponent,
            );
        }
    }

    // tail norms M_k^p with remainder estimates
    let family = OperatorFamily::geometric(2.0);
    let trace = recurrence::norm_trace(&family, z, 200, settings.norm_kind).unwrap();
    println!("\ngeometric family tail norms M_k^1 at z = 0:");
    for k in [0usize, 2, 6, 10] {
        let t = lp_analysis::tail_norm(&trace, 1.0, k, 200, TailSide::Plain, &settings).unwrap();
        println!("  k = {k:<2} → {:.6e} (relative remainder ≈ {:.1e})", t.value, t.tail_remainder);
    }
}
