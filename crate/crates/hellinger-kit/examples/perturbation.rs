//! Bounded diagonal perturbations preserve l^p membership: replacing the
//! homogeneous equation by l(u)_j = F_j u_j with sup_j‖F_j‖ < ∞ keeps the
//! verdicts. Unbounded perturbations violate the hypothesis and are
//! rejected at the gate rather than guessed at.
//!
//! Run with: cargo run --example perturbation

use hellinger_kit::experiments::{self, StockPerturbation};
use hellinger_kit::lp_analysis::LpSettings;
use hellinger_kit::operator_model::OperatorFamily;

fn main() {
    let settings = LpSettings::default();
    let family = OperatorFamily::geometric(2.0);

    for p in [1.0, 2.0] {
        println!("p = {p}:");
        let rep =
            experiments::run_perturbation_scenario(&family, StockPerturbation::Sine, p, 300, &settings)
                .unwrap();
        println!(
            "  F_j = sin(j)·E  (sup = {:.3}): base {:?}/{:?} → perturbed {:?}/{:?}",
            rep.sup_f, rep.base_right, rep.base_left,
            rep.perturbed_right.unwrap(), rep.perturbed_left.unwrap()
        );

        let rep = experiments::run_perturbation_scenario(
            &family,
            StockPerturbation::Linear,
            p,
            300,
            &settings,
        )
        .unwrap();
        println!(
            "  F_j = j·E       (sup = {:.0}): precondition violated = {}\n",
            rep.sup_f, rep.precondition_violated
        );
    }
}
