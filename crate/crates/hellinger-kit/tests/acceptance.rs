//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use hellinger_kit::exact;
use hellinger_kit::experiments::{self, StockPerturbation};
use hellinger_kit::linalg::{self, MatrixC};
use hellinger_kit::lp_analysis::{self, LpSettings, Verdict};
use hellinger_kit::operator_model::{FamilySpec, OperatorFamily};
use hellinger_kit::recurrence::{self, FundamentalKind, Side};
use hellinger_kit::voc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn verdict_line(n: u32, ok: bool, detail: &str) {
    println!(
        "criterion {n}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} failed: {detail}");
}

/// Well-conditioned random block family: off-diagonal blocks are random
/// perturbations of 2E, diagonal blocks random with entries in (−1/2, 1/2).
fn random_family(n: usize, horizon: usize, rng: &mut ChaCha8Rng) -> OperatorFamily {
    let mut block = |shift: f64| {
        MatrixC::from_fn(n, n, |r, col| {
            let base = if r == col { shift } else { 0.0 };
            c(base + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        })
    };
    let sub: Vec<_> = (0..horizon).map(|_| block(2.0)).collect();
    let diag: Vec<_> = (0..horizon).map(|_| block(0.0)).collect();
    let sup: Vec<_> = (0..horizon).map(|_| block(2.0)).collect();
    OperatorFamily::explicit(n, sub, diag, sup)
}

fn random_z(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
}

#[test]
fn criterion_1_identity_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for fam_idx in 0..20 {
        let n = 1 + fam_idx % 4;
        let fam = random_family(n, 60, &mut rng);
        for _ in 0..5 {
            let z = random_z(&mut rng);
            let fs = recurrence::fundamental_system(&fam, z, 51).unwrap();
            let rep = recurrence::check_identities(&fs, &fam, 0, 50).unwrap();
            worst = worst.max(rep.max_defect);
        }
    }
    let dt = start.elapsed();
    let ok = worst <= 1e-9 && dt.as_secs_f64() < 10.0;
    verdict_line(
        1,
        ok,
        &format!(
            "identity suite on 20 random families × 5 z: max scaled defect {worst:.3e}, {:.2}s",
            dt.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_inhomogeneous_and_delta_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let j_max = 50;
    let mut worst_res = 0.0f64;
    let mut worst_delta = 0.0f64;
    for fam_idx in 0..20 {
        let n = 1 + fam_idx % 4;
        let fam = random_family(n, j_max + 2, &mut rng);
        let z = random_z(&mut rng);
        let forcing: Vec<MatrixC> = (0..j_max)
            .map(|_| {
                MatrixC::from_fn(n, n, |_, _| {
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        let base = (linalg::identity(n), linalg::zero(n));
        let problem = voc::InhomogeneousProblem {
            family: fam.clone(),
            z,
            forcing: forcing.clone(),
            side: Side::Right,
            base: base.clone(),
        };
        let sol = voc::solve_inhomogeneous(&problem).unwrap();
        worst_res = worst_res.max(sol.max_residual);

        let fs = recurrence::fundamental_system(&fam, z, j_max).unwrap();
        let coeffs =
            voc::voc_coefficients(&fs, &forcing, 0, j_max, (&base.0, &base.1), Side::Right)
                .unwrap();
        let delta = voc::delta_system_defect(&fs, &fam, &coeffs, &forcing).unwrap();
        worst_delta = worst_delta.max(delta);
    }
    let ok = worst_res <= 1e-9 && worst_delta <= 1e-9;
    verdict_line(
        2,
        ok,
        &format!(
            "variation-of-constants: max residual {worst_res:.3e}, max step-system defect {worst_delta:.3e}"
        ),
    );
}

#[test]
fn criterion_3_representation_two_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let j_max = 100;
    let mut worst = 0.0f64;
    let builtins = vec![
        OperatorFamily::hellinger_counterexample(2),
        OperatorFamily::free_jacobi(1),
        OperatorFamily::geometric(2.0),
    ];
    let randoms: Vec<OperatorFamily> = (1..=3)
        .map(|n| random_family(n, j_max + 2, &mut rng))
        .collect();
    for fam in builtins.iter().chain(randoms.iter()) {
        let z0 = random_z(&mut rng) * 0.5;
        let dz = random_z(&mut rng);
        let z = z0 + dz / dz.norm().max(1.0) * rng.gen_range(0.1..2.0);
        let fs0 = recurrence::fundamental_system(fam, z0, j_max).unwrap();
        let fs_z = recurrence::fundamental_system(fam, z, j_max).unwrap();
        let horizon = j_max.min(fs0.horizon).min(fs_z.horizon);
        for side in [Side::Right, Side::Left] {
            for kind in [FundamentalKind::P, FundamentalKind::Q] {
                let y = |j: i64| -> MatrixC {
                    match (kind, side) {
                        (FundamentalKind::P, Side::Right) => fs_z.p(j).clone(),
                        (_, Side::Right) => fs_z.q(j).clone(),
                        (FundamentalKind::P, Side::Left) => fs_z.p_plus(j).clone(),
                        (_, Side::Left) => fs_z.q_plus(j).clone(),
                    }
                };
                let rep =
                    voc::hellinger_representation(fam, &fs0, &y, z, 0, horizon, side).unwrap();
                worst = worst.max(rep.max_defect);
            }
        }
    }
    let ok = worst <= 1e-8;
    verdict_line(
        3,
        ok,
        &format!("spectral-shift representation two-path defect {worst:.3e} (J = {j_max})"),
    );
}

#[test]
fn criterion_4_exact_oracle_equivalence() {
    // all exact-capable scenarios: rational-entry families at dyadic z
    let scenarios: Vec<(OperatorFamily, Complex64, &str)> = vec![
        (OperatorFamily::hellinger_counterexample(2), c(0.0, 0.0), "counterexample z=0"),
        (OperatorFamily::hellinger_counterexample(2), c(0.0, 1.0), "counterexample z=i"),
        (OperatorFamily::free_jacobi(1), c(0.5, 0.0), "free_jacobi z=1/2"),
        (OperatorFamily::geometric(2.0), c(0.0, 0.0), "geometric z=0"),
    ];
    let j_max = 200;
    let mut worst = 0.0f64;
    for (fam, z, _) in &scenarios {
        let zr = exact::GaussRat::from_f64_pair(z.re, z.im).unwrap();
        let exact_seq = exact::exact_fundamental_at_rational(fam, &zr, j_max).unwrap();
        let float_seq = recurrence::fundamental_system(fam, *z, j_max).unwrap();
        for j in -1..=(j_max as i64) {
            for (ex, fl) in [
                (exact_seq.p(j), float_seq.p(j)),
                (exact_seq.q(j), float_seq.q(j)),
                (exact_seq.p_plus(j), float_seq.p_plus(j)),
                (exact_seq.q_plus(j), float_seq.q_plus(j)),
            ] {
                let exact_f = ex.to_matrixc();
                let scale = exact_f.norm();
                let dev = (&exact_f - fl).norm();
                let rel = if scale > 0.0 { dev / scale } else { dev };
                worst = worst.max(rel);
            }
        }
    }
    let ok = worst <= 1e-12;
    verdict_line(
        4,
        ok,
        &format!(
            "float vs exact rational oracle: max relative deviation {worst:.3e} over j ≤ {j_max}"
        ),
    );
}

#[derive(Deserialize)]
struct CounterexampleExpected {
    n: usize,
    exponent: f64,
    exponent_tol: f64,
    exponent_horizon: usize,
    bounded_horizon: usize,
    p_in: f64,
    p_out: f64,
    witness_min_score: f64,
}

#[test]
fn criterion_5_counterexample_sharpness() {
    let start = Instant::now();
    let expected: CounterexampleExpected = serde_json::from_str(include_str!(
        "fixtures/counterexample_expected.json"
    ))
    .unwrap();
    let settings = LpSettings::default();
    let rep = experiments::run_counterexample(
        expected.n,
        expected.exponent_horizon,
        expected.bounded_horizon,
        &[expected.p_out, expected.p_in],
        &settings,
    )
    .unwrap();
    let exp_ok = (rep.p_fit.exponent - expected.exponent).abs() <= expected.exponent_tol
        && (rep.q_fit.exponent - expected.exponent).abs() <= expected.exponent_tol;
    let verdict_of = |p: f64| {
        rep.verdicts
            .iter()
            .find(|v| v.p == p)
            .map(|v| v.verdict)
            .unwrap()
    };
    let flip_ok = verdict_of(expected.p_in) == Verdict::AllInLp
        && verdict_of(expected.p_out) == Verdict::NotAllInLp;
    let witness_ok = rep.witnesses.iter().all(|w| {
        w.sup_norm.is_finite() && w.sup_norm > 0.0 && w.score >= expected.witness_min_score
    });
    let dt = start.elapsed();
    let ok = exp_ok && flip_ok && witness_ok && dt.as_secs_f64() < 60.0;
    verdict_line(
        5,
        ok,
        &format!(
            "sharpness: exponents ({:.4}, {:.4}), flip at p = 2 {}, witness scores ({:.3}, {:.3}), {:.1}s",
            rep.p_fit.exponent,
            rep.q_fit.exponent,
            flip_ok,
            rep.witnesses[0].score,
            rep.witnesses[1].score,
            dt.as_secs_f64()
        ),
    );
}

#[derive(Deserialize)]
struct ScenarioFixture {
    name: String,
    family: FamilySpec,
    z0: [f64; 2],
    p: f64,
    horizon: usize,
}

#[test]
fn criterion_6_invariance_grid() {
    let start = Instant::now();
    let fixtures: Vec<ScenarioFixture> =
        serde_json::from_str(include_str!("fixtures/invariance_scenarios.json")).unwrap();
    let settings = LpSettings::default();
    let mut all_ok = true;
    let mut detail = String::new();
    for fx in &fixtures {
        let fam = OperatorFamily::from_spec(&fx.family).unwrap();
        let z0 = c(fx.z0[0], fx.z0[1]);
        let grid = lp_analysis::default_z_grid(z0);
        let rep = lp_analysis::hellinger_check(&fam, z0, fx.p, &grid, fx.horizon, &settings)
            .unwrap();
        let ok = !rep.vacuous
            && rep.points.len() == 64
            && rep.points.iter().all(|pt| {
                pt.error.is_none()
                    && pt.k0.is_some()
                    && pt.threshold_product <= 0.25
                    && pt.bound_ok
                    && pt.verdict == Verdict::AllInLp
            });
        if !ok {
            all_ok = false;
        }
        detail.push_str(&format!("{}: {} ", fx.name, if ok { "ok" } else { "FAIL" }));
    }
    let dt = start.elapsed();
    let ok = all_ok && dt.as_secs_f64() < 60.0;
    verdict_line(
        6,
        ok,
        &format!("64-point invariance grids — {detail}({:.1}s)", dt.as_secs_f64()),
    );
}

#[test]
fn criterion_7_bounded_perturbation() {
    let settings = LpSettings::default();
    let fam = OperatorFamily::geometric(2.0);
    let mut ok = true;
    let mut detail = String::new();
    for p in [1.0, 2.0] {
        let rep =
            experiments::run_perturbation_scenario(&fam, StockPerturbation::Sine, p, 300, &settings)
                .unwrap();
        let preserved = !rep.precondition_violated
            && rep.base_right == Verdict::AllInLp
            && rep.perturbed_right == Some(Verdict::AllInLp)
            && rep.perturbed_left == Some(rep.base_left);
        let rejected = experiments::run_perturbation_scenario(
            &fam,
            StockPerturbation::Linear,
            p,
            300,
            &settings,
        )
        .unwrap()
        .precondition_violated;
        if !(preserved && rejected) {
            ok = false;
        }
        detail.push_str(&format!(
            "p={p}: sine preserved {preserved}, linear rejected {rejected}; "
        ));
    }
    verdict_line(7, ok, &detail);
}

#[test]
fn criterion_8_exact_double_factorial() {
    let fam = OperatorFamily::hellinger_counterexample(2);
    let z0 = exact::GaussRat::zero();
    let seq = exact::exact_fundamental_at_rational(&fam, &z0, 1000).unwrap();
    let mut ok = true;
    for m in 0..=500u64 {
        let q = seq.q(2 * m as i64);
        let Some(scalar) = q.as_scalar_multiple_of_identity() else {
            ok = false;
            break;
        };
        let Some(modulus) = exact::rational_modulus(&scalar) else {
            ok = false;
            break;
        };
        // (−1)!! = 0!! = 1 by convention, so m = 0 gives ‖Q_0‖ = 1
        let numer = if m == 0 {
            exact::double_factorial(0)
        } else {
            exact::double_factorial(2 * m - 1)
        };
        let expected = num_rational::BigRational::new(numer, exact::double_factorial(2 * m));
        if modulus != expected {
            ok = false;
            break;
        }
    }
    verdict_line(
        8,
        ok,
        "‖Q_{2m}(0)‖ = (2m−1)!!/(2m)!! exactly in rational arithmetic for m ≤ 500",
    );
}

#[test]
fn criterion_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_hellinger-kit");
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "family": {"kind": "builtin", "name": "counterexample", "n": 2},
            "z": [0.0, 0.0],
            "j": 100,
            "p": 2.0
        }"#,
    )
    .unwrap();
    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args([
                "recur",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let report = std::fs::read_to_string(out.join("report.json")).unwrap();
        let csv = std::fs::read_to_string(out.join("series_fundamental.csv")).unwrap();
        let stripped: String = report
            .lines()
            .filter(|l| !l.contains("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n");
        (stripped, csv)
    };
    let a = run(&tmp.path().join("a"));
    let b = run(&tmp.path().join("b"));
    let ok = a == b;
    verdict_line(
        9,
        ok,
        "repeated CLI runs byte-identical (report.json modulo timestamp, CSV exact)",
    );
}
