//! lᵖ tail norms, growth classification of fundamental-solution norms,
//! membership verdicts, and the quantitative Hellinger-type invariance
//! checks (including the symmetric shortcut and bounded perturbations).
//!
//! Membership is never decided from raw truncated sums alone: a truncated
//! harmonic tail looks finite at every horizon. Verdicts combine a growth
//! classification of `ln ‖Y_j‖` with the summability this implies.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{self, MatrixC, NormKind};
use crate::operator_model::{FamilyError, OperatorFamily};
use crate::recurrence::{self, FundamentalKind, NormTrace, RecurrenceError, Side};
use crate::voc::{self, VocError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("p must lie in [1, ∞], got {0}")]
    BadExponent(f64),
    #[error("window too short: {have} positive samples, need {need}")]
    WindowTooShort { have: usize, need: usize },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
    #[error(transparent)]
    Voc(#[from] VocError),
}

/// Tunables shared by the verdict machinery.
#[derive(Debug, Clone, Serialize)]
pub struct LpSettings {
    pub norm_kind: NormKind,
    /// Horizon for membership verdicts.
    pub verdict_horizon: usize,
    /// Horizon for exponent estimation.
    pub exponent_horizon: usize,
    /// Minimum positive samples for a growth fit.
    pub min_samples: usize,
    /// RMS log-residual above which a fit is inconclusive.
    pub residual_threshold: f64,
    /// Margin on `p·α` against −1 when deciding power-law summability;
    /// ties and near-ties count as divergent.
    pub power_margin: f64,
    /// |α| below this counts as bounded rather than power growth/decay.
    pub bounded_band: f64,
    /// Truncation slack on the `N ≤ 4·C_k·M_k` bound.
    pub bound_slack: f64,
}

impl Default for LpSettings {
    fn default() -> Self {
        Self {
            norm_kind: NormKind::Spectral,
            verdict_horizon: 2000,
            exponent_horizon: 10_000,
            min_samples: 20,
            residual_threshold: 1.5,
            power_margin: 1e-3,
            bounded_band: 0.05,
            bound_slack: 0.05,
        }
    }
}

fn check_p(p: f64) -> Result<(), LpError> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(LpError::BadExponent(p))
    }
}

/// Conjugate exponent: `1/p + 1/q = 1`, with `q = ∞` for `p = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Which pair of fundamental families a tail norm ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    /// `P`, `Q` (right equation).
    Plain,
    /// `P⁺`, `Q⁺` (left equation).
    Plus,
}

/// Tail norm `M_k^p = max over {P,Q} (or {P⁺,Q⁺}) of (Σ_{j=k}^{J} ‖·‖^p)^{1/p}`,
/// with the sup variant for `p = ∞`.
#[derive(Debug, Clone, Serialize)]
pub struct LpTail {
    pub p: f64,
    pub k: usize,
    pub j_hi: usize,
    pub side: TailSide,
    pub value: f64,
    /// Estimated relative remainder beyond `j_hi`; infinite when the tail
    /// is classified non-summable, NaN when no classification was possible.
    pub tail_remainder: f64,
}

fn ln_slice<'a>(trace: &'a NormTrace, kind: FundamentalKind) -> &'a [f64] {
    match kind {
        FundamentalKind::P => &trace.ln_p,
        FundamentalKind::Q => &trace.ln_q,
        FundamentalKind::PPlus => &trace.ln_p_plus,
        FundamentalKind::QPlus => &trace.ln_q_plus,
    }
}

/// `(Σ_{j=k}^{j_hi} e^{p·ln_j})^{1/p}` in log space (`lns` indexed by `j+1`).
fn lp_partial(lns: &[f64], p: f64, k: usize, j_hi: usize) -> f64 {
    let range = &lns[k + 1..=j_hi + 1];
    if p.is_infinite() {
        return range.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    }
    let m = range.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: f64 = range.iter().map(|&v| (p * (v - m)).exp()).sum();
    ((m * p + sum.ln()) / p).exp()
}

/// Suffix tail values `m[k]` for `k = 0..=j_hi` in one backward pass.
fn suffix_lp(lns: &[f64], p: f64, j_hi: usize) -> Vec<f64> {
    let mut out = vec![0.0; j_hi + 1];
    if p.is_infinite() {
        let mut acc = f64::NEG_INFINITY;
        for k in (0..=j_hi).rev() {
            acc = acc.max(lns[k + 1]);
            out[k] = acc.exp();
        }
    } else {
        // accumulate Σ e^{p·ln} relative to the global max to avoid overflow
        let m = lns[1..=j_hi + 1]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return out;
        }
        let mut acc = 0.0_f64;
        for k in (0..=j_hi).rev() {
            let v = lns[k + 1];
            if v > f64::NEG_INFINITY {
                acc += (p * (v - m)).exp();
            }
            out[k] = if acc == 0.0 {
                0.0
            } else {
                ((m * p + acc.ln()) / p).exp()
            };
        }
    }
    out
}

/// Tail norm of a fundamental-system trace over `{P,Q}` or `{P⁺,Q⁺}`.
pub fn tail_norm(
    trace: &NormTrace,
    p: f64,
    k: usize,
    j_hi: usize,
    side: TailSide,
    settings: &LpSettings,
) -> Result<LpTail, LpError> {
    check_p(p)?;
    let j_hi = j_hi.min(trace.effective_horizon);
    let (a, b) = match side {
        TailSide::Plain => (FundamentalKind::P, FundamentalKind::Q),
        TailSide::Plus => (FundamentalKind::PPlus, FundamentalKind::QPlus),
    };
    let va = lp_partial(ln_slice(trace, a), p, k, j_hi);
    let vb = lp_partial(ln_slice(trace, b), p, k, j_hi);
    let value = va.max(vb);
    // remainder estimate from the fitted growth over the trailing window
    let mut remainder = f64::NAN;
    for kind in [a, b] {
        let lns = ln_slice(trace, kind);
        if let Ok(gc) = classify_window(lns, j_hi / 2, j_hi, settings) {
            let r = remainder_estimate(&gc, p, j_hi);
            remainder = if remainder.is_nan() { r } else { remainder.max(r) };
        }
    }
    Ok(LpTail {
        p,
        k,
        j_hi,
        side,
        value,
        tail_remainder: remainder,
    })
}

fn remainder_estimate(gc: &GrowthClass, p: f64, j_hi: usize) -> f64 {
    match gc.classification {
        Classification::DecayGeometric => {
            if p.is_infinite() {
                0.0
            } else {
                let rho_p = (p * gc.exponent).exp();
                rho_p / (1.0 - rho_p)
            }
        }
        Classification::DecayPower => {
            if p.is_infinite() {
                0.0
            } else {
                let pa = p * gc.exponent;
                if pa < -1.0 {
                    // ∫_J^∞ j^{pα} dj relative to J·J^{pα}
                    1.0 / (-pa - 1.0) / j_hi as f64 * j_hi as f64 / (-pa - 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
        Classification::Bounded => {
            if p.is_infinite() {
                0.0
            } else {
                f64::INFINITY
            }
        }
        Classification::GrowthPower | Classification::GrowthGeometric => f64::INFINITY,
        Classification::Inconclusive => f64::NAN,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DecayPower,
    DecayGeometric,
    Bounded,
    GrowthPower,
    GrowthGeometric,
    Inconclusive,
}

/// Fitted growth model of a norm sequence over a window.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthClass {
    pub classification: Classification,
    /// Power exponent `α` for the power models, `ln λ` for the geometric
    /// ones, 0 for bounded.
    pub exponent: f64,
    /// Standard error of the fitted exponent.
    pub stderr: f64,
    /// RMS residual of the winning fit in log units.
    pub fit_residual: f64,
    /// Estimate of `limsup ‖Y_m‖^{1/m}` over the trailing quarter window.
    pub limsup_mth_root: f64,
    pub window: (usize, usize),
    pub samples: usize,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum();
    let rms = (ss_res / n).sqrt();
    let stderr = if n > 2.0 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, intercept, rms, stderr)
}

/// Classifies the growth of positive `norms[j]` over `window`; zeros are
/// excluded from the fit. Public entry taking plain norms.
pub fn growth_classify(
    norms: &[f64],
    window: (usize, usize),
    settings: &LpSettings,
) -> Result<GrowthClass, LpError> {
    let lns: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
        .chain(norms.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }))
        .collect();
    classify_window(&lns, window.0, window.1, settings)
}

/// Same on a `ln ‖Y_j‖` slice indexed by `j+1`.
fn classify_window(
    lns: &[f64],
    j_lo: usize,
    j_hi: usize,
    settings: &LpSettings,
) -> Result<GrowthClass, LpError> {
    let j_hi = j_hi.min(lns.len().saturating_sub(2));
    let j_lo = j_lo.max(1).min(j_hi);
    let pts: Vec<(f64, f64)> = (j_lo..=j_hi)
        .filter_map(|j| {
            let v = lns[j + 1];
            v.is_finite().then_some((j as f64, v))
        })
        .collect();
    let window = (j_lo, j_hi);
    // fully zero tail: trivially summable, report as geometric decay
    if pts.is_empty() && (j_lo..=j_hi).all(|j| lns[j + 1] == f64::NEG_INFINITY) && j_hi > j_lo {
        return Ok(GrowthClass {
            classification: Classification::DecayGeometric,
            exponent: f64::NEG_INFINITY,
            stderr: 0.0,
            fit_residual: 0.0,
            limsup_mth_root: 0.0,
            window,
            samples: 0,
        });
    }
    if pts.len() < settings.min_samples {
        return Err(LpError::WindowTooShort {
            have: pts.len(),
            need: settings.min_samples,
        });
    }
    let limsup = pts
        .iter()
        .skip(pts.len() * 3 / 4)
        .map(|(j, y)| (y / j).exp())
        .fold(0.0_f64, f64::max);

    let xs_geo: Vec<f64> = pts.iter().map(|(j, _)| *j).collect();
    let xs_pow: Vec<f64> = pts.iter().map(|(j, _)| j.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, y)| *y).collect();
    let (b_geo, _, res_geo, se_geo) = least_squares(&xs_geo, &ys);
    let (alpha, _, res_pow, se_pow) = least_squares(&xs_pow, &ys);

    // superexponential tails fit neither model well; monotone per-unit
    // slopes then settle the direction (decay at least geometric, or
    // growth at least geometric)
    if res_pow > settings.residual_threshold && res_geo > settings.residual_threshold {
        let unit_slopes: Vec<f64> = pts
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let max_slope = unit_slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_slope = unit_slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean_slope = unit_slopes.iter().sum::<f64>() / unit_slopes.len() as f64;
        let classification = if max_slope < -1e-3 {
            Classification::DecayGeometric
        } else if min_slope > 1e-3 {
            Classification::GrowthGeometric
        } else {
            Classification::Inconclusive
        };
        return Ok(GrowthClass {
            classification,
            exponent: mean_slope,
            stderr: f64::NAN,
            fit_residual: res_pow.min(res_geo),
            limsup_mth_root: limsup,
            window,
            samples: pts.len(),
        });
    }

    let (classification, exponent, stderr, fit_residual) = if res_pow <= res_geo {
        let class = if res_pow > settings.residual_threshold {
            Classification::Inconclusive
        } else if alpha < -settings.bounded_band {
            Classification::DecayPower
        } else if alpha > settings.bounded_band {
            Classification::GrowthPower
        } else {
            Classification::Bounded
        };
        (class, alpha, se_pow, res_pow)
    } else {
        let class = if res_geo > settings.residual_threshold {
            Classification::Inconclusive
        } else if b_geo < -1e-3 {
            Classification::DecayGeometric
        } else if b_geo > 1e-3 {
            Classification::GrowthGeometric
        } else {
            Classification::Bounded
        };
        (class, b_geo, se_geo, res_geo)
    };
    Ok(GrowthClass {
        classification,
        exponent,
        stderr,
        fit_residual,
        limsup_mth_root: limsup,
        window,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AllInLp,
    NotAllInLp,
    Inconclusive,
}

fn summable(gc: &GrowthClass, p: f64, settings: &LpSettings) -> Verdict {
    match gc.classification {
        Classification::DecayGeometric => Verdict::AllInLp,
        Classification::DecayPower => {
            if p.is_infinite() {
                Verdict::AllInLp
            } else if p * gc.exponent < -1.0 - settings.power_margin {
                Verdict::AllInLp
            } else {
                Verdict::NotAllInLp
            }
        }
        Classification::Bounded => {
            if p.is_infinite() {
                Verdict::AllInLp
            } else {
                Verdict::NotAllInLp
            }
        }
        Classification::GrowthPower | Classification::GrowthGeometric => {
            if p.is_infinite() {
                Verdict::NotAllInLp
            } else {
                Verdict::NotAllInLp
            }
        }
        Classification::Inconclusive => Verdict::Inconclusive,
    }
}

fn combine(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    match (a, b) {
        (NotAllInLp, _) | (_, NotAllInLp) => NotAllInLp,
        (AllInLp, AllInLp) => AllInLp,
        _ => Inconclusive,
    }
}

/// Membership verdict for one side of the solution space at `(z, p)`.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub z: [f64; 2],
    pub p: f64,
    pub side: TailSide,
    pub horizon: usize,
    pub truncated: bool,
    pub verdict: Verdict,
    pub first_family: GrowthClass,
    pub second_family: GrowthClass,
}

/// Decides whether all solutions on the given side lie in `l^p`, through
/// growth classification of the two fundamental families.
pub fn membership_verdict(
    family: &OperatorFamily,
    z: Complex64,
    p: f64,
    j_max: usize,
    side: TailSide,
    settings: &LpSettings,
) -> Result<MembershipReport, LpError> {
    check_p(p)?;
    let trace = recurrence::norm_trace(family, z, j_max, settings.norm_kind)?;
    membership_from_trace(&trace, p, side, settings)
}

/// Same from a precomputed trace.
pub fn membership_from_trace(
    trace: &NormTrace,
    p: f64,
    side: TailSide,
    settings: &LpSettings,
) -> Result<MembershipReport, LpError> {
    let h = trace.effective_horizon;
    let (a, b) = match side {
        TailSide::Plain => (FundamentalKind::P, FundamentalKind::Q),
        TailSide::Plus => (FundamentalKind::PPlus, FundamentalKind::QPlus),
    };
    let inconclusive_class = |window| GrowthClass {
        classification: Classification::Inconclusive,
        exponent: f64::NAN,
        stderr: f64::NAN,
        fit_residual: f64::NAN,
        limsup_mth_root: f64::NAN,
        window,
        samples: 0,
    };
    let classify = |kind| match classify_window(ln_slice(trace, kind), h / 2, h, settings) {
        Ok(gc) => gc,
        Err(_) => inconclusive_class((h / 2, h)),
    };
    let ga = classify(a);
    let gb = classify(b);
    let verdict = combine(summable(&ga, p, settings), summable(&gb, p, settings));
    Ok(MembershipReport {
        z: [trace.z.re, trace.z.im],
        p,
        side,
        horizon: h,
        truncated: trace.truncated,
        verdict,
        first_family: ga,
        second_family: gb,
    })
}

/// Per-z outcome of the Hellinger-type check.
#[derive(Debug, Clone, Serialize)]
pub struct HellingerPoint {
    pub z: [f64; 2],
    pub k0: Option<usize>,
    /// `|z−z₀|·M_k^{q,+}(z₀)·M_k^p(z₀)` at `k0` (or the smallest value
    /// reached when no `k0` exists below the horizon).
    pub threshold_product: f64,
    pub m_p_at_k0: f64,
    pub m_q_plus_at_k0: f64,
    /// `max{‖C_k^1‖, ‖C_k^2‖}` and `N_{k0,J}^p` for each of `P(z)`, `Q(z)`.
    pub c_k: [f64; 2],
    pub n_kj: [f64; 2],
    pub bound_ok: bool,
    pub verdict: Verdict,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HellingerReport {
    pub z0: [f64; 2],
    pub p: f64,
    pub q: f64,
    pub horizon: usize,
    /// Right-side verdict at `z₀` with exponent `p`.
    pub precondition_right: Verdict,
    /// Left-side verdict at `z₀` with exponent `q` (possibly supplied by
    /// the symmetric shortcut).
    pub precondition_left: Verdict,
    pub symmetric_shortcut: bool,
    /// True when the preconditions fail: the theorem's hypothesis does not
    /// hold and the per-z list is empty.
    pub vacuous: bool,
    pub points: Vec<HellingerPoint>,
    pub settings: LpSettings,
}

/// Verifies the invariance statement: when all right solutions at `z₀` are
/// in `l^p` and all left solutions in `l^q`, every `z` admits an index `k₀`
/// with `|z−z₀|·M_{k₀}^{q,+}(z₀)·M_{k₀}^p(z₀) ≤ 1/4`, the truncated tail
/// `N_{k₀,J}^p` of each fundamental solution at `z` obeys
/// `N ≤ 4·C_{k₀}·M_{k₀}^p(z₀)` (with truncation slack), and the membership
/// verdict propagates.
pub fn hellinger_check(
    family: &OperatorFamily,
    z0: Complex64,
    p: f64,
    z_list: &[Complex64],
    j_max: usize,
    settings: &LpSettings,
) -> Result<HellingerReport, LpError> {
    check_p(p)?;
    let q = conjugate_exponent(p);
    let trace0 = recurrence::norm_trace(family, z0, j_max, settings.norm_kind)?;
    let right0 = membership_from_trace(&trace0, p, TailSide::Plain, settings)?;

    // symmetric shortcut: for a block Jacobi family at real z₀ with p ≤ 2,
    // P⁺ = P*, Q⁺ = Q* supply the l^q side through the l^p ⊂ l^q embedding
    let mut symmetric_shortcut = false;
    let left0 = if z0.im == 0.0
        && p <= 2.0
        && right0.verdict == Verdict::AllInLp
        && family
            .check_symmetry(32.min(j_max))
            .map(|r| r.is_symmetric)
            .unwrap_or(false)
    {
        symmetric_shortcut = true;
        Verdict::AllInLp
    } else {
        membership_from_trace(&trace0, q, TailSide::Plus, settings)?.verdict
    };

    if right0.verdict != Verdict::AllInLp || left0 != Verdict::AllInLp {
        return Ok(HellingerReport {
            z0: [z0.re, z0.im],
            p,
            q,
            horizon: j_max,
            precondition_right: right0.verdict,
            precondition_left: left0,
            symmetric_shortcut,
            vacuous: true,
            points: Vec::new(),
            settings: settings.clone(),
        });
    }

    let h0 = trace0.effective_horizon;
    let m_p: Vec<f64> = {
        let a = suffix_lp(&trace0.ln_p, p, h0);
        let b = suffix_lp(&trace0.ln_q, p, h0);
        a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect()
    };
    let m_q_plus: Vec<f64> = {
        let a = suffix_lp(&trace0.ln_p_plus, q, h0);
        let b = suffix_lp(&trace0.ln_q_plus, q, h0);
        a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect()
    };

    let fs0 = recurrence::fundamental_system(family, z0, h0.min(j_max))?;
    let points: Vec<HellingerPoint> = z_list
        .par_iter()
        .map(|&z| hellinger_point(family, &fs0, z, p, &m_p, &m_q_plus, j_max, settings))
        .collect();

    Ok(HellingerReport {
        z0: [z0.re, z0.im],
        p,
        q,
        horizon: j_max,
        precondition_right: right0.verdict,
        precondition_left: left0,
        symmetric_shortcut,
        vacuous: false,
        points,
        settings: settings.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn hellinger_point(
    family: &OperatorFamily,
    fs0: &recurrence::FundamentalSystem,
    z: Complex64,
    p: f64,
    m_p: &[f64],
    m_q_plus: &[f64],
    j_max: usize,
    settings: &LpSettings,
) -> HellingerPoint {
    let fail = |msg: String| HellingerPoint {
        z: [z.re, z.im],
        k0: None,
        threshold_product: f64::NAN,
        m_p_at_k0: f64::NAN,
        m_q_plus_at_k0: f64::NAN,
        c_k: [f64::NAN, f64::NAN],
        n_kj: [f64::NAN, f64::NAN],
        bound_ok: false,
        verdict: Verdict::Inconclusive,
        error: Some(msg),
    };
    let dist = (z - fs0.z).norm();
    let k_hi = m_p.len().saturating_sub(2);
    let mut k0 = None;
    let mut best_product = f64::INFINITY;
    for k in 0..=k_hi {
        let product = dist * m_q_plus[k] * m_p[k];
        best_product = best_product.min(product);
        if product <= 0.25 {
            k0 = Some(k);
            break;
        }
    }
    let Some(k0) = k0 else {
        return fail(format!(
            "threshold not reached: smallest product {best_product:.3e} > 1/4"
        ));
    };

    let trace_z = match recurrence::norm_trace(family, z, j_max, settings.norm_kind) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let verdict = match membership_from_trace(&trace_z, p, TailSide::Plain, settings) {
        Ok(r) => r.verdict,
        Err(e) => return fail(e.to_string()),
    };

    // anchors need the raw fundamental system at z only up to k0+1
    let fs_z = match recurrence::fundamental_system(family, z, (k0 + 1).max(1)) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string()),
    };
    if fs_z.horizon < k0 {
        return fail("fundamental system at z truncated before the anchor".into());
    }
    let nrm = |m: &MatrixC| linalg::operator_norm(m).unwrap_or(f64::INFINITY);
    let mut c_k = [0.0_f64; 2];
    let mut n_kj = [0.0_f64; 2];
    let h_z = trace_z.effective_horizon;
    for (slot, kind) in [(0, FundamentalKind::P), (1, FundamentalKind::Q)] {
        let y = |j: i64| -> MatrixC {
            match kind {
                FundamentalKind::P => fs_z.p(j).clone(),
                _ => fs_z.q(j).clone(),
            }
        };
        let anchors = match voc::anchor_constants(family, fs0, &y, k0, Side::Right) {
            Ok(a) => a,
            Err(e) => return fail(e.to_string()),
        };
        c_k[slot] = nrm(&anchors.0).max(nrm(&anchors.1));
        // N_{k,J}^p sums i = k..J-1
        n_kj[slot] = lp_partial(ln_slice(&trace_z, kind), p, k0, h_z.saturating_sub(1));
    }
    let m_p_k0 = m_p[k0];
    let bound_ok = (0..2).all(|i| n_kj[i] <= 4.0 * c_k[i] * m_p_k0 * (1.0 + settings.bound_slack));
    HellingerPoint {
        z: [z.re, z.im],
        k0: Some(k0),
        threshold_product: dist * m_q_plus[k0] * m_p_k0,
        m_p_at_k0: m_p_k0,
        m_q_plus_at_k0: m_q_plus[k0],
        c_k,
        n_kj,
        bound_ok,
        verdict,
        error: None,
    }
}

/// Outcome of the bounded-perturbation invariance check.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub p: f64,
    pub q: f64,
    pub horizon: usize,
    pub sup_f: f64,
    pub sup_g: f64,
    /// True when the perturbation sequence is classified as unbounded and
    /// no verdict is claimed.
    pub precondition_violated: bool,
    pub base_right: Verdict,
    pub base_left: Verdict,
    pub perturbed_right: Option<Verdict>,
    pub perturbed_left: Option<Verdict>,
}

/// Checks that a bounded perturbation `l(u) = F_j u_j` (and `l⁺(v) = v*G_j`)
/// preserves the homogeneous (`z = 0`) membership verdicts. Perturbations
/// classified as growing violate the hypothesis and yield no verdict.
pub fn perturbation_check(
    family: &OperatorFamily,
    f_seq: &[MatrixC],
    g_seq: &[MatrixC],
    p: f64,
    j_max: usize,
    settings: &LpSettings,
) -> Result<PerturbationReport, LpError> {
    check_p(p)?;
    let q = conjugate_exponent(p);
    let z0 = Complex64::new(0.0, 0.0);
    let norms = |seq: &[MatrixC]| -> Vec<f64> {
        seq.iter()
            .map(|m| linalg::operator_norm(m).unwrap_or(f64::INFINITY))
            .collect()
    };
    let f_norms = norms(f_seq);
    let g_norms = norms(g_seq);
    let sup_f = f_norms.iter().cloned().fold(0.0, f64::max);
    let sup_g = g_norms.iter().cloned().fold(0.0, f64::max);
    let grows = |ns: &[f64]| -> bool {
        if ns.len() < 2 * settings.min_samples {
            return false;
        }
        match growth_classify(ns, (ns.len() / 2, ns.len() - 1), settings) {
            Ok(gc) => matches!(
                gc.classification,
                Classification::GrowthPower | Classification::GrowthGeometric
            ),
            Err(_) => false,
        }
    };
    let base_right = membership_verdict(family, z0, p, j_max, TailSide::Plain, settings)?.verdict;
    let base_left = membership_verdict(family, z0, q, j_max, TailSide::Plus, settings)?.verdict;
    if grows(&f_norms) || grows(&g_norms) || !sup_f.is_finite() || !sup_g.is_finite() {
        return Ok(PerturbationReport {
            p,
            q,
            horizon: j_max,
            sup_f,
            sup_g,
            precondition_violated: true,
            base_right,
            base_left,
            perturbed_right: None,
            perturbed_left: None,
        });
    }
    let perturbed_f = family.shifted_diagonal(f_seq, j_max)?;
    let perturbed_g = family.shifted_diagonal(g_seq, j_max)?;
    let h_f = perturbed_f.horizon().unwrap_or(j_max).saturating_sub(1);
    let h_g = perturbed_g.horizon().unwrap_or(j_max).saturating_sub(1);
    let right =
        membership_verdict(&perturbed_f, z0, p, h_f.max(1), TailSide::Plain, settings)?.verdict;
    let left =
        membership_verdict(&perturbed_g, z0, q, h_g.max(1), TailSide::Plus, settings)?.verdict;
    Ok(PerturbationReport {
        p,
        q,
        horizon: j_max,
        sup_f,
        sup_g,
        precondition_violated: false,
        base_right,
        base_left,
        perturbed_right: Some(right),
        perturbed_left: Some(left),
    })
}

/// Default 64-point verification grid: 16 points on each circle
/// `|z−z₀| ∈ {0.5, 1, 2, 5}`.
pub fn default_z_grid(z0: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(64);
    for radius in [0.5, 1.0, 2.0, 5.0] {
        for i in 0..16 {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / 16.0;
            out.push(z0 + Complex64::new(radius * theta.cos(), radius * theta.sin()));
        }
    }
    out
}
