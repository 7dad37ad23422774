//! Forward three-term recursion for the fundamental systems `P`, `Q` (right
//! equation) and `P⁺`, `Q⁺` (left equation), homogeneous vector solutions,
//! residual evaluation and the Wronskian-type identity checker.
//!
//! Two recursion engines exist: a raw one storing the solution matrices
//! themselves (truncating when norms pass [`OVERFLOW_CAP`]) and a
//! log-rescaled one that only tracks `ln ‖Y_j‖`, which reaches horizons far
//! past double-precision overflow or underflow.

use num_complex::Complex64;
use serde::Serialize;

use crate::linalg::{self, LinalgError, MatrixC, NormKind, VectorC};
use crate::operator_model::{FamilyError, OperatorFamily};

/// Default relative residual tolerance for recurrence checks.
pub const TOL_REC: f64 = 1e-9;
/// Raw recursion stops once a stored norm exceeds this.
pub const OVERFLOW_CAP: f64 = 1e300;
/// Conditioning cap for coefficient inversion inside the recursion; only an
/// effectively singular block stops the march.
const STEP_COND_CAP: f64 = 1e306;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecurrenceError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Linalg(LinalgError),
    #[error("horizon must be at least 1, got {0}")]
    BadHorizon(usize),
    #[error("index {0} outside the computed range")]
    IndexOutOfRange(i64),
    #[error("initial vector dimension mismatch")]
    DimensionMismatch,
}

/// Which of the two recurrences a sequence solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `A_{j,j-1}u_{j-1} + A_{j,j}u_j + A_{j,j+1}u_{j+1} = z u_j`
    Right,
    /// `v*_{j-1}A_{j-1,j} + v*_j A_{j,j} + v*_{j+1}A_{j+1,j} = z v*_j`
    Left,
}

/// Per-step coefficient matrices so that the step never multiplies two huge
/// factors: right `Y_{j+1} = z·(S⁻¹Y_j) − (S⁻¹D)Y_j − (S⁻¹A_{j,j-1})Y_{j-1}`
/// with `S = A_{j,j+1}`, and the mirrored left version.
struct StepCoeffs {
    inv_sup: MatrixC,
    b_right: MatrixC,
    c_right: MatrixC,
    inv_sub: MatrixC,
    b_left: MatrixC,
    c_left: MatrixC,
    cond: f64,
}

fn step_coeffs(family: &OperatorFamily, j: usize) -> Result<Option<StepCoeffs>, RecurrenceError> {
    let j = j as i64;
    let sup = family.block_at(j, j + 1)?;
    let sub = family.block_at(j + 1, j)?;
    let diag = family.block_at(j, j)?;
    let sub_prev = family.block_at(j, j - 1)?;
    let sup_prev = family.block_at(j - 1, j)?;
    if !linalg::is_finite(&sup) || !linalg::is_finite(&sub) || !linalg::is_finite(&diag) {
        return Ok(None);
    }
    // the recursion only stops on singular or non-finite blocks; a large but
    // finite condition number is recorded for diagnostics, not fatal
    let (inv_sup, cond_sup) = match linalg::invert(&sup, STEP_COND_CAP) {
        Ok(v) => v,
        Err(LinalgError::IllConditioned { .. }) | Err(LinalgError::Singular) => return Ok(None),
        Err(e) => return Err(RecurrenceError::Linalg(e)),
    };
    let (inv_sub, cond_sub) = match linalg::invert(&sub, STEP_COND_CAP) {
        Ok(v) => v,
        Err(LinalgError::IllConditioned { .. }) | Err(LinalgError::Singular) => return Ok(None),
        Err(e) => return Err(RecurrenceError::Linalg(e)),
    };
    Ok(Some(StepCoeffs {
        b_right: &inv_sup * &diag,
        c_right: &inv_sup * &sub_prev,
        b_left: &diag * &inv_sub,
        c_left: &sup_prev * &inv_sub,
        inv_sup,
        inv_sub,
        cond: cond_sup.max(cond_sub),
    }))
}

impl StepCoeffs {
    fn right(&self, z: Complex64, prev: &MatrixC, cur: &MatrixC) -> MatrixC {
        (&self.inv_sup * cur) * z - &self.b_right * cur - &self.c_right * prev
    }

    fn left(&self, z: Complex64, prev: &MatrixC, cur: &MatrixC) -> MatrixC {
        (cur * &self.inv_sub) * z - cur * &self.b_left - prev * &self.c_left
    }
}

/// The four fundamental matrix solutions at a fixed `z`, indexed
/// `j = −1..=horizon`.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    pub z: Complex64,
    /// Largest `j` actually stored; equals the requested horizon unless the
    /// recursion was truncated.
    pub horizon: usize,
    /// `Some(j)` when overflow or an ill-conditioned block stopped the
    /// recursion at step `j`.
    pub truncated_at: Option<usize>,
    /// Worst off-diagonal condition estimate along the run.
    pub worst_cond: f64,
    p: Vec<MatrixC>,
    q: Vec<MatrixC>,
    p_plus: Vec<MatrixC>,
    q_plus: Vec<MatrixC>,
}

macro_rules! fs_getter {
    ($name:ident, $field:ident) => {
        pub fn $name(&self, j: i64) -> &MatrixC {
            let idx = (j + 1) as usize;
            &self.$field[idx]
        }
    };
}

impl FundamentalSystem {
    fs_getter!(p, p);
    fs_getter!(q, q);
    fs_getter!(p_plus, p_plus);
    fs_getter!(q_plus, q_plus);

    pub fn dim(&self) -> usize {
        self.p[0].nrows()
    }
}

/// Runs the forward recursions for all four fundamental solutions up to
/// horizon `j_max`. Overflow or an ill-conditioned block truncates the
/// result (flagged in `truncated_at`) rather than failing.
pub fn fundamental_system(
    family: &OperatorFamily,
    z: Complex64,
    j_max: usize,
) -> Result<FundamentalSystem, RecurrenceError> {
    if j_max < 1 {
        return Err(RecurrenceError::BadHorizon(j_max));
    }
    let n = family.dim();
    let e = linalg::identity(n);
    let o = linalg::zero(n);
    // initial conditions: P_{-1}=P⁺_{-1}=Q_0=Q⁺_0=E, P_0=P⁺_0=Q_{-1}=Q⁺_{-1}=O
    let mut p = vec![e.clone(), o.clone()];
    let mut q = vec![o.clone(), e.clone()];
    let mut p_plus = vec![e.clone(), o.clone()];
    let mut q_plus = vec![o.clone(), e.clone()];
    let mut truncated_at = None;
    let mut worst_cond: f64 = 1.0;

    for j in 0..j_max {
        let coeffs = match step_coeffs(family, j)? {
            Some(c) => c,
            None => {
                truncated_at = Some(j);
                break;
            }
        };
        worst_cond = worst_cond.max(coeffs.cond);
        let next: Vec<MatrixC> = vec![
            coeffs.right(z, &p[j], &p[j + 1]),
            coeffs.right(z, &q[j], &q[j + 1]),
            coeffs.left(z, &p_plus[j], &p_plus[j + 1]),
            coeffs.left(z, &q_plus[j], &q_plus[j + 1]),
        ];
        let overflow = next.iter().any(|m| {
            !linalg::is_finite(m) || m.iter().any(|e| e.norm_sqr() > OVERFLOW_CAP * OVERFLOW_CAP)
        });
        if overflow {
            truncated_at = Some(j);
            break;
        }
        let mut it = next.into_iter();
        p.push(it.next().unwrap());
        q.push(it.next().unwrap());
        p_plus.push(it.next().unwrap());
        q_plus.push(it.next().unwrap());
    }
    let horizon = p.len() - 2;
    Ok(FundamentalSystem {
        z,
        horizon,
        truncated_at,
        worst_cond,
        p,
        q,
        p_plus,
        q_plus,
    })
}

/// Log-rescaled norm traces of the four fundamental solutions:
/// `ln ‖Y_j‖` for `j = −1..=effective_horizon` (`−∞` marks an exactly zero
/// matrix). Reaches horizons where the raw matrices would over/underflow.
#[derive(Debug, Clone)]
pub struct NormTrace {
    pub z: Complex64,
    pub effective_horizon: usize,
    pub truncated: bool,
    pub ln_p: Vec<f64>,
    pub ln_q: Vec<f64>,
    pub ln_p_plus: Vec<f64>,
    pub ln_q_plus: Vec<f64>,
}

impl NormTrace {
    pub fn ln_norm(&self, which: FundamentalKind, j: i64) -> f64 {
        let idx = (j + 1) as usize;
        match which {
            FundamentalKind::P => self.ln_p[idx],
            FundamentalKind::Q => self.ln_q[idx],
            FundamentalKind::PPlus => self.ln_p_plus[idx],
            FundamentalKind::QPlus => self.ln_q_plus[idx],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FundamentalKind {
    P,
    Q,
    PPlus,
    QPlus,
}

fn scaled_run(
    family: &OperatorFamily,
    z: Complex64,
    j_max: usize,
    init_prev: MatrixC,
    init_cur: MatrixC,
    left: bool,
    norm_kind: NormKind,
) -> Result<(Vec<f64>, bool), RecurrenceError> {
    let nrm = |m: &MatrixC| linalg::norm(m, norm_kind).unwrap_or(f64::INFINITY);
    let ln_of = |v: f64, scale: f64| if v == 0.0 { f64::NEG_INFINITY } else { scale + v.ln() };
    let mut prev = init_prev;
    let mut cur = init_cur;
    let mut log_scale = 0.0_f64;
    let mut out = vec![ln_of(nrm(&prev), 0.0), ln_of(nrm(&cur), 0.0)];
    let mut truncated = false;
    for j in 0..j_max {
        let coeffs = match step_coeffs(family, j)? {
            Some(c) => c,
            None => {
                truncated = true;
                break;
            }
        };
        let next = if left {
            coeffs.left(z, &prev, &cur)
        } else {
            coeffs.right(z, &prev, &cur)
        };
        if !linalg::is_finite(&next) {
            truncated = true;
            break;
        }
        out.push(ln_of(nrm(&next), log_scale));
        prev = cur;
        cur = next;
        let m = nrm(&prev).max(nrm(&cur));
        if m > 1e50 || (m < 1e-50 && m > 0.0) {
            let inv = Complex64::new(1.0 / m, 0.0);
            prev *= inv;
            cur *= inv;
            log_scale += m.ln();
        }
    }
    Ok((out, truncated))
}

/// Norm traces of all four fundamental solutions via the rescaled engine.
pub fn norm_trace(
    family: &OperatorFamily,
    z: Complex64,
    j_max: usize,
    norm_kind: NormKind,
) -> Result<NormTrace, RecurrenceError> {
    if j_max < 1 {
        return Err(RecurrenceError::BadHorizon(j_max));
    }
    let n = family.dim();
    let e = linalg::identity(n);
    let o = linalg::zero(n);
    let (ln_p, t1) = scaled_run(family, z, j_max, e.clone(), o.clone(), false, norm_kind)?;
    let (ln_q, t2) = scaled_run(family, z, j_max, o.clone(), e.clone(), false, norm_kind)?;
    let (ln_p_plus, t3) = scaled_run(family, z, j_max, e.clone(), o.clone(), true, norm_kind)?;
    let (ln_q_plus, t4) = scaled_run(family, z, j_max, o, e, true, norm_kind)?;
    let effective_horizon = ln_p
        .len()
        .min(ln_q.len())
        .min(ln_p_plus.len())
        .min(ln_q_plus.len())
        - 2;
    Ok(NormTrace {
        z,
        effective_horizon,
        truncated: t1 || t2 || t3 || t4,
        ln_p: ln_p[..effective_horizon + 2].to_vec(),
        ln_q: ln_q[..effective_horizon + 2].to_vec(),
        ln_p_plus: ln_p_plus[..effective_horizon + 2].to_vec(),
        ln_q_plus: ln_q_plus[..effective_horizon + 2].to_vec(),
    })
}

/// A vector solution sequence indexed `j = −1..=horizon` with residual
/// metadata.
#[derive(Debug, Clone)]
pub struct SolutionSeq {
    pub z: Complex64,
    pub side: Side,
    pub horizon: usize,
    pub truncated_at: Option<usize>,
    /// Max scaled residual of the defining equation over `0..horizon-1`.
    pub max_residual: f64,
    /// Max scaled defect of the superposition check against the fundamental
    /// system (`NaN` when the check was skipped).
    pub superposition_defect: f64,
    values: Vec<VectorC>,
}

impl SolutionSeq {
    pub fn value(&self, j: i64) -> &VectorC {
        &self.values[(j + 1) as usize]
    }

    pub fn values(&self) -> &[VectorC] {
        &self.values
    }
}

/// Forward solve of the homogeneous equation from `(u_{−1}, u_0)`.
/// The result is verified against the fundamental system by superposition:
/// right side `u_j = Q_j u_0 + P_j u_{−1}`, left side the mirrored row form.
pub fn solve_homogeneous(
    family: &OperatorFamily,
    z: Complex64,
    side: Side,
    init_m1: &VectorC,
    init_0: &VectorC,
    j_max: usize,
) -> Result<SolutionSeq, RecurrenceError> {
    let n = family.dim();
    if init_m1.len() != n || init_0.len() != n {
        return Err(RecurrenceError::DimensionMismatch);
    }
    if j_max < 1 {
        return Err(RecurrenceError::BadHorizon(j_max));
    }
    let mut values = vec![init_m1.clone(), init_0.clone()];
    let mut truncated_at = None;
    for j in 0..j_max {
        let coeffs = match step_coeffs(family, j)? {
            Some(c) => c,
            None => {
                truncated_at = Some(j);
                break;
            }
        };
        let prev = &values[j];
        let cur = &values[j + 1];
        let next: VectorC = match side {
            Side::Right => (&coeffs.inv_sup * cur) * z - &coeffs.b_right * cur - &coeffs.c_right * prev,
            // adjoint of the row-vector step: v_{j+1} = S^{-*}(z̄ v_j − D* v_j − A*_{j-1,j} v_{j-1})
            Side::Left => {
                (coeffs.inv_sub.adjoint() * cur) * z.conj()
                    - coeffs.b_left.adjoint() * cur
                    - coeffs.c_left.adjoint() * prev
            }
        };
        if !linalg::vec_is_finite(&next) || next.norm() > OVERFLOW_CAP {
            truncated_at = Some(j);
            break;
        }
        values.push(next);
    }
    let horizon = values.len() - 2;

    let mut seq = SolutionSeq {
        z,
        side,
        horizon,
        truncated_at,
        max_residual: 0.0,
        superposition_defect: f64::NAN,
        values,
    };
    let mut max_res = 0.0_f64;
    for j in 0..horizon.saturating_sub(0) {
        if j + 1 > horizon {
            break;
        }
        if let Ok(r) = apply_l(family, &seq, j as i64) {
            max_res = max_res.max(r);
        }
    }
    seq.max_residual = max_res;

    // superposition check against the fundamental system
    if horizon >= 1 {
        let fs = fundamental_system(family, z, horizon)?;
        let mut defect = 0.0_f64;
        for j in -1..=(fs.horizon as i64) {
            let u = seq.value(j);
            let predicted: VectorC = match side {
                Side::Right => fs.q(j) * seq.value(0) + fs.p(j) * seq.value(-1),
                // row form v*_j = v*_0 Q⁺_j + v*_{-1} P⁺_j, stored as columns
                Side::Left => {
                    fs.q_plus(j).adjoint() * seq.value(0) + fs.p_plus(j).adjoint() * seq.value(-1)
                }
            };
            let scale = 1.0 + u.norm();
            defect = defect.max((u - predicted).norm() / scale);
        }
        seq.superposition_defect = defect;
    }
    Ok(seq)
}

/// Scaled residual of the defining equation at index `j`:
/// `‖l(u)_j − z u_j‖ / (1 + local scale)`.
pub fn apply_l(family: &OperatorFamily, seq: &SolutionSeq, j: i64) -> Result<f64, RecurrenceError> {
    if j < 0 || j + 1 > seq.horizon as i64 {
        return Err(RecurrenceError::IndexOutOfRange(j));
    }
    let r = residual_vector(family, seq, j)?;
    let sub = family.block_at(j, j - 1)?;
    let diag = family.block_at(j, j)?;
    let sup = family.block_at(j, j + 1)?;
    let local = linalg::operator_norm(&sub).unwrap_or(f64::INFINITY) * seq.value(j - 1).norm()
        + (linalg::operator_norm(&diag).unwrap_or(f64::INFINITY) + seq.z.norm())
            * seq.value(j).norm()
        + linalg::operator_norm(&sup).unwrap_or(f64::INFINITY) * seq.value(j + 1).norm();
    Ok(r.norm() / (1.0 + local))
}

/// Raw residual vector `l(u)_j − z u_j` (right) or the adjoint of the left
/// row residual.
pub fn residual_vector(
    family: &OperatorFamily,
    seq: &SolutionSeq,
    j: i64,
) -> Result<VectorC, RecurrenceError> {
    if j < 0 || j + 1 > seq.horizon as i64 {
        return Err(RecurrenceError::IndexOutOfRange(j));
    }
    let sub = family.block_at(j, j - 1)?;
    let diag = family.block_at(j, j)?;
    let sup = family.block_at(j, j + 1)?;
    let (um1, u0, up1) = (seq.value(j - 1), seq.value(j), seq.value(j + 1));
    Ok(match seq.side {
        Side::Right => &sub * um1 + &diag * u0 + &sup * up1 - u0 * seq.z,
        Side::Left => {
            let sup_l = family.block_at(j - 1, j)?;
            let sub_l = family.block_at(j + 1, j)?;
            // adjoint of v*_{j-1}A_{j-1,j} + v*_j A_{j,j} + v*_{j+1}A_{j+1,j} − z v*_j
            sup_l.adjoint() * um1 + diag.adjoint() * u0 + sub_l.adjoint() * up1
                - u0 * seq.z.conj()
        }
    })
}

/// Max scaled defects of the seven Wronskian-type identities over a range of
/// indices.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub j_lo: usize,
    pub j_hi: usize,
    pub max_defect: f64,
    pub worst_identity: &'static str,
    pub worst_j: usize,
    pub per_identity: Vec<(&'static str, f64)>,
}

/// Evaluates the identities linking `P, Q, P⁺, Q⁺` and the off-diagonal
/// blocks at each `j` in `j_lo..=j_hi`. Defects are scaled by the factor
/// norms, since `‖P_j‖` can grow exponentially.
pub fn check_identities(
    fs: &FundamentalSystem,
    family: &OperatorFamily,
    j_lo: usize,
    j_hi: usize,
) -> Result<IdentityReport, RecurrenceError> {
    let j_hi = j_hi.min(fs.horizon.saturating_sub(1));
    let nrm = |m: &MatrixC| linalg::operator_norm(m).unwrap_or(f64::INFINITY);
    let mut per: Vec<(&'static str, f64)> = vec![
        ("P_j Q⁺_j − Q_j P⁺_j = O", 0.0),
        ("P_{j+1} Q⁺_j − Q_{j+1} P⁺_j = A_{j,j+1}⁻¹", 0.0),
        ("Q_j P⁺_{j+1} − P_j Q⁺_{j+1} = A_{j+1,j}⁻¹", 0.0),
        ("Q⁺_{j+1} A_{j+1,j} Q_j − Q⁺_j A_{j,j+1} Q_{j+1} = O", 0.0),
        ("P⁺_{j+1} A_{j+1,j} P_j − P⁺_j A_{j,j+1} P_{j+1} = O", 0.0),
        ("P⁺_{j+1} A_{j+1,j} Q_j − P⁺_j A_{j,j+1} Q_{j+1} = E", 0.0),
        ("Q⁺_j A_{j,j+1} P_{j+1} − Q⁺_{j+1} A_{j+1,j} P_j = E", 0.0),
    ];
    let mut worst = (0usize, 0usize, 0.0f64);
    for j in j_lo..=j_hi {
        let ji = j as i64;
        let sup = family.block_at(ji, ji + 1)?;
        let sub = family.block_at(ji + 1, ji)?;
        let (inv_sup, _) = linalg::invert(&sup, STEP_COND_CAP).map_err(RecurrenceError::Linalg)?;
        let (inv_sub, _) = linalg::invert(&sub, STEP_COND_CAP).map_err(RecurrenceError::Linalg)?;
        let e = linalg::identity(fs.dim());
        let (p0, p1) = (fs.p(ji), fs.p(ji + 1));
        let (q0, q1) = (fs.q(ji), fs.q(ji + 1));
        let (pp0, pp1) = (fs.p_plus(ji), fs.p_plus(ji + 1));
        let (qp0, qp1) = (fs.q_plus(ji), fs.q_plus(ji + 1));
        let checks: Vec<(MatrixC, f64)> = vec![
            (p0 * qp0 - q0 * pp0, nrm(p0) * nrm(qp0) + nrm(q0) * nrm(pp0)),
            (
                p1 * qp0 - q1 * pp0 - &inv_sup,
                nrm(p1) * nrm(qp0) + nrm(q1) * nrm(pp0) + nrm(&inv_sup),
            ),
            (
                q0 * pp1 - p0 * qp1 - &inv_sub,
                nrm(q0) * nrm(pp1) + nrm(p0) * nrm(qp1) + nrm(&inv_sub),
            ),
            (
                qp1 * &sub * q0 - qp0 * &sup * q1,
                nrm(qp1) * nrm(&sub) * nrm(q0) + nrm(qp0) * nrm(&sup) * nrm(q1),
            ),
            (
                pp1 * &sub * p0 - pp0 * &sup * p1,
                nrm(pp1) * nrm(&sub) * nrm(p0) + nrm(pp0) * nrm(&sup) * nrm(p1),
            ),
            (
                pp1 * &sub * q0 - pp0 * &sup * q1 - &e,
                nrm(pp1) * nrm(&sub) * nrm(q0) + nrm(pp0) * nrm(&sup) * nrm(q1) + 1.0,
            ),
            (
                qp0 * &sup * p1 - qp1 * &sub * p0 - &e,
                nrm(qp0) * nrm(&sup) * nrm(p1) + nrm(qp1) * nrm(&sub) * nrm(p0) + 1.0,
            ),
        ];
        for (idx, (defect_m, scale)) in checks.iter().enumerate() {
            let d = nrm(defect_m) / (1.0 + scale);
            if d > per[idx].1 {
                per[idx].1 = d;
            }
            if d > worst.2 {
                worst = (idx, j, d);
            }
        }
    }
    Ok(IdentityReport {
        j_lo,
        j_hi,
        max_defect: worst.2,
        worst_identity: per[worst.0].0,
        worst_j: worst.1,
        per_identity: per,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_model::OperatorFamily;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_scalar_eq(m: &MatrixC, v: f64) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let want = if i == j { v } else { 0.0 };
                assert!(
                    (m[(i, j)] - c(want, 0.0)).norm() < 1e-12,
                    "entry ({i},{j}) = {}, want {want}",
                    m[(i, j)]
                );
            }
        }
    }

    #[test]
    fn initial_conditions_exact() {
        let fam = OperatorFamily::hellinger_counterexample(2);
        let fs = fundamental_system(&fam, c(0.3, -0.7), 3).unwrap();
        assert_scalar_eq(fs.p(-1), 1.0);
        assert_scalar_eq(fs.p_plus(-1), 1.0);
        assert_scalar_eq(fs.q(0), 1.0);
        assert_scalar_eq(fs.q_plus(0), 1.0);
        assert_scalar_eq(fs.p(0), 0.0);
        assert_scalar_eq(fs.p_plus(0), 0.0);
        assert_scalar_eq(fs.q(-1), 0.0);
        assert_scalar_eq(fs.q_plus(-1), 0.0);
    }

    #[test]
    fn counterexample_at_zero_matches_hand_iteration() {
        // (j+1)Y_{j+1} = -j·Y_{j-1} at z=0 gives the odd/even cascades
        let fam = OperatorFamily::hellinger_counterexample(2);
        let fs = fundamental_system(&fam, c(0.0, 0.0), 4).unwrap();
        assert_scalar_eq(fs.p(1), 1.0);
        assert_scalar_eq(fs.p(2), 0.0);
        assert_scalar_eq(fs.p(3), -2.0 / 3.0);
        assert_scalar_eq(fs.q(1), 0.0);
        assert_scalar_eq(fs.q(2), -0.5);
        assert_scalar_eq(fs.q(3), 0.0);
        assert_scalar_eq(fs.q(4), 3.0 / 8.0);
    }

    #[test]
    fn free_jacobi_q_at_two_is_j_plus_one() {
        let fam = OperatorFamily::free_jacobi(1);
        let fs = fundamental_system(&fam, c(2.0, 0.0), 3).unwrap();
        for j in 0..=3i64 {
            assert_scalar_eq(fs.q(j), (j + 1) as f64);
        }
    }

    #[test]
    fn homogeneous_oscillation_and_decay() {
        let fam = OperatorFamily::free_jacobi(1);
        let init_m1 = VectorC::from_vec(vec![c(0.0, 0.0)]);
        let init_0 = VectorC::from_vec(vec![c(1.0, 0.0)]);
        let seq =
            solve_homogeneous(&fam, c(0.0, 0.0), Side::Right, &init_m1, &init_0, 8).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0];
        for (j, want) in (-1i64..).zip(expect) {
            assert!((seq.value(j)[0] - c(want, 0.0)).norm() < 1e-14, "j={j}");
        }
        assert!(seq.max_residual < TOL_REC);
        assert!(seq.superposition_defect < 1e-9);

        let fam = OperatorFamily::geometric(2.0);
        let seq =
            solve_homogeneous(&fam, c(0.0, 0.0), Side::Right, &init_m1, &init_0, 40).unwrap();
        for j in 0..=40i64 {
            let bound = 2f64.powi(-((j / 2) as i32));
            assert!(seq.value(j).norm() <= bound + 1e-14, "j={j}");
        }
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let fam = OperatorFamily::hellinger_counterexample(2);
        let zero = VectorC::zeros(2);
        let seq = solve_homogeneous(&fam, c(1.0, 2.0), Side::Right, &zero, &zero, 10).unwrap();
        for j in -1..=10i64 {
            assert_eq!(seq.value(j).norm(), 0.0);
        }
    }

    #[test]
    fn left_solve_satisfies_row_equation() {
        let fam = OperatorFamily::hellinger_counterexample(2);
        let init_m1 = VectorC::from_vec(vec![c(1.0, 0.5), c(0.0, -1.0)]);
        let init_0 = VectorC::from_vec(vec![c(0.3, 0.0), c(1.0, 1.0)]);
        let seq =
            solve_homogeneous(&fam, c(0.7, 0.2), Side::Left, &init_m1, &init_0, 20).unwrap();
        assert!(seq.max_residual < TOL_REC, "residual {}", seq.max_residual);
        assert!(
            seq.superposition_defect < 1e-9,
            "superposition {}",
            seq.superposition_defect
        );
    }

    #[test]
    fn perturbed_entry_localizes_residual() {
        let fam = OperatorFamily::free_jacobi(1);
        let init_m1 = VectorC::from_vec(vec![c(0.0, 0.0)]);
        let init_0 = VectorC::from_vec(vec![c(1.0, 0.0)]);
        let mut seq =
            solve_homogeneous(&fam, c(0.5, 0.0), Side::Right, &init_m1, &init_0, 12).unwrap();
        let j0 = 6usize;
        seq.values[j0 + 1][0] += c(1e-3, 0.0);
        for j in 0..11i64 {
            let r = apply_l(&fam, &seq, j).unwrap();
            let touched = (j - j0 as i64).abs() <= 1;
            if touched {
                assert!(r > 1e-5, "expected nonzero residual at j={j}, got {r}");
            } else {
                assert!(r < 1e-12, "expected zero residual at j={j}, got {r}");
            }
        }
    }

    #[test]
    fn identities_at_j0_exact_cases() {
        let fam = OperatorFamily::hellinger_counterexample(2);
        let fs = fundamental_system(&fam, c(0.0, 0.0), 2).unwrap();
        // P_1 Q⁺_0 − Q_1 P⁺_0 = E = A_{0,1}⁻¹
        let lhs = fs.p(1) * fs.q_plus(0) - fs.q(1) * fs.p_plus(0);
        assert_scalar_eq(&lhs, 1.0);
        // P_0 Q⁺_0 − Q_0 P⁺_0 = O exactly from initial conditions
        let lhs = fs.p(0) * fs.q_plus(0) - fs.q(0) * fs.p_plus(0);
        assert_scalar_eq(&lhs, 0.0);
    }

    #[test]
    fn identity_suite_on_random_family() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 3usize;
        let j_max = 30usize;
        let mut rand_block = |shift: f64| {
            MatrixC::from_fn(n, n, |r, col| {
                let base = if r == col { shift } else { 0.0 };
                c(base + rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
            })
        };
        let sub: Vec<_> = (0..j_max).map(|_| rand_block(2.0)).collect();
        let diag: Vec<_> = (0..j_max).map(|_| rand_block(0.0)).collect();
        let sup: Vec<_> = (0..j_max).map(|_| rand_block(2.0)).collect();
        let fam = OperatorFamily::explicit(n, sub, diag, sup);
        let fs = fundamental_system(&fam, c(1.0, 1.0), j_max - 1).unwrap();
        let rep = check_identities(&fs, &fam, 0, j_max - 2).unwrap();
        assert!(rep.max_defect <= 1e-9, "defect {}", rep.max_defect);
    }

    #[test]
    fn symmetric_family_real_z_plus_equals_adjoint() {
        let fam = OperatorFamily::hellinger_counterexample(2);
        let fs = fundamental_system(&fam, c(1.5, 0.0), 30).unwrap();
        for j in -1..=30i64 {
            let d = (fs.p_plus(j) - fs.p(j).adjoint()).norm()
                / (1.0 + fs.p(j).norm());
            assert!(d < 1e-10, "P⁺ vs P* at j={j}: {d}");
            let d = (fs.q_plus(j) - fs.q(j).adjoint()).norm()
                / (1.0 + fs.q(j).norm());
            assert!(d < 1e-10, "Q⁺ vs Q* at j={j}: {d}");
        }
    }

    #[test]
    fn norm_trace_agrees_with_raw_norms() {
        let fam = OperatorFamily::hellinger_counterexample(2);
        let z = c(0.4, 0.3);
        let fs = fundamental_system(&fam, z, 60).unwrap();
        let tr = norm_trace(&fam, z, 60, NormKind::Spectral).unwrap();
        for j in -1..=60i64 {
            let raw = linalg::operator_norm(fs.q(j)).unwrap();
            let lt = tr.ln_norm(FundamentalKind::Q, j);
            if raw == 0.0 {
                assert_eq!(lt, f64::NEG_INFINITY);
            } else {
                assert!((lt - raw.ln()).abs() < 1e-9, "j={j}: {lt} vs {}", raw.ln());
            }
        }
    }

    #[test]
    fn norm_trace_survives_overflow_horizon() {
        // Q_j(3) on free_jacobi grows like 2.618^j, overflowing doubles
        // near j=730; the rescaled engine keeps going.
        let fam = OperatorFamily::free_jacobi(1);
        let tr = norm_trace(&fam, c(3.0, 0.0), 2000, NormKind::Spectral).unwrap();
        assert_eq!(tr.effective_horizon, 2000);
        let lam = (3.0 + 5f64.sqrt()) / 2.0;
        let slope = (tr.ln_norm(FundamentalKind::Q, 2000) - tr.ln_norm(FundamentalKind::Q, 1000))
            / 1000.0;
        assert!((slope - lam.ln()).abs() < 1e-6, "slope {slope}");
    }

    #[test]
    fn polynomial_degrees_on_scalar_family() {
        // with the standard initial conditions Q_j has exact degree j and
        // P_j exact degree j−1; finite differences of one order higher
        // annihilate, one order lower do not
        let fam = OperatorFamily::free_jacobi(1);
        let sample = |j: i64, pick_q: bool| -> Vec<f64> {
            (0..=j + 2)
                .map(|s| {
                    let fs = fundamental_system(&fam, c(s as f64, 0.0), j as usize).unwrap();
                    if pick_q {
                        fs.q(j)[(0, 0)].re
                    } else {
                        fs.p(j)[(0, 0)].re
                    }
                })
                .collect()
        };
        let diff_order = |mut v: Vec<f64>, order: i64| -> f64 {
            for _ in 0..order {
                v = v.windows(2).map(|w| w[1] - w[0]).collect();
            }
            v[0]
        };
        for j in 1..=6i64 {
            let q = sample(j, true);
            assert!(diff_order(q.clone(), j + 1).abs() < 1e-6, "deg Q_{j} > {j}");
            assert!(diff_order(q, j).abs() > 1e-8, "deg Q_{j} < {j}");
            let p = sample(j, false);
            assert!(diff_order(p.clone(), j).abs() < 1e-6, "deg P_{j} > {}", j - 1);
            if j >= 2 {
                assert!(diff_order(p, j - 1).abs() > 1e-8, "deg P_{j} < {}", j - 1);
            }
        }
    }
}
