//! Exact Gaussian-rational arithmetic and an exact forward recursion used
//! as the oracle behind the floating-point engine. Every finite double is a
//! dyadic rational, so any family with finite block entries is
//! exact-capable.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::MatrixC;
use crate::operator_model::{FamilyError, OperatorFamily};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("block entry is not finite, family is not exact-capable at index {0}")]
    NonFiniteBlock(i64),
    #[error("singular block in exact arithmetic at index {0}")]
    SingularBlock(i64),
    #[error("horizon {0} exceeds the exact-arithmetic cap {1}")]
    HorizonCap(usize, usize),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Gaussian rational: exact complex number with rational real and imaginary
/// parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn zero() -> Self {
        Self {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Self {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn i() -> Self {
        Self {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self {
            re: BigRational::from_integer(BigInt::from(v)),
            im: BigRational::zero(),
        }
    }

    /// Exact conversion: every finite double is a dyadic rational.
    pub fn from_f64_pair(re: f64, im: f64) -> Option<Self> {
        Some(Self {
            re: BigRational::from_float(re)?,
            im: BigRational::from_float(im)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn inv(&self) -> Option<Self> {
        let denom = &self.re * &self.re + &self.im * &self.im;
        if denom.is_zero() {
            return None;
        }
        Some(Self {
            re: &self.re / &denom,
            im: -(&self.im / &denom),
        })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Dense matrix over the Gaussian rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    pub n: usize,
    entries: Vec<GaussRat>,
}

impl RationalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![GaussRat::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            *m.at_mut(i, i) = GaussRat::one();
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> &GaussRat {
        &self.entries[r * self.n + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut GaussRat {
        &mut self.entries[r * self.n + c]
    }

    pub fn from_matrixc(m: &MatrixC) -> Option<Self> {
        let n = m.nrows();
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let e = m[(r, c)];
                *out.at_mut(r, c) = GaussRat::from_f64_pair(e.re, e.im)?;
            }
        }
        Some(out)
    }

    pub fn to_matrixc(&self) -> MatrixC {
        MatrixC::from_fn(self.n, self.n, |r, c| self.at(r, c).to_complex())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = GaussRat::zero();
                for k in 0..n {
                    if !self.at(r, k).is_zero() && !o.at(k, c).is_zero() {
                        acc = acc.add(&self.at(r, k).mul(o.at(k, c)));
                    }
                }
                *out.at_mut(r, c) = acc;
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&o.entries) {
            *a = a.sub(b);
        }
        out
    }

    pub fn scale(&self, s: &GaussRat) -> Self {
        let mut out = self.clone();
        for a in out.entries.iter_mut() {
            *a = a.mul(s);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// `Some(r)` when the matrix equals `r·E` exactly.
    pub fn as_scalar_multiple_of_identity(&self) -> Option<GaussRat> {
        let r = self.at(0, 0).clone();
        let zero = GaussRat::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let want = if i == j { &r } else { &zero };
                if want != self.at(i, j) {
                    return None;
                }
            }
        }
        Some(r)
    }

    /// Exact Gauss-Jordan inverse.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = (col..n).find(|&r| !a.at(r, col).is_zero())?;
            if pivot_row != col {
                for c in 0..n {
                    let tmp = a.at(pivot_row, c).clone();
                    *a.at_mut(pivot_row, c) = a.at(col, c).clone();
                    *a.at_mut(col, c) = tmp;
                    let tmp = inv.at(pivot_row, c).clone();
                    *inv.at_mut(pivot_row, c) = inv.at(col, c).clone();
                    *inv.at_mut(col, c) = tmp;
                }
            }
            let pinv = a.at(col, col).inv()?;
            for c in 0..n {
                *a.at_mut(col, c) = a.at(col, c).mul(&pinv);
                *inv.at_mut(col, c) = inv.at(col, c).mul(&pinv);
            }
            for r in 0..n {
                if r == col || a.at(r, col).is_zero() {
                    continue;
                }
                let factor = a.at(r, col).clone();
                for c in 0..n {
                    let sa = a.at(col, c).mul(&factor);
                    *a.at_mut(r, c) = a.at(r, c).sub(&sa);
                    let si = inv.at(col, c).mul(&factor);
                    *inv.at_mut(r, c) = inv.at(r, c).sub(&si);
                }
            }
        }
        Some(inv)
    }

    /// Max entry modulus as a float (entrywise comparison scale).
    pub fn max_abs_f64(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.to_complex().norm())
            .fold(0.0, f64::max)
    }
}

/// Exact fundamental system: `P`, `Q`, `P⁺`, `Q⁺` indexed `j = −1..=horizon`.
#[derive(Debug, Clone)]
pub struct RationalMatrixSeq {
    pub z: GaussRat,
    pub horizon: usize,
    p: Vec<RationalMatrix>,
    q: Vec<RationalMatrix>,
    p_plus: Vec<RationalMatrix>,
    q_plus: Vec<RationalMatrix>,
}

impl RationalMatrixSeq {
    pub fn p(&self, j: i64) -> &RationalMatrix {
        &self.p[(j + 1) as usize]
    }

    pub fn q(&self, j: i64) -> &RationalMatrix {
        &self.q[(j + 1) as usize]
    }

    pub fn p_plus(&self, j: i64) -> &RationalMatrix {
        &self.p_plus[(j + 1) as usize]
    }

    pub fn q_plus(&self, j: i64) -> &RationalMatrix {
        &self.q_plus[(j + 1) as usize]
    }
}

const EXACT_HORIZON_CAP: usize = 20_000;

fn exact_block(family: &OperatorFamily, row: i64, col: i64) -> Result<RationalMatrix, ExactError> {
    let b = family.block_at(row, col)?;
    RationalMatrix::from_matrixc(&b).ok_or(ExactError::NonFiniteBlock(row.min(col)))
}

/// Exact forward recursion of all four fundamental solutions at a Gaussian
/// rational `z`. Serves as the oracle for the floating-point engine.
pub fn exact_fundamental_at_rational(
    family: &OperatorFamily,
    z: &GaussRat,
    j_max: usize,
) -> Result<RationalMatrixSeq, ExactError> {
    if j_max > EXACT_HORIZON_CAP {
        return Err(ExactError::HorizonCap(j_max, EXACT_HORIZON_CAP));
    }
    let n = family.dim();
    let e = RationalMatrix::identity(n);
    let o = RationalMatrix::zeros(n);
    let mut p = vec![e.clone(), o.clone()];
    let mut q = vec![o.clone(), e.clone()];
    let mut p_plus = vec![e.clone(), o.clone()];
    let mut q_plus = vec![o.clone(), e.clone()];
    for j in 0..j_max {
        let ji = j as i64;
        let sup = exact_block(family, ji, ji + 1)?;
        let sub = exact_block(family, ji + 1, ji)?;
        let diag = exact_block(family, ji, ji)?;
        let sub_prev = exact_block(family, ji, ji - 1)?;
        let sup_prev = exact_block(family, ji - 1, ji)?;
        let inv_sup = sup.inverse().ok_or(ExactError::SingularBlock(ji))?;
        let inv_sub = sub.inverse().ok_or(ExactError::SingularBlock(ji))?;
        let right = |prev: &RationalMatrix, cur: &RationalMatrix| {
            inv_sup.mul(&cur.scale(z).sub(&diag.mul(cur)).sub(&sub_prev.mul(prev)))
        };
        let left = |prev: &RationalMatrix, cur: &RationalMatrix| {
            cur.scale(z)
                .sub(&cur.mul(&diag))
                .sub(&prev.mul(&sup_prev))
                .mul(&inv_sub)
        };
        p.push(right(&p[j], &p[j + 1]));
        q.push(right(&q[j], &q[j + 1]));
        p_plus.push(left(&p_plus[j], &p_plus[j + 1]));
        q_plus.push(left(&q_plus[j], &q_plus[j + 1]));
    }
    Ok(RationalMatrixSeq {
        z: z.clone(),
        horizon: j_max,
        p,
        q,
        p_plus,
        q_plus,
    })
}

/// `k!! = k(k−2)(k−4)…` with `0!! = (−1)!! = 1`.
pub fn double_factorial(k: u64) -> BigInt {
    let mut acc = BigInt::one();
    let mut v = k;
    while v >= 2 {
        acc *= BigInt::from(v);
        v -= 2;
    }
    acc
}

/// `|r|` of a Gaussian rational with one zero component, as an exact
/// rational; `None` when both components are nonzero.
pub fn rational_modulus(v: &GaussRat) -> Option<BigRational> {
    if v.im.is_zero() {
        Some(v.re.abs())
    } else if v.re.is_zero() {
        Some(v.im.abs())
    } else {
        None
    }
}
