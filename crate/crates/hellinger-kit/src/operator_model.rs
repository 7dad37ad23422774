//! The infinite block tridiagonal coefficient matrix: block families,
//! boundary conventions, invertibility and symmetry validation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, MatrixC};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FamilyError {
    #[error("unknown builtin family `{0}`")]
    UnknownBuiltin(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("block at position {0} is not square")]
    NonSquareBlock(usize),
    #[error("horizon exceeded: index {index} past stored horizon {horizon}")]
    HorizonExceeded { index: i64, horizon: usize },
    #[error("missing parameter `{0}`")]
    MissingParam(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("block index {0} below -1")]
    IndexBelowRange(i64),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Complex number encoded as a `[re, im]` pair in configs.
pub type ComplexPair = [f64; 2];

fn cx(p: ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(c: Complex64) -> ComplexPair {
    [c.re, c.im]
}

/// JSON-facing family description. Complex entries are `[re, im]` pairs;
/// explicit blocks are row-major `n×n` arrays of pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    Builtin {
        name: String,
        n: usize,
        #[serde(default, skip_serializing_if = "FamilyParams::is_empty")]
        params: FamilyParams,
    },
    Explicit {
        n: usize,
        sub: Vec<Vec<Vec<ComplexPair>>>,
        diag: Vec<Vec<Vec<ComplexPair>>>,
        #[serde(rename = "super")]
        sup: Vec<Vec<Vec<ComplexPair>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FamilyParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<ComplexPair>>,
}

impl FamilyParams {
    fn is_empty(&self) -> bool {
        self.ratio.is_none() && self.ratios.is_none() && self.a.is_none() && self.b.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FamilyData {
    /// `sub[j] = A_{j+1,j}`, `diag[j] = A_{j,j}`, `sup[j] = A_{j,j+1}`.
    Explicit {
        sub: Vec<MatrixC>,
        diag: Vec<MatrixC>,
        sup: Vec<MatrixC>,
    },
    /// `A_{j,j} = O`, `A_{j+1,j} = A_{j,j+1} = (j+1)·E` (order-n identity).
    HellingerCounterexample,
    /// `A_{j,j} = O`, off-diagonals `E`.
    FreeJacobi,
    /// `A_{j,j} = O`, off-diagonals `r^{j+1}·E`.
    Geometric { ratio: f64 },
    /// Scalar sequences tensored with `E_n`: `A_{j,j} = b_j E`, off `a_j E`.
    ScalarEmbed { a: Vec<Complex64>, b: Vec<Complex64> },
    /// `A_{j,j} = O`, off-diagonals `diag(r_1^{j+1}, …, r_n^{j+1})`.
    DiagGeometric { ratios: Vec<f64> },
}

/// Rule producing the blocks `A_{j,j−1}`, `A_{j,j}`, `A_{j,j+1}` for all
/// `j ≥ 0`, with the convention blocks `A_{0,−1} = A_{−1,0} = −E`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFamily {
    n: usize,
    data: FamilyData,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub j_max: usize,
    pub is_symmetric: bool,
    pub first_violation: Option<SymmetryViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryViolation {
    pub index: usize,
    pub defect: f64,
    pub what: String,
}

fn parse_blocks(n: usize, raw: &[Vec<Vec<ComplexPair>>], what: &str) -> Result<Vec<MatrixC>, FamilyError> {
    raw.iter()
        .enumerate()
        .map(|(j, rows)| {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(FamilyError::DimensionMismatch(format!(
                    "{what} block {j} is not {n}x{n}"
                )));
            }
            Ok(MatrixC::from_fn(n, n, |r, c| cx(rows[r][c])))
        })
        .collect()
}

fn dump_blocks(blocks: &[MatrixC]) -> Vec<Vec<Vec<ComplexPair>>> {
    blocks
        .iter()
        .map(|m| {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| pair(m[(r, c)])).collect())
                .collect()
        })
        .collect()
}

impl OperatorFamily {
    pub fn from_spec(spec: &FamilySpec) -> Result<Self, FamilyError> {
        match spec {
            FamilySpec::Explicit { n, sub, diag, sup } => {
                if *n == 0 {
                    return Err(FamilyError::InvalidParam("n must be positive".into()));
                }
                if sub.len() != sup.len() || diag.len() != sup.len() {
                    return Err(FamilyError::DimensionMismatch(
                        "sub, diag, super lists must share a horizon".into(),
                    ));
                }
                let data = FamilyData::Explicit {
                    sub: parse_blocks(*n, sub, "sub")?,
                    diag: parse_blocks(*n, diag, "diag")?,
                    sup: parse_blocks(*n, sup, "super")?,
                };
                Ok(Self { n: *n, data })
            }
            FamilySpec::Builtin { name, n, params } => {
                if *n == 0 {
                    return Err(FamilyError::InvalidParam("n must be positive".into()));
                }
                let data = match name.as_str() {
                    "hellinger_counterexample" | "counterexample" => {
                        FamilyData::HellingerCounterexample
                    }
                    "free_jacobi" => FamilyData::FreeJacobi,
                    "geometric" => {
                        let ratio = params.ratio.ok_or(FamilyError::MissingParam("ratio"))?;
                        if ratio == 0.0 || !ratio.is_finite() {
                            return Err(FamilyError::InvalidParam(
                                "geometric ratio must be finite and nonzero".into(),
                            ));
                        }
                        FamilyData::Geometric { ratio }
                    }
                    "scalar_embed" => {
                        let a = params.a.as_ref().ok_or(FamilyError::MissingParam("a"))?;
                        let b = params.b.as_ref().ok_or(FamilyError::MissingParam("b"))?;
                        if a.len() != b.len() {
                            return Err(FamilyError::DimensionMismatch(
                                "scalar_embed sequences a, b must share a horizon".into(),
                            ));
                        }
                        if a.iter().any(|p| cx(*p).norm() == 0.0) {
                            return Err(FamilyError::InvalidParam(
                                "scalar_embed off-diagonal entries must be nonzero".into(),
                            ));
                        }
                        FamilyData::ScalarEmbed {
                            a: a.iter().map(|p| cx(*p)).collect(),
                            b: b.iter().map(|p| cx(*p)).collect(),
                        }
                    }
                    "diag_geometric" => {
                        let ratios = params
                            .ratios
                            .clone()
                            .ok_or(FamilyError::MissingParam("ratios"))?;
                        if ratios.len() != *n {
                            return Err(FamilyError::DimensionMismatch(format!(
                                "diag_geometric needs {n} ratios, got {}",
                                ratios.len()
                            )));
                        }
                        if ratios.iter().any(|r| *r == 0.0 || !r.is_finite()) {
                            return Err(FamilyError::InvalidParam(
                                "diag_geometric ratios must be finite and nonzero".into(),
                            ));
                        }
                        FamilyData::DiagGeometric { ratios }
                    }
                    other => return Err(FamilyError::UnknownBuiltin(other.to_string())),
                };
                Ok(Self { n: *n, data })
            }
        }
    }

    /// Echoes the family back as a config record.
    pub fn to_spec(&self) -> FamilySpec {
        let n = self.n;
        match &self.data {
            FamilyData::Explicit { sub, diag, sup } => FamilySpec::Explicit {
                n,
                sub: dump_blocks(sub),
                diag: dump_blocks(diag),
                sup: dump_blocks(sup),
            },
            FamilyData::HellingerCounterexample => FamilySpec::Builtin {
                name: "hellinger_counterexample".into(),
                n,
                params: FamilyParams::default(),
            },
            FamilyData::FreeJacobi => FamilySpec::Builtin {
                name: "free_jacobi".into(),
                n,
                params: FamilyParams::default(),
            },
            FamilyData::Geometric { ratio } => FamilySpec::Builtin {
                name: "geometric".into(),
                n,
                params: FamilyParams {
                    ratio: Some(*ratio),
                    ..Default::default()
                },
            },
            FamilyData::ScalarEmbed { a, b } => FamilySpec::Builtin {
                name: "scalar_embed".into(),
                n,
                params: FamilyParams {
                    a: Some(a.iter().map(|c| pair(*c)).collect()),
                    b: Some(b.iter().map(|c| pair(*c)).collect()),
                    ..Default::default()
                },
            },
            FamilyData::DiagGeometric { ratios } => FamilySpec::Builtin {
                name: "diag_geometric".into(),
                n,
                params: FamilyParams {
                    ratios: Some(ratios.clone()),
                    ..Default::default()
                },
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Horizon of a finite (explicit or scalar-list) family, `None` when
    /// blocks exist for every `j`.
    pub fn horizon(&self) -> Option<usize> {
        match &self.data {
            FamilyData::Explicit { diag, .. } => Some(diag.len()),
            FamilyData::ScalarEmbed { a, .. } => Some(a.len()),
            _ => None,
        }
    }

    /// Builds an explicit family from the first `horizon` blocks of `self`
    /// with the diagonal shifted by `-shift[j]` (the perturbed operator
    /// `l(u) − F u`). Truncates early if a block is not finite.
    pub fn shifted_diagonal(&self, shift: &[MatrixC], horizon: usize) -> Result<Self, FamilyError> {
        let n = self.n;
        let mut sub = Vec::new();
        let mut diag = Vec::new();
        let mut sup = Vec::new();
        for j in 0..horizon {
            let (s, d, u) = (
                self.block_at(j as i64 + 1, j as i64)?,
                self.block_at(j as i64, j as i64)?,
                self.block_at(j as i64, j as i64 + 1)?,
            );
            if !linalg::is_finite(&s) || !linalg::is_finite(&u) {
                break;
            }
            let f = shift.get(j).cloned().unwrap_or_else(|| linalg::zero(n));
            if f.nrows() != n || f.ncols() != n {
                return Err(FamilyError::DimensionMismatch(format!(
                    "shift block {j} is not {n}x{n}"
                )));
            }
            sub.push(s);
            diag.push(d - f);
            sup.push(u);
        }
        Ok(Self {
            n,
            data: FamilyData::Explicit { sub, diag, sup },
        })
    }

    /// The block `A_{row,col}`. Off-tridiagonal positions return `O`; the
    /// convention positions `(0,−1)` and `(−1,0)` return `−E`.
    pub fn block_at(&self, row: i64, col: i64) -> Result<MatrixC, FamilyError> {
        let n = self.n;
        if row < -1 || col < -1 {
            return Err(FamilyError::IndexBelowRange(row.min(col)));
        }
        if (row - col).abs() > 1 {
            return Ok(linalg::zero(n));
        }
        if (row, col) == (0, -1) || (row, col) == (-1, 0) {
            return Ok(linalg::scalar(n, Complex64::new(-1.0, 0.0)));
        }
        if row == -1 || col == -1 {
            // (-1,-1): never referenced by the recurrences, zero by convention
            return Ok(linalg::zero(n));
        }
        let (row, col) = (row as usize, col as usize);
        let j = row.min(col);
        match &self.data {
            FamilyData::Explicit { sub, diag, sup } => {
                let list = if row == col {
                    diag
                } else if row < col {
                    sup
                } else {
                    sub
                };
                list.get(j).cloned().ok_or(FamilyError::HorizonExceeded {
                    index: j as i64,
                    horizon: list.len(),
                })
            }
            FamilyData::HellingerCounterexample => {
                if row == col {
                    Ok(linalg::zero(n))
                } else {
                    Ok(linalg::scalar(n, Complex64::new((j + 1) as f64, 0.0)))
                }
            }
            FamilyData::FreeJacobi => {
                if row == col {
                    Ok(linalg::zero(n))
                } else {
                    Ok(linalg::identity(n))
                }
            }
            FamilyData::Geometric { ratio } => {
                if row == col {
                    Ok(linalg::zero(n))
                } else {
                    Ok(linalg::scalar(n, Complex64::new(ratio.powi(j as i32 + 1), 0.0)))
                }
            }
            FamilyData::ScalarEmbed { a, b } => {
                let list = if row == col { b } else { a };
                let s = list.get(j).ok_or(FamilyError::HorizonExceeded {
                    index: j as i64,
                    horizon: list.len(),
                })?;
                Ok(linalg::scalar(n, *s))
            }
            FamilyData::DiagGeometric { ratios } => {
                if row == col {
                    Ok(linalg::zero(n))
                } else {
                    let mut m = linalg::zero(n);
                    for (i, r) in ratios.iter().enumerate() {
                        m[(i, i)] = Complex64::new(r.powi(j as i32 + 1), 0.0);
                    }
                    Ok(m)
                }
            }
        }
    }

    /// Checks `A_{j,j} = A_{j,j}*` and `A_{j+1,j} = A_{j,j+1} > 0` for all
    /// `j ≤ j_max` (the block Jacobi condition).
    pub fn check_symmetry(&self, j_max: usize) -> Result<SymmetryReport, FamilyError> {
        let tol = 1e-12;
        for j in 0..=j_max {
            let d = self.block_at(j as i64, j as i64)?;
            let (herm, _) = linalg::is_hermitian_positive(&d, tol);
            if !herm {
                let defect = linalg::operator_norm(&(&d - d.adjoint())).unwrap_or(f64::INFINITY);
                return Ok(SymmetryReport {
                    j_max,
                    is_symmetric: false,
                    first_violation: Some(SymmetryViolation {
                        index: j,
                        defect,
                        what: "diagonal block not Hermitian".into(),
                    }),
                });
            }
            let sup = self.block_at(j as i64, j as i64 + 1)?;
            let sub = self.block_at(j as i64 + 1, j as i64)?;
            let equal_defect = linalg::operator_norm(&(&sup - &sub)).unwrap_or(f64::INFINITY);
            let scale = linalg::operator_norm(&sup).unwrap_or(f64::INFINITY).max(1.0);
            if equal_defect > tol * scale {
                return Ok(SymmetryReport {
                    j_max,
                    is_symmetric: false,
                    first_violation: Some(SymmetryViolation {
                        index: j,
                        defect: equal_defect,
                        what: "off-diagonal blocks unequal".into(),
                    }),
                });
            }
            let (herm, pos) = linalg::is_hermitian_positive(&sup, tol);
            if !herm || !pos {
                return Ok(SymmetryReport {
                    j_max,
                    is_symmetric: false,
                    first_violation: Some(SymmetryViolation {
                        index: j,
                        defect: f64::NAN,
                        what: "off-diagonal block not positive definite".into(),
                    }),
                });
            }
        }
        Ok(SymmetryReport {
            j_max,
            is_symmetric: true,
            first_violation: None,
        })
    }
}

/// Convenience constructors for the builtin catalog.
impl OperatorFamily {
    pub fn hellinger_counterexample(n: usize) -> Self {
        Self {
            n,
            data: FamilyData::HellingerCounterexample,
        }
    }

    pub fn free_jacobi(n: usize) -> Self {
        Self {
            n,
            data: FamilyData::FreeJacobi,
        }
    }

    pub fn geometric(ratio: f64) -> Self {
        Self {
            n: 1,
            data: FamilyData::Geometric { ratio },
        }
    }

    pub fn diag_geometric(ratios: Vec<f64>) -> Self {
        Self {
            n: ratios.len(),
            data: FamilyData::DiagGeometric { ratios },
        }
    }

    pub fn scalar_embed(n: usize, a: Vec<Complex64>, b: Vec<Complex64>) -> Self {
        Self {
            n,
            data: FamilyData::ScalarEmbed { a, b },
        }
    }

    pub fn explicit(n: usize, sub: Vec<MatrixC>, diag: Vec<MatrixC>, sup: Vec<MatrixC>) -> Self {
        Self {
            n,
            data: FamilyData::Explicit { sub, diag, sup },
        }
    }
}
