//! Command-line front end: JSON configs, subcommand dispatch, and
//! machine-readable report bundles (`report.json` plus `series_*.csv`).
//!
//! Exit codes: 0 success, 1 verdict failure ("the math said no"),
//! 2 config error, 3 numerical abort. All errors are additionally written
//! to stderr as structured JSON.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::exact;
use crate::experiments::{self, StockPerturbation};
use crate::linalg::{self, MatrixC, NormKind, VectorC};
use crate::lp_analysis::{self, LpSettings, TailSide, Verdict};
use crate::operator_model::{FamilySpec, OperatorFamily};
use crate::recurrence::{self, FundamentalKind, Side};
use crate::voc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Grammar for human-readable complex flags: `a+bi`, `a-bi`, `a`, `bi`,
/// `i`, `-i`, scientific notation allowed in either part. Configs and CSV
/// use `[re, im]` pairs instead.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim().replace(' ', "");
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some(body) = t.strip_suffix('i') {
        // split the imaginary tail off at the last sign that is neither
        // leading nor part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("", body),
        };
        let re = if re_str.is_empty() {
            0.0
        } else {
            re_str.parse::<f64>().map_err(|e| format!("bad real part {re_str:?}: {e}"))?
        };
        let im = match im_str {
            "" | "+" => 1.0,
            "-" => -1.0,
            _ => im_str.parse::<f64>().map_err(|e| format!("bad imaginary part {im_str:?}: {e}"))?,
        };
        Ok(Complex64::new(re, im))
    } else {
        let re = t.parse::<f64>().map_err(|e| format!("bad complex literal {t:?}: {e}"))?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// `p` flags accept numbers or `inf`.
pub fn parse_p(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "Inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => {
            let p: f64 = other.parse().map_err(|e| format!("bad exponent {other:?}: {e}"))?;
            if p >= 1.0 {
                Ok(p)
            } else {
                Err(format!("p must lie in [1, ∞], got {p}"))
            }
        }
    }
}

// verdict failures (exit 1) are reported through the report bundle, not
// this error path, so they never hide the structured result
#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

fn cfg_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn num_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "hellinger-kit",
    version,
    about = "Fundamental solutions, identities, and l^p analysis for block tridiagonal difference equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the fundamental matrix solutions and their norm series.
    Recur(CommonOpts),
    /// Solve the homogeneous (or forced inhomogeneous) equation.
    Solve(CommonOpts),
    /// Check the Wronskian-type identities linking P, Q, P⁺, Q⁺.
    Identities(CommonOpts),
    /// Verify the spectral-parameter-shift representation at (z₀, z).
    VocCheck(CommonOpts),
    /// Tail norms and growth classification over a z grid.
    LpScan(CommonOpts),
    /// Quantitative l^p invariance check over a z grid.
    Hellinger(CommonOpts),
    /// Bounded-perturbation invariance check.
    Perturb(CommonOpts),
    /// Sharpness scenario: decay exponents, membership flip, witnesses.
    Counterexample(CommonOpts),
    /// Exact Gaussian-rational recursion dump and float comparison.
    Oracle(CommonOpts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Recur(_) => "recur",
            Command::Solve(_) => "solve",
            Command::Identities(_) => "identities",
            Command::VocCheck(_) => "voc-check",
            Command::LpScan(_) => "lp-scan",
            Command::Hellinger(_) => "hellinger",
            Command::Perturb(_) => "perturb",
            Command::Counterexample(_) => "counterexample",
            Command::Oracle(_) => "oracle",
        }
    }
    fn opts(&self) -> &CommonOpts {
        match self {
            Command::Recur(o)
            | Command::Solve(o)
            | Command::Identities(o)
            | Command::VocCheck(o)
            | Command::LpScan(o)
            | Command::Hellinger(o)
            | Command::Perturb(o)
            | Command::Counterexample(o)
            | Command::Oracle(o) => o,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// JSON config file; individual flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Family spec JSON file (see the config grammar).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Builtin family name (counterexample, free_jacobi, geometric,
    /// diag_geometric, scalar_embed).
    #[arg(long)]
    builtin: Option<String>,
    /// Block dimension for builtin families.
    #[arg(long)]
    n: Option<usize>,
    /// Ratio for the geometric builtin.
    #[arg(long)]
    ratio: Option<f64>,
    /// Per-channel ratios for diag_geometric.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Spectral parameter, e.g. "1+0.5i".
    #[arg(long)]
    z: Option<String>,
    /// Reference spectral parameter for shift/hellinger commands.
    #[arg(long)]
    z0: Option<String>,
    /// "default" (64 points on circles |z−z₀| ∈ {0.5,1,2,5}) or a
    /// comma-free semicolon-separated list of complex values.
    #[arg(long)]
    grid: Option<String>,
    /// Exponent p in [1, ∞]; "inf" accepted.
    #[arg(long)]
    p: Option<String>,
    /// Exponent sweep for the counterexample command.
    #[arg(long = "p-list", value_delimiter = ',')]
    p_list: Option<Vec<f64>>,
    /// Horizon J.
    #[arg(short = 'J', long = "J")]
    j: Option<usize>,
    /// Horizon for exponent fitting (counterexample).
    #[arg(long = "j-exponent")]
    j_exponent: Option<usize>,
    /// Horizon for the bounded-witness search (counterexample).
    #[arg(long = "j-bounded")]
    j_bounded: Option<usize>,
    /// Anchor index for voc-check.
    #[arg(long)]
    k: Option<usize>,
    /// right | left.
    #[arg(long)]
    side: Option<String>,
    /// spectral | frobenius.
    #[arg(long)]
    norm: Option<String>,
    /// Forcing file: JSON array of n×n matrices of [re,im] pairs.
    #[arg(long)]
    forcing: Option<PathBuf>,
    /// Stock perturbation for perturb: sine | linear.
    #[arg(long)]
    perturbation: Option<String>,
    /// Initial value u_{−1}: semicolon-separated complex entries.
    #[arg(long = "init-m1")]
    init_m1: Option<String>,
    /// Initial value u_0: semicolon-separated complex entries.
    #[arg(long = "init-0")]
    init_0: Option<String>,
    /// Output directory for report.json and series_*.csv; without it the
    /// report is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// JSON-facing complex value: `[re, im]`, `"a+bi"`, or a bare number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ComplexIn {
    Pair([f64; 2]),
    Str(String),
    Real(f64),
}

impl ComplexIn {
    fn to_complex(&self) -> Result<Complex64, CliError> {
        match self {
            ComplexIn::Pair([re, im]) => Ok(Complex64::new(*re, *im)),
            ComplexIn::Str(s) => parse_complex(s).map_err(CliError::Config),
            ComplexIn::Real(x) => Ok(Complex64::new(*x, 0.0)),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PIn {
    Num(f64),
    Str(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridIn {
    Keyword(String),
    List(Vec<ComplexIn>),
}

/// Config-file mirror of the flag set; every field optional, flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    family: Option<FamilySpec>,
    z: Option<ComplexIn>,
    z0: Option<ComplexIn>,
    grid: Option<GridIn>,
    p: Option<PIn>,
    p_list: Option<Vec<f64>>,
    j: Option<usize>,
    j_exponent: Option<usize>,
    j_bounded: Option<usize>,
    k: Option<usize>,
    n: Option<usize>,
    side: Option<Side>,
    norm: Option<NormKind>,
    /// Inline forcing blocks, `forcing[j]` row-major with `[re,im]` pairs.
    forcing: Option<Vec<Vec<Vec<[f64; 2]>>>>,
    perturbation: Option<String>,
    init_m1: Option<Vec<[f64; 2]>>,
    init_0: Option<Vec<[f64; 2]>>,
    out: Option<PathBuf>,
}

/// Everything a handler needs, with flag-over-config precedence applied.
struct Resolved {
    family_spec: Option<FamilySpec>,
    z: Option<Complex64>,
    z0: Option<Complex64>,
    grid: Option<Vec<Complex64>>,
    grid_is_default: bool,
    p: Option<f64>,
    p_list: Option<Vec<f64>>,
    j: Option<usize>,
    j_exponent: Option<usize>,
    j_bounded: Option<usize>,
    k: Option<usize>,
    side: Option<Side>,
    norm: NormKind,
    forcing: Option<Vec<MatrixC>>,
    perturbation: Option<StockPerturbation>,
    init_m1: Option<VectorC>,
    init_0: Option<VectorC>,
    out: Option<PathBuf>,
}

impl Resolved {
    fn family(&self) -> Result<(FamilySpec, OperatorFamily), CliError> {
        let spec = self
            .family_spec
            .clone()
            .ok_or_else(|| CliError::Config("no family given (--family/--builtin/config)".into()))?;
        let fam = OperatorFamily::from_spec(&spec).map_err(cfg_err)?;
        Ok((spec, fam))
    }

    fn settings(&self) -> LpSettings {
        LpSettings {
            norm_kind: self.norm,
            ..LpSettings::default()
        }
    }
}

fn parse_vector(entries: &str) -> Result<VectorC, CliError> {
    let vals: Result<Vec<Complex64>, String> =
        entries.split(';').map(parse_complex).collect();
    Ok(VectorC::from_vec(vals.map_err(CliError::Config)?))
}

fn pairs_to_vector(pairs: &[[f64; 2]]) -> VectorC {
    VectorC::from_vec(pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
}

fn pairs_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<MatrixC, CliError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config("forcing blocks must be square".into()));
    }
    Ok(MatrixC::from_fn(n, n, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

fn load_forcing_file(path: &Path) -> Result<Vec<MatrixC>, CliError> {
    let raw = fs::read_to_string(path).map_err(cfg_err)?;
    let blocks: Vec<Vec<Vec<[f64; 2]>>> = serde_json::from_str(&raw).map_err(cfg_err)?;
    blocks.iter().map(|b| pairs_to_matrix(b)).collect()
}

fn resolve(opts: &CommonOpts) -> Result<Resolved, CliError> {
    let cfg: RunConfig = match &opts.config {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(cfg_err)?;
            serde_json::from_str(&raw).map_err(cfg_err)?
        }
        None => RunConfig::default(),
    };

    let family_spec = if let Some(path) = &opts.family {
        let raw = fs::read_to_string(path).map_err(cfg_err)?;
        Some(serde_json::from_str::<FamilySpec>(&raw).map_err(cfg_err)?)
    } else if let Some(name) = &opts.builtin {
        let ratios = opts.ratios.clone();
        let n = opts
            .n
            .or(cfg.n)
            .or_else(|| ratios.as_ref().map(|r| r.len()))
            .unwrap_or(match name.as_str() {
                "geometric" => 1,
                _ => 2,
            });
        Some(FamilySpec::Builtin {
            name: name.clone(),
            n,
            params: crate::operator_model::FamilyParams {
                ratio: opts.ratio,
                ratios,
                a: None,
                b: None,
            },
        })
    } else {
        cfg.family.clone()
    };

    let z = match (&opts.z, &cfg.z) {
        (Some(s), _) => Some(parse_complex(s).map_err(CliError::Config)?),
        (None, Some(c)) => Some(c.to_complex()?),
        _ => None,
    };
    let z0 = match (&opts.z0, &cfg.z0) {
        (Some(s), _) => Some(parse_complex(s).map_err(CliError::Config)?),
        (None, Some(c)) => Some(c.to_complex()?),
        _ => None,
    };

    let mut grid_is_default = false;
    let grid = match (&opts.grid, &cfg.grid) {
        (Some(s), _) => {
            if s == "default" {
                grid_is_default = true;
                None
            } else {
                let pts: Result<Vec<Complex64>, String> =
                    s.split(';').map(parse_complex).collect();
                Some(pts.map_err(CliError::Config)?)
            }
        }
        (None, Some(GridIn::Keyword(kw))) => {
            if kw == "default" {
                grid_is_default = true;
                None
            } else {
                return Err(CliError::Config(format!("unknown grid keyword {kw:?}")));
            }
        }
        (None, Some(GridIn::List(list))) => {
            let pts: Result<Vec<Complex64>, CliError> =
                list.iter().map(|c| c.to_complex()).collect();
            Some(pts?)
        }
        _ => None,
    };

    let p = match (&opts.p, &cfg.p) {
        (Some(s), _) => Some(parse_p(s).map_err(CliError::Config)?),
        (None, Some(PIn::Num(x))) => Some(*x),
        (None, Some(PIn::Str(s))) => Some(parse_p(s).map_err(CliError::Config)?),
        _ => None,
    };

    let side = match &opts.side {
        Some(s) => Some(match s.as_str() {
            "right" => Side::Right,
            "left" => Side::Left,
            other => return Err(CliError::Config(format!("side must be right|left, got {other:?}"))),
        }),
        None => cfg.side,
    };
    let norm = match &opts.norm {
        Some(s) => match s.as_str() {
            "spectral" => NormKind::Spectral,
            "frobenius" => NormKind::Frobenius,
            other => {
                return Err(CliError::Config(format!(
                    "norm must be spectral|frobenius, got {other:?}"
                )))
            }
        },
        None => cfg.norm.unwrap_or_default(),
    };
    let perturbation = match opts.perturbation.as_deref().or(cfg.perturbation.as_deref()) {
        Some("sine") => Some(StockPerturbation::Sine),
        Some("linear") => Some(StockPerturbation::Linear),
        Some(other) => {
            return Err(CliError::Config(format!(
                "perturbation must be sine|linear, got {other:?}"
            )))
        }
        None => None,
    };
    let forcing = if let Some(path) = &opts.forcing {
        Some(load_forcing_file(path)?)
    } else if let Some(blocks) = &cfg.forcing {
        Some(
            blocks
                .iter()
                .map(|b| pairs_to_matrix(b))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    let init_m1 = match (&opts.init_m1, &cfg.init_m1) {
        (Some(s), _) => Some(parse_vector(s)?),
        (None, Some(v)) => Some(pairs_to_vector(v)),
        _ => None,
    };
    let init_0 = match (&opts.init_0, &cfg.init_0) {
        (Some(s), _) => Some(parse_vector(s)?),
        (None, Some(v)) => Some(pairs_to_vector(v)),
        _ => None,
    };

    Ok(Resolved {
        family_spec,
        z,
        z0,
        grid,
        grid_is_default,
        p,
        p_list: opts.p_list.clone().or(cfg.p_list),
        j: opts.j.or(cfg.j),
        j_exponent: opts.j_exponent.or(cfg.j_exponent),
        j_bounded: opts.j_bounded.or(cfg.j_bounded),
        k: opts.k.or(cfg.k),
        side,
        norm,
        forcing,
        perturbation,
        init_m1,
        init_0,
        out: opts.out.clone().or(cfg.out),
    })
}

/// One CSV artifact of a run.
struct Series {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

struct CommandOutput {
    exit: i32,
    summary: String,
    config_echo: Value,
    result: Value,
    series: Vec<Series>,
}

fn fmt_f(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.17e}")
    }
}

fn cpair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// The norm series CSV shared by several commands: per-j norms of the four
/// fundamental solutions plus running `(Σ‖·‖^p)^{1/p}` partial sums.
fn fundamental_series(trace: &recurrence::NormTrace, p: f64) -> Series {
    let kinds = [
        FundamentalKind::P,
        FundamentalKind::Q,
        FundamentalKind::PPlus,
        FundamentalKind::QPlus,
    ];
    let mut partial = [0.0f64; 4];
    let mut rows = Vec::new();
    for j in 0..=trace.effective_horizon {
        let mut row = vec![j.to_string()];
        let mut sums = Vec::new();
        for (slot, kind) in kinds.iter().enumerate() {
            let nv = trace.ln_norm(*kind, j as i64).exp();
            row.push(fmt_f(nv));
            if p.is_infinite() {
                partial[slot] = partial[slot].max(nv);
                sums.push(fmt_f(partial[slot]));
            } else {
                partial[slot] += nv.powf(p);
                sums.push(fmt_f(partial[slot].powf(1.0 / p)));
            }
        }
        row.extend(sums);
        rows.push(row);
    }
    Series {
        name: "series_fundamental".into(),
        header: vec![
            "j".into(),
            "p_norm".into(),
            "q_norm".into(),
            "p_plus_norm".into(),
            "q_plus_norm".into(),
            "p_partial".into(),
            "q_partial".into(),
            "p_plus_partial".into(),
            "q_plus_partial".into(),
        ],
        rows,
    }
}

fn cmd_recur(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z = r.z.unwrap_or(Complex64::new(0.0, 0.0));
    let j = r.j.unwrap_or(100);
    let p = r.p.unwrap_or(2.0);
    let trace = recurrence::norm_trace(&fam, z, j, r.norm).map_err(num_err)?;
    let series = fundamental_series(&trace, p);
    let result = json!({
        "z": cpair(z),
        "requested_horizon": j,
        "effective_horizon": trace.effective_horizon,
        "truncated": trace.truncated,
        "p_for_partial_sums": p,
    });
    Ok(CommandOutput {
        exit: EXIT_OK,
        summary: format!(
            "recur: horizon {} (truncated: {})",
            trace.effective_horizon, trace.truncated
        ),
        config_echo: json!({"family": spec, "z": cpair(z), "j": j, "p": p}),
        result,
        series: vec![series],
    })
}

fn cmd_solve(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z = r.z.unwrap_or(Complex64::new(0.0, 0.0));
    let j = r.j.unwrap_or(100);
    let side = r.side.unwrap_or(Side::Right);
    let n = fam.dim();
    let init_m1 = r.init_m1.clone().unwrap_or_else(|| VectorC::zeros(n));
    let init_0 = r.init_0.clone().unwrap_or_else(|| {
        let mut v = VectorC::zeros(n);
        v[0] = Complex64::new(1.0, 0.0);
        v
    });
    if init_m1.len() != n || init_0.len() != n {
        return Err(CliError::Config(format!(
            "initial vectors must have length n = {n}"
        )));
    }

    let (result, norms, residual) = if let Some(forcing) = &r.forcing {
        // inhomogeneous matrix problem; initial data enters through the base
        // constants columnwise is out of scope for the CLI — use zero base
        let problem = voc::InhomogeneousProblem {
            family: fam.clone(),
            z,
            forcing: forcing.clone(),
            side,
            base: (linalg::zero(n), linalg::zero(n)),
        };
        let sol = voc::solve_inhomogeneous(&problem).map_err(num_err)?;
        let norms: Vec<f64> = (0..=sol.horizon as i64)
            .map(|jj| linalg::norm(sol.value(jj), r.norm).unwrap_or(f64::INFINITY))
            .collect();
        (
            json!({
                "mode": "inhomogeneous",
                "z": cpair(z),
                "side": side,
                "horizon": sol.horizon,
                "max_residual": sol.max_residual,
            }),
            norms,
            sol.max_residual,
        )
    } else {
        let sol = recurrence::solve_homogeneous(&fam, z, side, &init_m1, &init_0, j)
            .map_err(num_err)?;
        let norms: Vec<f64> = (0..=sol.horizon as i64).map(|jj| sol.value(jj).norm()).collect();
        (
            json!({
                "mode": "homogeneous",
                "z": cpair(z),
                "side": side,
                "horizon": sol.horizon,
                "max_residual": sol.max_residual,
                "superposition_defect": sol.superposition_defect,
            }),
            norms,
            sol.max_residual,
        )
    };
    let series = Series {
        name: "series_solution".into(),
        header: vec!["j".into(), "norm".into()],
        rows: norms
            .iter()
            .enumerate()
            .map(|(jj, nv)| vec![jj.to_string(), fmt_f(*nv)])
            .collect(),
    };
    let exit = if residual <= recurrence::TOL_REC {
        EXIT_OK
    } else {
        EXIT_VERDICT
    };
    Ok(CommandOutput {
        exit,
        summary: format!("solve: max residual {residual:.3e}"),
        config_echo: json!({"family": spec, "z": cpair(z), "j": j, "side": side}),
        result,
        series: vec![series],
    })
}

fn cmd_identities(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z = r.z.unwrap_or(Complex64::new(0.0, 0.0));
    let j = r.j.unwrap_or(50);
    let fs = recurrence::fundamental_system(&fam, z, j).map_err(num_err)?;
    let report = recurrence::check_identities(&fs, &fam, 0, j.saturating_sub(1))
        .map_err(num_err)?;
    let exit = if report.max_defect <= recurrence::TOL_REC {
        EXIT_OK
    } else {
        EXIT_VERDICT
    };
    Ok(CommandOutput {
        exit,
        summary: format!("identities: max scaled defect {:.3e}", report.max_defect),
        config_echo: json!({"family": spec, "z": cpair(z), "j": j}),
        result: serde_json::to_value(&report).map_err(num_err)?,
        series: vec![],
    })
}

fn cmd_voc_check(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z0 = r.z0.unwrap_or(Complex64::new(0.0, 0.0));
    let z = r
        .z
        .ok_or_else(|| CliError::Config("voc-check needs --z".into()))?;
    let j = r.j.unwrap_or(100);
    let k = r.k.unwrap_or(0);
    let side = r.side.unwrap_or(Side::Right);
    let fs0 = recurrence::fundamental_system(&fam, z0, j).map_err(num_err)?;
    let fs_z = recurrence::fundamental_system(&fam, z, j).map_err(num_err)?;
    let mut per = Vec::new();
    let mut max_defect = 0.0f64;
    for (label, kind) in [("P", FundamentalKind::P), ("Q", FundamentalKind::Q)] {
        let y = |jj: i64| -> MatrixC {
            match (kind, side) {
                (FundamentalKind::P, Side::Right) => fs_z.p(jj).clone(),
                (_, Side::Right) => fs_z.q(jj).clone(),
                (FundamentalKind::P, Side::Left) => fs_z.p_plus(jj).clone(),
                (_, Side::Left) => fs_z.q_plus(jj).clone(),
            }
        };
        let rep = voc::hellinger_representation(&fam, &fs0, &y, z, k, j, side)
            .map_err(num_err)?;
        max_defect = max_defect.max(rep.max_defect);
        per.push(json!({
            "solution": label,
            "k": rep.k,
            "max_defect": rep.max_defect,
        }));
    }
    let exit = if max_defect <= 1e-8 { EXIT_OK } else { EXIT_VERDICT };
    Ok(CommandOutput {
        exit,
        summary: format!("voc-check: max representation defect {max_defect:.3e}"),
        config_echo: json!({
            "family": spec, "z0": cpair(z0), "z": cpair(z),
            "k": k, "j": j, "side": side,
        }),
        result: json!({"max_defect": max_defect, "per_solution": per}),
        series: vec![],
    })
}

fn cmd_lp_scan(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z0 = r.z0.or(r.z).unwrap_or(Complex64::new(0.0, 0.0));
    let grid = if let Some(g) = &r.grid {
        g.clone()
    } else if r.grid_is_default {
        lp_analysis::default_z_grid(z0)
    } else {
        vec![z0]
    };
    let p = r.p.unwrap_or(2.0);
    let j = r.j.unwrap_or(2000);
    let settings = r.settings();
    let mut points = Vec::new();
    for &z in &grid {
        let trace = recurrence::norm_trace(&fam, z, j, r.norm).map_err(num_err)?;
        let right =
            lp_analysis::membership_from_trace(&trace, p, TailSide::Plain, &settings)
                .map_err(num_err)?;
        let tail = lp_analysis::tail_norm(&trace, p, 0, j, TailSide::Plain, &settings)
            .map_err(num_err)?;
        points.push(json!({
            "z": cpair(z),
            "verdict": right.verdict,
            "tail": tail,
            "first_family": right.first_family,
            "second_family": right.second_family,
            "truncated": right.truncated,
        }));
    }
    let summary = format!("lp-scan: {} grid points at p = {p}", grid.len());
    Ok(CommandOutput {
        exit: EXIT_OK,
        summary,
        config_echo: json!({
            "family": spec, "z0": cpair(z0), "p": p, "j": j,
            "grid_size": grid.len(),
        }),
        result: json!({"points": points}),
        series: vec![],
    })
}

fn cmd_hellinger(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z0 = r.z0.unwrap_or(Complex64::new(0.0, 0.0));
    let p = r.p.unwrap_or(2.0);
    let j = r.j.unwrap_or(2000);
    let grid = if let Some(g) = &r.grid {
        g.clone()
    } else {
        lp_analysis::default_z_grid(z0)
    };
    let settings = r.settings();
    let report = lp_analysis::hellinger_check(&fam, z0, p, &grid, j, &settings)
        .map_err(num_err)?;
    let all_ok = !report.vacuous
        && report.points.iter().all(|pt| {
            pt.error.is_none() && pt.bound_ok && pt.verdict == Verdict::AllInLp
        });
    let exit = if all_ok { EXIT_OK } else { EXIT_VERDICT };
    let summary = if report.vacuous {
        "hellinger: precondition failed (vacuous)".to_string()
    } else {
        format!(
            "hellinger: {}/{} grid points pass",
            report
                .points
                .iter()
                .filter(|pt| pt.error.is_none() && pt.bound_ok && pt.verdict == Verdict::AllInLp)
                .count(),
            report.points.len()
        )
    };
    Ok(CommandOutput {
        exit,
        summary,
        config_echo: json!({
            "family": spec, "z0": cpair(z0), "p": p, "j": j,
            "grid_size": grid.len(),
        }),
        result: serde_json::to_value(&report).map_err(num_err)?,
        series: vec![],
    })
}

fn cmd_perturb(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let p = r.p.unwrap_or(2.0);
    let j = r.j.unwrap_or(2000);
    let settings = r.settings();
    let (f_seq, label) = if let Some(forcing) = &r.forcing {
        (forcing.clone(), "file".to_string())
    } else if let Some(kind) = r.perturbation {
        (
            experiments::stock_perturbation(kind, fam.dim(), j),
            format!("{kind:?}").to_lowercase(),
        )
    } else {
        return Err(CliError::Config(
            "perturb needs --perturbation sine|linear or --forcing".into(),
        ));
    };
    let report = lp_analysis::perturbation_check(&fam, &f_seq, &f_seq, p, j, &settings)
        .map_err(num_err)?;
    let preserved = !report.precondition_violated
        && report.perturbed_right == Some(report.base_right)
        && report.perturbed_left == Some(report.base_left);
    let exit = if report.precondition_violated || preserved {
        EXIT_OK
    } else {
        EXIT_VERDICT
    };
    let summary = if report.precondition_violated {
        "perturb: rejected at the boundedness gate".to_string()
    } else {
        format!("perturb: verdicts preserved = {preserved}")
    };
    Ok(CommandOutput {
        exit,
        summary,
        config_echo: json!({"family": spec, "p": p, "j": j, "perturbation": label}),
        result: serde_json::to_value(&report).map_err(num_err)?,
        series: vec![],
    })
}

fn cmd_counterexample(r: &Resolved) -> Result<CommandOutput, CliError> {
    let n = r
        .family_spec
        .as_ref()
        .map(|s| match s {
            FamilySpec::Builtin { n, .. } | FamilySpec::Explicit { n, .. } => *n,
        })
        .unwrap_or(2);
    let j_exp = r.j_exponent.unwrap_or(10_000);
    let j_bdd = r.j_bounded.unwrap_or(1000);
    let p_list = r
        .p_list
        .clone()
        .unwrap_or_else(|| vec![1.0, 2.0, 2.1]);
    let settings = r.settings();
    let report = experiments::run_counterexample(n, j_exp, j_bdd, &p_list, &settings)
        .map_err(num_err)?;
    let sharp = experiments::counterexample_is_sharp(&report);
    let exit = if sharp { EXIT_OK } else { EXIT_VERDICT };
    Ok(CommandOutput {
        exit,
        summary: format!(
            "counterexample: exponents ({:.3}, {:.3}), sharp = {sharp}",
            report.p_fit.exponent, report.q_fit.exponent
        ),
        config_echo: json!({
            "n": n, "j_exponent": j_exp, "j_bounded": j_bdd, "p_list": p_list,
        }),
        result: serde_json::to_value(&report).map_err(num_err)?,
        series: vec![],
    })
}

fn cmd_oracle(r: &Resolved) -> Result<CommandOutput, CliError> {
    let (spec, fam) = r.family()?;
    let z = r.z.unwrap_or(Complex64::new(0.0, 0.0));
    let j = r.j.unwrap_or(50);
    let zr = exact::GaussRat::from_f64_pair(z.re, z.im)
        .ok_or_else(|| CliError::Config("oracle z must have finite parts".into()))?;
    let exact_seq = exact::exact_fundamental_at_rational(&fam, &zr, j).map_err(num_err)?;
    let float_seq = recurrence::fundamental_system(&fam, z, j).map_err(num_err)?;
    let mut max_rel = 0.0f64;
    let mut rows = Vec::new();
    for jj in 0..=(exact_seq.horizon.min(float_seq.horizon) as i64) {
        let mut rel_j = 0.0f64;
        for (ex, fl) in [
            (exact_seq.p(jj), float_seq.p(jj)),
            (exact_seq.q(jj), float_seq.q(jj)),
            (exact_seq.p_plus(jj), float_seq.p_plus(jj)),
            (exact_seq.q_plus(jj), float_seq.q_plus(jj)),
        ] {
            let exact_f = ex.to_matrixc();
            let scale = exact_f.norm().max(1.0);
            rel_j = rel_j.max((&exact_f - fl).norm() / scale);
        }
        max_rel = max_rel.max(rel_j);
        rows.push(vec![
            jj.to_string(),
            fmt_f(exact_seq.q(jj).max_abs_f64()),
            fmt_f(exact_seq.p(jj).max_abs_f64()),
            fmt_f(rel_j),
        ]);
    }
    let exit = if max_rel <= 1e-12 { EXIT_OK } else { EXIT_VERDICT };
    Ok(CommandOutput {
        exit,
        summary: format!("oracle: max float deviation {max_rel:.3e} over j ≤ {j}"),
        config_echo: json!({"family": spec, "z": cpair(z), "j": j}),
        result: json!({
            "horizon": exact_seq.horizon,
            "max_relative_deviation": max_rel,
        }),
        series: vec![Series {
            name: "series_oracle".into(),
            header: vec![
                "j".into(),
                "q_exact_max_abs".into(),
                "p_exact_max_abs".into(),
                "float_relative_deviation".into(),
            ],
            rows,
        }],
    })
}

fn write_series(dir: &Path, series: &Series) -> Result<(), CliError> {
    let path = dir.join(format!("{}.csv", series.name));
    let mut w = csv::Writer::from_path(&path).map_err(cfg_err)?;
    w.write_record(&series.header).map_err(cfg_err)?;
    for row in &series.rows {
        w.write_record(row).map_err(cfg_err)?;
    }
    w.flush().map_err(cfg_err)?;
    Ok(())
}

fn init_threads() {
    let threads = std::env::var("HELLINGER_KIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(k) = threads {
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global();
    }
}

/// Parses `argv`, runs the requested command, writes the report bundle,
/// and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version through this path with code 0
            if e.use_stderr() {
                eprintln!(
                    "{}",
                    json!({"error": {"code": EXIT_CONFIG, "kind": "config", "message": e.to_string()}})
                );
                return EXIT_CONFIG;
            }
            print!("{e}");
            return EXIT_OK;
        }
    };
    init_threads();
    let name = cli.command.name();
    let resolved = match resolve(cli.command.opts()) {
        Ok(r) => r,
        Err(e) => return emit_error(&e),
    };
    let outcome = match name {
        "recur" => cmd_recur(&resolved),
        "solve" => cmd_solve(&resolved),
        "identities" => cmd_identities(&resolved),
        "voc-check" => cmd_voc_check(&resolved),
        "lp-scan" => cmd_lp_scan(&resolved),
        "hellinger" => cmd_hellinger(&resolved),
        "perturb" => cmd_perturb(&resolved),
        "counterexample" => cmd_counterexample(&resolved),
        "oracle" => cmd_oracle(&resolved),
        _ => unreachable!(),
    };
    let output = match outcome {
        Ok(o) => o,
        Err(e) => return emit_error(&e),
    };

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = json!({
        "schema": 1,
        "command": name,
        "timestamp": timestamp,
        "meta": {
            "name": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
        },
        "config": output.config_echo,
        "exit_code": output.exit,
        "result": output.result,
    });
    let rendered = match serde_json::to_string_pretty(&report) {
        Ok(s) => s,
        Err(e) => return emit_error(&num_err(e)),
    };

    if let Some(dir) = &resolved.out {
        if let Err(e) = fs::create_dir_all(dir).map_err(cfg_err) {
            return emit_error(&e);
        }
        if let Err(e) = fs::write(dir.join("report.json"), rendered.as_bytes()).map_err(cfg_err) {
            return emit_error(&e);
        }
        for s in &output.series {
            if let Err(e) = write_series(dir, s) {
                return emit_error(&e);
            }
        }
        println!("{}", output.summary);
    } else {
        println!("{rendered}");
        eprintln!("{}", output.summary);
    }
    output.exit
}

fn emit_error(e: &CliError) -> i32 {
    eprintln!(
        "{}",
        json!({"error": {"code": e.code(), "kind": e.kind(), "message": e.message()}})
    );
    e.code()
}
