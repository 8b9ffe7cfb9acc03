//! Batch studies: single solves, N-sweeps, and eps-sweeps with CSV output.
//!
//! A study runs a list of (N, eps) cases through the solver, writes one CSV
//! row per case, and after an N-sweep appends convergence-order summaries
//! in both the (N^-1 ln N)^k and N^-k models. Output is deterministic:
//! identical specs produce byte-identical CSV bodies. All driver-level
//! computation is pinned to f64.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::{
    self, analytic_clamped_solution, manufactured_solution, ErrorReport, ExactSolution,
    PolyExpLoad, RateModel,
};
use crate::mesh::Mesh;
use crate::system::{self, BoundaryData, ProblemConfig};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure at N={n}, eps={eps}: {message}")]
    Numerical { n: usize, eps: f64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StudyError {
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::Invalid(_) => 2,
            StudyError::Numerical { .. } => 3,
            StudyError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Single,
    NSweep,
    EpsSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshChoice {
    Uniform,
    Shishkin1,
    Shishkin2,
}

impl MeshChoice {
    pub fn name(self) -> &'static str {
        match self {
            MeshChoice::Uniform => "uniform",
            MeshChoice::Shishkin1 => "shishkin1",
            MeshChoice::Shishkin2 => "shishkin2",
        }
    }

    fn build(self, n: usize, sigma: f64, eps: f64) -> Result<Mesh<f64>, StudyError> {
        let m = match self {
            MeshChoice::Uniform => Mesh::uniform(n),
            MeshChoice::Shishkin1 => Mesh::shishkin_one_sided(n, sigma, eps),
            MeshChoice::Shishkin2 => Mesh::shishkin_two_sided(n, sigma, eps),
        };
        m.map_err(|e| StudyError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemChoice {
    Manufactured,
    ConstantLoad(f64),
    Custom { poly: Vec<f64>, exp_coeff: f64 },
}

impl ProblemChoice {
    /// Accepted forms: `manufactured`, `constant:<c>`, and
    /// `custom:<c0,c1,...>[;exp:<c>]` for f = poly + c e^x.
    pub fn parse(s: &str) -> Result<Self, StudyError> {
        if s == "manufactured" {
            return Ok(ProblemChoice::Manufactured);
        }
        if let Some(rest) = s.strip_prefix("constant:") {
            let c: f64 = rest
                .parse()
                .map_err(|_| StudyError::Invalid(format!("bad constant load value '{rest}'")))?;
            return Ok(ProblemChoice::ConstantLoad(c));
        }
        if let Some(rest) = s.strip_prefix("custom:") {
            let (poly_part, exp_part) = match rest.split_once(";exp:") {
                Some((a, b)) => (a, Some(b)),
                None => (rest, None),
            };
            let poly = poly_part
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| StudyError::Invalid(format!("bad coefficient '{t}'")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if poly.len() > 4 {
                return Err(StudyError::Invalid(
                    "custom polynomial load must have degree at most 3".into(),
                ));
            }
            let exp_coeff = match exp_part {
                Some(t) => t
                    .parse()
                    .map_err(|_| StudyError::Invalid(format!("bad exponential coefficient '{t}'")))?,
                None => 0.0,
            };
            return Ok(ProblemChoice::Custom { poly, exp_coeff });
        }
        Err(StudyError::Invalid(format!(
            "unknown problem '{s}' (expected manufactured, constant:<c>, or custom:<coeffs>[;exp:<c>])"
        )))
    }

    fn build(&self, eps: f64) -> Result<(ExactSolution<f64>, BoundaryData<f64>), StudyError> {
        let numerical = |e: analysis::AnalysisError| StudyError::Numerical {
            n: 0,
            eps,
            message: e.to_string(),
        };
        match self {
            ProblemChoice::Manufactured => {
                let exact = manufactured_solution(eps);
                let bc = exact.bc();
                Ok((exact, bc))
            }
            ProblemChoice::ConstantLoad(c) => {
                let exact =
                    analytic_clamped_solution(eps, PolyExpLoad::constant(*c), BoundaryData::homogeneous())
                        .map_err(numerical)?;
                Ok((exact, BoundaryData::homogeneous()))
            }
            ProblemChoice::Custom { poly, exp_coeff } => {
                let load = PolyExpLoad {
                    poly: poly.clone(),
                    exp_coeff: *exp_coeff,
                };
                let exact = analytic_clamped_solution(eps, load, BoundaryData::homogeneous())
                    .map_err(numerical)?;
                Ok((exact, BoundaryData::homogeneous()))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub mode: StudyMode,
    pub mesh: MeshChoice,
    pub p: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub eps_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub problem: ProblemChoice,
    pub quad_extra: usize,
    pub plot_data: Option<PathBuf>,
}

impl Default for StudySpec {
    fn default() -> Self {
        StudySpec {
            mode: StudyMode::Single,
            mesh: MeshChoice::Shishkin1,
            p: 3,
            sigma: 4.0,
            lambda: 3.0,
            eps_list: vec![1e-2],
            n_list: vec![16],
            problem: ProblemChoice::Manufactured,
            quad_extra: 4,
            plot_data: None,
        }
    }
}

impl StudySpec {
    pub fn validate(&self) -> Result<(), StudyError> {
        if self.p < 3 {
            return Err(StudyError::Invalid(format!(
                "degree must be >= 3, got {}",
                self.p
            )));
        }
        if self.p > 32 {
            return Err(StudyError::Invalid(format!(
                "degree must be at most 32, got {}",
                self.p
            )));
        }
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(StudyError::Invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.lambda < 3.0 || !self.lambda.is_finite() {
            return Err(StudyError::Invalid(format!(
                "lambda must be at least 3, got {}",
                self.lambda
            )));
        }
        if self.eps_list.is_empty() || self.n_list.is_empty() {
            return Err(StudyError::Invalid("empty parameter list".into()));
        }
        for &eps in &self.eps_list {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(StudyError::Invalid(format!(
                    "eps must lie in (0, 1], got {eps}"
                )));
            }
        }
        for &n in &self.n_list {
            let (div, label) = match self.mesh {
                MeshChoice::Uniform => (1, ""),
                MeshChoice::Shishkin1 => (2, "divisibility by 2"),
                MeshChoice::Shishkin2 => (4, "divisibility by 4"),
            };
            if n == 0 || n % div != 0 {
                return Err(StudyError::Invalid(format!(
                    "N={n} invalid for mesh {}: needs {label}",
                    self.mesh.name()
                )));
            }
        }
        match self.mode {
            StudyMode::Single => {
                if self.n_list.len() != 1 || self.eps_list.len() != 1 {
                    return Err(StudyError::Invalid(
                        "single mode takes exactly one N and one eps".into(),
                    ));
                }
            }
            StudyMode::NSweep => {
                if self.eps_list.len() != 1 {
                    return Err(StudyError::Invalid(
                        "n_sweep takes exactly one eps".into(),
                    ));
                }
            }
            StudyMode::EpsSweep => {
                if self.n_list.len() != 1 {
                    return Err(StudyError::Invalid(
                        "eps_sweep takes exactly one N".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn cases(&self) -> Vec<(usize, f64)> {
        match self.mode {
            StudyMode::Single => vec![(self.n_list[0], self.eps_list[0])],
            StudyMode::NSweep => self
                .n_list
                .iter()
                .map(|&n| (n, self.eps_list[0]))
                .collect(),
            StudyMode::EpsSweep => self
                .eps_list
                .iter()
                .map(|&e| (self.n_list[0], e))
                .collect(),
        }
    }
}

/// Dyadic range `a..b` (a, 2a, 4a, ..., b) or comma-separated list.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>, StudyError> {
    if let Some((a, b)) = s.split_once("..") {
        let start: usize = a
            .trim()
            .parse()
            .map_err(|_| StudyError::Invalid(format!("bad range start '{a}'")))?;
        let end: usize = b
            .trim()
            .parse()
            .map_err(|_| StudyError::Invalid(format!("bad range end '{b}'")))?;
        if start == 0 || end < start {
            return Err(StudyError::Invalid(format!("bad dyadic range '{s}'")));
        }
        let mut out = Vec::new();
        let mut n = start;
        while n < end {
            out.push(n);
            n *= 2;
        }
        if n != end {
            return Err(StudyError::Invalid(format!(
                "range end {end} is not {start} times a power of two"
            )));
        }
        out.push(end);
        Ok(out)
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| StudyError::Invalid(format!("bad element count '{t}'")))
            })
            .collect()
    }
}

/// Log-spaced range `e^a..e^b:k` (k + 1 values) or comma-separated list.
pub fn parse_eps_list(s: &str) -> Result<Vec<f64>, StudyError> {
    if let Some(rest) = s.strip_prefix("e^") {
        let (range, count) = rest
            .split_once(':')
            .ok_or_else(|| StudyError::Invalid(format!("eps range '{s}' needs ':k' suffix")))?;
        let (a, b) = range
            .split_once("..e^")
            .ok_or_else(|| StudyError::Invalid(format!("bad eps range '{s}'")))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| StudyError::Invalid(format!("bad exponent '{a}'")))?;
        let b: f64 = b
            .trim()
            .parse()
            .map_err(|_| StudyError::Invalid(format!("bad exponent '{b}'")))?;
        let k: usize = count
            .trim()
            .parse()
            .map_err(|_| StudyError::Invalid(format!("bad eps count '{count}'")))?;
        if k == 0 {
            return Err(StudyError::Invalid("eps range needs k >= 1".into()));
        }
        Ok((0..=k)
            .map(|i| (a + (b - a) * i as f64 / k as f64).exp())
            .collect())
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| StudyError::Invalid(format!("bad eps value '{t}'")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CaseResult {
    pub n: usize,
    pub eps: f64,
    pub tau: f64,
    pub dofs: usize,
    pub report: ErrorReport<f64>,
    pub residual: f64,
    pub cond_est: f64,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub rows: Vec<CaseResult>,
}

const ERROR_COLUMNS: [&str; 6] = [
    "err_u_L2",
    "err_u_dd",
    "err_v_L2",
    "err_v_dd",
    "balanced",
    "energy_standard",
];

fn column_value(r: &CaseResult, col: &str) -> f64 {
    match col {
        "err_u_L2" => r.report.err_u_l2,
        "err_u_dd" => r.report.err_u_dd,
        "err_v_L2" => r.report.err_v_l2,
        "err_v_dd" => r.report.err_v_dd,
        "balanced" => r.report.balanced,
        "energy_standard" => r.report.energy_standard,
        _ => unreachable!("unknown column {col}"),
    }
}

fn run_case(spec: &StudySpec, n: usize, eps: f64) -> Result<CaseResult, StudyError> {
    let mesh = spec.mesh.build(n, spec.sigma, eps)?;
    let tau = mesh.tau();
    let (exact, bc) = spec.problem.build(eps).map_err(|e| match e {
        StudyError::Numerical { message, .. } => StudyError::Numerical { n, eps, message },
        other => other,
    })?;
    let config = ProblemConfig::new(mesh, spec.p, eps, spec.lambda, exact.load_fn(), bc)
        .map_err(|e| StudyError::Invalid(e.to_string()))?
        .with_load_quad_extra(spec.quad_extra);
    let sol = system::solve_bvp(&config).map_err(|e| StudyError::Numerical {
        n,
        eps,
        message: e.to_string(),
    })?;
    let report =
        analysis::error_norms(&sol.u_h, &sol.v_h, &exact).map_err(|e| StudyError::Numerical {
            n,
            eps,
            message: e.to_string(),
        })?;
    let result = CaseResult {
        n,
        eps,
        tau,
        dofs: sol.stats.n_unknowns,
        report,
        residual: sol.stats.residual,
        cond_est: sol.stats.cond_est,
    };
    let finite = [
        report.err_u_l2,
        report.err_u_dd,
        report.err_v_l2,
        report.err_v_dd,
        report.balanced,
        report.energy_standard,
        result.residual,
    ]
    .iter()
    .all(|x| x.is_finite());
    if !finite {
        return Err(StudyError::Numerical {
            n,
            eps,
            message: "non-finite error norms".into(),
        });
    }
    Ok(result)
}

fn write_row(out: &mut dyn Write, r: &CaseResult) -> Result<(), StudyError> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.n,
        r.eps,
        r.tau,
        r.dofs,
        r.report.err_u_l2,
        r.report.err_u_dd,
        r.report.err_v_l2,
        r.report.err_v_dd,
        r.report.balanced,
        r.report.energy_standard,
        r.residual,
        r.cond_est
    )?;
    Ok(())
}

fn write_order_block(
    out: &mut dyn Write,
    rows: &[CaseResult],
    model: RateModel,
) -> Result<(), StudyError> {
    let tag = match model {
        RateModel::NLogN => "NlogN",
        RateModel::N => "N",
    };
    for col in ERROR_COLUMNS {
        // skip values already at the round-off plateau of the linear solve
        let usable: Vec<(usize, f64)> = rows
            .iter()
            .map(|r| (r.n, column_value(r, col)))
            .zip(rows)
            .filter(|((_, e), r)| *e > 100.0 * r.residual && *e > 0.0)
            .map(|(pair, _)| pair)
            .collect();
        if usable.len() < 3 {
            writeln!(out, "# orders(model={tag}): {col}: insufficient usable points")?;
            continue;
        }
        let ns: Vec<usize> = usable.iter().map(|(n, _)| *n).collect();
        let errs: Vec<f64> = usable.iter().map(|(_, e)| *e).collect();
        let est = analysis::estimate_orders(&ns, &errs, model)
            .map_err(|e| StudyError::Invalid(e.to_string()))?;
        let mut steps = String::new();
        for (i, k) in est.per_step.iter().enumerate() {
            if i > 0 {
                steps.push(',');
            }
            let _ = write!(steps, "{k}");
        }
        writeln!(
            out,
            "# orders(model={tag}): {col}: per-step = {steps}; slope = {}",
            est.slope
        )?;
    }
    Ok(())
}

fn write_plot_data(spec: &StudySpec, rows: &[CaseResult]) -> Result<(), StudyError> {
    let Some(dir) = &spec.plot_data else {
        return Ok(());
    };
    fs::create_dir_all(dir)?;
    for col in ERROR_COLUMNS {
        let mut body = String::new();
        for r in rows {
            let abscissa = match spec.mode {
                StudyMode::EpsSweep => 1.0 / r.eps,
                _ => r.n as f64,
            };
            let _ = writeln!(body, "{} {}", abscissa, column_value(r, col));
        }
        fs::write(dir.join(format!("{col}.dat")), body)?;
    }
    Ok(())
}

/// Run every case of the spec, streaming CSV to `out`. On a numerical
/// failure the partial CSV ends with a `# failure:` marker row and the
/// error is returned for exit-code mapping.
pub fn run_study(spec: &StudySpec, out: &mut dyn Write) -> Result<StudyOutput, StudyError> {
    spec.validate()?;
    writeln!(
        out,
        "# shellfem v1, mesh={}, p={}, sigma={}, lambda={}",
        spec.mesh.name(),
        spec.p,
        spec.sigma,
        spec.lambda
    )?;
    writeln!(
        out,
        "N,eps,tau,dofs,err_u_L2,err_u_dd,err_v_L2,err_v_dd,balanced,energy_standard,residual,cond_est"
    )?;
    let mut rows = Vec::new();
    for (n, eps) in spec.cases() {
        match run_case(spec, n, eps) {
            Ok(row) => {
                write_row(out, &row)?;
                rows.push(row);
            }
            Err(e) => {
                if let StudyError::Numerical { n, eps, message } = &e {
                    writeln!(out, "# failure: N={n} eps={eps} {message}")?;
                    out.flush()?;
                }
                return Err(e);
            }
        }
    }
    if spec.mode == StudyMode::NSweep && rows.len() >= 3 {
        write_order_block(out, &rows, RateModel::NLogN)?;
        write_order_block(out, &rows, RateModel::N)?;
    }
    out.flush()?;
    write_plot_data(spec, &rows)?;
    Ok(StudyOutput { rows })
}
