//! Batch front end: a flat `key = value` run configuration, the commands
//! that execute it, and CSV rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Parser;
use log::{info, warn};

use crate::analysis::classify_existence;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::mesh::Mesh;
use crate::nonlinearity::NonlinearitySpec;
use crate::params::CollocationParameters;
use crate::postprocess::{apply_volterra, convergence_sweep, parameter_grid, CaseTag, PowerLaw, SweepResult};
use crate::problem::{make_problem, SolverOptions};
use crate::solver::solve;
use crate::{Options, Problem};

#[derive(Debug, Parser)]
#[command(name = "volcol", about = "Nontrivial collocation solutions of homogeneous Volterra equations")]
pub struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// CSV destination; overrides `out` in the config. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps, 0 picks automatically.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Classify,
    ReproduceTable1,
    ReproduceTable2,
}

impl Command {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Command::Solve,
            "sweep" => Command::Sweep,
            "classify" => Command::Classify,
            "reproduce-table1" => Command::ReproduceTable1,
            "reproduce-table2" => Command::ReproduceTable2,
            _ => return Err(Error::Config(format!("unknown command '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    /// `k(u) = u^a`.
    PowerConvolution { a: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearityChoice {
    /// `G(y) = y^{1/b}`.
    PowerRoot { b: f64 },
    /// `G(y) = y^p`.
    Power { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseChoice {
    One,
    Two,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub kernel: KernelChoice,
    pub nonlinearity: NonlinearityChoice,
    pub end: f64,
    pub steps: Option<usize>,
    pub step: Option<f64>,
    pub case: CaseChoice,
    /// Collocation parameters as given; case 2 may omit `c1`.
    pub c: Vec<f64>,
    pub sweep_h: Vec<f64>,
    pub c_min: f64,
    pub c_max: f64,
    pub c_step: f64,
    pub options: Options,
    pub out: Option<PathBuf>,
    /// Points of the `y_h` grid written by `solve`.
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            kernel: KernelChoice::PowerConvolution { a: 1.0 },
            nonlinearity: NonlinearityChoice::PowerRoot { b: 2.0 },
            end: 1.0,
            steps: None,
            step: None,
            case: CaseChoice::One,
            c: Vec::new(),
            sweep_h: vec![0.1, 0.01, 0.001],
            c_min: 0.01,
            c_max: 1.0,
            c_step: 0.001,
            options: SolverOptions::default(),
            out: None,
            samples: 101,
        }
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key '{key}'")));
            }
        }

        let mut cfg = RunConfig::default();
        let command = entries
            .get("command")
            .ok_or_else(|| Error::Config("missing 'command'".into()))?;
        cfg.command = Command::parse(command)?;

        let get = |k: &str| entries.get(k).map(String::as_str);
        let kernel_a = get("kernel.a").map(|v| number::<f64>("kernel.a", v)).transpose()?;
        let kernel_value = get("kernel.value").map(|v| number::<f64>("kernel.value", v)).transpose()?;
        cfg.kernel = match get("kernel").unwrap_or("power_convolution") {
            "power_convolution" => KernelChoice::PowerConvolution { a: kernel_a.unwrap_or(1.0) },
            "constant" => KernelChoice::Constant { value: kernel_value.unwrap_or(1.0) },
            other => return Err(Error::Config(format!("unknown kernel '{other}'"))),
        };
        let g_b = get("G.b").map(|v| number::<f64>("G.b", v)).transpose()?;
        let g_p = get("G.p").map(|v| number::<f64>("G.p", v)).transpose()?;
        cfg.nonlinearity = match get("nonlinearity").unwrap_or("power_root") {
            "power_root" => NonlinearityChoice::PowerRoot { b: g_b.unwrap_or(2.0) },
            "power" => NonlinearityChoice::Power {
                p: g_p.ok_or_else(|| Error::Config("nonlinearity power needs G.p".into()))?,
            },
            other => return Err(Error::Config(format!("unknown nonlinearity '{other}'"))),
        };

        let mut c_values = BTreeMap::new();
        let mut m = None;
        for (key, value) in &entries {
            let key = key.as_str();
            match key {
                "command" | "kernel" | "kernel.a" | "kernel.value" | "nonlinearity" | "G.b" | "G.p" => {}
                "T" => cfg.end = number(key, value)?,
                "mesh.N" => cfg.steps = Some(number(key, value)?),
                "mesh.h" => cfg.step = Some(number(key, value)?),
                "case" => {
                    cfg.case = match value.as_str() {
                        "1" => CaseChoice::One,
                        "2" => CaseChoice::Two,
                        "general" => CaseChoice::General,
                        _ => return Err(Error::Config(format!("case must be 1, 2 or general, got '{value}'"))),
                    }
                }
                "m" => m = Some(number::<usize>(key, value)?),
                "sweep.h" => {
                    cfg.sweep_h = value
                        .split(',')
                        .map(|v| number(key, v.trim()))
                        .collect::<Result<_>>()?
                }
                "sweep.c_min" => cfg.c_min = number(key, value)?,
                "sweep.c_max" => cfg.c_max = number(key, value)?,
                "sweep.c_step" => cfg.c_step = number(key, value)?,
                "solver.quad_nodes" => cfg.options.quad_nodes = number(key, value)?,
                "solver.root_tol" => cfg.options.root_tol = number(key, value)?,
                "solver.scan_floor" => cfg.options.scan_floor = number(key, value)?,
                "solver.scan_cap_factor" => cfg.options.scan_cap_factor = number(key, value)?,
                "solver.scan_ratio" => cfg.options.scan_ratio = number(key, value)?,
                "solver.scan_refinement" => cfg.options.scan_refinement = number(key, value)?,
                "solver.damping" => cfg.options.damping = number(key, value)?,
                "solver.max_iterations" => cfg.options.max_iterations = number(key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "solve.samples" => cfg.samples = number(key, value)?,
                _ => {
                    let index = key
                        .strip_prefix('c')
                        .and_then(|i| i.parse::<usize>().ok())
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?;
                    c_values.insert(index, number::<f64>(key, value)?);
                }
            }
        }

        if cfg.case == CaseChoice::Two && !c_values.contains_key(&1) {
            c_values.insert(1, 0.0);
        }
        for (expected, &index) in (1..).zip(c_values.keys()) {
            if index != expected {
                return Err(Error::Config(format!("c{expected} is missing")));
            }
        }
        cfg.c = c_values.into_values().collect();
        if let Some(m) = m {
            if !cfg.c.is_empty() && m != cfg.c.len() {
                return Err(Error::Config(format!("m = {m} but {} c values given", cfg.c.len())));
            }
        }
        if cfg.steps.is_some() && cfg.step.is_some() {
            return Err(Error::Config("give mesh.N or mesh.h, not both".into()));
        }
        Ok(cfg)
    }

    fn kernel(&self) -> Result<KernelSpec<f64>> {
        match self.kernel {
            KernelChoice::PowerConvolution { a } => KernelSpec::power_convolution(a),
            KernelChoice::Constant { value } => Ok(KernelSpec::constant(value)),
        }
    }

    fn nonlinearity(&self) -> Result<NonlinearitySpec<f64>> {
        match self.nonlinearity {
            NonlinearityChoice::PowerRoot { b } => NonlinearitySpec::power_root(b),
            NonlinearityChoice::Power { p } => NonlinearitySpec::power(p),
        }
    }

    fn params(&self) -> Result<CollocationParameters<f64>> {
        if self.c.is_empty() {
            return Err(Error::Config("no collocation parameters (c1, c2, ...)".into()));
        }
        let params = CollocationParameters::new(self.c.clone())?;
        let fits = match self.case {
            CaseChoice::One => params.m() == 1,
            CaseChoice::Two => params.m() == 2 && params.c()[0] == 0.0,
            CaseChoice::General => true,
        };
        if !fits {
            return Err(Error::InvalidParams(format!(
                "parameters {:?} do not fit case {:?}",
                params.c(),
                self.case
            )));
        }
        Ok(params)
    }

    fn mesh(&self) -> Result<Mesh<f64>> {
        match (self.steps, self.step) {
            (Some(n), None) => Mesh::uniform(self.end, n),
            (None, Some(h)) => Mesh::with_step(self.end, h),
            _ => Err(Error::Config("mesh needs mesh.N or mesh.h".into())),
        }
    }

    /// The problem described by the config. Sweeps replace mesh and
    /// parameters per row.
    pub fn problem(&self) -> Result<Problem> {
        make_problem(
            self.kernel()?,
            self.nonlinearity()?,
            self.mesh()?,
            self.params()?,
            self.options.clone(),
        )
    }

    fn sweep_case(&self) -> Result<CaseTag> {
        match self.case {
            CaseChoice::One => Ok(CaseTag::One),
            CaseChoice::Two => Ok(CaseTag::Two),
            CaseChoice::General => Err(Error::Config("sweeps need case 1 or 2".into())),
        }
    }

    /// Closed-form solution when the kernel and nonlinearity form a power pair.
    fn reference(&self) -> Result<PowerLaw<f64>> {
        let a = match self.kernel {
            KernelChoice::PowerConvolution { a } => a,
            KernelChoice::Constant { value: 1.0 } => 0.0,
            _ => return Err(Error::Config("no closed-form reference for this kernel".into())),
        };
        let b = match self.nonlinearity {
            NonlinearityChoice::PowerRoot { b } => b,
            NonlinearityChoice::Power { p } if p > 0.0 && p < 1.0 => 1.0 / p,
            _ => return Err(Error::Config("no closed-form reference for this nonlinearity".into())),
        };
        if a == 0.0 {
            return Err(Error::Config("no closed-form reference for this kernel".into()));
        }
        PowerLaw::for_power_pair(a, b)
    }

    fn reproduce(table: Command) -> Self {
        Self {
            command: table,
            case: if table == Command::ReproduceTable1 { CaseChoice::One } else { CaseChoice::Two },
            ..Self::default()
        }
    }
}

/// Exit status for a failed run: 1 for configuration problems, 2 for solver
/// failures.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_solver_error() {
        2
    } else {
        1
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn solve_csv(cfg: &RunConfig) -> Result<String> {
    let problem = cfg.problem()?;
    let sol = solve(&problem)?;
    let mut out = String::from("n,i,t,z\n");
    for (n, row) in sol.coefficients.iter().enumerate() {
        for (i, &z) in row.iter().enumerate() {
            let t = problem.collocation_point(n, i);
            writeln!(out, "{n},{},{},{}", i + 1, fmt(t), fmt(z)).unwrap();
        }
    }
    out.push_str("\nt,y_h\n");
    let samples = cfg.samples.max(2);
    let end = problem.mesh.end();
    for k in 0..samples {
        let t = if k + 1 == samples { end } else { end * k as f64 / (samples - 1) as f64 };
        writeln!(out, "{},{}", fmt(t), fmt(apply_volterra(&problem, &sol, t)?)).unwrap();
    }
    info!("solved {} steps with m = {}", problem.mesh.steps(), problem.m());
    Ok(out)
}

fn sweep(cfg: &RunConfig) -> Result<SweepResult<f64>> {
    let case = cfg.sweep_case()?;
    let reference = cfg.reference()?;
    let grid = parameter_grid(cfg.c_min, cfg.c_max, cfg.c_step)?;
    let first = *cfg
        .sweep_h
        .first()
        .ok_or_else(|| Error::Config("sweep.h is empty".into()))?;
    let base = make_problem(
        cfg.kernel()?,
        cfg.nonlinearity()?,
        Mesh::with_step(cfg.end, first)?,
        case.params(grid[0])?,
        cfg.options.clone(),
    )?;
    convergence_sweep(&base, &cfg.sweep_h, &grid, case, |t| reference.eval(t))
}

pub fn sweep_csv(result: &SweepResult<f64>) -> String {
    let mut out = String::from("case,m,h,c,relative_error,status\n");
    for row in &result.rows {
        let (value, status) = match &row.result {
            Ok(e) => (fmt(*e), "ok".to_string()),
            Err(err) => (String::new(), err.to_string().replace(',', ";")),
        };
        writeln!(out, "{},{},{},{},{value},{status}", row.case.label(), row.m, fmt(row.h), fmt(row.c)).unwrap();
    }
    out.push_str("\nh,min_c,min_error,max_c,max_error\n");
    for o in result.optima() {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt(o.h),
            fmt(o.min_c),
            fmt(o.min_error),
            fmt(o.max_c),
            fmt(o.max_error)
        )
        .unwrap();
    }
    out
}

/// Reference optima, as `(h, max error, argmax c, min error, argmin c)`.
pub const TABLE_ONE: [(f64, f64, f64, f64, f64); 3] = [
    (0.1, 2.1, 1.0, 2.5e-2, 0.25),
    (0.01, 3.2e-1, 1.0, 3.4e-3, 0.175),
    (0.001, 4.1e-2, 1.0, 3.4e-4, 0.168),
];
pub const TABLE_TWO: [(f64, f64, f64, f64, f64); 3] = [
    (0.1, 4.2e-1, 0.01, 1.5e-3, 0.358),
    (0.01, 5.2e-2, 0.01, 1.4e-5, 0.369),
    (0.001, 5.4e-3, 0.01, 1.4e-7, 0.37),
];
pub const VALUE_TOLERANCE: f64 = 0.15;
pub const ARG_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub h: f64,
    /// `max` or `min`.
    pub quantity: &'static str,
    pub c: f64,
    pub value: f64,
    pub target_c: f64,
    pub target_value: f64,
}

impl TableCell {
    pub fn value_ok(&self) -> bool {
        ((self.value - self.target_value) / self.target_value).abs() <= VALUE_TOLERANCE
    }

    pub fn arg_ok(&self) -> bool {
        (self.c - self.target_c).abs() <= ARG_TOLERANCE + 1e-12
    }

    pub fn passed(&self) -> bool {
        self.value_ok() && self.arg_ok()
    }
}

/// Compares sweep optima with a published table. A missing `h` row yields
/// NaN cells, which fail.
pub fn table_cells(result: &SweepResult<f64>, table: &[(f64, f64, f64, f64, f64)]) -> Vec<TableCell> {
    let mut cells = Vec::new();
    for &(h, max_e, max_c, min_e, min_c) in table {
        let o = result.optimum(h);
        let pick = |f: fn(&crate::postprocess::Optimum<f64>) -> (f64, f64)| o.as_ref().map(f).unwrap_or((f64::NAN, f64::NAN));
        let (c, value) = pick(|o| (o.max_c, o.max_error));
        cells.push(TableCell { h, quantity: "max", c, value, target_c: max_c, target_value: max_e });
        let (c, value) = pick(|o| (o.min_c, o.min_error));
        cells.push(TableCell { h, quantity: "min", c, value, target_c: min_c, target_value: min_e });
    }
    cells
}

pub fn reproduce(table: Command) -> Result<Vec<TableCell>> {
    let cfg = RunConfig::reproduce(table);
    let target = if table == Command::ReproduceTable1 { &TABLE_ONE } else { &TABLE_TWO };
    Ok(table_cells(&sweep(&cfg)?, target))
}

pub fn table_csv(cells: &[TableCell]) -> String {
    let mut out = String::from("h,quantity,c,relative_error,target_c,target_error,status\n");
    for cell in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(cell.h),
            cell.quantity,
            fmt(cell.c),
            fmt(cell.value),
            fmt(cell.target_c),
            fmt(cell.target_value),
            if cell.passed() { "pass" } else { "fail" }
        )
        .unwrap();
    }
    out
}

/// Executes the configured command and returns the CSV text.
pub fn run(cfg: &RunConfig) -> Result<String> {
    match cfg.command {
        Command::Solve => solve_csv(cfg),
        Command::Sweep => {
            let result = sweep(cfg)?;
            for o in result.optima() {
                info!(
                    "h = {}: min {:.3e} at c = {}, max {:.3e} at c = {}",
                    o.h, o.min_error, o.min_c, o.max_error, o.max_c
                );
            }
            Ok(sweep_csv(&result))
        }
        Command::Classify => {
            let report = classify_existence(&cfg.kernel()?, &cfg.nonlinearity()?, &cfg.params()?);
            let mut out = String::from("key,value\n");
            for (k, v) in report.rows() {
                writeln!(out, "{k},{}", v.replace(',', ";")).unwrap();
            }
            Ok(out)
        }
        Command::ReproduceTable1 | Command::ReproduceTable2 => {
            let cells = reproduce(cfg.command)?;
            for cell in cells.iter().filter(|c| !c.passed()) {
                warn!(
                    "h = {} {}: {:.3e} at c = {} (expected {:.3e} at c = {})",
                    cell.h, cell.quantity, cell.value, cell.c, cell.target_value, cell.target_c
                );
            }
            Ok(table_csv(&cells))
        }
    }
}

/// Entry point behind `main`; returns the process exit status.
pub fn execute(cli: &Cli) -> i32 {
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            warn!("thread pool: {e}");
        }
    }
    let outcome = std::fs::read_to_string(&cli.config)
        .map_err(Error::from)
        .and_then(|text| RunConfig::parse(&text))
        .and_then(|cfg| {
            let csv = run(&cfg)?;
            match cli.out.as_ref().or(cfg.out.as_ref()) {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
