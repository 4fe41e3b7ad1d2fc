//! Command-line front end: tabulation commands, correlator runs and axiom reports.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::axiom_suite::{
    check_covariance, check_cluster, check_gamma_map, check_hermiticity, check_locality, check_positivity,
    check_representation, check_s_add, check_spectral, ClusterSetup, RepresentationCase, Report,
};
use crate::config::RunConfig;
use crate::correlators::{two_point_kernel, eval_w_partial, CorrelatorConfig, MultiIndex, TruncationVector};
use crate::error::{Error, Result};
use crate::form_factors::{form_factor, OperatorSpec};
use crate::minkowski::{GaussianPacket, ProductTestFunction, TwoVector};
use crate::scattering::s_matrix;
use crate::special_fn::{bessel_k0, CouplingParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Every check name accepted by `axioms --check`.
pub const CHECKS: [&str; 9] =
    ["s_add", "gamma_map", "spectral", "representation", "covariance", "hermiticity", "locality", "positivity", "cluster"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "sinhgordon", version, about = "Sinh-Gordon form factors, correlators and axiom checks")]
pub struct Cli {
    /// JSON run configuration; flags override its scalar fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub g: Option<f64>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// S(β) with unitarity and crossing residuals.
    Smatrix {
        #[arg(long, default_value = "0,0.5,1,2")]
        points: String,
    },
    /// n-particle form factor on the configurations β_j = x·(j − (n−1)/2), with the exchange residual.
    Ff {
        #[arg(long, default_value_t = 0)]
        operator: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value = "0.3,0.7,1.5")]
        points: String,
    },
    /// Shells of the unsmeared two-point kernel at x = (0, r/m).
    Twopoint {
        #[arg(long, default_value = "1,2,4")]
        points: String,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, default_value_t = 0)]
        operator: usize,
    },
    /// Partial sum of the configured correlator.
    Corr {
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Runs axiom checks and writes their report.
    Axioms {
        #[arg(long, default_value = "all")]
        check: String,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cli, &cfg) {
        Ok((text, passed)) => {
            if let Err(e) = emit(&cli, &text) {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
            if passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(g) = cli.g {
        cfg.params.g = Some(g);
        cfg.params.b = None;
    }
    if let Some(b) = cli.b {
        cfg.params.b = Some(b);
    }
    if let Some(m) = cli.mass {
        cfg.params.mass = m;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_points(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad point {t:?}"))))
        .collect()
}

/// A numeric table rendered as CSV or JSON.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(format!("{}\n", json!({"columns": self.columns, "rows": self.rows}))),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(io_err)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|x| format_f64(*x))).map_err(io_err)?;
                }
                into_string(w)
            }
        }
    }
}

fn format_f64(x: f64) -> String {
    format!("{x:e}")
}

fn io_err(e: csv::Error) -> Error {
    Error::Config(format!("output: {e}"))
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("output: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

/// Output text and whether every check passed.
pub fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(String, bool)> {
    let params = cfg.coupling()?;
    match &cli.command {
        Command::Smatrix { points } => Ok((cmd_smatrix(&parse_points(points)?, &params)?.render(cli.format)?, true)),
        Command::Ff { operator, n, points } => {
            let spec = pick_operator(cfg, &params, *operator)?;
            Ok((cmd_ff(&spec, *n, &parse_points(points)?, &params)?.render(cli.format)?, true))
        }
        Command::Twopoint { points, cap, operator } => {
            let spec = pick_operator(cfg, &params, *operator)?;
            let cap = cap.unwrap_or(cfg.caps.n_total);
            Ok((cmd_twopoint(&spec, &parse_points(points)?, cap, &params, &cfg.correlator_config())?.render(cli.format)?, true))
        }
        Command::Corr { cap } => {
            let (specs, g) = cfg.correlator_setup(&params)?;
            let result = eval_w_partial(&specs, &g, cap.unwrap_or(cfg.caps.n_total), &params, &cfg.correlator_config())?;
            let text = match cli.format {
                Format::Json => format!("{}\n", result.to_json()),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["shell", "re", "im", "quad_err", "eps_err"]).map_err(io_err)?;
                    let rows = result.shells.iter().map(|s| (s.n_total.to_string(), s.value, s.quad_err, s.eps_err));
                    for (label, v, q, e) in rows.chain([("total".to_string(), result.value, result.quad_err, result.eps_err)]) {
                        w.write_record([label, format_f64(v.re), format_f64(v.im), format_f64(q), format_f64(e)]).map_err(io_err)?;
                    }
                    into_string(w)?
                }
            };
            Ok((text, true))
        }
        Command::Axioms { check } => {
            let report = cmd_axioms(check, cfg)?;
            Ok((render_report(&report, cli.format)?, report.passed()))
        }
    }
}

fn pick_operator(cfg: &RunConfig, params: &CouplingParams, index: usize) -> Result<OperatorSpec> {
    let decl = cfg.operators.get(index).ok_or_else(|| Error::Config(format!("no operator with index {index}")))?;
    decl.build(params)
}

pub fn cmd_smatrix_rows(points: &[f64], params: &CouplingParams) -> Result<Vec<[f64; 5]>> {
    points
        .iter()
        .map(|&x| {
            let beta = Complex64::new(x, 0.0);
            let s = s_matrix(beta, params)?;
            let unitarity = (s * s_matrix(-beta, params)? - 1.0).norm();
            let crossing = (s_matrix(Complex64::new(0.0, std::f64::consts::PI) - beta, params)? - s).norm();
            Ok([x, s.re, s.im, unitarity, crossing])
        })
        .collect()
}

fn cmd_smatrix(points: &[f64], params: &CouplingParams) -> Result<Table> {
    let mut t = Table::new(&["beta", "s_re", "s_im", "unitarity_residual", "crossing_residual"]);
    t.rows = cmd_smatrix_rows(points, params)?.into_iter().map(|r| r.to_vec()).collect();
    Ok(t)
}

fn cmd_ff(spec: &OperatorSpec, n: usize, points: &[f64], params: &CouplingParams) -> Result<Table> {
    let mut t = Table::new(&["x", "ff_re", "ff_im", "exchange_residual"]);
    for &x in points {
        let beta: Vec<Complex64> = (0..n).map(|j| Complex64::new(x * (j as f64 - (n as f64 - 1.0) / 2.0), 0.0)).collect();
        let f = form_factor(spec, &beta, params)?;
        let residual = if n >= 2 {
            let mut swapped = beta.clone();
            swapped.swap(0, 1);
            (f - s_matrix(beta[0] - beta[1], params)? * form_factor(spec, &swapped, params)?).norm()
        } else {
            0.0
        };
        t.rows.push(vec![x, f.re, f.im, residual]);
    }
    Ok(t)
}

fn cmd_twopoint(spec: &OperatorSpec, points: &[f64], cap: usize, params: &CouplingParams, cfg: &CorrelatorConfig) -> Result<Table> {
    let mut columns = vec!["mr".to_string()];
    for s in 0..=cap {
        columns.push(format!("shell{s}_re"));
        columns.push(format!("shell{s}_im"));
    }
    columns.extend(["total_re", "total_im", "bessel_oracle"].map(String::from));
    let mut t = Table { columns, rows: Vec::new() };
    let f1 = form_factor(spec, &[Complex64::new(0.0, 0.0)], params)?.norm();
    for &mr in points {
        let k = two_point_kernel(spec, spec, TwoVector::new(0.0, mr / params.m), cap, params, cfg)?;
        let mut row = vec![mr];
        for s in &k.shells {
            row.push(s.value.re);
            row.push(s.value.im);
        }
        row.extend([k.value.re, k.value.im, f1 * f1 * bessel_k0(mr)? / std::f64::consts::PI]);
        t.rows.push(row);
    }
    Ok(t)
}

fn render_report(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(format!("{}\n", json!({"passed": report.passed(), "records": report.to_json()}))),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "verdict", "tolerance", "lhs", "rhs", "case_params"]).map_err(io_err)?;
            for r in &report.records {
                let verdict = serde_json::to_value(r.verdict).unwrap_or(Value::Null);
                w.write_record([
                    r.check.clone(),
                    verdict.as_str().unwrap_or("").to_string(),
                    format_f64(r.tolerance),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.case_params.to_string(),
                ])
                .map_err(io_err)?;
            }
            into_string(w)
        }
    }
}

/// The synthetic operator the built-in cases use where the field's form factors vanish.
pub fn reference_synthetic(spin: f64) -> OperatorSpec {
    OperatorSpec::synthetic(
        if spin == 0.0 { "A" } else { "B" },
        spin,
        Complex64::new(0.8, 0.0),
        vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.3), Complex64::new(0.2, 0.0), Complex64::new(0.1, 0.0)],
        0.0,
    )
}

fn packet(x0: f64, x1: f64, sigma: f64, k0: f64, k1: f64) -> Result<GaussianPacket> {
    GaussianPacket::isotropic(TwoVector::new(x0, x1), sigma, TwoVector::new(k0, k1))
}

/// Runs one named check, or all of them, on the built-in cases and the configured correlator.
pub fn cmd_axioms(check: &str, cfg: &RunConfig) -> Result<Report> {
    let names: Vec<&str> = if check == "all" { CHECKS.to_vec() } else { vec![check] };
    let params = cfg.coupling()?;
    let ccfg = cfg.correlator_config();
    let mut report = Report::new();
    for name in names {
        report.extend(run_check(name, cfg, &params, &ccfg)?);
    }
    Ok(report)
}

fn run_check(name: &str, cfg: &RunConfig, params: &CouplingParams, ccfg: &CorrelatorConfig) -> Result<Report> {
    let syn = reference_synthetic(0.0);
    match name {
        "s_add" => check_s_add(&[3, 4, 5], 200, cfg.seed, params),
        "gamma_map" => {
            let mut r = Report::new();
            for (p, q) in [(1, 1), (2, 1), (2, 2), (1, 3)] {
                r.extend(check_gamma_map(p, q, 200, cfg.seed, params)?);
            }
            Ok(r)
        }
        "spectral" => check_spectral(3, 10_000, cfg.seed, &syn, params, ccfg),
        "representation" => {
            let (specs, g) = cfg.correlator_setup(params)?;
            let k = specs.len();
            let mut cases = Vec::new();
            if k >= 2 {
                for n in crate::correlators::enumerate_total(k, 2)? {
                    if n.total() == 0 {
                        continue;
                    }
                    for t in 1..=k {
                        cases.push(RepresentationCase { specs: specs.clone(), g: g.clone(), n: n.clone(), t });
                    }
                }
            }
            check_representation(&cases, params, ccfg)
        }
        "covariance" => {
            let (specs, g) = cfg.correlator_setup(params)?;
            check_covariance(&specs, &g, 0.3, TwoVector::new(0.1, -0.2), cfg.caps.n_total, params, ccfg)
        }
        "hermiticity" => {
            let (specs, g) = cfg.correlator_setup(params)?;
            let r = TruncationVector::new(vec![cfg.caps.r_max; specs.len().saturating_sub(1)]);
            check_hermiticity(&specs, &g, &r, params, ccfg)
        }
        "locality" => {
            let spec = pick_operator(cfg, params, 0)?;
            let mut r = check_locality(
                &spec,
                &spec,
                &packet(0.0, 0.0, 0.3, 0.0, 0.0)?,
                &packet(0.0, 3.0, 0.3, 0.0, 0.0)?,
                &[1, 2],
                Some((&packet(3.0, 0.0, 0.3, 0.0, 0.0)?, &packet(0.0, 0.0, 0.3, 0.0, 0.0)?)),
                params,
                ccfg,
            )?;
            r.extend(check_s_add(&[3], 50, cfg.seed, params)?);
            let g = ProductTestFunction::new(vec![packet(0.0, 0.0, 0.5, 0.3, -0.2)?, packet(0.2, 1.0, 0.5, 0.0, 0.1)?]);
            let cases: Vec<RepresentationCase> = (1..=2)
                .map(|t| {
                    Ok(RepresentationCase { specs: vec![spec.clone(), spec.clone()], g: g.clone(), n: MultiIndex::new(2, vec![1])?, t })
                })
                .collect::<Result<_>>()?;
            r.extend(check_representation(&cases, params, ccfg)?);
            Ok(r)
        }
        "positivity" => {
            let spec = pick_operator(cfg, params, 0)?;
            check_positivity(&spec, &cfg.packets()?, params, ccfg)
        }
        "cluster" => {
            let f = ProductTestFunction::new(vec![packet(0.0, 0.0, 0.3, 0.0, 0.0)?, packet(0.1, 0.3, 0.3, 0.0, 0.0)?]);
            let g = ProductTestFunction::new(vec![packet(0.0, 0.0, 0.3, 0.0, 0.0)?]);
            let specs_p = vec![syn.adjoint()?, syn.clone()];
            let specs_q = vec![syn.clone()];
            let setup = ClusterSetup { specs_p: &specs_p, specs_q: &specs_q, f: &f, g: &g, v: TwoVector::new(0.0, 1.0 / params.m), cap: 1 };
            check_cluster(&setup, &[2.0, 4.0, 6.0], params, ccfg)
        }
        other => Err(Error::Config(format!("unknown check {other:?}; expected one of {} or all", CHECKS.join(", ")))),
    }
}
