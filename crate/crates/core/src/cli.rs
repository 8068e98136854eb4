//! Command-line front end: argument and config handling, the five commands
//! and CSV/JSON output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::{self, CheckConfig, CRITERIA};
use crate::error::{Error, ErrorKind, Result};
use crate::gauss::{purity, symplectic_eigenvalues, von_neumann_entropy, CovarianceMatrix};
use crate::geometry::{curvature_report, ricci_scalar, scalar_2d_direct, GeometryOptions, MetricField};
use crate::models::{phase_labels, ClosedForm, GaussianFamily, ModelSpec, ParamPoint, Quantity, MODEL_NAMES};
use crate::qgt::{
    phase_block_from_covariance, qgt_overlap_fd_many, Eigensystem, Method, Options, QgtResult, Resolution,
    StateSelector, Tolerances,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Smallest accepted per-mode cutoff.
pub const MIN_CUTOFF: usize = 8;

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Usage | ErrorKind::Domain => EXIT_USAGE,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "qgeom", version, about = "Quantum geometric tensor, parameter-space curvature and Gaussian entanglement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full QGT per method at one point (or each grid point).
    Eval(JobArgs),
    /// Scalar quantities over a parameter grid.
    Sweep(JobArgs),
    /// Run the acceptance suite.
    Check(CheckArgs),
    /// Christoffel symbols, Ricci tensor and scalar curvature of a metric.
    Curvature(JobArgs),
    /// Reduced covariance, symplectic spectrum, purity and entropy.
    Entangle(JobArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Omit the generation timestamp.
    #[arg(long)]
    pub no_header_timestamp: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct JobArgs {
    /// TOML job file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// `v1,v2,..` in parameter order or `name=v,..`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Quantum numbers, one per mode: `1` or `1,2`.
    #[arg(long)]
    pub n: Option<String>,
    /// Levels per mode.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Comma-separated methods, or `all`.
    #[arg(long)]
    pub method: Option<String>,
    /// Grid axis `name=start:stop:count`; repeatable, first axis slowest.
    #[arg(long = "grid", allow_hyphen_values = true)]
    pub grid: Vec<String>,
    /// Comma-separated sweep quantities.
    #[arg(long)]
    pub quantity: Option<String>,
    /// Curvature coordinates, e.g. `X,Y`.
    #[arg(long)]
    pub coords: Option<String>,
    /// Mode subset for reductions (0-based), e.g. `0`.
    #[arg(long)]
    pub modes: Option<String>,
    /// Curvature of the `parameter` metric or the reduced `phase-block`.
    #[arg(long)]
    pub block: Option<String>,
    /// `overlap-track` or `energy-order`.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Gaussian model: σ(λ) expression.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    /// Gaussian model: μ(λ) expression.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Gaussian model: parameter names, e.g. `W,X`.
    #[arg(long)]
    pub params: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CheckArgs {
    /// Restrict to criteria (repeatable).
    #[arg(long = "criterion")]
    pub criteria: Vec<u8>,
    /// Restrict the cross-method probes to one model.
    #[arg(long)]
    pub model: Option<String>,
    /// Force the per-mode cutoff of the numerical pathways.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Print every individual comparison.
    #[arg(long)]
    pub verbose: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parameter point in a config file: a list in parameter order or a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    List(Vec<f64>),
    Named(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    pub params: Vec<String>,
    pub sigma: String,
    pub mu: String,
    pub sigma_grad: Option<Vec<String>>,
    pub mu_grad: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub overlap_fd: Option<f64>,
    pub covariance: Option<f64>,
    pub closed_form: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub keep_fraction: Option<f64>,
    pub tracking_threshold: Option<f64>,
    pub fd_step: Option<f64>,
    pub richardson: Option<bool>,
    pub phase_twist: Option<u64>,
    pub geometry_step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Job description, from a TOML file and/or flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: Option<String>,
    pub point: Option<PointSpec>,
    pub n: Option<Vec<u32>>,
    pub methods: Option<Vec<String>>,
    pub cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<Axis>,
    pub quantities: Option<Vec<String>>,
    pub coords: Option<Vec<String>>,
    pub modes: Option<Vec<usize>>,
    pub block: Option<String>,
    pub resolution: Option<String>,
    pub workers: Option<usize>,
    pub gaussian: Option<GaussianConfig>,
    pub tolerances: Option<ToleranceConfig>,
    pub engine: Option<EngineConfig>,
    pub output: Option<OutputConfig>,
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

/// Comma list where `phase-curvature:a,b` keeps its inner comma.
fn split_quantities(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in split_list(s) {
        match out.last_mut() {
            Some(last) if last.contains("phase-curvature:") && !last.contains(',') => {
                last.push(',');
                last.push_str(t);
            }
            _ => out.push(t.to_string()),
        }
    }
    out
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("'{s}' is not a number")))
}

pub fn parse_point(s: &str) -> Result<PointSpec> {
    let items = split_list(s);
    if items.is_empty() {
        return Err(Error::Parse("empty point".into()));
    }
    if items.iter().all(|t| t.contains('=')) {
        let mut named = BTreeMap::new();
        for t in items {
            let (k, v) = t.split_once('=').expect("checked");
            if named.insert(k.trim().to_string(), parse_f64(v)?).is_some() {
                return Err(Error::Parse(format!("parameter '{}' given twice", k.trim())));
            }
        }
        return Ok(PointSpec::Named(named));
    }
    if items.iter().any(|t| t.contains('=')) {
        return Err(Error::Parse(format!("'{s}': mix of named and positional values")));
    }
    Ok(PointSpec::List(items.into_iter().map(parse_f64).collect::<Result<_>>()?))
}

pub fn parse_axis(s: &str) -> Result<Axis> {
    let bad = || Error::Parse(format!("grid axis '{s}': expected name=start:stop:count"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let count = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
    Ok(Axis { param: name.trim().to_string(), start: parse_f64(parts[0])?, stop: parse_f64(parts[1])?, count })
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    split_list(s)
        .into_iter()
        .map(|t| t.parse::<u32>().map_err(|_| Error::Parse(format!("'{t}' is not a non-negative integer"))))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    split_list(s)
        .into_iter()
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("'{t}' is not a non-negative integer"))))
        .collect()
}

fn owned(items: Vec<&str>) -> Vec<String> {
    items.into_iter().map(str::to_string).collect()
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Config file (if any) overridden by flags.
    pub fn from_args(args: &JobArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(m) = &args.model {
            cfg.model = Some(m.clone());
        }
        if let Some(p) = &args.point {
            cfg.point = Some(parse_point(p)?);
        }
        if let Some(n) = &args.n {
            cfg.n = Some(parse_u32_list(n)?);
        }
        if let Some(c) = args.cutoff {
            cfg.cutoff = Some(c);
        }
        if let Some(m) = &args.method {
            cfg.methods = Some(owned(split_list(m)));
        }
        if !args.grid.is_empty() {
            cfg.grid = args.grid.iter().map(|g| parse_axis(g)).collect::<Result<_>>()?;
        }
        if let Some(q) = &args.quantity {
            cfg.quantities = Some(split_quantities(q));
        }
        if let Some(c) = &args.coords {
            cfg.coords = Some(owned(split_list(c)));
        }
        if let Some(m) = &args.modes {
            cfg.modes = Some(parse_usize_list(m)?);
        }
        if let Some(b) = &args.block {
            cfg.block = Some(b.clone());
        }
        if let Some(r) = &args.resolution {
            cfg.resolution = Some(r.clone());
        }
        if let Some(w) = args.workers {
            cfg.workers = Some(w);
        }
        if args.sigma.is_some() || args.mu.is_some() || args.params.is_some() {
            let mut g = cfg.gaussian.take().unwrap_or_else(|| GaussianConfig {
                params: vec!["W".into(), "X".into()],
                sigma: "X^(-1/4)".into(),
                mu: "W/X".into(),
                ..GaussianConfig::default()
            });
            if let Some(s) = &args.sigma {
                g.sigma = s.clone();
                g.sigma_grad = None;
            }
            if let Some(m) = &args.mu {
                g.mu = m.clone();
                g.mu_grad = None;
            }
            if let Some(p) = &args.params {
                g.params = owned(split_list(p));
            }
            cfg.gaussian = Some(g);
        }
        let out = cfg.output.get_or_insert_with(OutputConfig::default);
        if let Some(p) = &args.output.out {
            out.path = Some(p.clone());
        }
        if let Some(f) = args.output.format {
            out.format = Some(f);
        }
        Ok(cfg)
    }
}

/// Which command a job is resolved for; sets method and quantity defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Eval,
    Sweep,
    Curvature,
    Entangle,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Eval => "eval",
            CommandKind::Sweep => "sweep",
            CommandKind::Curvature => "curvature",
            CommandKind::Entangle => "entangle",
        }
    }
}

/// Metric whose curvature is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Parameter,
    PhaseBlock,
}

/// Sweep column groups.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepQuantity {
    DetMetric,
    ScalarCurvature,
    PhaseCurvature(usize, usize),
    ReducedPhaseCurvature,
    Purity,
    Entropy,
    Symplectic,
    Metric,
    /// Scalar closed form read directly from the model.
    Closed(Quantity),
}

/// A validated job.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: JobConfig,
    pub model: ModelSpec,
    pub base: Vec<Option<f64>>,
    pub grid: Vec<(usize, Vec<f64>)>,
    pub quantum_numbers: Vec<u32>,
    pub methods: Vec<Method>,
    pub cutoff: usize,
    pub coords: Vec<usize>,
    pub modes: Vec<usize>,
    pub block: Block,
    pub quantities: Vec<SweepQuantity>,
    pub tolerances: Tolerances,
    pub options: Options,
    pub resolution: Resolution,
    pub geometry: GeometryOptions,
    pub workers: usize,
}

const ALL_METHODS: [Method; 4] = [Method::Perturbative, Method::OverlapFd, Method::ClosedForm, Method::CovarianceDerived];

fn build_model(cfg: &JobConfig) -> Result<ModelSpec> {
    let name = cfg
        .model
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("no model given; choose one of {}", MODEL_NAMES.join(", "))))?;
    match (name, &cfg.gaussian) {
        ("gaussian", Some(g)) => {
            let mut fam = GaussianFamily::new(g.params.clone(), &g.sigma, &g.mu)?;
            match (&g.sigma_grad, &g.mu_grad) {
                (Some(sg), Some(mg)) => {
                    let sg: Vec<&str> = sg.iter().map(String::as_str).collect();
                    let mg: Vec<&str> = mg.iter().map(String::as_str).collect();
                    fam = fam.with_gradients(&sg, &mg)?;
                }
                (None, None) => {}
                _ => return Err(Error::InvalidArgument("give both sigma_grad and mu_grad or neither".into())),
            }
            Ok(ModelSpec::gaussian(fam))
        }
        (other, Some(_)) if other != "gaussian" => {
            Err(Error::InvalidArgument("a [gaussian] section needs model = \"gaussian\"".into()))
        }
        _ => ModelSpec::from_name(name),
    }
}

fn parse_quantity(model: &ModelSpec, s: &str) -> Result<SweepQuantity> {
    if let Some(rest) = s.strip_prefix("closed:") {
        let q: Quantity = rest.parse()?;
        let scalar = matches!(
            q,
            Quantity::Purity
                | Quantity::Entropy
                | Quantity::MetricDeterminant
                | Quantity::ScalarCurvature
                | Quantity::PhaseCurvature(..)
                | Quantity::ReducedPhaseCurvature
        );
        if !scalar {
            return Err(Error::InvalidArgument(format!("closed:{q} is not a scalar quantity")));
        }
        return Ok(SweepQuantity::Closed(q));
    }
    if let Some(rest) = s.strip_prefix("phase-curvature:") {
        let names = split_list(rest);
        if names.len() != 2 {
            return Err(Error::Parse(format!("'{s}': expected phase-curvature:<a>,<b>")));
        }
        return Ok(SweepQuantity::PhaseCurvature(model.param_index(names[0])?, model.param_index(names[1])?));
    }
    Ok(match s {
        "det-metric" => SweepQuantity::DetMetric,
        "scalar-curvature" => SweepQuantity::ScalarCurvature,
        "reduced-phase-curvature" => SweepQuantity::ReducedPhaseCurvature,
        "purity" => SweepQuantity::Purity,
        "entropy" => SweepQuantity::Entropy,
        "symplectic" => SweepQuantity::Symplectic,
        "metric" => SweepQuantity::Metric,
        _ => return Err(Error::InvalidArgument(format!("unknown sweep quantity '{s}'"))),
    })
}

impl Job {
    pub fn resolve(config: JobConfig, kind: CommandKind) -> Result<Self> {
        let model = build_model(&config)?;
        let names = model.param_names();
        let np = names.len();

        let mut base = vec![None; np];
        match &config.point {
            Some(PointSpec::List(v)) => {
                if v.len() != np {
                    return Err(Error::DimensionMismatch { expected: np, got: v.len() });
                }
                base = v.iter().map(|&x| Some(x)).collect();
            }
            Some(PointSpec::Named(m)) => {
                for (k, &v) in m {
                    base[model.param_index(k)?] = Some(v);
                }
            }
            None => {}
        }
        let mut grid = Vec::new();
        for axis in &config.grid {
            if axis.count < 1 {
                return Err(Error::InvalidArgument(format!("grid axis '{}' needs count >= 1", axis.param)));
            }
            if !(axis.start.is_finite() && axis.stop.is_finite()) {
                return Err(Error::InvalidArgument(format!("grid axis '{}' has a non-finite bound", axis.param)));
            }
            let idx = model.param_index(&axis.param)?;
            if grid.iter().any(|(i, _)| *i == idx) {
                return Err(Error::InvalidArgument(format!("grid axis '{}' given twice", axis.param)));
            }
            grid.push((idx, axis.values()));
        }
        if let Some(i) = (0..np).find(|&i| base[i].is_none() && !grid.iter().any(|(g, _)| *g == i)) {
            return Err(Error::InvalidArgument(format!("no value for parameter '{}'", names[i])));
        }

        let quantum_numbers = config.n.clone().unwrap_or_else(|| vec![0; model.dof()]);
        model.check_quantum_numbers(&quantum_numbers)?;

        let methods = match &config.methods {
            None => match kind {
                CommandKind::Eval => ALL_METHODS.to_vec(),
                CommandKind::Entangle => vec![Method::ClosedForm, Method::CovarianceDerived],
                _ => vec![Method::ClosedForm],
            },
            Some(list) if list.len() == 1 && list[0] == "all" => ALL_METHODS.to_vec(),
            Some(list) => list.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?,
        };
        if methods.is_empty() {
            return Err(Error::InvalidArgument("empty method list".into()));
        }

        let cutoff = config.cutoff.unwrap_or(if model.dof() == 1 { 80 } else { 40 });
        if cutoff < MIN_CUTOFF {
            return Err(Error::InvalidArgument(format!("cutoff {cutoff} is below {MIN_CUTOFF}")));
        }

        let coords = match &config.coords {
            Some(c) => c.iter().map(|n| model.param_index(n)).collect::<Result<Vec<_>>>()?,
            None => model.metric_coordinates(),
        };
        let modes = config.modes.clone().unwrap_or_else(|| vec![0]);
        if let Some(&m) = modes.iter().find(|&&m| m >= model.dof()) {
            return Err(Error::ModeOutOfRange { mode: m, modes: model.dof() });
        }
        let block = match config.block.as_deref() {
            None | Some("parameter") => Block::Parameter,
            Some("phase-block") => Block::PhaseBlock,
            Some(b) => return Err(Error::InvalidArgument(format!("unknown block '{b}' (parameter, phase-block)"))),
        };
        let quantities = match &config.quantities {
            Some(q) => q.iter().map(|s| parse_quantity(&model, s)).collect::<Result<Vec<_>>>()?,
            None => vec![SweepQuantity::DetMetric, SweepQuantity::ScalarCurvature],
        };

        let mut tolerances = Tolerances::default();
        if let Some(t) = &config.tolerances {
            tolerances.overlap_fd = t.overlap_fd.unwrap_or(tolerances.overlap_fd);
            tolerances.covariance = t.covariance.unwrap_or(tolerances.covariance);
            tolerances.closed_form = t.closed_form.unwrap_or(tolerances.closed_form);
        }
        for (name, v) in
            [("overlap_fd", tolerances.overlap_fd), ("covariance", tolerances.covariance), ("closed_form", tolerances.closed_form)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("tolerance {name} must be positive")));
            }
        }

        let mut options = Options::default();
        let mut geometry = GeometryOptions::default();
        if let Some(e) = &config.engine {
            options.keep_fraction = e.keep_fraction.unwrap_or(options.keep_fraction);
            options.tracking_threshold = e.tracking_threshold.unwrap_or(options.tracking_threshold);
            options.fd_step = e.fd_step.unwrap_or(options.fd_step);
            options.richardson = e.richardson.unwrap_or(options.richardson);
            options.phase_twist = e.phase_twist.or(options.phase_twist);
            geometry.step = e.geometry_step.unwrap_or(geometry.step);
            if !(geometry.step > 0.0 && geometry.step.is_finite()) {
                return Err(Error::InvalidArgument("geometry_step must be positive".into()));
            }
        }
        let resolution = match &config.resolution {
            Some(r) => r.parse()?,
            None => Resolution::OverlapTrack,
        };
        let workers = config.workers.unwrap_or_else(rayon::current_num_threads);
        if workers == 0 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }

        Ok(Self {
            config,
            model,
            base,
            grid,
            quantum_numbers,
            methods,
            cutoff,
            coords,
            modes,
            block,
            quantities,
            tolerances,
            options,
            resolution,
            geometry,
            workers,
        })
    }

    /// Evaluation points in lexicographic grid order (first axis slowest).
    pub fn points(&self) -> Vec<ParamPoint> {
        let mut out = vec![self.base.iter().map(|v| v.unwrap_or(0.0)).collect::<Vec<f64>>()];
        for (idx, values) in &self.grid {
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q[*idx] = v;
                        q
                    })
                })
                .collect();
        }
        out.into_iter().map(ParamPoint::new).collect()
    }

    pub fn selector(&self) -> StateSelector {
        StateSelector { quantum_numbers: self.quantum_numbers.clone(), resolution: self.resolution }
    }

    fn point_cells(&self, p: &ParamPoint) -> Vec<Cell> {
        p.coords().iter().map(|&v| Cell::Num(v)).collect()
    }

    fn point_columns(&self) -> Vec<String> {
        self.model.param_names()
    }

    fn qn_text(&self) -> String {
        self.quantum_numbers.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "NaN".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Cell::Int(i) => (*i).into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Renders a table. `meta` is echoed into JSON documents.
pub fn render(table: &Table, format: Format, command: &str, meta: serde_json::Value, stamp: bool) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            if stamp {
                writeln!(buf, "# qgeom {} {command} generated at unix time {}", env!("CARGO_PKG_VERSION"), timestamp())?;
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(&table.columns).map_err(io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
            }
            w.flush()?;
            drop(w);
            Ok(buf)
        }
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("command".into(), command.into());
            doc.insert("version".into(), env!("CARGO_PKG_VERSION").into());
            if stamp {
                doc.insert("generated_unix".into(), timestamp().into());
            }
            if let serde_json::Value::Object(m) = meta {
                doc.extend(m);
            }
            doc.insert("columns".into(), table.columns.clone().into());
            let rows: Vec<serde_json::Value> =
                table.rows.iter().map(|r| serde_json::Value::Array(r.iter().map(Cell::json).collect())).collect();
            doc.insert("rows".into(), rows.into());
            let mut text = serde_json::to_vec_pretty(&serde_json::Value::Object(doc))
                .map_err(|e| Error::Io(e.to_string()))?;
            text.push(b'\n');
            Ok(text)
        }
    }
}

fn emit(bytes: &[u8], path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn job_meta(job: &Job) -> serde_json::Value {
    serde_json::json!({
        "config": job.config,
        "tolerances": {
            "overlap_fd": job.tolerances.overlap_fd,
            "covariance": job.tolerances.covariance,
            "closed_form": job.tolerances.closed_form,
        },
        "cutoff": job.cutoff,
        "quantum_numbers": job.quantum_numbers,
    })
}

/// Runs `f` over the job's points on `workers` threads, keeping grid order.
fn map_points<T: Send>(job: &Job, f: impl Fn(&ParamPoint) -> T + Send + Sync) -> Result<Vec<T>> {
    let points = job.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(&f).collect()))
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

// ---------------------------------------------------------------- eval

fn lookup(results: &[QgtResult], a: &str, b: &str) -> Option<Complex64> {
    results.iter().find_map(|r| {
        let i = r.labels.iter().position(|l| l == a)?;
        let j = r.labels.iter().position(|l| l == b)?;
        Some(r.get(i, j))
    })
}

fn max_abs(r: &QgtResult) -> f64 {
    r.values.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn method_results(job: &Job, p: &ParamPoint, sys: Option<&Eigensystem>, method: Method) -> Result<Vec<QgtResult>> {
    let sel = job.selector();
    let sys = || sys.ok_or_else(|| Error::InvalidArgument("numerical method without an eigensystem".into()));
    match method {
        Method::Perturbative => sys()?.perturbative(std::slice::from_ref(&sel), &job.options).remove(0).map(|r| vec![r]),
        Method::OverlapFd => qgt_overlap_fd_many(sys()?, std::slice::from_ref(&sel), &job.options)?.remove(0).map(|r| vec![r]),
        Method::CovarianceDerived => {
            let cov = sys()?.covariance(&sel, &job.options)?;
            Ok(vec![phase_block_from_covariance(&cov, job.quantum_numbers.clone())])
        }
        Method::ClosedForm => {
            let mut out = Vec::new();
            let mut missing = Vec::new();
            for r in [
                crate::qgt::closed_form_parameter_block(&job.model, p, &job.quantum_numbers),
                crate::qgt::closed_form_phase_block(&job.model, p, &job.quantum_numbers),
            ] {
                match r {
                    Ok(r) => out.push(r),
                    Err(e @ Error::UnsupportedQuantity { .. }) => missing.push(e),
                    Err(e) => return Err(e),
                }
            }
            match (out.is_empty(), missing.pop()) {
                (true, Some(e)) => Err(e),
                _ => Ok(out),
            }
        }
    }
}

pub fn eval_table(job: &Job) -> Result<Table> {
    let labels = job.model.labels();
    let mut columns = job.point_columns();
    columns.extend(["n", "method", "abs_dev_vs_perturbative", "rel_dev_vs_perturbative", "agrees", "note"].map(String::from));
    for prefix in ["G_re", "G_im", "g", "F"] {
        for a in &labels {
            for b in &labels {
                columns.push(format!("{prefix}[{a},{b}]"));
            }
        }
    }
    let numeric = job.methods.iter().any(|m| *m != Method::ClosedForm);
    let rows = map_points(job, |p| -> Result<Vec<Vec<Cell>>> {
        job.model.check_point(p)?;
        let sys = if numeric {
            let basis = job.model.default_basis(p, job.cutoff)?;
            Some(Eigensystem::solve(&job.model, p, &basis)?)
        } else {
            None
        };
        let mut computed = Vec::new();
        for &m in &job.methods {
            match method_results(job, p, sys.as_ref(), m) {
                Ok(r) => computed.push((m, Ok(r))),
                Err(e @ Error::UnsupportedQuantity { .. }) => computed.push((m, Err(e))),
                Err(e) => return Err(e),
            }
        }
        let reference: Option<QgtResult> = match computed.iter().find(|(m, _)| *m == Method::Perturbative) {
            Some((_, Ok(r))) => r.first().cloned(),
            _ if numeric => sys.as_ref().and_then(|s| s.perturbative(&[job.selector()], &job.options).remove(0).ok()),
            _ => None,
        };
        let mut rows = Vec::new();
        for (m, res) in computed {
            let mut row = job.point_cells(p);
            row.push(Cell::Text(job.qn_text()));
            row.push(Cell::Text(m.to_string()));
            let results = match res {
                Ok(r) => r,
                Err(e) => {
                    row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Text(e.to_string())]);
                    row.extend(std::iter::repeat_n(Cell::Empty, 4 * labels.len() * labels.len()));
                    rows.push(row);
                    continue;
                }
            };
            match (&reference, m) {
                (Some(reference), m) if m != Method::Perturbative => {
                    let mut abs = 0.0f64;
                    let mut rel = 0.0f64;
                    for r in &results {
                        let d = r.max_deviation(reference)?;
                        abs = abs.max(d);
                        rel = rel.max(d / max_abs(r).max(f64::MIN_POSITIVE));
                    }
                    let agrees = match m {
                        Method::OverlapFd => abs <= job.tolerances.overlap_fd,
                        Method::CovarianceDerived => abs <= job.tolerances.covariance,
                        _ => rel <= job.tolerances.closed_form,
                    };
                    row.extend([Cell::Num(abs), Cell::Num(rel), Cell::Bool(agrees), Cell::Empty]);
                }
                _ => row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]),
            }
            let entry = |a: &String, b: &String| lookup(&results, a, b);
            for part in 0..4 {
                for a in &labels {
                    for b in &labels {
                        row.push(match entry(a, b) {
                            None => Cell::Empty,
                            Some(z) => Cell::Num(match part {
                                0 | 2 => z.re,
                                1 => z.im,
                                _ => -2.0 * z.im,
                            }),
                        });
                    }
                }
            }
            rows.push(row);
        }
        Ok(rows)
    })?;
    Ok(Table { columns, rows: first_error(rows)?.into_iter().flatten().collect() })
}

// ----------------------------------------------------------- curvature

fn metric_field(job: &Job, p: &ParamPoint, coords: &[usize], block: Block, analytic: bool) -> Result<MetricField> {
    let qn = &job.quantum_numbers;
    let mode = job.modes[0];
    match (block, analytic) {
        (Block::Parameter, true) => MetricField::closed_form(&job.model, qn, p, coords),
        (Block::Parameter, false) => MetricField::engine(&job.model, qn, p, coords, job.cutoff, job.options.clone()),
        (Block::PhaseBlock, true) => MetricField::phase_block(&job.model, qn, p, coords, mode),
        (Block::PhaseBlock, false) => {
            MetricField::phase_block_engine(&job.model, qn, p, coords, mode, job.cutoff, job.options.clone())
        }
    }
}

fn analytic(job: &Job) -> bool {
    job.methods[0] == Method::ClosedForm
}

pub fn curvature_table(job: &Job) -> Result<Table> {
    let names = job.model.param_names();
    let coords: Vec<usize> = match (job.block, &job.config.coords) {
        (Block::PhaseBlock, None) => job.model.phase_coordinates(),
        _ => job.coords.clone(),
    };
    let cn: Vec<&str> = coords.iter().map(|&i| names[i].as_str()).collect();
    let d = coords.len();
    let mut columns = job.point_columns();
    columns.extend(["n", "source", "R", "R_direct", "max_riemann", "flatness_threshold", "flat", "det_g", "bianchi_residual"].map(String::from));
    for a in &cn {
        for b in &cn {
            columns.push(format!("g[{a},{b}]"));
        }
    }
    for a in &cn {
        for b in &cn {
            columns.push(format!("Ricci[{a},{b}]"));
        }
    }
    for i in &cn {
        for j in &cn {
            for k in &cn {
                columns.push(format!("Gamma[{i};{j},{k}]"));
            }
        }
    }
    let rows = map_points(job, |p| -> Result<Vec<Cell>> {
        job.model.check_point(p)?;
        let field = metric_field(job, p, &coords, job.block, analytic(job))?;
        let x: Vec<f64> = coords.iter().map(|&i| p.get(i)).collect();
        let rep = curvature_report(&field, &x, &job.geometry)?;
        let direct = if d == 2 { Cell::Num(scalar_2d_direct(&field, &x, &job.geometry)?) } else { Cell::Empty };
        let mut row = job.point_cells(p);
        row.push(Cell::Text(job.qn_text()));
        row.push(Cell::Text(field.source().to_string()));
        row.extend([
            Cell::Num(rep.scalar),
            direct,
            Cell::Num(rep.max_riemann),
            Cell::Num(rep.flatness_threshold),
            Cell::Bool(rep.flat),
            Cell::Num(rep.metric.determinant()),
            if d == 3 { Cell::Num(rep.bianchi_residual()) } else { Cell::Empty },
        ]);
        row.extend(rep.metric.transpose().iter().map(|&v| Cell::Num(v)));
        row.extend(rep.ricci.transpose().iter().map(|&v| Cell::Num(v)));
        row.extend(rep.christoffel.iter().map(|&v| Cell::Num(v)));
        Ok(row)
    })?;
    Ok(Table { columns, rows: first_error(rows)? })
}

// ------------------------------------------------------------ entangle

fn reduced_covariance(job: &Job, p: &ParamPoint, method: Method, sys: Option<&Eigensystem>) -> Result<CovarianceMatrix> {
    let full = match method {
        Method::ClosedForm => match job.model.oracle(&Quantity::Covariance, p, &job.quantum_numbers)? {
            ClosedForm::Real(m) => CovarianceMatrix::new(m)?,
            other => return Err(Error::InvalidArgument(format!("covariance oracle returned {other:?}"))),
        },
        Method::CovarianceDerived => match sys {
            Some(s) => s.covariance(&job.selector(), &job.options)?,
            None => return Err(Error::InvalidArgument("numerical covariance without an eigensystem".into())),
        },
        other => return Err(Error::InvalidArgument(format!("entangle supports closed-form and covariance-derived, not {other}"))),
    };
    full.reduce(&job.modes)
}

pub fn entangle_table(job: &Job) -> Result<Table> {
    let k = job.modes.len();
    let labels: Vec<String> = if job.model.dof() == 1 {
        phase_labels(1)
    } else {
        let mut l: Vec<String> = job.modes.iter().map(|m| format!("q{}", m + 1)).collect();
        l.extend(job.modes.iter().map(|m| format!("p{}", m + 1)));
        l
    };
    let mut columns = job.point_columns();
    columns.extend(["n", "method", "modes", "purity", "entropy", "uncertainty_margin", "note"].map(String::from));
    columns.extend((1..=k).map(|i| format!("nu_{i}")));
    for a in &labels {
        for b in &labels {
            columns.push(format!("sigma[{a},{b}]"));
        }
    }
    let modes_text = job.modes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let numeric = job.methods.iter().any(|m| *m != Method::ClosedForm);
    let rows = map_points(job, |p| -> Result<Vec<Vec<Cell>>> {
        job.model.check_point(p)?;
        let sys = if numeric {
            let basis = job.model.default_basis(p, job.cutoff)?;
            Some(Eigensystem::solve(&job.model, p, &basis)?)
        } else {
            None
        };
        let mut rows = Vec::new();
        for &m in &job.methods {
            let mut row = job.point_cells(p);
            row.extend([Cell::Text(job.qn_text()), Cell::Text(m.to_string()), Cell::Text(modes_text.clone())]);
            match reduced_covariance(job, p, m, sys.as_ref()) {
                Ok(cov) => {
                    let nu = symplectic_eigenvalues(&cov)?;
                    row.extend([
                        Cell::Num(purity(&cov)?),
                        Cell::Num(von_neumann_entropy(&cov)?),
                        Cell::Num(cov.uncertainty_margin()),
                        Cell::Empty,
                    ]);
                    row.extend(nu.iter().map(|&v| Cell::Num(v)));
                    row.extend(cov.entries().transpose().iter().map(|&v| Cell::Num(v)));
                }
                Err(e @ Error::UnsupportedQuantity { .. }) => {
                    row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Text(e.to_string())]);
                    row.extend(std::iter::repeat_n(Cell::Empty, k + 4 * k * k));
                }
                Err(e) => return Err(e),
            }
            rows.push(row);
        }
        Ok(rows)
    })?;
    Ok(Table { columns, rows: first_error(rows)?.into_iter().flatten().collect() })
}

// --------------------------------------------------------------- sweep

fn closed_scalar(job: &Job, q: &Quantity, p: &ParamPoint) -> Result<f64> {
    job.model
        .oracle(q, p, &job.quantum_numbers)?
        .scalar()
        .ok_or_else(|| Error::InvalidArgument(format!("closed:{q} is not scalar for {}", job.model.name())))
}

fn quantity_columns(job: &Job, q: &SweepQuantity) -> Vec<String> {
    let names = job.model.param_names();
    match q {
        SweepQuantity::DetMetric => vec!["det_g".into()],
        SweepQuantity::ScalarCurvature => vec!["R".into()],
        SweepQuantity::PhaseCurvature(a, b) => vec![format!("R_phase[{},{}]", names[*a], names[*b])],
        SweepQuantity::ReducedPhaseCurvature => vec!["R_phase_reduced".into()],
        SweepQuantity::Purity => vec!["purity".into()],
        SweepQuantity::Entropy => vec!["entropy".into()],
        SweepQuantity::Symplectic => (1..=job.modes.len()).map(|i| format!("nu_{i}")).collect(),
        SweepQuantity::Metric => {
            let mut c = Vec::new();
            for &a in &job.coords {
                for &b in &job.coords {
                    c.push(format!("g[{},{}]", names[a], names[b]));
                }
            }
            c
        }
        SweepQuantity::Closed(q) => vec![format!("closed:{q}")],
    }
}

fn sweep_values(job: &Job, q: &SweepQuantity, p: &ParamPoint, cov: &mut Option<Result<CovarianceMatrix>>) -> Result<Vec<f64>> {
    let analytic = analytic(job);
    let mut covariance = || -> Result<CovarianceMatrix> {
        if cov.is_none() {
            let method = if analytic { Method::ClosedForm } else { Method::CovarianceDerived };
            let sys = if analytic {
                None
            } else {
                let basis = job.model.default_basis(p, job.cutoff)?;
                Some(Eigensystem::solve(&job.model, p, &basis)?)
            };
            *cov = Some(reduced_covariance(job, p, method, sys.as_ref()));
        }
        cov.clone().expect("filled")
    };
    let at = |coords: &[usize]| coords.iter().map(|&i| p.get(i)).collect::<Vec<f64>>();
    match q {
        SweepQuantity::DetMetric | SweepQuantity::Metric => {
            let g = metric_field(job, p, &job.coords, Block::Parameter, analytic)?.eval(&at(&job.coords))?;
            Ok(if *q == SweepQuantity::DetMetric { vec![g.determinant()] } else { g.transpose().iter().copied().collect() })
        }
        SweepQuantity::ScalarCurvature => {
            let f = metric_field(job, p, &job.coords, Block::Parameter, analytic)?;
            Ok(vec![ricci_scalar(&f, &at(&job.coords), &job.geometry)?.1])
        }
        SweepQuantity::PhaseCurvature(a, b) => {
            let c = [*a, *b];
            let f = metric_field(job, p, &c, Block::PhaseBlock, analytic)?;
            Ok(vec![ricci_scalar(&f, &at(&c), &job.geometry)?.1])
        }
        SweepQuantity::ReducedPhaseCurvature => {
            let c = job.model.phase_coordinates();
            let f = metric_field(job, p, &c, Block::PhaseBlock, analytic)?;
            Ok(vec![ricci_scalar(&f, &at(&c), &job.geometry)?.1])
        }
        SweepQuantity::Purity => Ok(vec![purity(&covariance()?)?]),
        SweepQuantity::Entropy => Ok(vec![von_neumann_entropy(&covariance()?)?]),
        SweepQuantity::Symplectic => symplectic_eigenvalues(&covariance()?),
        SweepQuantity::Closed(q) => Ok(vec![closed_scalar(job, q, p)?]),
    }
}

pub fn sweep_table(job: &Job) -> Result<Table> {
    let mut columns = job.point_columns();
    columns.push("n".into());
    let groups: Vec<Vec<String>> = job.quantities.iter().map(|q| quantity_columns(job, q)).collect();
    columns.extend(groups.iter().flatten().cloned());
    columns.push("error".into());
    let rows = map_points(job, |p| {
        let mut row = job.point_cells(p);
        row.push(Cell::Text(job.qn_text()));
        let mut errors = Vec::new();
        if let Err(e) = job.model.check_point(p) {
            errors.push(e.to_string());
            row.extend(groups.iter().flatten().map(|_| Cell::Empty));
        } else {
            let mut cov = None;
            for (q, cols) in job.quantities.iter().zip(&groups) {
                match sweep_values(job, q, p, &mut cov) {
                    Ok(v) if v.len() == cols.len() => row.extend(v.into_iter().map(Cell::Num)),
                    Ok(v) => {
                        errors.push(format!("{}: {} values for {} columns", cols[0], v.len(), cols.len()));
                        row.extend(cols.iter().map(|_| Cell::Empty));
                    }
                    Err(e) => {
                        errors.push(format!("{}: {e}", cols[0]));
                        row.extend(cols.iter().map(|_| Cell::Empty));
                    }
                }
            }
        }
        row.push(if errors.is_empty() { Cell::Empty } else { Cell::Text(errors.join("; ")) });
        row
    })?;
    Ok(Table { columns, rows })
}

// --------------------------------------------------------------- check

pub fn check_table(outcomes: &[check::Outcome]) -> Table {
    Table {
        columns: ["criterion", "title", "passed", "seconds", "details"].map(String::from).to_vec(),
        rows: outcomes
            .iter()
            .map(|o| {
                vec![
                    Cell::Int(o.id as i64),
                    Cell::Text(o.title.to_string()),
                    Cell::Bool(o.passed),
                    Cell::Num(o.elapsed.as_secs_f64()),
                    Cell::Text(o.details.join(" | ")),
                ]
            })
            .collect(),
    }
}

fn run_check(args: &CheckArgs) -> Result<i32> {
    if let Some(&bad) = args.criteria.iter().find(|&&c| !CRITERIA.iter().any(|(id, _)| *id == c)) {
        return Err(Error::InvalidArgument(format!("unknown criterion {bad} (1-{})", CRITERIA.len())));
    }
    if let Some(m) = &args.model {
        ModelSpec::from_name(m)?;
    }
    if let Some(c) = args.cutoff {
        if c < MIN_CUTOFF {
            return Err(Error::InvalidArgument(format!("cutoff {c} is below {MIN_CUTOFF}")));
        }
    }
    let cfg = CheckConfig { cutoff: args.cutoff, model: args.model.clone() };
    let outcomes = check::run_with(&args.criteria, &cfg);
    let mut err = std::io::stderr().lock();
    for o in &outcomes {
        writeln!(err, "{o}")?;
        if args.verbose {
            for d in &o.details {
                writeln!(err, "    {d}")?;
            }
        }
    }
    let total: Duration = outcomes.iter().map(|o| o.elapsed).sum();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    writeln!(err, "{passed}/{} criteria passed in {:.1} s", outcomes.len(), total.as_secs_f64())?;
    if args.output.out.is_some() || args.output.format.is_some() {
        let meta = serde_json::json!({ "cutoff": args.cutoff, "model": args.model });
        let bytes = render(
            &check_table(&outcomes),
            args.output.format.unwrap_or_default(),
            "check",
            meta,
            !args.output.no_header_timestamp,
        )?;
        emit(&bytes, args.output.out.as_ref())?;
    }
    Ok(if passed == outcomes.len() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn run_job(args: &JobArgs, kind: CommandKind) -> Result<i32> {
    let config = JobConfig::from_args(args)?;
    let job = Job::resolve(config, kind)?;
    let table = match kind {
        CommandKind::Eval => eval_table(&job)?,
        CommandKind::Sweep => sweep_table(&job)?,
        CommandKind::Curvature => curvature_table(&job)?,
        CommandKind::Entangle => entangle_table(&job)?,
    };
    let out = job.config.output.clone().unwrap_or_default();
    let bytes = render(&table, out.format.unwrap_or_default(), kind.name(), job_meta(&job), !args.output.no_header_timestamp)?;
    emit(&bytes, out.path.as_ref())?;
    Ok(EXIT_OK)
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Eval(a) => run_job(a, CommandKind::Eval),
        Command::Sweep(a) => run_job(a, CommandKind::Sweep),
        Command::Curvature(a) => run_job(a, CommandKind::Curvature),
        Command::Entangle(a) => run_job(a, CommandKind::Entangle),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
