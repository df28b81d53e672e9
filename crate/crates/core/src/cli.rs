//! Command-line front end: deterministic solves (`pf`), probabilistic runs
//! (`ppf`) and error indices between two run directories (`compare`).
//!
//! Exit codes: 0 success, 1 numeric failure, 2 input error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::casedata::{parse_case, BusKind, CaseError};
use crate::powerflow::{InjectionSet, PowerFlowError, PowerFlowModel, ResponseId, SolveOptions};
use crate::ppf::{
    compare, report, run, Limit, Method, PpfConfig, PpfError, PpfReport, Study, StudyError, Surrogate,
    Timings,
};

#[derive(Debug, Parser)]
#[command(name = "lra-ppf", version, about = "Probabilistic power flow with low-rank surrogates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the deterministic power flow of a case.
    Pf(PfArgs),
    /// Run a probabilistic power flow study.
    Ppf(PpfArgs),
    /// Relative mean and standard-deviation errors of one run against another.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct PfArgs {
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Keep PV buses regulated regardless of reactive limits.
    #[arg(long)]
    pub no_q_limits: bool,
}

#[derive(Debug, Args)]
pub struct PpfArgs {
    /// Case file; overrides the case named by the study.
    #[arg(long)]
    pub case: Option<PathBuf>,
    /// Study file (TOML or JSON): random inputs, responses, limits.
    #[arg(long, alias = "study")]
    pub uncertainty: PathBuf,
    #[arg(long, value_enum, default_value = "lra")]
    pub method: MethodArg,
    /// Design budget for lra/pce, sample size for mcs.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated response ids, e.g. `VM:8,SF:13-14,QG:32`.
    #[arg(long, value_delimiter = ',')]
    pub responses: Vec<ResponseId>,
    /// File with `[[limits]]` entries (TOML or JSON).
    #[arg(long)]
    pub limits: Option<PathBuf>,
    /// Comma-separated probabilities.
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Run configuration (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write an SVG histogram per response.
    #[arg(long)]
    pub svg: bool,
    /// Exchange shape and scale of every Weibull marginal.
    #[arg(long)]
    pub swap_weibull: bool,
    #[arg(long, env = "PPF_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lra,
    Pce,
    Mcs,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lra => Method::Lra,
            MethodArg::Pce => Method::Pce,
            MethodArg::Mcs => Method::Mcs,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference run directory (usually Monte Carlo).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Output file; JSON when it ends in `.json`, CSV otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Input(_) | CliError::Io { .. } => 2,
        }
    }
}

impl From<PpfError> for CliError {
    fn from(e: PpfError) -> Self {
        match e {
            PpfError::PowerFlow(
                PowerFlowError::UnknownResponse(_) | PowerFlowError::InjectionShape { .. },
            ) => CliError::Input(e.to_string()),
            PpfError::TooManyFailedSolves { .. } | PpfError::PowerFlow(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Ppf(p) => p.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io(format!("cannot read {}", path.display())))
}

fn parse_text<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Input(format!("cannot parse {}: {e}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Parse arguments, run, print diagnostics and map errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Pf(a) => cmd_pf(&a),
        Command::Ppf(a) => cmd_ppf(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

#[derive(Debug, Serialize)]
struct BusRow {
    bus: i64,
    kind: BusKind,
    vm: f64,
    va_deg: f64,
    qg_mvar: f64,
}

#[derive(Debug, Serialize)]
struct PfOutput {
    converged: bool,
    iterations: usize,
    max_mismatch: f64,
    pv_to_pq_switches: Vec<i64>,
    buses: Vec<BusRow>,
}

pub fn cmd_pf(args: &PfArgs) -> Result<(), CliError> {
    let case = parse_case(&read(&args.case)?)?;
    let model = PowerFlowModel::new(&case);
    let opts = SolveOptions {
        enforce_q_limits: !args.no_q_limits,
        ..SolveOptions::default()
    };
    let sol = model
        .solve(&InjectionSet::from_case(&case), &opts)
        .map_err(|e| match e {
            PowerFlowError::InjectionShape { .. } | PowerFlowError::UnknownResponse(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        })?;
    let buses: Vec<BusRow> = case
        .buses
        .iter()
        .enumerate()
        .map(|(k, b)| BusRow {
            bus: b.id,
            kind: sol.kinds[k],
            vm: sol.vm[k],
            va_deg: sol.va[k].to_degrees(),
            qg_mvar: sol.qg[k],
        })
        .collect();
    let text = match args.format {
        Format::Json => to_json(&PfOutput {
            converged: sol.converged,
            iterations: sol.iterations,
            max_mismatch: sol.max_mismatch,
            pv_to_pq_switches: sol.pv_to_pq_switches.clone(),
            buses,
        }),
        Format::Csv => {
            let mut s = String::from("bus,kind,vm,va_deg,qg_mvar\n");
            for b in &buses {
                writeln!(s, "{},{:?},{},{},{}", b.bus, b.kind, b.vm, b.va_deg, b.qg_mvar).unwrap();
            }
            s
        }
    };
    fs::write(&args.out, text).map_err(io(format!("cannot write {}", args.out.display())))
}

/// Provenance of a run directory. `study.json` and `config.json` in the
/// same directory reproduce the run: `ppf --uncertainty study.json
/// --config config.json --method <method>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub method: Method,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: PpfConfig,
    /// SHA-256 of every input file.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every output file other than the manifest.
    pub outputs: BTreeMap<String, String>,
    pub timings: Timings,
}

#[derive(Debug, Deserialize)]
struct LimitsFile {
    #[serde(default)]
    limits: Vec<Limit>,
}

fn resolve_config(args: &PpfArgs, method: Method) -> Result<PpfConfig, CliError> {
    let mut config = match &args.config {
        Some(p) => parse_text::<PpfConfig>(p)?,
        None => PpfConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(m) = args.samples {
        match method {
            Method::Mcs => config.mcs_samples = m,
            Method::Lra | Method::Pce => config.ed_max = Some(m),
        }
    }
    Ok(config)
}

pub fn cmd_ppf(args: &PpfArgs) -> Result<(), CliError> {
    let method: Method = args.method.into();
    let mut config = resolve_config(args, method)?;
    let mut study = Study::load(&args.uncertainty)?;
    let mut inputs = BTreeMap::new();
    let mut hash_input = |p: &Path| -> Result<(), CliError> {
        let bytes = fs::read(p).map_err(io(format!("cannot read {}", p.display())))?;
        inputs.insert(p.display().to_string(), sha256_hex(&bytes));
        Ok(())
    };
    hash_input(&args.uncertainty)?;
    if let Some(c) = &args.config {
        hash_input(c)?;
    }
    if let Some(case) = &args.case {
        study.case = Some(case.clone());
    }
    let case_path = study
        .case
        .clone()
        .ok_or_else(|| CliError::Input("no case: pass --case or name one in the study".into()))?;
    hash_input(&case_path)?;
    study.case = Some(fs::canonicalize(&case_path).unwrap_or(case_path));
    if !args.responses.is_empty() {
        study.responses = args.responses.clone();
    }
    if let Some(p) = &args.limits {
        hash_input(p)?;
        study.limits = parse_text::<LimitsFile>(p)?.limits;
    }
    if !args.quantiles.is_empty() {
        study.quantiles = args.quantiles.clone();
    }
    if args.swap_weibull {
        study.inputs.swap_weibull();
    }
    if study.responses.is_empty() {
        return Err(CliError::Input("no responses requested".into()));
    }
    if config.quantiles.is_empty() {
        config.quantiles = study.quantiles.clone();
    }
    let problem = study.problem(study.load_case()?)?;

    let result = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(|| run(&problem, method, &config)),
        None => run(&problem, method, &config),
    }?;

    let mut files: Vec<(String, String)> = vec![
        ("summary.json".into(), to_json(&result.report)),
        ("summary.csv".into(), report::summary_csv(&result.report)),
        ("violations.csv".into(), report::violations_csv(&result.report)),
        ("study.json".into(), to_json(&study)),
        ("config.json".into(), to_json(&config)),
    ];
    if !result.surrogates.is_empty() {
        files.push(("surrogates.json".into(), to_json(&result.surrogates)));
    }
    for s in &result.report.responses {
        let stem = report::file_stem(&s.response);
        files.push((format!("dist_{stem}.csv"), report::distribution_csv(s)));
        if args.svg {
            files.push((format!("hist_{stem}.svg"), report::histogram_svg(s)));
        }
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        method,
        seed: config.seed,
        threads: args.threads,
        config: config.clone(),
        inputs,
        outputs: files
            .iter()
            .map(|(n, t)| (n.clone(), sha256_hex(t.as_bytes())))
            .collect(),
        timings: result.timings,
    };
    files.push(("manifest.json".into(), to_json(&manifest)));
    write_run_dir(&args.out, &files)?;
    print!("{}", report::summary_csv(&result.report));
    Ok(())
}

/// Write all files into a staging directory next to `out`, then move it
/// into place. An existing `out` is replaced only if it is empty or holds
/// a previous run.
fn write_run_dir(out: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    if out.exists() {
        let previous_run = out.join("manifest.json").exists();
        let empty = fs::read_dir(out)
            .map_err(io(format!("cannot read {}", out.display())))?
            .next()
            .is_none();
        if !(previous_run || empty) {
            return Err(CliError::Input(format!(
                "{} exists and is not a run directory",
                out.display()
            )));
        }
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io(format!("cannot create {}", parent.display())))?;
    let staging = tempfile::Builder::new()
        .prefix(".ppf-staging-")
        .tempdir_in(&parent)
        .map_err(io("cannot create staging directory"))?;
    for (name, text) in files {
        let path = staging.path().join(name);
        fs::write(&path, text).map_err(io(format!("cannot write {}", path.display())))?;
    }
    if out.exists() {
        fs::remove_dir_all(out).map_err(io(format!("cannot replace {}", out.display())))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, out).map_err(|source| {
        let _ = fs::remove_dir_all(&staged);
        CliError::Io {
            context: format!("cannot move results to {}", out.display()),
            source,
        }
    })
}

fn load_run(dir: &Path) -> Result<(PpfReport, Option<Timings>), CliError> {
    let report: PpfReport = serde_json::from_str(&read(&dir.join("summary.json"))?)
        .map_err(|e| CliError::Input(format!("cannot parse {}: {e}", dir.display())))?;
    let timings = read(&dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
        .map(|m| m.timings);
    Ok((report, timings))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let (reference, t_ref) = load_run(&args.reference)?;
    let (test, t_test) = load_run(&args.test)?;
    let cmp = compare(&test.responses, &reference.responses, t_test, t_ref)?;
    let text = if args.out.extension().is_some_and(|e| e == "json") {
        to_json(&cmp)
    } else {
        report::comparison_csv(&cmp)
    };
    fs::write(&args.out, &text).map_err(io(format!("cannot write {}", args.out.display())))?;
    print!("{}", report::comparison_csv(&cmp));
    Ok(())
}

/// Surrogates stored by a `ppf` run.
pub fn load_surrogates(dir: &Path) -> Result<Vec<Surrogate>, CliError> {
    serde_json::from_str(&read(&dir.join("surrogates.json"))?)
        .map_err(|e| CliError::Input(format!("cannot parse surrogates: {e}")))
}
