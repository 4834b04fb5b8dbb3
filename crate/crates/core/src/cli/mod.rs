//! Batch front-end of the `vortexmc` binary.
//!
//! Every run writes into `--out-dir`:
//!
//! * `manifest.json`: `{"tool", "version", "config", "resolved", "seed_scheme", "outputs"}`.
//!   `config` is a complete [`RunConfig`]; passing the manifest back through
//!   `--config` reproduces every output byte for byte.
//! * `green.csv`: `t,x1,x2,green`, with `G(d,0)` at `d = (t,t)`, `t = i/256`, `i < 128`.
//! * `trajectory.csv`: `step,time,vortex_index,gamma,x1,x2`; `diagnostics.json`.
//! * `samples.csv`: `sample_index,vortex_index,gamma,x1,x2`, where chain `c` holds
//!   sample indices `c·n_keep ..  (c+1)·n_keep`; `stats.json`.
//! * `fieldcheck.json`.
//! * `lln.jsonl`, `chaos.jsonl`: one `{"record":"row",…}` line per N, then one
//!   `{"record":"summary",…}` line. `clt.jsonl`: one row. Every record carries
//!   the parameter echo (`experiment`, `seed`, `m`, `beta`, `prior`,
//!   `epsilon_spec`, `schedule_c`, `chain`); rows also carry their chain `streams`.
//! * `density.csv`: `atom_value,i,j,rho` with grid point `(i/n, j/n)`; `meanfield.json`.
//!
//! Floats are printed in shortest round-trip form. On failure a single JSON
//! object `{"error":{"kind","message"}}` goes to stderr and the exit status
//! is nonzero.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gibbs::{epsilon_schedule, ChainSchedule};
use crate::limits::{EpsilonChoice, ExperimentConfig};
use crate::prior::IntensityPrior;
use crate::testfn::TestFunction;

pub const SEED_SCHEME: &str = "ChaCha8Rng::seed_from_u64(seed) with set_stream(id); \
Gibbs chain c at size N uses id = N*2^16 + c, split into position and intensity sub-streams; \
initial configurations (dynamics, fieldcheck) use id = 2^64-1; Gaussian field draws use id = 2^64-2";

/// Stream id of initial configurations.
pub const INIT_STREAM: u64 = u64::MAX;
/// Stream id of Gaussian field draws.
pub const FIELD_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Green,
    Dynamics,
    Sample,
    Fieldcheck,
    Lln,
    Clt,
    Chaos,
    Meanfield,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Green,
        Subcommand::Dynamics,
        Subcommand::Sample,
        Subcommand::Fieldcheck,
        Subcommand::Lln,
        Subcommand::Clt,
        Subcommand::Chaos,
        Subcommand::Meanfield,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Green => "green",
            Subcommand::Dynamics => "dynamics",
            Subcommand::Sample => "sample",
            Subcommand::Fieldcheck => "fieldcheck",
            Subcommand::Lln => "lln",
            Subcommand::Clt => "clt",
            Subcommand::Chaos => "chaos",
            Subcommand::Meanfield => "meanfield",
        }
    }

    fn needs_psi(self) -> bool {
        matches!(self, Subcommand::Lln | Subcommand::Clt | Subcommand::Chaos)
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown subcommand {s:?} (expected one of green, dynamics, sample, fieldcheck, lln, clt, chaos, meanfield)"
                ))
            })
    }
}

/// `--epsilon`: a number, or `auto` for the annealing schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonArg {
    Auto,
    Value(f64),
}

impl FromStr for EpsilonArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(EpsilonArg::Auto);
        }
        s.parse::<f64>()
            .map(EpsilonArg::Value)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

impl fmt::Display for EpsilonArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonArg::Auto => f.write_str("auto"),
            EpsilonArg::Value(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for EpsilonArg {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EpsilonArg::Auto => s.serialize_str("auto"),
            EpsilonArg::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for EpsilonArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(EpsilonArg::Value(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub thin: usize,
    pub n_keep: usize,
    pub n_chains: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub grid: usize,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Amplitude `a` of the initial density `1 + a γ √2 cos(2πx₁)`.
    pub perturb: f64,
}

/// Fully resolved run description; also the `config` block of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub m: f64,
    pub beta: f64,
    pub epsilon: EpsilonArg,
    pub n_vortices: usize,
    pub modes_tail_tol: f64,
    pub prior_spec: String,
    pub seed: u64,
    pub chain: ChainConfig,
    pub psi_file: Option<PathBuf>,
    /// Second test function of `chaos`; defaults to `psi_file`.
    pub psi2_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub schedule_c: f64,
    pub eps_min: f64,
    /// N ladder of `lln` and `chaos`; empty means `[n_vortices]`.
    pub ladder: Vec<usize>,
    pub dynamics: DynamicsConfig,
    pub field_samples: usize,
    pub meanfield: MeanFieldConfig,
}

impl RunConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        Self {
            subcommand,
            m: 1.0,
            beta: 1.0,
            epsilon: EpsilonArg::Value(0.1),
            n_vortices: 16,
            modes_tail_tol: 1e-8,
            prior_spec: "rademacher".into(),
            seed: 0,
            chain: ChainConfig {
                burn_in: 1000,
                thin: 10,
                n_keep: 1000,
                n_chains: 4,
            },
            psi_file: None,
            psi2_file: None,
            out_dir: PathBuf::from("out"),
            schedule_c: 1.0,
            eps_min: 0.0,
            ladder: Vec::new(),
            dynamics: DynamicsConfig {
                dt: 1e-3,
                steps: 1000,
                record_every: 10,
            },
            field_samples: 100_000,
            meanfield: MeanFieldConfig {
                grid: 64,
                damping: 0.5,
                tol: 1e-12,
                max_iter: 10_000,
                perturb: 0.0,
            },
        }
    }

    pub fn prior(&self) -> Result<IntensityPrior> {
        self.prior_spec.parse()
    }

    pub fn ladder(&self) -> Vec<usize> {
        if self.ladder.is_empty() {
            vec![self.n_vortices]
        } else {
            self.ladder.clone()
        }
    }

    /// Sizes whose ε the run needs.
    fn sizes(&self) -> Vec<usize> {
        match self.subcommand {
            Subcommand::Lln | Subcommand::Chaos => self.ladder(),
            _ => vec![self.n_vortices],
        }
    }

    pub fn epsilon_choice(&self) -> EpsilonChoice {
        match self.epsilon {
            EpsilonArg::Auto => EpsilonChoice::Schedule {
                c: self.schedule_c,
                eps_min: self.eps_min,
            },
            EpsilonArg::Value(e) => EpsilonChoice::Fixed(e),
        }
    }

    pub fn resolve_epsilon(&self, n: usize) -> Result<f64> {
        match self.epsilon {
            EpsilonArg::Auto => epsilon_schedule(n, self.schedule_c, self.m, self.eps_min),
            EpsilonArg::Value(e) => Ok(e),
        }
    }

    pub fn schedule(&self) -> ChainSchedule {
        ChainSchedule {
            burn_in: self.chain.burn_in,
            thin: self.chain.thin,
            n_keep: self.chain.n_keep,
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            m: self.m,
            beta: self.beta,
            prior: self.prior()?,
            epsilon: self.epsilon_choice(),
            tail_tol: self.modes_tail_tol,
            chain: self.schedule(),
            n_chains: self.chain.n_chains,
            seed: self.seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.m > 0.0 && self.m <= 2.0) {
            return bad(format!("--m must lie in (0, 2], got {}", self.m));
        }
        if !self.beta.is_finite() {
            return bad(format!("--beta must be finite, got {}", self.beta));
        }
        if let EpsilonArg::Value(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("--epsilon must be positive, got {e}"));
            }
        } else if !(self.m < 2.0) {
            return Err(Error::ScheduleUndefined(self.m));
        }
        if !(self.modes_tail_tol > 0.0) {
            return bad(format!(
                "--modes-tail-tol must be positive, got {}",
                self.modes_tail_tol
            ));
        }
        if self.n_vortices == 0 {
            return bad("--n-vortices must be >= 1".into());
        }
        self.prior()?;
        if self.subcommand.needs_psi() && self.psi_file.is_none() {
            return bad(format!("{} requires --psi-file", self.subcommand.name()));
        }
        if matches!(
            self.subcommand,
            Subcommand::Sample | Subcommand::Lln | Subcommand::Clt | Subcommand::Chaos
        ) {
            self.schedule().validate()?;
            if self.chain.n_chains == 0 {
                return bad("--n-chains must be >= 1".into());
            }
        }
        if self.ladder.contains(&0) {
            return bad("--ladder entries must be >= 1".into());
        }
        for n in self.sizes() {
            self.resolve_epsilon(n)?;
        }
        Ok(())
    }
}

/// Command-line flags. Every flag overrides the matching field of `--config`.
#[derive(Parser, Debug, Default)]
#[command(
    name = "vortexmc",
    version,
    about = "Point-vortex Gibbs ensembles on the torus",
    allow_negative_numbers = true
)]
pub struct Args {
    /// green | dynamics | sample | fieldcheck | lln | clt | chaos | meanfield
    pub subcommand: Option<String>,
    /// Run configuration or manifest JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Number, or "auto" for ε = C (ln N)^{-2/(2-m)}.
    #[arg(long)]
    pub epsilon: Option<EpsilonArg>,
    #[arg(long)]
    pub n_vortices: Option<usize>,
    #[arg(long)]
    pub modes_tail_tol: Option<f64>,
    /// rademacher | uniform:a,b | discrete:v1:w1,v2:w2,...
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub n_keep: Option<usize>,
    #[arg(long)]
    pub n_chains: Option<usize>,
    #[arg(long)]
    pub psi_file: Option<PathBuf>,
    #[arg(long)]
    pub psi2_file: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub schedule_c: Option<f64>,
    #[arg(long)]
    pub eps_min: Option<f64>,
    /// Comma-separated N values.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub field_samples: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub perturb: Option<f64>,
    /// Worker threads for chain-level parallelism.
    #[arg(long, env = "VORTEXMC_JOBS")]
    pub jobs: Option<usize>,
}

/// Reads a run configuration, or the `config` block of a manifest.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut v: Value = serde_json::from_str(&text)?;
    if let Some(inner) = v.get_mut("config") {
        v = inner.take();
    }
    Ok(serde_json::from_value(v)?)
}

impl Args {
    pub fn resolve(&self) -> Result<RunConfig> {
        let sub = self.subcommand.as_deref().map(Subcommand::from_str).transpose()?;
        let mut c = match (&self.config, sub) {
            (Some(path), _) => load_config(path)?,
            (None, Some(s)) => RunConfig::new(s),
            (None, None) => {
                return Err(Error::InvalidParameter("missing subcommand (or --config)".into()));
            }
        };
        if let Some(s) = sub {
            c.subcommand = s;
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$($field).+ = v.clone(); })*
            };
        }
        set!(
            m => m, beta => beta, epsilon => epsilon, n_vortices => n_vortices,
            modes_tail_tol => modes_tail_tol, prior => prior_spec, seed => seed,
            burn_in => chain.burn_in, thin => chain.thin, n_keep => chain.n_keep,
            n_chains => chain.n_chains, out_dir => out_dir, schedule_c => schedule_c,
            eps_min => eps_min, ladder => ladder, dt => dynamics.dt, steps => dynamics.steps,
            record_every => dynamics.record_every, field_samples => field_samples,
            grid => meanfield.grid, damping => meanfield.damping, tol => meanfield.tol,
            max_iter => meanfield.max_iter, perturb => meanfield.perturb,
        );
        if let Some(p) = &self.psi_file {
            c.psi_file = Some(p.clone());
        }
        if let Some(p) = &self.psi2_file {
            c.psi2_file = Some(p.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

pub(crate) fn read_psi(path: &Path) -> Result<TestFunction> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    TestFunction::from_json(&text)
}

/// Files written by a run, in order, plus the `resolved` manifest block.
pub(crate) struct RunOutput {
    pub files: Vec<(String, String)>,
    pub resolved: serde_json::Map<String, Value>,
}

pub fn manifest(config: &RunConfig, resolved: serde_json::Map<String, Value>, outputs: &[String]) -> Value {
    json!({
        "tool": "vortexmc",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "resolved": resolved,
        "seed_scheme": SEED_SCHEME,
        "outputs": outputs,
    })
}

/// Runs `config` and writes all outputs; returns the manifest.
pub fn run(config: &RunConfig, jobs: Option<usize>) -> Result<Value> {
    config.validate()?;
    let out = match jobs {
        Some(0) => return Err(Error::InvalidParameter("--jobs must be >= 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| commands::dispatch(config))?,
        None => commands::dispatch(config)?,
    };
    fs::create_dir_all(&config.out_dir)?;
    let mut names = Vec::new();
    for (name, body) in &out.files {
        fs::write(config.out_dir.join(name), body)?;
        names.push(name.clone());
    }
    let m = manifest(config, out.resolved, &names);
    fs::write(config.out_dir.join("manifest.json"), to_pretty(&m))?;
    Ok(m)
}

pub(crate) fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return 2;
        }
    };
    let result = args.resolve().and_then(|c| run(&c, args.jobs));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            match e {
                Error::InvalidParameter(_) | Error::PriorSpec(_) | Error::ScheduleUndefined(_) | Error::Parse(_) => 2,
                _ => 1,
            }
        }
    }
}
