//! The `alphaloss` command line.
//!
//! Every subcommand takes its settings from flags, from a JSON `--config` file
//! whose keys are the flag names in snake_case, or from the documented
//! defaults, in that order of precedence. Outputs are staged in temporary
//! files and renamed into place only after the whole command has succeeded.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::data::{GmmSpecJson, Preset};
use crate::error::{Error, Result};
use crate::loss::Alpha;

pub use commands::{
    cmd_certify, cmd_gen_data, cmd_landscape, cmd_ngd, cmd_saturation, cmd_tilted, Output,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ALPHALOSS_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "alphaloss", version, about = "Alpha-loss landscapes, certificates and NGD runs in the logistic model")]
pub struct Cli {
    /// Directory for output files [default: current directory]
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,

    /// JSON file of settings for the subcommand; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a mixture, normalize it into the unit ball, write CSV plus a JSON sidecar
    GenData(GenDataArgs),
    /// Empirical risk on a 2-D parameter grid, one CSV per alpha
    Landscape(LandscapeArgs),
    /// Strong-convexity and SLQC certificate report with the alpha-evolution table
    Certify(CertifyArgs),
    /// Normalized gradient descent with the iteration budget, against a projected-GD reference
    Ngd(NgdArgs),
    /// Uniform distance between risks at alpha and at infinity, against the Lipschitz bound
    Saturation(SaturationArgs),
    /// Tilted posteriors, Arimoto entropies and minimal risks of a discrete joint
    Tilted(TiltedArgs),
}

/// An α given as a decimal or `inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaArg(pub Alpha<f64>);

impl FromStr for AlphaArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(AlphaArg)
    }
}

impl fmt::Display for AlphaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for AlphaArg {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Alpha::Finite(v) => s.serialize_f64(v),
            Alpha::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for AlphaArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Alpha::new(v).map(AlphaArg).map_err(de::Error::custom),
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

/// Mixture to sample from.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct SourceArgs {
    /// Figure preset: fig1, fig2 or fig3 [default: depends on the subcommand]
    #[arg(long)]
    pub preset: Option<Preset>,

    /// JSON mixture (keys prior_neg, mean_neg, mean_pos, cov_neg, cov_pos) instead of a preset
    #[arg(long)]
    pub spec_file: Option<PathBuf>,

    /// Inline mixture, config file only
    #[arg(skip)]
    pub spec: Option<GmmSpecJson>,

    /// Number of samples [default: 100000 for gen-data, landscape and saturation; 5000 for certify and ngd]
    #[arg(long)]
    pub n: Option<usize>,

    /// Seed for sampling and for every random draw in the command [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Dataset from a CSV file or sampled from a mixture.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct DataArgs {
    /// Dataset CSV with header y,x_1,...,x_d; excludes --preset, --spec-file and --n
    #[arg(long)]
    pub data: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct GridArgs {
    /// Lower end of each grid axis [default: -r]
    #[arg(long, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,

    /// Upper end of each grid axis [default: r]
    #[arg(long, allow_hyphen_values = true)]
    pub grid_max: Option<f64>,

    /// Points per grid axis [default: 41]
    #[arg(long)]
    pub grid_count: Option<usize>,

    /// Keep grid nodes outside the ball of radius r
    #[arg(long)]
    #[serde(default)]
    pub no_mask: bool,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct GenDataArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,

    /// Output file stem [default: <preset>_n<n>_seed<seed>]
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct LandscapeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,

    /// Comma-separated orders, `inf` allowed [default: the preset's figure orders, else 1]
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<AlphaArg>>,

    /// Hypothesis radius [default: the preset's figure radius, else 5]
    #[arg(long)]
    pub r: Option<f64>,

    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,

    /// Order of the certified risk [default: 1]
    #[arg(long)]
    pub alpha: Option<AlphaArg>,

    /// Hypothesis radius [default: the preset's figure radius, else 5]
    #[arg(long)]
    pub r: Option<f64>,

    /// Value-gap tolerance epsilon_0 [default: 0.4]
    #[arg(long)]
    pub epsilon0: Option<f64>,

    /// SLQC kappa for the sweep [default: the Lipschitz constant C_{r,alpha}; required when alpha > 1]
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Reference point theta_0, comma-separated [default: projected-GD minimizer of the risk]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta0: Option<Vec<f64>>,

    /// Points in the SLQC sweep [default: 1000]
    #[arg(long)]
    pub sweep: Option<usize>,

    /// Draws for the gradient-infimum estimate [default: 10000]
    #[arg(long)]
    pub i_budget: Option<usize>,

    /// Factor in (0, 1] applied to the estimated gradient infimum [default: 1]
    #[arg(long)]
    pub safety_factor: Option<f64>,

    /// Treat an empty qualifying set (I = inf) as an unbounded alpha-window
    #[arg(long)]
    #[serde(default)]
    pub accept_unbounded: bool,

    /// Orders for the evolution table [default: 11 points from alpha up to twice the window]
    #[arg(long, value_delimiter = ',')]
    pub evolution_alphas: Option<Vec<AlphaArg>>,

    /// Projected-GD steps for the default theta_0 [default: 20000]
    #[arg(long)]
    pub ref_steps: Option<usize>,

    /// Projected-GD step size for the default theta_0 [default: 0.1]
    #[arg(long)]
    pub ref_step: Option<f64>,

    /// Include every sweep verdict in the report
    #[arg(long)]
    #[serde(default)]
    pub points: bool,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct NgdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,

    /// Order of the minimized risk [default: 1]
    #[arg(long)]
    pub alpha: Option<AlphaArg>,

    /// Hypothesis and projection radius [default: the preset's figure radius, else 5]
    #[arg(long)]
    pub r: Option<f64>,

    /// Target accuracy epsilon [default: 0.05]
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// SLQC kappa [default: the Lipschitz constant C_{r,alpha}; required when alpha > 1]
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Learning rate [default: epsilon/kappa]
    #[arg(long)]
    pub eta: Option<f64>,

    /// Iterations [default: the budget ceil(kappa^2 |theta_1 - theta*|^2 / epsilon^2)]
    #[arg(long)]
    pub iters: Option<usize>,

    /// Starting point, comma-separated [default: uniform draw from the ball]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta1: Option<Vec<f64>>,

    /// Projected-GD steps for the reference minimizer [default: 100000]
    #[arg(long)]
    pub ref_steps: Option<usize>,

    /// Projected-GD step size for the reference minimizer [default: 0.1]
    #[arg(long)]
    pub ref_step: Option<f64>,

    /// Write the per-iteration trace CSV
    #[arg(long)]
    #[serde(default)]
    pub trace: bool,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct SaturationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,

    /// Comma-separated orders in [1, inf] [default: 1,2,4,10,inf]
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<AlphaArg>>,

    /// Hypothesis radius [default: the preset's figure radius, else 5]
    #[arg(long)]
    pub r: Option<f64>,

    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct TiltedArgs {
    /// Joint distribution as a headerless CSV matrix (row = x, column = y)
    #[arg(long)]
    pub joint: Option<PathBuf>,

    /// Posterior to score, same layout, rows summing to 1
    #[arg(long)]
    pub posterior: Option<PathBuf>,

    /// Comma-separated orders [default: 0.5,1,2,inf]
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<AlphaArg>>,
}

/// Field-wise fallback: values set on `self` win.
trait Merge {
    fn merge(self, fallback: Self) -> Self;
}

macro_rules! impl_merge {
    ($t:ty { $($opt:ident),* ; $($flag:ident),* ; $($nested:ident),* }) => {
        impl Merge for $t {
            fn merge(self, o: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(o.$opt),)*
                    $($flag: self.$flag || o.$flag,)*
                    $($nested: self.$nested.merge(o.$nested),)*
                }
            }
        }
    };
}

impl_merge!(SourceArgs { preset, spec_file, spec, n, seed ; ; });
impl_merge!(DataArgs { data ; ; source });
impl_merge!(GridArgs { grid_min, grid_max, grid_count ; no_mask ; });
impl_merge!(GenDataArgs { name ; ; source });
impl_merge!(LandscapeArgs { alphas, r ; ; data, grid });
impl_merge!(CertifyArgs {
    alpha, r, epsilon0, kappa, theta0, sweep, i_budget, safety_factor, evolution_alphas, ref_steps, ref_step ;
    accept_unbounded, points ;
    data
});
impl_merge!(NgdArgs { alpha, r, epsilon, kappa, eta, iters, theta1, ref_steps, ref_step ; trace ; data });
impl_merge!(SaturationArgs { alphas, r ; ; data, grid });
impl_merge!(TiltedArgs { joint, posterior, alphas ; ; });

/// Reads a config file, rejecting keys the subcommand does not know.
fn load_config<T: DeserializeOwned + Serialize + Default>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::usage(format!("config {}: {e}", path.display())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::usage(format!("config {} must hold a JSON object", path.display())))?;
    let known = serde_json::to_value(T::default()).expect("settings serialize");
    let known = known.as_object().expect("settings serialize to an object");
    let mut unknown: Vec<&str> = obj.keys().filter(|k| !known.contains_key(*k)).map(String::as_str).collect();
    if !unknown.is_empty() {
        unknown.sort_unstable();
        return Err(Error::usage(format!(
            "config {} has unknown keys: {}",
            path.display(),
            unknown.join(", ")
        )));
    }
    serde_json::from_value(value).map_err(|e| Error::usage(format!("config {}: {e}", path.display())))
}

fn with_config<T>(args: T, config: Option<&Path>) -> Result<T>
where
    T: Merge + DeserializeOwned + Serialize + Default,
{
    match config {
        Some(path) => Ok(args.merge(load_config(path)?)),
        None => Ok(args),
    }
}

/// Runs the parsed command and writes its outputs. Returns the written paths.
pub fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    let config = cli.config.as_deref();
    let outputs = match cli.command {
        Command::GenData(a) => cmd_gen_data(&with_config(a, config)?)?,
        Command::Landscape(a) => cmd_landscape(&with_config(a, config)?)?,
        Command::Certify(a) => cmd_certify(&with_config(a, config)?)?,
        Command::Ngd(a) => cmd_ngd(&with_config(a, config)?)?,
        Command::Saturation(a) => cmd_saturation(&with_config(a, config)?)?,
        Command::Tilted(a) => cmd_tilted(&with_config(a, config)?)?,
    };
    let dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
    write_outputs(&dir, &outputs)
}

/// Stages every output as a temporary file in `dir`, then renames them all into place.
pub fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::with_capacity(outputs.len());
    for out in outputs {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(&out.bytes)
            .and_then(|_| tmp.flush())
            .map_err(|e| Error::io(tmp.path(), e))?;
        staged.push((tmp, dir.join(&out.name)));
    }
    staged
        .into_iter()
        .map(|(tmp, path)| {
            tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
            Ok(path)
        })
        .collect()
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
