//! Flag definitions. Every setting is optional here so that config files
//! can supply it; defaults live with the commands.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand};
use dlfh::{Bandwidth, TrainMode};

#[derive(Debug, Parser)]
#[command(name = "dlfh", version, about = "Discrete latent factor hashing for cross-modal retrieval")]
pub struct Cli {
    /// `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (falls back to DLFH_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log more (-v: debug, -vv: trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired dataset split into train and query files.
    Synth(SynthArgs),
    /// Learn binary codes for the training set from its labels.
    Train(TrainArgs),
    /// Fit an out-of-sample hash function for one modality.
    FitOos(FitOosArgs),
    /// Hash feature rows with a fitted model.
    Encode(EncodeArgs),
    /// Mean average precision for both retrieval directions.
    Eval(EvalArgs),
    /// Training time over a ladder of dataset sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dim_x: Option<usize>,
    #[arg(long)]
    pub dim_y: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// `blobs` (Gaussian classes) or `xor` (two classes, not linearly separable).
    #[arg(long)]
    pub kind: Option<SynthKind>,
    #[arg(long)]
    pub query_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training label file (CSV of 0/1).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory receiving `u.dlfc` and `v.dlfc`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Objective trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trace_stride: Option<usize>,
    /// Stop when the relative objective change falls below this.
    #[arg(long)]
    pub early_stop: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitOosArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Training codes for the same modality (`u.dlfc` for x, `v.dlfc` for y).
    #[arg(long)]
    pub codes: Option<PathBuf>,
    #[arg(long)]
    pub modality: Option<ModalityArg>,
    #[arg(long)]
    pub oos: Option<OosArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub anchors: Option<usize>,
    /// `auto` or a positive width.
    #[arg(long)]
    pub bandwidth: Option<BandwidthArg>,
    #[arg(long)]
    pub kernel_reg: Option<f64>,
    #[arg(long)]
    pub newton_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Hashed image queries, ranked against the text database.
    #[arg(long)]
    pub query_image: Option<PathBuf>,
    /// Hashed text queries, ranked against the image database.
    #[arg(long)]
    pub query_text: Option<PathBuf>,
    #[arg(long)]
    pub db_image: Option<PathBuf>,
    #[arg(long)]
    pub db_text: Option<PathBuf>,
    #[arg(long)]
    pub query_labels: Option<PathBuf>,
    #[arg(long)]
    pub db_labels: Option<PathBuf>,
    /// Only the top K of each ranking count.
    #[arg(long)]
    pub map_at: Option<usize>,
    /// Report CSV; the report is printed either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated dataset sizes.
    #[arg(long)]
    pub sizes: Option<SizeList>,
    /// Comma-separated subset of `full,stochastic`.
    #[arg(long)]
    pub modes: Option<ModeList>,
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Long flag names accepted anywhere, for config file validation.
pub fn known_keys() -> Vec<String> {
    let cmd = Cli::command();
    let mut keys: Vec<String> = cmd
        .get_subcommands()
        .flat_map(|s| s.get_arguments())
        .chain(cmd.get_arguments())
        .filter_map(|a| a.get_long().map(String::from))
        .filter(|k| k != "config" && k != "help" && k != "version")
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "expected one of {}, got `{other}`",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }
    };
}

keyword_enum!(ModeArg { Full => "full", Stochastic => "stochastic" });
keyword_enum!(OosArg { Linear => "linear", Kernel => "kernel" });
keyword_enum!(SynthKind { Blobs => "blobs", Xor => "xor" });
keyword_enum!(ModalityArg { X => "x", Y => "y" });

impl From<ModeArg> for TrainMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => TrainMode::Full,
            ModeArg::Stochastic => TrainMode::Stochastic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandwidthArg(pub Bandwidth);

impl FromStr for BandwidthArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BandwidthArg(Bandwidth::Auto));
        }
        match s.parse::<f64>() {
            Ok(b) if b > 0.0 && b.is_finite() => Ok(BandwidthArg(Bandwidth::Fixed(b))),
            _ => Err(format!("bandwidth must be `auto` or a positive number, got `{s}`")),
        }
    }
}

impl fmt::Display for BandwidthArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Bandwidth::Auto => f.write_str("auto"),
            Bandwidth::Fixed(b) => write!(f, "{b}"),
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", p.trim())))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("empty list".into());
    }
    Ok(items)
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeList(pub Vec<usize>);

impl FromStr for SizeList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(SizeList)
    }
}

impl fmt::Display for SizeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeList(pub Vec<ModeArg>);

impl FromStr for ModeList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(ModeList)
    }
}

impl fmt::Display for ModeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0))
    }
}
