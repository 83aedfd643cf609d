//! Command-line and key=value configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cbce::cbce::PriorKind;
use cbce::intervals::Schedule;
use cbce::potentials::PotentialKind;

#[derive(Debug, Parser)]
#[command(name = "cbce", version, about = "Coin-betting meta algorithms for changing environments")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the shifting-expert LEA scenario and write per-step losses.
    RunLea(LeaArgs),
    /// Simulate the shifting quadratic OCO scenario and write per-step losses.
    RunOco(OcoArgs),
    /// Run the randomized bound-compliance sweeps.
    CheckBounds(CheckArgs),
    /// Print the GC or DS partition of an interval.
    Partition(PartitionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialArg {
    Kt,
    An,
}

impl From<PotentialArg> for PotentialKind {
    fn from(p: PotentialArg) -> Self {
        match p {
            PotentialArg::Kt => PotentialKind::kt(),
            PotentialArg::An => PotentialKind::an(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Gc,
    Ds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Uniform,
    Barpi,
}

impl From<PriorArg> for PriorKind {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Uniform => PriorKind::Uniform,
            PriorArg::Barpi => PriorKind::BarPi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlackBoxArg {
    Ogd,
    Ftrl,
}

/// One algorithm to simulate. `Cbce(None)` takes the potential from
/// `--potential`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Cbce(Option<PotentialArg>),
    Saol,
    Atv,
    FixedShare,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "cbce" => Ok(Self::Cbce(None)),
            "cbce-an" => Ok(Self::Cbce(Some(PotentialArg::An))),
            "cbce-kt" => Ok(Self::Cbce(Some(PotentialArg::Kt))),
            "saol" => Ok(Self::Saol),
            "atv" => Ok(Self::Atv),
            "fixedshare" => Ok(Self::FixedShare),
            other => Err(format!(
                "unknown algorithm `{other}` (expected cbce, cbce-an, cbce-kt, saol, atv, fixedshare)"
            )),
        }
    }
}

/// Comma-separated algorithm list.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmList(pub Vec<Algorithm>);

impl FromStr for AlgorithmList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let list = s.split(',').map(str::parse).collect::<Result<Vec<_>, _>>()?;
        if list.is_empty() {
            return Err("empty algorithm list".into());
        }
        Ok(Self(list))
    }
}

/// Either a seed count `k` (seeds `0..k`) or an explicit comma-separated list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn resolve(&self) -> Vec<u64> {
        match self {
            Seeds::Count(k) => (0..*k).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

impl FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("bad seed `{x}`: {e}"));
        if s.contains(',') {
            s.split(',').map(parse).collect::<Result<_, _>>().map(Seeds::List)
        } else {
            parse(s).map(Seeds::Count)
        }
    }
}

impl fmt::Display for Seeds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seeds::Count(k) => write!(f, "{k}"),
            Seeds::List(v) => {
                let s: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{}", s.join(","))
            }
        }
    }
}

/// Flags shared by both simulation subcommands.
#[derive(Debug, Clone, Args)]
pub struct MetaArgs {
    /// key=value file with defaults for any flag below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated algorithms: cbce, cbce-an, cbce-kt, saol, atv, fixedshare.
    #[arg(long, default_value = "cbce")]
    pub meta: AlgorithmList,
    /// Potential of CBCE's meta-level bettors when `cbce` is listed.
    #[arg(long, value_enum, default_value = "an")]
    pub potential: PotentialArg,
    #[arg(long, value_enum, default_value = "ds")]
    pub schedule: ScheduleArg,
    /// Data streaming multiplier.
    #[arg(long, default_value_t = 2)]
    pub g: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub prior: PriorArg,
    /// Start each new run from the meta decision of the previous step.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub warm_start: bool,
    /// Seed count or comma-separated seed list.
    #[arg(long, default_value = "1")]
    pub seeds: Seeds,
    #[arg(long, default_value_t = 900)]
    pub horizon: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

impl MetaArgs {
    pub fn schedule(&self) -> Schedule {
        match self.schedule {
            ScheduleArg::Gc => Schedule::GeometricCovering,
            ScheduleArg::Ds => Schedule::DataStreaming { g: self.g },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LeaArgs {
    #[command(flatten)]
    pub common: MetaArgs,
    #[arg(long, default_value_t = 1000)]
    pub n_experts: usize,
    /// Standard deviation of the Gaussian loss draws.
    #[arg(long, default_value_t = 0.5)]
    pub noise_sigma: f64,
    /// Amount subtracted from the favored expert's loss.
    #[arg(long, default_value_t = 0.5)]
    pub favored_bonus: f64,
    /// Number of equal segments, each favoring the next expert.
    #[arg(long, default_value_t = 3)]
    pub segments: u64,
    /// Potential of the Sleeping CB black boxes.
    #[arg(long, value_enum, default_value = "an")]
    pub black_box_potential: PotentialArg,
    /// Shift count used to tune Fixed Share.
    #[arg(long, default_value_t = 2)]
    pub shifts: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OcoArgs {
    #[command(flatten)]
    pub common: MetaArgs,
    #[arg(long, value_enum, default_value = "ftrl")]
    pub black_box: BlackBoxArg,
    /// Radius of the per-step jitter of the quadratic centers.
    #[arg(long, default_value_t = 0.0)]
    pub noise_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    All,
    ActiveCardinality,
    Partitions,
    Wealth,
    SleepingBound,
    MetaBound,
    Ogd,
    Conversion,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub check: CheckKind,
    /// Random instances per sweep (each sweep has its own default).
    #[arg(long)]
    pub instances: Option<usize>,
    /// Largest t for the active-cardinality check.
    #[arg(long, default_value_t = 65536)]
    pub t_max: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Swap the flip truncation branches; every bound check should then fail.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    #[arg(long, value_enum, default_value = "gc")]
    pub schedule: ScheduleArg,
    #[arg(long, default_value_t = 2)]
    pub g: u64,
    pub start: u64,
    pub end: u64,
}

/// Read a flat `key = value` file into `--key value` arguments. Blank lines
/// and lines starting with `#` are skipped; underscores in keys become
/// dashes.
pub fn config_file_args(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let mut args = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), lineno + 1);
        };
        let key = key.trim().replace('_', "-");
        if key == "config" {
            bail!("{}:{}: nested config files are not supported", path.display(), lineno + 1);
        }
        args.push(format!("--{key}"));
        args.push(value.trim().to_string());
    }
    Ok(args)
}

/// Parse `argv`, splicing in the arguments of a `--config` file so that
/// flags given on the command line override the file.
pub fn parse_args<I, T>(argv: I) -> anyhow::Result<Cli>
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let config_path = argv.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=")
            .map(PathBuf::from)
            .or_else(|| (a == "--config").then(|| argv.get(i + 1).map(PathBuf::from)).flatten())
    });
    let Some(path) = config_path else {
        return Ok(Cli::try_parse_from(&argv)?);
    };
    if argv.len() < 2 {
        return Ok(Cli::try_parse_from(&argv)?);
    }
    let mut spliced = argv[..2].to_vec();
    spliced.extend(config_file_args(&path)?);
    spliced.extend_from_slice(&argv[2..]);
    Ok(Cli::try_parse_from(&spliced)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_parse() {
        assert_eq!("3".parse::<Seeds>().unwrap().resolve(), vec![0, 1, 2]);
        assert_eq!("4,9".parse::<Seeds>().unwrap().resolve(), vec![4, 9]);
        assert!("x".parse::<Seeds>().is_err());
    }

    #[test]
    fn algorithms_parse() {
        let list: AlgorithmList = "cbce,saol,fixedshare".parse().unwrap();
        assert_eq!(list.0, vec![Algorithm::Cbce(None), Algorithm::Saol, Algorithm::FixedShare]);
        assert!("cbce,foo".parse::<AlgorithmList>().is_err());
    }

    #[test]
    fn command_line_overrides_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# demo\nhorizon = 12\nn_experts = 5\nout = a.csv\n").unwrap();
        let cli = parse_args([
            "cbce",
            "run-lea",
            "--config",
            path.to_str().unwrap(),
            "--horizon",
            "30",
        ])
        .unwrap();
        let Command::RunLea(args) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(args.common.horizon, 30);
        assert_eq!(args.n_experts, 5);
        assert_eq!(args.common.out, PathBuf::from("a.csv"));
    }
}
