//! Run configuration: JSON file values overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

use avoidset::geom::BoxDoc;
use avoidset::nested::ScheduleMode;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "avoidset",
    version,
    about = "Configuration-avoiding sets: stages, trees, verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// List the preset catalog
    Presets,
    /// Build a lattice stage and certify its gap
    Stage,
    /// Build a nested ball tree
    Tree,
    /// Search a point cloud for forbidden tuples
    Verify,
    /// Angle, distance, direction and covering reports
    Analyze,
    /// Box-counting table and slope
    Dim,
    /// Generate or validate a scale schedule
    Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Relaxed,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON configuration file
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Shorthand for --mode strict
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, value_enum)]
    pub pruning: Option<Switch>,
    /// Preset name, optionally with a member (`right_angle:P2`)
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Preset parameter `key=value`, repeatable
    #[arg(long = "param", global = true)]
    pub params: Vec<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub d: Option<u32>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Point cloud CSV
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Stage scale `p/q`
    #[arg(long, global = true)]
    pub h: Option<String>,
    /// Stage grid N
    #[arg(long, global = true)]
    pub grid: Option<u64>,
    /// Relaxed schedule ratio `p/q`
    #[arg(long, global = true)]
    pub ratio: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalconerConfig {
    pub scales: Vec<u64>,
    pub i_max: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_falconer_n")]
    pub n: u64,
}

fn default_samples() -> usize {
    200
}

fn default_falconer_n() -> u64 {
    2
}

/// Everything a run depends on; echoed into every output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub preset: Option<String>,
    pub params: BTreeMap<String, String>,
    pub n: Option<usize>,
    pub d: Option<u32>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub input: Option<String>,
    /// Stage: anchor points as `p/q` coordinates.
    pub anchor: Option<Vec<Vec<String>>>,
    /// Stage: which polynomial of the preset's system drives the lattice.
    pub poly_index: usize,
    pub h: Option<String>,
    pub grid: Option<u64>,
    pub bounding_box: Option<BoxDoc>,
    /// Stage: `record` or `require` the thickness relation.
    pub thickness: Option<String>,
    pub perturbations: Option<usize>,
    pub mode: Option<ScheduleMode>,
    pub levels: Option<usize>,
    pub ratio: Option<String>,
    /// Schedule: explicit levels to validate instead of generating.
    pub schedule: Option<Vec<String>>,
    /// Tree: `grid` or `stage` nets.
    pub net: Option<String>,
    pub root: Option<Vec<String>>,
    pub mass_trials: Option<usize>,
    pub mass_constant: Option<f64>,
    pub pruning: Option<bool>,
    /// Dim: `cantor` or `input`.
    pub source: Option<String>,
    pub cantor_stage: Option<u32>,
    pub scales: Option<Vec<String>>,
    pub scale_range: Option<(f64, f64, usize)>,
    pub excluded_distances: Vec<String>,
    pub cos2_targets: Vec<String>,
    pub falconer: Option<FalconerConfig>,
}

/// A config problem; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn load_file(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(command: Command, flags: &Flags) -> anyhow::Result<RunConfig> {
        let mut cfg = match &flags.config {
            Some(p) => load_file(Path::new(p))?,
            None => RunConfig::default(),
        };
        if let Some(c) = cfg.command {
            if c != command {
                return Err(usage(format!(
                    "config is for command '{}', not '{}'",
                    serde_json::to_value(c)?.as_str().unwrap_or_default(),
                    serde_json::to_value(command)?.as_str().unwrap_or_default()
                )));
            }
        }
        cfg.command = Some(command);
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        macro_rules! take {
            ($($f:ident),*) => {$(
                if flags.$f.is_some() {
                    cfg.$f = flags.$f.clone();
                }
            )*};
        }
        take!(threads, out, preset, n, d, levels, input, h, grid, ratio);
        if flags.strict {
            cfg.mode = Some(ScheduleMode::Strict);
        } else if let Some(m) = flags.mode {
            cfg.mode = Some(match m {
                ModeArg::Strict => ScheduleMode::Strict,
                ModeArg::Relaxed => ScheduleMode::Relaxed,
            });
        }
        if let Some(p) = flags.pruning {
            cfg.pruning = Some(p == Switch::On);
        }
        for kv in &flags.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--param expects key=value, got '{kv}'")))?;
            cfg.params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> (Command, Flags) {
        let mut argv = vec!["avoidset"];
        argv.extend_from_slice(args);
        let cli = Cli::try_parse_from(argv).unwrap();
        (cli.command, cli.flags)
    }

    #[test]
    fn params_and_strict() {
        let (c, f) = flags(&["schedule", "--strict", "--param", "q = 1/4", "--pruning", "off"]);
        let cfg = RunConfig::resolve(c, &f).unwrap();
        assert_eq!(cfg.mode, Some(ScheduleMode::Strict));
        assert_eq!(cfg.params["q"], "1/4");
        assert_eq!(cfg.pruning, Some(false));
        assert_eq!(cfg.command, Some(Command::Schedule));
    }

    #[test]
    fn bad_param_is_usage() {
        let (c, f) = flags(&["verify", "--param", "q"]);
        let err = RunConfig::resolve(c, &f).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            preset: Some("collinear".into()),
            falconer: Some(FalconerConfig {
                scales: vec![4],
                i_max: 1,
                samples: 200,
                n: 2,
            }),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"falconer": {"scales": [4], "i_max": 1}}"#).unwrap();
        assert_eq!(partial.falconer.unwrap().samples, 200);
    }
}
