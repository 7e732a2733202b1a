use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{AdjustmentMode, BinGrid};
use crate::ingest::{Combine, GroupSpec, IngestSchema};

/// Bin edges per coordinate: `"e0,e1,e2;f0,f1"` on the command line,
/// nested arrays in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinEdges(pub Vec<Vec<f64>>);

impl FromStr for BinEdges {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.split(';')
            .map(|coord| {
                coord
                    .split(',')
                    .map(|e| {
                        e.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Argument(format!("bad bin edge {e:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map(BinEdges)
    }
}

impl BinEdges {
    pub fn grids(&self) -> Result<Vec<BinGrid>> {
        self.0.iter().map(|e| BinGrid::from_edges(e)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TwoStage,
    Adjustment,
    Dml,
}

/// Every option of every subcommand. Values come from, in increasing
/// priority: a replayed artifact, the `--config` TOML file, command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the config belongs to.
    #[arg(skip)]
    pub command: Option<String>,

    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Linear system file (JSON or TOML with matrices a, b, c, d).
    #[arg(long, global = true)]
    pub system: Option<PathBuf>,
    /// Random system generator when no system file is given: gaussian or wishart.
    #[arg(long, global = true)]
    pub generator: Option<String>,
    #[arg(long, global = true)]
    pub state_dim: Option<usize>,
    #[arg(long, global = true)]
    pub action_dim: Option<usize>,
    /// Entry scale of the gaussian generator.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    /// Rank of C for the wishart generator.
    #[arg(long, global = true)]
    pub rank_c: Option<usize>,
    /// Samples per Wishart draw.
    #[arg(long, global = true)]
    pub wishart_samples: Option<usize>,
    /// Seed of the system generator (defaults to --seed).
    #[arg(long, global = true)]
    pub system_seed: Option<u64>,

    /// Terminal time T of simulated rollouts.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Window length K.
    #[arg(long, short = 'k', global = true)]
    pub window: Option<usize>,
    /// Number of rollouts.
    #[arg(long, short = 'n', global = true)]
    pub n: Option<usize>,
    /// Shock scale for steps not covered by --sigmas.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Shock scales for t = 1, 2, ...
    #[arg(long, global = true, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,

    /// Action span M for the full-row-rank check.
    #[arg(long, global = true)]
    pub span: Option<usize>,
    #[arg(long, global = true)]
    pub rank_tol: Option<f64>,
    /// Last t of the covariance spectrum.
    #[arg(long, global = true)]
    pub max_t: Option<usize>,

    /// Rollout CSV written by `simulate`.
    #[arg(long, global = true)]
    pub rollouts: Option<PathBuf>,
    /// Time-series CSV to ingest.
    #[arg(long, global = true)]
    pub series: Option<PathBuf>,
    #[arg(long, global = true)]
    pub time_column: Option<String>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub action_columns: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub state_columns: Option<Vec<String>>,
    /// Natural log of ingested price and demand columns.
    #[arg(long, global = true)]
    pub log_transform: Option<bool>,
    #[arg(long, global = true)]
    pub group_column: Option<String>,
    /// Groups to keep, in order.
    #[arg(long, global = true, value_delimiter = ',')]
    pub groups: Option<Vec<String>>,
    /// concatenate or average.
    #[arg(long, global = true)]
    pub combine: Option<Combine>,
    /// Average consecutive blocks of this many rows.
    #[arg(long, global = true)]
    pub aggregate: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// strict or zero-fill.
    #[arg(long, global = true)]
    pub mode: Option<AdjustmentMode>,
    /// State bin edges, e.g. "14.539,15.014,15.837".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub state_bins: Option<BinEdges>,
    /// Action bin edges, e.g. "-0.479,0.131,0.683".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub action_bins: Option<BinEdges>,
    /// Equal-width bins per coordinate when no edges are given.
    #[arg(long, global = true)]
    pub bin_count: Option<usize>,
    /// Labels of the action bins, e.g. "Low,High".
    #[arg(long, global = true, value_delimiter = ',')]
    pub action_labels: Option<Vec<String>>,
    /// Queried action u.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub action: Option<Vec<f64>>,
    /// Second action u' for steerability.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub action_prime: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Bootstrap estimator: adjustment, adjustment-zero-fill, dml, two-stage or outcome-mean.
    #[arg(long, global = true)]
    pub estimator: Option<String>,
    /// Bootstrap reference estimator (default adjustment-zero-fill).
    #[arg(long, global = true)]
    pub reference: Option<String>,
    /// DML split seed (defaults to --seed).
    #[arg(long, global = true)]
    pub split_seed: Option<u64>,
}

impl RunConfig {
    /// Values set in `over` replace those in `self`.
    pub fn overlay(&self, over: &RunConfig) -> Result<RunConfig> {
        let mut base = serde_json::to_value(self)?;
        let top = serde_json::to_value(over)?;
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                if !v.is_null() {
                    b.insert(k.clone(), v.clone());
                }
            }
        }
        Ok(serde_json::from_value(base)?)
    }

    pub fn from_toml_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Argument("this command is stochastic and needs --seed".into()))
    }

    pub fn ingest_schema(&self) -> Result<IngestSchema> {
        let need = |v: &Option<Vec<String>>, flag: &str| {
            v.clone()
                .filter(|c| !c.is_empty())
                .ok_or_else(|| Error::Argument(format!("series input needs {flag}")))
        };
        Ok(IngestSchema {
            time_column: self.time_column.clone().unwrap_or_else(|| "t".into()),
            action_columns: need(&self.action_columns, "--action-columns")?,
            state_columns: need(&self.state_columns, "--state-columns")?,
            log_transform: self.log_transform.unwrap_or(false),
            group: self.group_column.as_ref().map(|c| GroupSpec {
                column: c.clone(),
                keep: self.groups.clone().unwrap_or_default(),
                combine: self.combine.unwrap_or_default(),
            }),
            aggregate: self.aggregate.unwrap_or(1),
        })
    }
}
