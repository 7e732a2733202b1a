//! Command-line surface: `steerkit <command> [--config FILE] [flags]`.
//!
//! Every JSON artifact carries `schema_version` and the resolved config, and
//! `--replay ARTIFACT` reruns the command it came from.

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use config::{BinEdges, Method, RunConfig};

use crate::dynamics::io::{read_batch, write_batch};
use crate::dynamics::{covariance_path, simulate_rollouts, DynamicsSpec, IsotropicGaussian, LinearSystem, RolloutBatch};
use crate::error::{Error, Result};
use crate::estimators::{
    adjustment_estimate, adjustment_estimate_cell, compute_rho, dml_estimate, ped_from_adjustment, steerability,
    two_stage_estimate, AdjustmentEstimate, AdjustmentMode, Discretization, DmlEstimate, OlsResidualizer, PedEstimate,
    TwoStageEstimate,
};
use crate::evaluation::{
    bootstrap, bootstrap_batch, overlap_sweep, sliding_window, write_bootstrap_csv, write_overlap_csv, ActionQuery,
    AdjustmentPed, BootstrapReport, DmlPed, OutcomeMean, ScalarEstimator, TimeSeries, TwoStageEntry,
    DEFAULT_REPLICATES,
};
use crate::identifiability::{
    check_full_row_rank_action, check_fully_spanning_shock, check_responsive_action, rank_sweep, spectrum,
    IdentifiabilityReport, ResponsivenessReport, ShockReport, SpectrumReport,
};
use crate::ingest::{ingest_csv, IngestAudit};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::SCHEMA_VERSION;

/// Print a progress line, ignoring a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "STEERKIT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "steerkit", version, about = "Steerability of consumption: simulate, identify, estimate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Rerun the command recorded in a JSON artifact.
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,

    /// Output directory (default: $STEERKIT_OUT_DIR, then the working directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(flatten)]
    pub options: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate rollouts to `rollouts.csv` + `rollouts.json`.
    Simulate,
    /// Rank and responsiveness checks for a linear system.
    Identify,
    /// Eigenvalues of the joint covariance for t = 1..max_t.
    Spectrum,
    /// Estimate steerability with two-stage, adjustment or DML.
    Estimate,
    /// Bootstrap bias and spread of an estimator.
    Bootstrap,
    /// Undefined-stratum diagnostics across window lengths.
    Overlap,
    /// Price elasticity of demand from adjustment or DML.
    Ped,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Identify => "identify",
            Command::Spectrum => "spectrum",
            Command::Estimate => "estimate",
            Command::Bootstrap => "bootstrap",
            Command::Overlap => "overlap",
            Command::Ped => "ped",
        }
    }

    fn from_name(name: &str) -> Result<Self> {
        [
            Command::Simulate,
            Command::Identify,
            Command::Spectrum,
            Command::Estimate,
            Command::Bootstrap,
            Command::Overlap,
            Command::Ped,
        ]
        .into_iter()
        .find(|c| c.name() == name)
        .ok_or_else(|| Error::Argument(format!("unknown command {name:?}")))
    }
}

/// JSON artifact envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub result: T,
}

/// Machine-readable error written to standard error.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        ErrorReport {
            error: e.kind(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

/// Parse arguments and run. Returns the paths of written artifacts.
pub fn run_from<I, T>(args: I) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Argument(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.replay {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let embedded = value
            .get("config")
            .filter(|v| !v.is_null())
            .ok_or_else(|| Error::Schema(format!("{} has no embedded config", path.display())))?;
        cfg = serde_json::from_value(embedded.clone())?;
    }
    if let Some(path) = &cli.config {
        cfg = cfg.overlay(&RunConfig::from_toml_file(path)?)?;
    }
    cfg = cfg.overlay(&cli.options)?;

    let command = match (cli.command, cfg.command.as_deref()) {
        (Some(c), Some(recorded)) if c.name() != recorded => {
            return Err(Error::Argument(format!(
                "replayed artifact came from {recorded:?}, not {:?}",
                c.name()
            )))
        }
        (Some(c), _) => c,
        (None, Some(recorded)) => Command::from_name(recorded)?,
        (None, None) => return Err(Error::Argument("no command given".into())),
    };
    cfg.command = Some(command.name().into());

    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    preflight(&cfg, &out_dir)?;
    let ctx = Context { cfg, out_dir };
    match command {
        Command::Simulate => ctx.simulate(),
        Command::Identify => ctx.identify(),
        Command::Spectrum => ctx.spectrum(),
        Command::Estimate => ctx.estimate(),
        Command::Bootstrap => ctx.bootstrap(),
        Command::Overlap => ctx.overlap(),
        Command::Ped => ctx.ped(),
    }
}

/// Inputs must be readable and the output directory writable before any work.
fn preflight(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    for path in [&cfg.system, &cfg.rollouts, &cfg.series].into_iter().flatten() {
        File::open(path).map_err(|e| Error::io(path, e))?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let probe = out_dir.join(".steerkit-write-check");
    File::create(&probe).map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    Ok(())
}

struct Context {
    cfg: RunConfig,
    out_dir: PathBuf,
}

/// Input data: a rollout file or a windowed time series.
enum Data {
    Batch(RolloutBatch),
    Series(TimeSeries),
}

#[derive(Serialize)]
struct SimulateResult {
    rollouts: PathBuf,
    n: usize,
    system: LinearSystem,
}

#[derive(Serialize)]
struct IdentifyResult {
    full_row_rank: IdentifiabilityReport,
    rank_sweep: Vec<IdentifiabilityReport>,
    rho: Option<f64>,
    responsiveness: ResponsivenessReport,
    shocks: Vec<ShockReport>,
}

#[derive(Serialize)]
struct TwoStageResult {
    estimate: TwoStageEstimate,
    relative_error: Option<f64>,
    steerability: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct LabelledAdjustment {
    action_bin: String,
    estimate: AdjustmentEstimate,
}

#[derive(Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
enum EstimateResult {
    TwoStage(TwoStageResult),
    Adjustment { queries: Vec<LabelledAdjustment> },
    Dml(DmlEstimate),
}

#[derive(Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
enum PedResult {
    Adjustment(PedEstimate),
    Dml { ped: f64, estimate: DmlEstimate },
}

impl Context {
    fn write_json<T: Serialize>(&self, name: &str, result: T) -> Result<PathBuf> {
        let artifact = Artifact {
            schema_version: SCHEMA_VERSION,
            command: self.cfg.command.clone().unwrap_or_default(),
            config: self.cfg.clone(),
            result,
        };
        let path = self.out_dir.join(name);
        let text = serde_json::to_string_pretty(&artifact)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.out_dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok((path, BufWriter::new(file)))
    }

    fn rank_tol(&self) -> f64 {
        self.cfg.rank_tol.unwrap_or(DEFAULT_RANK_TOL)
    }

    fn system(&self) -> Result<LinearSystem> {
        if let Some(path) = &self.cfg.system {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return if path.extension().is_some_and(|e| e == "toml") {
                Ok(toml::from_str(&text)?)
            } else {
                let value: serde_json::Value = serde_json::from_str(&text)?;
                // accept a bare system or a `simulate` artifact
                let inner = value.pointer("/result/system").cloned().unwrap_or(value);
                Ok(serde_json::from_value(inner)?)
            };
        }
        let seed = match self.cfg.system_seed {
            Some(s) => s,
            None => self.cfg.require_seed()?,
        };
        let d = self.cfg.state_dim.unwrap_or(2);
        match self.cfg.generator.as_deref().unwrap_or("gaussian") {
            "gaussian" => Ok(LinearSystem::random_gaussian(
                d,
                self.cfg.action_dim.unwrap_or(d),
                self.cfg.scale.unwrap_or(0.3),
                seed,
            )),
            "wishart" => LinearSystem::wishart(
                d,
                self.cfg.rank_c.unwrap_or(d),
                self.cfg.wishart_samples.unwrap_or(20 * d),
                seed,
            ),
            other => Err(Error::Argument(format!("unknown generator {other:?}, expected gaussian or wishart"))),
        }
    }

    fn spec(&self, sys: &LinearSystem) -> Result<DynamicsSpec> {
        let noise = IsotropicGaussian::new(
            sys.state_dim(),
            self.cfg.sigmas.clone().unwrap_or_default(),
            self.cfg.sigma.unwrap_or(1.0),
        )?;
        Ok(DynamicsSpec::linear(sys).with_noise(noise))
    }

    fn config_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(&self.cfg)?)
    }

    fn data(&self) -> Result<Data> {
        match (&self.cfg.rollouts, &self.cfg.series) {
            (Some(_), Some(_)) => Err(Error::Argument("give either --rollouts or --series, not both".into())),
            (Some(path), None) => Ok(Data::Batch(read_batch(path)?)),
            (None, Some(path)) => {
                let (series, audit) = ingest_csv(path, &self.cfg.ingest_schema()?)?;
                print_audit(path, &audit);
                Ok(Data::Series(series))
            }
            (None, None) => Err(Error::Argument("this command needs --rollouts or --series".into())),
        }
    }

    fn batch(&self, data: &Data) -> Result<RolloutBatch> {
        match data {
            Data::Batch(b) => Ok(b.clone()),
            Data::Series(s) => sliding_window(s, self.cfg.window.unwrap_or(1)),
        }
    }

    /// Explicit bin edges, or equal-width bins fitted to `reference`.
    fn discretization(&self, reference: &RolloutBatch) -> Result<Discretization> {
        let count = self.cfg.bin_count.unwrap_or(2);
        let fitted = Discretization::equal_width_from(reference, count, count)?;
        Ok(Discretization::new(
            match &self.cfg.state_bins {
                Some(e) => e.grids()?,
                None => fitted.state_bins,
            },
            match &self.cfg.action_bins {
                Some(e) => e.grids()?,
                None => fitted.action_bins,
            },
        ))
    }

    /// Bin-fitting reference for series input: every observation once.
    fn reference_batch(&self, data: &Data) -> Result<RolloutBatch> {
        match data {
            Data::Batch(b) => Ok(b.clone()),
            Data::Series(s) => sliding_window(s, 1),
        }
    }

    fn queries(&self, disc: &Discretization) -> Result<Vec<ActionQuery>> {
        if let Some(u) = &self.cfg.action {
            let cell = disc.action_cell_strict(&DVector::from_column_slice(u))?;
            let label = u.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            return Ok(vec![ActionQuery::new(label, cell)]);
        }
        if disc.action_bins.len() != 1 {
            return Err(Error::Argument("vector actions need an explicit --action query".into()));
        }
        let count = disc.action_bins[0].len();
        let labels = match &self.cfg.action_labels {
            Some(l) if l.len() == count => l.clone(),
            Some(l) => {
                return Err(Error::Argument(format!(
                    "{} action labels for {count} action bins",
                    l.len()
                )))
            }
            None => (0..count).map(|i| format!("bin{i}")).collect(),
        };
        Ok(labels.into_iter().enumerate().map(|(i, l)| ActionQuery::new(l, vec![i])).collect())
    }

    fn scalar_estimator(&self, id: &str, disc: &Discretization) -> Result<Box<dyn ScalarEstimator>> {
        Ok(match id {
            "adjustment" => Box::new(AdjustmentPed {
                disc: disc.clone(),
                mode: AdjustmentMode::Strict,
            }),
            "adjustment-zero-fill" => Box::new(AdjustmentPed {
                disc: disc.clone(),
                mode: AdjustmentMode::ZeroFill,
            }),
            "dml" => Box::new(DmlPed::ols(self.split_seed()?)),
            "two-stage" => Box::new(TwoStageEntry),
            "outcome-mean" => Box::new(OutcomeMean),
            other => return Err(Error::Argument(format!("unknown estimator {other:?}"))),
        })
    }

    fn split_seed(&self) -> Result<u64> {
        match self.cfg.split_seed {
            Some(s) => Ok(s),
            None => self.cfg.require_seed(),
        }
    }

    fn simulate(&self) -> Result<Vec<PathBuf>> {
        let seed = self.cfg.require_seed()?;
        let sys = self.system()?;
        let window = self.cfg.window.unwrap_or(2);
        let horizon = self.cfg.horizon.unwrap_or(window + 1);
        let n = self.cfg.n.unwrap_or(1000);
        let batch = simulate_rollouts(&self.spec(&sys)?, horizon, window, n, seed)?;
        let csv_path = self.out_dir.join("rollouts.csv");
        write_batch(&batch, &csv_path, Some(self.config_json()?))?;
        let summary = self.write_json(
            "simulate.json",
            SimulateResult {
                rollouts: PathBuf::from("rollouts.csv"),
                n,
                system: sys,
            },
        )?;
        say!("simulated {n} rollouts (T = {horizon}, K = {window}) -> {}", csv_path.display());
        Ok(vec![csv_path.clone(), crate::dynamics::io::sidecar_path(&csv_path), summary])
    }

    fn identify(&self) -> Result<Vec<PathBuf>> {
        let sys = self.system()?;
        let tol = self.rank_tol();
        let span = self.cfg.span.unwrap_or(2);
        let full_row_rank = check_full_row_rank_action(&sys, span, tol)?;
        let sweep = rank_sweep(&sys, span.max(3))?;
        let rho = compute_rho(&sys).ok();
        let spec = self.spec(&sys)?;
        let probes = vec![
            (DVector::zeros(sys.state_dim()), DVector::zeros(sys.action_dim())),
            (DVector::from_element(sys.state_dim(), 1.0), DVector::from_element(sys.action_dim(), 1.0)),
        ];
        let responsiveness = check_responsive_action(&spec, &probes, tol)?;
        let mut shocks = Vec::new();
        if let Some(n) = self.cfg.n {
            let horizon = self.cfg.horizon.unwrap_or(3);
            let batch = simulate_rollouts(&spec, horizon, horizon, n, self.cfg.require_seed()?)?;
            for t in 1..=horizon {
                let samples: Vec<DVector<f64>> = batch.rollouts().iter().map(|r| r.shocks[t].clone()).collect();
                shocks.push(check_fully_spanning_shock(t, &samples, tol)?);
            }
        }

        say!("{:>6} {:>10} {:>10}  verdict", "span", "rank", "required");
        for r in &sweep {
            say!("{:>6} {:>10} {:>10}  {:?}", r.span, r.rank_observed, r.rank_required, r.verdict);
        }
        match rho {
            Some(rho) => say!("rho = {rho:.6}"),
            None => say!("rho unbounded (DC is singular)"),
        }
        say!("responsive at all probes: {}", responsiveness.all_responsive);
        for s in &shocks {
            say!("shock t = {}: {:?} (min eigenvalue {:.3e})", s.t, s.verdict, s.min_eigenvalue);
        }
        let path = self.write_json(
            "identify.json",
            IdentifyResult {
                full_row_rank,
                rank_sweep: sweep,
                rho,
                responsiveness,
                shocks,
            },
        )?;
        Ok(vec![path])
    }

    fn spectrum(&self) -> Result<Vec<PathBuf>> {
        let sys = self.system()?;
        let max_t = self.cfg.max_t.unwrap_or(3);
        let reports = covariance_path(&sys, max_t)?
            .iter()
            .map(|s| spectrum(s, self.rank_tol()))
            .collect::<Result<Vec<SpectrumReport>>>()?;
        let (csv_path, out) = self.create("spectrum.csv")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "index", "eigenvalue"])?;
        for r in &reports {
            for (i, ev) in r.eigenvalues.iter().enumerate() {
                w.write_record([r.t.to_string(), i.to_string(), ev.to_string()])?;
            }
            say!("t = {}: {} zero eigenvalue(s), full rank = {}", r.t, r.num_zero, r.full_rank);
        }
        w.flush().map_err(|e| Error::io(&csv_path, e))?;
        let json = self.write_json("spectrum.json", &reports)?;
        Ok(vec![csv_path, json])
    }

    fn estimate(&self) -> Result<Vec<PathBuf>> {
        let method = self.cfg.method.unwrap_or(Method::TwoStage);
        let data = self.data()?;
        let batch = self.batch(&data)?;
        let result = match method {
            Method::TwoStage => {
                let estimate = two_stage_estimate(&batch)?;
                let relative_error = match &self.cfg.system {
                    Some(_) => {
                        let b = self.system()?.b().clone();
                        Some((&estimate.b_hat - &b).norm() / b.norm())
                    }
                    None => None,
                };
                let steer = match (&self.cfg.action, &self.cfg.action_prime) {
                    (Some(u), Some(up)) => Some(
                        steerability(&estimate.b_hat, &DVector::from_column_slice(u), &DVector::from_column_slice(up))?
                            .iter()
                            .copied()
                            .collect(),
                    ),
                    _ => None,
                };
                if let Some(e) = relative_error {
                    say!("two-stage: relative error of B_hat = {e:.3e}");
                }
                EstimateResult::TwoStage(TwoStageResult {
                    estimate,
                    relative_error,
                    steerability: steer,
                })
            }
            Method::Adjustment => {
                let disc = self.discretization(&self.reference_batch(&data)?)?;
                let mode = self.cfg.mode.unwrap_or_default();
                let queries = match &self.cfg.action {
                    Some(u) => vec![LabelledAdjustment {
                        action_bin: self.queries(&disc)?.remove(0).label,
                        estimate: adjustment_estimate(&batch, &disc, &DVector::from_column_slice(u), mode)?,
                    }],
                    None => self
                        .queries(&disc)?
                        .into_iter()
                        .map(|q| {
                            Ok(LabelledAdjustment {
                                estimate: adjustment_estimate_cell(&batch, &disc, &q.cell, mode)?,
                                action_bin: q.label,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                };
                for q in &queries {
                    say!(
                        "{}: {} ({}/{} undefined)",
                        q.action_bin,
                        q.estimate
                            .x_hat
                            .as_ref()
                            .map_or("N/A".to_string(), |v| format!("{v:?}")),
                        q.estimate.undefined_strata,
                        q.estimate.occupied_strata
                    );
                }
                EstimateResult::Adjustment { queries }
            }
            Method::Dml => {
                let est = dml_estimate(&batch, &OlsResidualizer, self.split_seed()?)?;
                say!("dml theta = {:?}", est.theta.as_slice());
                EstimateResult::Dml(est)
            }
        };
        Ok(vec![self.write_json("estimate.json", result)?])
    }

    fn ped(&self) -> Result<Vec<PathBuf>> {
        let data = self.data()?;
        let batch = self.batch(&data)?;
        let result = match self.cfg.method.unwrap_or(Method::Adjustment) {
            Method::Adjustment => {
                let disc = self.discretization(&self.reference_batch(&data)?)?;
                let ped = ped_from_adjustment(&batch, &disc, self.cfg.mode.unwrap_or_default())?;
                say!("adjustment PED = {:.6}", ped.slope);
                PedResult::Adjustment(ped)
            }
            Method::Dml => {
                let estimate = dml_estimate(&batch, &OlsResidualizer, self.split_seed()?)?;
                let ped = estimate.theta[(0, 0)];
                say!("DML PED = {ped:.6}");
                PedResult::Dml { ped, estimate }
            }
            Method::TwoStage => return Err(Error::Argument("ped supports --method adjustment or dml".into())),
        };
        Ok(vec![self.write_json("ped.json", result)?])
    }

    fn bootstrap(&self) -> Result<Vec<PathBuf>> {
        let seed = self.cfg.require_seed()?;
        let replicates = self.cfg.replicates.unwrap_or(DEFAULT_REPLICATES);
        let data = self.data()?;
        let disc = self.discretization(&self.reference_batch(&data)?)?;
        let estimator = self.scalar_estimator(self.cfg.estimator.as_deref().unwrap_or("adjustment-zero-fill"), &disc)?;
        let reference = self.scalar_estimator(self.cfg.reference.as_deref().unwrap_or("adjustment-zero-fill"), &disc)?;
        let reports: Vec<BootstrapReport> = match &data {
            Data::Batch(b) => vec![bootstrap_batch(estimator.as_ref(), reference.as_ref(), b, replicates, seed)?],
            Data::Series(s) => self
                .k_list(&[self.cfg.window.unwrap_or(1)])
                .iter()
                .map(|&k| bootstrap(estimator.as_ref(), reference.as_ref(), s, k, replicates, seed))
                .collect::<Result<_>>()?,
        };
        for r in &reports {
            say!(
                "K = {}: bias vs reference {:+.4e}, std {:.4e}, CI [{:.4}, {:.4}]{}",
                r.k,
                r.bias_vs_reference,
                r.std_dev,
                r.ci_low,
                r.ci_high,
                if r.unreliable { " (unreliable)" } else { "" }
            );
        }
        let (csv_path, out) = self.create("bootstrap.csv")?;
        write_bootstrap_csv(&reports, out)?;
        let json = self.write_json("bootstrap.json", &reports)?;
        Ok(vec![csv_path, json])
    }

    fn k_list(&self, default: &[usize]) -> Vec<usize> {
        self.cfg.k_list.clone().unwrap_or_else(|| default.to_vec())
    }

    fn overlap(&self) -> Result<Vec<PathBuf>> {
        let data = self.data()?;
        let Data::Series(series) = &data else {
            return Err(Error::Argument("overlap needs a --series input".into()));
        };
        let disc = self.discretization(&self.reference_batch(&data)?)?;
        let rows = overlap_sweep(series, &self.k_list(&[1, 3, 5, 7, 9]), &disc, &self.queries(&disc)?)?;
        for r in &rows {
            say!(
                "K = {:>2} {:>6}: {:>5}/{:<5} undefined, mass {:.1}%",
                r.k,
                r.action_bin,
                r.undefined_strata,
                r.occupied_strata,
                100.0 * r.undefined_mass
            );
        }
        let (csv_path, out) = self.create("overlap.csv")?;
        write_overlap_csv(&rows, out)?;
        let json = self.write_json("overlap.json", &rows)?;
        Ok(vec![csv_path, json])
    }
}

fn print_audit(path: &Path, audit: &IngestAudit) {
    say!(
        "ingested {}: {} rows read, {} used, {} observations{}",
        path.display(),
        audit.rows_read,
        audit.rows_used,
        audit.observations,
        if audit.log_transform { " (log)" } else { "" }
    );
    for r in &audit.ranges {
        say!("  {:<16} [{:.6}, {:.6}]", r.column, r.min, r.max);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from([
            "steerkit",
            "overlap",
            "--state-bins",
            "14.539,15.014,15.837",
            "--k-list",
            "1,3,5",
            "--action",
            "-0.2",
        ])
        .unwrap();
        assert_eq!(cli.command, Some(Command::Overlap));
        assert_eq!(cli.options.k_list, Some(vec![1, 3, 5]));
        assert_eq!(cli.options.action, Some(vec![-0.2]));
    }

    #[test]
    fn stochastic_commands_need_a_seed() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_from(["steerkit", "simulate", "--out-dir", dir.path().to_str().unwrap()]).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn missing_input_fails_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_from([
            "steerkit",
            "estimate",
            "--rollouts",
            "/nonexistent/rollouts.csv",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
