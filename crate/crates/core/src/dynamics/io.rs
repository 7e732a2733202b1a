//! Rollout batches on disk: a long-format CSV (`rollout,t,kind,dim,value`)
//! plus a JSON sidecar with the batch header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{BatchMeta, Rollout, RolloutBatch};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

pub const ROLLOUT_HEADER: [&str; 5] = ["rollout", "t", "kind", "dim", "value"];

/// JSON sidecar contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    #[serde(flatten)]
    pub meta: BatchMeta,
    /// Resolved run configuration, when the batch came from the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// `rollouts.csv` -> `rollouts.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Write the CSV body. Floats use Rust's shortest round-trip formatting.
pub fn write_rollouts_csv<W: Write>(batch: &RolloutBatch, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROLLOUT_HEADER)?;
    let start = batch.horizon() - batch.window();
    for (k, r) in batch.rollouts().iter().enumerate() {
        let ks = k.to_string();
        let mut emit = |kind: &str, series: &[DVector<f64>]| -> Result<()> {
            for (offset, v) in series.iter().enumerate() {
                let t = (start + offset).to_string();
                for (dim, value) in v.iter().enumerate() {
                    w.write_record([ks.as_str(), t.as_str(), kind, &dim.to_string(), &value.to_string()])?;
                }
            }
            Ok(())
        };
        emit("x", &r.states)?;
        emit("u", &r.actions)?;
        emit("xi", &r.shocks)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Parse the CSV body given the header from the sidecar.
pub fn read_rollouts_csv<R: Read>(meta: &BatchMeta, input: R) -> Result<RolloutBatch> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ROLLOUT_HEADER {
        return Err(Error::Schema(format!(
            "expected header {}, found {}",
            ROLLOUT_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    if meta.window < 1 || meta.horizon < meta.window || meta.n < 1 {
        return Err(Error::Schema(format!("invalid batch header {meta:?}")));
    }
    let start = meta.horizon - meta.window;
    let nan_vec = |dim: usize| DVector::from_element(dim, f64::NAN);
    let mut rollouts: Vec<Rollout> = (0..meta.n)
        .map(|_| Rollout {
            states: vec![nan_vec(meta.d); meta.window + 1],
            actions: vec![nan_vec(meta.p); meta.window],
            shocks: Vec::new(),
        })
        .collect();

    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let parse_idx = |j: usize| -> Result<usize> {
            field(j).parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {} is not an index: {:?}", ROLLOUT_HEADER[j], field(j)),
            })
        };
        let k = parse_idx(0)?;
        let t = parse_idx(1)?;
        let dim = parse_idx(3)?;
        let value: f64 = field(4).parse().map_err(|_| Error::Parse {
            line,
            message: format!("value is not a number: {:?}", field(4)),
        })?;
        let r = rollouts.get_mut(k).ok_or_else(|| Error::Parse {
            line,
            message: format!("rollout index {k} exceeds n = {}", meta.n),
        })?;
        let offset = t.checked_sub(start).filter(|&o| o <= meta.window).ok_or_else(|| Error::Parse {
            line,
            message: format!("time {t} outside window {start}..={}", meta.horizon),
        })?;
        let slot = match field(2) {
            "x" => r.states.get_mut(offset),
            "u" => r.actions.get_mut(offset),
            "xi" => {
                if r.shocks.is_empty() {
                    r.shocks = vec![nan_vec(meta.d); meta.window + 1];
                }
                r.shocks.get_mut(offset)
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown kind {other:?}"),
                })
            }
        };
        let slot = slot.ok_or_else(|| Error::Parse {
            line,
            message: format!("time {t} has no {} entry", field(2)),
        })?;
        if dim >= slot.len() {
            return Err(Error::Parse {
                line,
                message: format!("dimension {dim} out of range"),
            });
        }
        slot[dim] = value;
    }

    for (k, r) in rollouts.iter().enumerate() {
        let complete = r
            .states
            .iter()
            .chain(&r.actions)
            .chain(&r.shocks)
            .all(|v| v.iter().all(|x| !x.is_nan()));
        if !complete {
            return Err(Error::Schema(format!("rollout {k} is missing entries")));
        }
    }
    RolloutBatch::new(rollouts, meta.horizon, meta.seed, meta.spec.clone())
}

/// Write `csv_path` and its JSON sidecar.
pub fn write_batch(batch: &RolloutBatch, csv_path: &Path, config: Option<serde_json::Value>) -> Result<()> {
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    write_rollouts_csv(batch, std::io::BufWriter::new(file))?;
    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION,
        meta: batch.meta(),
        config,
    };
    let json_path = sidecar_path(csv_path);
    let text = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

/// Read a batch written by [`write_batch`].
pub fn read_batch(csv_path: &Path) -> Result<RolloutBatch> {
    let json_path = sidecar_path(csv_path);
    let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    read_rollouts_csv(&sidecar.meta, std::io::BufReader::new(file))
}
