//! CSV ingestion into a [`TimeSeries`].

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{SeriesLabels, TimeSeries};

/// How rows from several groups (e.g. regions) become one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    /// Groups one after another, in the order listed.
    #[default]
    Concatenate,
    /// Per-time average across groups; every group must cover every time.
    Average,
}

impl std::str::FromStr for Combine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concatenate" => Ok(Combine::Concatenate),
            "average" => Ok(Combine::Average),
            other => Err(Error::Argument(format!("unknown combine rule {other:?}, expected concatenate or average"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub column: String,
    /// Groups to keep, in concatenation order. Empty keeps all, sorted by name.
    #[serde(default)]
    pub keep: Vec<String>,
    #[serde(default)]
    pub combine: Combine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSchema {
    pub time_column: String,
    pub action_columns: Vec<String>,
    pub state_columns: Vec<String>,
    /// Natural log of every action and state value.
    #[serde(default)]
    pub log_transform: bool,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    /// Average consecutive blocks of this many rows (2 = biweekly from weekly).
    #[serde(default = "one")]
    pub aggregate: usize,
}

fn one() -> usize {
    1
}

impl IngestSchema {
    pub fn new(time: &str, actions: &[&str], states: &[&str]) -> Self {
        IngestSchema {
            time_column: time.into(),
            action_columns: actions.iter().map(|s| s.to_string()).collect(),
            state_columns: states.iter().map(|s| s.to_string()).collect(),
            log_transform: false,
            group: None,
            aggregate: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

/// Row counts and value ranges, echoed so the ingest can be audited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestAudit {
    pub rows_read: usize,
    pub rows_used: usize,
    pub observations: usize,
    pub log_transform: bool,
    pub ranges: Vec<ColumnRange>,
}

#[derive(Debug, Clone, PartialEq, PartialOrd)]
enum TimeKey {
    Number(f64),
    Text(String),
}

impl TimeKey {
    fn parse(s: &str) -> Self {
        s.trim().parse::<f64>().map_or_else(|_| TimeKey::Text(s.trim().to_string()), TimeKey::Number)
    }

    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (TimeKey::Number(a), TimeKey::Number(b)) => a.total_cmp(b),
            (TimeKey::Text(a), TimeKey::Text(b)) => a.cmp(b),
            (TimeKey::Number(_), TimeKey::Text(_)) => std::cmp::Ordering::Less,
            (TimeKey::Text(_), TimeKey::Number(_)) => std::cmp::Ordering::Greater,
        }
    }

    fn display(&self) -> String {
        match self {
            TimeKey::Number(v) => v.to_string(),
            TimeKey::Text(s) => s.clone(),
        }
    }
}

struct Row {
    time: TimeKey,
    line: usize,
    values: Vec<f64>,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("column {name:?} not found in header")))
}

/// Sort one group's rows by time; repeated times are ambiguous.
fn order(mut rows: Vec<Row>, group: &str) -> Result<Vec<Row>> {
    rows.sort_by(|a, b| a.time.cmp(&b.time).then(a.line.cmp(&b.line)));
    if let Some(w) = rows.windows(2).find(|w| w[0].time == w[1].time) {
        let where_ = if group.is_empty() { String::new() } else { format!(" in group {group:?}") };
        return Err(Error::Ambiguity(format!(
            "time {} appears on lines {} and {}{where_}",
            w[0].time.display(),
            w[0].line,
            w[1].line
        )));
    }
    Ok(rows)
}

/// Read a CSV file into a series. See [`ingest_reader`].
pub fn ingest_csv(path: &Path, schema: &IngestSchema) -> Result<(TimeSeries, IngestAudit)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(std::io::BufReader::new(file), schema)
}

/// Parse, order by time, optionally filter and combine groups, aggregate
/// consecutive blocks and log-transform.
pub fn ingest_reader<R: std::io::Read>(input: R, schema: &IngestSchema) -> Result<(TimeSeries, IngestAudit)> {
    if schema.action_columns.is_empty() || schema.state_columns.is_empty() {
        return Err(Error::Schema("need at least one action and one state column".into()));
    }
    if schema.aggregate == 0 {
        return Err(Error::Argument("aggregate block size must be at least 1".into()));
    }
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let time_idx = column_index(&headers, &schema.time_column)?;
    let value_cols: Vec<&String> = schema.action_columns.iter().chain(&schema.state_columns).collect();
    let value_idx = value_cols
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    let group_idx = schema.group.as_ref().map(|g| column_index(&headers, &g.column)).transpose()?;

    let mut groups: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut rows_read = 0;
    for rec in rdr.records() {
        let rec = rec?;
        rows_read += 1;
        let line = rec.position().map_or(rows_read + 1, |p| p.line() as usize);
        let group = group_idx.map_or(String::new(), |i| rec.get(i).unwrap_or("").trim().to_string());
        if let Some(g) = &schema.group {
            if !g.keep.is_empty() && !g.keep.contains(&group) {
                continue;
            }
        }
        let time_raw = rec.get(time_idx).unwrap_or("").trim();
        if time_raw.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("missing value in column {:?}", schema.time_column),
            });
        }
        let values = value_idx
            .iter()
            .zip(&value_cols)
            .map(|(&i, name)| {
                let raw = rec.get(i).unwrap_or("").trim();
                raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("column {name:?} is not a finite number: {raw:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        groups.entry(group).or_default().push(Row {
            time: TimeKey::parse(time_raw),
            line,
            values,
        });
    }
    let rows_used: usize = groups.values().map(Vec::len).sum();

    let group_order: Vec<String> = match &schema.group {
        Some(g) if !g.keep.is_empty() => g.keep.clone(),
        _ => groups.keys().cloned().collect(),
    };
    let mut ordered = Vec::with_capacity(group_order.len());
    for name in &group_order {
        let rows = groups
            .remove(name)
            .ok_or_else(|| Error::Schema(format!("group {name:?} has no rows")))?;
        ordered.push(order(rows, name)?);
    }

    let combine = schema.group.as_ref().map_or(Combine::Concatenate, |g| g.combine);
    let mut series: Vec<Vec<f64>> = match combine {
        Combine::Concatenate => ordered.into_iter().flatten().map(|r| r.values).collect(),
        Combine::Average => {
            let first = &ordered[0];
            for (rows, name) in ordered.iter().zip(&group_order).skip(1) {
                if rows.len() != first.len() || rows.iter().zip(first).any(|(a, b)| a.time != b.time) {
                    return Err(Error::Schema(format!(
                        "group {name:?} does not cover the same times as {:?}",
                        group_order[0]
                    )));
                }
            }
            let m = ordered.len() as f64;
            (0..first.len())
                .map(|t| {
                    (0..value_cols.len())
                        .map(|j| ordered.iter().map(|rows| rows[t].values[j]).sum::<f64>() / m)
                        .collect()
                })
                .collect()
        }
    };

    if schema.aggregate > 1 {
        let m = schema.aggregate as f64;
        series = series
            .chunks_exact(schema.aggregate)
            .map(|block| (0..value_cols.len()).map(|j| block.iter().map(|r| r[j]).sum::<f64>() / m).collect())
            .collect();
    }

    if schema.log_transform {
        for (t, row) in series.iter_mut().enumerate() {
            for (v, name) in row.iter_mut().zip(&value_cols) {
                if *v <= 0.0 {
                    return Err(Error::Numeric(format!(
                        "cannot log non-positive value {v} in column {name:?} (observation {t})"
                    )));
                }
                *v = v.ln();
            }
        }
    }

    let p = schema.action_columns.len();
    let ranges = value_cols
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (min, max) = series
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
            ColumnRange {
                column: name.to_string(),
                min,
                max,
            }
        })
        .collect();
    let u = series.iter().map(|r| DVector::from_column_slice(&r[..p])).collect();
    let x = series.iter().map(|r| DVector::from_column_slice(&r[p..])).collect();
    let labels = SeriesLabels {
        action: schema.action_columns.clone(),
        state: schema.state_columns.clone(),
    };
    let audit = IngestAudit {
        rows_read,
        rows_used,
        observations: series.len(),
        log_transform: schema.log_transform,
        ranges,
    };
    Ok((TimeSeries::new(u, x, Some(labels))?, audit))
}
