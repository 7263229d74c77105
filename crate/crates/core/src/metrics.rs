//! Training metrics: a fixed-schema CSV, written incrementally (one
//! flushed line per row, so an aborted run still leaves a readable
//! prefix) and read back for plotting and analysis.
//!
//! Schema (column order is part of the format):
//! `env_step, episode_index, epsilon, train_success_rolling100,
//! eval_success, mean_q_on_batch, critic_loss, actor_bc_loss,
//! bc_active_fraction, wallclock_seconds`
//!
//! `eval_success` is populated only on evaluation rows; the four
//! learning-statistics columns are blank until gradient updates begin.
//! All numbers use shortest round-trip decimal form, so identical runs
//! write byte-identical numeric cells.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "env_step,episode_index,epsilon,train_success_rolling100,\
eval_success,mean_q_on_batch,critic_loss,actor_bc_loss,bc_active_fraction,wallclock_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub env_step: u64,
    pub episode_index: u64,
    pub epsilon: f64,
    pub train_success_rolling100: f64,
    pub eval_success: Option<f64>,
    pub mean_q_on_batch: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor_bc_loss: Option<f64>,
    pub bc_active_fraction: Option<f64>,
    pub wallclock_seconds: f64,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.env_step,
            self.episode_index,
            self.epsilon,
            self.train_success_rolling100,
            cell(self.eval_success),
            cell(self.mean_q_on_batch),
            cell(self.critic_loss),
            cell(self.actor_bc_loss),
            cell(self.bc_active_fraction),
            self.wallclock_seconds,
        )
    }
}

/// Incremental CSV writer; every row is flushed so partial files stay
/// consistent if the run aborts.
#[derive(Debug)]
pub struct MetricsWriter {
    out: BufWriter<File>,
    last_env_step: u64,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{METRICS_HEADER}")?;
        out.flush()?;
        Ok(MetricsWriter { out, last_env_step: 0 })
    }

    pub fn write_row(&mut self, row: &MetricsRow) -> Result<()> {
        assert!(
            row.env_step >= self.last_env_step,
            "metrics rows must be monotone in env_step ({} after {})",
            row.env_step,
            self.last_env_step
        );
        self.last_env_step = row.env_step;
        writeln!(self.out, "{}", row.to_csv_line())?;
        self.out.flush()?;
        Ok(())
    }
}

fn parse_cell<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    name: &str,
    value: &str,
) -> Result<T> {
    value.parse().map_err(|_| Error::BadFile {
        path: PathBuf::from(path),
        reason: format!("line {line_no}: cannot parse {name} from `{value}`"),
    })
}

fn parse_optional(path: &Path, line_no: usize, name: &str, value: &str) -> Result<Option<f64>> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse_cell(path, line_no, name, value).map(Some)
    }
}

/// Read a whole metrics file, validating the header and every field;
/// parse failures name the line number.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadFile {
        path: PathBuf::from(path),
        reason: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == METRICS_HEADER => {}
        Some((_, header)) => {
            return Err(Error::BadFile {
                path: PathBuf::from(path),
                reason: format!("line 1: unexpected header `{header}`"),
            })
        }
        None => {
            return Err(Error::BadFile {
                path: PathBuf::from(path),
                reason: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::BadFile {
                path: PathBuf::from(path),
                reason: format!("line {line_no}: expected 10 fields, found {}", fields.len()),
            });
        }
        rows.push(MetricsRow {
            env_step: parse_cell(path, line_no, "env_step", fields[0])?,
            episode_index: parse_cell(path, line_no, "episode_index", fields[1])?,
            epsilon: parse_cell(path, line_no, "epsilon", fields[2])?,
            train_success_rolling100: parse_cell(
                path,
                line_no,
                "train_success_rolling100",
                fields[3],
            )?,
            eval_success: parse_optional(path, line_no, "eval_success", fields[4])?,
            mean_q_on_batch: parse_optional(path, line_no, "mean_q_on_batch", fields[5])?,
            critic_loss: parse_optional(path, line_no, "critic_loss", fields[6])?,
            actor_bc_loss: parse_optional(path, line_no, "actor_bc_loss", fields[7])?,
            bc_active_fraction: parse_optional(path, line_no, "bc_active_fraction", fields[8])?,
            wallclock_seconds: parse_cell(path, line_no, "wallclock_seconds", fields[9])?,
        });
    }
    Ok(rows)
}
