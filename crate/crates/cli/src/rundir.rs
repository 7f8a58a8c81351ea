//! Layout of a run directory:
//!
//! ```text
//! config.toml          canonical configuration
//! run.json             summary (T_est, outcome, step counts, config hash)
//! records.csv          one diagnostics record per row
//! snapshots/NNN.json   profile snapshots, in τ order
//! states/NNN.ckpt      full states at the snapshots (optional)
//! checkpoint.ckpt      last state reached
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cuspflow::diagnostics::DiagnosticsRecord;
use cuspflow::rescale::ProfileSnapshot;
use cuspflow::solver::{read_checkpoint, write_checkpoint, Outcome, Trajectory};
use cuspflow::textio::fmt_f64;
use cuspflow::FlowState;
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{CliError, Result};

pub const CONFIG: &str = "config.toml";
pub const SUMMARY: &str = "run.json";
pub const RECORDS: &str = "records.csv";
pub const SNAPSHOTS: &str = "snapshots";
pub const STATES: &str = "states";
pub const CHECKPOINT: &str = "checkpoint.ckpt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub t_est: f64,
    pub m0: f64,
    pub outcome: Outcome,
    pub steps: u64,
    pub rejected: u64,
    pub final_t: f64,
    pub final_tau: f64,
    pub config_hash: String,
    pub code_version: String,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn indexed(dir: &Path, k: usize, ext: &str) -> PathBuf {
    dir.join(format!("{k:03}.{ext}"))
}

/// Creates `dir` and writes the configuration, before the run starts.
pub fn prepare(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_text(&dir.join(CONFIG), &cfg.render())
}

pub fn write_run(dir: &Path, cfg: &ExperimentConfig, traj: &Trajectory) -> Result<RunSummary> {
    let hash = cfg.hash();
    write_records(&dir.join(RECORDS), &traj.records)?;

    for (sub, count) in [(SNAPSHOTS, traj.snapshots.len()), (STATES, traj.states.len())] {
        let d = dir.join(sub);
        if d.exists() {
            fs::remove_dir_all(&d).map_err(|e| CliError::io(&d, e))?;
        }
        if count > 0 {
            fs::create_dir_all(&d).map_err(|e| CliError::io(&d, e))?;
        }
    }
    for (k, snap) in traj.snapshots.iter().enumerate() {
        write_text(&indexed(&dir.join(SNAPSHOTS), k, "json"), &snap.to_text())?;
    }
    for (k, state) in traj.states.iter().enumerate() {
        write_state(&indexed(&dir.join(STATES), k, "ckpt"), state, &hash)?;
    }
    write_state(&dir.join(CHECKPOINT), &traj.final_state, &hash)?;

    let summary = RunSummary {
        t_est: traj.t_est,
        m0: traj.m0,
        outcome: traj.outcome,
        steps: traj.steps,
        rejected: traj.rejected,
        final_t: traj.final_state.t,
        final_tau: traj.final_tau(),
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").into(),
    };
    let text = cuspflow::textio::to_json_sig17(&summary).expect("summary serialises");
    write_text(&dir.join(SUMMARY), &text)?;
    Ok(summary)
}

pub fn write_state(path: &Path, state: &FlowState, hash: &str) -> Result<()> {
    let mut out = create(path)?;
    write_checkpoint(&mut out, state, hash)?;
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_state(path: &Path) -> Result<FlowState> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_checkpoint(&mut BufReader::new(f))?.state)
}

pub fn write_records(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(DiagnosticsRecord::FIELDS).map_err(csv_err)?;
    for r in records {
        w.write_record(r.values().iter().map(|v| fmt_f64(*v)))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(BufReader::new(f));
    let parse_err = |line: u64, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rows = rd.records();
    let header = match rows.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "empty file".into())),
    };
    if header.iter().ne(DiagnosticsRecord::FIELDS) {
        return Err(parse_err(1, format!("unexpected header {:?}", header.as_slice())));
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != DiagnosticsRecord::FIELDS.len() {
            return Err(parse_err(
                line,
                format!("{} fields, expected {}", row.len(), DiagnosticsRecord::FIELDS.len()),
            ));
        }
        let mut vals = [0.0; 13];
        for (k, (field, name)) in row.iter().zip(DiagnosticsRecord::FIELDS).enumerate() {
            vals[k] = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("{name}: not a number: {field:?}")))?;
        }
        out.push(DiagnosticsRecord::from_values(vals));
    }
    Ok(out)
}

/// Everything a report reads back.
pub struct RunData {
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<ProfileSnapshot>,
    pub states: Vec<FlowState>,
}

fn sorted_entries(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    Ok(v)
}

pub fn load(dir: &Path) -> Result<RunData> {
    let config = parse_config(&read_text(&dir.join(CONFIG))?)?;
    let summary_path = dir.join(SUMMARY);
    let summary: RunSummary = serde_json::from_str(&read_text(&summary_path)?).map_err(|e| {
        CliError::Parse {
            path: summary_path.clone(),
            line: e.line() as u64,
            msg: e.to_string(),
        }
    })?;
    let records = read_records(&dir.join(RECORDS))?;
    let mut snapshots = Vec::new();
    for p in sorted_entries(&dir.join(SNAPSHOTS), "json")? {
        let snap = ProfileSnapshot::from_text(&read_text(&p)?).map_err(|e| CliError::Parse {
            path: p.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
        snapshots.push(snap);
    }
    let mut states = Vec::new();
    for p in sorted_entries(&dir.join(STATES), "ckpt")? {
        states.push(read_state(&p)?);
    }
    Ok(RunData {
        config,
        summary,
        records,
        snapshots,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: f64) -> DiagnosticsRecord {
        let mut v = [0.0; 13];
        for (i, x) in v.iter_mut().enumerate() {
            *x = (k + i as f64) / 3.0;
        }
        DiagnosticsRecord::from_values(v)
    }

    #[test]
    fn records_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(RECORDS);
        let recs: Vec<_> = (0..5).map(|k| rec(k as f64)).collect();
        write_records(&p, &recs).unwrap();
        assert_eq!(read_records(&p).unwrap(), recs);
    }

    #[test]
    fn corrupted_row_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(RECORDS);
        write_records(&p, &[rec(0.0), rec(1.0), rec(2.0)]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replacen('3', "x", 1);
        fs::write(&p, lines.join("\n")).unwrap();
        match read_records(&p) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
