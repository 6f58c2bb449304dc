//! Result files: per-trial records (CSV or JSON lines), a summary JSON object
//! and optional per-round traces.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::config::{Format, Mode};
use crate::error::{HarnessError, Result};
use crate::experiment::{Summary, TraceDump, TrialRecord};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_DIR: &str = "traces";

pub fn records_file(format: Format) -> &'static str {
    match format {
        Format::Csv => "trials.csv",
        Format::JsonLines => "trials.jsonl",
    }
}

/// Column names for `m` arms.
pub fn header(m: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["trial", "seed", "mode", "rounds", "correct", "xi_held", "bound_value", "bound_satisfied"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((0..m).map(|i| format!("pulls_{i}")));
    cols.push("wall_ms".into());
    cols
}

fn row(r: &TrialRecord) -> Vec<String> {
    let mut cols = vec![
        r.trial.to_string(),
        r.seed.to_string(),
        r.mode.to_string(),
        r.rounds.to_string(),
        r.correct.to_string(),
        r.xi_held.to_string(),
        r.bound_value.map(|b| b.to_string()).unwrap_or_default(),
        r.bound_satisfied.map(|b| b.to_string()).unwrap_or_default(),
    ];
    cols.extend(r.pulls.iter().map(|p| p.to_string()));
    cols.push(format!("{:.3}", r.wall_ms));
    cols
}

fn flat_object(r: &TrialRecord) -> Map<String, Value> {
    let mut obj = Map::new();
    obj.insert("trial".into(), r.trial.into());
    obj.insert("seed".into(), r.seed.into());
    obj.insert("mode".into(), r.mode.as_str().into());
    obj.insert("rounds".into(), r.rounds.into());
    obj.insert("correct".into(), r.correct.into());
    obj.insert("xi_held".into(), r.xi_held.into());
    obj.insert("bound_value".into(), r.bound_value.into());
    obj.insert("bound_satisfied".into(), r.bound_satisfied.into());
    for (i, p) in r.pulls.iter().enumerate() {
        obj.insert(format!("pulls_{i}"), (*p).into());
    }
    obj.insert("wall_ms".into(), ((r.wall_ms * 1e3).round() / 1e3).into());
    obj
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

/// Writes the records file and `summary.json` into `dir`, returning the paths.
pub fn emit_results(dir: &Path, records: &[TrialRecord], summary: &Summary, format: Format) -> Result<Vec<PathBuf>> {
    let Some(first) = records.first() else {
        return Err(HarnessError::config("records", "nothing to write"));
    };
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let records_path = dir.join(records_file(format));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(&records_path).map_err(|e| HarnessError::Csv {
                path: records_path.clone(),
                source: e,
            })?;
            let csv_err = |e| HarnessError::Csv {
                path: records_path.clone(),
                source: e,
            };
            w.write_record(header(first.pulls.len())).map_err(csv_err)?;
            for r in records {
                w.write_record(row(r)).map_err(csv_err)?;
            }
            w.flush().map_err(|e| HarnessError::io(&records_path, e))?;
        }
        Format::JsonLines => {
            let mut w = create(&records_path)?;
            for r in records {
                let line = serde_json::to_string(&flat_object(r)).expect("plain values serialize");
                writeln!(w, "{line}").map_err(|e| HarnessError::io(&records_path, e))?;
            }
            w.flush().map_err(|e| HarnessError::io(&records_path, e))?;
        }
    }
    let summary_path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(&summary_path, text + "\n").map_err(|e| HarnessError::io(&summary_path, e))?;
    Ok(vec![records_path, summary_path])
}

/// One JSON-lines file per run under `dir/traces`.
pub fn emit_traces(dir: &Path, traces: &[TraceDump]) -> Result<()> {
    let trace_dir = dir.join(TRACE_DIR);
    fs::create_dir_all(&trace_dir).map_err(|e| HarnessError::io(&trace_dir, e))?;
    for dump in traces {
        let path = trace_dir.join(format!("{}_{:06}.jsonl", dump.mode, dump.trial));
        let mut w = create(&path)?;
        for rec in &dump.rounds {
            let line = serde_json::to_string(rec).expect("round records serialize");
            writeln!(w, "{line}").map_err(|e| HarnessError::io(&path, e))?;
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        HarnessError::config(
            format!("{}:{line}", path.display()),
            format!("cannot parse {name} from '{raw}'"),
        )
    })
}

fn optional<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<Option<T>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(path, line, name, raw).map(Some)
    }
}

/// Reads a records CSV written by [`emit_results`].
pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let csv_err = |e| HarnessError::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let columns = reader.headers().map_err(csv_err)?.len();
    if columns < 9 {
        return Err(HarnessError::config(path.display().to_string(), "too few columns"));
    }
    let m = columns - 9;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let get = |j: usize| rec.get(j).unwrap_or("");
        let mode: Mode = get(2)
            .parse()
            .map_err(|e: String| HarnessError::config(format!("{}:{line}", path.display()), e))?;
        out.push(TrialRecord {
            trial: parse_field(path, line, "trial", get(0))?,
            seed: parse_field(path, line, "seed", get(1))?,
            mode,
            rounds: parse_field(path, line, "rounds", get(3))?,
            correct: parse_field(path, line, "correct", get(4))?,
            xi_held: parse_field(path, line, "xi_held", get(5))?,
            bound_value: optional(path, line, "bound_value", get(6))?,
            bound_satisfied: optional(path, line, "bound_satisfied", get(7))?,
            pulls: (0..m)
                .map(|j| parse_field(path, line, "pulls", get(8 + j)))
                .collect::<Result<_>>()?,
            wall_ms: parse_field(path, line, "wall_ms", get(8 + m))?,
        });
    }
    Ok(out)
}

/// Reads a JSON-lines records file written by [`emit_results`].
pub fn read_json_lines(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        let at = format!("{}:{}", path.display(), i + 1);
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| HarnessError::config(&at, e))?;
        let pulls: Vec<u64> = (0..)
            .map_while(|j| obj.get(&format!("pulls_{j}")).and_then(Value::as_u64))
            .collect();
        let mut rest = obj.clone();
        rest.retain(|k, _| !k.starts_with("pulls_"));
        rest.insert("pulls".into(), Value::from(pulls));
        out.push(serde_json::from_value(Value::Object(rest)).map_err(|e| HarnessError::config(&at, e))?);
    }
    Ok(out)
}

/// The records file with the wall-clock column dropped, for reproducibility
/// comparisons.
pub fn strip_wall_clock(text: &str, format: Format) -> String {
    match format {
        Format::Csv => text
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::JsonLines => text
            .lines()
            .map(|l| {
                let mut obj: Map<String, Value> = serde_json::from_str(l).unwrap_or_default();
                obj.remove("wall_ms");
                serde_json::to_string(&obj).unwrap_or_default()
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}
