//! Output formats: CSV time series, JSON summary, SVG overlays and the
//! frame trace. Files are written atomically.

mod svg;

pub use svg::{default_panels, svg_overlay};

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cybernet::TraceEntry;
use crate::engine::{SimResult, Summary, Termination};
use crate::event_log::EventLog;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Which artefacts a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
    pub frametrace: bool,
}

impl Emit {
    pub fn parse(list: &str) -> Result<Self, String> {
        let mut e = Emit::default();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "csv" => e.csv = true,
                "json" => e.json = true,
                "svg" => e.svg = true,
                "frametrace" | "trace" => e.frametrace = true,
                "all" => {
                    e = Emit {
                        csv: true,
                        json: true,
                        svg: true,
                        frametrace: true,
                    }
                }
                other => return Err(format!("unknown output `{other}` (expected csv, json, svg, frametrace)")),
            }
        }
        Ok(e)
    }
}

/// Time series as CSV: `time_s` followed by every recorded channel. Numbers
/// use the shortest representation that reads back to the same value.
pub fn csv_string(result: &SimResult) -> String {
    let mut out = String::with_capacity(result.len() * (result.columns.len() + 1) * 12);
    out.push_str("time_s");
    for c in &result.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for k in 0..result.len() {
        out.push_str(&result.time_s[k].to_string());
        for col in &result.data {
            out.push(',');
            out.push_str(&col[k].to_string());
        }
        out.push('\n');
    }
    out
}

/// Reads a CSV written by [`csv_string`] back into a result without event
/// log. The duration is taken as the last time stamp.
pub fn parse_csv(text: &str, name: &str) -> Result<SimResult, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let mut cols = header.split(',');
    if cols.next() != Some("time_s") {
        return Err("first column must be time_s".into());
    }
    let columns: Vec<String> = cols.map(str::to_string).collect();
    let mut time_s = Vec::new();
    let mut data = vec![Vec::new(); columns.len()];
    for (n, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let parse = |f: Option<&str>| -> Result<f64, String> {
            f.ok_or_else(|| format!("row {}: too few fields", n + 2))?
                .parse::<f64>()
                .map_err(|e| format!("row {}: {e}", n + 2))
        };
        time_s.push(parse(fields.next())?);
        for col in &mut data {
            col.push(parse(fields.next())?);
        }
    }
    let dt_s = match time_s.as_slice() {
        [a, b, ..] => b - a,
        _ => 0.0,
    };
    Ok(SimResult {
        scenario: name.to_string(),
        dt_s,
        duration_s: time_s.last().copied().unwrap_or(0.0),
        time_s,
        columns,
        data,
        log: EventLog::new(),
        status: Termination::Completed,
        trace: Vec::new(),
    })
}

pub fn summary_json(summary: &Summary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serialises") + "\n"
}

/// One line per frame: send time, delivery time (or `-`), source,
/// destination, bytes in hex, verdict.
pub fn trace_string(trace: &[TraceEntry]) -> String {
    let mut out = String::from("# t_send t_deliver src dst hex verdict\n");
    for e in trace {
        let deliver = e.t_deliver.map_or("-".to_string(), |t| format!("{t:.6}"));
        let verdict = serde_json::to_value(e.verdict)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        out.push_str(&format!("{:.6} {deliver} {} {} {} {verdict}\n", e.t_send, e.src, e.dst, e.hex));
    }
    out
}

/// Writes `contents` to `path` via a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes the selected artefacts for one run into `dir`; returns the paths.
pub fn emit_outputs(
    result: &SimResult,
    summary: &Summary,
    baseline: Option<&SimResult>,
    emit: Emit,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    let mut put = |ext: &str, body: String| -> Result<(), ReportError> {
        let p = dir.join(format!("{}.{ext}", result.scenario));
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
        Ok(())
    };
    if emit.csv {
        put("csv", csv_string(result))?;
    }
    if emit.json {
        put("json", summary_json(summary))?;
    }
    if emit.svg {
        put("svg", svg_overlay(result, baseline, &default_panels(result)))?;
    }
    if emit.frametrace {
        put("trace.txt", trace_string(&result.trace))?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::summarize;

    fn toy(n: usize) -> SimResult {
        SimResult {
            scenario: "toy".into(),
            dt_s: 0.001,
            duration_s: (n - 1) as f64 * 0.001,
            time_s: (0..n).map(|k| k as f64 * 0.001).collect(),
            columns: vec!["freq_hz".into(), "v_A_pu".into(), "genset_loading_pu".into()],
            data: vec![vec![60.0; n], vec![1.0; n], vec![0.5; n]],
            log: EventLog::new(),
            status: Termination::Completed,
            trace: Vec::new(),
        }
    }

    #[test]
    fn three_step_run_gives_header_plus_three_rows() {
        let csv = csv_string(&toy(3));
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().next(), Some("time_s,freq_hz,v_A_pu,genset_loading_pu"));
    }

    #[test]
    fn csv_reads_back_exactly() {
        let mut r = toy(5);
        r.data[0] = vec![60.0, 59.123456789012345, 1.0 / 3.0, 58.0, 61.5];
        let back = parse_csv(&csv_string(&r), "toy").unwrap();
        assert_eq!(back.data, r.data);
        assert_eq!(back.time_s, r.time_s);
        assert_eq!(back.dt_s, 0.001);
    }

    #[test]
    fn constant_run_summary_has_nadir_60() {
        let json = summary_json(&summarize(&toy(10)).unwrap());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["nadir_hz"], 60.0);
        assert_eq!(v["blackout"], false);
    }

    #[test]
    fn emit_list_parsing() {
        let e = Emit::parse("csv,svg").unwrap();
        assert!(e.csv && e.svg && !e.json && !e.frametrace);
        assert!(Emit::parse("pdf").is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
