//! On-disk formats: series CSV / JSON lines, event sidecars, detection
//! traces, reports and histograms.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use laap_core::datagen::GeneratorConfig;
use laap_core::detect::DetectionTrace;
use laap_core::eval::{EvaluationReport, Histogram};
use laap_core::lstm::EpochLoss;
use laap_core::series::{Origin, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    CliError::Parse {
        path: path.into(),
        line,
        message: e.to_string(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io(path, e.into()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let reader = BufReader::new(open(path)?);
    serde_json::from_reader(reader).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Reads a single-column series. Files ending in `.jsonl` / `.ndjson` hold
/// one number (or `{"value": x}`) per line; anything else is CSV with an
/// optional header, taking the `value` column or else the last one.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let values = if matches!(ext, "jsonl" | "ndjson") {
        read_json_lines(path)?
    } else {
        read_csv_values(path)?
    };
    if values.is_empty() {
        return Err(CliError::data(path, "no data rows"));
    }
    Ok(TimeSeries::new(values, 1.0, Origin::Ingested)?)
}

fn parse_value(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| CliError::Parse {
        path: path.into(),
        line,
        message: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(CliError::Parse {
            path: path.into(),
            line,
            message: format!("non-finite value `{field}`"),
        });
    }
    Ok(v)
}

fn read_csv_values(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .comment(Some(b'#'))
        .from_reader(open(path)?);
    let mut column: Option<usize> = None;
    let mut values = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        let col = match column {
            Some(c) => c,
            None => {
                let last = record.len().saturating_sub(1);
                let looks_numeric = record.get(last).is_some_and(|f| f.trim().parse::<f64>().is_ok());
                if looks_numeric {
                    column = Some(last);
                    last
                } else {
                    column = Some(
                        record
                            .iter()
                            .position(|h| h.trim().eq_ignore_ascii_case("value"))
                            .unwrap_or(last),
                    );
                    continue;
                }
            }
        };
        let field = record.get(col).ok_or_else(|| CliError::Parse {
            path: path.into(),
            line,
            message: "missing value column".into(),
        })?;
        values.push(parse_value(path, line, field)?);
    }
    Ok(values)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonPoint {
    Bare(f64),
    Object { value: f64 },
}

fn read_json_lines(path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (k, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let lineno = k as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let point: JsonPoint = serde_json::from_str(&line).map_err(|e| CliError::Parse {
            path: path.into(),
            line: lineno,
            message: e.to_string(),
        })?;
        let v = match point {
            JsonPoint::Bare(v) | JsonPoint::Object { value: v } => v,
        };
        values.push(v);
    }
    Ok(values)
}

/// `index,value` with shortest round-trip float formatting.
pub fn write_series_csv(path: &Path, values: &[f64]) -> Result<()> {
    write_indexed_csv(path, 0, values)
}

/// Like [`write_series_csv`] but numbering rows from `first_index`.
pub fn write_indexed_csv(path: &Path, first_index: usize, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["index", "value"]).map_err(|e| csv_err(path, e))?;
    for (k, v) in values.iter().enumerate() {
        w.write_record([(first_index + k).to_string(), v.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes JSON lines for `.jsonl` / `.ndjson` paths and CSV otherwise.
pub fn write_series(path: &Path, values: &[f64]) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if !matches!(ext, "jsonl" | "ndjson") {
        return write_series_csv(path, values);
    }
    let mut out = create(path)?;
    for v in values {
        writeln!(out, "{v}").map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Ground truth written next to a generated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsSidecar {
    pub events: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub generator: GeneratorConfig,
}

/// Accepts a full sidecar or a bare JSON array of onsets.
pub fn read_events(path: &Path) -> Result<Vec<usize>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Events {
        Sidecar(EventsSidecar),
        Bare(Vec<usize>),
    }
    Ok(match read_json::<Events>(path)? {
        Events::Sidecar(s) => s.events,
        Events::Bare(v) => v,
    })
}

/// `index,value,mean,std,slope,label`; the local columns are empty for
/// detectors without local statistics. `first_index` offsets the index
/// column.
pub fn write_trace_csv(path: &Path, trace: &DetectionTrace, first_index: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["index", "value", "mean", "std", "slope", "label"])
        .map_err(|e| csv_err(path, e))?;
    for (i, (&v, &label)) in trace.values.iter().zip(&trace.labels).enumerate() {
        let local = |pick: fn(&laap_core::detect::LocalFeatures) -> &Vec<f64>| {
            trace.local.as_ref().map(|l| pick(l)[i].to_string()).unwrap_or_default()
        };
        w.write_record([
            (first_index + i).to_string(),
            v.to_string(),
            local(|l| &l.mean),
            local(|l| &l.std),
            local(|l| &l.slope),
            u8::from(label).to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per horizon.
pub fn write_report_csv(path: &Path, report: &EvaluationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["horizon", "test_points", "rmse_lstm", "rmse_arima", "zone1_accuracy", "zone4_accuracy"])
        .map_err(|e| csv_err(path, e))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for h in &report.horizons {
        w.write_record([
            h.horizon.to_string(),
            h.test_points.to_string(),
            h.rmse_lstm.to_string(),
            h.rmse_arima.to_string(),
            opt(h.zone1_accuracy),
            opt(h.zone4_accuracy),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_histogram_csv(path: &Path, histogram: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["bin_start", "count"]).map_err(|e| csv_err(path, e))?;
    for b in &histogram.bins {
        w.write_record([b.start.to_string(), b.count.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `horizon,epoch,loss` rows for several models.
pub fn write_training_log_csv(path: &Path, logs: &[(usize, &[EpochLoss])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["horizon", "epoch", "loss"]).map_err(|e| csv_err(path, e))?;
    for (horizon, log) in logs {
        for e in log.iter() {
            w.write_record([horizon.to_string(), e.epoch.to_string(), e.loss.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use laap_core::detect::{laap_detect, LaapConfig};
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let bare = write(&dir, "a.csv", "1.5\n2\n-3e-2\n");
        assert_eq!(read_series(&bare).unwrap().values(), &[1.5, 2.0, -0.03]);
        let headed = write(&dir, "b.csv", "value,index\n4.0,0\n4.5,1\n");
        assert_eq!(read_series(&headed).unwrap().values(), &[4.0, 4.5]);
        let indexed = write(&dir, "c.csv", "index,value\n0,7\n1,8\n");
        assert_eq!(read_series(&indexed).unwrap().values(), &[7.0, 8.0]);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "bad.csv", "index,value\n0,1.0\n1,oops\n");
        match read_series(&p).unwrap_err() {
            CliError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            e => panic!("{e}"),
        }
        let nan = write(&dir, "nan.csv", "1\nNaN\n");
        assert!(matches!(read_series(&nan), Err(CliError::Parse { line: 2, .. })));
        let empty = write(&dir, "empty.csv", "value\n");
        assert_eq!(read_series(&empty).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn json_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.jsonl", "1.0\n{\"value\": 2.5}\n\n3\n");
        assert_eq!(read_series(&p).unwrap().values(), &[1.0, 2.5, 3.0]);
        let bad = write(&dir, "t.jsonl", "1.0\n[2]\n");
        assert!(matches!(read_series(&bad), Err(CliError::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let err = read_series(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn events_bare_or_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let bare = write(&dir, "e.json", "[3, 9]");
        assert_eq!(read_events(&bare).unwrap(), vec![3, 9]);
        let sidecar = EventsSidecar {
            events: vec![1, 4],
            amplitudes: vec![0.5, -0.5],
            generator: GeneratorConfig::default(),
        };
        let p = dir.path().join("s.json");
        write_json(&p, &sidecar).unwrap();
        assert_eq!(read_events(&p).unwrap(), vec![1, 4]);
        assert_eq!(read_json::<EventsSidecar>(&p).unwrap(), sidecar);
    }

    #[test]
    fn trace_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let trace = laap_detect(&[0.0, 1.0, 0.0, 2.0], &LaapConfig::new(2, 0.5).unwrap()).unwrap();
        let p = dir.path().join("t.csv");
        write_trace_csv(&p, &trace, 10).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,value,mean,std,slope,label");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("10,0,"));
    }

    proptest! {
        #[test]
        fn series_csv_round_trips_exactly(values in prop::collection::vec(-1e12f64..1e12, 1..200)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("s.csv");
            write_series_csv(&p, &values).unwrap();
            prop_assert_eq!(read_series(&p).unwrap().into_values(), values.clone());
            let p = dir.path().join("s.jsonl");
            write_series(&p, &values).unwrap();
            prop_assert_eq!(read_series(&p).unwrap().into_values(), values.clone());
        }
    }
}
