//! CSV emission. Numbers use the shortest representation that parses back
//! to the same `f64`, and every file is written to a temporary sibling and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use checkpoint_core::engine::PassengerRecord;
use checkpoint_core::optimizer::{MeanTracePoint, Recommendation, SweepRow};

use crate::error::CliError;

pub const SWEEP_HEADER: [&str; 11] = [
    "gates",
    "mean_wait_s",
    "wait_stderr_s",
    "wait_variance_s2",
    "pro_a",
    "pro_v",
    "rho_regular",
    "rho_precheck",
    "tail_fraction_2h",
    "replications",
    "feasible",
];

pub const TRACE_HEADER: [&str; 4] = ["time_s", "total_waiting", "waiting_regular", "waiting_precheck"];

pub const PASSENGER_HEADER: [&str; 8] = [
    "id",
    "arrival_s",
    "lane",
    "queue_index",
    "service_start_s",
    "service_s",
    "wait_s",
    "departure_s",
];

pub const RECOMMENDATION_HEADER: [&str; 5] = ["recommended_gates", "criterion", "wait_cap_s", "mean_wait_s", "pro_v"];

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|()| fs::rename(&tmp, path));
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

fn emit<R>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
    fields: impl Fn(R) -> Vec<String>,
) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: PathBuf::from(path),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(fields(row)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    emit(path, &SWEEP_HEADER, rows, |r| {
        vec![
            r.gates.to_string(),
            r.mean_wait.to_string(),
            r.wait_stderr.to_string(),
            r.wait_variance.to_string(),
            r.pro_a.to_string(),
            r.pro_v.to_string(),
            r.rho_regular.to_string(),
            r.rho_precheck.to_string(),
            r.tail_fraction_2h.to_string(),
            r.replications.to_string(),
            r.feasible.to_string(),
        ]
    })
}

pub fn write_trace(path: &Path, trace: &[MeanTracePoint]) -> Result<(), CliError> {
    emit(path, &TRACE_HEADER, trace, |p| {
        vec![
            p.time.to_string(),
            p.total.to_string(),
            p.regular.to_string(),
            p.precheck.to_string(),
        ]
    })
}

pub fn write_passengers(path: &Path, records: &[PassengerRecord]) -> Result<(), CliError> {
    emit(path, &PASSENGER_HEADER, records, |r| {
        vec![
            r.id.to_string(),
            r.arrival_time.to_string(),
            r.lane.as_str().to_owned(),
            r.queue_index.to_string(),
            r.service_start.to_string(),
            r.service_duration.to_string(),
            r.wait().to_string(),
            r.departure.to_string(),
        ]
    })
}

pub fn write_recommendation(path: &Path, rec: Option<&Recommendation>) -> Result<(), CliError> {
    emit(path, &RECOMMENDATION_HEADER, rec, |r| {
        vec![
            r.gates.to_string(),
            r.criterion.as_str().to_owned(),
            r.wait_cap.to_string(),
            r.mean_wait.to_string(),
            r.pro_v.to_string(),
        ]
    })
}
