//! Preset execution: runs the requested scenarios and writes their CSVs plus
//! a manifest that resolves back to the same settings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use checkpoint_core::engine::{run_simulation, BehaviorProfile, ScenarioConfig};
use checkpoint_core::optimizer::{
    recommend_gates, run_replications, sweep_with_summaries, Execution, ReplicationSummary, SweepRow,
};

use crate::config::{Assignments, Preset, Settings};
use crate::error::CliError;
use crate::output;

pub const MANIFEST_FILE: &str = "manifest.cfg";

/// Everything needed to reproduce a run's CSVs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: String,
    pub settings: Settings,
    pub version: &'static str,
    /// File names relative to the output directory, in write order.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Comment lines describe the run; the assignments resolve back to
    /// `settings`.
    pub fn render(&self) -> String {
        let mut text = String::new();
        let _ = writeln!(text, "# checkpoint-sim {} run manifest", self.version);
        let _ = writeln!(text, "# scenario: {}", self.scenario);
        let _ = writeln!(
            text,
            "# seed {}, {} replications per gate count",
            self.settings.seed, self.settings.replications
        );
        let _ = writeln!(text, "# outputs: {}", self.outputs.join(" "));
        for (key, value) in self.settings.to_assignments() {
            let _ = writeln!(text, "{key} = {value}");
        }
        text
    }

    /// Reads the settings back from a rendered manifest.
    pub fn parse_settings(text: &str) -> Result<Settings, CliError> {
        Settings::resolve(&Assignments::parse(text)?, &Assignments::new())
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    /// Human-readable summary for standard output.
    pub summary: String,
}

enum Mode {
    Single,
    Sweep(u32, u32),
    Cultures(u32, u32),
}

fn mode(settings: &Settings) -> Mode {
    match (settings.preset, settings.gate_range) {
        (Some(Preset::Cultures), range) => {
            let (lo, hi) = range.unwrap_or((settings.gates, settings.gates));
            Mode::Cultures(lo, hi)
        }
        (_, Some((lo, hi))) => Mode::Sweep(lo, hi),
        (_, None) => Mode::Single,
    }
}

fn scenario_name(settings: &Settings) -> String {
    match (settings.preset, settings.gate_range) {
        (Some(p), _) => p.name().to_owned(),
        (None, Some(_)) => "custom-sweep".to_owned(),
        (None, None) => "custom".to_owned(),
    }
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_owned());
        self.dir.join(name)
    }
}

/// Runs the scenario described by `settings` and writes its outputs into
/// `out_dir`, creating the directory if needed. The manifest is written
/// last, so its presence means every listed output exists.
pub fn run(settings: &Settings, out_dir: &Path) -> Result<RunReport, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut w = Writer {
        dir: out_dir,
        written: Vec::new(),
    };
    let base = settings.scenario()?;
    let mut summary = String::new();

    match mode(settings) {
        Mode::Single => run_single(settings, &base, &mut w, &mut summary),
        Mode::Sweep(lo, hi) => run_sweep(settings, &base, lo, hi, &mut w, &mut summary),
        Mode::Cultures(lo, hi) => run_cultures(settings, &base, lo, hi, &mut w, &mut summary),
    }?;

    let manifest = RunManifest {
        scenario: scenario_name(settings),
        settings: settings.clone(),
        version: env!("CARGO_PKG_VERSION"),
        outputs: w.written,
    };
    output::write_atomic(&out_dir.join(MANIFEST_FILE), manifest.render().as_bytes())?;
    Ok(RunReport { manifest, summary })
}

fn summarize(config: &ScenarioConfig, settings: &Settings) -> Result<(SweepRow, ReplicationSummary), CliError> {
    let runs = run_replications(config, settings.replications, Execution::Parallel)?;
    let summary = ReplicationSummary::from_runs(&runs);
    let row = SweepRow::from_summary(config, &summary, settings.cost_per_gate)?;
    Ok((row, summary))
}

fn dump_passengers(config: &ScenarioConfig, path: &Path) -> Result<(), CliError> {
    let outcome = run_simulation(&config.with_replication(0), true)?;
    output::write_passengers(path, outcome.records.as_deref().unwrap_or_default())
}

fn run_single(settings: &Settings, base: &ScenarioConfig, w: &mut Writer, out: &mut String) -> Result<(), CliError> {
    let (row, summary) = summarize(base, settings)?;
    output::write_sweep(&w.path("sweep.csv"), std::slice::from_ref(&row))?;
    output::write_trace(&w.path("trace.csv"), &summary.mean_trace)?;
    if settings.dump_passengers {
        dump_passengers(base, &w.path("passengers.csv"))?;
    }
    let _ = writeln!(
        out,
        "{} gates: mean wait {:.1} s (stderr {:.1}), {} arrived, {} served over {} replications",
        row.gates, row.mean_wait, row.wait_stderr, summary.arrived, summary.served, row.replications
    );
    Ok(())
}

fn run_sweep(
    settings: &Settings,
    base: &ScenarioConfig,
    lo: u32,
    hi: u32,
    w: &mut Writer,
    out: &mut String,
) -> Result<(), CliError> {
    let policy = settings.policy();
    let results = sweep_with_summaries(base, lo..=hi, settings.replications, &policy, Execution::Parallel)?;
    let rows: Vec<SweepRow> = results.iter().map(|(row, _)| row.clone()).collect();
    output::write_sweep(&w.path("sweep.csv"), &rows)?;

    let rec = recommend_gates(&rows, &policy)?;
    output::write_recommendation(&w.path("recommendation.csv"), Some(&rec))?;
    out.push_str(&rec.justification());

    let (_, chosen) = results
        .iter()
        .find(|(row, _)| row.gates == rec.gates)
        .expect("recommended gate count comes from the sweep");
    let trace = &chosen.as_ref().expect("recommended row is feasible").mean_trace;
    output::write_trace(&w.path("trace.csv"), trace)?;
    if settings.dump_passengers {
        dump_passengers(&base.with_gates(rec.gates), &w.path("passengers.csv"))?;
    }
    Ok(())
}

fn run_cultures(
    settings: &Settings,
    base: &ScenarioConfig,
    lo: u32,
    hi: u32,
    w: &mut Writer,
    out: &mut String,
) -> Result<(), CliError> {
    let policy = settings.policy();
    let _ = writeln!(out, "behavior profiles at {} gates:", settings.gates);
    for profile in BehaviorProfile::presets() {
        let name = profile.name.clone();
        let config = ScenarioConfig {
            behavior: profile,
            ..base.clone()
        };
        let results = sweep_with_summaries(&config, lo..=hi, settings.replications, &policy, Execution::Parallel)?;
        let rows: Vec<SweepRow> = results.iter().map(|(row, _)| row.clone()).collect();
        output::write_sweep(&w.path(&format!("cultures_{name}_sweep.csv")), &rows)?;

        let at_gates = results
            .iter()
            .find(|(row, s)| row.gates == settings.gates && s.is_some())
            .map(|(row, s)| (row.clone(), s.clone().expect("checked above")));
        let (row, summary) = match at_gates {
            Some(found) => found,
            None => summarize(&config.with_gates(settings.gates), settings)?,
        };
        output::write_trace(&w.path(&format!("cultures_{name}_trace.csv")), &summary.mean_trace)?;
        if settings.dump_passengers {
            dump_passengers(
                &config.with_gates(settings.gates),
                &w.path(&format!("cultures_{name}_passengers.csv")),
            )?;
        }
        let _ = writeln!(
            out,
            "  {name:<9} W_s={:>9.1} s  V_s={:>13.1} s^2",
            row.mean_wait, row.wait_variance
        );
    }
    Ok(())
}
