//! Command-line front end: configuration, presets and CSV output for the
//! checkpoint simulator.

pub mod args;
pub mod config;
mod error;
pub mod output;
pub mod run;

use std::fs;

pub use args::Args;
pub use config::{Assignments, Preset, Settings};
pub use error::CliError;
pub use run::{run, RunManifest, RunReport};

/// Resolves the command line (and its config file, if any) into settings.
pub fn resolve_args(args: &Args) -> Result<Settings, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
            Assignments::parse(&text)?
        }
        None => Assignments::new(),
    };
    Settings::resolve(&file, &args.assignments()?)
}

/// Resolves the command line and runs it into `args.out`.
pub fn execute(args: &Args) -> Result<RunReport, CliError> {
    run(&resolve_args(args)?, &args.out)
}

#[cfg(test)]
mod tests {
    use std::fs;
    use std::path::Path;

    use clap::Parser;

    use super::*;

    fn sim(args: &[&str], out: &Path) -> Result<RunReport, CliError> {
        let out = out.to_str().unwrap();
        let tail = ["--out", out];
        let argv = ["checkpoint-sim"].iter().chain(args).chain(&tail);
        execute(&Args::try_parse_from(argv).unwrap())
    }

    fn header(path: &Path) -> String {
        fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
    }

    #[test]
    fn sweep_outputs_have_documented_headers() {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "--gate-range",
            "22:24",
            "--horizon",
            "3600",
            "--replications",
            "2",
            "--dump-passengers",
        ];
        let report = sim(&args, dir.path()).unwrap();
        assert_eq!(
            header(&dir.path().join("sweep.csv")),
            "gates,mean_wait_s,wait_stderr_s,wait_variance_s2,pro_a,pro_v,rho_regular,rho_precheck,tail_fraction_2h,replications,feasible"
        );
        assert_eq!(
            header(&dir.path().join("trace.csv")),
            "time_s,total_waiting,waiting_regular,waiting_precheck"
        );
        assert_eq!(
            header(&dir.path().join("passengers.csv")),
            "id,arrival_s,lane,queue_index,service_start_s,service_s,wait_s,departure_s"
        );
        assert_eq!(
            header(&dir.path().join("recommendation.csv")),
            "recommended_gates,criterion,wait_cap_s,mean_wait_s,pro_v"
        );
        assert!(report.summary.contains("<- chosen"), "{}", report.summary);
        assert_eq!(
            report.manifest.outputs,
            ["sweep.csv", "recommendation.csv", "trace.csv", "passengers.csv"]
        );

        let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let gates: Vec<&str> = sweep.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(gates, ["22", "23", "24"]);
    }

    #[test]
    fn trace_has_one_line_per_grid_point() {
        let dir = tempfile::tempdir().unwrap();
        sim(&["--preset", "simple", "--horizon", "1234"], dir.path()).unwrap();
        let lines = fs::read_to_string(dir.path().join("trace.csv"))
            .unwrap()
            .lines()
            .count();
        assert_eq!(lines, 1 + (1234 / 10 + 1));
    }

    #[test]
    fn zero_arrival_rate_runs() {
        let dir = tempfile::tempdir().unwrap();
        sim(
            &["--lambda", "0", "--horizon", "100", "--replications", "1"],
            dir.path(),
        )
        .unwrap();
        let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 12);
        assert!(trace.lines().skip(1).all(|l| l.ends_with(",0,0,0")));
    }

    #[test]
    fn bad_value_names_the_key_and_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let err = sim(&["--p-shortest", "1.3"], dir.path()).unwrap_err();
        assert!(err.to_string().contains("p_shortest"), "{err}");
        assert!(!dir.path().join("manifest.cfg").exists());
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# short day\nhorizon = 600\ngates = 30\nreplications = 1\n").unwrap();
        let out_dir = dir.path().join("out");
        sim(&["--config", cfg.to_str().unwrap(), "--gates", "26"], &out_dir).unwrap();
        let manifest = fs::read_to_string(out_dir.join("manifest.cfg")).unwrap();
        assert!(manifest.contains("\ngates = 26\n"));
        assert!(manifest.contains("\nhorizon = 600\n"));
    }

    #[test]
    fn missing_config_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.cfg");
        let err = sim(&["--config", missing.to_str().unwrap()], dir.path()).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
    }

    #[test]
    fn no_gate_count_under_the_cap_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "--gate-range",
            "12:13",
            "--horizon",
            "3600",
            "--replications",
            "1",
            "--wait-cap",
            "0.001",
        ];
        let err = sim(&args, dir.path()).unwrap_err();
        assert!(matches!(
            err,
            CliError::Model(checkpoint_core::Error::NoFeasibleGateCount { .. })
        ));
        assert!(!dir.path().join("manifest.cfg").exists());
    }
}
