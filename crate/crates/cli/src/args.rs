use std::path::PathBuf;

use clap::Parser;

use crate::config::Assignments;
use crate::error::CliError;

/// Airport security-checkpoint simulator and gate-count optimizer.
///
/// Settings resolve in this order, later winning: built-in defaults, preset
/// defaults, the config file, then flags.
#[derive(Debug, Parser)]
#[command(name = "checkpoint-sim", version)]
pub struct Args {
    /// simple, sweep-ord, sweep-crest or cultures
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` file; `#` starts a comment
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Arrival rate, passengers per second
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub gates: Option<String>,
    /// Sweep gate counts LO:HI inclusive
    #[arg(long, value_name = "LO:HI")]
    pub gate_range: Option<String>,
    /// Mean check time, seconds
    #[arg(long)]
    pub mu: Option<String>,
    /// Check-time variance, seconds squared
    #[arg(long)]
    pub sigma2: Option<String>,
    /// constant, gaussian or exponential
    #[arg(long)]
    pub service: Option<String>,
    #[arg(long, value_name = "SECONDS")]
    pub horizon: Option<String>,
    /// standard, usa, china or slower
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub p_shortest: Option<String>,
    #[arg(long)]
    pub error_rate: Option<String>,
    /// One lane, no pre-check split
    #[arg(long)]
    pub single_lane: bool,
    #[arg(long)]
    pub precheck_fraction: Option<String>,
    /// Regular to pre-check gates, e.g. 3:1
    #[arg(long, value_name = "R:P")]
    pub gate_ratio: Option<String>,
    #[arg(long)]
    pub service_speed_ratio: Option<String>,
    /// per-gate or pooled
    #[arg(long)]
    pub topology: Option<String>,
    /// Stop at the horizon instead of serving everyone who arrived
    #[arg(long)]
    pub no_drain: bool,
    #[arg(long, value_name = "SECONDS")]
    pub trace_interval: Option<String>,
    #[arg(long)]
    pub replications: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, value_name = "SECONDS")]
    pub wait_cap: Option<String>,
    /// min-gates or min-pro-v
    #[arg(long)]
    pub criterion: Option<String>,
    #[arg(long)]
    pub cost_per_gate: Option<String>,
    /// Also write one replication's per-passenger records
    #[arg(long)]
    pub dump_passengers: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl Args {
    /// The flags that were given, as config assignments.
    pub fn assignments(&self) -> Result<Assignments, CliError> {
        let mut a = Assignments::new();
        let valued = [
            ("preset", &self.preset),
            ("lambda", &self.lambda),
            ("gates", &self.gates),
            ("gate_range", &self.gate_range),
            ("mu", &self.mu),
            ("sigma2", &self.sigma2),
            ("service", &self.service),
            ("horizon", &self.horizon),
            ("profile", &self.profile),
            ("p_shortest", &self.p_shortest),
            ("error_rate", &self.error_rate),
            ("precheck_fraction", &self.precheck_fraction),
            ("gate_ratio", &self.gate_ratio),
            ("service_speed_ratio", &self.service_speed_ratio),
            ("topology", &self.topology),
            ("trace_interval", &self.trace_interval),
            ("replications", &self.replications),
            ("seed", &self.seed),
            ("wait_cap", &self.wait_cap),
            ("criterion", &self.criterion),
            ("cost_per_gate", &self.cost_per_gate),
        ];
        for (key, value) in valued {
            if let Some(v) = value {
                a.set(key, v.trim())?;
            }
        }
        if self.single_lane {
            a.set("single_lane", "true")?;
        }
        if self.no_drain {
            a.set("drain", "false")?;
        }
        if self.dump_passengers {
            a.set("dump_passengers", "true")?;
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_become_assignments() {
        let args = Args::try_parse_from([
            "checkpoint-sim",
            "--preset",
            "simple",
            "--p-shortest",
            "0.4",
            "--single-lane",
            "--no-drain",
        ])
        .unwrap();
        let a = args.assignments().unwrap();
        assert_eq!(a.get("preset"), Some("simple"));
        assert_eq!(a.get("p_shortest"), Some("0.4"));
        assert_eq!(a.get("single_lane"), Some("true"));
        assert_eq!(a.get("drain"), Some("false"));
        assert_eq!(a.get("lambda"), None);
        assert_eq!(args.out, PathBuf::from("out"));
    }
}
