//! Scenario settings from `key = value` files and command-line flags.
//!
//! Every input, whether it came from a file or a flag, goes through the same
//! key parser, so range errors always name the offending key. Resolution
//! order, lowest first: built-in defaults, preset defaults, config file,
//! flags.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use checkpoint_core::analytics::LaneSplitSpec;
use checkpoint_core::engine::{BehaviorProfile, QueueTopology, ScenarioConfig, DEFAULT_TRACE_INTERVAL};
use checkpoint_core::optimizer::{Criterion, RecommendationPolicy};
use checkpoint_core::sampling::{ArrivalLaw, ServiceKind, ServiceLaw};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Simple,
    SweepOrd,
    SweepCrest,
    Cultures,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Simple, Preset::SweepOrd, Preset::SweepCrest, Preset::Cultures];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Simple => "simple",
            Preset::SweepOrd => "sweep-ord",
            Preset::SweepCrest => "sweep-crest",
            Preset::Cultures => "cultures",
        }
    }

    /// Keys the preset pins before the config file and flags are applied.
    fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Preset::Simple => &[
                ("single_lane", "true"),
                ("gates", "4"),
                ("service", "constant"),
                ("mu", "39"),
                ("horizon", "20000"),
                ("replications", "1"),
            ],
            Preset::SweepOrd => &[("gate_range", "12:28")],
            Preset::SweepCrest => &[("lambda", "1.62667"), ("gate_range", "36:52")],
            Preset::Cultures => &[("gate_range", "20:28"), ("gates", "21")],
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected simple, sweep-ord, sweep-crest or cultures)"))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Recognized keys, in the order they are applied and written to manifests.
pub const KEYS: &[&str] = &[
    "preset",
    "lambda",
    "gates",
    "gate_range",
    "service",
    "mu",
    "sigma2",
    "horizon",
    "profile",
    "p_shortest",
    "error_rate",
    "single_lane",
    "precheck_fraction",
    "gate_ratio",
    "service_speed_ratio",
    "topology",
    "drain",
    "trace_interval",
    "replications",
    "seed",
    "wait_cap",
    "criterion",
    "cost_per_gate",
    "dump_passengers",
];

const LANE_KEYS: [&str; 3] = ["precheck_fraction", "gate_ratio", "service_speed_ratio"];

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub preset: Option<Preset>,
    pub lambda: f64,
    pub gates: u32,
    pub gate_range: Option<(u32, u32)>,
    pub service: ServiceKind,
    pub mu: f64,
    pub sigma2: f64,
    pub horizon: f64,
    pub profile: String,
    pub p_shortest: f64,
    pub error_rate: f64,
    pub single_lane: bool,
    pub split: LaneSplitSpec,
    pub topology: QueueTopology,
    pub drain: bool,
    pub trace_interval: f64,
    pub replications: u32,
    pub seed: u64,
    pub wait_cap: f64,
    pub criterion: Criterion,
    pub cost_per_gate: f64,
    pub dump_passengers: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let standard = BehaviorProfile::standard();
        let policy = RecommendationPolicy::default();
        Self {
            preset: None,
            lambda: checkpoint_core::ORD_ARRIVAL_RATE,
            gates: 21,
            gate_range: None,
            service: ServiceKind::GaussianTruncated,
            mu: checkpoint_core::ORD_MEAN_SERVICE,
            sigma2: checkpoint_core::ORD_SERVICE_VARIANCE,
            horizon: checkpoint_core::ORD_HORIZON,
            profile: standard.name,
            p_shortest: standard.p_shortest,
            error_rate: standard.error_rate,
            single_lane: false,
            split: LaneSplitSpec::default(),
            topology: QueueTopology::PerGate,
            drain: true,
            trace_interval: DEFAULT_TRACE_INTERVAL,
            replications: 20,
            seed: 42,
            wait_cap: policy.wait_cap,
            criterion: policy.criterion,
            cost_per_gate: policy.cost_per_gate,
            dump_passengers: false,
        }
    }
}

/// Ordered `key -> value` assignments from one source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments(BTreeMap<String, String>);

impl Assignments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `key = value`, rejecting unknown keys.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::config(key, "unknown key"));
        }
        self.0.insert(key.to_owned(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// `other` wins where both assign a key.
    pub fn overlay(mut self, other: &Assignments) -> Self {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
        self
    }

    /// Parses the flat config format: `key = value` per line, `#` comments,
    /// blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(
                    line,
                    format!("line {}: expected `key = value`", lineno + 1),
                ));
            };
            let key = key.trim();
            if out.get(key).is_some() {
                return Err(CliError::config(key, format!("line {}: key given twice", lineno + 1)));
            }
            out.set(key, value.trim())?;
        }
        Ok(out)
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(key, format!("expected true or false, got `{value}`"))),
    }
}

fn parse_pair(key: &str, value: &str) -> Result<(u32, u32), CliError> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| CliError::config(key, format!("expected A:B, got `{value}`")))?;
    Ok((parse_value(key, a.trim())?, parse_value(key, b.trim())?))
}

fn check(key: &str, ok: bool, what: &str, value: impl fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, format!("{what}, got {value}")))
    }
}

fn probability(key: &str, value: &str) -> Result<f64, CliError> {
    let p: f64 = parse_value(key, value)?;
    check(key, (0.0..=1.0).contains(&p), "must lie in [0, 1]", p)?;
    Ok(p)
}

fn positive(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = parse_value(key, value)?;
    check(key, x.is_finite() && x > 0.0, "must be positive", x)?;
    Ok(x)
}

impl Settings {
    /// Resolves file and flag assignments on top of the defaults of the
    /// selected preset.
    pub fn resolve(file: &Assignments, flags: &Assignments) -> Result<Self, CliError> {
        let merged = file.clone().overlay(flags);
        let preset = merged
            .get("preset")
            .map(|p| p.parse::<Preset>().map_err(|e| CliError::config("preset", e)))
            .transpose()?;

        if merged
            .get("single_lane")
            .map(|v| parse_bool("single_lane", v))
            .transpose()?
            == Some(true)
        {
            if let Some(key) = LANE_KEYS.iter().find(|k| merged.get(k).is_some()) {
                return Err(CliError::config(*key, "contradicts single_lane = true"));
            }
        }

        let mut effective = Assignments::new();
        if let Some(p) = preset {
            for (k, v) in p.defaults() {
                effective.set(k, *v)?;
            }
        }
        let effective = effective.overlay(&merged);

        let mut s = Settings::default();
        for key in KEYS {
            if let Some(value) = effective.get(key) {
                s.apply(key, value)?;
            }
        }
        s.validate()?;
        Ok(s)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "preset" => self.preset = Some(value.parse().map_err(|e| CliError::config(key, e))?),
            "lambda" => {
                let x: f64 = parse_value(key, value)?;
                check(key, x.is_finite() && x >= 0.0, "must be non-negative", x)?;
                self.lambda = x;
            }
            "gates" => {
                let n: u32 = parse_value(key, value)?;
                check(key, n >= 1, "must be at least 1", n)?;
                self.gates = n;
            }
            "gate_range" => {
                let (lo, hi) = parse_pair(key, value)?;
                check(key, lo >= 1 && lo <= hi, "must satisfy 1 <= LO <= HI", value)?;
                self.gate_range = Some((lo, hi));
            }
            "service" => {
                self.service = match value {
                    "constant" => ServiceKind::Constant,
                    "gaussian" => ServiceKind::GaussianTruncated,
                    "exponential" => ServiceKind::Exponential,
                    _ => {
                        return Err(CliError::config(
                            key,
                            format!("expected constant, gaussian or exponential, got `{value}`"),
                        ))
                    }
                }
            }
            "mu" => self.mu = positive(key, value)?,
            "sigma2" => {
                let x: f64 = parse_value(key, value)?;
                check(key, x.is_finite() && x >= 0.0, "must be non-negative", x)?;
                self.sigma2 = x;
            }
            "horizon" => self.horizon = positive(key, value)?,
            "profile" => {
                let p = BehaviorProfile::by_name(value).ok_or_else(|| {
                    CliError::config(key, format!("expected standard, usa, china or slower, got `{value}`"))
                })?;
                self.profile = p.name;
                self.p_shortest = p.p_shortest;
                self.error_rate = p.error_rate;
            }
            "p_shortest" => self.p_shortest = probability(key, value)?,
            "error_rate" => self.error_rate = probability(key, value)?,
            "single_lane" => self.single_lane = parse_bool(key, value)?,
            "precheck_fraction" => {
                let f: f64 = parse_value(key, value)?;
                check(key, f > 0.0 && f < 1.0, "must lie strictly between 0 and 1", f)?;
                self.split.precheck_fraction = f;
            }
            "gate_ratio" => {
                let (reg, pre) = parse_pair(key, value)?;
                check(key, reg >= 1 && pre >= 1, "both terms must be positive", value)?;
                self.split.gate_ratio = (reg, pre);
            }
            "service_speed_ratio" => self.split.service_speed_ratio = positive(key, value)?,
            "topology" => {
                self.topology = match value {
                    "per-gate" => QueueTopology::PerGate,
                    "pooled" => QueueTopology::Pooled,
                    _ => {
                        return Err(CliError::config(
                            key,
                            format!("expected per-gate or pooled, got `{value}`"),
                        ))
                    }
                }
            }
            "drain" => self.drain = parse_bool(key, value)?,
            "trace_interval" => self.trace_interval = positive(key, value)?,
            "replications" => {
                let n: u32 = parse_value(key, value)?;
                check(key, n >= 1, "must be at least 1", n)?;
                self.replications = n;
            }
            "seed" => self.seed = parse_value(key, value)?,
            "wait_cap" => self.wait_cap = positive(key, value)?,
            "criterion" => {
                self.criterion = match value {
                    "min-gates" => Criterion::MinGatesUnderCap,
                    "min-pro-v" => Criterion::MinProVUnderCap,
                    _ => {
                        return Err(CliError::config(
                            key,
                            format!("expected min-gates or min-pro-v, got `{value}`"),
                        ))
                    }
                }
            }
            "cost_per_gate" => self.cost_per_gate = positive(key, value)?,
            "dump_passengers" => self.dump_passengers = parse_bool(key, value)?,
            _ => return Err(CliError::config(key, "unknown key")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if !self.single_lane {
            if self.gates < 2 {
                return Err(CliError::config(
                    "gates",
                    "two lanes need at least 2 gates; use single_lane = true",
                ));
            }
            if let Some((lo, _)) = self.gate_range {
                if lo < 2 {
                    return Err(CliError::config(
                        "gate_range",
                        "two lanes need at least 2 gates per row",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Name of the behavior profile, or `custom` when the probabilities were
    /// overridden away from the named preset.
    pub fn behavior(&self) -> BehaviorProfile {
        let name = match BehaviorProfile::by_name(&self.profile) {
            Some(p) if p.p_shortest == self.p_shortest && p.error_rate == self.error_rate => p.name,
            _ => "custom".to_owned(),
        };
        BehaviorProfile {
            name,
            p_shortest: self.p_shortest,
            error_rate: self.error_rate,
        }
    }

    pub fn service_law(&self) -> Result<ServiceLaw, CliError> {
        Ok(match self.service {
            ServiceKind::Constant => ServiceLaw::constant(self.mu)?,
            ServiceKind::GaussianTruncated => ServiceLaw::gaussian(self.mu, self.sigma2.sqrt())?,
            ServiceKind::Exponential => ServiceLaw::exponential(self.mu)?,
        })
    }

    pub fn scenario(&self) -> Result<ScenarioConfig, CliError> {
        Ok(ScenarioConfig {
            arrival: ArrivalLaw::new(self.lambda, self.horizon)?,
            service_regular: self.service_law()?,
            split: (!self.single_lane).then_some(self.split),
            total_gates: self.gates,
            behavior: self.behavior(),
            topology: self.topology,
            drain_after_horizon: self.drain,
            trace_interval: self.trace_interval,
            seed: self.seed,
            replication: 0,
        })
    }

    pub fn policy(&self) -> RecommendationPolicy {
        RecommendationPolicy {
            wait_cap: self.wait_cap,
            criterion: self.criterion,
            cost_per_gate: self.cost_per_gate,
        }
    }

    /// Canonical assignments that resolve back to exactly these settings.
    pub fn to_assignments(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for key in KEYS {
            let value = match *key {
                "preset" => self.preset.map(|p| p.name().to_owned()),
                "lambda" => Some(self.lambda.to_string()),
                "gates" => Some(self.gates.to_string()),
                "gate_range" => self.gate_range.map(|(lo, hi)| format!("{lo}:{hi}")),
                "service" => Some(self.service.as_str().to_owned()),
                "mu" => Some(self.mu.to_string()),
                "sigma2" => Some(self.sigma2.to_string()),
                "horizon" => Some(self.horizon.to_string()),
                "profile" => Some(self.profile.clone()),
                "p_shortest" => Some(self.p_shortest.to_string()),
                "error_rate" => Some(self.error_rate.to_string()),
                "single_lane" => Some(self.single_lane.to_string()),
                "precheck_fraction" => (!self.single_lane).then(|| self.split.precheck_fraction.to_string()),
                "gate_ratio" => {
                    (!self.single_lane).then(|| format!("{}:{}", self.split.gate_ratio.0, self.split.gate_ratio.1))
                }
                "service_speed_ratio" => (!self.single_lane).then(|| self.split.service_speed_ratio.to_string()),
                "topology" => Some(self.topology.as_str().to_owned()),
                "drain" => Some(self.drain.to_string()),
                "trace_interval" => Some(self.trace_interval.to_string()),
                "replications" => Some(self.replications.to_string()),
                "seed" => Some(self.seed.to_string()),
                "wait_cap" => Some(self.wait_cap.to_string()),
                "criterion" => Some(self.criterion.as_str().to_owned()),
                "cost_per_gate" => Some(self.cost_per_gate.to_string()),
                "dump_passengers" => Some(self.dump_passengers.to_string()),
                _ => None,
            };
            if let Some(v) = value {
                out.push((*key, v));
            }
        }
        out
    }
}
