//! Gate-count sweeps over replications and the staffing recommendation.
//!
//! Replication `r` of a scenario always uses stream id `r`, and results are
//! reduced in stream-id order, so serial and parallel execution give
//! bit-identical aggregates.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::analytics::utilization;
use crate::engine::{run_simulation, ScenarioConfig, SimMetrics, WaitMoments};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    /// Fewest gates whose mean wait is within the cap.
    #[default]
    MinGatesUnderCap,
    /// Smallest C·S·V_s among gate counts within the cap.
    MinProVUnderCap,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::MinGatesUnderCap => "min-gates",
            Criterion::MinProVUnderCap => "min-pro-v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecommendationPolicy {
    /// Longest acceptable mean wait, seconds.
    pub wait_cap: f64,
    pub criterion: Criterion,
    pub cost_per_gate: f64,
}

impl Default for RecommendationPolicy {
    fn default() -> Self {
        Self {
            wait_cap: 1830.0,
            criterion: Criterion::MinGatesUnderCap,
            cost_per_gate: 1.0,
        }
    }
}

impl RecommendationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.wait_cap.is_finite() && self.wait_cap > 0.0) {
            return Err(Error::invalid(
                "wait_cap",
                format!("must be positive, got {}", self.wait_cap),
            ));
        }
        if !(self.cost_per_gate.is_finite() && self.cost_per_gate > 0.0) {
            return Err(Error::invalid(
                "cost_per_gate",
                format!("must be positive, got {}", self.cost_per_gate),
            ));
        }
        Ok(())
    }
}

/// Cost-weighted wait and variance, `(C·S·W_s, C·S·V_s)`.
pub fn cost_products(gates: u32, mean_wait: f64, wait_variance: f64, cost_per_gate: f64) -> (f64, f64) {
    let total_cost = cost_per_gate * f64::from(gates);
    (total_cost * mean_wait, total_cost * wait_variance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanTracePoint {
    pub time: f64,
    pub total: f64,
    pub regular: f64,
    pub precheck: f64,
}

/// Aggregate of the replications of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    pub replications: u32,
    /// Average of the per-replication mean waits.
    pub mean_wait: f64,
    /// Standard error of that average.
    pub wait_stderr: f64,
    /// Waits of every served passenger of every replication.
    pub pooled: WaitMoments,
    pub arrived: u64,
    pub served: u64,
    pub residual: u64,
    /// Replication-average number waiting on the trace grid.
    pub mean_trace: Vec<MeanTracePoint>,
}

impl ReplicationSummary {
    /// Reduces runs in the given order.
    ///
    /// Panics if `runs` is empty.
    pub fn from_runs(runs: &[SimMetrics]) -> Self {
        assert!(!runs.is_empty(), "at least one replication is required");
        let n = runs.len() as f64;
        let mut per_run = WaitMoments::default();
        let mut pooled = WaitMoments::default();
        for run in runs {
            per_run.push(run.mean_wait);
            pooled.merge(&run.waits);
        }
        let wait_stderr = if runs.len() > 1 {
            (per_run.m2 / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };

        let mut mean_trace: Vec<MeanTracePoint> = runs[0]
            .queue_length_trace
            .iter()
            .map(|p| MeanTracePoint {
                time: p.time,
                total: 0.0,
                regular: 0.0,
                precheck: 0.0,
            })
            .collect();
        for run in runs {
            for (acc, p) in mean_trace.iter_mut().zip(&run.queue_length_trace) {
                acc.total += f64::from(p.total);
                acc.regular += f64::from(p.regular);
                acc.precheck += f64::from(p.precheck);
            }
        }
        for acc in &mut mean_trace {
            acc.total /= n;
            acc.regular /= n;
            acc.precheck /= n;
        }

        Self {
            replications: runs.len() as u32,
            mean_wait: runs.iter().map(|r| r.mean_wait).sum::<f64>() / n,
            wait_stderr,
            pooled,
            arrived: runs.iter().map(|r| r.arrived_count).sum(),
            served: runs.iter().map(|r| r.served_count).sum(),
            residual: runs.iter().map(|r| r.residual_in_system).sum(),
            mean_trace,
        }
    }
}

fn check_replications(replications: u32) -> Result<()> {
    if replications == 0 {
        return Err(Error::invalid("replications", "at least one replication is required"));
    }
    Ok(())
}

/// Runs replications `0..replications` of `base`, returned in stream-id order.
pub fn run_replications(base: &ScenarioConfig, replications: u32, execution: Execution) -> Result<Vec<SimMetrics>> {
    check_replications(replications)?;
    base.validate()?;
    let run = |rep: u32| run_simulation(&base.with_replication(u64::from(rep)), false).map(|o| o.metrics);
    match execution {
        Execution::Serial => (0..replications).map(run).collect(),
        Execution::Parallel => (0..replications).into_par_iter().map(run).collect(),
    }
}

/// Per-gate-count summary of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gates: u32,
    /// False when the gates cannot be split between the lanes; the
    /// statistics are then NaN.
    pub feasible: bool,
    pub mean_wait: f64,
    pub wait_stderr: f64,
    pub wait_variance: f64,
    pub pro_a: f64,
    pub pro_v: f64,
    pub rho_regular: f64,
    /// Zero for single-lane scenarios.
    pub rho_precheck: f64,
    pub tail_fraction_2h: f64,
    pub replications: u32,
}

impl SweepRow {
    fn infeasible(gates: u32, replications: u32) -> Self {
        Self {
            gates,
            feasible: false,
            mean_wait: f64::NAN,
            wait_stderr: f64::NAN,
            wait_variance: f64::NAN,
            pro_a: f64::NAN,
            pro_v: f64::NAN,
            rho_regular: f64::NAN,
            rho_precheck: f64::NAN,
            tail_fraction_2h: f64::NAN,
            replications,
        }
    }

    pub fn from_summary(config: &ScenarioConfig, summary: &ReplicationSummary, cost_per_gate: f64) -> Result<Self> {
        let gates = config.total_gates;
        let wait_variance = summary.pooled.variance();
        let (pro_a, pro_v) = cost_products(gates, summary.mean_wait, wait_variance, cost_per_gate);
        let (rho_regular, rho_precheck) = lane_utilizations(config)?;
        Ok(Self {
            gates,
            feasible: true,
            mean_wait: summary.mean_wait,
            wait_stderr: summary.wait_stderr,
            wait_variance,
            pro_a,
            pro_v,
            rho_regular,
            rho_precheck,
            tail_fraction_2h: summary.pooled.tail_fraction(),
            replications: summary.replications,
        })
    }
}

/// Analytic utilization of each lane class, from the nominal mean check time.
pub fn lane_utilizations(config: &ScenarioConfig) -> Result<(f64, f64)> {
    let rate = config.arrival.rate();
    let mean = config.service_regular.mean();
    match (config.split, config.allocation()?) {
        (Some(split), Some(alloc)) => Ok(alloc.utilizations(&split.lane_loads(rate, mean))),
        _ => Ok((utilization(rate, config.total_gates, mean)?, 0.0)),
    }
}

/// Runs `replications` replications for every gate count in `gate_range`.
///
/// Gate counts that cannot be split between the lanes yield infeasible rows.
pub fn sweep_gates(
    base: &ScenarioConfig,
    gate_range: RangeInclusive<u32>,
    replications: u32,
    policy: &RecommendationPolicy,
    execution: Execution,
) -> Result<Vec<SweepRow>> {
    Ok(sweep_with_summaries(base, gate_range, replications, policy, execution)?
        .into_iter()
        .map(|(row, _)| row)
        .collect())
}

/// As [`sweep_gates`], also returning each feasible row's replication summary.
pub fn sweep_with_summaries(
    base: &ScenarioConfig,
    gate_range: RangeInclusive<u32>,
    replications: u32,
    policy: &RecommendationPolicy,
    execution: Execution,
) -> Result<Vec<(SweepRow, Option<ReplicationSummary>)>> {
    check_replications(replications)?;
    policy.validate()?;
    if gate_range.is_empty() || *gate_range.start() == 0 {
        return Err(Error::invalid(
            "gate_range",
            format!("need 1 <= lo <= hi, got {}:{}", gate_range.start(), gate_range.end()),
        ));
    }

    let mut configs = Vec::new();
    let mut rows: Vec<Option<SweepRow>> = Vec::new();
    for gates in gate_range {
        let config = base.with_gates(gates);
        match config.validate() {
            Ok(()) => {
                configs.push(Some(config));
                rows.push(None);
            }
            Err(Error::InfeasibleAllocation { .. }) => {
                configs.push(None);
                rows.push(Some(SweepRow::infeasible(gates, replications)));
            }
            Err(e) => return Err(e),
        }
    }

    let jobs: Vec<(usize, u32)> = configs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_some())
        .flat_map(|(i, _)| (0..replications).map(move |r| (i, r)))
        .collect();
    let run = |&(i, rep): &(usize, u32)| {
        let config = configs[i]
            .as_ref()
            .expect("feasible job")
            .with_replication(u64::from(rep));
        run_simulation(&config, false).map(|o| o.metrics)
    };
    let results: Vec<SimMetrics> = match execution {
        Execution::Serial => jobs.iter().map(run).collect::<Result<_>>()?,
        Execution::Parallel => jobs.par_iter().map(run).collect::<Result<_>>()?,
    };

    let mut chunks = results.chunks(replications as usize);
    configs
        .iter()
        .zip(rows)
        .map(|(config, row)| match (config, row) {
            (_, Some(row)) => Ok((row, None)),
            (Some(config), None) => {
                let summary = ReplicationSummary::from_runs(chunks.next().expect("one chunk per feasible row"));
                let row = SweepRow::from_summary(config, &summary, policy.cost_per_gate)?;
                Ok((row, Some(summary)))
            }
            (None, None) => unreachable!("infeasible rows are pre-filled"),
        })
        .collect()
}

/// One gate count as seen by the recommendation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub gates: u32,
    pub mean_wait: f64,
    pub pro_v: f64,
    pub within_cap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub gates: u32,
    pub criterion: Criterion,
    pub wait_cap: f64,
    pub mean_wait: f64,
    pub pro_v: f64,
    /// Every feasible row that was compared, in sweep order.
    pub compared: Vec<Candidate>,
}

impl Recommendation {
    pub fn justification(&self) -> String {
        let mut text = String::new();
        let _ = writeln!(
            text,
            "recommended {} gates ({}, mean wait cap {} s)",
            self.gates,
            self.criterion.as_str(),
            self.wait_cap
        );
        for c in &self.compared {
            let _ = writeln!(
                text,
                "  S={:>3}  W_s={:>10.1} s  Pro_V={:>14.1}  {}{}",
                c.gates,
                c.mean_wait,
                c.pro_v,
                if c.within_cap { "within cap" } else { "over cap" },
                if c.gates == self.gates { "  <- chosen" } else { "" }
            );
        }
        text
    }
}

/// Picks a gate count from sweep rows under `policy`.
pub fn recommend_gates(rows: &[SweepRow], policy: &RecommendationPolicy) -> Result<Recommendation> {
    policy.validate()?;
    let compared: Vec<Candidate> = rows
        .iter()
        .filter(|r| r.feasible && r.mean_wait.is_finite())
        .map(|r| Candidate {
            gates: r.gates,
            mean_wait: r.mean_wait,
            pro_v: cost_products(r.gates, r.mean_wait, r.wait_variance, policy.cost_per_gate).1,
            within_cap: r.mean_wait <= policy.wait_cap,
        })
        .collect();
    let eligible = compared.iter().filter(|c| c.within_cap);
    let chosen = match policy.criterion {
        Criterion::MinGatesUnderCap => eligible.min_by_key(|c| c.gates),
        Criterion::MinProVUnderCap => eligible.min_by(|a, b| a.pro_v.total_cmp(&b.pro_v).then(a.gates.cmp(&b.gates))),
    };
    let chosen = *chosen.ok_or(Error::NoFeasibleGateCount {
        wait_cap: policy.wait_cap,
    })?;
    Ok(Recommendation {
        gates: chosen.gates,
        criterion: policy.criterion,
        wait_cap: policy.wait_cap,
        mean_wait: chosen.mean_wait,
        pro_v: chosen.pro_v,
        compared,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman_rank_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples required");
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx * vy).sqrt()
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}
