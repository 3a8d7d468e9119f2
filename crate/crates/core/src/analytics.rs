//! Queueing mathematics used to size and validate the checkpoint.
//!
//! Conventions: `rate` is λ in passengers per second and `mean_service` is μ,
//! the mean check time in seconds, so one gate disposes of `1/μ` passengers
//! per second and the utilization of `S` gates is `λμ/S`.

use crate::{Error, Result};

/// Tail mass the truncated steady state may leave unaccounted for.
const TAIL_TOLERANCE: f64 = 1e-9;
/// Rescale threshold for the unnormalized birth-death weights.
const RESCALE_ABOVE: f64 = 1e200;

/// Offered load over disposal capacity, `λ / (S/μ)`.
pub fn utilization(rate: f64, gates: u32, mean_service: f64) -> Result<f64> {
    if gates == 0 {
        return Err(Error::invalid("gates", "at least one gate is required"));
    }
    if !(mean_service.is_finite() && mean_service > 0.0) {
        return Err(Error::invalid(
            "mu",
            format!("mean service time must be positive, got {mean_service}"),
        ));
    }
    Ok(rate * mean_service / f64::from(gates))
}

/// How passengers and gates divide between the regular and pre-check lanes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneSplitSpec {
    /// Share of arrivals that are trusted travelers.
    pub precheck_fraction: f64,
    /// Regular to pre-check gate ratio as `(regular, precheck)`.
    pub gate_ratio: (u32, u32),
    /// μ/μₚ, how much faster a pre-check passenger is processed.
    pub service_speed_ratio: f64,
}

impl Default for LaneSplitSpec {
    fn default() -> Self {
        Self {
            precheck_fraction: 0.45,
            gate_ratio: (3, 1),
            service_speed_ratio: 2.454,
        }
    }
}

impl LaneSplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = self.precheck_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(
                "precheck_fraction",
                format!("must lie strictly between 0 and 1, got {f}"),
            ));
        }
        if self.gate_ratio.0 == 0 || self.gate_ratio.1 == 0 {
            return Err(Error::invalid(
                "gate_ratio",
                "both ratio terms must be positive integers",
            ));
        }
        let r = self.service_speed_ratio;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(
                "service_speed_ratio",
                format!("must be positive, got {r}"),
            ));
        }
        Ok(())
    }

    /// The speed ratio that equalizes per-gate work under the gate ratio:
    /// `(regular/precheck) · f / (1 - f)`. At the defaults this is 3·45/55.
    pub fn balanced_speed_ratio(&self) -> f64 {
        let (reg, pre) = self.gate_ratio;
        let f = self.precheck_fraction;
        f64::from(reg) / f64::from(pre) * f / (1.0 - f)
    }

    /// Offered load in Erlangs for each lane class.
    pub fn lane_loads(&self, rate: f64, mean_service: f64) -> LaneLoads {
        let f = self.precheck_fraction;
        LaneLoads {
            regular: (1.0 - f) * rate * mean_service,
            precheck: f * rate * mean_service / self.service_speed_ratio,
            regular_share: 1.0 - f,
        }
    }

    /// Pre-check gates a strict ratio split would open, rounded half away from zero.
    pub fn rounded_precheck_gates(&self, total: u32) -> u32 {
        let (reg, pre) = self.gate_ratio;
        let exact = f64::from(total) * f64::from(pre) / f64::from(reg + pre);
        exact.round() as u32
    }
}

/// Offered load (λ·mean service time) per lane class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneLoads {
    pub regular: f64,
    pub precheck: f64,
    regular_share: f64,
}

/// A division of the open gates between the two lane classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateAllocation {
    pub regular: u32,
    pub precheck: u32,
}

impl GateAllocation {
    pub fn total(&self) -> u32 {
        self.regular + self.precheck
    }

    pub fn utilizations(&self, loads: &LaneLoads) -> (f64, f64) {
        (
            loads.regular / f64::from(self.regular),
            loads.precheck / f64::from(self.precheck),
        )
    }

    pub fn is_stable(&self, loads: &LaneLoads) -> bool {
        let (reg, pre) = self.utilizations(loads);
        reg < 1.0 && pre < 1.0
    }

    /// Arrival-weighted excess utilization; zero when both lanes are stable.
    /// Proportional to the fluid-limit mean wait of an overloaded day.
    fn overload(&self, loads: &LaneLoads) -> f64 {
        let (reg, pre) = self.utilizations(loads);
        loads.regular_share * (reg - 1.0).max(0.0) + (1.0 - loads.regular_share) * (pre - 1.0).max(0.0)
    }
}

/// The rounded ratio split and its one-gate neighbours, in preference order.
fn candidate_allocations(total: u32, split: &LaneSplitSpec) -> impl Iterator<Item = GateAllocation> {
    let base = i64::from(split.rounded_precheck_gates(total));
    [base, base - 1, base + 1]
        .into_iter()
        .filter(move |&pre| pre >= 1 && pre < i64::from(total))
        .map(move |pre| GateAllocation {
            regular: total - pre as u32,
            precheck: pre as u32,
        })
}

/// Splits `total` gates between the lanes.
///
/// Starts from the rounded ratio split. If that leaves a lane at or above
/// capacity, the first one-gate shift that stabilizes both lanes wins; if no
/// shift can, the candidate with the least arrival-weighted overload is used.
pub fn allocate_gates(total: u32, split: &LaneSplitSpec, loads: &LaneLoads) -> Result<GateAllocation> {
    let candidates: Vec<GateAllocation> = candidate_allocations(total, split).collect();
    let Some(&rounded) = candidates.first() else {
        return Err(Error::InfeasibleAllocation { gates: total });
    };
    if rounded.is_stable(loads) {
        return Ok(rounded);
    }
    if let Some(stable) = candidates.iter().find(|a| a.is_stable(loads)) {
        return Ok(*stable);
    }
    let mut best = rounded;
    for cand in &candidates[1..] {
        if cand.overload(loads) < best.overload(loads) {
            best = *cand;
        }
    }
    Ok(best)
}

/// Smallest total gate count whose split keeps both lanes below capacity.
pub fn min_stable_total_gates(rate: f64, mean_service: f64, split: &LaneSplitSpec) -> Result<u32> {
    split.validate()?;
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::invalid(
            "lambda",
            format!("arrival rate must be non-negative, got {rate}"),
        ));
    }
    if !(mean_service.is_finite() && mean_service > 0.0) {
        return Err(Error::invalid(
            "mu",
            format!("mean service time must be positive, got {mean_service}"),
        ));
    }
    let loads = split.lane_loads(rate, mean_service);
    let mut total = 2;
    loop {
        if candidate_allocations(total, split).any(|a| a.is_stable(&loads)) {
            return Ok(total);
        }
        total += 1;
    }
}

/// Stationary distribution of the number in system for an M/M/S queue.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub probabilities: Vec<f64>,
    pub truncation_level: usize,
    /// Largest absolute violation of the balance equations.
    pub residual: f64,
    rate: f64,
    mean_service: f64,
    gates: u32,
}

impl SteadyState {
    /// Expected number waiting (not in service).
    pub fn mean_queue_length(&self) -> f64 {
        let s = self.gates as usize;
        self.probabilities
            .iter()
            .enumerate()
            .skip(s + 1)
            .map(|(n, p)| (n - s) as f64 * p)
            .sum()
    }

    /// Mean wait before service by Little's law, `Lq / λ`.
    pub fn mean_wait(&self) -> f64 {
        if self.rate == 0.0 {
            return 0.0;
        }
        self.mean_queue_length() / self.rate
    }

    /// Probability that an arrival finds every gate busy.
    pub fn wait_probability(&self) -> f64 {
        self.probabilities.iter().skip(self.gates as usize).sum()
    }
}

fn departure_rate(n: usize, gates: u32, mean_service: f64) -> f64 {
    n.min(gates as usize) as f64 / mean_service
}

/// Largest absolute violation of the global balance equations over states
/// `0..N-1` of a truncated birth-death distribution.
pub fn balance_residual(probabilities: &[f64], rate: f64, mean_service: f64, gates: u32) -> f64 {
    let last = probabilities.len().saturating_sub(1);
    (0..last)
        .map(|n| {
            let inflow_from_below = if n == 0 { 0.0 } else { rate * probabilities[n - 1] };
            let inflow_from_above = departure_rate(n + 1, gates, mean_service) * probabilities[n + 1];
            let outflow = (rate + departure_rate(n, gates, mean_service)) * probabilities[n];
            (inflow_from_above + inflow_from_below - outflow).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves the birth-death balance equations with birth rate λ and death rate
/// `min(n, S)/μ` by forward recurrence, then normalizes.
///
/// `truncation` is the starting level; zero picks `S + ceil(50/(1-ρ))`. The
/// level doubles until the geometric tail beyond it is below `1e-9`.
pub fn birth_death_steady_state(rate: f64, mean_service: f64, gates: u32, truncation: usize) -> Result<SteadyState> {
    let rho = utilization(rate, gates, mean_service)?;
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::invalid(
            "lambda",
            format!("arrival rate must be non-negative, got {rate}"),
        ));
    }
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let s = gates as usize;
    let mut level = if truncation == 0 {
        s + (50.0 / (1.0 - rho)).ceil() as usize
    } else {
        truncation.max(s + 1)
    };
    loop {
        let weights = unnormalized_weights(rate, mean_service, gates, level);
        let total: f64 = weights.iter().sum();
        // mass beyond the last state, geometric with ratio ρ
        let tail = weights[level] / total * rho / (1.0 - rho);
        if tail < TAIL_TOLERANCE {
            let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let residual = balance_residual(&probabilities, rate, mean_service, gates);
            return Ok(SteadyState {
                probabilities,
                truncation_level: level,
                residual,
                rate,
                mean_service,
                gates,
            });
        }
        level *= 2;
    }
}

fn unnormalized_weights(rate: f64, mean_service: f64, gates: u32, level: usize) -> Vec<f64> {
    let mut weights = Vec::with_capacity(level + 1);
    weights.push(1.0);
    for n in 1..=level {
        let next = weights[n - 1] * rate / departure_rate(n, gates, mean_service);
        weights.push(next);
        if next > RESCALE_ABOVE {
            weights.iter_mut().for_each(|w| *w /= RESCALE_ABOVE);
        }
    }
    weights
}

/// Probability of waiting in an M/M/S queue with offered load `a = λμ`.
fn erlang_c(gates: u32, offered: f64) -> f64 {
    let mut blocking = 1.0;
    for k in 1..=gates {
        blocking = offered * blocking / (f64::from(k) + offered * blocking);
    }
    let rho = offered / f64::from(gates);
    blocking / (1.0 - rho * (1.0 - blocking))
}

/// Mean wait before service in a pooled M/M/S queue (Erlang C).
pub fn erlang_c_mean_wait(rate: f64, mean_service: f64, gates: u32) -> Result<f64> {
    let rho = utilization(rate, gates, mean_service)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    if rate == 0.0 {
        return Ok(0.0);
    }
    let offered = rate * mean_service;
    Ok(erlang_c(gates, offered) * mean_service / (f64::from(gates) - offered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn utilization_examples() {
        assert_eq!(utilization(0.0, 7, 39.0).unwrap(), 0.0);
        assert!((utilization(0.81333, 4, 39.0).unwrap() - 7.9299675).abs() < 1e-6);
        assert!((utilization(0.81333, 32, 39.02).unwrap() - 0.991755).abs() < 1e-5);
        assert!(utilization(1.0, 0, 39.0).is_err());
        assert!(utilization(1.0, 3, 0.0).is_err());
    }

    #[test]
    fn default_speed_ratio_is_balanced() {
        let split = LaneSplitSpec::default();
        assert!((split.balanced_speed_ratio() - split.service_speed_ratio).abs() < 1e-3);
    }

    #[test]
    fn split_validation() {
        let bad = |f: fn(&mut LaneSplitSpec)| {
            let mut s = LaneSplitSpec::default();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(|s| s.precheck_fraction = 0.0));
        assert!(bad(|s| s.precheck_fraction = 1.0));
        assert!(bad(|s| s.gate_ratio = (3, 0)));
        assert!(bad(|s| s.service_speed_ratio = -1.0));
    }

    /// Every (regular, precheck) pair, not just the ratio-rule candidates.
    fn exhaustive_min_stable(rate: f64, mean_service: f64, split: &LaneSplitSpec) -> u32 {
        let f = split.precheck_fraction;
        let need_reg = ((1.0 - f) * rate * mean_service).floor() as u32 + 1;
        let need_pre = (f * rate * mean_service / split.service_speed_ratio).floor() as u32 + 1;
        let mut total = 2;
        loop {
            let feasible = (1..total).any(|pre| total - pre >= need_reg && pre >= need_pre);
            if feasible {
                return total;
            }
            total += 1;
        }
    }

    #[test]
    fn min_stable_gates_examples() {
        let split = LaneSplitSpec::default();
        assert_eq!(min_stable_total_gates(0.81333, 39.02, &split).unwrap(), 24);
        assert_eq!(min_stable_total_gates(1e-9, 39.02, &split).unwrap(), 2);
        assert_eq!(min_stable_total_gates(0.0, 39.02, &split).unwrap(), 2);
        assert_eq!(min_stable_total_gates(1.62667, 39.02, &split).unwrap(), 47);
        assert_eq!(exhaustive_min_stable(0.81333, 39.02, &split), 24);
        assert_eq!(exhaustive_min_stable(1.62667, 39.02, &split), 47);
    }

    #[test]
    fn allocation_prefers_rounded_split_when_stable() {
        let split = LaneSplitSpec::default();
        let loads = split.lane_loads(0.81333, 39.02);
        let a = allocate_gates(24, &split, &loads).unwrap();
        assert_eq!((a.regular, a.precheck), (18, 6));
        let a = allocate_gates(28, &split, &loads).unwrap();
        assert_eq!((a.regular, a.precheck), (21, 7));
    }

    #[test]
    fn allocation_shifts_one_gate_when_overloaded() {
        let split = LaneSplitSpec::default();
        let loads = split.lane_loads(0.81333, 39.02);
        // rounded 16/5 overloads both lanes; 15/6 stabilizes pre-check
        let a = allocate_gates(21, &split, &loads).unwrap();
        assert_eq!((a.regular, a.precheck), (15, 6));
        let a = allocate_gates(22, &split, &loads).unwrap();
        assert_eq!((a.regular, a.precheck), (16, 6));
    }

    #[test]
    fn allocation_needs_two_gates() {
        let split = LaneSplitSpec::default();
        let loads = split.lane_loads(0.1, 39.0);
        assert_eq!(
            allocate_gates(1, &split, &loads),
            Err(Error::InfeasibleAllocation { gates: 1 })
        );
        let a = allocate_gates(2, &split, &loads).unwrap();
        assert_eq!((a.regular, a.precheck), (1, 1));
    }

    #[test]
    fn mm1_is_geometric() {
        // λμ = 0.5 with one gate
        let ss = birth_death_steady_state(0.5 / 39.0, 39.0, 1, 0).unwrap();
        for (n, p) in ss.probabilities.iter().enumerate().take(60) {
            let exact = 0.5 * 0.5_f64.powi(n as i32);
            assert!((p - exact).abs() < 1e-10, "n={n}: {p} vs {exact}");
        }
        assert!(ss.residual < 1e-10);
    }

    #[test]
    fn mm2_closed_form() {
        // λμ = 1 with two gates: P0 = 1/3, P1 = 1/3, Pn = (1/3)·2^(1-n)
        let ss = birth_death_steady_state(1.0 / 10.0, 10.0, 2, 0).unwrap();
        let p = &ss.probabilities;
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-10);
        assert!((p[4] - 1.0 / 3.0 / 8.0).abs() < 1e-10);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steady_state_rejects_overload() {
        assert!(matches!(
            birth_death_steady_state(1.0, 2.0, 2, 0),
            Err(Error::Unstable { .. })
        ));
        assert!(matches!(erlang_c_mean_wait(1.0, 3.0, 2), Err(Error::Unstable { .. })));
    }

    #[test]
    fn truncation_grows_from_small_start() {
        let ss = birth_death_steady_state(0.95, 1.0, 1, 3).unwrap();
        assert!(ss.truncation_level > 3);
        let tail = ss.probabilities[ss.truncation_level] * 0.95 / 0.05;
        assert!(tail < 1e-9);
    }

    #[test]
    fn erlang_c_single_gate_is_mm1() {
        let (rate, mu) = (0.02, 30.0);
        let rho = rate * mu;
        let w = erlang_c_mean_wait(rate, mu, 1).unwrap();
        assert!((w - rho * mu / (1.0 - rho)).abs() < 1e-12);
        assert_eq!(erlang_c_mean_wait(0.0, 30.0, 4).unwrap(), 0.0);
        assert!(erlang_c_mean_wait(1e-9, 30.0, 4).unwrap() < 1e-12);
    }

    #[test]
    fn erlang_c_matches_littles_law_over_grid() {
        for gates in 1..=10u32 {
            for tenth in 1..=9 {
                let rho = f64::from(tenth) / 10.0;
                let mu = 39.02;
                let rate = rho * f64::from(gates) / mu;
                let ss = birth_death_steady_state(rate, mu, gates, 0).unwrap();
                let erlang = erlang_c_mean_wait(rate, mu, gates).unwrap();
                let little = ss.mean_wait();
                let rel = ((erlang - little) / erlang).abs();
                assert!(rel < 1e-8, "S={gates} rho={rho}: {erlang} vs {little}");
                assert!(ss.residual < 1e-10);
            }
        }
    }

    #[test]
    fn large_station_does_not_overflow() {
        let ss = birth_death_steady_state(0.9 * 500.0 / 10.0, 10.0, 500, 0).unwrap();
        assert!((ss.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ss.probabilities.iter().all(|p| p.is_finite() && *p >= 0.0));
        let erlang = erlang_c_mean_wait(45.0, 10.0, 500).unwrap();
        assert!(((ss.mean_wait() - erlang) / erlang).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn utilization_is_homogeneous(rate in 0.0..5.0f64, k in 0.01..10.0f64, gates in 1u32..60, mu in 0.5..100.0f64) {
            let base = utilization(rate, gates, mu).unwrap();
            let scaled = utilization(k * rate, gates, mu).unwrap();
            prop_assert!((scaled - k * base).abs() <= 1e-12 * scaled.abs().max(1.0));
        }

        #[test]
        fn min_stable_gates_monotone(rate in 0.0..3.0f64, bump in 0.0..1.0f64, mu in 5.0..60.0f64, mu_bump in 0.0..20.0f64) {
            let split = LaneSplitSpec::default();
            let base = min_stable_total_gates(rate, mu, &split).unwrap();
            prop_assert!(min_stable_total_gates(rate + bump, mu, &split).unwrap() >= base);
            prop_assert!(min_stable_total_gates(rate, mu + mu_bump, &split).unwrap() >= base);
            // the ratio rule can only need more gates than a free split
            prop_assert!(base >= exhaustive_min_stable(rate, mu, &split));
        }

        #[test]
        fn steady_state_is_normalized_and_balanced(gates in 1u32..40, rho in 0.05..0.97f64) {
            let mu = 20.0;
            let rate = rho * f64::from(gates) / mu;
            let ss = birth_death_steady_state(rate, mu, gates, 0).unwrap();
            prop_assert!((ss.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(ss.probabilities.iter().all(|p| *p >= 0.0));
            prop_assert!(ss.residual < 1e-10);
        }
    }
}
