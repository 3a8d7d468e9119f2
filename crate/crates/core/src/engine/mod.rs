//! Event-driven checkpoint simulator.
//!
//! Passengers arrive by a Poisson stream, are sorted into a lane class when
//! a pre-check split is configured, pick a gate line under a
//! [`BehaviorProfile`] and wait FIFO for service. Departures and arrivals are
//! processed in timestamp order; at equal times departures go first, then
//! lower passenger ordinals.

mod behavior;
mod metrics;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

pub use behavior::{choose_queue, BehaviorProfile};
pub use metrics::{compute_metrics, trace_grid, LaneMetrics, PassengerRecord, SimMetrics, TracePoint, WaitMoments};

use crate::analytics::{allocate_gates, GateAllocation, LaneSplitSpec};
use crate::sampling::{
    classify_lane, poisson_arrival_times, sample_service_time, ArrivalLaw, Lane, Purpose, RngStream, ServiceLaw,
};
use crate::{Error, Result};
use metrics::{build_metrics, Occupancy};

pub const DEFAULT_TRACE_INTERVAL: f64 = 10.0;

/// How waiting passengers are organised in front of the gates of a lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueTopology {
    /// One FIFO line per gate; passengers pick a line and stay in it.
    #[default]
    PerGate,
    /// One shared FIFO line per lane class feeding every gate of the class.
    Pooled,
}

impl QueueTopology {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueTopology::PerGate => "per-gate",
            QueueTopology::Pooled => "pooled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub arrival: ArrivalLaw,
    pub service_regular: ServiceLaw,
    /// `None` runs a single homogeneous lane.
    pub split: Option<LaneSplitSpec>,
    pub total_gates: u32,
    pub behavior: BehaviorProfile,
    pub topology: QueueTopology,
    pub drain_after_horizon: bool,
    pub trace_interval: f64,
    pub seed: u64,
    pub replication: u64,
}

impl ScenarioConfig {
    /// The yearly-average day: Gaussian check times, 3:1 pre-check split,
    /// shortest-line behavior, 18-hour horizon, drained.
    pub fn ord_default(total_gates: u32) -> Self {
        Self {
            arrival: ArrivalLaw::new(crate::ORD_ARRIVAL_RATE, crate::ORD_HORIZON).expect("valid defaults"),
            service_regular: ServiceLaw::gaussian(crate::ORD_MEAN_SERVICE, crate::ORD_SERVICE_VARIANCE.sqrt())
                .expect("valid defaults"),
            split: Some(LaneSplitSpec::default()),
            total_gates,
            behavior: BehaviorProfile::standard(),
            topology: QueueTopology::PerGate,
            drain_after_horizon: true,
            trace_interval: DEFAULT_TRACE_INTERVAL,
            seed: 42,
            replication: 0,
        }
    }

    /// Four gates, constant 39 s checks, one lane: the saturated day.
    pub fn simple() -> Self {
        Self {
            service_regular: ServiceLaw::constant(39.0).expect("valid defaults"),
            split: None,
            arrival: ArrivalLaw::new(crate::ORD_ARRIVAL_RATE, 20_000.0).expect("valid defaults"),
            ..Self::ord_default(4)
        }
    }

    pub fn with_gates(&self, total_gates: u32) -> Self {
        Self {
            total_gates,
            ..self.clone()
        }
    }

    pub fn with_replication(&self, replication: u64) -> Self {
        Self {
            replication,
            ..self.clone()
        }
    }

    pub fn precheck_service(&self) -> Result<Option<ServiceLaw>> {
        self.split
            .map(|s| self.service_regular.faster_by(s.service_speed_ratio))
            .transpose()
    }

    /// Gate split for split configurations.
    pub fn allocation(&self) -> Result<Option<GateAllocation>> {
        let Some(split) = &self.split else {
            return Ok(None);
        };
        split.validate()?;
        let loads = split.lane_loads(self.arrival.rate(), self.service_regular.mean());
        allocate_gates(self.total_gates, split, &loads).map(Some)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_gates == 0 {
            return Err(Error::invalid("gates", "at least one gate is required"));
        }
        if !(self.trace_interval.is_finite() && self.trace_interval > 0.0) {
            return Err(Error::invalid("trace_interval", "must be positive"));
        }
        BehaviorProfile::new(
            self.behavior.name.clone(),
            self.behavior.p_shortest,
            self.behavior.error_rate,
        )?;
        self.precheck_service()?;
        self.allocation()?;
        Ok(())
    }

    /// Lane served by each gate, regular gates first.
    fn gate_lanes(&self) -> Result<Vec<Lane>> {
        Ok(match self.allocation()? {
            None => vec![Lane::Regular; self.total_gates as usize],
            Some(a) => std::iter::repeat_n(Lane::Regular, a.regular as usize)
                .chain(std::iter::repeat_n(Lane::Precheck, a.precheck as usize))
                .collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub metrics: SimMetrics,
    /// Served passengers in arrival order, when requested.
    pub records: Option<Vec<PassengerRecord>>,
}

#[derive(Debug, Clone, Copy)]
struct Departure {
    time: f64,
    passenger: usize,
    gate: usize,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.passenger.cmp(&other.passenger))
    }
}

#[derive(Debug, Clone)]
struct Passenger {
    arrival: f64,
    lane: Lane,
    gate: usize,
    service: f64,
    start: Option<f64>,
    departure: Option<f64>,
}

struct Gate {
    lane: Lane,
    line: VecDeque<usize>,
    busy: bool,
}

impl Gate {
    fn length(&self) -> usize {
        self.line.len() + usize::from(self.busy)
    }
}

struct Checkpoint<'a> {
    config: &'a ScenarioConfig,
    gates: Vec<Gate>,
    /// Gate indices per lane class, in index order.
    lane_gates: [Vec<usize>; 2],
    /// Shared lines for the pooled topology.
    pooled: [VecDeque<usize>; 2],
    passengers: Vec<Passenger>,
    departures: BinaryHeap<Reverse<Departure>>,
    lengths: Vec<usize>,
    choice_rng: RngStream,
}

impl Checkpoint<'_> {
    fn start_service(&mut self, passenger: usize, gate: usize, now: f64) {
        self.gates[gate].busy = true;
        let p = &mut self.passengers[passenger];
        p.gate = gate;
        p.start = Some(now);
        self.departures.push(Reverse(Departure {
            time: now + p.service,
            passenger,
            gate,
        }));
    }

    fn arrive(&mut self, passenger: usize) {
        let Passenger { arrival: now, lane, .. } = self.passengers[passenger];
        let candidates = &self.lane_gates[lane as usize];
        match self.config.topology {
            QueueTopology::PerGate => {
                self.lengths.clear();
                self.lengths.extend(candidates.iter().map(|&g| self.gates[g].length()));
                let pick = choose_queue(&self.lengths, &self.config.behavior, &mut self.choice_rng);
                let gate = candidates[pick];
                self.passengers[passenger].gate = gate;
                if self.gates[gate].busy {
                    self.gates[gate].line.push_back(passenger);
                } else {
                    self.start_service(passenger, gate, now);
                }
            }
            QueueTopology::Pooled => match candidates.iter().copied().find(|&g| !self.gates[g].busy) {
                Some(gate) => self.start_service(passenger, gate, now),
                None => self.pooled[lane as usize].push_back(passenger),
            },
        }
    }

    fn depart(&mut self, event: Departure) {
        self.passengers[event.passenger].departure = Some(event.time);
        let gate = &mut self.gates[event.gate];
        gate.busy = false;
        let next = match self.config.topology {
            QueueTopology::PerGate => gate.line.pop_front(),
            QueueTopology::Pooled => self.pooled[gate.lane as usize].pop_front(),
        };
        if let Some(next) = next {
            self.start_service(next, event.gate, event.time);
        }
    }
}

/// Runs one replication. Records of served passengers are returned only when
/// `keep_records` is set.
pub fn run_simulation(config: &ScenarioConfig, keep_records: bool) -> Result<SimOutcome> {
    config.validate()?;
    let seed = config.seed;
    let rep = config.replication;
    let mut arrival_rng = RngStream::for_purpose(seed, rep, Purpose::Arrivals);
    let mut lane_rng = RngStream::for_purpose(seed, rep, Purpose::Lanes);
    let mut service_rng = RngStream::for_purpose(seed, rep, Purpose::Service);

    let regular_law = config.service_regular;
    let precheck_law = config.precheck_service()?;
    let passengers: Vec<Passenger> = poisson_arrival_times(&config.arrival, &mut arrival_rng)
        .into_iter()
        .map(|arrival| {
            let (lane, law) = match (&config.split, &precheck_law) {
                (Some(split), Some(pre)) => match classify_lane(split.precheck_fraction, &mut lane_rng) {
                    Lane::Precheck => (Lane::Precheck, pre),
                    Lane::Regular => (Lane::Regular, &regular_law),
                },
                _ => (Lane::Regular, &regular_law),
            };
            Passenger {
                arrival,
                lane,
                gate: 0,
                service: sample_service_time(law, &mut service_rng),
                start: None,
                departure: None,
            }
        })
        .collect();

    let lanes = config.gate_lanes()?;
    let mut lane_gates: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (g, lane) in lanes.iter().enumerate() {
        lane_gates[*lane as usize].push(g);
    }
    let mut sim = Checkpoint {
        config,
        gates: lanes
            .iter()
            .map(|&lane| Gate {
                lane,
                line: VecDeque::new(),
                busy: false,
            })
            .collect(),
        lane_gates,
        pooled: [VecDeque::new(), VecDeque::new()],
        passengers,
        departures: BinaryHeap::new(),
        lengths: Vec::with_capacity(lanes.len()),
        choice_rng: RngStream::for_purpose(seed, rep, Purpose::Choice),
    };

    let horizon = config.arrival.horizon();
    let mut next_arrival = 0;
    loop {
        let departure = sim.departures.peek().map(|Reverse(d)| *d);
        let arrival = sim.passengers.get(next_arrival).map(|p| p.arrival);
        match (departure, arrival) {
            (Some(d), Some(a)) if d.time <= a => {
                sim.departures.pop();
                sim.depart(d);
            }
            (_, Some(_)) => {
                sim.arrive(next_arrival);
                next_arrival += 1;
            }
            (Some(d), None) if config.drain_after_horizon || d.time <= horizon => {
                sim.departures.pop();
                sim.depart(d);
            }
            _ => break,
        }
    }

    let mut served = Vec::with_capacity(sim.passengers.len());
    let mut residual = Vec::new();
    for (id, p) in sim.passengers.into_iter().enumerate() {
        match (p.start, p.departure) {
            (Some(start), Some(departure)) => served.push(PassengerRecord {
                id: id as u64,
                arrival_time: p.arrival,
                lane: p.lane,
                queue_index: p.gate as u32,
                service_start: start,
                service_duration: p.service,
                departure,
            }),
            (start, _) => residual.push(Occupancy {
                arrival: p.arrival,
                service_start: start.unwrap_or(f64::INFINITY),
                lane: p.lane,
            }),
        }
    }

    let metrics = build_metrics(&served, &residual, horizon, config.trace_interval);
    Ok(SimOutcome {
        metrics,
        records: keep_records.then_some(served),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(gates: u32, rate: f64, horizon: f64) -> ScenarioConfig {
        ScenarioConfig {
            arrival: ArrivalLaw::new(rate, horizon).unwrap(),
            ..ScenarioConfig::ord_default(gates)
        }
    }

    #[test]
    fn zero_rate_is_empty() {
        let out = run_simulation(&small(4, 0.0, 1000.0), true).unwrap();
        let m = out.metrics;
        assert_eq!((m.mean_wait, m.served_count, m.arrived_count), (0.0, 0, 0));
        assert!(m.queue_length_trace.iter().all(|p| p.total == 0));
        assert!(out.records.unwrap().is_empty());
    }

    #[test]
    fn one_gate_cannot_split() {
        let err = run_simulation(&small(1, 0.5, 100.0), false).unwrap_err();
        assert_eq!(err, Error::InfeasibleAllocation { gates: 1 });
        let mut single = small(1, 0.5, 100.0);
        single.split = None;
        assert!(run_simulation(&single, false).is_ok());
    }

    #[test]
    fn records_respect_causality_and_fifo() {
        let out = run_simulation(&small(8, 0.3, 5000.0), true).unwrap();
        let recs = out.records.unwrap();
        assert!(!recs.is_empty());
        let mut by_gate: Vec<Vec<&PassengerRecord>> = vec![Vec::new(); 8];
        for r in &recs {
            assert!(r.service_start >= r.arrival_time);
            assert_eq!(r.departure, r.service_start + r.service_duration);
            by_gate[r.queue_index as usize].push(r);
        }
        for gate in by_gate {
            for pair in gate.windows(2) {
                assert!(pair[0].arrival_time < pair[1].arrival_time);
                assert!(pair[0].service_start < pair[1].service_start);
                assert!(pair[0].departure <= pair[1].service_start);
            }
        }
    }

    #[test]
    fn lanes_use_their_own_gates() {
        let cfg = small(8, 0.3, 5000.0);
        let alloc = cfg.allocation().unwrap().unwrap();
        let recs = run_simulation(&cfg, true).unwrap().records.unwrap();
        for r in recs {
            let is_pre_gate = r.queue_index >= alloc.regular;
            assert_eq!(is_pre_gate, r.lane == Lane::Precheck);
        }
    }

    #[test]
    fn undrained_run_reports_residuals() {
        let mut cfg = small(4, 0.81333, 2000.0);
        cfg.drain_after_horizon = false;
        let m = run_simulation(&cfg, false).unwrap().metrics;
        assert!(m.residual_in_system > 100);
        assert_eq!(m.arrived_count, m.served_count + m.residual_in_system);
        let last = m.queue_length_trace.last().unwrap();
        assert!(u64::from(last.total) <= m.residual_in_system);

        cfg.drain_after_horizon = true;
        let drained = run_simulation(&cfg, false).unwrap().metrics;
        assert_eq!(drained.residual_in_system, 0);
        assert_eq!(drained.arrived_count, m.arrived_count);
        assert_eq!(drained.queue_length_trace, m.queue_length_trace);
    }

    #[test]
    fn same_config_same_metrics() {
        let cfg = small(6, 0.2, 5000.0);
        let a = run_simulation(&cfg, false).unwrap().metrics;
        let b = run_simulation(&cfg, false).unwrap().metrics;
        assert_eq!(a, b);
        let c = run_simulation(&cfg.with_replication(1), false).unwrap().metrics;
        assert_ne!(a.mean_wait, c.mean_wait);
    }

    #[test]
    fn pooled_line_never_idles_a_gate_with_someone_waiting() {
        let mut cfg = small(3, 0.06, 20_000.0);
        cfg.split = None;
        cfg.topology = QueueTopology::Pooled;
        let recs = run_simulation(&cfg, true).unwrap().records.unwrap();
        // FIFO across the whole lane
        assert!(recs.windows(2).all(|w| w[0].service_start <= w[1].service_start));
        // anyone who waited started exactly when some gate freed up
        let departures: std::collections::HashSet<u64> = recs.iter().map(|r| r.departure.to_bits()).collect();
        for r in recs.iter().filter(|r| r.wait() > 0.0) {
            assert!(departures.contains(&r.service_start.to_bits()));
        }
    }

    #[test]
    fn behavior_leaves_arrivals_and_services_untouched() {
        let base = small(10, 0.3, 3000.0);
        let mut slow = base.clone();
        slow.behavior = BehaviorProfile::slower();
        let a = run_simulation(&base, true).unwrap().records.unwrap();
        let b = run_simulation(&slow, true).unwrap().records.unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (x.arrival_time, x.lane, x.service_duration),
                (y.arrival_time, y.lane, y.service_duration)
            );
        }
    }
}
