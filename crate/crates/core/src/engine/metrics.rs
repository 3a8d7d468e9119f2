use crate::sampling::Lane;
use crate::TWO_HOURS;

/// One passenger's path through the checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PassengerRecord {
    pub id: u64,
    pub arrival_time: f64,
    pub lane: Lane,
    /// Global gate index, regular gates first.
    pub queue_index: u32,
    pub service_start: f64,
    pub service_duration: f64,
    pub departure: f64,
}

impl PassengerRecord {
    /// Time in line before reaching a gate.
    pub fn wait(&self) -> f64 {
        self.service_start - self.arrival_time
    }

    pub fn sojourn(&self) -> f64 {
        self.departure - self.arrival_time
    }
}

/// Streaming count, mean and squared-deviation sum (Welford), mergeable in
/// a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WaitMoments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub over_two_hours: u64,
}

impl WaitMoments {
    pub fn push(&mut self, wait: f64) {
        self.count += 1;
        let delta = wait - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (wait - self.mean);
        if wait > TWO_HOURS {
            self.over_two_hours += 1;
        }
    }

    /// Chan's pairwise combination.
    pub fn merge(&mut self, other: &WaitMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n_a = self.count as f64;
        let n_b = other.count as f64;
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        self.mean += delta * n_b / n;
        self.m2 += other.m2 + delta * delta * n_a * n_b / n;
        self.count += other.count;
        self.over_two_hours += other.over_two_hours;
    }

    /// Population variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }

    pub fn tail_fraction(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.over_two_hours as f64 / self.count as f64
        }
    }
}

/// Passengers standing in line (not yet at a gate) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub total: u32,
    pub regular: u32,
    pub precheck: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneMetrics {
    pub served: u64,
    pub mean_wait: f64,
    pub wait_variance: f64,
    pub tail_fraction_2h: f64,
}

impl From<&WaitMoments> for LaneMetrics {
    fn from(m: &WaitMoments) -> Self {
        Self {
            served: m.count,
            mean_wait: m.mean,
            wait_variance: m.variance(),
            tail_fraction_2h: m.tail_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    /// W_s over served passengers.
    pub mean_wait: f64,
    /// V_s, population variance of the waits.
    pub wait_variance: f64,
    pub tail_fraction_2h: f64,
    pub mean_sojourn: f64,
    pub sojourn_variance: f64,
    pub served_count: u64,
    pub arrived_count: u64,
    pub residual_in_system: u64,
    pub queue_length_trace: Vec<TracePoint>,
    pub regular: LaneMetrics,
    pub precheck: LaneMetrics,
    /// Raw wait moments, kept for pooling across replications.
    pub waits: WaitMoments,
}

/// A passenger counted in the queue-length trace: waiting from `arrival`
/// until `service_start` (infinite if never served).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Occupancy {
    pub arrival: f64,
    pub service_start: f64,
    pub lane: Lane,
}

/// Aggregates served-passenger records. All passengers are taken as served,
/// so `arrived_count == served_count` and nothing is residual.
///
/// The trace samples the number waiting every `trace_interval` seconds on
/// `[0, horizon]`.
pub fn compute_metrics(records: &[PassengerRecord], horizon: f64, trace_interval: f64) -> SimMetrics {
    build_metrics(records, &[], horizon, trace_interval)
}

pub(crate) fn build_metrics(
    served: &[PassengerRecord],
    residual: &[Occupancy],
    horizon: f64,
    trace_interval: f64,
) -> SimMetrics {
    let mut all = WaitMoments::default();
    let mut regular = WaitMoments::default();
    let mut precheck = WaitMoments::default();
    let mut sojourn = WaitMoments::default();
    for rec in served {
        let wait = rec.wait();
        all.push(wait);
        match rec.lane {
            Lane::Regular => regular.push(wait),
            Lane::Precheck => precheck.push(wait),
        }
        sojourn.push(rec.sojourn());
    }

    let occupancy = served
        .iter()
        .map(|r| Occupancy {
            arrival: r.arrival_time,
            service_start: r.service_start,
            lane: r.lane,
        })
        .chain(residual.iter().copied());
    let queue_length_trace = waiting_trace(occupancy, horizon, trace_interval);

    SimMetrics {
        mean_wait: all.mean,
        wait_variance: all.variance(),
        tail_fraction_2h: all.tail_fraction(),
        mean_sojourn: sojourn.mean,
        sojourn_variance: sojourn.variance(),
        served_count: all.count,
        arrived_count: all.count + residual.len() as u64,
        residual_in_system: residual.len() as u64,
        queue_length_trace,
        regular: LaneMetrics::from(&regular),
        precheck: LaneMetrics::from(&precheck),
        waits: all,
    }
}

/// Grid points `k · interval` for `k = 0..=floor(horizon / interval)`.
pub fn trace_grid(horizon: f64, interval: f64) -> impl Iterator<Item = f64> {
    let points = (horizon / interval).floor() as usize + 1;
    (0..points).map(move |k| k as f64 * interval)
}

/// Number waiting at grid time `g`: arrivals at or before `g` minus service
/// starts at or before `g`.
fn waiting_trace(passengers: impl Iterator<Item = Occupancy>, horizon: f64, interval: f64) -> Vec<TracePoint> {
    let mut arrivals: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut starts: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for p in passengers {
        let lane = p.lane as usize;
        arrivals[lane].push(p.arrival);
        starts[lane].push(p.service_start);
    }
    for v in arrivals.iter_mut().chain(starts.iter_mut()) {
        v.sort_by(f64::total_cmp);
    }

    let mut cursors = [[0usize; 2]; 2];
    trace_grid(horizon, interval)
        .map(|time| {
            let mut waiting = [0u32; 2];
            for lane in 0..2 {
                let [arr_cur, start_cur] = &mut cursors[lane];
                while *arr_cur < arrivals[lane].len() && arrivals[lane][*arr_cur] <= time {
                    *arr_cur += 1;
                }
                while *start_cur < starts[lane].len() && starts[lane][*start_cur] <= time {
                    *start_cur += 1;
                }
                waiting[lane] = (*arr_cur - *start_cur) as u32;
            }
            TracePoint {
                time,
                total: waiting[0] + waiting[1],
                regular: waiting[0],
                precheck: waiting[1],
            }
        })
        .collect()
}
