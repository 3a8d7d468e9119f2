//! Seeded random streams and the stochastic kernels of the checkpoint model.
//!
//! Every stream is a ChaCha8 generator keyed by the scenario seed. The
//! 64-bit ChaCha stream word carries the replication index together with a
//! [`Purpose`] tag, so arrivals, lane draws, service times and queue choices
//! of one replication never share a sequence. Keeping them apart also means
//! two scenarios that differ only in queue-choice behavior see the same
//! passengers with the same service times.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Half-width of the uniform acceptance-rejection envelope, in standard deviations.
const ENVELOPE_HALF_WIDTH: f64 = 6.0;

const PURPOSE_BITS: u32 = 3;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    General = 0,
    Arrivals = 1,
    Lanes = 2,
    Service = 3,
    Choice = 4,
}

/// A reproducible random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::for_purpose(seed, stream_id, Purpose::General)
    }

    /// Stream `stream_id` restricted to one [`Purpose`].
    ///
    /// Panics if `stream_id` does not fit in 61 bits.
    pub fn for_purpose(seed: u64, stream_id: u64, purpose: Purpose) -> Self {
        assert!(
            stream_id < 1 << (64 - PURPOSE_BITS),
            "stream id {stream_id} out of range"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((stream_id << PURPOSE_BITS) | purpose as u64);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    /// Every passenger takes exactly the mean.
    Constant,
    /// Gaussian restricted to positive durations.
    GaussianTruncated,
    Exponential,
}

impl ServiceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ServiceKind::Constant => "constant",
            ServiceKind::GaussianTruncated => "gaussian",
            ServiceKind::Exponential => "exponential",
        }
    }
}

/// Distribution of the total check time at a gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceLaw {
    kind: ServiceKind,
    mean: f64,
    std: f64,
}

impl ServiceLaw {
    pub fn new(kind: ServiceKind, mean: f64, std: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::invalid(
                "mu",
                format!("mean service time must be positive, got {mean}"),
            ));
        }
        if !(std.is_finite() && std >= 0.0) {
            return Err(Error::invalid(
                "sigma2",
                format!("service spread must be non-negative, got {std}"),
            ));
        }
        Ok(Self { kind, mean, std })
    }

    pub fn constant(mean: f64) -> Result<Self> {
        Self::new(ServiceKind::Constant, mean, 0.0)
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        Self::new(ServiceKind::GaussianTruncated, mean, std)
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(ServiceKind::Exponential, mean, mean)
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    /// The location parameter μ. For the truncated Gaussian the realised mean
    /// is slightly larger.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    /// Same family with mean and spread divided by `speedup`; the
    /// coefficient of variation is unchanged.
    pub fn faster_by(&self, speedup: f64) -> Result<Self> {
        if !(speedup.is_finite() && speedup > 0.0) {
            return Err(Error::invalid(
                "service_speed_ratio",
                format!("must be positive, got {speedup}"),
            ));
        }
        Self::new(self.kind, self.mean / speedup, self.std / speedup)
    }
}

/// Homogeneous Poisson arrivals at `rate` per second over `[0, horizon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalLaw {
    rate: f64,
    horizon: f64,
}

impl ArrivalLaw {
    pub fn new(rate: f64, horizon: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("arrival rate must be non-negative, got {rate}"),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(
                "horizon",
                format!("horizon must be positive, got {horizon}"),
            ));
        }
        Ok(Self { rate, horizon })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lane {
    Regular,
    Precheck,
}

impl Lane {
    pub fn as_str(self) -> &'static str {
        match self {
            Lane::Regular => "regular",
            Lane::Precheck => "precheck",
        }
    }
}

/// Strictly increasing arrival timestamps in `[0, horizon)`, built by
/// accumulating exponential gaps.
pub fn poisson_arrival_times(law: &ArrivalLaw, rng: &mut RngStream) -> Vec<f64> {
    if law.rate == 0.0 {
        return Vec::new();
    }
    let mut times = Vec::with_capacity((law.rate * law.horizon * 1.05) as usize + 16);
    let mut clock = 0.0_f64;
    loop {
        let gap: f64 = rng.sample::<f64, _>(Exp1) / law.rate;
        let next = after_last(times.last().copied(), clock + gap);
        if next >= law.horizon {
            break;
        }
        times.push(next);
        clock = next;
    }
    times
}

/// `candidate`, nudged to the next representable float if it does not
/// strictly follow `last`.
fn after_last(last: Option<f64>, candidate: f64) -> f64 {
    match last {
        Some(last) if candidate <= last => last.next_up(),
        _ => candidate,
    }
}

/// One check duration, always strictly positive.
pub fn sample_service_time(law: &ServiceLaw, rng: &mut RngStream) -> f64 {
    match law.kind {
        ServiceKind::Constant => law.mean,
        ServiceKind::Exponential => loop {
            let draw = law.mean * rng.sample::<f64, _>(Exp1);
            if draw > 0.0 {
                return draw;
            }
        },
        ServiceKind::GaussianTruncated => {
            if law.std == 0.0 {
                return law.mean;
            }
            truncated_gaussian(law.mean, law.std, rng)
        }
    }
}

/// Acceptance-rejection against a flat envelope on
/// `[max(0, μ - 6σ), μ + 6σ]`; non-positive proposals are redrawn.
fn truncated_gaussian(mean: f64, std: f64, rng: &mut RngStream) -> f64 {
    let lo = (mean - ENVELOPE_HALF_WIDTH * std).max(0.0);
    let hi = mean + ENVELOPE_HALF_WIDTH * std;
    let two_var = 2.0 * std * std;
    loop {
        let x = lo + (hi - lo) * rng.uniform();
        if x <= 0.0 {
            continue;
        }
        let z = x - mean;
        if rng.uniform() < (-z * z / two_var).exp() {
            return x;
        }
    }
}

/// Pre-check with probability `precheck_fraction`, otherwise regular.
pub fn classify_lane(precheck_fraction: f64, rng: &mut RngStream) -> Lane {
    if rng.uniform() < precheck_fraction {
        Lane::Precheck
    } else {
        Lane::Regular
    }
}
