use crate::sampling::RngStream;
use crate::{Error, Result};

/// How arriving passengers pick a line.
///
/// With probability `p_shortest` a passenger aims for the shortest line and,
/// with probability `error_rate`, misjudges and lands in a uniformly chosen
/// other line. Everyone else picks a line uniformly at random.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    pub name: String,
    pub p_shortest: f64,
    pub error_rate: f64,
}

impl BehaviorProfile {
    pub fn new(name: impl Into<String>, p_shortest: f64, error_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_shortest) {
            return Err(Error::invalid(
                "p_shortest",
                format!("must be a probability, got {p_shortest}"),
            ));
        }
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(Error::invalid(
                "error_rate",
                format!("must be a probability, got {error_rate}"),
            ));
        }
        Ok(Self {
            name: name.into(),
            p_shortest,
            error_rate,
        })
    }

    fn preset(name: &str, p_shortest: f64, error_rate: f64) -> Self {
        Self {
            name: name.to_owned(),
            p_shortest,
            error_rate,
        }
    }

    pub fn standard() -> Self {
        Self::preset("standard", 1.0, 0.0)
    }

    pub fn usa() -> Self {
        Self::preset("usa", 0.5, 0.1)
    }

    pub fn china() -> Self {
        Self::preset("china", 0.8, 0.05)
    }

    /// Nobody looks for the shortest line. The error rate never applies.
    pub fn slower() -> Self {
        Self::preset("slower", 0.0, 0.05)
    }

    pub fn presets() -> [Self; 4] {
        [Self::standard(), Self::usa(), Self::china(), Self::slower()]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        Self::presets().into_iter().find(|p| p.name == name)
    }
}

impl Default for BehaviorProfile {
    fn default() -> Self {
        Self::standard()
    }
}

/// Picks a line given the current length of each (waiting plus in service).
///
/// Ties for shortest go to the lowest index. Exactly two uniforms are drawn
/// per call when there is more than one line, so the choice stream stays
/// aligned across profiles.
///
/// Panics if `queue_lengths` is empty.
pub fn choose_queue(queue_lengths: &[usize], behavior: &BehaviorProfile, rng: &mut RngStream) -> usize {
    assert!(!queue_lengths.is_empty(), "choose_queue needs at least one queue");
    let n = queue_lengths.len();
    if n == 1 {
        return 0;
    }
    let intent = rng.uniform();
    let second = rng.uniform();
    if intent < behavior.p_shortest {
        let shortest = shortest_index(queue_lengths);
        if second < behavior.error_rate {
            // uniform over the other n - 1 lines, reusing the tail of `second`
            let pick = ((second / behavior.error_rate) * (n - 1) as f64) as usize;
            let pick = pick.min(n - 2);
            if pick >= shortest {
                pick + 1
            } else {
                pick
            }
        } else {
            shortest
        }
    } else {
        ((second * n as f64) as usize).min(n - 1)
    }
}

fn shortest_index(lengths: &[usize]) -> usize {
    let mut best = 0;
    for (i, &len) in lengths.iter().enumerate().skip(1) {
        if len < lengths[best] {
            best = i;
        }
    }
    best
}
