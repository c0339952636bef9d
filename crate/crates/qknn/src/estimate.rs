//! Recovery of Euclidean distances from joint probabilities.
//!
//! Each significant index j admits two independent readings of the encoded scalar
//! product, one from P(0, j) and one from P(1, j). The avg rule converts both into
//! distances and averages them; the diff rule converts their difference once.

use crate::circuit::JointDistribution;
use crate::encode::EncodingKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistanceEstimateKind {
    Avg,
    Diff,
}

impl std::str::FromStr for DistanceEstimateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" => Ok(DistanceEstimateKind::Avg),
            "diff" => Ok(DistanceEstimateKind::Diff),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimate {other:?}, expected \"avg\" or \"diff\""
            ))),
        }
    }
}

impl std::fmt::Display for DistanceEstimateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceEstimateKind::Avg => "avg",
            DistanceEstimateKind::Diff => "diff",
        })
    }
}

/// Distances from one test instance to every significant training instance,
/// all within [0, 1]. Padding indices are excluded.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    pub distances: Vec<f64>,
    /// None for classically computed tables.
    pub kind: Option<DistanceEstimateKind>,
    pub encoding: Option<EncodingKind>,
    /// How many square-root arguments fell outside [0, 1] and were clamped.
    pub clamp_events: u32,
}

/// Scalar product read from P(0, j): 2N * p - 1. Unclamped, so sampling noise may
/// push it outside [-1, 1].
pub fn scalar_from_p0(p0j: f64, n: usize) -> f64 {
    2.0 * n as f64 * p0j - 1.0
}

/// Scalar product read from P(1, j): 1 - 2N * p.
pub fn scalar_from_p1(p1j: f64, n: usize) -> f64 {
    1.0 - 2.0 * n as f64 * p1j
}

/// Scalar product read from both probabilities at once: N * (P(0, j) - P(1, j)),
/// which is the mean of the two single-probability readings.
pub fn scalar_diff(p0j: f64, p1j: f64, n: usize) -> f64 {
    n as f64 * (p0j - p1j)
}

/// Inverts an encoded scalar product into a Euclidean distance. A square-root argument
/// below 0 yields distance 0, above 1 yields distance 1; the flag reports the clamp.
pub fn distance_from_scalar(
    scalar: f64,
    encoding: EncodingKind,
    v_prime_sq_norm: f64,
) -> (f64, bool) {
    let radicand = match encoding {
        EncodingKind::Extension => 0.75 * scalar + v_prime_sq_norm,
        EncodingKind::Translation => scalar + 0.25 + v_prime_sq_norm,
    };
    if radicand < 0.0 {
        (0.0, true)
    } else if radicand > 1.0 {
        (1.0, true)
    } else {
        (radicand.sqrt(), false)
    }
}

/// Builds the distance table for the first `n` (significant) indices of a joint
/// distribution. For avg, the two distances are clamped independently before averaging.
pub fn estimate_distances(
    jd: &JointDistribution,
    kind: DistanceEstimateKind,
    encoding: EncodingKind,
    n: usize,
    v_prime_sq_norm: f64,
) -> Result<DistanceTable> {
    if n == 0 || n > jd.index_slots() {
        return Err(Error::Internal(format!(
            "significant index count {n} outside 1..={}",
            jd.index_slots()
        )));
    }
    if !(0.0..=0.25 + 1e-9).contains(&v_prime_sq_norm) {
        return Err(Error::Internal(format!(
            "squared test norm {v_prime_sq_norm} outside [0, 1/4]"
        )));
    }

    let mut distances = Vec::with_capacity(n);
    let mut clamp_events = 0u32;
    for j in 0..n {
        let d = match kind {
            DistanceEstimateKind::Avg => {
                let (d0, c0) =
                    distance_from_scalar(scalar_from_p0(jd.p(0, j), n), encoding, v_prime_sq_norm);
                let (d1, c1) =
                    distance_from_scalar(scalar_from_p1(jd.p(1, j), n), encoding, v_prime_sq_norm);
                clamp_events += u32::from(c0) + u32::from(c1);
                (d0 + d1) / 2.0
            }
            DistanceEstimateKind::Diff => {
                let (d, c) = distance_from_scalar(
                    scalar_diff(jd.p(0, j), jd.p(1, j), n),
                    encoding,
                    v_prime_sq_norm,
                );
                clamp_events += u32::from(c);
                d
            }
        };
        distances.push(d);
    }

    Ok(DistanceTable {
        distances,
        kind: Some(kind),
        encoding: Some(encoding),
        clamp_events,
    })
}
