//! The three-gate interference circuit and measurement emulation.
//!
//! A Hadamard on qubit 0, a CNOT from qubit 0 onto qubit 1, and a second Hadamard on
//! qubit 0 turn the prepared superposition into a state whose joint distribution over
//! (qubit 0, index register) encodes every training-test scalar product at once.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encode::CircuitGeometry;
use crate::error::{Error, Result};

/// Real-amplitude statevector. Both encodings produce real amplitudes and the circuit
/// gates preserve that, so no complex storage is needed.
#[derive(Clone, Debug)]
pub struct StateVector {
    amps: Vec<f64>,
    geometry: CircuitGeometry,
}

impl StateVector {
    /// Wraps an amplitude array, checking length and unit norm.
    pub fn new(amps: Vec<f64>, geometry: CircuitGeometry) -> Result<Self> {
        if amps.len() != geometry.state_len() {
            return Err(Error::Internal(format!(
                "statevector length {} does not match geometry ({} expected)",
                amps.len(),
                geometry.state_len()
            )));
        }
        let sq_norm: f64 = amps.iter().map(|a| a * a).sum();
        if (sq_norm - 1.0).abs() > 1e-12 {
            return Err(Error::Internal(format!(
                "statevector squared norm {sq_norm} is not 1"
            )));
        }
        Ok(Self { amps, geometry })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn geometry(&self) -> CircuitGeometry {
        self.geometry
    }
}

fn apply_h(amps: &mut [f64], bit: u32) {
    let mask = 1usize << bit;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for idx in 0..amps.len() {
        if idx & mask == 0 {
            let a = amps[idx];
            let b = amps[idx | mask];
            amps[idx] = (a + b) * inv_sqrt2;
            amps[idx | mask] = (a - b) * inv_sqrt2;
        }
    }
}

fn apply_cnot(amps: &mut [f64], control: u32, target: u32) {
    let c = 1usize << control;
    let t = 1usize << target;
    for idx in 0..amps.len() {
        if idx & c != 0 && idx & t == 0 {
            amps.swap(idx, idx | t);
        }
    }
}

/// Runs H(q0), CNOT(q0 -> q1), H(q0) by explicit strided passes over the amplitudes.
pub fn apply_bell_h(mut state: StateVector) -> StateVector {
    let total = state.geometry.total_qubits();
    let q0 = total - 1; // qubit 0 is the most significant bit of the basis index
    let q1 = total - 2;
    apply_h(&mut state.amps, q0);
    apply_cnot(&mut state.amps, q0, q1);
    apply_h(&mut state.amps, q0);
    state
}

/// How a joint distribution was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbabilityKind {
    Exact,
    Sampled,
}

/// Joint distribution over (qubit 0, index register), including padding slots.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    p: [Vec<f64>; 2],
    kind: ProbabilityKind,
    shots: Option<u64>,
    pseudocounts: Option<u64>,
}

impl JointDistribution {
    /// Wraps explicit probabilities. Rows must have equal nonzero length, entries must
    /// be finite and non-negative, and the total must be 1 within 1e-9.
    pub fn from_probabilities(
        p: [Vec<f64>; 2],
        kind: ProbabilityKind,
        shots: Option<u64>,
        pseudocounts: Option<u64>,
    ) -> Result<Self> {
        if p[0].is_empty() || p[0].len() != p[1].len() {
            return Err(Error::Internal(
                "joint distribution rows must share a nonzero length".into(),
            ));
        }
        let mut total = 0.0;
        for row in &p {
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Internal(format!(
                        "joint distribution entry {v} is not a probability"
                    )));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Internal(format!(
                "joint distribution sums to {total}, not 1"
            )));
        }
        Ok(Self {
            p,
            kind,
            shots,
            pseudocounts,
        })
    }

    /// P(qubit 0 = b, index = j).
    pub fn p(&self, b: usize, j: usize) -> f64 {
        self.p[b][j]
    }

    /// Index-register capacity, padding slots included.
    pub fn index_slots(&self) -> usize {
        self.p[0].len()
    }

    pub fn kind(&self) -> ProbabilityKind {
        self.kind
    }

    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    pub fn pseudocounts(&self) -> Option<u64> {
        self.pseudocounts
    }
}

/// Marginalizes the squared amplitudes of the circuit output onto (qubit 0, index
/// register), tracing out qubit 1 and the feature register.
pub fn exact_joint(state: &StateVector) -> JointDistribution {
    let g = state.geometry();
    let slots = g.index_slots();
    let mut p = [vec![0.0; slots], vec![0.0; slots]];
    let feat_bits = g.n_feature_qubits();
    let q0_shift = g.total_qubits() - 1;
    let j_mask = slots - 1;
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        let b = idx >> q0_shift;
        let j = (idx >> feat_bits) & j_mask;
        p[b][j] += a * a;
    }
    JointDistribution {
        p,
        kind: ProbabilityKind::Exact,
        shots: None,
        pseudocounts: None,
    }
}

/// Draws `shots` measurement outcomes of (qubit 0, index register) from the circuit
/// output, deterministically for a given seed. Returns raw counts per cell.
///
/// Only those two registers are ever read out, so sampling their marginal directly is
/// distribution-identical to measuring all qubits and discarding the rest.
pub fn sample_counts(state: &StateVector, shots: u64, seed: u64) -> [Vec<u64>; 2] {
    let joint = exact_joint(state);
    let slots = joint.index_slots();

    // Inclusive prefix sums over cells in (b, j) row-major order; zero-probability
    // cells produce flat steps and can never be selected by the search below.
    let mut cum = Vec::with_capacity(2 * slots);
    let mut total = 0.0;
    for b in 0..2 {
        for j in 0..slots {
            total += joint.p(b, j);
            cum.push(total);
        }
    }

    let mut counts = [vec![0u64; slots], vec![0u64; slots]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        // Scaling by the accumulated total keeps the draw inside the table even when
        // rounding makes the total differ from 1 in the last few bits.
        let u: f64 = rng.gen::<f64>() * total;
        let cell = cum.partition_point(|&c| c <= u);
        let cell = cell.min(2 * slots - 1);
        counts[cell / slots][cell % slots] += 1;
    }
    counts
}

/// Turns raw counts into additively smoothed probabilities. Pseudocounts are granted
/// only to the 2 * n_significant cells backed by real training instances; padding slots
/// keep their raw (necessarily zero) counts.
pub fn smooth_counts(
    counts: &[Vec<u64>; 2],
    shots: u64,
    pseudocounts: u64,
    n_significant: usize,
) -> Result<JointDistribution> {
    let slots = counts[0].len();
    if slots == 0 || counts[1].len() != slots {
        return Err(Error::Internal("count rows must share a nonzero length".into()));
    }
    if n_significant == 0 || n_significant > slots {
        return Err(Error::Internal(format!(
            "n_significant {n_significant} outside 1..={slots}"
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let observed: u64 = counts.iter().flatten().sum();
    if observed != shots {
        return Err(Error::Internal(format!(
            "counts sum to {observed} but shots is {shots}"
        )));
    }

    let denom = (shots + 2 * n_significant as u64 * pseudocounts) as f64;
    let mut p = [vec![0.0; slots], vec![0.0; slots]];
    for b in 0..2 {
        for j in 0..slots {
            let bonus = if j < n_significant { pseudocounts } else { 0 };
            p[b][j] = (counts[b][j] + bonus) as f64 / denom;
        }
    }
    JointDistribution::from_probabilities(
        p,
        ProbabilityKind::Sampled,
        Some(shots),
        Some(pseudocounts),
    )
}
