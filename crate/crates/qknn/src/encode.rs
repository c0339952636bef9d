//! Amplitude encodings and assembly of the initial statevector.
//!
//! Both encodings embed a normalized training vector v_j and test vector v' into a
//! unit-norm amplitude pattern whose inner product is an affine function of the squared
//! Euclidean distance between the two. The extension encoding uses F = 2d + 3 amplitude
//! slots, the translation encoding F = 2d + 4.

use crate::circuit::StateVector;
use crate::error::{Error, Result};

/// Slack accepted on the norm preconditions, absorbing preprocessing round-off.
const NORM_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    Extension,
    Translation,
}

impl EncodingKind {
    /// Encoded feature length F for input dimension d.
    pub fn feature_len(self, d: usize) -> usize {
        match self {
            EncodingKind::Extension => 2 * d + 3,
            EncodingKind::Translation => 2 * d + 4,
        }
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extension" => Ok(EncodingKind::Extension),
            "translation" => Ok(EncodingKind::Translation),
            other => Err(Error::InvalidConfig(format!(
                "unknown encoding {other:?}, expected \"extension\" or \"translation\""
            ))),
        }
    }
}

impl std::fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EncodingKind::Extension => "extension",
            EncodingKind::Translation => "translation",
        })
    }
}

/// The amplitude patterns for one training instance. `x` depends only on the training
/// vector; `x_prime` mixes the test vector with the training vector's norm.
#[derive(Clone, Debug)]
pub struct EncodedPair {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
}

/// Register sizes for a circuit over N training instances with F encoded features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitGeometry {
    n: usize,
    f: usize,
    d: usize,
}

impl CircuitGeometry {
    pub fn new(n: usize, f: usize, d: usize) -> Self {
        Self { n, f, d }
    }

    /// True training-set size N (significant index slots).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Encoded feature count F (occupied feature slots).
    pub fn f(&self) -> usize {
        self.f
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_index_qubits(&self) -> u32 {
        ceil_log2(self.n)
    }

    pub fn n_feature_qubits(&self) -> u32 {
        ceil_log2(self.f)
    }

    /// Two interference qubits plus the index and feature registers.
    pub fn total_qubits(&self) -> u32 {
        2 + self.n_index_qubits() + self.n_feature_qubits()
    }

    pub fn state_len(&self) -> usize {
        1 << self.total_qubits()
    }

    /// Index-register capacity including padding slots.
    pub fn index_slots(&self) -> usize {
        1 << self.n_index_qubits()
    }

    pub fn feature_slots(&self) -> usize {
        1 << self.n_feature_qubits()
    }

    /// Flat basis index. Qubit 0 is the most significant bit, followed by qubit 1,
    /// the index register, and the feature register.
    pub fn basis_index(&self, q0: usize, q1: usize, j: usize, i: usize) -> usize {
        debug_assert!(q0 < 2 && q1 < 2 && j < self.index_slots() && i < self.feature_slots());
        let feat_bits = self.n_feature_qubits();
        let idx_bits = self.n_index_qubits();
        (((q0 << 1 | q1) << idx_bits | j) << feat_bits) | i
    }
}

fn ceil_log2(x: usize) -> u32 {
    x.next_power_of_two().trailing_zeros()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_norm(sq_norm: f64, what: &str) -> Result<()> {
    if sq_norm.sqrt() > 0.5 + NORM_SLACK {
        return Err(Error::Internal(format!(
            "{what} has norm {} but the encodings require at most 1/2; \
             the input was not normalized",
            sq_norm.sqrt()
        )));
    }
    Ok(())
}

/// Builds the two amplitude patterns for training vector `v_j` against test vector
/// `v_prime`. Both inputs must already be normalized to norm at most 1/2.
pub fn encode_pair(kind: EncodingKind, v_j: &[f64], v_prime: &[f64]) -> Result<EncodedPair> {
    if v_j.len() != v_prime.len() {
        return Err(Error::DimensionMismatch {
            expected: v_j.len(),
            got: v_prime.len(),
        });
    }
    let d = v_j.len();
    let nj_sq = dot(v_j, v_j);
    let np_sq = dot(v_prime, v_prime);
    check_norm(nj_sq, "training vector")?;
    check_norm(np_sq, "test vector")?;
    let nj = nj_sq.sqrt();

    let f = kind.feature_len(d);
    let mut x = vec![0.0; f];
    let mut x_prime = vec![0.0; f];

    match kind {
        EncodingKind::Extension => {
            // Two copies of each vector carry the cross terms, a norm slot squares the
            // training side, and one filler amplitude per pattern restores unit norm.
            let c = 2.0 / 3.0_f64.sqrt();
            for i in 0..d {
                x[i] = c * v_j[i];
                x[d + i] = c * v_j[i];
                x_prime[i] = -c * v_prime[i];
                x_prime[d + i] = -c * v_prime[i];
            }
            x[2 * d] = c * nj;
            x_prime[2 * d] = c * nj;
            x[2 * d + 2] = (1.0 - 4.0 * nj_sq).max(0.0).sqrt();
            x_prime[2 * d + 1] = (1.0 - (4.0 / 3.0) * (2.0 * np_sq + nj_sq)).max(0.0).sqrt();
        }
        EncodingKind::Translation => {
            // Same layout without the 2/sqrt(3) stretch; a +-1/2 pair contributes the
            // constant shift that keeps the inner product affine in the distance.
            for i in 0..d {
                x[i] = v_j[i];
                x[d + i] = v_j[i];
                x_prime[i] = -v_prime[i];
                x_prime[d + i] = -v_prime[i];
            }
            x[2 * d] = nj;
            x_prime[2 * d] = nj;
            x[2 * d + 1] = 0.5;
            x_prime[2 * d + 1] = -0.5;
            x[2 * d + 3] = (0.75 - 3.0 * nj_sq).max(0.0).sqrt();
            x_prime[2 * d + 2] = (0.75 - (2.0 * np_sq + nj_sq)).max(0.0).sqrt();
        }
    }

    Ok(EncodedPair { x, x_prime })
}

/// Assembles the initial statevector: qubit 1 superposes the training patterns (branch 0)
/// with the test patterns (branch 1), uniformly over the index register. Every amplitude
/// is x_ji / sqrt(2N) or x'_ji / sqrt(2N); padding slots stay zero.
pub fn build_initial_state(
    kind: EncodingKind,
    training: &[Vec<f64>],
    v_prime: &[f64],
) -> Result<StateVector> {
    if training.is_empty() {
        return Err(Error::InvalidData("cannot encode an empty training set".into()));
    }
    let n = training.len();
    let d = v_prime.len();
    let geometry = CircuitGeometry::new(n, kind.feature_len(d), d);
    let mut amps = vec![0.0; geometry.state_len()];
    let scale = 1.0 / ((2 * n) as f64).sqrt();
    for (j, v_j) in training.iter().enumerate() {
        let pair = encode_pair(kind, v_j, v_prime)?;
        for (i, &a) in pair.x.iter().enumerate() {
            amps[geometry.basis_index(0, 0, j, i)] = a * scale;
        }
        for (i, &a) in pair.x_prime.iter().enumerate() {
            amps[geometry.basis_index(0, 1, j, i)] = a * scale;
        }
    }
    StateVector::new(amps, geometry)
}

/// Inner product the chosen encoding guarantees for a (training, test) pair:
/// an affine image of the squared Euclidean distance. Used as a test oracle and for
/// deriving similarity values without building a circuit.
pub fn encoded_scalar_product(kind: EncodingKind, v_j: &[f64], v_prime: &[f64]) -> f64 {
    let nj_sq = dot(v_j, v_j);
    let cross = dot(v_j, v_prime);
    match kind {
        EncodingKind::Extension => (4.0 / 3.0) * (nj_sq - 2.0 * cross),
        EncodingKind::Translation => nj_sq - 2.0 * cross - 0.25,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[f64]) -> f64 {
        dot(v, v).sqrt()
    }

    fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        // Coordinates within +-1/(2 sqrt(d)) keep the norm at most 1/2.
        let bound = 0.5 / (d as f64).sqrt();
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-bound..=bound)).collect();
        // Occasionally rescale onto a chosen norm to cover the boundary.
        if rng.gen_bool(0.5) {
            let target = rng.gen_range(0.0..=0.5);
            let n = norm(&v);
            if n > 0.0 {
                for x in &mut v {
                    *x *= target / n;
                }
            }
        }
        v
    }

    #[test]
    fn zero_training_vector_concentrates_on_the_filler_slot() {
        let pair = encode_pair(EncodingKind::Extension, &[0.0, 0.0], &[0.3, -0.1]).unwrap();
        assert_eq!(pair.x, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn worked_extension_pair_scalar_product() {
        let pair = encode_pair(EncodingKind::Extension, &[0.1, 0.2], &[0.3, -0.1]).unwrap();
        assert_eq!(pair.x.len(), 7);
        let got = dot(&pair.x, &pair.x_prime);
        // 4/3 (0.05 - 2 * 0.01) = 0.04
        assert!((got - 0.04).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn worked_translation_pair_scalar_product() {
        let pair = encode_pair(EncodingKind::Translation, &[0.1, 0.2], &[0.3, -0.1]).unwrap();
        assert_eq!(pair.x.len(), 8);
        let got = dot(&pair.x, &pair.x_prime);
        // 0.05 - 0.02 - 0.25 = -0.22
        assert!((got + 0.22).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn random_pairs_are_unit_norm_and_match_the_scalar_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..200 {
            let d = trial % 8 + 1;
            let v_j = random_vector(&mut rng, d);
            let v_p = random_vector(&mut rng, d);
            for kind in [EncodingKind::Extension, EncodingKind::Translation] {
                let pair = encode_pair(kind, &v_j, &v_p).unwrap();
                assert!((norm(&pair.x) - 1.0).abs() < 1e-12);
                assert!((norm(&pair.x_prime) - 1.0).abs() < 1e-12);
                let got = dot(&pair.x, &pair.x_prime);
                let want = encoded_scalar_product(kind, &v_j, &v_p);
                assert!((got - want).abs() < 1e-12, "{kind}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn training_pattern_ignores_the_test_vector() {
        let v_j = [0.12, -0.07, 0.2];
        for kind in [EncodingKind::Extension, EncodingKind::Translation] {
            let a = encode_pair(kind, &v_j, &[0.1, 0.1, 0.1]).unwrap();
            let b = encode_pair(kind, &v_j, &[-0.2, 0.0, 0.14]).unwrap();
            assert_eq!(a.x, b.x);
        }
    }

    #[test]
    fn oversized_norms_are_rejected() {
        let err = encode_pair(EncodingKind::Extension, &[0.6, 0.0], &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
        let err = encode_pair(EncodingKind::Translation, &[0.0, 0.0], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn geometry_counts_qubits() {
        // N = 4, d = 2, extension: 2 + 2 + ceil(log2 7) = 7 qubits.
        let g = CircuitGeometry::new(4, 7, 2);
        assert_eq!(g.n_index_qubits(), 2);
        assert_eq!(g.n_feature_qubits(), 3);
        assert_eq!(g.total_qubits(), 7);
        assert_eq!(g.state_len(), 128);
        // A single training instance needs no index qubits at all.
        assert_eq!(CircuitGeometry::new(1, 7, 2).total_qubits(), 5);
    }

    #[test]
    fn basis_index_orders_q0_q1_index_feature() {
        let g = CircuitGeometry::new(4, 7, 2);
        assert_eq!(g.basis_index(0, 0, 0, 0), 0);
        assert_eq!(g.basis_index(0, 0, 0, 6), 6);
        assert_eq!(g.basis_index(0, 0, 3, 0), 3 << 3);
        assert_eq!(g.basis_index(0, 1, 0, 0), 1 << 5);
        assert_eq!(g.basis_index(1, 0, 0, 0), 1 << 6);
    }

    #[test]
    fn initial_state_places_scaled_patterns() {
        let training = vec![vec![0.1, 0.2]];
        let v_prime = [0.3, -0.1];
        let state = build_initial_state(EncodingKind::Extension, &training, &v_prime).unwrap();
        let pair = encode_pair(EncodingKind::Extension, &training[0], &v_prime).unwrap();
        let g = state.geometry();
        let scale = 1.0 / 2.0_f64.sqrt();
        for (i, &a) in pair.x.iter().enumerate() {
            assert!((state.amplitudes()[g.basis_index(0, 0, 0, i)] - a * scale).abs() < 1e-15);
        }
        for (i, &a) in pair.x_prime.iter().enumerate() {
            assert!((state.amplitudes()[g.basis_index(0, 1, 0, i)] - a * scale).abs() < 1e-15);
        }
        // The q0 = 1 half of the state is empty before the circuit runs.
        let half = g.state_len() / 2;
        assert!(state.amplitudes()[half..].iter().all(|&a| a == 0.0));
    }

    #[test]
    fn padding_slots_stay_zero() {
        let training = vec![vec![0.1], vec![-0.2], vec![0.3]];
        let v_prime = [0.05];
        let state = build_initial_state(EncodingKind::Translation, &training, &v_prime).unwrap();
        let g = state.geometry();
        assert_eq!(g.index_slots(), 4);
        for q1 in 0..2 {
            for i in 0..g.feature_slots() {
                assert_eq!(state.amplitudes()[g.basis_index(0, q1, 3, i)], 0.0);
            }
        }
    }

    #[test]
    fn similarity_ranges_match_at_the_extremes() {
        // s = (1 - <x, x'>) / 2 with a zero test vector spans [1/3, 1/2] for the
        // extension encoding and [1/2, 5/8] for the translation encoding.
        let s = |kind, v_j: &[f64], v_p: &[f64]| {
            (1.0 - encoded_scalar_product(kind, v_j, v_p)) / 2.0
        };
        let zero = [0.0, 0.0];
        assert!((s(EncodingKind::Extension, &zero, &zero) - 0.5).abs() < 1e-12);
        assert!((s(EncodingKind::Extension, &[0.5, 0.0], &zero) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s(EncodingKind::Translation, &zero, &zero) - 0.625).abs() < 1e-12);
        assert!((s(EncodingKind::Translation, &[0.5, 0.0], &zero) - 0.5).abs() < 1e-12);
    }
}
