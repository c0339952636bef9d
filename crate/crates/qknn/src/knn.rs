//! Neighbor ranking, majority voting, and the fully classical reference pipeline.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::estimate::DistanceTable;

/// Training indices sorted by (distance, index). The full permutation is kept so that
/// ranking prefixes of any length up to k are available to the metrics.
#[derive(Clone, Debug)]
pub struct Ranking {
    pub ranked: Vec<usize>,
    pub k: usize,
}

impl Ranking {
    /// The k nearest training indices in rank order.
    pub fn k_set(&self) -> &[usize] {
        &self.ranked[..self.k]
    }
}

/// A ranking plus the label chosen by majority vote.
#[derive(Clone, Debug)]
pub struct NeighborResult {
    pub ranking: Ranking,
    pub predicted: String,
}

/// Exact Euclidean distances from every training vector to the test vector.
pub fn classical_distances(training: &[Vec<f64>], v_prime: &[f64]) -> Result<DistanceTable> {
    let mut distances = Vec::with_capacity(training.len());
    for v_j in training {
        if v_j.len() != v_prime.len() {
            return Err(Error::DimensionMismatch {
                expected: v_prime.len(),
                got: v_j.len(),
            });
        }
        let sq: f64 = v_j
            .iter()
            .zip(v_prime)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        distances.push(sq.sqrt());
    }
    Ok(DistanceTable {
        distances,
        kind: None,
        encoding: None,
        clamp_events: 0,
    })
}

/// Sorts all training indices by distance, breaking ties by increasing index, and marks
/// the first k as the neighbor set.
pub fn select_neighbors(distances: &DistanceTable, k: usize) -> Result<Ranking> {
    let n = distances.distances.len();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        distances.distances[a]
            .partial_cmp(&distances.distances[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.cmp(&b))
    });
    Ok(Ranking { ranked, k })
}

/// Picks the most frequent label among the neighbors. On a tie, the winning label is
/// the one whose nearest representative has the smallest rank, so the vote degrades to
/// nearest-neighbor behavior instead of depending on label ordering.
pub fn majority_vote(neighbors_by_rank: &[usize], labels: &[String]) -> Result<String> {
    if neighbors_by_rank.is_empty() {
        return Err(Error::InvalidConfig("cannot vote on an empty neighbor set".into()));
    }
    let mut tallies: Vec<(&str, usize)> = Vec::new();
    for &idx in neighbors_by_rank {
        let label = labels[idx].as_str();
        match tallies.iter_mut().find(|(l, _)| *l == label) {
            Some((_, count)) => *count += 1,
            None => tallies.push((label, 1)),
        }
    }
    let best = tallies.iter().map(|&(_, c)| c).max().expect("nonempty tallies");
    let winner = neighbors_by_rank
        .iter()
        .map(|&idx| labels[idx].as_str())
        .find(|label| tallies.iter().any(|&(l, c)| l == *label && c == best))
        .expect("some label attains the best tally");
    Ok(winner.to_string())
}

/// Ranks, selects k neighbors, and votes in one step.
pub fn classify(distances: &DistanceTable, k: usize, labels: &[String]) -> Result<NeighborResult> {
    if labels.len() != distances.distances.len() {
        return Err(Error::Internal(format!(
            "{} labels for {} distances",
            labels.len(),
            distances.distances.len()
        )));
    }
    let ranking = select_neighbors(distances, k)?;
    let predicted = majority_vote(ranking.k_set(), labels)?;
    Ok(NeighborResult { ranking, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(distances: Vec<f64>) -> DistanceTable {
        DistanceTable {
            distances,
            kind: None,
            encoding: None,
            clamp_events: 0,
        }
    }

    fn labels(tokens: &[&str]) -> Vec<String> {
        tokens.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn classical_distances_match_hand_computation() {
        let training = vec![vec![0.1, 0.2], vec![0.3, -0.1]];
        let t = classical_distances(&training, &[0.3, -0.1]).unwrap();
        assert!((t.distances[0] - 0.13_f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.distances[1], 0.0);
    }

    #[test]
    fn antipodal_corner_vectors_reach_distance_one() {
        // Opposite vectors of norm 1/2 attain the maximum possible distance.
        let training = vec![vec![0.25, 0.25, 0.25, 0.25]];
        let t = classical_distances(&training, &[-0.25, -0.25, -0.25, -0.25]).unwrap();
        assert!((t.distances[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ties_are_broken_by_training_index() {
        let r = select_neighbors(&table(vec![0.3, 0.1, 0.3]), 2).unwrap();
        assert_eq!(r.ranked, vec![1, 0, 2]);
        assert_eq!(r.k_set(), &[1, 0]);

        let r = select_neighbors(&table(vec![0.5; 5]), 3).unwrap();
        assert_eq!(r.k_set(), &[0, 1, 2]);
    }

    #[test]
    fn k_equal_to_n_selects_everything() {
        let r = select_neighbors(&table(vec![0.2, 0.1, 0.3]), 3).unwrap();
        assert_eq!(r.k_set(), &[1, 0, 2]);
    }

    #[test]
    fn out_of_range_k_is_rejected() {
        assert!(select_neighbors(&table(vec![0.2, 0.1]), 0).is_err());
        assert!(select_neighbors(&table(vec![0.2, 0.1]), 3).is_err());
    }

    #[test]
    fn strict_majorities_win() {
        let l = labels(&["a", "a", "b"]);
        assert_eq!(majority_vote(&[0, 1, 2], &l).unwrap(), "a");
        assert_eq!(majority_vote(&[2, 1, 0], &l).unwrap(), "a");
    }

    #[test]
    fn vote_ties_go_to_the_nearest_representative() {
        let l = labels(&["a", "b"]);
        assert_eq!(majority_vote(&[0, 1], &l).unwrap(), "a");
        assert_eq!(majority_vote(&[1, 0], &l).unwrap(), "b");
        // Two-vs-two with the nearer label's first representative at rank 0.
        let l = labels(&["b", "a", "a", "b"]);
        assert_eq!(majority_vote(&[0, 1, 2, 3], &l).unwrap(), "b");
    }

    #[test]
    fn single_neighbor_vote_is_its_label() {
        let l = labels(&["a", "b", "c"]);
        assert_eq!(majority_vote(&[2], &l).unwrap(), "c");
    }

    #[test]
    fn classify_combines_ranking_and_vote() {
        let l = labels(&["a", "b", "b"]);
        let res = classify(&table(vec![0.1, 0.2, 0.3]), 3, &l).unwrap();
        assert_eq!(res.predicted, "b");
        assert_eq!(res.ranking.k_set(), &[0, 1, 2]);
    }
}
