//! Feature normalization into the range the amplitude encodings require.
//!
//! Every feature is mapped into [-1/(2 sqrt(d)), +1/(2 sqrt(d))] using training-set
//! statistics, so normalized training vectors have norm at most 1/2 and any two of them
//! are at squared Euclidean distance at most 1.

use crate::error::{Error, Result};

/// Per-feature affine map fitted on a training set.
#[derive(Clone, Debug)]
pub struct Normalizer {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Normalizer {
    /// Fits the map on training rows: center is the midpoint of the observed feature
    /// range, the divisor is the range times sqrt(d). A constant feature gets range 1.
    pub fn fit(training: &[&[f64]]) -> Result<Self> {
        let first = training
            .first()
            .ok_or_else(|| Error::InvalidData("cannot fit a normalizer on no rows".into()))?;
        let d = first.len();
        if d == 0 {
            return Err(Error::InvalidData("cannot fit a normalizer on zero features".into()));
        }
        for row in training {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }

        let sqrt_d = (d as f64).sqrt();
        let mut center = Vec::with_capacity(d);
        let mut scale = Vec::with_capacity(d);
        for i in 0..d {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for row in training {
                min = min.min(row[i]);
                max = max.max(row[i]);
            }
            let range = if max > min { max - min } else { 1.0 };
            center.push((max + min) / 2.0);
            scale.push(range * sqrt_d);
        }
        Ok(Self { center, scale })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Applies the affine map. Training rows land inside the target range by construction.
    pub fn transform_train(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok(v.iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(x, (c, s))| (x - c) / s)
            .collect())
    }

    /// Applies the affine map, then clips each feature to the training range edges.
    /// Only test instances are clipped; training instances never need it.
    pub fn transform_test(&self, v: &[f64]) -> Result<Vec<f64>> {
        let bound = 0.5 / (self.dim() as f64).sqrt();
        let mut out = self.transform_train(v)?;
        for x in &mut out {
            *x = x.clamp(-bound, bound);
        }
        Ok(out)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit_rows(rows: &[Vec<f64>]) -> Normalizer {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        Normalizer::fit(&refs).expect("fit")
    }

    #[test]
    fn fit_uses_midpoint_and_range_times_sqrt_d() {
        // Feature columns all spanning {0, 1} with d = 4: divisor 1 * sqrt(4) = 2.
        let rows = vec![vec![0.0; 4], vec![1.0; 4]];
        let nrm = fit_rows(&rows);
        let t = nrm.transform_train(&[0.75, 0.75, 0.75, 0.75]).expect("transform");
        for x in t {
            assert!((x - 0.125).abs() < 1e-15, "(0.75 - 0.5) / 2 = 0.125, got {x}");
        }
    }

    #[test]
    fn constant_features_get_unit_range() {
        let rows = vec![vec![3.0], vec![3.0], vec![3.0]];
        let nrm = fit_rows(&rows);
        // center 3, divisor 1 * sqrt(1): the instance itself maps to 0.
        let t = nrm.transform_train(&[3.0]).expect("transform");
        assert_eq!(t, vec![0.0]);
        let t = nrm.transform_train(&[3.5]).expect("transform");
        assert!((t[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn training_extremes_map_to_range_endpoints() {
        let rows = vec![vec![-1.0], vec![1.0]];
        let nrm = fit_rows(&rows);
        assert_eq!(nrm.transform_train(&[-1.0]).unwrap(), vec![-0.5]);
        assert_eq!(nrm.transform_train(&[1.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn test_instances_are_clipped_to_the_edges() {
        let rows = vec![vec![0.0], vec![1.0]];
        let nrm = fit_rows(&rows);
        // (2 - 0.5) / 1 = 1.5 before clipping.
        assert_eq!(nrm.transform_test(&[2.0]).unwrap(), vec![0.5]);
        assert_eq!(nrm.transform_test(&[-9.0]).unwrap(), vec![-0.5]);
        // In-range values match the unclipped transform.
        assert_eq!(
            nrm.transform_test(&[0.75]).unwrap(),
            nrm.transform_train(&[0.75]).unwrap()
        );
    }

    #[test]
    fn normalized_training_norms_stay_below_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = rng.gen_range(1..=8);
            let n = rng.gen_range(2..=20);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-100.0..100.0)).collect())
                .collect();
            let nrm = fit_rows(&rows);
            let mut transformed = Vec::new();
            for row in &rows {
                let t = nrm.transform_train(row).expect("transform");
                let sq: f64 = t.iter().map(|x| x * x).sum();
                assert!(sq <= 0.25 + 1e-12, "norm^2 {sq} exceeds 1/4");
                transformed.push(t);
            }
            // Maximum squared distance between any two normalized rows is 1.
            for a in &transformed {
                for b in &transformed {
                    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    assert!(sq <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let nrm = fit_rows(&rows);
        assert!(matches!(
            nrm.transform_train(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            Normalizer::fit(&[&[1.0, 2.0][..], &[1.0][..]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fitting_nothing_fails() {
        assert!(matches!(Normalizer::fit(&[]), Err(Error::InvalidData(_))));
    }
}
