//! Streaming first/second moments with numerically stable merge.

use crate::kronlinalg::Mat;

use super::PosteriorError;

/// Single-pass accumulator for the mean and covariance of a stream of
/// vectors. Updates use the symmetrized Pébay recurrence; disjoint
/// accumulators combine exactly with [`StreamingMoments::merge`], so a
/// stream may be split across workers and reduced afterwards.
#[derive(Clone, Debug)]
pub struct StreamingMoments {
    n: u64,
    mean: Vec<f64>,
    /// Centered sum of squares, `sum (x - mean)(x - mean)^T`, row-major.
    m2: Mat,
}

impl StreamingMoments {
    /// Empty accumulator for `dim`-dimensional observations.
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: Mat::zeros(dim, dim),
        }
    }

    /// Dimension of the observations this accumulator expects.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of observations folded in so far.
    pub fn count(&self) -> u64 {
        self.n
    }

    /// Fold one observation into the running moments.
    ///
    /// The second-moment update is symmetrized so `m2` stays exactly
    /// symmetric under floating point.
    pub fn update(&mut self, x: &[f64]) {
        let d = self.dim();
        assert_eq!(x.len(), d, "observation length {} != dim {}", x.len(), d);
        self.n += 1;
        let n = self.n as f64;
        let mut delta = vec![0.0; d];
        let mut delta2 = vec![0.0; d];
        for j in 0..d {
            delta[j] = x[j] - self.mean[j];
            self.mean[j] += delta[j] / n;
            delta2[j] = x[j] - self.mean[j];
        }
        for i in 0..d {
            for j in 0..d {
                let upd = 0.5 * (delta[i] * delta2[j] + delta2[i] * delta[j]);
                self.m2[(i, j)] += upd;
            }
        }
    }

    /// Absorb another accumulator built over a disjoint part of the stream
    /// (Chan et al. pairwise combination).
    pub fn merge(&mut self, other: StreamingMoments) -> Result<(), PosteriorError> {
        if other.dim() != self.dim() {
            return Err(PosteriorError::Shape(format!(
                "cannot merge moments of dim {} into dim {}",
                other.dim(),
                self.dim()
            )));
        }
        if other.n == 0 {
            return Ok(());
        }
        if self.n == 0 {
            *self = other;
            return Ok(());
        }
        let d = self.dim();
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let mut delta = vec![0.0; d];
        for j in 0..d {
            delta[j] = other.mean[j] - self.mean[j];
        }
        let w = na * nb / n;
        for i in 0..d {
            for j in 0..d {
                self.m2[(i, j)] += other.m2[(i, j)] + delta[i] * delta[j] * w;
            }
        }
        for j in 0..d {
            self.mean[j] += delta[j] * nb / n;
        }
        self.n += other.n;
        Ok(())
    }

    /// Running mean (all zeros while the accumulator is empty).
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Sample covariance with the `n - 1` denominator; `None` until at
    /// least two observations have been folded in.
    pub fn covariance(&self) -> Option<Mat> {
        if self.n < 2 {
            return None;
        }
        Some(self.m2.scale(1.0 / (self.n as f64 - 1.0)))
    }
}
