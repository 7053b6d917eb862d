//! Small numerical helpers shared across the crate.

/// Pairwise (tree) summation over a slice.
///
/// The reduction tree is determined solely by the slice indices, so the
/// result is identical no matter how the work producing `values` was
/// scheduled. Used wherever a long fold must be reproducible.
#[must_use]
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Ordinary least-squares line `y ≈ slope·x + intercept` through `points`.
///
/// Returns `None` when fewer than two distinct x values are present.
#[must_use]
pub fn least_squares_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    Some((slope, mean_y - slope * mean_x))
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Clone, Default)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    #[must_use]
    pub fn count(&self) -> u64 {
        self.count
    }

    #[must_use]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n − 1 denominator); zero for fewer than two samples.
    #[must_use]
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    #[must_use]
    pub fn standard_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_sequential_on_small_inputs() {
        let values = [1.0, 2.0, 3.0, 4.5];
        assert_eq!(pairwise_sum(&values), 10.5);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[7.25]), 7.25);
    }

    #[test]
    fn pairwise_sum_is_split_invariant() {
        // Combining the two canonical halves reproduces the full reduction.
        let values: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let mid = values.len() / 2;
        let combined = pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..]);
        assert_eq!(pairwise_sum(&values), combined);
    }

    #[test]
    fn least_squares_exact_line() {
        let points = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        let (slope, intercept) = least_squares_line(&points).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_rejects_degenerate_input() {
        assert!(least_squares_line(&[(1.0, 2.0)]).is_none());
        assert!(least_squares_line(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }

    #[test]
    fn running_moments_basic() {
        let mut m = RunningMoments::new();
        for v in [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0] {
            m.push(v);
        }
        assert!((m.mean() - 5.0).abs() < 1e-12);
        // Sample variance of the classic example is 32/7.
        assert!((m.variance() - 32.0 / 7.0).abs() < 1e-12);
        assert!(m.standard_error() > 0.0);
    }
}
