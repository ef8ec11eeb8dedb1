//! One-pass accumulation of sample moments.

/// Running mean and central moments up to order four, updated one value at
/// a time so large simulations never buffer their samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        let n0 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = value - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term = delta * delta_n * n0;
        self.mean += delta_n;
        self.m4 += term * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term;
    }

    #[must_use]
    pub fn count(&self) -> u64 {
        self.count
    }

    #[must_use]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero until two values arrive.
    #[must_use]
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count as f64 - 1.0)
        }
    }

    #[must_use]
    pub fn std_dev(&self) -> f64 {
        num_traits::Float::sqrt(self.variance())
    }

    /// Sample skewness (population normalization).
    #[must_use]
    pub fn skewness(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            return 0.0;
        }
        let n = self.count as f64;
        num_traits::Float::sqrt(n) * self.m3 / num_traits::Float::powf(self.m2, 1.5)
    }

    /// Excess kurtosis (population normalization); zero for a Gaussian.
    #[must_use]
    pub fn excess_kurtosis(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            return 0.0;
        }
        let n = self.count as f64;
        n * self.m4 / (self.m2 * self.m2) - 3.0
    }
}

/// Mean of a slice; zero when empty.
#[must_use]
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance of a slice; zero below two values.
#[must_use]
pub fn variance(values: &[f64]) -> f64 {
    let mut acc = Moments::new();
    for &v in values {
        acc.push(v);
    }
    acc.variance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moments_match_direct_formulas() {
        let values = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let mut acc = Moments::new();
        for v in values {
            acc.push(v);
        }
        let m = values.iter().sum::<f64>() / 6.0;
        let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 5.0;
        assert_relative_eq!(acc.mean(), m, max_relative = 1e-12);
        assert_relative_eq!(acc.variance(), var, max_relative = 1e-12);
        assert_relative_eq!(mean(&values), m, max_relative = 1e-12);
        assert_relative_eq!(variance(&values), var, max_relative = 1e-12);
    }

    #[test]
    fn skewness_and_kurtosis_vanish_for_symmetric_two_point_mass() {
        let mut acc = Moments::new();
        for v in [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0] {
            acc.push(v);
        }
        assert_relative_eq!(acc.skewness(), 0.0, epsilon = 1e-12);
        // A two-point mass at +/-1 has kurtosis 1, so excess is -2.
        assert_relative_eq!(acc.excess_kurtosis(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn skewness_sign_follows_the_long_tail() {
        let mut acc = Moments::new();
        for v in [0.0, 0.0, 0.0, 0.0, 10.0] {
            acc.push(v);
        }
        assert!(acc.skewness() > 0.0);
    }

    #[test]
    fn degenerate_inputs_stay_finite() {
        let mut acc = Moments::new();
        acc.push(3.0);
        assert_eq!(acc.variance(), 0.0);
        assert_eq!(acc.skewness(), 0.0);
        acc.push(3.0);
        assert_eq!(acc.std_dev(), 0.0);
        assert_eq!(acc.excess_kurtosis(), 0.0);
    }
}
