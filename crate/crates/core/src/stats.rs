/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub const fn exact(value: f64) -> Self {
        Estimate { mean: value, se: 0.0 }
    }

    /// Sample mean and `sd / sqrt(n)`; summation in slice order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, se: 0.0 };
        }
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / (n - 1) as f64;
        Estimate { mean, se: (var / n as f64).sqrt() }
    }

    pub fn from_iter<I: IntoIterator<Item = f64>>(xs: I) -> Self {
        let v: Vec<f64> = xs.into_iter().collect();
        Self::from_samples(&v)
    }
}

/// `sqrt(a^2 + b^2 + ...)`.
pub fn combined_se(ses: &[f64]) -> f64 {
    ses.iter().map(|s| s * s).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_se() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn se_of_two_points() {
        let e = Estimate::from_samples(&[0.0, 2.0]);
        assert_eq!(e.mean, 1.0);
        // sd = sqrt(2), se = 1
        assert!((e.se - 1.0).abs() < 1e-15);
    }
}
