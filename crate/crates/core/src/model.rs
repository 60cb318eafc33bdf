//! Sparse linear regression model `y = sum_{j<=s} beta_j x_j + eps` with
//! i.i.d. Bernoulli(1/2) or Uniform(0,1) features.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    BinaryBernoulliHalf,
    UniformUnit,
}

impl FeatureKind {
    pub fn short_name(self) -> &'static str {
        match self {
            FeatureKind::BinaryBernoulliHalf => "binary",
            FeatureKind::UniformUnit => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
}

/// Model parameters. The first `s = beta.len()` coordinates are informative;
/// coordinates `s..d` carry a zero coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    d: usize,
    beta: Vec<f64>,
    sigma0_sq: f64,
    feature_kind: FeatureKind,
}

impl ModelSpec {
    pub fn new(d: usize, beta: Vec<f64>, sigma0_sq: f64, feature_kind: FeatureKind) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension d must be positive"));
        }
        if beta.len() > d {
            return Err(invalid(format!("sparsity s = {} exceeds d = {d}", beta.len())));
        }
        if let Some(j) = beta.iter().position(|b| *b == 0.0 || !b.is_finite()) {
            return Err(invalid(format!("coefficient beta_{} must be finite and nonzero", j + 1)));
        }
        if !(sigma0_sq >= 0.0) || !sigma0_sq.is_finite() {
            return Err(invalid("noise variance must be finite and nonnegative"));
        }
        Ok(ModelSpec { d, beta, sigma0_sq, feature_kind })
    }

    /// Equal configuration: d=100, beta = 0.5 x 5, sigma0^2 = 1.69.
    pub fn config_i(kind: FeatureKind) -> Self {
        ModelSpec::new(100, vec![0.5; 5], 1.69, kind).expect("valid preset")
    }

    /// Unequal configuration: d=100, beta = (2, 1.8, 1.6, 1.4, 1.2), sigma0^2 = 1.69.
    pub fn config_ii(kind: FeatureKind) -> Self {
        ModelSpec::new(100, vec![2.0, 1.8, 1.6, 1.4, 1.2], 1.69, kind).expect("valid preset")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature_kind
    }

    pub fn with_feature_kind(&self, kind: FeatureKind) -> Self {
        ModelSpec { feature_kind: kind, ..self.clone() }
    }

    pub fn with_sigma0_sq(&self, sigma0_sq: f64) -> Result<Self> {
        ModelSpec::new(self.d, self.beta.clone(), sigma0_sq, self.feature_kind)
    }

    /// `beta_j^2` for every coordinate, zero past `s`.
    pub fn beta_sq_padded(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        for (dst, b) in v.iter_mut().zip(&self.beta) {
            *dst = b * b;
        }
        v
    }

    pub fn sum_beta_sq(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum()
    }

    pub fn max_beta_sq(&self) -> f64 {
        self.beta.iter().map(|b| b * b).fold(0.0, f64::max)
    }

    pub(crate) fn require_kind(&self, kind: FeatureKind) -> Result<()> {
        if self.feature_kind == kind {
            Ok(())
        } else {
            Err(Error::WrongFeatureKind(kind.short_name()))
        }
    }
}

/// Row-major `n x d` design matrix with responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
    pub d: usize,
}

impl Dataset {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }
}

/// `mu(x) = sum_{j<=s} beta_j x_j`.
pub fn regression_mean(spec: &ModelSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: x.len() });
    }
    Ok(mean_unchecked(spec, x))
}

#[inline]
pub(crate) fn mean_unchecked(spec: &ModelSpec, x: &[f64]) -> f64 {
    spec.beta.iter().zip(x).map(|(b, v)| b * v).sum()
}

/// Draw one feature vector into `out`.
pub fn sample_features<R: Rng + ?Sized>(kind: FeatureKind, out: &mut [f64], rng: &mut R) {
    match kind {
        FeatureKind::BinaryBernoulliHalf => {
            for v in out.iter_mut() {
                *v = if rng.random::<bool>() { 1.0 } else { 0.0 };
            }
        }
        FeatureKind::UniformUnit => {
            for v in out.iter_mut() {
                *v = open_unit(rng);
            }
        }
    }
}

/// Uniform draw from the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn generate_dataset<R: Rng + ?Sized>(
    spec: &ModelSpec,
    n: usize,
    noise_kind: NoiseKind,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("sample size n must be at least 1"));
    }
    let d = spec.d;
    let mut x = vec![0.0; n * d];
    let mut y = Vec::with_capacity(n);
    let sd = spec.sigma0_sq.sqrt();
    let noise = match noise_kind {
        NoiseKind::Gaussian => Normal::new(0.0, 1.0).expect("standard normal"),
    };
    for row in x.chunks_exact_mut(d) {
        sample_features(spec.feature_kind, row, rng);
        let eps = if sd > 0.0 { sd * noise.sample(rng) } else { 0.0 };
        y.push(mean_unchecked(spec, row) + eps);
    }
    Ok(Dataset { x, y, n, d })
}
