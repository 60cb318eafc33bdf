use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::scalar::Scalar;
use crate::error::{invalid, Error, Result};
use crate::model::ModelSpec;

/// Largest number of atoms a space may have.
pub const MAX_ATOMS: usize = 1 << 22;

/// Finite product space `X_1 x ... x X_d` with the product measure, plus the
/// regression function and the noise variance tabulated on every atom.
///
/// Atoms are numbered in mixed radix with coordinate 0 varying fastest.
#[derive(Debug, Clone)]
pub struct DiscreteSpace<T: Scalar = f64> {
    supports: Vec<Vec<f64>>,
    coord_probs: Vec<Vec<T>>,
    strides: Vec<usize>,
    atom_prob: Vec<T>,
    mu: Vec<T>,
    sigma_sq: Vec<T>,
}

impl<T: Scalar> DiscreteSpace<T> {
    /// Build a space from per-coordinate supports and probabilities; `mu`
    /// and `sigma_sq` are evaluated at every atom.
    pub fn new<M, S>(supports: Vec<Vec<f64>>, coord_probs: Vec<Vec<T>>, mu: M, sigma_sq: S) -> Result<Self>
    where
        M: Fn(&[f64]) -> T,
        S: Fn(&[f64]) -> T,
    {
        if supports.is_empty() {
            return Err(invalid("space needs at least one coordinate"));
        }
        if supports.len() != coord_probs.len() {
            return Err(Error::DimensionMismatch { expected: supports.len(), got: coord_probs.len() });
        }
        let mut total = 1usize;
        let mut strides = Vec::with_capacity(supports.len());
        for (j, (sup, pr)) in supports.iter().zip(&coord_probs).enumerate() {
            if sup.is_empty() || sup.len() != pr.len() {
                return Err(invalid(format!("coordinate {j}: support and probabilities must be nonempty and aligned")));
            }
            if pr.iter().any(|p| !p.is_positive_value() || !p.is_finite_value()) {
                return Err(invalid(format!("coordinate {j}: probabilities must be strictly positive")));
            }
            let sum = pr.iter().cloned().fold(T::zero(), |a, b| a + b);
            if !sum.close_to(&T::one()) {
                return Err(invalid(format!("coordinate {j}: probabilities sum to {:?}, not 1", sum)));
            }
            strides.push(total);
            total = total
                .checked_mul(sup.len())
                .filter(|t| *t <= MAX_ATOMS)
                .ok_or_else(|| Error::TooLarge(format!("more than {MAX_ATOMS} atoms")))?;
        }
        let mut space = DiscreteSpace {
            supports,
            coord_probs,
            strides,
            atom_prob: Vec::with_capacity(total),
            mu: Vec::with_capacity(total),
            sigma_sq: Vec::with_capacity(total),
        };
        let mut point = vec![0.0; space.dim()];
        for a in 0..total {
            space.fill_point(a, &mut point);
            let p = space.compute_atom_prob(a);
            let s2 = sigma_sq(&point);
            if s2 < T::zero() {
                return Err(invalid(format!("negative noise variance at atom {a}")));
            }
            space.atom_prob.push(p);
            space.mu.push(mu(&point));
            space.sigma_sq.push(s2);
        }
        Ok(space)
    }

    fn compute_atom_prob(&self, a: usize) -> T {
        (0..self.dim())
            .map(|j| self.coord_probs[j][self.coord_index(a, j)].clone())
            .fold(T::one(), |acc, p| acc * p)
    }

    pub fn dim(&self) -> usize {
        self.supports.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.atom_prob.len()
    }

    pub fn supports(&self) -> &[Vec<f64>] {
        &self.supports
    }

    pub fn coord_probs(&self) -> &[Vec<T>] {
        &self.coord_probs
    }

    /// Index into coordinate `j`'s support of atom `a`.
    #[inline]
    pub fn coord_index(&self, a: usize, j: usize) -> usize {
        (a / self.strides[j]) % self.supports[j].len()
    }

    pub fn fill_point(&self, a: usize, out: &mut [f64]) {
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.supports[j][self.coord_index(a, j)];
        }
    }

    pub fn point(&self, a: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.fill_point(a, &mut v);
        v
    }

    /// Atom whose coordinates equal `x` exactly.
    pub fn atom_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut a = 0;
        for (j, v) in x.iter().enumerate() {
            let k = self.supports[j].iter().position(|s| s == v)?;
            a += k * self.strides[j];
        }
        Some(a)
    }

    pub fn prob(&self, a: usize) -> &T {
        &self.atom_prob[a]
    }

    pub fn mu(&self, a: usize) -> &T {
        &self.mu[a]
    }

    pub fn sigma_sq(&self, a: usize) -> &T {
        &self.sigma_sq[a]
    }

    pub fn atom_probs(&self) -> &[T] {
        &self.atom_prob
    }

    pub fn mu_values(&self) -> &[T] {
        &self.mu
    }

    pub fn sigma_sq_values(&self) -> &[T] {
        &self.sigma_sq
    }
}

impl DiscreteSpace<f64> {
    /// `{0,1}^d` with fair coins, the linear mean and constant noise of `spec`.
    pub fn binary_linear(spec: &ModelSpec) -> Result<Self> {
        let d = spec.d();
        if d > 22 {
            return Err(Error::TooLarge(format!("binary space of dimension {d}")));
        }
        let beta = spec.beta().to_vec();
        let s2 = spec.sigma0_sq();
        DiscreteSpace::new(
            vec![vec![0.0, 1.0]; d],
            vec![vec![0.5, 0.5]; d],
            move |x| beta.iter().zip(x).map(|(b, v)| b * v).sum(),
            move |_| s2,
        )
    }

    /// Draw an atom from the product measure.
    pub fn sample_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut a = 0;
        for j in 0..self.dim() {
            let u: f64 = rng.random();
            let probs = &self.coord_probs[j];
            let mut acc = 0.0;
            let mut k = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    k = i;
                    break;
                }
            }
            a += k * self.strides[j];
        }
        a
    }

    pub fn sup_abs_mu(&self) -> f64 {
        self.mu.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_sigma_sq(&self) -> f64 {
        self.sigma_sq.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Training sample on a discrete space, stored as atom indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSample {
    pub atoms: Vec<usize>,
    pub y: Vec<f64>,
}

impl DiscreteSample {
    pub fn new(atoms: Vec<usize>, y: Vec<f64>) -> Result<Self> {
        if atoms.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: atoms.len(), got: y.len() });
        }
        Ok(DiscreteSample { atoms, y })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `n` i.i.d. draws `(X, mu(X) + sigma(X) eps)` with Gaussian `eps`.
pub fn sample_data<R: Rng + ?Sized>(space: &DiscreteSpace<f64>, n: usize, rng: &mut R) -> DiscreteSample {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut atoms = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a = space.sample_atom(rng);
        let s2 = space.sigma_sq[a];
        let eps = if s2 > 0.0 { s2.sqrt() * normal.sample(rng) } else { 0.0 };
        atoms.push(a);
        y.push(space.mu[a] + eps);
    }
    DiscreteSample { atoms, y }
}
