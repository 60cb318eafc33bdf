//! Binary and uniform CART processes.
//!
//! Under the population CART rule on the sparse linear model, the terminal
//! cell holding a point is fully described by which coordinates were split
//! (binary features) or how many times each coordinate was halved (uniform
//! features). These processes are Markov chains driven only by feature
//! subsampling and random tie-breaking.

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::model::{FeatureKind, ModelSpec};

/// Relative tolerance under which two split scores count as tied.
pub const TIE_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

/// `ceil(gamma * d)`, the number of features drawn at each split.
///
/// A small slack absorbs products such as `0.3 * 10 = 3.0000000000000004`.
pub fn subsample_size(d: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("subsample rate gamma = {gamma} must lie in (0, 1]")));
    }
    if d == 0 {
        return Err(invalid("dimension d must be positive"));
    }
    let m = (gamma * d as f64 - 1e-9).ceil().max(1.0) as usize;
    Ok(m.min(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryState {
    pub indicator: Vec<bool>,
    pub depth: usize,
}

impl BinaryState {
    pub fn root(d: usize) -> Self {
        BinaryState { indicator: vec![false; d], depth: 0 }
    }

    pub fn splits(&self) -> usize {
        self.indicator.iter().filter(|b| **b).count()
    }

    /// `sum_j min(I_j, I'_j)`.
    pub fn shared_splits(&self, other: &BinaryState) -> usize {
        self.indicator.iter().zip(&other.indicator).filter(|(a, b)| **a && **b).count()
    }

    /// Informative coordinates (first `s`) left unsplit.
    pub fn unsplit_signals(&self, s: usize) -> usize {
        self.indicator[..s].iter().filter(|b| !**b).count()
    }

    /// Informative coordinates unsplit by both states.
    pub fn jointly_unsplit_signals(&self, other: &BinaryState, s: usize) -> usize {
        self.indicator[..s]
            .iter()
            .zip(&other.indicator[..s])
            .filter(|(a, b)| !**a && !**b)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UniformState {
    pub counts: Vec<u32>,
    pub depth: usize,
}

impl UniformState {
    pub fn root(d: usize) -> Self {
        UniformState { counts: vec![0; d], depth: 0 }
    }

    pub fn splits(&self) -> usize {
        self.counts.iter().map(|c| *c as usize).sum()
    }

    pub fn shared_splits(&self, other: &UniformState) -> usize {
        self.counts.iter().zip(&other.counts).map(|(a, b)| (*a).min(*b) as usize).sum()
    }
}

/// Indices within `scores` whose value ties the maximum.
fn argmax_set(scores: &[(usize, f64)]) -> Vec<usize> {
    let max = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * max.abs();
    scores.iter().filter(|(_, s)| (max - s).abs() <= tol).map(|(j, _)| *j).collect()
}

fn pick<R: Rng + ?Sized>(set: &[usize], rng: &mut R) -> usize {
    if set.len() == 1 {
        set[0]
    } else {
        set[rng.random_range(0..set.len())]
    }
}

/// Advance a binary state by one split. The caller guarantees that the
/// subsample always holds an unsplit coordinate.
pub fn binary_step<R: Rng + ?Sized>(state: &mut BinaryState, beta_sq: &[f64], m: usize, rng: &mut R) {
    let d = state.indicator.len();
    let sub = index::sample(rng, d, m);
    let candidates: Vec<(usize, f64)> =
        sub.iter().filter(|&j| !state.indicator[j]).map(|j| (j, beta_sq[j])).collect();
    if !candidates.is_empty() {
        let j = pick(&argmax_set(&candidates), rng);
        state.indicator[j] = true;
    }
    state.depth += 1;
}

/// Advance a uniform state by one split.
pub fn uniform_step<R: Rng + ?Sized>(state: &mut UniformState, beta_sq: &[f64], m: usize, rng: &mut R) {
    let d = state.counts.len();
    let sub = index::sample(rng, d, m);
    let candidates: Vec<(usize, f64)> =
        sub.iter().map(|j| (j, uniform_score(beta_sq[j], state.counts[j]))).collect();
    let j = pick(&argmax_set(&candidates), rng);
    state.counts[j] += 1;
    state.depth += 1;
}

/// Impurity decrement of splitting a coordinate halved `splits` times,
/// up to the common factor 1/12.
#[inline]
pub fn uniform_score(beta_sq: f64, splits: u32) -> f64 {
    beta_sq * 0.25f64.powi(splits as i32)
}

/// One realization of `I_l`.
pub fn sample_binary_process<R: Rng + ?Sized>(
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    rng: &mut R,
) -> Result<BinaryState> {
    spec.require_kind(FeatureKind::BinaryBernoulliHalf)?;
    let m = subsample_size(spec.d(), gamma)?;
    if l >= m {
        return Err(Error::DepthTooLarge { depth: l, subsample: m });
    }
    let beta_sq = spec.beta_sq_padded();
    let mut state = BinaryState::root(spec.d());
    for _ in 0..l {
        binary_step(&mut state, &beta_sq, m, rng);
    }
    Ok(state)
}

/// One realization of `J_l`.
pub fn sample_uniform_process<R: Rng + ?Sized>(
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    rng: &mut R,
) -> Result<UniformState> {
    spec.require_kind(FeatureKind::UniformUnit)?;
    let m = subsample_size(spec.d(), gamma)?;
    let beta_sq = spec.beta_sq_padded();
    let mut state = UniformState::root(spec.d());
    for _ in 0..l {
        uniform_step(&mut state, &beta_sq, m, rng);
    }
    Ok(state)
}

/// `q_i = C(d - i, m) / C(d, m)`: probability that a size-`m` subsample
/// misses `i` designated coordinates.
pub fn subsample_avoid_prob(d: usize, gamma: f64, i: usize) -> Result<f64> {
    let m = subsample_size(d, gamma)?;
    if i > d {
        return Err(invalid(format!("i = {i} exceeds d = {d}")));
    }
    if m + i > d {
        return Ok(0.0);
    }
    Ok(telescoping(d, m, i as f64))
}

/// `(1 - x/d)(1 - x/(d-1)) ... (1 - x/(d-m+1))`.
fn telescoping(d: usize, m: usize, x: f64) -> f64 {
    (0..m).map(|k| 1.0 - x / (d - k) as f64).product()
}

/// `W_{gamma,d}(x)`, the continuous extension of [`subsample_avoid_prob`].
pub fn w_function(d: usize, gamma: f64, x: f64) -> Result<f64> {
    let m = subsample_size(d, gamma)?;
    let hi = (d - m + 1) as f64;
    if !(x >= 0.0 && x <= hi) {
        return Err(invalid(format!("W argument {x} outside [0, {hi}]")));
    }
    Ok(telescoping(d, m, x))
}

/// Constraint on one coordinate of a terminal cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordConstraint {
    /// Unsplit binary coordinate: {0, 1}.
    Free,
    /// Binary coordinate pinned to a value.
    Fixed(u8),
    /// Half-open dyadic interval `(lo, hi]`.
    Interval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub coords: Vec<CoordConstraint>,
}

impl Cell {
    pub fn probability(&self) -> f64 {
        self.coords
            .iter()
            .map(|c| match c {
                CoordConstraint::Free => 1.0,
                CoordConstraint::Fixed(_) => 0.5,
                CoordConstraint::Interval { lo, hi } => hi - lo,
            })
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.coords.len() == x.len()
            && self.coords.iter().zip(x).all(|(c, v)| match c {
                CoordConstraint::Free => *v == 0.0 || *v == 1.0,
                CoordConstraint::Fixed(b) => *v == *b as f64,
                CoordConstraint::Interval { lo, hi } => *v > *lo && *v <= *hi,
            })
    }
}

/// `K(x, m) = ceil(x 2^m)`; index of the level-`m` dyadic interval holding `x`.
#[inline]
pub fn dyadic_index(x: f64, splits: u32) -> u64 {
    // Scaling by a power of two is exact, so the ceiling is exact too.
    let k = (x * (splits as f64).exp2()).ceil() as u64;
    k.max(1)
}

pub fn terminal_cell_uniform(x0: &[f64], state: &UniformState) -> Result<Cell> {
    if x0.len() != state.counts.len() {
        return Err(Error::DimensionMismatch { expected: state.counts.len(), got: x0.len() });
    }
    if let Some(v) = x0.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(invalid(format!("coordinate {v} outside (0, 1)")));
    }
    let coords = x0
        .iter()
        .zip(&state.counts)
        .map(|(&x, &j)| {
            let scale = (j as f64).exp2();
            let k = dyadic_index(x, j) as f64;
            CoordConstraint::Interval { lo: (k - 1.0) / scale, hi: k / scale }
        })
        .collect();
    Ok(Cell { coords })
}

pub fn terminal_cell_binary(x0: &[f64], state: &BinaryState) -> Result<Cell> {
    if x0.len() != state.indicator.len() {
        return Err(Error::DimensionMismatch { expected: state.indicator.len(), got: x0.len() });
    }
    let coords = x0
        .iter()
        .zip(&state.indicator)
        .map(|(&x, &split)| match (split, x) {
            (false, _) => Ok(CoordConstraint::Free),
            (true, v) if v == 0.0 => Ok(CoordConstraint::Fixed(0)),
            (true, v) if v == 1.0 => Ok(CoordConstraint::Fixed(1)),
            (true, v) => Err(invalid(format!("binary coordinate {v} not in {{0, 1}}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Cell { coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{rep_rng, rng_from_seed};

    fn binary(spec: ModelSpec) -> ModelSpec {
        spec.with_feature_kind(FeatureKind::BinaryBernoulliHalf)
    }

    fn uniform(spec: ModelSpec) -> ModelSpec {
        spec.with_feature_kind(FeatureKind::UniformUnit)
    }

    #[test]
    fn subsample_size_handles_float_products() {
        assert_eq!(subsample_size(10, 0.3).unwrap(), 3);
        assert_eq!(subsample_size(100, 0.1).unwrap(), 10);
        assert_eq!(subsample_size(100, 0.7).unwrap(), 70);
        assert_eq!(subsample_size(4, 0.5).unwrap(), 2);
        assert_eq!(subsample_size(7, 0.5).unwrap(), 4);
        assert!(subsample_size(7, 0.0).is_err());
        assert!(subsample_size(7, 1.5).is_err());
    }

    #[test]
    fn binary_config_ii_is_greedy() {
        let spec = binary(ModelSpec::config_ii(FeatureKind::BinaryBernoulliHalf));
        for seed in 0..20 {
            let st = sample_binary_process(&spec, 1.0, 2, &mut rng_from_seed(seed)).unwrap();
            let set: Vec<usize> = (0..100).filter(|&j| st.indicator[j]).collect();
            assert_eq!(set, vec![0, 1]);
        }
    }

    #[test]
    fn binary_root_and_full_signal_depth() {
        let spec = ModelSpec::config_i(FeatureKind::BinaryBernoulliHalf);
        let st = sample_binary_process(&spec, 0.4, 0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(st.splits(), 0);
        for seed in 0..50 {
            let st = sample_binary_process(&spec, 1.0, 5, &mut rng_from_seed(seed)).unwrap();
            assert!(st.indicator[..5].iter().all(|b| *b));
            assert!(st.indicator[5..].iter().all(|b| !*b));
        }
    }

    #[test]
    fn binary_rejects_deep_trees_and_wrong_kind() {
        let spec = ModelSpec::new(10, vec![1.0], 1.0, FeatureKind::BinaryBernoulliHalf).unwrap();
        assert!(matches!(
            sample_binary_process(&spec, 0.3, 3, &mut rng_from_seed(0)),
            Err(Error::DepthTooLarge { depth: 3, subsample: 3 })
        ));
        assert!(sample_binary_process(&spec, 0.3, 2, &mut rng_from_seed(0)).is_ok());
        let u = uniform(spec);
        assert!(matches!(
            sample_binary_process(&u, 1.0, 1, &mut rng_from_seed(0)),
            Err(Error::WrongFeatureKind(_))
        ));
    }

    #[test]
    fn uniform_examples() {
        let ii = ModelSpec::config_ii(FeatureKind::UniformUnit);
        let st = sample_uniform_process(&ii, 1.0, 5, &mut rng_from_seed(4)).unwrap();
        assert_eq!(&st.counts[..5], &[1, 1, 1, 1, 1]);
        assert!(st.counts[5..].iter().all(|c| *c == 0));
        assert_eq!(sample_uniform_process(&ii, 0.5, 0, &mut rng_from_seed(4)).unwrap().splits(), 0);

        let i = ModelSpec::config_i(FeatureKind::UniformUnit);
        for seed in 0..50 {
            let st = sample_uniform_process(&i, 1.0, 10, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(&st.counts[..5], &[2, 2, 2, 2, 2]);
            assert!(st.counts[5..].iter().all(|c| *c == 0));
        }
    }

    #[test]
    fn uniform_counts_sum_to_depth() {
        let spec = ModelSpec::config_i(FeatureKind::UniformUnit);
        for seed in 0..200 {
            let l = (seed % 12) as usize;
            let gamma = [0.05, 0.1, 0.37, 1.0][(seed % 4) as usize];
            let st = sample_uniform_process(&spec, gamma, l, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(st.splits(), l);
        }
    }

    #[test]
    fn avoid_prob_examples() {
        assert!((subsample_avoid_prob(4, 0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(subsample_avoid_prob(17, 0.3, 0).unwrap(), 1.0);
        assert_eq!(subsample_avoid_prob(50, 1.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn avoid_prob_matches_subset_enumeration() {
        // Count size-m subsets of {0..d-1} missing {0..i-1}, by bitmask.
        for d in 1..=10usize {
            for m in 1..=d {
                let gamma = m as f64 / d as f64;
                let total = (0u32..1 << d).filter(|s| s.count_ones() as usize == m).count();
                for i in 0..=d {
                    let mask = (1u32 << i) - 1;
                    let miss = (0u32..1 << d)
                        .filter(|s| s.count_ones() as usize == m && s & mask == 0)
                        .count();
                    let q = subsample_avoid_prob(d, gamma, i).unwrap();
                    assert!((q - miss as f64 / total as f64).abs() < 1e-12, "d={d} m={m} i={i}");
                }
            }
        }
    }

    #[test]
    fn w_function_examples() {
        assert!((w_function(4, 0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(w_function(30, 0.4, 0.0).unwrap(), 1.0);
        assert_eq!(w_function(100, 1.0, 1.0).unwrap(), 0.0);
        assert!(w_function(100, 1.0, 1.5).is_err());
        assert!(w_function(100, 0.5, -0.1).is_err());
        for d in [5usize, 20, 100] {
            for gamma in [0.1, 0.5, 0.9] {
                let m = subsample_size(d, gamma).unwrap();
                for i in 0..=(d - m + 1) {
                    assert_eq!(
                        w_function(d, gamma, i as f64).unwrap(),
                        subsample_avoid_prob(d, gamma, i).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn uniform_terminal_cells() {
        let st = UniformState { counts: vec![2, 0, 1], depth: 3 };
        let c = terminal_cell_uniform(&[0.3, 0.77, 0.5], &st).unwrap();
        assert_eq!(c.coords[0], CoordConstraint::Interval { lo: 0.25, hi: 0.5 });
        assert_eq!(c.coords[1], CoordConstraint::Interval { lo: 0.0, hi: 1.0 });
        assert_eq!(c.coords[2], CoordConstraint::Interval { lo: 0.0, hi: 0.5 });
        assert!(c.contains(&[0.3, 0.77, 0.5]));
        assert_eq!(c.probability(), 0.125);
        assert!(terminal_cell_uniform(&[0.0, 0.5, 0.5], &st).is_err());
    }

    #[test]
    fn binary_terminal_cells() {
        let root = BinaryState::root(3);
        let c = terminal_cell_binary(&[1.0, 0.0, 1.0], &root).unwrap();
        assert_eq!(c.probability(), 1.0);
        let st = BinaryState { indicator: vec![true, false, false], depth: 1 };
        let c = terminal_cell_binary(&[1.0, 0.0, 1.0], &st).unwrap();
        assert_eq!(c.coords[0], CoordConstraint::Fixed(1));
        assert_eq!(c.probability(), 0.5);
        let st = BinaryState { indicator: vec![true; 5], depth: 5 };
        assert_eq!(terminal_cell_binary(&[0.0; 5], &st).unwrap().probability(), 0.03125);
    }

    #[test]
    fn unsplit_signal_chain_matches_q() {
        // Transition i -> i-1 of the unsplit-informative count has probability 1 - q_i.
        let spec = ModelSpec::new(20, vec![1.0; 4], 1.0, FeatureKind::BinaryBernoulliHalf).unwrap();
        let gamma = 0.2;
        let m = subsample_size(20, gamma).unwrap();
        let beta_sq = spec.beta_sq_padded();
        let mut moves = [0usize; 5];
        let mut visits = [0usize; 5];
        let mut steps = 0;
        let mut rep = 0;
        while steps < 100_000 {
            let mut rng = rep_rng(99, rep);
            rep += 1;
            let mut st = BinaryState::root(20);
            for _ in 0..(m - 1) {
                let before = st.unsplit_signals(4);
                binary_step(&mut st, &beta_sq, m, &mut rng);
                visits[before] += 1;
                if st.unsplit_signals(4) + 1 == before {
                    moves[before] += 1;
                }
                steps += 1;
            }
        }
        for i in 1..=4 {
            if visits[i] < 1000 {
                continue;
            }
            let p = 1.0 - subsample_avoid_prob(20, gamma, i).unwrap();
            let phat = moves[i] as f64 / visits[i] as f64;
            let se = (p * (1.0 - p) / visits[i] as f64).sqrt();
            assert!((phat - p).abs() < 4.0 * se, "i={i} phat={phat} p={p}");
        }
    }
}
