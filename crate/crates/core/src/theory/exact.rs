//! Exact distributions of the CART processes for small problems, obtained
//! by pushing probability mass through every equally likely feature
//! subsample. Used as an oracle for the Monte-Carlo evaluators.

use std::collections::HashMap;

use crate::cart_process::{subsample_size, BinaryState, UniformState};
use crate::error::{Error, Result};
use crate::model::{FeatureKind, ModelSpec};
use crate::theory::{MseBreakdown, MseSe, PairTerms};

pub const MAX_D: usize = 12;
pub const MAX_DEPTH: usize = 6;

fn check_size(d: usize, l: usize) -> Result<()> {
    if d > MAX_D || l > MAX_DEPTH {
        return Err(Error::TooLarge(format!(
            "exact enumeration supports d <= {MAX_D}, l <= {MAX_DEPTH}; got d = {d}, l = {l}"
        )));
    }
    Ok(())
}

/// All size-`m` subsets of `0..d`, as bitmasks.
fn subsets(d: usize, m: usize) -> Vec<u32> {
    (0u32..1 << d).filter(|s| s.count_ones() as usize == m).collect()
}

/// Coordinates among `cands` sharing the largest score (relative tolerance 1e-12).
fn maximizers(cands: &[(usize, f64)]) -> Vec<usize> {
    let best = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    cands
        .iter()
        .filter(|c| (best - c.1).abs() <= 1e-12 * best.abs())
        .map(|c| c.0)
        .collect()
}

/// Exact law of `I_l`.
pub fn binary_distribution(spec: &ModelSpec, gamma: f64, l: usize) -> Result<Vec<(BinaryState, f64)>> {
    if spec.feature_kind() != FeatureKind::BinaryBernoulliHalf {
        return Err(Error::WrongFeatureKind("binary"));
    }
    let d = spec.d();
    check_size(d, l)?;
    let m = subsample_size(d, gamma)?;
    if l >= m {
        return Err(Error::DepthTooLarge { depth: l, subsample: m });
    }
    let beta_sq = spec.beta_sq_padded();
    let subs = subsets(d, m);
    let w_sub = 1.0 / subs.len() as f64;
    let mut dist: HashMap<u32, f64> = HashMap::from([(0u32, 1.0)]);
    for _ in 0..l {
        let mut next: HashMap<u32, f64> = HashMap::new();
        for (&state, &p) in &dist {
            for &sub in &subs {
                let cands: Vec<(usize, f64)> = (0..d)
                    .filter(|&j| sub >> j & 1 == 1 && state >> j & 1 == 0)
                    .map(|j| (j, beta_sq[j]))
                    .collect();
                if cands.is_empty() {
                    *next.entry(state).or_default() += p * w_sub;
                    continue;
                }
                let winners = maximizers(&cands);
                let share = p * w_sub / winners.len() as f64;
                for j in winners {
                    *next.entry(state | 1 << j).or_default() += share;
                }
            }
        }
        dist = next;
    }
    let mut out: Vec<(BinaryState, f64)> = dist
        .into_iter()
        .map(|(mask, p)| {
            let indicator = (0..d).map(|j| mask >> j & 1 == 1).collect();
            (BinaryState { indicator, depth: l }, p)
        })
        .collect();
    out.sort_by(|a, b| a.0.indicator.cmp(&b.0.indicator));
    Ok(out)
}

/// Exact law of `J_l`.
pub fn uniform_distribution(spec: &ModelSpec, gamma: f64, l: usize) -> Result<Vec<(UniformState, f64)>> {
    if spec.feature_kind() != FeatureKind::UniformUnit {
        return Err(Error::WrongFeatureKind("uniform"));
    }
    let d = spec.d();
    check_size(d, l)?;
    let m = subsample_size(d, gamma)?;
    let beta_sq = spec.beta_sq_padded();
    let subs = subsets(d, m);
    let w_sub = 1.0 / subs.len() as f64;
    let mut dist: HashMap<Vec<u32>, f64> = HashMap::from([(vec![0u32; d], 1.0)]);
    for _ in 0..l {
        let mut next: HashMap<Vec<u32>, f64> = HashMap::new();
        for (state, &p) in &dist {
            for &sub in &subs {
                let cands: Vec<(usize, f64)> = (0..d)
                    .filter(|&j| sub >> j & 1 == 1)
                    .map(|j| (j, beta_sq[j] / 4f64.powi(state[j] as i32)))
                    .collect();
                let winners = maximizers(&cands);
                let share = p * w_sub / winners.len() as f64;
                for j in winners {
                    let mut s = state.clone();
                    s[j] += 1;
                    *next.entry(s).or_default() += share;
                }
            }
        }
        dist = next;
    }
    let mut out: Vec<(UniformState, f64)> =
        dist.into_iter().map(|(counts, p)| (UniformState { counts, depth: l }, p)).collect();
    out.sort_by(|a, b| a.0.counts.cmp(&b.0.counts));
    Ok(out)
}

/// `E[f(S, S')]` for independent `S, S'` drawn from `dist`.
pub fn pair_expectation<S, F>(dist: &[(S, f64)], f: F) -> f64
where
    F: Fn(&S, &S) -> f64,
{
    dist.iter()
        .map(|(a, pa)| pa * dist.iter().map(|(b, pb)| pb * f(a, b)).sum::<f64>())
        .sum()
}

fn breakdown_from<F>(expect: F, l: usize, b: usize, n: usize) -> MseBreakdown
where
    F: Fn(&dyn Fn(&PairTerms) -> f64) -> f64,
{
    let eb = expect(&|p| p.ensemble_sq_bias);
    let sb = expect(&|p| p.single_sq_bias);
    let cc = expect(&|p| p.cross_tree_cov);
    let sv = expect(&|p| p.single_tree_var);
    let w = (b - 1) as f64 / b as f64;
    MseBreakdown {
        ensemble_sq_bias: eb,
        single_sq_bias: sb,
        cross_tree_cov: cc,
        single_tree_var: sv,
        remainder_bound: super::remainder_bound(l, n, b),
        total_leading: w * (eb + cc) + (sb + sv) / b as f64,
        mc_se: MseSe::default(),
        reps: 0,
        b,
        n,
    }
}

/// Leading MSE terms with every process expectation computed exactly.
pub fn binary_mse_exact(spec: &ModelSpec, gamma: f64, l: usize, b: usize, n: usize) -> Result<MseBreakdown> {
    let dist = binary_distribution(spec, gamma, l)?;
    let expect = |f: &dyn Fn(&PairTerms) -> f64| {
        pair_expectation(&dist, |x, y| f(&PairTerms::binary(spec, x, y, n)))
    };
    Ok(breakdown_from(expect, l, b, n))
}

pub fn uniform_mse_exact(spec: &ModelSpec, gamma: f64, l: usize, b: usize, n: usize) -> Result<MseBreakdown> {
    let dist = uniform_distribution(spec, gamma, l)?;
    let expect = |f: &dyn Fn(&PairTerms) -> f64| {
        pair_expectation(&dist, |x, y| f(&PairTerms::uniform(spec, x, y, n)))
    };
    Ok(breakdown_from(expect, l, b, n))
}
