//! Leading-order MSE expansions for population-CART trees and forests on
//! the sparse linear model, evaluated by Monte Carlo over independent pairs
//! of CART processes.
//!
//! Every replication draws one pair `(I_l, I'_l)` (or `(J_l, J'_l)`) and
//! evaluates all terms on that pair, so tree/forest comparisons are paired
//! and the dominance relations hold realization by realization.

pub mod exact;

use crate::cart_process::{
    sample_binary_process, sample_uniform_process, subsample_avoid_prob, BinaryState, UniformState,
};
use crate::error::{invalid, Result};
use crate::exec::{map_indexed, rep_rng};
use crate::model::{FeatureKind, ModelSpec};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Binary,
    Uniform,
}

impl ProcessKind {
    pub fn feature_kind(self) -> FeatureKind {
        match self {
            ProcessKind::Binary => FeatureKind::BinaryBernoulliHalf,
            ProcessKind::Uniform => FeatureKind::UniformUnit,
        }
    }

    pub fn of(kind: FeatureKind) -> Self {
        match kind {
            FeatureKind::BinaryBernoulliHalf => ProcessKind::Binary,
            FeatureKind::UniformUnit => ProcessKind::Uniform,
        }
    }

    /// Within-cell variance of `beta_j X_j` for an unsplit coordinate, per unit `beta_j^2`.
    pub fn signal_factor(self) -> f64 {
        match self {
            ProcessKind::Binary => 0.25,
            ProcessKind::Uniform => 1.0 / 12.0,
        }
    }
}

/// All per-realization quantities derived from one independent pair of processes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    pub ensemble_sq_bias: f64,
    pub single_sq_bias: f64,
    pub cross_tree_cov: f64,
    pub single_tree_var: f64,
    /// Unsplit signals (binary) or squared diagonal signal length (uniform), first tree.
    pub signal_tree: f64,
    /// Same quantity for the intersection of the two terminal cells.
    pub signal_forest: f64,
    pub splits_tree: f64,
    pub shared_splits: f64,
    pub correlation: f64,
}

impl PairTerms {
    pub fn binary(spec: &ModelSpec, a: &BinaryState, b: &BinaryState, n: usize) -> Self {
        let s = spec.s();
        let mut single = 0.0;
        let mut joint = 0.0;
        for (j, beta) in spec.beta().iter().enumerate() {
            let b2 = beta * beta;
            if !a.indicator[j] {
                single += b2;
                if !b.indicator[j] {
                    joint += b2;
                }
            }
        }
        let single_sq_bias = 0.25 * single;
        let ensemble_sq_bias = 0.25 * joint;
        let splits = a.splits();
        let shared = a.shared_splits(b);
        let n = n as f64;
        PairTerms {
            ensemble_sq_bias,
            single_sq_bias,
            cross_tree_cov: (spec.sigma0_sq() + ensemble_sq_bias) * (shared as f64).exp2() / n,
            single_tree_var: (spec.sigma0_sq() + single_sq_bias) * (splits as f64).exp2() / n,
            signal_tree: a.unsplit_signals(s) as f64,
            signal_forest: a.jointly_unsplit_signals(b, s) as f64,
            splits_tree: splits as f64,
            shared_splits: shared as f64,
            correlation: correlation(shared, splits, b.splits()),
        }
    }

    pub fn uniform(spec: &ModelSpec, a: &UniformState, b: &UniformState, n: usize) -> Self {
        let mut single = 0.0;
        let mut joint = 0.0;
        let mut diag = 0.0;
        let mut diag_joint = 0.0;
        for (j, beta) in spec.beta().iter().enumerate() {
            let b2 = beta * beta;
            let len_a = 0.25f64.powi(a.counts[j] as i32);
            let len_ab = 0.25f64.powi(a.counts[j].max(b.counts[j]) as i32);
            single += b2 * len_a;
            joint += b2 * len_ab;
            diag += len_a;
            diag_joint += len_ab;
        }
        let single_sq_bias = single / 12.0;
        let ensemble_sq_bias = joint / 12.0;
        let splits = a.splits();
        let shared = a.shared_splits(b);
        let n = n as f64;
        PairTerms {
            ensemble_sq_bias,
            single_sq_bias,
            cross_tree_cov: (spec.sigma0_sq() + ensemble_sq_bias) * (shared as f64).exp2() / n,
            single_tree_var: (spec.sigma0_sq() + single_sq_bias) * (splits as f64).exp2() / n,
            signal_tree: diag,
            signal_forest: diag_joint,
            splits_tree: splits as f64,
            shared_splits: shared as f64,
            correlation: correlation(shared, splits, b.splits()),
        }
    }

    /// B-weighted leading MSE for this realization.
    pub fn total_leading(&self, b: usize) -> f64 {
        let w = (b - 1) as f64 / b as f64;
        w * (self.ensemble_sq_bias + self.cross_tree_cov)
            + (self.single_sq_bias + self.single_tree_var) / b as f64
    }
}

/// `Cov(P, P') / sqrt(Var(P) Var(P'))` for dyadic/binary partitions:
/// `2^{shared} / 2^{(splits + splits')/2}`.
fn correlation(shared: usize, splits_a: usize, splits_b: usize) -> f64 {
    (shared as f64 - 0.5 * (splits_a + splits_b) as f64).exp2()
}

/// Standard errors of the Monte-Carlo terms in [`MseBreakdown`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MseSe {
    pub ensemble_sq_bias: f64,
    pub single_sq_bias: f64,
    pub cross_tree_cov: f64,
    pub single_tree_var: f64,
    pub total_leading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBreakdown {
    pub ensemble_sq_bias: f64,
    pub single_sq_bias: f64,
    pub cross_tree_cov: f64,
    pub single_tree_var: f64,
    pub remainder_bound: f64,
    pub total_leading: f64,
    pub mc_se: MseSe,
    pub reps: usize,
    pub b: usize,
    pub n: usize,
}

impl MseBreakdown {
    pub fn from_pairs(pairs: &[PairTerms], b: usize, n: usize, l: usize) -> Self {
        let terms: Vec<[f64; 4]> = pairs
            .iter()
            .map(|p| [p.ensemble_sq_bias, p.single_sq_bias, p.cross_tree_cov, p.single_tree_var])
            .collect();
        Self::from_term_samples(&terms, b, n, remainder_bound(l, n, b))
    }

    /// Aggregate per-replication `[ensemble bias, single bias, cross cov,
    /// single var]` samples.
    pub fn from_term_samples(terms: &[[f64; 4]], b: usize, n: usize, remainder_bound: f64) -> Self {
        let w = (b - 1) as f64 / b as f64;
        let col = |k: usize| Estimate::from_iter(terms.iter().map(|t| t[k]));
        let (eb, sb, cc, sv) = (col(0), col(1), col(2), col(3));
        let tl = Estimate::from_iter(terms.iter().map(|t| w * (t[0] + t[2]) + (t[1] + t[3]) / b as f64));
        MseBreakdown {
            ensemble_sq_bias: eb.mean,
            single_sq_bias: sb.mean,
            cross_tree_cov: cc.mean,
            single_tree_var: sv.mean,
            remainder_bound,
            total_leading: tl.mean,
            mc_se: MseSe {
                ensemble_sq_bias: eb.se,
                single_sq_bias: sb.se,
                cross_tree_cov: cc.se,
                single_tree_var: sv.se,
                total_leading: tl.se,
            },
            reps: terms.len(),
            b,
            n,
        }
    }
}

/// Remainder envelope (implicit constant 1):
/// `2^l / (n (1 + (n-1) 2^-l)^{1/2}) + (1 - 2^-l)^n` for ensembles, and the
/// tree form without the square root when `b == 1`.
pub fn remainder_bound(l: usize, n: usize, b: usize) -> f64 {
    let cells = (l as f64).exp2();
    let p = 1.0 / cells;
    let n = n as f64;
    let occupancy = 1.0 + (n - 1.0) * p;
    let first = if b == 1 { cells / (n * occupancy) } else { cells / (n * occupancy.sqrt()) };
    first + (1.0 - p).powf(n)
}

fn check_common(b: usize, n: usize, reps: usize) -> Result<()> {
    if b == 0 {
        return Err(invalid("number of trees B must be at least 1"));
    }
    if n == 0 {
        return Err(invalid("sample size n must be at least 1"));
    }
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    Ok(())
}

/// Draw `reps` independent process pairs and evaluate [`PairTerms`] on each.
/// Replication `r` uses the stream `rep_rng(seed, r)`; the first tree's
/// process is drawn before the second's.
pub fn sample_pair_terms(
    kind: ProcessKind,
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<PairTerms>> {
    if n == 0 {
        return Err(invalid("sample size n must be at least 1"));
    }
    // Validate once up front so worker closures cannot fail.
    let mut probe = rep_rng(seed, 0);
    match kind {
        ProcessKind::Binary => {
            sample_binary_process(spec, gamma, l, &mut probe)?;
            Ok(map_indexed(reps, |r| {
                let mut rng = rep_rng(seed, r);
                let a = sample_binary_process(spec, gamma, l, &mut rng).expect("validated");
                let b = sample_binary_process(spec, gamma, l, &mut rng).expect("validated");
                PairTerms::binary(spec, &a, &b, n)
            }))
        }
        ProcessKind::Uniform => {
            sample_uniform_process(spec, gamma, l, &mut probe)?;
            Ok(map_indexed(reps, |r| {
                let mut rng = rep_rng(seed, r);
                let a = sample_uniform_process(spec, gamma, l, &mut rng).expect("validated");
                let b = sample_uniform_process(spec, gamma, l, &mut rng).expect("validated");
                PairTerms::uniform(spec, &a, &b, n)
            }))
        }
    }
}

pub fn binary_mse_terms(
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    b: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<MseBreakdown> {
    check_common(b, n, reps)?;
    let pairs = sample_pair_terms(ProcessKind::Binary, spec, gamma, l, n, reps, seed)?;
    Ok(MseBreakdown::from_pairs(&pairs, b, n, l))
}

pub fn uniform_mse_terms(
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    b: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<MseBreakdown> {
    check_common(b, n, reps)?;
    let pairs = sample_pair_terms(ProcessKind::Uniform, spec, gamma, l, n, reps, seed)?;
    Ok(MseBreakdown::from_pairs(&pairs, b, n, l))
}

pub fn mse_terms(
    kind: ProcessKind,
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    b: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<MseBreakdown> {
    match kind {
        ProcessKind::Binary => binary_mse_terms(spec, gamma, l, b, n, reps, seed),
        ProcessKind::Uniform => uniform_mse_terms(spec, gamma, l, b, n, reps, seed),
    }
}

/// Explicit-constant rate bound
/// `c max_j beta_j^2 s (1 - 3/4 gamma W(s))^{l+1} + (sigma0^2 + c sum beta^2) 2^l / n`
/// with `c = 1/4` (binary) or `1/12` (uniform).
pub fn convergence_bound(spec: &ModelSpec, gamma: f64, l: usize, n: usize) -> Result<f64> {
    convergence_bound_with_exponent(spec, gamma, l, n, l + 1)
}

/// The same bound with the contraction factor raised to `exponent`.
/// The one-step chain contraction proves the bound for `exponent = l`.
pub fn convergence_bound_with_exponent(
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    n: usize,
    exponent: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("sample size n must be at least 1"));
    }
    let c = ProcessKind::of(spec.feature_kind()).signal_factor();
    let s = spec.s();
    // W at an integer argument is the subsample avoidance probability; it is
    // zero once s exceeds d - ceil(gamma d).
    let w = subsample_avoid_prob(spec.d(), gamma, s)?;
    let contraction = 1.0 - 0.75 * gamma * w;
    let signal = c * spec.max_beta_sq() * s as f64 * contraction.powi(exponent as i32);
    let variance = (spec.sigma0_sq() + c * spec.sum_beta_sq()) * (l as f64).exp2() / n as f64;
    Ok(signal + variance)
}

/// Expected cross-tree correlation `E[2^{shared splits - l}]`.
pub fn cross_tree_correlation(
    kind: ProcessKind,
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    reps: usize,
    seed: u64,
) -> Result<Estimate> {
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let pairs = sample_pair_terms(kind, spec, gamma, l, 1, reps, seed)?;
    Ok(Estimate::from_iter(pairs.iter().map(|p| p.correlation)))
}

/// Tree and forest values of the six performance measures (a)-(f).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfMeasures {
    pub sq_bias_tree: Estimate,
    pub sq_bias_forest: Estimate,
    pub unsplit_or_diag_tree: Estimate,
    pub unsplit_or_diag_forest: Estimate,
    pub var_tree: Estimate,
    pub cov_forest: Estimate,
    pub corr_tree: Estimate,
    pub corr_forest: Estimate,
    pub shared_splits_tree: Estimate,
    pub shared_splits_forest: Estimate,
    pub mse_tree: Estimate,
    pub mse_forest: Estimate,
    pub reps: usize,
}

impl PerfMeasures {
    pub fn from_pairs(pairs: &[PairTerms], b: usize) -> Self {
        let est = |f: &dyn Fn(&PairTerms) -> f64| Estimate::from_iter(pairs.iter().map(f));
        PerfMeasures {
            sq_bias_tree: est(&|p| p.single_sq_bias),
            sq_bias_forest: est(&|p| p.ensemble_sq_bias),
            unsplit_or_diag_tree: est(&|p| p.signal_tree),
            unsplit_or_diag_forest: est(&|p| p.signal_forest),
            var_tree: est(&|p| p.single_tree_var),
            cov_forest: est(&|p| p.cross_tree_cov),
            corr_tree: Estimate::exact(1.0),
            corr_forest: est(&|p| p.correlation),
            shared_splits_tree: est(&|p| p.splits_tree),
            shared_splits_forest: est(&|p| p.shared_splits),
            mse_tree: est(&|p| p.total_leading(1)),
            mse_forest: est(&|p| p.total_leading(b)),
            reps: pairs.len(),
        }
    }
}

pub fn perf_measures(
    kind: ProcessKind,
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    b: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<PerfMeasures> {
    check_common(b, n, reps)?;
    let pairs = sample_pair_terms(kind, spec, gamma, l, n, reps, seed)?;
    Ok(PerfMeasures::from_pairs(&pairs, b))
}
