use super::covariance::{covariance_report, projection_cross};
use super::partition::DiscretePartition;
use super::rules::PartitionRule;
use super::space::{sample_data, DiscreteSpace};
use crate::error::{invalid, Result};
use crate::exec::{map_indexed, rep_rng};
use crate::stats::Estimate;
use crate::theory::MseBreakdown;

pub const DEFAULT_INNER_REPS: usize = 64;

/// Bias-variance split of the generalized MSE, where the bias is taken after
/// integrating out the training sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmseDecomposition {
    pub bias_sq: f64,
    pub variance: f64,
    pub total: f64,
    pub se: f64,
    pub bias_sq_se: f64,
    pub variance_se: f64,
    pub reps: usize,
    pub inner_reps: usize,
}

fn check_args(space: &DiscreteSpace<f64>, rule: &dyn PartitionRule, n: usize, b: usize, reps: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("sample size n must be at least 1"));
    }
    if b == 0 {
        return Err(invalid("number of partitions B must be at least 1"));
    }
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    rule.validate(space)
}

/// Ensemble estimate at `x` for the partitions' cells of `x` only.
fn estimate_at(space: &DiscreteSpace<f64>, parts: &[DiscretePartition<f64>], n: usize, x: usize, rng: &mut crate::exec::Rng) -> f64 {
    let z = sample_data(space, n, rng);
    parts
        .iter()
        .map(|p| {
            let c = p.cell_of(x);
            let (mut s, mut k) = (0.0, 0u32);
            for (&a, &y) in z.atoms.iter().zip(&z.y) {
                if p.cell_of(a) == c {
                    s += y;
                    k += 1;
                }
            }
            if k == 0 {
                0.0
            } else {
                s / k as f64
            }
        })
        .sum::<f64>()
        / parts.len() as f64
}

/// Nested Monte Carlo: each outer replication draws `B` partitions and a test
/// atom, then `inner_reps` training samples. The squared bias is corrected by
/// the inner variance over `inner_reps`.
pub fn gmse_decompose(
    space: &DiscreteSpace<f64>,
    rule: &dyn PartitionRule,
    n: usize,
    b: usize,
    mc_reps: usize,
    inner_reps: usize,
    seed: u64,
) -> Result<GmseDecomposition> {
    check_args(space, rule, n, b, mc_reps)?;
    if inner_reps < 2 {
        return Err(invalid("inner_reps must be at least 2"));
    }
    let rows = map_indexed(mc_reps, |r| {
        let mut rng = rep_rng(seed, r);
        let parts: Vec<_> = (0..b).map(|_| rule.sample(space, &mut rng)).collect();
        let x = space.sample_atom(&mut rng);
        let vals: Vec<f64> = (0..inner_reps).map(|_| estimate_at(space, &parts, n, x, &mut rng)).collect();
        let inner = Estimate::from_samples(&vals);
        let v = inner.se * inner.se * inner_reps as f64;
        let bias = (inner.mean - space.mu(x)).powi(2) - v / inner_reps as f64;
        (bias, v)
    });
    let bias = Estimate::from_iter(rows.iter().map(|r| r.0));
    let var = Estimate::from_iter(rows.iter().map(|r| r.1));
    let total = Estimate::from_iter(rows.iter().map(|r| r.0 + r.1));
    Ok(GmseDecomposition {
        bias_sq: bias.mean,
        variance: var.mean,
        total: total.mean,
        se: total.se,
        bias_sq_se: bias.se,
        variance_se: var.se,
        reps: mc_reps,
        inner_reps,
    })
}

/// Plain Monte Carlo of `E[(mu(X) - mu_hat(X))^2]` with one training sample
/// per replication.
pub fn direct_gmse(
    space: &DiscreteSpace<f64>,
    rule: &dyn PartitionRule,
    n: usize,
    b: usize,
    reps: usize,
    seed: u64,
) -> Result<Estimate> {
    check_args(space, rule, n, b, reps)?;
    let sq = map_indexed(reps, |r| {
        let mut rng = rep_rng(seed, r);
        let parts: Vec<_> = (0..b).map(|_| rule.sample(space, &mut rng)).collect();
        let x = space.sample_atom(&mut rng);
        (estimate_at(space, &parts, n, x, &mut rng) - space.mu(x)).powi(2)
    });
    Ok(Estimate::from_samples(&sq))
}

/// Leading MSE terms together with the mean of `|P| / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem42Report {
    pub breakdown: MseBreakdown,
    pub cells_over_n: Estimate,
}

/// `Σ_i [(1 - p_i)^n p_i + w / (n sqrt(1 + (n-1) p_i)) + 1 / (n (1 + (n-1) p_i))]`.
fn remainder_shape(p: &DiscretePartition<f64>, n: usize, b: usize) -> f64 {
    let nf = n as f64;
    let w = (b - 1) as f64 / b as f64;
    p.cell_probs()
        .iter()
        .map(|&pi| {
            let occ = 1.0 + (nf - 1.0) * pi;
            (1.0 - pi).powf(nf) * pi + w / (nf * occ.sqrt()) + 1.0 / (nf * occ)
        })
        .sum()
}

/// Leading terms of the ensemble MSE from independent partition pairs, with
/// every signal and noise covariance computed exactly on the space.
pub fn theorem42_leading_terms(
    space: &DiscreteSpace<f64>,
    rule: &dyn PartitionRule,
    n: usize,
    b: usize,
    mc_reps: usize,
    seed: u64,
) -> Result<Theorem42Report> {
    check_args(space, rule, n, b, mc_reps)?;
    let nf = n as f64;
    let scale = (space.sup_abs_mu() + space.sup_sigma_sq()).powi(2);
    let rows = map_indexed(mc_reps, |r| {
        let mut rng = rep_rng(seed, r);
        let p = rule.sample(space, &mut rng);
        let q = rule.sample(space, &mut rng);
        let rep = covariance_report(&p, &q, space).expect("same space");
        let eb = projection_cross(&p, &q, space).expect("same space");
        let sb = 0.5
            * (projection_cross(&p, &p, space).expect("same space")
                + projection_cross(&q, &q, space).expect("same space"));
        let cc = (rep.cov_mu + rep.cov_sigma) / nf;
        let sv = 0.5 * (rep.var_mu_left + rep.var_sigma_left + rep.var_mu_right + rep.var_sigma_right) / nf;
        let rem = 0.5 * scale * (remainder_shape(&p, n, b) + remainder_shape(&q, n, b));
        let cells = 0.5 * (p.n_cells() + q.n_cells()) as f64 / nf;
        ([eb, sb, cc, sv], rem, cells)
    });
    let terms: Vec<[f64; 4]> = rows.iter().map(|r| r.0).collect();
    let rem = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    Ok(Theorem42Report {
        breakdown: MseBreakdown::from_term_samples(&terms, b, n, rem),
        cells_over_n: Estimate::from_iter(rows.iter().map(|r| r.2)),
    })
}
