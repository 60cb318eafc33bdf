use std::collections::BTreeMap;

use super::partition::DiscretePartition;
use super::scalar::Scalar;
use super::space::DiscreteSpace;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    Mu,
    Sigma,
    Plain,
}

/// Plain, signal and noise covariances of two partitions together with the
/// matching single-partition variances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport<T: Scalar = f64> {
    pub cov_plain: T,
    pub cov_mu: T,
    pub cov_sigma: T,
    pub var_left: T,
    pub var_right: T,
    pub var_mu_left: T,
    pub var_mu_right: T,
    pub var_sigma_left: T,
    pub var_sigma_right: T,
    pub corr: f64,
}

#[derive(Clone)]
struct Acc<T> {
    w: T,
    mu: T,
    sigma: T,
}

fn check_same_space<T: Scalar>(space: &DiscreteSpace<T>, ps: &[&DiscretePartition<T>]) -> Result<()> {
    for p in ps {
        if p.n_atoms() != space.n_atoms() {
            return Err(Error::DimensionMismatch { expected: space.n_atoms(), got: p.n_atoms() });
        }
    }
    Ok(())
}

/// Per intersection `P_i ∩ P'_j`: its mass, `Σ w (mu - m_i)(mu - m'_j)` and
/// `Σ w sigma²`, keyed by `(i, j)` in a fixed order.
fn intersections<T: Scalar>(
    p: &DiscretePartition<T>,
    q: &DiscretePartition<T>,
    space: &DiscreteSpace<T>,
) -> BTreeMap<(usize, usize), Acc<T>> {
    let mp = p.cell_means(space);
    let mq = q.cell_means(space);
    let mut out: BTreeMap<(usize, usize), Acc<T>> = BTreeMap::new();
    for a in 0..space.n_atoms() {
        let (i, j) = (p.cell_of(a), q.cell_of(a));
        let w = space.prob(a).clone();
        let mu = space.mu(a).clone();
        let dev = (mu.clone() - mp[i].clone()) * (mu - mq[j].clone());
        let e = out.entry((i, j)).or_insert_with(|| Acc { w: T::zero(), mu: T::zero(), sigma: T::zero() });
        e.w = e.w.clone() + w.clone();
        e.mu = e.mu.clone() + w.clone() * dev;
        e.sigma = e.sigma.clone() + w * space.sigma_sq(a).clone();
    }
    out
}

/// `(plain, mu, sigma)` cross-partition covariances.
fn triple<T: Scalar>(p: &DiscretePartition<T>, q: &DiscretePartition<T>, space: &DiscreteSpace<T>) -> (T, T, T) {
    let mut plain = T::zero();
    let mut mu = T::zero();
    let mut sigma = T::zero();
    for ((i, j), acc) in intersections(p, q, space) {
        let denom = p.cell_prob(i).clone() * q.cell_prob(j).clone();
        // E[f | ∩] P(∩)² / (P_i P'_j) = (Σ_∩ w f) P(∩) / (P_i P'_j)
        plain = plain + acc.w.clone() * acc.w.clone() / denom.clone();
        mu = mu + acc.mu * acc.w.clone() / denom.clone();
        sigma = sigma + acc.sigma * acc.w / denom;
    }
    (plain, mu, sigma)
}

/// `Cov(P, P') = Σ_{i,j} P(P_i ∩ P'_j)² / (P(P_i) P(P'_j))`.
pub fn cross_partition_cov<T: Scalar>(
    p: &DiscretePartition<T>,
    q: &DiscretePartition<T>,
    space: &DiscreteSpace<T>,
) -> Result<T> {
    check_same_space(space, &[p, q])?;
    if p == q {
        return Ok(T::from_usize(p.n_cells()).expect("cell count fits"));
    }
    Ok(triple(p, q, space).0)
}

pub fn signal_cov<T: Scalar>(p: &DiscretePartition<T>, q: &DiscretePartition<T>, space: &DiscreteSpace<T>) -> Result<T> {
    check_same_space(space, &[p, q])?;
    Ok(triple(p, q, space).1)
}

pub fn error_cov<T: Scalar>(p: &DiscretePartition<T>, q: &DiscretePartition<T>, space: &DiscreteSpace<T>) -> Result<T> {
    check_same_space(space, &[p, q])?;
    Ok(triple(p, q, space).2)
}

/// `Σ_i Var(mu | P_i)`.
pub fn signal_var<T: Scalar>(p: &DiscretePartition<T>, space: &DiscreteSpace<T>) -> Result<T> {
    signal_cov(p, p, space)
}

/// `Σ_i E(sigma² | P_i)`.
pub fn error_var<T: Scalar>(p: &DiscretePartition<T>, space: &DiscreteSpace<T>) -> Result<T> {
    error_cov(p, p, space)
}

pub fn covariance_report<T: Scalar>(
    p: &DiscretePartition<T>,
    q: &DiscretePartition<T>,
    space: &DiscreteSpace<T>,
) -> Result<CovarianceReport<T>> {
    check_same_space(space, &[p, q])?;
    let (cov_plain, cov_mu, cov_sigma) = triple(p, q, space);
    let (_, var_mu_left, var_sigma_left) = triple(p, p, space);
    let (_, var_mu_right, var_sigma_right) = triple(q, q, space);
    let var_left = T::from_usize(p.n_cells()).expect("cell count fits");
    let var_right = T::from_usize(q.n_cells()).expect("cell count fits");
    let corr = cov_plain.to_f64_lossy() / (var_left.to_f64_lossy() * var_right.to_f64_lossy()).sqrt();
    Ok(CovarianceReport {
        cov_plain,
        cov_mu,
        cov_sigma,
        var_left,
        var_right,
        var_mu_left,
        var_mu_right,
        var_sigma_left,
        var_sigma_right,
        corr,
    })
}

/// Local covariance at the atom `x0`: with `A ∋ x0` in `p` and `A' ∋ x0` in `q`,
/// the chosen moment over `A ∩ A'` times `P(A ∩ A') / (P(A) P(A'))`.
pub fn local_cov<T: Scalar>(
    p: &DiscretePartition<T>,
    q: &DiscretePartition<T>,
    x0: usize,
    space: &DiscreteSpace<T>,
    kind: CovKind,
) -> Result<T> {
    check_same_space(space, &[p, q])?;
    if x0 >= space.n_atoms() {
        return Err(invalid(format!("atom {x0} is not in the space")));
    }
    let (ci, cj) = (p.cell_of(x0), q.cell_of(x0));
    let denom = p.cell_prob(ci).clone() * q.cell_prob(cj).clone();
    let (mi, mj) = match kind {
        CovKind::Mu => (p.cell_means(space)[ci].clone(), q.cell_means(space)[cj].clone()),
        _ => (T::zero(), T::zero()),
    };
    let mut num = T::zero();
    for a in (0..space.n_atoms()).filter(|&a| p.cell_of(a) == ci && q.cell_of(a) == cj) {
        let w = space.prob(a).clone();
        let f = match kind {
            CovKind::Plain => T::one(),
            CovKind::Sigma => space.sigma_sq(a).clone(),
            CovKind::Mu => {
                let mu = space.mu(a).clone();
                (mu.clone() - mi.clone()) * (mu - mj.clone())
            }
        };
        num = num + w * f;
    }
    Ok(num / denom)
}

/// `E_X[(mu - mu_P)(mu - mu_P')]`; with `p == q` the projection error of `p`.
pub fn projection_cross<T: Scalar>(p: &DiscretePartition<T>, q: &DiscretePartition<T>, space: &DiscreteSpace<T>) -> Result<T> {
    check_same_space(space, &[p, q])?;
    let mp = p.cell_means(space);
    let mq = q.cell_means(space);
    let mut total = T::zero();
    for a in 0..space.n_atoms() {
        let mu = space.mu(a).clone();
        total = total
            + space.prob(a).clone() * (mu.clone() - mp[p.cell_of(a)].clone()) * (mu - mq[q.cell_of(a)].clone());
    }
    Ok(total)
}
