use super::covariance::{cross_partition_cov, projection_cross};
use super::rules::PartitionRule;
use super::space::DiscreteSpace;
use crate::error::{invalid, Result};
use crate::exec::{derive_seed, map_indexed, rep_rng};
use crate::stats::Estimate;

/// One point of a consistency schedule.
pub struct DiagnosticStep<'a> {
    pub space: &'a DiscreteSpace<f64>,
    pub rule: &'a dyn PartitionRule,
    pub n: usize,
}

/// Tree quantities `E[(mu - mu_P)^2]`, `E|P|/n` and forest quantities
/// `E[(mu - E_Theta mu_P)^2]`, `E[Cov(P,P')]/n` at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub n: usize,
    pub tree_projection_error: Estimate,
    pub cells_over_n: Estimate,
    pub forest_projection_error: Estimate,
    pub cov_over_n: Estimate,
}

/// Evaluate the four quantities for each step from `reps` independent
/// partition pairs. Tree quantities average over both members of a pair.
pub fn consistency_diagnostic(schedule: &[DiagnosticStep<'_>], reps: usize, seed: u64) -> Result<Vec<ConsistencyRow>> {
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let mut out = Vec::with_capacity(schedule.len());
    for (k, step) in schedule.iter().enumerate() {
        if step.n == 0 {
            return Err(invalid("sample size n must be at least 1"));
        }
        step.rule.validate(step.space)?;
        let sp = step.space;
        let nf = step.n as f64;
        let step_seed = derive_seed(seed, &[k as u64]);
        let rows = map_indexed(reps, |r| {
            let mut rng = rep_rng(step_seed, r);
            let p = step.rule.sample(sp, &mut rng);
            let q = step.rule.sample(sp, &mut rng);
            let proj = 0.5 * (projection_cross(&p, &p, sp).expect("same space") + projection_cross(&q, &q, sp).expect("same space"));
            let cells = 0.5 * (p.n_cells() + q.n_cells()) as f64 / nf;
            let forest = projection_cross(&p, &q, sp).expect("same space");
            let cov = cross_partition_cov(&p, &q, sp).expect("same space") / nf;
            [proj, cells, forest, cov]
        });
        let col = |i: usize| Estimate::from_iter(rows.iter().map(|r| r[i]));
        out.push(ConsistencyRow {
            n: step.n,
            tree_projection_error: col(0),
            cells_over_n: col(1),
            forest_projection_error: col(2),
            cov_over_n: col(3),
        });
    }
    Ok(out)
}
