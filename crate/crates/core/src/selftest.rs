//! Fast invariant suites run by `exoforest selftest`.

use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use rand::Rng as _;

use crate::cart_process::{subsample_avoid_prob, w_function};
use crate::ensemble_core::{covariance_report, cross_partition_cov, le_sqrt_product, ratio, DiscretePartition, DiscreteSpace};
use crate::exec::{parallel_enabled, rng_from_seed, set_parallel, Rng};
use crate::model::{FeatureKind, ModelSpec};
use crate::moments::{empirical_constants, oracle_grid};
use crate::theory::exact::{binary_mse_exact, uniform_mse_exact};
use crate::theory::{
    cross_tree_correlation, mse_terms, perf_measures, sample_pair_terms, MseBreakdown, ProcessKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn suite(name: &'static str, check: impl FnOnce() -> Result<String, String>) -> SuiteResult {
    match check() {
        Ok(detail) => SuiteResult { name, passed: true, detail },
        Err(detail) => SuiteResult { name, passed: false, detail },
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: crate::Error) -> String {
    e.to_string()
}

fn fixed_points() -> Result<String, String> {
    let spec = ModelSpec::config_i(FeatureKind::BinaryBernoulliHalf);
    let m = perf_measures(ProcessKind::Binary, &spec, 1.0, 5, 100, 1000, 200, 1).map_err(e2s)?;
    ensure(
        m.sq_bias_forest.mean == 0.0 && m.unsplit_or_diag_forest.mean == 0.0 && m.corr_forest.mean == 1.0,
        || format!("depth-5 forest measures {m:?}"),
    )?;
    Ok("binary config I, gamma=1, l=5: bias 0, correlation 1".into())
}

fn determinism() -> Result<String, String> {
    for (kind, max_l) in [(ProcessKind::Uniform, 9), (ProcessKind::Binary, 5)] {
        let spec = ModelSpec::config_ii(kind.feature_kind());
        for l in 1..=max_l {
            let pairs = sample_pair_terms(kind, &spec, 1.0, l, 1000, 100, 2).map_err(e2s)?;
            let same = pairs
                .iter()
                .all(|p| p.ensemble_sq_bias == p.single_sq_bias && p.cross_tree_cov == p.single_tree_var);
            ensure(same, || format!("{kind:?} l={l}: trees differ at gamma=1"))?;
        }
    }
    Ok("config II, gamma=1: tree and forest terms coincide".into())
}

fn dominance() -> Result<String, String> {
    let mut checked = 0;
    for fk in [FeatureKind::BinaryBernoulliHalf, FeatureKind::UniformUnit] {
        let spec = ModelSpec::config_i(fk);
        for gamma in [0.1, 0.3, 0.6, 1.0] {
            for l in [1, 4, 7] {
                let pairs = sample_pair_terms(ProcessKind::of(fk), &spec, gamma, l, 1000, 100, 3).map_err(e2s)?;
                let bad = pairs
                    .iter()
                    .filter(|p| p.ensemble_sq_bias > p.single_sq_bias || p.cross_tree_cov > p.single_tree_var)
                    .count();
                ensure(bad == 0, || format!("{fk:?} gamma={gamma} l={l}: {bad} violations"))?;
                checked += pairs.len();
            }
        }
    }
    Ok(format!("{checked} realizations"))
}

fn exact_vs_monte_carlo() -> Result<String, String> {
    let spec = ModelSpec::new(8, vec![1.0, 0.7, 0.4], 1.0, FeatureKind::BinaryBernoulliHalf).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for (kind, exact) in [
        (ProcessKind::Binary, binary_mse_exact(&spec, 0.5, 3, 10, 500).map_err(e2s)?),
        (ProcessKind::Uniform, uniform_mse_exact(&spec.with_feature_kind(FeatureKind::UniformUnit), 0.5, 3, 10, 500).map_err(e2s)?),
    ] {
        let s = spec.with_feature_kind(kind.feature_kind());
        let mc = mse_terms(kind, &s, 0.5, 3, 10, 500, 4000, 5).map_err(e2s)?;
        let z = |e: f64, m: f64, se: f64| (e - m).abs() / (se + 1e-12 * e.abs().max(1e-3));
        for (e, m, se) in [
            (exact.ensemble_sq_bias, mc.ensemble_sq_bias, mc.mc_se.ensemble_sq_bias),
            (exact.single_sq_bias, mc.single_sq_bias, mc.mc_se.single_sq_bias),
            (exact.cross_tree_cov, mc.cross_tree_cov, mc.mc_se.cross_tree_cov),
            (exact.single_tree_var, mc.single_tree_var, mc.mc_se.single_tree_var),
        ] {
            worst = worst.max(z(e, m, se));
        }
    }
    ensure(worst <= 4.0, || format!("Monte Carlo off the exact expectation by {worst:.2} se"))?;
    Ok(format!("largest deviation {worst:.2} se"))
}

fn correlation_tail() -> Result<String, String> {
    let spec = ModelSpec::config_i(FeatureKind::BinaryBernoulliHalf);
    let c = cross_tree_correlation(ProcessKind::Binary, &spec, 1.0, 6, 4000, 6).map_err(e2s)?;
    let exact = 0.5 * (94.0 / 95.0) + 1.0 / 95.0;
    ensure((c.mean - exact).abs() <= 4.0 * c.se, || format!("l=6 correlation {} vs {exact}", c.mean))?;
    Ok(format!("l=6 correlation {:.5} (exact {exact:.5})", c.mean))
}

fn subsample_w() -> Result<String, String> {
    for (d, gamma) in [(10, 0.3), (100, 0.1), (100, 0.5)] {
        for i in 0..=d {
            let q = subsample_avoid_prob(d, gamma, i).map_err(e2s)?;
            if let Ok(w) = w_function(d, gamma, i as f64) {
                ensure((q - w).abs() < 1e-12, || format!("q_{i} = {q} but W({i}) = {w} (d={d}, gamma={gamma})"))?;
            }
        }
    }
    Ok("W matches q at integer arguments".into())
}

fn random_rational_instance(rng: &mut Rng) -> (DiscreteSpace<BigRational>, Vec<u64>, Vec<u64>) {
    let dim = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..dim).map(|_| rng.random_range(1..=3)).collect();
    let probs: Vec<Vec<BigRational>> = sizes
        .iter()
        .map(|&k| {
            let w: Vec<i64> = (0..k).map(|_| rng.random_range(1..=5)).collect();
            let tot: i64 = w.iter().sum();
            w.iter().map(|&x| ratio(x, tot)).collect()
        })
        .collect();
    let n_atoms: usize = sizes.iter().product();
    let mu: Vec<i64> = (0..n_atoms).map(|_| rng.random_range(-3..=3)).collect();
    let s2: Vec<i64> = (0..n_atoms).map(|_| rng.random_range(1..=3)).collect();
    let lp = (0..n_atoms).map(|_| rng.random_range(0..3)).collect();
    let lq = (0..n_atoms).map(|_| rng.random_range(0..3)).collect();
    let supports = sizes.iter().map(|&k| (0..k).map(|v| v as f64).collect()).collect();
    let idx = move |x: &[f64]| -> usize {
        let mut a = 0;
        let mut stride = 1;
        for (v, k) in x.iter().zip(&sizes) {
            a += *v as usize * stride;
            stride *= k;
        }
        a
    };
    let idx2 = idx.clone();
    let sp = DiscreteSpace::new(supports, probs, move |x| ratio(mu[idx(x)], 1), move |x| ratio(s2[idx2(x)], 1))
        .expect("valid random space");
    (sp, lp, lq)
}

fn cauchy_schwarz() -> Result<String, String> {
    let mut rng = rng_from_seed(7);
    let reps = 200;
    for k in 0..reps {
        let (sp, lp, lq) = random_rational_instance(&mut rng);
        let p = DiscretePartition::from_labels(&sp, &lp).map_err(e2s)?;
        let q = DiscretePartition::from_labels(&sp, &lq).map_err(e2s)?;
        let r = covariance_report(&p, &q, &sp).map_err(e2s)?;
        let ok = r.cov_plain >= BigRational::zero()
            && le_sqrt_product(&r.cov_plain, &r.var_left, &r.var_right)
            && le_sqrt_product(&r.cov_mu, &r.var_mu_left, &r.var_mu_right)
            && le_sqrt_product(&r.cov_sigma, &r.var_sigma_left, &r.var_sigma_right)
            && cross_partition_cov(&p, &p, &sp).map_err(e2s)? == BigRational::from_usize(p.n_cells()).expect("small");
        ensure(ok, || format!("instance {k} violates a covariance inequality"))?;
    }
    Ok(format!("{reps} exact instances"))
}

fn lemma_grid() -> Result<String, String> {
    let rows = oracle_grid(&[5, 10]).map_err(e2s)?;
    let consts = empirical_constants(&rows);
    for c in &consts {
        ensure(c.sign_violations == 0, || format!("{}: {} sign violations", c.lemma, c.sign_violations))?;
        ensure(c.sup_gap_ratio <= 50.0 && c.sup_remainder_ratio <= 50.0, || {
            format!("{}: constants {} / {}", c.lemma, c.sup_gap_ratio, c.sup_remainder_ratio)
        })?;
    }
    Ok(format!("{} grid points", rows.len()))
}

fn worker_invariance() -> Result<String, String> {
    let spec = ModelSpec::config_ii(FeatureKind::UniformUnit);
    let run = || -> Result<MseBreakdown, String> { mse_terms(ProcessKind::Uniform, &spec, 0.4, 6, 100, 1000, 300, 11).map_err(e2s) };
    let was = parallel_enabled();
    set_parallel(false);
    let seq = run();
    set_parallel(true);
    let par = run();
    set_parallel(was);
    ensure(seq? == par?, || "sequential and parallel runs differ".into())?;
    Ok("sequential and parallel runs are bit-identical".into())
}

/// Run every suite; all must pass on a correct build.
pub fn run_all() -> Vec<SuiteResult> {
    vec![
        suite("depth-five fixed points", fixed_points),
        suite("gamma=1 determinism", determinism),
        suite("forest dominance", dominance),
        suite("exact enumeration vs Monte Carlo", exact_vs_monte_carlo),
        suite("correlation tail", correlation_tail),
        suite("subsample avoidance W", subsample_w),
        suite("covariance inequalities", cauchy_schwarz),
        suite("inverse-moment lemmas", lemma_grid),
        suite("worker-count invariance", worker_invariance),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for r in run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn failures_are_reported() {
        let r = suite("x", || Err("boom".into()));
        assert!(!r.passed);
        assert_eq!(r.detail, "boom");
    }
}
