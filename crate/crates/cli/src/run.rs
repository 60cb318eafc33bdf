//! One function per subcommand. Grid cells are evaluated through
//! `exec::map_indexed`; cell `(k, i, j)` (feature kind, gamma index, depth
//! index) draws its replications from `derive_seed(master_seed, [k, i, j])`.

use exoforest::exec::{derive_seed, map_indexed};
use exoforest::mc_harness::empirical_mse;
use exoforest::model::{FeatureKind, ModelSpec};
use exoforest::moments::{oracle_grid, OracleRow};
use exoforest::selftest::{run_all, SuiteResult};
use exoforest::stats::Estimate;
use exoforest::theory::{
    convergence_bound, remainder_bound, sample_pair_terms, MseBreakdown, PerfMeasures, ProcessKind,
};

use crate::config::ExperimentConfig;
use crate::output::{check_finite, format_sig, sort_rows, GridRow};
use crate::CliError;

struct Cell<'a> {
    spec: &'a ModelSpec,
    gamma: f64,
    depth: usize,
    seed: u64,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell<'_>> {
    let mut out = Vec::new();
    for (k, spec) in cfg.specs.iter().enumerate() {
        for (i, &gamma) in cfg.gammas.iter().enumerate() {
            for (j, &depth) in cfg.depths.iter().enumerate() {
                let seed = derive_seed(cfg.master_seed, &[k as u64, i as u64, j as u64]);
                out.push(Cell { spec, gamma, depth, seed });
            }
        }
    }
    out
}

fn run_grid<F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<GridRow>, CliError>
where
    F: Fn(&Cell<'_>, &dyn Fn(&'static str, [Option<f64>; 4]) -> GridRow) -> Result<Vec<GridRow>, CliError> + Sync,
{
    let cells = cells(cfg);
    let results = map_indexed(cells.len(), |c| {
        let cell = &cells[c];
        let make = |measure: &'static str, v: [Option<f64>; 4]| GridRow {
            kind: cell.spec.feature_kind().short_name(),
            config: cfg.config_name.clone(),
            gamma: cell.gamma,
            depth: cell.depth,
            b: cfg.b,
            n: cfg.n,
            measure,
            tree_value: v[0],
            forest_value: v[1],
            tree_se: v[2],
            forest_se: v[3],
            reps: cfg.reps,
            seed: cfg.master_seed,
        };
        f(cell, &make)
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn est(tree: Estimate, forest: Estimate) -> [Option<f64>; 4] {
    [Some(tree.mean), Some(forest.mean), Some(tree.se), Some(forest.se)]
}

fn runtime(e: exoforest::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn pairs(cfg: &ExperimentConfig, cell: &Cell<'_>) -> Result<Vec<exoforest::theory::PairTerms>, CliError> {
    let kind = ProcessKind::of(cell.spec.feature_kind());
    sample_pair_terms(kind, cell.spec, cell.gamma, cell.depth, cfg.n, cfg.reps, cell.seed).map_err(runtime)
}

/// Performance measures (a)-(f).
pub fn measures(cfg: &ExperimentConfig) -> Result<Vec<GridRow>, CliError> {
    cfg.check_depths(false)?;
    run_grid(cfg, |cell, row| {
        let m = PerfMeasures::from_pairs(&pairs(cfg, cell)?, cfg.b);
        let signal = match cell.spec.feature_kind() {
            FeatureKind::BinaryBernoulliHalf => "unsplit_signals",
            FeatureKind::UniformUnit => "diag_signal_sq",
        };
        Ok(vec![
            row("sq_bias", est(m.sq_bias_tree, m.sq_bias_forest)),
            row(signal, est(m.unsplit_or_diag_tree, m.unsplit_or_diag_forest)),
            row("variance", est(m.var_tree, m.cov_forest)),
            row("correlation", est(m.corr_tree, m.corr_forest)),
            row("shared_splits", est(m.shared_splits_tree, m.shared_splits_forest)),
            row("mse", est(m.mse_tree, m.mse_forest)),
        ])
    })
}

/// Leading MSE terms for one tree (`B = 1`) and for the configured forest.
pub fn theory(cfg: &ExperimentConfig) -> Result<Vec<GridRow>, CliError> {
    cfg.check_depths(false)?;
    run_grid(cfg, |cell, row| {
        let p = pairs(cfg, cell)?;
        let tree = MseBreakdown::from_pairs(&p, 1, cfg.n, cell.depth);
        let forest = MseBreakdown::from_pairs(&p, cfg.b, cfg.n, cell.depth);
        let pair = |t: f64, f: f64, ts: f64, fs: f64| [Some(t), Some(f), Some(ts), Some(fs)];
        Ok(vec![
            row(
                "sq_bias",
                pair(tree.single_sq_bias, forest.ensemble_sq_bias, tree.mc_se.single_sq_bias, forest.mc_se.ensemble_sq_bias),
            ),
            row(
                "variance",
                pair(tree.single_tree_var, forest.cross_tree_cov, tree.mc_se.single_tree_var, forest.mc_se.cross_tree_cov),
            ),
            row(
                "total_leading",
                pair(tree.total_leading, forest.total_leading, tree.mc_se.total_leading, forest.mc_se.total_leading),
            ),
            row("remainder_bound", [Some(tree.remainder_bound), Some(forest.remainder_bound), None, None]),
        ])
    })
}

/// Simulated GMSE next to the leading terms.
pub fn empirical(cfg: &ExperimentConfig) -> Result<Vec<GridRow>, CliError> {
    cfg.check_depths(true)?;
    run_grid(cfg, |cell, row| {
        let r = empirical_mse(cell.spec, cell.gamma, cell.depth, cfg.b, cfg.n, cfg.n_test, cfg.reps, cell.seed)
            .map_err(runtime)?;
        Ok(vec![
            row("mse_empirical", est(r.mse_tree_empirical, r.mse_forest_empirical)),
            row("mse_theory", est(r.mse_tree_theory, r.mse_forest_theory)),
            row("remainder_bound", [Some(r.remainder_tree), Some(r.remainder_forest), None, None]),
            row("rel_err", [Some(r.rel_err_tree), Some(r.rel_err_forest), None, None]),
        ])
    })
}

/// Convergence-rate bound beside the single-tree leading MSE it controls.
pub fn bound(cfg: &ExperimentConfig) -> Result<Vec<GridRow>, CliError> {
    cfg.check_depths(false)?;
    run_grid(cfg, |cell, row| {
        let b = convergence_bound(cell.spec, cell.gamma, cell.depth, cfg.n).map_err(runtime)?;
        let tree = MseBreakdown::from_pairs(&pairs(cfg, cell)?, 1, cfg.n, cell.depth);
        Ok(vec![
            row("convergence_bound", [Some(b), None, Some(0.0), None]),
            row("total_leading", [Some(tree.total_leading), None, Some(tree.mc_se.total_leading), None]),
            row("remainder_bound", [Some(remainder_bound(cell.depth, cfg.n, 1)), None, None, None]),
        ])
    })
}

pub const LEMMA_HEADER: [&str; 13] = [
    "lemma", "n", "params", "exact", "leading", "gap", "bound_shape", "ratio", "second_order", "remainder", "gap_shape",
    "gap_ratio", "sign_holds",
];

/// Exact inverse moments against the lemma expansions. `gap` is
/// `exact - leading`; `ratio` is `|exact - expansion| / bound_shape`.
pub fn lemmas(cfg: &ExperimentConfig) -> Result<Vec<Vec<String>>, CliError> {
    let rows = oracle_grid(&cfg.lemma_n).map_err(runtime)?;
    let digits = cfg.precision;
    let num = |x: Option<f64>| x.map(|v| format_sig(v, digits)).unwrap_or_default();
    check_finite(rows.iter().flat_map(|r: &OracleRow| {
        let e = &r.expansion;
        [e.exact, Some(e.leading), e.gap(), Some(e.bound_shape), e.remainder_ratio(), e.second_order]
            .into_iter()
            .flatten()
            .map(move |v| (r.lemma, v))
    }))?;
    Ok(rows
        .iter()
        .map(|r| {
            let e = &r.expansion;
            vec![
                r.lemma.to_string(),
                r.n.to_string(),
                r.params.clone(),
                num(e.exact),
                num(Some(e.leading)),
                num(e.gap()),
                num(Some(e.bound_shape)),
                num(e.remainder_ratio()),
                num(e.second_order),
                num(e.remainder()),
                num(Some(e.gap_shape)),
                num(e.gap_ratio()),
                e.sign_holds().to_string(),
            ]
        })
        .collect())
}

pub fn selftest() -> Vec<SuiteResult> {
    run_all()
}
