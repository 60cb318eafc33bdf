//! Empirical GMSE of population-CART trees and forests fitted to simulated
//! data, reported next to the leading terms from [`crate::theory`].

use std::collections::HashMap;

use crate::cart_process::{
    dyadic_index, sample_binary_process, sample_uniform_process, terminal_cell_binary, terminal_cell_uniform,
    BinaryState, Cell, UniformState,
};
use crate::ensemble_core::{binary_state_partition, DiscretePartition, DiscreteSpace};
use crate::error::{invalid, Error, Result};
use crate::exec::{derive_seed, map_indexed, rep_rng, Rng};
use crate::model::{generate_dataset, mean_unchecked, sample_features, Dataset, FeatureKind, ModelSpec, NoiseKind};
use crate::stats::Estimate;
use crate::theory::{remainder_bound, sample_pair_terms, ProcessKind};

pub const DEFAULT_N_TEST: usize = 256;
const REL_EPS: f64 = 1e-12;
/// Cell keys pack one bit per split, so depth is capped by the key width.
pub const MAX_EMPIRICAL_DEPTH: usize = 63;

/// Partition induced by one draw of a CART process.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationPartition {
    Binary(BinaryState),
    Uniform(UniformState),
}

impl PopulationPartition {
    pub fn depth(&self) -> usize {
        match self {
            PopulationPartition::Binary(s) => s.depth,
            PopulationPartition::Uniform(s) => s.depth,
        }
    }

    /// Every cell has mass `2^-l`.
    pub fn cell_probability(&self) -> f64 {
        (-(self.depth() as f64)).exp2()
    }

    /// Cell label of `x`, packing the split bits (binary) or the dyadic
    /// interval indices (uniform). `x` must be a valid feature vector.
    #[inline]
    pub fn cell_key(&self, x: &[f64]) -> u64 {
        match self {
            PopulationPartition::Binary(s) => s
                .indicator
                .iter()
                .zip(x)
                .filter(|(split, _)| **split)
                .fold(0u64, |k, (_, &v)| (k << 1) | (v == 1.0) as u64),
            PopulationPartition::Uniform(s) => s
                .counts
                .iter()
                .zip(x)
                .filter(|(j, _)| **j > 0)
                .fold(0u64, |k, (&j, &v)| (k << j) | (dyadic_index(v, j) - 1)),
        }
    }

    pub fn terminal_cell(&self, x: &[f64]) -> Result<Cell> {
        match self {
            PopulationPartition::Binary(s) => terminal_cell_binary(x, s),
            PopulationPartition::Uniform(s) => terminal_cell_uniform(x, s),
        }
    }

    /// The partition as explicit cells of `{0,1}^d` (binary only, small `d`).
    pub fn to_discrete(&self, space: &DiscreteSpace<f64>) -> Result<DiscretePartition<f64>> {
        match self {
            PopulationPartition::Binary(s) => binary_state_partition(space, s),
            PopulationPartition::Uniform(_) => Err(Error::WrongFeatureKind("binary")),
        }
    }
}

/// Run the CART process matching `spec`'s feature kind and return its partition.
pub fn fit_population_cart_partition(spec: &ModelSpec, gamma: f64, l: usize, rng: &mut Rng) -> Result<PopulationPartition> {
    if l > MAX_EMPIRICAL_DEPTH {
        return Err(invalid(format!("depth {l} exceeds {MAX_EMPIRICAL_DEPTH}")));
    }
    Ok(match spec.feature_kind() {
        FeatureKind::BinaryBernoulliHalf => PopulationPartition::Binary(sample_binary_process(spec, gamma, l, rng)?),
        FeatureKind::UniformUnit => PopulationPartition::Uniform(sample_uniform_process(spec, gamma, l, rng)?),
    })
}

/// Cell means of a dataset under one partition.
#[derive(Debug, Clone)]
pub struct TreeFit {
    partition: PopulationPartition,
    cells: HashMap<u64, (f64, u32)>,
}

impl TreeFit {
    pub fn fit(partition: PopulationPartition, data: &Dataset) -> Self {
        let mut cells: HashMap<u64, (f64, u32)> = HashMap::new();
        for (row, &y) in data.rows().zip(&data.y) {
            let e = cells.entry(partition.cell_key(row)).or_default();
            e.0 += y;
            e.1 += 1;
        }
        TreeFit { partition, cells }
    }

    /// Mean response in the cell of `x`, 0 for an empty cell.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.cells.get(&self.partition.cell_key(x)) {
            Some(&(s, k)) => s / k as f64,
            None => 0.0,
        }
    }

    pub fn partition(&self) -> &PopulationPartition {
        &self.partition
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    pub spec: ModelSpec,
    pub gamma: f64,
    pub depth: usize,
    pub b: usize,
    pub n: usize,
    pub n_test: usize,
    pub reps: usize,
    pub seed: u64,
    pub mse_tree_empirical: Estimate,
    pub mse_forest_empirical: Estimate,
    pub mse_tree_theory: Estimate,
    pub mse_forest_theory: Estimate,
    pub remainder_tree: f64,
    pub remainder_forest: f64,
    pub rel_err_tree: f64,
    pub rel_err_forest: f64,
    /// `2^l` is not small compared with `n`; empty cells inflate the error.
    pub sparse_cells: bool,
}

fn rel_err(emp: f64, theory: f64) -> f64 {
    (emp - theory).abs() / theory.max(REL_EPS)
}

/// Empirical GMSE of the first tree and of the `b`-tree forest. Every
/// replication draws a fresh dataset, `b` fresh partitions sharing it, and
/// `n_test` fresh test points.
#[allow(clippy::too_many_arguments)]
pub fn empirical_mse(
    spec: &ModelSpec,
    gamma: f64,
    l: usize,
    b: usize,
    n: usize,
    n_test: usize,
    mc_reps: usize,
    seed: u64,
) -> Result<EmpiricalReport> {
    if b == 0 || n == 0 || n_test == 0 || mc_reps == 0 {
        return Err(invalid("B, n, n_test and reps must all be at least 1"));
    }
    fit_population_cart_partition(spec, gamma, l, &mut rep_rng(seed, 0))?;
    let emp_seed = derive_seed(seed, &[0]);
    let d = spec.d();
    let rows = map_indexed(mc_reps, |r| {
        let mut rng = rep_rng(emp_seed, r);
        let data = generate_dataset(spec, n, NoiseKind::Gaussian, &mut rng).expect("n >= 1");
        let trees: Vec<TreeFit> = (0..b)
            .map(|_| TreeFit::fit(fit_population_cart_partition(spec, gamma, l, &mut rng).expect("validated"), &data))
            .collect();
        let mut x = vec![0.0; d];
        let (mut tree_se, mut forest_se) = (0.0, 0.0);
        for _ in 0..n_test {
            sample_features(spec.feature_kind(), &mut x, &mut rng);
            let mu = mean_unchecked(spec, &x);
            let preds: Vec<f64> = trees.iter().map(|t| t.predict(&x)).collect();
            let forest = preds.iter().sum::<f64>() / b as f64;
            tree_se += (mu - preds[0]).powi(2);
            forest_se += (mu - forest).powi(2);
        }
        (tree_se / n_test as f64, forest_se / n_test as f64)
    });
    let tree_emp = Estimate::from_iter(rows.iter().map(|r| r.0));
    let forest_emp = Estimate::from_iter(rows.iter().map(|r| r.1));

    let kind = ProcessKind::of(spec.feature_kind());
    let pairs = sample_pair_terms(kind, spec, gamma, l, n, mc_reps, derive_seed(seed, &[1]))?;
    let tree_th = Estimate::from_iter(pairs.iter().map(|p| p.total_leading(1)));
    let forest_th = Estimate::from_iter(pairs.iter().map(|p| p.total_leading(b)));

    Ok(EmpiricalReport {
        spec: spec.clone(),
        gamma,
        depth: l,
        b,
        n,
        n_test,
        reps: mc_reps,
        seed,
        mse_tree_empirical: tree_emp,
        mse_forest_empirical: forest_emp,
        mse_tree_theory: tree_th,
        mse_forest_theory: forest_th,
        remainder_tree: remainder_bound(l, n, 1),
        remainder_forest: remainder_bound(l, n, b),
        rel_err_tree: rel_err(tree_emp.mean, tree_th.mean),
        rel_err_forest: rel_err(forest_emp.mean, forest_th.mean),
        sparse_cells: (l as f64).exp2() * 10.0 > n as f64,
    })
}
