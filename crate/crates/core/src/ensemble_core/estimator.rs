use super::partition::DiscretePartition;
use super::scalar::Scalar;
use super::space::DiscreteSample;
use crate::error::{invalid, Error, Result};

/// Cell-wise response sums and counts of a sample under one partition.
#[derive(Debug, Clone)]
pub struct CellMeans {
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl CellMeans {
    pub fn fit<T: Scalar>(sample: &DiscreteSample, p: &DiscretePartition<T>) -> Self {
        let mut sum = vec![0.0; p.n_cells()];
        let mut count = vec![0; p.n_cells()];
        for (&a, &y) in sample.atoms.iter().zip(&sample.y) {
            let c = p.cell_of(a);
            sum[c] += y;
            count[c] += 1;
        }
        CellMeans { sum, count }
    }

    /// Mean response in `cell`; `0/0 = 0`.
    pub fn cell_value(&self, cell: usize) -> f64 {
        if self.count[cell] == 0 {
            0.0
        } else {
            self.sum[cell] / self.count[cell] as f64
        }
    }

    pub fn count(&self, cell: usize) -> u32 {
        self.count[cell]
    }
}

fn check_atom<T: Scalar>(p: &DiscretePartition<T>, x: usize) -> Result<()> {
    if x >= p.n_atoms() {
        return Err(invalid(format!("atom {x} is not in the space")));
    }
    Ok(())
}

/// Partitioning estimate at atom `x`: mean response over training points in
/// the cell of `x`, or 0 when that cell holds none.
pub fn partition_estimate<T: Scalar>(sample: &DiscreteSample, p: &DiscretePartition<T>, x: usize) -> Result<f64> {
    check_atom(p, x)?;
    if let Some(&a) = sample.atoms.iter().find(|&&a| a >= p.n_atoms()) {
        return Err(Error::InvalidArgument(format!("sample atom {a} is not in the space")));
    }
    let c = p.cell_of(x);
    let (mut s, mut k) = (0.0, 0usize);
    for (&a, &y) in sample.atoms.iter().zip(&sample.y) {
        if p.cell_of(a) == c {
            s += y;
            k += 1;
        }
    }
    Ok(if k == 0 { 0.0 } else { s / k as f64 })
}

/// Average of the partitioning estimates over `partitions`.
pub fn ensemble_estimate<T: Scalar>(sample: &DiscreteSample, partitions: &[DiscretePartition<T>], x: usize) -> Result<f64> {
    if partitions.is_empty() {
        return Err(invalid("ensemble needs at least one partition"));
    }
    let mut total = 0.0;
    for p in partitions {
        total += partition_estimate(sample, p, x)?;
    }
    Ok(total / partitions.len() as f64)
}
