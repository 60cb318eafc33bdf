use super::scalar::Scalar;
use super::space::DiscreteSpace;
use crate::error::{invalid, Error, Result};

/// Partition of a discrete space into nonempty cells.
///
/// Cells are numbered `0..n_cells()` in order of their smallest atom, so two
/// partitions with the same cells compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePartition<T: Scalar = f64> {
    labels: Vec<u32>,
    cell_prob: Vec<T>,
}

impl<T: Scalar> DiscretePartition<T> {
    /// Partition whose cells are the level sets of `labels` (one per atom).
    pub fn from_labels(space: &DiscreteSpace<T>, labels: &[u64]) -> Result<Self> {
        if labels.len() != space.n_atoms() {
            return Err(Error::DimensionMismatch { expected: space.n_atoms(), got: labels.len() });
        }
        let mut remap = std::collections::HashMap::new();
        let mut compact = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = remap.len() as u32;
            compact.push(*remap.entry(l).or_insert(next));
        }
        Ok(Self::build(space, compact, remap.len()))
    }

    /// Partition from explicit cells given as atom lists.
    pub fn from_cells(space: &DiscreteSpace<T>, cells: &[Vec<usize>]) -> Result<Self> {
        let n = space.n_atoms();
        let mut labels = vec![u64::MAX; n];
        for (c, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(invalid(format!("cell {c} is empty")));
            }
            for &a in cell {
                if a >= n {
                    return Err(invalid(format!("atom {a} out of range (space has {n})")));
                }
                if labels[a] != u64::MAX {
                    return Err(invalid(format!("atom {a} lies in two cells")));
                }
                labels[a] = c as u64;
            }
        }
        if let Some(a) = labels.iter().position(|&l| l == u64::MAX) {
            return Err(invalid(format!("atom {a} is not covered")));
        }
        Self::from_labels(space, &labels)
    }

    /// The one-cell partition.
    pub fn trivial(space: &DiscreteSpace<T>) -> Self {
        Self::build(space, vec![0; space.n_atoms()], 1)
    }

    /// Every atom in its own cell.
    pub fn discrete(space: &DiscreteSpace<T>) -> Self {
        let n = space.n_atoms();
        Self::build(space, (0..n as u32).collect(), n)
    }

    /// Partition generated by the coordinates in `coords`: atoms share a
    /// cell when they agree on all of them.
    pub fn by_coordinates(space: &DiscreteSpace<T>, coords: &[usize]) -> Result<Self> {
        if let Some(&j) = coords.iter().find(|&&j| j >= space.dim()) {
            return Err(invalid(format!("coordinate {j} out of range")));
        }
        let labels: Vec<u64> = (0..space.n_atoms())
            .map(|a| {
                coords.iter().fold(0u64, |acc, &j| {
                    acc * space.supports()[j].len() as u64 + space.coord_index(a, j) as u64
                })
            })
            .collect();
        Self::from_labels(space, &labels)
    }

    fn build(space: &DiscreteSpace<T>, labels: Vec<u32>, n_cells: usize) -> Self {
        let mut cell_prob = vec![T::zero(); n_cells];
        for (a, &c) in labels.iter().enumerate() {
            cell_prob[c as usize] = cell_prob[c as usize].clone() + space.prob(a).clone();
        }
        DiscretePartition { labels, cell_prob }
    }

    pub fn n_cells(&self) -> usize {
        self.cell_prob.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn cell_of(&self, atom: usize) -> usize {
        self.labels[atom] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn cell_prob(&self, cell: usize) -> &T {
        &self.cell_prob[cell]
    }

    pub fn cell_probs(&self) -> &[T] {
        &self.cell_prob
    }

    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_cells()];
        for (a, &c) in self.labels.iter().enumerate() {
            out[c as usize].push(a);
        }
        out
    }

    /// Whether every cell of `self` is contained in a cell of `other`.
    pub fn refines(&self, other: &Self) -> bool {
        let mut image = vec![u32::MAX; self.n_cells()];
        for (a, &c) in self.labels.iter().enumerate() {
            let o = other.labels[a];
            let slot = &mut image[c as usize];
            if *slot == u32::MAX {
                *slot = o;
            } else if *slot != o {
                return false;
            }
        }
        true
    }

    /// Same cells, up to null sets. Every atom has positive mass, so this is
    /// equality of the cell systems.
    pub fn indistinguishable(&self, other: &Self) -> bool {
        self.labels.len() == other.labels.len() && self.refines(other) && other.refines(self)
    }

    /// `E[mu | cell]` for every cell.
    pub fn cell_means(&self, space: &DiscreteSpace<T>) -> Vec<T> {
        let mut mass = vec![T::zero(); self.n_cells()];
        for a in 0..self.n_atoms() {
            let c = self.cell_of(a);
            mass[c] = mass[c].clone() + space.prob(a).clone() * space.mu(a).clone();
        }
        mass.into_iter().zip(&self.cell_prob).map(|(m, p)| m / p.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble_core::scalar::ratio;
    use num_rational::BigRational;

    fn grid() -> DiscreteSpace<f64> {
        DiscreteSpace::new(
            vec![vec![0.0, 1.0, 2.0], vec![0.0, 1.0]],
            vec![vec![0.25, 0.25, 0.5], vec![0.5, 0.5]],
            |x| x[0] * x[1],
            |_| 1.0,
        )
        .unwrap()
    }

    #[test]
    fn labels_are_canonical() {
        let sp = grid();
        let a = DiscretePartition::from_labels(&sp, &[7, 7, 3, 3, 9, 9]).unwrap();
        let b = DiscretePartition::from_labels(&sp, &[1, 1, 0, 0, 5, 5]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_cells(), 3);
        assert!(a.indistinguishable(&b));
    }

    #[test]
    fn cell_validation() {
        let sp = grid();
        assert!(DiscretePartition::from_cells(&sp, &[vec![0, 1, 2], vec![3, 4]]).is_err());
        assert!(DiscretePartition::from_cells(&sp, &[vec![0, 1, 2], vec![2, 3, 4, 5]]).is_err());
        assert!(DiscretePartition::from_cells(&sp, &[vec![0, 1, 2, 3, 4, 5], vec![]]).is_err());
        let p = DiscretePartition::from_cells(&sp, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert_eq!(p, DiscretePartition::by_coordinates(&sp, &[1]).unwrap());
        assert!((p.cell_probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_order() {
        let sp = grid();
        let fine = DiscretePartition::by_coordinates(&sp, &[0, 1]).unwrap();
        let coarse = DiscretePartition::by_coordinates(&sp, &[0]).unwrap();
        let triv = DiscretePartition::trivial(&sp);
        assert!(fine.refines(&coarse) && coarse.refines(&triv));
        assert!(!triv.refines(&coarse));
        assert_eq!(fine, DiscretePartition::discrete(&sp));
    }

    #[test]
    fn exact_cell_means() {
        let sp: DiscreteSpace<BigRational> = DiscreteSpace::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![vec![ratio(1, 3), ratio(2, 3)], vec![ratio(1, 2), ratio(1, 2)]],
            |x| ratio((x[0] + 2.0 * x[1]) as i64, 1),
            |_| ratio(1, 1),
        )
        .unwrap();
        let p = DiscretePartition::by_coordinates(&sp, &[0]).unwrap();
        // E[x0 + 2 x1 | x0] = x0 + 1
        assert_eq!(p.cell_means(&sp), vec![ratio(1, 1), ratio(2, 1)]);
    }
}
