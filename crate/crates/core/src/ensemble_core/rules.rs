use super::partition::DiscretePartition;
use super::space::DiscreteSpace;
use crate::cart_process::{sample_binary_process, subsample_size, BinaryState};
use crate::error::{invalid, Error, Result};
use crate::exec::Rng;
use crate::model::{FeatureKind, ModelSpec};

/// Data-independent random partition generator `Theta -> P(Theta)`.
pub trait PartitionRule: Sync {
    fn sample(&self, space: &DiscreteSpace<f64>, rng: &mut Rng) -> DiscretePartition<f64>;

    /// Check once that the rule can be applied to `space`.
    fn validate(&self, _space: &DiscreteSpace<f64>) -> Result<()> {
        Ok(())
    }
}

impl<F> PartitionRule for F
where
    F: Fn(&DiscreteSpace<f64>, &mut Rng) -> DiscretePartition<f64> + Sync,
{
    fn sample(&self, space: &DiscreteSpace<f64>, rng: &mut Rng) -> DiscretePartition<f64> {
        self(space, rng)
    }
}

/// Always returns the same partition.
#[derive(Debug, Clone)]
pub struct FixedRule(pub DiscretePartition<f64>);

impl PartitionRule for FixedRule {
    fn sample(&self, _space: &DiscreteSpace<f64>, _rng: &mut Rng) -> DiscretePartition<f64> {
        self.0.clone()
    }

    fn validate(&self, space: &DiscreteSpace<f64>) -> Result<()> {
        if self.0.n_atoms() != space.n_atoms() {
            return Err(Error::DimensionMismatch { expected: space.n_atoms(), got: self.0.n_atoms() });
        }
        Ok(())
    }
}

/// Population CART on `{0,1}^d`: run the binary splitting process and cut
/// the cube along every split coordinate.
#[derive(Debug, Clone)]
pub struct BinaryCartRule {
    spec: ModelSpec,
    gamma: f64,
    depth: usize,
}

impl BinaryCartRule {
    pub fn new(spec: &ModelSpec, gamma: f64, depth: usize) -> Result<Self> {
        let spec = spec.with_feature_kind(FeatureKind::BinaryBernoulliHalf);
        let m = subsample_size(spec.d(), gamma)?;
        if depth >= m {
            return Err(Error::DepthTooLarge { depth, subsample: m });
        }
        Ok(BinaryCartRule { spec, gamma, depth })
    }

    pub fn sample_state(&self, rng: &mut Rng) -> BinaryState {
        sample_binary_process(&self.spec, self.gamma, self.depth, rng).expect("validated in constructor")
    }
}

/// Partition of a binary cube generated by the split coordinates of `state`.
pub fn binary_state_partition(space: &DiscreteSpace<f64>, state: &BinaryState) -> Result<DiscretePartition<f64>> {
    if space.dim() != state.indicator.len() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: state.indicator.len() });
    }
    let coords: Vec<usize> = (0..space.dim()).filter(|&j| state.indicator[j]).collect();
    DiscretePartition::by_coordinates(space, &coords)
}

impl PartitionRule for BinaryCartRule {
    fn sample(&self, space: &DiscreteSpace<f64>, rng: &mut Rng) -> DiscretePartition<f64> {
        let state = self.sample_state(rng);
        binary_state_partition(space, &state).expect("validated space")
    }

    fn validate(&self, space: &DiscreteSpace<f64>) -> Result<()> {
        if space.dim() != self.spec.d() {
            return Err(Error::DimensionMismatch { expected: self.spec.d(), got: space.dim() });
        }
        if space.supports().iter().any(|s| s.len() != 2) {
            return Err(invalid("binary CART rule needs a space with two-point coordinates"));
        }
        Ok(())
    }
}
