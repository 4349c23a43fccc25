//! The singleton block {0}.

use crate::model::AllocationVector;

use super::BlockOracle;

#[derive(Debug, Clone)]
pub struct ZeroBlock {
    num_resources: usize,
}

impl ZeroBlock {
    pub fn new(num_resources: usize) -> Self {
        ZeroBlock { num_resources }
    }
}

impl BlockOracle for ZeroBlock {
    fn evaluate(&self, _prices: &[f64]) -> (AllocationVector, f64) {
        (AllocationVector::zeros(self.num_resources), 0.0)
    }

    fn exact_opt(&self, _prices: &[f64]) -> Option<f64> {
        Some(0.0)
    }

    fn width_hint(&self) -> Option<f64> {
        Some(0.0)
    }

    fn num_resources(&self) -> usize {
        self.num_resources
    }

    fn candidates(&self) -> Option<Vec<AllocationVector>> {
        Some(vec![AllocationVector::zeros(self.num_resources)])
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}
