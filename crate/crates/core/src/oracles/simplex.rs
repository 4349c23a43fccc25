//! Scaled probability simplex c * Delta_m, with vertices c * e_i.

use crate::error::{Error, Result};
use crate::model::AllocationVector;

use super::BlockOracle;

#[derive(Debug, Clone)]
pub struct ScaledSimplexBlock {
    scale: f64,
    num_resources: usize,
}

impl ScaledSimplexBlock {
    pub fn new(scale: f64, num_resources: usize) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Input(format!("simplex scale {scale} must be positive")));
        }
        if num_resources == 0 {
            return Err(Error::Input("simplex needs at least one resource".into()));
        }
        Ok(ScaledSimplexBlock {
            scale,
            num_resources,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn unit(&self, i: usize) -> AllocationVector {
        let mut v = vec![0.0; self.num_resources];
        v[i] = self.scale;
        AllocationVector::new(v)
    }
}

impl BlockOracle for ScaledSimplexBlock {
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64) {
        let (i, min) = super::argmin_by_cost(prices.iter().copied());
        (self.unit(i), self.scale * min)
    }

    fn exact_opt(&self, prices: &[f64]) -> Option<f64> {
        Some(self.scale * prices.iter().copied().fold(f64::INFINITY, f64::min))
    }

    fn width_hint(&self) -> Option<f64> {
        Some(self.scale)
    }

    fn num_resources(&self) -> usize {
        self.num_resources
    }

    fn candidates(&self) -> Option<Vec<AllocationVector>> {
        Some((0..self.num_resources).map(|i| self.unit(i)).collect())
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}
