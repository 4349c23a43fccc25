//! Multiplicative scaling of a block: X -> factor * X. Scaling does not
//! change the approximation guarantee of the wrapped solver.

use std::sync::Arc;

use crate::model::AllocationVector;

use super::BlockOracle;

struct Scaled {
    inner: Arc<dyn BlockOracle>,
    factor: f64,
}

impl BlockOracle for Scaled {
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64) {
        let (alloc, cost) = self.inner.evaluate(prices);
        (alloc.scaled(self.factor), cost * self.factor)
    }

    fn exact_opt(&self, prices: &[f64]) -> Option<f64> {
        Some(self.inner.exact_opt(prices)? * self.factor)
    }

    fn width_hint(&self) -> Option<f64> {
        Some(self.inner.width_hint()? * self.factor)
    }

    fn num_resources(&self) -> usize {
        self.inner.num_resources()
    }

    fn candidates(&self) -> Option<Vec<AllocationVector>> {
        Some(
            self.inner
                .candidates()?
                .iter()
                .map(|v| v.scaled(self.factor))
                .collect(),
        )
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

/// Wraps `inner` so its feasible set is multiplied by `factor` (> 0).
pub fn scaled_block(inner: Arc<dyn BlockOracle>, factor: f64) -> Arc<dyn BlockOracle> {
    debug_assert!(factor > 0.0 && factor.is_finite());
    Arc::new(Scaled { inner, factor })
}
