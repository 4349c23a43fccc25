//! Exactness-degrading wrapper for testing sigma > 1. Wraps an exact block
//! and reports solutions whose cost stays within sigma_target of optimal;
//! in adversarial mode it returns the worst such candidate it can find.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::AllocationVector;

use super::BlockOracle;

pub struct ApproxWrapper {
    inner: Arc<dyn BlockOracle>,
    sigma_target: f64,
    adversarial: bool,
    expose_exact: bool,
    candidates: Option<Vec<AllocationVector>>,
}

impl ApproxWrapper {
    /// `inner` must support `exact_opt`. With `expose_exact` false the
    /// wrapper hides it, which forces the solver onto the sigma-discounted
    /// dual bounds.
    pub fn new(
        inner: Arc<dyn BlockOracle>,
        sigma_target: f64,
        adversarial: bool,
        expose_exact: bool,
    ) -> Result<Self> {
        if !(sigma_target > 1.0) || !sigma_target.is_finite() {
            return Err(Error::Input(format!(
                "sigma_target {sigma_target} must be > 1"
            )));
        }
        let probe = vec![1.0; inner.num_resources()];
        if inner.exact_opt(&probe).is_none() {
            return Err(Error::Input(
                "ApproxWrapper requires an inner block with exact_opt".into(),
            ));
        }
        let candidates = inner.candidates();
        Ok(ApproxWrapper {
            inner,
            sigma_target,
            adversarial,
            expose_exact,
            candidates,
        })
    }

    pub fn sigma_target(&self) -> f64 {
        self.sigma_target
    }
}

impl BlockOracle for ApproxWrapper {
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64) {
        let opt = self
            .inner
            .exact_opt(prices)
            .expect("inner exact_opt checked at construction");
        if self.adversarial {
            if let Some(cands) = &self.candidates {
                let budget = self.sigma_target * opt;
                let mut worst: Option<(usize, f64)> = None;
                for (i, c) in cands.iter().enumerate() {
                    let cost = c.dot(prices);
                    if cost <= budget {
                        let take = match worst {
                            None => true,
                            Some((_, w)) => cost > w,
                        };
                        if take {
                            worst = Some((i, cost));
                        }
                    }
                }
                if let Some((i, cost)) = worst {
                    return (cands[i].clone(), cost);
                }
            }
        }
        self.inner.evaluate(prices)
    }

    fn exact_opt(&self, prices: &[f64]) -> Option<f64> {
        if self.expose_exact {
            self.inner.exact_opt(prices)
        } else {
            None
        }
    }

    fn width_hint(&self) -> Option<f64> {
        self.inner.width_hint()
    }

    fn num_resources(&self) -> usize {
        self.inner.num_resources()
    }

    fn candidates(&self) -> Option<Vec<AllocationVector>> {
        self.candidates.clone()
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::super::ScaledSimplexBlock;
    use super::*;

    #[test]
    fn adversarial_picks_worst_affordable_candidate() {
        let inner: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, 3).unwrap());
        let wrapper = ApproxWrapper::new(inner, 2.0, true, false).unwrap();
        // opt = 1.0 at resource 0; candidates cost 1.0, 1.9, 2.5; budget 2.0
        let (alloc, cost) = wrapper.evaluate(&[1.0, 1.9, 2.5]);
        assert_eq!(alloc.entries(), &[0.0, 1.0, 0.0]);
        assert!((cost - 1.9).abs() < 1e-12);
        assert!(wrapper.exact_opt(&[1.0, 1.9, 2.5]).is_none());
    }

    #[test]
    fn honest_mode_passes_through() {
        let inner: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, 3).unwrap());
        let wrapper = ApproxWrapper::new(inner, 2.0, false, true).unwrap();
        let (alloc, cost) = wrapper.evaluate(&[1.0, 1.9, 2.5]);
        assert_eq!(alloc.entries(), &[1.0, 0.0, 0.0]);
        assert_eq!(cost, 1.0);
        assert_eq!(wrapper.exact_opt(&[1.0, 1.9, 2.5]), Some(1.0));
    }

    #[test]
    fn rejects_inner_without_exact_opt() {
        let inner: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, 2).unwrap());
        let hidden: Arc<dyn BlockOracle> =
            Arc::new(ApproxWrapper::new(inner, 2.0, false, false).unwrap());
        assert!(ApproxWrapper::new(hidden, 2.0, false, false).is_err());
    }
}
