//! The block-solver abstraction and the family of concrete blocks.
//!
//! Every feasible-allocation set X_C is reached only through [`BlockOracle`],
//! a sigma-approximate linear minimization oracle. The concrete families
//! (vertex hulls, scaled simplexes, zero blocks, products, shortest-path
//! blocks) all implement the trait and are registered by name in
//! [`registry`], selected at runtime from instance files.

mod approx;
mod path;
mod product;
pub mod registry;
mod scaled;
mod simplex;
mod vertex;
mod zero;

pub use approx::ApproxWrapper;
pub use path::{PathBlock, PathEdge, shortest_path_evaluate};
pub use product::{ProductBlock, ProductPart};
pub use registry::BlockDesc;
pub use scaled::scaled_block;
pub use simplex::ScaledSimplexBlock;
pub use vertex::VertexListBlock;
pub use zero::ZeroBlock;

use crate::error::{Error, Result};
use crate::model::{AllocationVector, Instance, PriceState};

/// A sigma-approximate block solver for one customer.
///
/// Contract, for every price vector y >= 0:
/// `<y, evaluate(y).0> <= sigma * opt(y)` where `opt(y) = min_{x in X} <y, x>`.
///
/// Implementations must be positively scale-covariant: the allocation
/// returned for c*y (c > 0) must be a valid answer for y too. The solver
/// passes shift-normalized prices, so this is load-bearing, not a nicety.
/// Implementations are stateless after construction and re-entrant.
pub trait BlockOracle: Send + Sync {
    /// Returns an allocation of X and its cost w.r.t. `prices`.
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64);

    /// Exact optimum `min_{x in X} <prices, x>`, when the block supports it.
    fn exact_opt(&self, prices: &[f64]) -> Option<f64>;

    /// Upper bound on sup_{x in X} ||x||_inf, when known.
    fn width_hint(&self) -> Option<f64>;

    /// Length of the allocation vectors this block produces.
    fn num_resources(&self) -> usize;

    /// Finite generating set (vertices), when enumerable. Used by the
    /// adversarial wrapper and the analysis samplers.
    fn candidates(&self) -> Option<Vec<AllocationVector>> {
        None
    }

    fn as_any(&self) -> &dyn std::any::Any;
}

/// Calls a block with the shift-normalized prices exp(a_r - max_s a_s) and
/// validates the returned allocation against the oracle contract.
pub fn oracle_evaluate(
    block: &dyn BlockOracle,
    prices: &PriceState,
) -> Result<(AllocationVector, f64)> {
    let normalized = prices.normalized();
    let (allocation, cost) = block.evaluate(&normalized);
    if allocation.len() != normalized.len() {
        return Err(Error::OracleContract(format!(
            "allocation length {} != {}",
            allocation.len(),
            normalized.len()
        )));
    }
    for (r, &v) in allocation.entries().iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::OracleContract(format!(
                "allocation entry {r} is {v}"
            )));
        }
    }
    if !cost.is_finite() || cost < 0.0 {
        return Err(Error::OracleContract(format!("reported cost is {cost}")));
    }
    Ok((allocation, cost))
}

/// Exact optimum over the Minkowski sum at the normalized prices:
/// sum_C opt_C(y_hat). `None` as soon as one block lacks `exact_opt`.
pub fn minkowski_opt(instance: &Instance, prices: &PriceState) -> Option<f64> {
    let normalized = prices.normalized();
    let mut sum = 0.0;
    for block in instance.blocks() {
        sum += block.exact_opt(&normalized)?;
    }
    Some(sum)
}

/// Whether every block of the instance supports exact linear minimization.
pub fn exact_opt_available(instance: &Instance) -> bool {
    let probe = vec![1.0; instance.num_resources()];
    instance.blocks().iter().all(|b| b.exact_opt(&probe).is_some())
}

/// Index of the cheapest candidate; ties break to the lowest index.
pub(crate) fn argmin_by_cost(costs: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in costs.enumerate() {
        if c < best.1 {
            best = (i, c);
        }
    }
    best
}

pub(crate) fn restrict(prices: &[f64], window: &[usize]) -> Vec<f64> {
    window.iter().map(|&r| prices[r]).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    #[test]
    fn oracle_evaluate_examples() {
        // argmin of prices is index 0
        let simplex = ScaledSimplexBlock::new(3.0, 3).unwrap();
        let prices = PriceState::from_exponents(vec![1.0_f64.ln(), 2.0_f64.ln(), 3.0_f64.ln()]);
        let (alloc, cost) = oracle_evaluate(&simplex, &prices).unwrap();
        assert_eq!(alloc.entries(), &[3.0, 0.0, 0.0]);
        // normalized prices are (1/3, 2/3, 1); cost is 3 * 1/3 = 1 in
        // normalized units, i.e. 3 * y_min for raw prices (1,2,3) up to shift
        assert!((cost - 1.0).abs() < 1e-12);

        let w = 10.0;
        let vertices =
            VertexListBlock::new(vec![vec![1.0, 1.0, 0.0], vec![1.25, 0.0, w]]).unwrap();
        let uniform = PriceState::uniform(3);
        let (alloc, cost) = oracle_evaluate(&vertices, &uniform).unwrap();
        assert_eq!(alloc.entries(), &[1.0, 1.0, 0.0]);
        assert!((cost - 2.0).abs() < 1e-12);

        let zero = ZeroBlock::new(3);
        let (alloc, cost) = oracle_evaluate(&zero, &uniform).unwrap();
        assert_eq!(alloc.entries(), &[0.0, 0.0, 0.0]);
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn oracle_evaluate_rejects_negative_entries() {
        struct Broken;
        impl BlockOracle for Broken {
            fn evaluate(&self, _prices: &[f64]) -> (AllocationVector, f64) {
                (AllocationVector::new(vec![1.0, -0.5]), 0.5)
            }
            fn exact_opt(&self, _prices: &[f64]) -> Option<f64> {
                None
            }
            fn width_hint(&self) -> Option<f64> {
                None
            }
            fn num_resources(&self) -> usize {
                2
            }
            fn as_any(&self) -> &dyn std::any::Any {
                self
            }
        }
        let err = oracle_evaluate(&Broken, &PriceState::uniform(2)).unwrap_err();
        assert!(matches!(err, Error::OracleContract(_)));
    }

    #[test]
    fn minkowski_opt_examples() {
        let b1: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, 2).unwrap());
        let b2: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, 2).unwrap());
        let instance = Instance::new(2, 1.0, vec![b1, b2]).unwrap();
        let prices = PriceState::from_exponents(vec![1.0_f64.ln(), 2.0_f64.ln()]);
        // both blocks pick e_1 at normalized prices (1/2, 1): 2 * 1/2 = 1
        let opt = minkowski_opt(&instance, &prices).unwrap();
        assert!((opt - 1.0).abs() < 1e-12);

        let single: Arc<dyn BlockOracle> =
            Arc::new(VertexListBlock::new(vec![vec![1.0, 1.0]]).unwrap());
        let instance = Instance::new(2, 1.0, vec![single]).unwrap();
        let opt = minkowski_opt(&instance, &PriceState::uniform(2)).unwrap();
        assert!((opt - 2.0).abs() < 1e-12); // normalized uniform prices are (1,1)

        // a wrapper with exact_opt hidden makes the whole sum unavailable
        let inner: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, 2).unwrap());
        let wrapped: Arc<dyn BlockOracle> =
            Arc::new(ApproxWrapper::new(inner, 2.0, false, false).unwrap());
        let instance = Instance::new(2, 2.0, vec![wrapped]).unwrap();
        assert!(minkowski_opt(&instance, &PriceState::uniform(2)).is_none());
    }
}
