//! Products X_1 x ... x X_k on disjoint resource windows. The linear
//! minimization problem decomposes into one problem per window.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::AllocationVector;

use super::BlockOracle;

#[derive(Clone)]
pub struct ProductPart {
    pub block: Arc<dyn BlockOracle>,
    /// Resource indices of the enclosing instance this part writes to.
    pub window: Vec<usize>,
}

#[derive(Clone)]
pub struct ProductBlock {
    parts: Vec<ProductPart>,
    num_resources: usize,
}

impl ProductBlock {
    /// The windows must partition {0, ..., num_resources - 1}.
    pub fn new(parts: Vec<ProductPart>, num_resources: usize) -> Result<Self> {
        let mut seen = vec![false; num_resources];
        for (i, part) in parts.iter().enumerate() {
            if part.window.is_empty() {
                return Err(Error::Input(format!("product part {i} has an empty window")));
            }
            if part.block.num_resources() != part.window.len() {
                return Err(Error::Input(format!(
                    "product part {i}: block allocates {} resources, window has {}",
                    part.block.num_resources(),
                    part.window.len()
                )));
            }
            for &r in &part.window {
                if r >= num_resources {
                    return Err(Error::Input(format!(
                        "product part {i}: resource {r} out of range"
                    )));
                }
                if seen[r] {
                    return Err(Error::Input(format!(
                        "product windows overlap at resource {r}"
                    )));
                }
                seen[r] = true;
            }
        }
        if let Some(r) = seen.iter().position(|covered| !covered) {
            return Err(Error::Input(format!(
                "product windows do not cover resource {r}"
            )));
        }
        Ok(ProductBlock {
            parts,
            num_resources,
        })
    }

    pub fn parts(&self) -> &[ProductPart] {
        &self.parts
    }
}

impl BlockOracle for ProductBlock {
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64) {
        let mut out = vec![0.0; self.num_resources];
        let mut cost = 0.0;
        for part in &self.parts {
            let sub_prices = super::restrict(prices, &part.window);
            let (alloc, c) = part.block.evaluate(&sub_prices);
            for (j, &r) in part.window.iter().enumerate() {
                out[r] = alloc[j];
            }
            cost += c;
        }
        (AllocationVector::new(out), cost)
    }

    fn exact_opt(&self, prices: &[f64]) -> Option<f64> {
        let mut sum = 0.0;
        for part in &self.parts {
            let sub_prices = super::restrict(prices, &part.window);
            sum += part.block.exact_opt(&sub_prices)?;
        }
        Some(sum)
    }

    fn width_hint(&self) -> Option<f64> {
        // windows are disjoint, so the sup-norm is the max over parts
        let mut width = 0.0_f64;
        for part in &self.parts {
            width = width.max(part.block.width_hint()?);
        }
        Some(width)
    }

    fn num_resources(&self) -> usize {
        self.num_resources
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}
