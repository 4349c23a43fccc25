//! Convex hulls of explicit vertex lists. Linear functions on convex sets
//! are minimized on minimal faces, so the oracle only ever returns a vertex.

use crate::error::{Error, Result};
use crate::model::AllocationVector;

use super::BlockOracle;

#[derive(Debug, Clone)]
pub struct VertexListBlock {
    vertices: Vec<AllocationVector>,
    width: f64,
}

impl VertexListBlock {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Input("vertex list must be non-empty".into()));
        }
        let m = vertices[0].len();
        if m == 0 {
            return Err(Error::Input("vertices must have at least one entry".into()));
        }
        let mut out = Vec::with_capacity(vertices.len());
        let mut width = 0.0_f64;
        for (i, v) in vertices.into_iter().enumerate() {
            if v.len() != m {
                return Err(Error::Input(format!(
                    "vertex {i} has length {}, expected {m}",
                    v.len()
                )));
            }
            let alloc = AllocationVector::new(v);
            alloc
                .validate()
                .map_err(|e| Error::Input(format!("vertex {i}: {e}")))?;
            width = width.max(alloc.linf());
            out.push(alloc);
        }
        Ok(VertexListBlock {
            vertices: out,
            width,
        })
    }

    pub fn vertices(&self) -> &[AllocationVector] {
        &self.vertices
    }

    /// Cheapest vertex; ties break to the lowest vertex index.
    ///
    /// The scan compares candidates via the difference form
    /// <y, v_i - v_best>: coordinates shared by both vertices cancel exactly,
    /// so the sign resolves cost gaps far below one ulp of the dominant cost
    /// term. Multiplicative-weight prices span enormous dynamic ranges, and
    /// the local (second-entry) guarantees need exactly these tiny-coordinate
    /// decisions; a naive sum-then-compare argmin would see spurious ties and
    /// freeze onto one vertex.
    fn argmin(&self, prices: &[f64]) -> (usize, f64) {
        let mut best = 0;
        for i in 1..self.vertices.len() {
            let a = self.vertices[i].entries();
            let b = self.vertices[best].entries();
            let mut diff = 0.0;
            for (r, &price) in prices.iter().enumerate() {
                let d = a[r] - b[r];
                if d != 0.0 {
                    diff += price * d;
                }
            }
            if diff < 0.0 {
                best = i;
            }
        }
        (best, self.vertices[best].dot(prices))
    }
}

impl BlockOracle for VertexListBlock {
    fn evaluate(&self, prices: &[f64]) -> (AllocationVector, f64) {
        let (i, cost) = self.argmin(prices);
        (self.vertices[i].clone(), cost)
    }

    fn exact_opt(&self, prices: &[f64]) -> Option<f64> {
        Some(self.argmin(prices).1)
    }

    fn width_hint(&self) -> Option<f64> {
        Some(self.width)
    }

    fn num_resources(&self) -> usize {
        self.vertices[0].len()
    }

    fn candidates(&self) -> Option<Vec<AllocationVector>> {
        Some(self.vertices.clone())
    }

    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
}
