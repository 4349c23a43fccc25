//! Shared data model: instances, log-domain prices, allocations,
//! decompositions, run statistics, and decreasing-order utilities.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracles::BlockOracle;

/// Numeric tolerances used by validation and audits. One record so tests and
/// solvers agree on every knob.
#[derive(Debug, Clone, Copy)]
pub struct NumericPolicy {
    /// Absolute tolerance for decomposition and simplex-weight checks.
    pub decomposition_tol: f64,
    /// Termination tolerance for the per-customer coefficient sum alpha.
    pub alpha_tol: f64,
    /// Absolute slack granted to analytic bounds evaluated in floating point.
    pub audit_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            decomposition_tol: 1e-9,
            alpha_tol: 1e-12,
            audit_tol: 1e-6,
        }
    }
}

/// Non-negative resource usage vector of length m.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector(Vec<f64>);

impl AllocationVector {
    pub fn new(entries: Vec<f64>) -> Self {
        AllocationVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        AllocationVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.0
    }

    /// Maximum entry; 0 for the empty vector.
    pub fn linf(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn dot(&self, prices: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), prices.len());
        self.0.iter().zip(prices).map(|(x, y)| x * y).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        AllocationVector(self.0.iter().map(|x| x * factor).collect())
    }

    /// Checks the type invariant: all entries finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (r, &v) in self.0.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!(
                    "allocation entry {r} is {v}; entries must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

impl From<Vec<f64>> for AllocationVector {
    fn from(entries: Vec<f64>) -> Self {
        AllocationVector(entries)
    }
}

impl std::ops::Index<usize> for AllocationVector {
    type Output = f64;
    fn index(&self, r: usize) -> &f64 {
        &self.0[r]
    }
}

/// Resource prices kept exclusively in log domain: exponents a_r = ln y_r.
///
/// Raw prices reach exp(eps * T * x_r) during FPTAS runs, which is far beyond
/// f64 range, so only exponents are stored and every aggregate is computed
/// with shifted sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceState {
    exponents: Vec<f64>,
}

impl PriceState {
    /// Uniform prices y = 1, i.e. all exponents zero.
    pub fn uniform(len: usize) -> Self {
        PriceState {
            exponents: vec![0.0; len],
        }
    }

    pub fn from_exponents(exponents: Vec<f64>) -> Self {
        PriceState { exponents }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// Multiplies y_r by exp(delta). Solver updates never decrease prices.
    pub fn bump(&mut self, r: usize, delta: f64) {
        debug_assert!(delta >= 0.0, "price update must not decrease prices");
        self.exponents[r] += delta;
    }

    /// Restores a snapshot taken earlier in the same run (the scaling
    /// solver's restart path; the one sanctioned way prices go down).
    pub fn restore(&mut self, snapshot: &PriceState) {
        self.exponents.copy_from_slice(&snapshot.exponents);
    }

    pub fn max_exponent(&self) -> f64 {
        self.exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// ln ||y||_1 via the shifted-maximum technique; finite for any finite
    /// exponents, no overflow for exponents up to 1e6 and beyond.
    pub fn l1_log(&self) -> f64 {
        let shift = self.max_exponent();
        let sum: f64 = self.exponents.iter().map(|a| (a - shift).exp()).sum();
        shift + sum.ln()
    }

    /// Shift-normalized prices exp(a_r - max_s a_s) in (0, 1]^m. This is what
    /// the driver hands to oracles; scale-covariance of the oracle makes the
    /// answers valid for the raw prices.
    pub fn normalized(&self) -> Vec<f64> {
        let shift = self.max_exponent();
        self.exponents.iter().map(|a| (a - shift).exp()).collect()
    }
}

/// ln sum_r exp(a_r), the stable log-l1 of a price state.
pub fn l1_log(prices: &PriceState) -> f64 {
    prices.l1_log()
}

/// Entries of `x` sorted in non-increasing order. The sort is stable, so
/// ties keep their original relative order and comparisons are deterministic.
pub fn sorted_decreasing(x: &AllocationVector) -> Vec<f64> {
    let mut v = x.entries().to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("allocation entries are finite"));
    v
}

/// Lexicographic comparison of decreasingly sorted entry vectors: the
/// preorder `<=_dec`. `Equal` iff the sorted vectors coincide exactly.
pub fn dec_compare(x: &AllocationVector, y: &AllocationVector) -> Result<Ordering> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "dec_compare length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let sx = sorted_decreasing(x);
    let sy = sorted_decreasing(y);
    for (a, b) in sx.iter().zip(sy.iter()) {
        if a < b {
            return Ok(Ordering::Less);
        }
        if a > b {
            return Ok(Ordering::Greater);
        }
    }
    Ok(Ordering::Equal)
}

/// One term of a convex combination of oracle outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAllocation {
    pub coefficient: f64,
    pub allocation: AllocationVector,
}

/// Per-customer convex combinations of oracle outputs plus their aggregate.
/// Keeping solutions as explicit combinations is what makes the solver a
/// Dantzig-Wolfe-type algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSolution {
    per_customer: Vec<Vec<WeightedAllocation>>,
    aggregate: AllocationVector,
}

impl DecomposedSolution {
    /// Builds the solution and computes the aggregate from the terms.
    pub fn from_parts(per_customer: Vec<Vec<WeightedAllocation>>, num_resources: usize) -> Self {
        let mut aggregate = vec![0.0; num_resources];
        for terms in &per_customer {
            for term in terms {
                for (r, v) in term.allocation.entries().iter().enumerate() {
                    aggregate[r] += term.coefficient * v;
                }
            }
        }
        DecomposedSolution {
            per_customer,
            aggregate: AllocationVector(aggregate),
        }
    }

    /// The all-zero solution: each customer contributes the zero allocation
    /// with coefficient 1.
    pub fn zero(num_customers: usize, num_resources: usize) -> Self {
        let per_customer = (0..num_customers)
            .map(|_| {
                vec![WeightedAllocation {
                    coefficient: 1.0,
                    allocation: AllocationVector::zeros(num_resources),
                }]
            })
            .collect();
        DecomposedSolution::from_parts(per_customer, num_resources)
    }

    pub fn per_customer(&self) -> &[Vec<WeightedAllocation>] {
        &self.per_customer
    }

    pub fn aggregate(&self) -> &AllocationVector {
        &self.aggregate
    }

    pub fn num_customers(&self) -> usize {
        self.per_customer.len()
    }

    /// Scales every allocation (coefficients untouched), e.g. to map a
    /// solution between scaled and original units.
    pub fn scaled(&self, factor: f64) -> Self {
        let per_customer = self
            .per_customer
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| WeightedAllocation {
                        coefficient: t.coefficient,
                        allocation: t.allocation.scaled(factor),
                    })
                    .collect()
            })
            .collect();
        DecomposedSolution::from_parts(per_customer, self.aggregate.len())
    }

    /// Machine-checks the decomposition invariants: per-customer coefficients
    /// sum to 1 and re-summing the terms reproduces the aggregate.
    pub fn validate(&self, policy: &NumericPolicy) -> Result<()> {
        let m = self.aggregate.len();
        let mut resum = vec![0.0; m];
        for (c, terms) in self.per_customer.iter().enumerate() {
            let mut coeff_sum = 0.0;
            for term in terms {
                if term.coefficient <= 0.0 || term.coefficient > 1.0 + policy.decomposition_tol {
                    return Err(Error::Input(format!(
                        "customer {c}: coefficient {} outside (0, 1]",
                        term.coefficient
                    )));
                }
                if term.allocation.len() != m {
                    return Err(Error::Input(format!(
                        "customer {c}: allocation length {} != {m}",
                        term.allocation.len()
                    )));
                }
                term.allocation.validate()?;
                coeff_sum += term.coefficient;
                for (r, v) in term.allocation.entries().iter().enumerate() {
                    resum[r] += term.coefficient * v;
                }
            }
            if (coeff_sum - 1.0).abs() > policy.decomposition_tol {
                return Err(Error::Input(format!(
                    "customer {c}: coefficients sum to {coeff_sum}, expected 1"
                )));
            }
        }
        for r in 0..m {
            if (resum[r] - self.aggregate[r]).abs() > policy.decomposition_tol {
                return Err(Error::Input(format!(
                    "aggregate mismatch at resource {r}: {} vs re-sum {}",
                    self.aggregate[r], resum[r]
                )));
            }
        }
        Ok(())
    }
}

/// Dual solution: a point of the price simplex with a certified lower bound
/// on the dual objective. `exact` records whether the value came from exact
/// block optima or is the sigma-discounted bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub weights: Vec<f64>,
    pub certified_value: f64,
    pub exact: bool,
}

impl DualCertificate {
    pub fn validate(&self, policy: &NumericPolicy) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > policy.decomposition_tol {
            return Err(Error::Input(format!(
                "dual weights sum to {sum}, expected 1"
            )));
        }
        for (r, &w) in self.weights.iter().enumerate() {
            if !(0.0..=1.0 + policy.decomposition_tol).contains(&w) {
                return Err(Error::Input(format!("dual weight {r} is {w}")));
            }
        }
        if self.certified_value < 0.0 {
            return Err(Error::Input(format!(
                "certified value {} is negative",
                self.certified_value
            )));
        }
        Ok(())
    }
}

/// A local weak duality certificate (S, mu): the claim that the oracles'
/// summed cost restricted to S is bounded by mu times the summed pointwise
/// maximum prices on S, for every collection of price vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDualityCert {
    subset: Vec<usize>,
    mu: f64,
}

impl LocalDualityCert {
    pub fn new(mut subset: Vec<usize>, mu: f64, num_resources: usize) -> Result<Self> {
        subset.sort_unstable();
        subset.dedup();
        if subset.is_empty() {
            return Err(Error::Input("certificate subset must be non-empty".into()));
        }
        if let Some(&r) = subset.last() {
            if r >= num_resources {
                return Err(Error::Input(format!(
                    "certificate resource {r} out of range (m = {num_resources})"
                )));
            }
        }
        if !(mu >= 0.0) {
            return Err(Error::Input(format!("certificate mu {mu} must be >= 0")));
        }
        Ok(LocalDualityCert { subset, mu })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Counters and per-phase traces of one solver run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub phases_completed: usize,
    /// Calls whose step size was 1 - alpha.
    pub standard_calls: u64,
    /// Calls whose step size was (Lambda/)1/||b||_inf; ties count here.
    pub restricted_calls: u64,
    /// Extra oracle calls made for diagnostics (inexact theta), never by the
    /// solver loop itself; excluded from the call-accounting bounds.
    pub diagnostic_calls: u64,
    pub restarts: usize,
    /// Phase indices t_1 <= ... <= t_K at which restarts occurred.
    pub restart_phases: Vec<usize>,
    /// Theta_t per completed phase (dual objective of the phase-end prices).
    pub theta_trace: Vec<f64>,
    /// Whether theta values come from exact block optima.
    pub theta_exact: bool,
    /// ln ||y^(t)||_1 per completed phase.
    pub l1_log_price_trace: Vec<f64>,
    /// ||x^(t)||_inf of the running average per completed phase.
    pub max_x_trace: Vec<f64>,
    /// Cumulative solver oracle calls at the end of each completed phase.
    pub calls_trace: Vec<u64>,
    /// Cumulative standard calls at the end of each completed phase.
    pub standard_calls_trace: Vec<u64>,
    /// Epsilon with which each phase was completed (constant for the core
    /// solver, halving across restarts in the scaling solver).
    pub epsilon_trace: Vec<f64>,
    pub per_customer_standard: Vec<u64>,
    pub per_customer_restricted: Vec<u64>,
    pub epsilon_final: f64,
    pub lambda_guess_final: f64,
}

impl RunStats {
    pub fn total_calls(&self) -> u64 {
        self.standard_calls + self.restricted_calls
    }
}

/// A resource sharing instance: m resources, the oracle approximation ratio
/// sigma, and one block oracle per customer. `scale` records the multiplier
/// applied to all blocks relative to the originally loaded instance, so
/// results can be reported in original units.
#[derive(Clone)]
pub struct Instance {
    num_resources: usize,
    sigma: f64,
    blocks: Vec<Arc<dyn BlockOracle>>,
    scale: f64,
}

impl Instance {
    pub fn new(num_resources: usize, sigma: f64, blocks: Vec<Arc<dyn BlockOracle>>) -> Result<Self> {
        if num_resources == 0 {
            return Err(Error::Input("instance needs at least one resource".into()));
        }
        if blocks.is_empty() {
            return Err(Error::Input("instance needs at least one customer".into()));
        }
        if !(sigma >= 1.0) {
            return Err(Error::Input(format!("sigma {sigma} must be >= 1")));
        }
        for (c, block) in blocks.iter().enumerate() {
            if block.num_resources() != num_resources {
                return Err(Error::Input(format!(
                    "block {c} allocates {} resources, instance has {num_resources}",
                    block.num_resources()
                )));
            }
        }
        Ok(Instance {
            num_resources,
            sigma,
            blocks,
            scale: 1.0,
        })
    }

    pub fn num_resources(&self) -> usize {
        self.num_resources
    }

    pub fn num_customers(&self) -> usize {
        self.blocks.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn blocks(&self) -> &[Arc<dyn BlockOracle>] {
        &self.blocks
    }

    /// A new instance with every block multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Instance> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Input(format!("scale factor {factor} must be positive")));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| crate::oracles::scaled_block(b.clone(), factor))
            .collect();
        Ok(Instance {
            num_resources: self.num_resources,
            sigma: self.sigma,
            blocks,
            scale: self.scale * factor,
        })
    }

    /// Sum of the blocks' width hints; an upper bound on lambda* when all
    /// hints are known.
    pub fn width_sum(&self) -> Option<f64> {
        let mut sum = 0.0;
        for block in &self.blocks {
            sum += block.width_hint()?;
        }
        Some(sum)
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("num_resources", &self.num_resources)
            .field("num_customers", &self.blocks.len())
            .field("sigma", &self.sigma)
            .field("scale", &self.scale)
            .finish()
    }
}
