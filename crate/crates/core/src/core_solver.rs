//! The phased core algorithm: per-customer block-coordinate steps with the
//! restricted step-size rule, multiplicative price updates after every oracle
//! call, primal averaging across phases, and a per-phase dual trace.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::model::{
    AllocationVector, DecomposedSolution, DualCertificate, Instance, NumericPolicy, PriceState,
    RunStats, WeightedAllocation,
};
use crate::oracles::{exact_opt_available, minkowski_opt, oracle_evaluate};

/// Parameters of one core run.
#[derive(Debug, Clone)]
pub struct CoreParams {
    pub epsilon: f64,
    pub phases: usize,
    /// Per-phase oracle-call cap; `None` derives a default from width hints.
    pub call_cap: Option<u64>,
    /// Retain the per-phase combined solutions s^(t) in the result.
    pub keep_phase_solutions: bool,
    pub policy: NumericPolicy,
}

impl CoreParams {
    pub fn new(epsilon: f64, phases: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Input(format!("epsilon {epsilon} must lie in (0, 1]")));
        }
        if phases == 0 {
            return Err(Error::Input("phase count must be at least 1".into()));
        }
        Ok(CoreParams {
            epsilon,
            phases,
            call_cap: None,
            keep_phase_solutions: false,
            policy: NumericPolicy::default(),
        })
    }

    /// eta = exp(epsilon) - 1, the linearization constant of the price update.
    pub fn eta(&self) -> f64 {
        self.epsilon.exp_m1()
    }
}

/// Per-phase snapshot handed to the observer after each completed phase.
/// Keeping analysis in a callback avoids retaining all phase data for runs
/// with 1e5..1e6 phases.
pub struct PhaseEvent<'a> {
    /// Phase index t, 1-based.
    pub phase: usize,
    /// Running average x^(t).
    pub average: &'a [f64],
    /// Price exponents a_r after the phase.
    pub exponents: &'a [f64],
    pub l1_log_price: f64,
    pub theta: f64,
    pub theta_exact: bool,
    pub calls_cumulative: u64,
    pub standard_cumulative: u64,
    pub restricted_cumulative: u64,
}

pub type PhaseObserver<'a> = &'a mut dyn FnMut(&PhaseEvent);

/// Output of [`run_core`].
#[derive(Debug, Clone)]
pub struct CoreResult {
    /// x^(T) = (1/T) sum_t s^(t), as explicit convex combinations.
    pub primal: DecomposedSolution,
    /// z^(T) = (1/T) sum_t y^(t)/||y^(t)||_1 with a certified value.
    pub dual: DualCertificate,
    pub stats: RunStats,
    /// Price exponents at termination; x^(T)_r = a_r/(eps*T) up to rounding.
    pub final_prices: PriceState,
    pub phase_solutions: Option<Vec<AllocationVector>>,
    pub phase_solutions_kept: bool,
}

/// xi = min{1 - alpha, 1/||b||_inf}; an all-zero allocation means 1/0 = inf,
/// so the standard branch is taken.
pub fn step_size(alpha: f64, b: &AllocationVector) -> f64 {
    debug_assert!(alpha < 1.0);
    let linf = b.linf();
    if linf > 0.0 {
        (1.0 - alpha).min(1.0 / linf)
    } else {
        1.0 - alpha
    }
}

/// Dual objective of the prices: Theta = sum_C opt_C(y_hat) / ||y_hat||_1
/// when exact optima are available (flag true), else the sigma-discounted
/// lower bound from fresh oracle answers (flag false). The ratio is
/// scale-invariant, so normalized prices give the value for the raw ones.
pub fn theta(instance: &Instance, prices: &PriceState) -> (f64, bool) {
    let normalized = prices.normalized();
    let l1: f64 = normalized.iter().sum();
    if let Some(opt) = minkowski_opt(instance, prices) {
        (opt / l1, true)
    } else {
        let mut cost_sum = 0.0;
        for block in instance.blocks() {
            cost_sum += block.evaluate(&normalized).1;
        }
        (cost_sum / (instance.sigma() * l1), false)
    }
}

/// Arithmetic mean of the per-phase normalized price vectors, certified by
/// exact block optima when available.
pub fn average_dual(instance: &Instance, history: &[PriceState]) -> Result<DualCertificate> {
    if history.is_empty() {
        return Err(Error::Input("price history must be non-empty".into()));
    }
    let m = instance.num_resources();
    let mut weights = vec![0.0; m];
    for prices in history {
        let l1 = prices.l1_log();
        for (r, a) in prices.exponents().iter().enumerate() {
            weights[r] += (a - l1).exp();
        }
    }
    for w in &mut weights {
        *w /= history.len() as f64;
    }
    certify(instance, weights)
}

fn certify(instance: &Instance, weights: Vec<f64>) -> Result<DualCertificate> {
    if exact_opt_available(instance) {
        let mut value = 0.0;
        for block in instance.blocks() {
            value += block
                .exact_opt(&weights)
                .expect("exactness probed above");
        }
        Ok(DualCertificate {
            weights,
            certified_value: value,
            exact: true,
        })
    } else {
        // sigma-discounted bound: sum_C <z, f_C(z)> / sigma <= min_x <z, x>
        let mut cost = 0.0;
        for block in instance.blocks() {
            cost += block.evaluate(&weights).1;
        }
        Ok(DualCertificate {
            certified_value: cost / instance.sigma(),
            weights,
            exact: false,
        })
    }
}

/// Key for de-duplicating oracle outputs inside a convex combination.
pub(crate) type AllocKey = Vec<u64>;

pub(crate) fn alloc_key(b: &AllocationVector) -> AllocKey {
    b.entries().iter().map(|v| v.to_bits()).collect()
}

pub(crate) fn merge_term(
    bucket: &mut IndexMap<AllocKey, WeightedAllocation>,
    coefficient: f64,
    allocation: &AllocationVector,
) {
    match bucket.entry(alloc_key(allocation)) {
        indexmap::map::Entry::Occupied(mut e) => e.get_mut().coefficient += coefficient,
        indexmap::map::Entry::Vacant(e) => {
            e.insert(WeightedAllocation {
                coefficient,
                allocation: allocation.clone(),
            });
        }
    }
}

pub(crate) fn buckets_into_solution(
    buckets: Vec<IndexMap<AllocKey, WeightedAllocation>>,
    divisor: f64,
    num_resources: usize,
) -> DecomposedSolution {
    let per_customer = buckets
        .into_iter()
        .map(|bucket| {
            bucket
                .into_values()
                .map(|mut term| {
                    term.coefficient /= divisor;
                    term
                })
                .collect()
        })
        .collect();
    DecomposedSolution::from_parts(per_customer, num_resources)
}

/// Default per-phase call cap. With usable width hints the cap is ten times
/// the analytic bound on all calls through phase t; otherwise a flat 1e7.
fn phase_call_cap(instance: &Instance, params: &CoreParams, t: usize) -> u64 {
    if let Some(cap) = params.call_cap {
        return cap;
    }
    let n = instance.num_customers() as u64;
    let m = instance.num_resources() as f64;
    let eta = params.eta();
    if let Some(width_sum) = instance.width_sum() {
        let sigma_guess = instance.sigma() * width_sum;
        if eta * sigma_guess < 1.0 {
            let bound =
                (m / params.epsilon) * (t as f64 * eta * sigma_guess) / (1.0 - eta * sigma_guess);
            if bound.is_finite() {
                return 10 * (n + bound.ceil() as u64);
            }
        }
    }
    10_000_000
}

/// Runs the core algorithm for `params.phases` phases on `instance`.
///
/// Each customer is completed in list order; a solution b is accepted with
/// coefficient xi = min{1 - alpha, 1/||b||_inf} and prices are raised by
/// exp(eps * xi * b_r) after every call. Calls where the second branch
/// attains the minimum (ties included) count as restricted, the rest as
/// standard. Theta_t is recorded once per phase at the phase-end prices.
///
/// The caller is responsible for the intended regime eta * sigma * lambda* < 1
/// (not checkable without lambda*); phases that exceed the call cap abort
/// with [`Error::CallCapExceeded`], the loud signal for lambda* >> 1.
pub fn run_core(
    instance: &Instance,
    params: &CoreParams,
    mut observer: Option<PhaseObserver<'_>>,
) -> Result<CoreResult> {
    let m = instance.num_resources();
    let n = instance.num_customers();
    let eps = params.epsilon;
    let policy = params.policy;
    let exact_mode = exact_opt_available(instance);

    let mut prices = PriceState::uniform(m);
    let mut buckets: Vec<IndexMap<AllocKey, WeightedAllocation>> =
        (0..n).map(|_| IndexMap::new()).collect();
    let mut sum_s = vec![0.0; m];
    let mut average = vec![0.0; m];
    let mut dual_weight_sum = vec![0.0; m];
    let mut phase_solutions = params.keep_phase_solutions.then(Vec::new);

    let mut stats = RunStats {
        theta_exact: exact_mode,
        epsilon_final: eps,
        lambda_guess_final: 1.0,
        per_customer_standard: vec![0; n],
        per_customer_restricted: vec![0; n],
        ..RunStats::default()
    };

    for t in 1..=params.phases {
        let cap = phase_call_cap(instance, params, t);
        let mut phase_calls: u64 = 0;
        let mut phase_s = vec![0.0; m];
        // per-customer max of ln <y_raw, b> over the phase's calls; feeds the
        // discounted theta when exact optima are unavailable
        let mut max_log_cost = vec![f64::NEG_INFINITY; n];

        for (c, block) in instance.blocks().iter().enumerate() {
            let mut alpha = 0.0_f64;
            loop {
                if phase_calls >= cap {
                    return Err(Error::CallCapExceeded {
                        phase: t,
                        calls: phase_calls,
                        cap,
                    });
                }
                let shift = prices.max_exponent();
                let (b, cost) = oracle_evaluate(block.as_ref(), &prices)?;
                let linf = b.linf();
                let remaining = 1.0 - alpha;
                let cap_step = if linf > 0.0 { 1.0 / linf } else { f64::INFINITY };
                let restricted = cap_step <= remaining;
                let xi = if restricted { cap_step } else { remaining };

                for (r, &br) in b.entries().iter().enumerate() {
                    if br != 0.0 {
                        prices.bump(r, eps * xi * br);
                        phase_s[r] += xi * br;
                    }
                }
                merge_term(&mut buckets[c], xi, &b);
                if cost > 0.0 {
                    max_log_cost[c] = max_log_cost[c].max(shift + cost.ln());
                }
                phase_calls += 1;
                if restricted {
                    stats.restricted_calls += 1;
                    stats.per_customer_restricted[c] += 1;
                    alpha += xi;
                    if alpha >= 1.0 - policy.alpha_tol {
                        break;
                    }
                } else {
                    stats.standard_calls += 1;
                    stats.per_customer_standard[c] += 1;
                    break; // the standard step closes the customer: alpha = 1
                }
            }
        }

        // phase end
        for r in 0..m {
            sum_s[r] += phase_s[r];
            average[r] = sum_s[r] / t as f64;
        }
        let l1 = prices.l1_log();
        let (theta_t, theta_is_exact) = if exact_mode {
            let opt = minkowski_opt(instance, &prices).expect("exactness probed above");
            let norm_l1 = (l1 - prices.max_exponent()).exp();
            (opt / norm_l1, true)
        } else {
            // certified lower bound from the phase's own answers:
            // sum_C max-call-cost / (sigma ||y^(t)||_1) <= Theta_t
            let mut sum = 0.0;
            for &lc in &max_log_cost {
                if lc > f64::NEG_INFINITY {
                    sum += (lc - l1).exp();
                }
            }
            (sum / instance.sigma(), false)
        };
        for (r, a) in prices.exponents().iter().enumerate() {
            dual_weight_sum[r] += (a - l1).exp();
        }

        stats.phases_completed = t;
        stats.theta_trace.push(theta_t);
        stats.l1_log_price_trace.push(l1);
        stats
            .max_x_trace
            .push(average.iter().copied().fold(0.0, f64::max));
        stats.calls_trace.push(stats.total_calls());
        stats.standard_calls_trace.push(stats.standard_calls);
        stats.epsilon_trace.push(eps);
        if let Some(keep) = phase_solutions.as_mut() {
            keep.push(AllocationVector::new(phase_s.clone()));
        }
        if let Some(obs) = observer.as_mut() {
            obs(&PhaseEvent {
                phase: t,
                average: &average,
                exponents: prices.exponents(),
                l1_log_price: l1,
                theta: theta_t,
                theta_exact: theta_is_exact,
                calls_cumulative: stats.total_calls(),
                standard_cumulative: stats.standard_calls,
                restricted_cumulative: stats.restricted_calls,
            });
        }
    }

    let primal = buckets_into_solution(buckets, params.phases as f64, m);
    let mut weights = dual_weight_sum;
    for w in &mut weights {
        *w /= params.phases as f64;
    }
    let dual = if exact_mode {
        let mut value = 0.0;
        for block in instance.blocks() {
            value += block.exact_opt(&weights).expect("exactness probed above");
        }
        DualCertificate {
            weights,
            certified_value: value,
            exact: true,
        }
    } else {
        // mean of the per-phase discounted bounds certifies z^(T):
        // min_x <z,x> >= (1/T) sum Theta_t >= (1/T) sum recorded values
        let value = stats.theta_trace.iter().sum::<f64>() / stats.theta_trace.len() as f64;
        DualCertificate {
            weights,
            certified_value: value,
            exact: false,
        }
    };

    Ok(CoreResult {
        primal,
        dual,
        stats,
        final_prices: prices,
        phase_solutions,
        phase_solutions_kept: params.keep_phase_solutions,
    })
}
