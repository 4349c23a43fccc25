//! Bootstrap scaling, the restart-based constant-factor approximation, and
//! the full FPTAS pipeline that chains them in front of the core algorithm.

use indexmap::IndexMap;

use crate::core_solver::{
    buckets_into_solution, merge_term, run_core, AllocKey, CoreParams, CoreResult, PhaseObserver,
};
use crate::error::{Error, Result};
use crate::model::{
    AllocationVector, DecomposedSolution, DualCertificate, Instance, NumericPolicy, PriceState,
    RunStats, WeightedAllocation,
};
use crate::oracles::{exact_opt_available, minkowski_opt, oracle_evaluate};

/// Mutable state of the scaling solver. Outside the halving line it always
/// holds epsilon_current * lambda_guess = 1/(4 sigma), hence every price
/// update satisfies eps * xi * b_r <= 1/(4 sigma).
#[derive(Debug, Clone)]
pub struct ScalingState {
    /// Current guess Lambda on lambda*, doubled per restart.
    pub lambda_guess: f64,
    /// Current epsilon, halved per restart.
    pub epsilon_current: f64,
    /// Prices at the start of the current phase (y^(t-1)).
    pub phase_snapshot: PriceState,
    /// Phase indices of the restarts so far.
    pub restart_log: Vec<usize>,
}

impl ScalingState {
    fn new(sigma: f64, num_resources: usize) -> Self {
        ScalingState {
            lambda_guess: 1.0,
            epsilon_current: 1.0 / (4.0 * sigma),
            phase_snapshot: PriceState::uniform(num_resources),
            restart_log: Vec::new(),
        }
    }

    fn restart(&mut self, phase: usize) {
        self.epsilon_current /= 2.0;
        self.lambda_guess *= 2.0;
        self.restart_log.push(phase);
    }

    /// eps * Lambda stays pinned at 1/(4 sigma); halving and doubling are
    /// exact in binary floating point.
    pub fn product_invariant_holds(&self, sigma: f64) -> bool {
        self.epsilon_current * self.lambda_guess == 1.0 / (4.0 * sigma)
    }
}

/// Result of the bootstrap price query at uniform prices.
pub enum BootstrapOutcome {
    /// ||x0||_inf = 0: the all-zero solution is optimal (lambda* = 0).
    Degenerate { stats: RunStats },
    Scaled {
        /// The instance rescaled so that its optimum lies in [1, sigma*m].
        instance: Instance,
        /// The n-call solution sum_C f_C(1), already rescaled.
        x0: DecomposedSolution,
        /// Multiplier applied to the blocks: sigma*m / ||x0||_inf.
        factor: f64,
        stats: RunStats,
    },
}

/// Queries every block once at uniform prices and rescales the instance by
/// sigma*m / ||x0||_inf. The sandwich lambda* <= ||x0||_inf <= sigma*m*lambda*
/// puts the rescaled optimum into [1, sigma*m].
pub fn bootstrap_scale(instance: &Instance) -> Result<BootstrapOutcome> {
    let m = instance.num_resources();
    let n = instance.num_customers();
    let prices = PriceState::uniform(m);
    let mut per_customer = Vec::with_capacity(n);
    for block in instance.blocks() {
        let (b, _) = oracle_evaluate(block.as_ref(), &prices)?;
        per_customer.push(vec![WeightedAllocation {
            coefficient: 1.0,
            allocation: b,
        }]);
    }
    let x0 = DecomposedSolution::from_parts(per_customer, m);
    let stats = RunStats {
        standard_calls: n as u64,
        per_customer_standard: vec![1; n],
        per_customer_restricted: vec![0; n],
        theta_exact: exact_opt_available(instance),
        ..RunStats::default()
    };
    let max = x0.aggregate().linf();
    if max == 0.0 {
        return Ok(BootstrapOutcome::Degenerate { stats });
    }
    let factor = instance.sigma() * m as f64 / max;
    Ok(BootstrapOutcome::Scaled {
        instance: instance.scaled(factor)?,
        x0: x0.scaled(factor),
        factor,
        stats,
    })
}

/// Number of phases of the constant-factor stage: ceil(ln m), at least 1.
pub fn constant_factor_phases(num_resources: usize) -> usize {
    ((num_resources as f64).ln().ceil() as usize).max(1)
}

/// Runs the constant-factor approximation on an instance pre-scaled so that
/// lambda* lies in [1, sigma*m].
///
/// Phases use the step rule xi = min{1 - alpha, Lambda/||b||_inf} and the
/// update a_r += eps * xi * b_r. Immediately after every price update the
/// bound ln||y||_1 <= ln m + t is checked; on violation the phase-start
/// prices are restored, eps is halved, Lambda doubled, the phase's partial
/// solutions (all customers) are discarded, and the phase restarts. The
/// average of the T completed phases satisfies ||x||_inf <= 16*sigma*lambda*
/// with at most ceil(log2 lambda*) restarts.
pub fn run_constant_factor(instance: &Instance) -> Result<(DecomposedSolution, RunStats)> {
    let m = instance.num_resources();
    let n = instance.num_customers();
    let sigma = instance.sigma();
    let policy = NumericPolicy::default();
    let phases = constant_factor_phases(m);
    let ln_m = (m as f64).ln();
    let exact_mode = exact_opt_available(instance);
    // Lemma "K <= K*" bounds restarts by ceil(log2 lambda*) <= ceil(log2 sigma m);
    // exceeding that means an oracle broke its contract.
    let restart_guard = (sigma * m as f64).log2().ceil().max(0.0) as usize + 1;

    let mut state = ScalingState::new(sigma, m);
    let mut prices = PriceState::uniform(m);
    let mut buckets: Vec<IndexMap<AllocKey, WeightedAllocation>> =
        (0..n).map(|_| IndexMap::new()).collect();
    let mut sum_s = vec![0.0; m];
    let mut stats = RunStats {
        theta_exact: exact_mode,
        per_customer_standard: vec![0; n],
        per_customer_restricted: vec![0; n],
        ..RunStats::default()
    };

    for t in 1..=phases {
        state.phase_snapshot = prices.clone();
        let price_bound = ln_m + t as f64;
        // analytic per-attempt envelope: n standard calls plus O(sigma m t)
        // restricted calls; generously padded
        let attempt_cap =
            100 + (20.0 * (n as f64 + 8.0 * sigma * m as f64 * (t as f64 + ln_m))) as u64;

        'attempt: loop {
            debug_assert!(state.product_invariant_holds(sigma));
            let mut phase_terms: Vec<Vec<(f64, AllocationVector)>> = vec![Vec::new(); n];
            let mut phase_s = vec![0.0; m];
            let mut attempt_calls: u64 = 0;

            for (c, block) in instance.blocks().iter().enumerate() {
                let mut alpha = 0.0_f64;
                loop {
                    if attempt_calls >= attempt_cap {
                        return Err(Error::Invariant(format!(
                            "phase {t} attempt exceeded {attempt_cap} calls"
                        )));
                    }
                    let (b, _) = oracle_evaluate(block.as_ref(), &prices)?;
                    let linf = b.linf();
                    let remaining = 1.0 - alpha;
                    let cap_step = if linf > 0.0 {
                        state.lambda_guess / linf
                    } else {
                        f64::INFINITY
                    };
                    let restricted = cap_step <= remaining;
                    let xi = if restricted { cap_step } else { remaining };

                    for (r, &br) in b.entries().iter().enumerate() {
                        if br != 0.0 {
                            prices.bump(r, state.epsilon_current * xi * br);
                            phase_s[r] += xi * br;
                        }
                    }
                    phase_terms[c].push((xi, b));
                    attempt_calls += 1;
                    if restricted {
                        stats.restricted_calls += 1;
                        stats.per_customer_restricted[c] += 1;
                    } else {
                        stats.standard_calls += 1;
                        stats.per_customer_standard[c] += 1;
                    }

                    if prices.l1_log() > price_bound {
                        prices.restore(&state.phase_snapshot);
                        state.restart(t);
                        stats.restarts += 1;
                        stats.restart_phases.push(t);
                        if stats.restarts > restart_guard {
                            return Err(Error::Invariant(format!(
                                "{} restarts exceed the ceil(log2(sigma*m)) + 1 guard of {restart_guard}",
                                stats.restarts
                            )));
                        }
                        continue 'attempt; // discard this phase's partial solutions
                    }

                    if restricted {
                        alpha += xi;
                        if alpha >= 1.0 - policy.alpha_tol {
                            break;
                        }
                    } else {
                        break;
                    }
                }
            }

            // phase completed: merge its solutions
            for (c, terms) in phase_terms.into_iter().enumerate() {
                for (xi, b) in terms {
                    merge_term(&mut buckets[c], xi, &b);
                }
            }
            for r in 0..m {
                sum_s[r] += phase_s[r];
            }
            let l1 = prices.l1_log();
            stats.phases_completed = t;
            stats.l1_log_price_trace.push(l1);
            stats
                .max_x_trace
                .push(sum_s.iter().copied().fold(0.0, f64::max) / t as f64);
            stats.calls_trace.push(stats.total_calls());
            stats.standard_calls_trace.push(stats.standard_calls);
            stats.epsilon_trace.push(state.epsilon_current);
            if exact_mode {
                let opt = minkowski_opt(instance, &prices).expect("exactness probed above");
                let norm_l1 = (l1 - prices.max_exponent()).exp();
                stats.theta_trace.push(opt / norm_l1);
            }
            break 'attempt;
        }
    }

    stats.epsilon_final = state.epsilon_current;
    stats.lambda_guess_final = state.lambda_guess;
    let solution = buckets_into_solution(buckets, phases as f64, m);
    Ok((solution, stats))
}

/// Core parameters prescribed by the FPTAS: eps = delta/(8 sigma) and
/// T = ceil(ln m / (2 sigma c eps^2)) with c = 1/(16 sigma), i.e. the
/// parameterization that follows the 16-sigma preprocessing. T is capped at
/// 1e7 as a desk-scale guard.
pub fn fptas_core_params(delta: f64, sigma: f64, num_resources: usize) -> Result<CoreParams> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Input(format!("delta {delta} must lie in (0, 1]")));
    }
    let epsilon = delta / (8.0 * sigma);
    let ln_m = (num_resources as f64).ln();
    let c = 1.0 / (16.0 * sigma);
    let phases_real = (ln_m / (2.0 * sigma * c * epsilon * epsilon)).ceil();
    if phases_real > 1e7 {
        return Err(Error::Unsupported(format!(
            "FPTAS needs {phases_real} phases (> 1e7 desk-scale guard); raise delta"
        )));
    }
    CoreParams::new(epsilon, (phases_real as usize).max(1))
}

/// Output of the full pipeline, reported in original units.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub primal: DecomposedSolution,
    pub dual: DualCertificate,
    /// (certified lower bound, ||x||_inf): lambda* lies in between.
    pub lambda_star_bounds: (f64, f64),
    pub stats_bootstrap: RunStats,
    pub stats_constfactor: RunStats,
    pub stats_core: RunStats,
    /// Internal units = original units * total_scale.
    pub total_scale: f64,
    pub delta: f64,
    /// True iff the bootstrap found lambda* = 0 and returned the zero solution.
    pub degenerate: bool,
}

/// The full FPTAS of the main theorem: bootstrap scaling, constant-factor
/// stage (output max <= 16*sigma*lambda*), rescale by 1/||x||_inf so the
/// optimum lies in [1/(16 sigma), 1], then the core algorithm with
/// eps = delta/(8 sigma), mapped back to original units.
///
/// Guarantees: ||x||_inf <= (1+delta)*sigma*lambda*, certified dual value
/// >= (1-delta)*lambda*/sigma, and max_{r in S} x_r <= mu + delta*max{lambda*, mu}
/// for every subset S with local weak duality at mu.
pub fn solve_fptas(
    instance: &Instance,
    delta: f64,
    core_observer: Option<PhaseObserver<'_>>,
) -> Result<PipelineResult> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Input(format!("delta {delta} must lie in (0, 1]")));
    }
    let m = instance.num_resources();
    let n = instance.num_customers();

    let (scaled, _x0, factor, stats_bootstrap) = match bootstrap_scale(instance)? {
        BootstrapOutcome::Degenerate { stats } => {
            return Ok(PipelineResult {
                primal: DecomposedSolution::zero(n, m),
                dual: DualCertificate {
                    weights: vec![1.0 / m as f64; m],
                    certified_value: 0.0,
                    exact: true,
                },
                lambda_star_bounds: (0.0, 0.0),
                stats_bootstrap: stats,
                stats_constfactor: RunStats::default(),
                stats_core: RunStats::default(),
                total_scale: 1.0,
                delta,
                degenerate: true,
            });
        }
        BootstrapOutcome::Scaled {
            instance,
            x0,
            factor,
            stats,
        } => (instance, x0, factor, stats),
    };

    let (cf_solution, stats_constfactor) = run_constant_factor(&scaled)?;
    let cf_max = cf_solution.aggregate().linf();
    debug_assert!(cf_max >= 1.0 - 1e-9, "lambda* >= 1 after bootstrap");

    let core_instance = scaled.scaled(1.0 / cf_max)?;
    let params = fptas_core_params(delta, instance.sigma(), m)?;
    let core: CoreResult = run_core(&core_instance, &params, core_observer)?;

    let total_scale = factor / cf_max;
    let primal = core.primal.scaled(1.0 / total_scale);
    let certified = core.dual.certified_value / total_scale;
    let dual = DualCertificate {
        weights: core.dual.weights.clone(),
        certified_value: certified,
        exact: core.dual.exact,
    };
    let upper = primal.aggregate().linf();
    Ok(PipelineResult {
        primal,
        dual,
        lambda_star_bounds: (certified, upper),
        stats_bootstrap,
        stats_constfactor,
        stats_core: core.stats,
        total_scale,
        delta,
        degenerate: false,
    })
}
