//! Command-line front end: instance generation and serialization, solver
//! invocation, trace export, and audit reporting.
//!
//! Exit codes: 0 success (and all audit rows pass), 1 failed audit rows,
//! 2 input/parse errors, 3 oracle contract violations, 4 call-cap aborts.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use rshare_core::analysis::{
    audit_constant_factor_run, audit_core_run, audit_core_traces, audit_core_with_certs,
    AuditContext, AuditReport,
};
use rshare_core::core_solver::{run_core, CoreParams};
use rshare_core::error::Error;
use rshare_core::fileio::{
    audit_report_file, report_from_pipeline, report_from_solution, read_to_string, trace_csv,
    write_atomic, InstanceFile, ReportFile, ReportStats, StatsSummary,
};
use rshare_core::gen::{
    gen_adversarial, gen_cut_vertex_flow, gen_lowerbound_composite, gen_product,
    gen_random_vertex, realize, CutFlowTemplate, GeneratedInstance,
};
use rshare_core::scaling::{bootstrap_scale, run_constant_factor, solve_fptas, BootstrapOutcome};

#[derive(Parser)]
#[command(name = "rshare", version, about = "Block-angular min-max resource sharing solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file with declared ground-truth metadata
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Run the full FPTAS pipeline (bootstrap, constant factor, core)
    Solve {
        instance: PathBuf,
        /// Target accuracy: output max <= (1+delta)*sigma*lambda*
        #[arg(long)]
        delta: f64,
        /// Optional per-phase trace CSV of the core stage
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the core algorithm directly; the instance must be pre-normalized
    /// (lambda* close to 1) for fast convergence
    Core {
        instance: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        phases: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Bootstrap scaling plus the restart-based constant-factor stage
    Approx {
        instance: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Audit a report against its instance, or rerun with instrumentation
    Audit {
        instance: PathBuf,
        /// Report file to check for internal consistency and declared bounds
        #[arg(long)]
        report: Option<PathBuf>,
        /// Rerun the given solver with an instrumented observer
        #[arg(long, value_enum)]
        rerun: Option<RerunMode>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        phases: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Single-customer hull of (1,1,0,...) and a tall competitor vertex
    Adversarial {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Hard block + scaled simplex + n zero blocks on 2m resources
    Lowerbound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Instance file whose first block replaces the default hard block
        #[arg(long)]
        hard: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Commodity flow on a network with a cut vertex
    Cutflow {
        #[arg(long, value_enum, default_value_t = CutFlowKind::Parallel)]
        template: CutFlowKind,
        #[arg(long, default_value_t = 2)]
        left: usize,
        #[arg(long, default_value_t = 2)]
        right: usize,
        #[arg(long, default_value_t = 1)]
        commodities: usize,
        #[arg(long, default_value_t = 1.0)]
        demand: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Product of part instances on concatenated resource windows
    Product {
        #[arg(long = "part", required = true)]
        parts: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Reproducible pseudo-random vertex hulls
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 3)]
        vertices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        magnitude: f64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CutFlowKind {
    Parallel,
    Fig2,
}

#[derive(Clone, Copy, ValueEnum)]
enum RerunMode {
    Core,
    Fptas,
    Approx,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Infeasible(_) | Error::Unsupported(_) => 2,
        Error::OracleContract(_) | Error::Invariant(_) => 3,
        Error::CallCapExceeded { .. } => 4,
    }
}

fn load(path: &Path) -> Result<(InstanceFile, GeneratedInstance), Error> {
    let text = read_to_string(path)?;
    let file = InstanceFile::from_json(&text)?;
    let generated = realize(file.clone())?;
    Ok((file, generated))
}

fn write_instance(path: &Path, generated: &GeneratedInstance) -> Result<(), Error> {
    write_atomic(path, &generated.descriptor.to_json())?;
    let lambda = generated
        .declared_lambda_star
        .map(|l| l.to_string())
        .unwrap_or_else(|| "unknown".into());
    println!(
        "wrote {}: n={} m={} lambda_star={}",
        path.display(),
        generated.instance.num_customers(),
        generated.instance.num_resources(),
        lambda
    );
    Ok(())
}

fn audit_context<'a>(g: &'a GeneratedInstance, label: &str) -> AuditContext<'a> {
    AuditContext {
        instance: &g.instance,
        declared_lambda_star: g.declared_lambda_star,
        declared_certs: &g.declared_certs,
        label: label.to_string(),
    }
}

fn emit_audit(report: &AuditReport) -> i32 {
    print!("{}", report.render());
    let skipped = report
        .checks
        .iter()
        .filter(|c| c.status == rshare_core::analysis::CheckStatus::Skipped)
        .count();
    if skipped > 0 {
        eprintln!("note: {skipped} rows skipped (missing declared metadata)");
    }
    if report.all_passed() {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Gen { family } => {
            let (generated, out) = match family {
                GenFamily::Adversarial { m, epsilon, out } => (gen_adversarial(m, epsilon)?, out),
                GenFamily::Lowerbound { n, m, hard, out } => {
                    let hard_desc = match hard {
                        None => None,
                        Some(path) => {
                            let (file, _) = load(&path)?;
                            Some(file.blocks[0].clone())
                        }
                    };
                    (gen_lowerbound_composite(n, m, hard_desc)?, out)
                }
                GenFamily::Cutflow {
                    template,
                    left,
                    right,
                    commodities,
                    demand,
                    out,
                } => {
                    let template = match template {
                        CutFlowKind::Parallel => CutFlowTemplate::Parallel { left, right },
                        CutFlowKind::Fig2 => CutFlowTemplate::Fig2,
                    };
                    (gen_cut_vertex_flow(template, commodities, demand)?, out)
                }
                GenFamily::Product { parts, out } => {
                    let mut loaded = Vec::with_capacity(parts.len());
                    for p in &parts {
                        loaded.push(load(p)?.1);
                    }
                    (gen_product(&loaded)?, out)
                }
                GenFamily::Random {
                    n,
                    m,
                    vertices,
                    seed,
                    magnitude,
                    out,
                } => (gen_random_vertex(n, m, vertices, seed, magnitude)?, out),
            };
            write_instance(&out, &generated)?;
            Ok(0)
        }

        Command::Solve {
            instance,
            delta,
            trace,
            report,
        } => {
            let (file, g) = load(&instance)?;
            let result = solve_fptas(&g.instance, delta, None)?;
            let mut out = report_from_pipeline(&result, g.instance.sigma(), vec![]);
            out.audit = audit_report_file(&file, &out).checks;
            write_atomic(&report, &out.to_json())?;
            if let Some(trace_path) = trace {
                write_atomic(&trace_path, &trace_csv(&result.stats_core))?;
            }
            println!(
                "solve: max usage {:.6e}, certified dual {:.6e} (exact: {}), lambda* in [{:.6e}, {:.6e}]",
                result.primal.aggregate().linf(),
                result.dual.certified_value,
                result.dual.exact,
                result.lambda_star_bounds.0,
                result.lambda_star_bounds.1
            );
            Ok(0)
        }

        Command::Core {
            instance,
            epsilon,
            phases,
            trace,
            report,
        } => {
            let (file, g) = load(&instance)?;
            let params = CoreParams::new(epsilon, phases)?;
            let result = run_core(&g.instance, &params, None)?;
            let ctx = audit_context(&g, "cmd core");
            let mut audit = audit_core_run(&ctx, &params, &result);
            let stats = ReportStats {
                core: Some(StatsSummary::from_stats(&result.stats)),
                ..ReportStats::default()
            };
            let mut out = report_from_solution(
                "core",
                &result.primal,
                Some(&result.dual),
                stats,
                g.instance.sigma(),
                1.0,
                vec![],
            );
            let file_rows = audit_report_file(&file, &out);
            audit.checks.extend(file_rows.checks);
            out.audit = audit.checks.clone();
            write_atomic(&report, &out.to_json())?;
            if let Some(trace_path) = trace {
                write_atomic(&trace_path, &trace_csv(&result.stats))?;
            }
            let aggregate = result.primal.aggregate();
            let min = aggregate
                .entries()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            println!(
                "core: {} phases, max usage {:.6e}, min usage {:.6e}, {} oracle calls",
                result.stats.phases_completed,
                aggregate.linf(),
                min,
                result.stats.total_calls()
            );
            Ok(0)
        }

        Command::Approx { instance, report } => {
            let (file, g) = load(&instance)?;
            match bootstrap_scale(&g.instance)? {
                BootstrapOutcome::Degenerate { stats } => {
                    let zero = rshare_core::model::DecomposedSolution::zero(
                        g.instance.num_customers(),
                        g.instance.num_resources(),
                    );
                    let mut out = report_from_solution(
                        "approx",
                        &zero,
                        None,
                        ReportStats {
                            bootstrap: Some(StatsSummary::from_stats(&stats)),
                            ..ReportStats::default()
                        },
                        g.instance.sigma(),
                        1.0,
                        vec![],
                    );
                    out.lambda_star_bounds = Some([0.0, 0.0]);
                    write_atomic(&report, &out.to_json())?;
                    println!("approx: degenerate instance, lambda* = 0, zero solution");
                    Ok(0)
                }
                BootstrapOutcome::Scaled {
                    instance: scaled,
                    factor,
                    stats: boot_stats,
                    ..
                } => {
                    let (solution, cf_stats) = run_constant_factor(&scaled)?;
                    let solution_orig = solution.scaled(1.0 / factor);
                    let max = solution_orig.aggregate().linf();
                    let sigma = g.instance.sigma();
                    let scaled_ctx = AuditContext {
                        instance: &scaled,
                        declared_lambda_star: g.declared_lambda_star.map(|l| l * factor),
                        declared_certs: &[],
                        label: "cmd approx (post-bootstrap units)".to_string(),
                    };
                    let mut audit = audit_constant_factor_run(&scaled_ctx, &solution, &cf_stats);
                    let mut out = report_from_solution(
                        "approx",
                        &solution_orig,
                        None,
                        ReportStats {
                            bootstrap: Some(StatsSummary::from_stats(&boot_stats)),
                            constant_factor: Some(StatsSummary::from_stats(&cf_stats)),
                            ..ReportStats::default()
                        },
                        sigma,
                        factor,
                        vec![],
                    );
                    out.lambda_star_bounds = Some([max / (16.0 * sigma), max]);
                    let file_rows = audit_report_file(&file, &out);
                    audit.checks.extend(file_rows.checks);
                    out.audit = audit.checks.clone();
                    write_atomic(&report, &out.to_json())?;
                    println!(
                        "approx: max usage {:.6e}, {} restarts at phases {:?}, {} oracle calls",
                        max,
                        cf_stats.restarts,
                        cf_stats.restart_phases,
                        cf_stats.total_calls()
                    );
                    Ok(0)
                }
            }
        }

        Command::Audit {
            instance,
            report,
            rerun,
            delta,
            epsilon,
            phases,
        } => {
            let (file, g) = load(&instance)?;
            match (report, rerun) {
                (Some(report_path), None) => {
                    let rep = ReportFile::from_json(&read_to_string(&report_path)?)?;
                    let audit = audit_report_file(&file, &rep);
                    Ok(emit_audit(&audit))
                }
                (None, Some(RerunMode::Core)) => {
                    let epsilon = epsilon
                        .ok_or_else(|| Error::Input("--rerun core needs --epsilon".into()))?;
                    let phases =
                        phases.ok_or_else(|| Error::Input("--rerun core needs --phases".into()))?;
                    let params = CoreParams::new(epsilon, phases)?;
                    let ctx = audit_context(&g, "audit rerun core");
                    let (_result, audit) = audit_core_with_certs(&ctx, &params)?;
                    Ok(emit_audit(&audit))
                }
                (None, Some(RerunMode::Fptas)) => {
                    let delta =
                        delta.ok_or_else(|| Error::Input("--rerun fptas needs --delta".into()))?;
                    let result = solve_fptas(&g.instance, delta, None)?;
                    let rep = report_from_pipeline(&result, g.instance.sigma(), vec![]);
                    let mut audit = audit_report_file(&file, &rep);
                    if !result.degenerate {
                        // core-stage trace rows, in the doubly-scaled units
                        let scaled_ctx = AuditContext {
                            instance: &g.instance,
                            declared_lambda_star: g
                                .declared_lambda_star
                                .map(|l| l * result.total_scale),
                            declared_certs: &[],
                            label: "fptas core stage (scaled units)".to_string(),
                        };
                        let rows = audit_core_traces(
                            &scaled_ctx,
                            result.stats_core.epsilon_final,
                            &result.stats_core,
                        );
                        audit.checks.extend(rows.checks);
                    }
                    Ok(emit_audit(&audit))
                }
                (None, Some(RerunMode::Approx)) => match bootstrap_scale(&g.instance)? {
                    BootstrapOutcome::Degenerate { .. } => {
                        let mut audit = AuditReport::new("audit rerun approx".to_string());
                        audit.push_upper("degenerate_zero_instance", 0.0, 0.0, 0.0);
                        Ok(emit_audit(&audit))
                    }
                    BootstrapOutcome::Scaled {
                        instance: scaled,
                        factor,
                        ..
                    } => {
                        let (solution, stats) = run_constant_factor(&scaled)?;
                        let ctx = AuditContext {
                            instance: &scaled,
                            declared_lambda_star: g.declared_lambda_star.map(|l| l * factor),
                            declared_certs: &[],
                            label: "audit rerun approx (post-bootstrap units)".to_string(),
                        };
                        let audit = audit_constant_factor_run(&ctx, &solution, &stats);
                        Ok(emit_audit(&audit))
                    }
                },
                (Some(_), Some(_)) => Err(Error::Input(
                    "pass either --report or --rerun, not both".into(),
                )),
                (None, None) => Err(Error::Input(
                    "audit needs --report <file> or --rerun <mode>".into(),
                )),
            }
        }
    }
}
