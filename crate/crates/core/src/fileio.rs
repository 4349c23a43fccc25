//! Instance, report, and trace file formats. Text-based for diffability;
//! floating values round-trip exactly through serde_json's shortest-exact
//! representation, so audits reproduce across platforms.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{AuditCheck, AuditReport};
use crate::error::{Error, Result};
use crate::model::{DecomposedSolution, DualCertificate, NumericPolicy, RunStats};
use crate::oracles::BlockDesc;
use crate::scaling::PipelineResult;

pub const FORMAT_VERSION: u32 = 1;

/// On-disk instance description. Block descriptors are tagged by registered
/// family name; resource indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub resources: usize,
    pub sigma: f64,
    pub blocks: Vec<BlockDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<InstanceMetadata>,
}

/// Declared ground truth carried alongside generated instances.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decmin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certs: Vec<CertDesc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertDesc {
    pub subset: Vec<usize>,
    pub mu: f64,
}

impl InstanceFile {
    pub fn validate_header(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported instance file version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        if self.resources == 0 {
            return Err(Error::Input("instance file has zero resources".into()));
        }
        if self.blocks.is_empty() {
            return Err(Error::Input("instance file has no blocks".into()));
        }
        if !(self.sigma >= 1.0) {
            return Err(Error::Input(format!("sigma {} must be >= 1", self.sigma)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("instance parse: {e}")))?;
        file.validate_header()?;
        Ok(file)
    }
}

/// One term of a reported convex combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportTerm {
    pub coefficient: f64,
    pub allocation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDual {
    pub weights: Vec<f64>,
    pub certified_value: f64,
    pub exact: bool,
}

/// Scalar summary of a run's statistics (traces go to the CSV trace file).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StatsSummary {
    pub phases: usize,
    pub standard_calls: u64,
    pub restricted_calls: u64,
    pub diagnostic_calls: u64,
    pub total_calls: u64,
    pub restarts: usize,
    pub restart_phases: Vec<usize>,
    pub epsilon_final: f64,
    pub lambda_guess_final: f64,
    pub theta_exact: bool,
    pub per_customer_standard: Vec<u64>,
    pub per_customer_restricted: Vec<u64>,
}

impl StatsSummary {
    pub fn from_stats(stats: &RunStats) -> Self {
        StatsSummary {
            phases: stats.phases_completed,
            standard_calls: stats.standard_calls,
            restricted_calls: stats.restricted_calls,
            diagnostic_calls: stats.diagnostic_calls,
            total_calls: stats.total_calls(),
            restarts: stats.restarts,
            restart_phases: stats.restart_phases.clone(),
            epsilon_final: stats.epsilon_final,
            lambda_guess_final: stats.lambda_guess_final,
            theta_exact: stats.theta_exact,
            per_customer_standard: stats.per_customer_standard.clone(),
            per_customer_restricted: stats.per_customer_restricted.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<StatsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_factor: Option<StatsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<StatsSummary>,
}

/// On-disk run report; all quantities are in original instance units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub sigma: f64,
    /// Internal solver units were original units times this factor.
    pub scale_applied: f64,
    pub primal_aggregate: Vec<f64>,
    pub per_customer: Vec<Vec<ReportTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<ReportDual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star_bounds: Option<[f64; 2]>,
    pub stats: ReportStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<AuditCheck>,
}

impl ReportFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("report parse: {e}")))
    }
}

fn terms_of(solution: &DecomposedSolution) -> Vec<Vec<ReportTerm>> {
    solution
        .per_customer()
        .iter()
        .map(|terms| {
            terms
                .iter()
                .map(|t| ReportTerm {
                    coefficient: t.coefficient,
                    allocation: t.allocation.entries().to_vec(),
                })
                .collect()
        })
        .collect()
}

pub fn report_from_pipeline(result: &PipelineResult, sigma: f64, audit: Vec<AuditCheck>) -> ReportFile {
    ReportFile {
        version: FORMAT_VERSION,
        command: "solve".into(),
        delta: Some(result.delta),
        sigma,
        scale_applied: result.total_scale,
        primal_aggregate: result.primal.aggregate().entries().to_vec(),
        per_customer: terms_of(&result.primal),
        dual: Some(ReportDual {
            weights: result.dual.weights.clone(),
            certified_value: result.dual.certified_value,
            exact: result.dual.exact,
        }),
        lambda_star_bounds: Some([result.lambda_star_bounds.0, result.lambda_star_bounds.1]),
        stats: ReportStats {
            bootstrap: Some(StatsSummary::from_stats(&result.stats_bootstrap)),
            constant_factor: Some(StatsSummary::from_stats(&result.stats_constfactor)),
            core: Some(StatsSummary::from_stats(&result.stats_core)),
        },
        audit,
    }
}

pub fn report_from_solution(
    command: &str,
    solution: &DecomposedSolution,
    dual: Option<&DualCertificate>,
    stats: ReportStats,
    sigma: f64,
    scale_applied: f64,
    audit: Vec<AuditCheck>,
) -> ReportFile {
    ReportFile {
        version: FORMAT_VERSION,
        command: command.into(),
        delta: None,
        sigma,
        scale_applied,
        primal_aggregate: solution.aggregate().entries().to_vec(),
        per_customer: terms_of(solution),
        dual: dual.map(|d| ReportDual {
            weights: d.weights.clone(),
            certified_value: d.certified_value,
            exact: d.exact,
        }),
        lambda_star_bounds: None,
        stats,
        audit,
    }
}

/// Writes `content` to `path` atomically: temp file in the same directory,
/// then rename. No partial files on error.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("cannot write to {}", path.display())))?;
    let tmp_name = format!(
        ".{}.{}.tmp",
        file_name.to_string_lossy(),
        std::process::id()
    );
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    let io_err = |e: std::io::Error| Error::Input(format!("write {}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp_path).map_err(io_err)?;
        f.write_all(content.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp_path, path).map_err(io_err)?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("read {}: {e}", path.display())))
}

/// Per-phase trace rows, comma-separated with a header. Column order is
/// fixed: phase, l1_log_price, theta, max_x, calls_cumulative.
pub fn trace_csv(stats: &RunStats) -> String {
    let mut out = String::from("phase,l1_log_price,theta,max_x,calls_cumulative\n");
    for i in 0..stats.phases_completed {
        let theta = stats.theta_trace.get(i).copied().unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            stats.l1_log_price_trace[i],
            theta,
            stats.max_x_trace[i],
            stats.calls_trace[i]
        ));
    }
    out
}

/// Re-derives every internal-consistency property of a report and, given
/// declared metadata, the approximation bounds. Catches tampering: an edited
/// primal entry breaks the decomposition re-sum or the lambda* bounds.
pub fn audit_report_file(instance: &InstanceFile, report: &ReportFile) -> AuditReport {
    let mut audit = AuditReport::new(format!("report audit: command {}", report.command));
    let policy = NumericPolicy::default();
    let m = instance.resources;

    // decomposition consistency
    let mut worst_entry = 0.0_f64;
    let mut worst_coeff = 0.0_f64;
    let mut worst_negative = 0.0_f64;
    let mut resum = vec![0.0; m];
    for terms in &report.per_customer {
        let mut coeff_sum = 0.0;
        for term in terms {
            coeff_sum += term.coefficient;
            for (r, &v) in term.allocation.iter().enumerate() {
                if r < m {
                    resum[r] += term.coefficient * v;
                }
                worst_negative = worst_negative.max(-v);
            }
        }
        worst_coeff = worst_coeff.max((coeff_sum - 1.0).abs());
    }
    for r in 0..m {
        let claimed = report.primal_aggregate.get(r).copied().unwrap_or(f64::NAN);
        worst_entry = worst_entry.max((resum[r] - claimed).abs());
    }
    audit.push_upper("decomposition_resum_abs_err", policy.decomposition_tol, worst_entry, 0.0);
    audit.push_upper("coefficient_sums_abs_err", policy.decomposition_tol, worst_coeff, 0.0);
    audit.push_upper("allocation_nonnegative", 0.0, worst_negative, policy.decomposition_tol);

    if let Some(dual) = &report.dual {
        let sum: f64 = dual.weights.iter().sum();
        audit.push_upper(
            "dual_weights_sum_abs_err",
            policy.decomposition_tol,
            (sum - 1.0).abs(),
            0.0,
        );
        audit.push_lower("dual_certified_nonnegative", 0.0, dual.certified_value, 0.0);
    }

    if let Some([lo, hi]) = report.lambda_star_bounds {
        audit.push_upper("lambda_bounds_ordered", hi, lo, policy.decomposition_tol);
        let max = report
            .primal_aggregate
            .iter()
            .copied()
            .fold(0.0_f64, f64::max);
        audit.push_upper(
            "primal_max_matches_upper_bound",
            hi,
            max,
            policy.decomposition_tol.max(1e-9 * hi.abs()),
        );
    }

    for (name, summary) in [
        ("bootstrap", &report.stats.bootstrap),
        ("constant_factor", &report.stats.constant_factor),
        ("core", &report.stats.core),
    ] {
        if let Some(s) = summary {
            audit.push_upper(
                format!("stats_{name}_call_split_consistent"),
                0.0,
                (s.standard_calls + s.restricted_calls) as f64 - s.total_calls as f64,
                0.0,
            );
            let monotone = s.restart_phases.windows(2).all(|w| w[0] <= w[1]);
            audit.push_upper(
                format!("stats_{name}_restart_phases_nondecreasing"),
                0.0,
                if monotone { 0.0 } else { 1.0 },
                0.0,
            );
        }
    }

    let meta = instance.metadata.clone().unwrap_or_default();
    match meta.lambda_star {
        None => {
            audit.push_skipped("primal_approximation_bound", "declared lambda* missing");
            audit.push_skipped("dual_approximation_bound", "declared lambda* missing");
        }
        Some(lambda_star) => {
            let max = report
                .primal_aggregate
                .iter()
                .copied()
                .fold(0.0_f64, f64::max);
            match (report.command.as_str(), report.delta) {
                ("solve", Some(delta)) => {
                    audit.push_upper(
                        "primal_approximation_bound",
                        (1.0 + delta) * report.sigma * lambda_star,
                        max,
                        policy.audit_tol,
                    );
                    if let Some(dual) = &report.dual {
                        audit.push_lower(
                            "dual_approximation_bound",
                            (1.0 - delta) * lambda_star / report.sigma,
                            dual.certified_value,
                            policy.audit_tol,
                        );
                    }
                    for (i, cert) in meta.certs.iter().enumerate() {
                        let local_max = cert
                            .subset
                            .iter()
                            .filter_map(|&r| report.primal_aggregate.get(r))
                            .copied()
                            .fold(0.0_f64, f64::max);
                        audit.push_upper(
                            format!("local_bound_cert{i}(mu={})", cert.mu),
                            cert.mu + delta * lambda_star.max(cert.mu),
                            local_max,
                            policy.audit_tol,
                        );
                    }
                }
                ("approx", _) => {
                    audit.push_upper(
                        "primal_approximation_bound",
                        16.0 * report.sigma * lambda_star,
                        max,
                        policy.audit_tol,
                    );
                    if let Some(cf) = &report.stats.constant_factor {
                        // restarts compare against lambda* of the instance the
                        // stage ran on: declared lambda* times bootstrap factor
                        let k_star = if report.stats.bootstrap.is_some() {
                            (lambda_star * report.scale_applied).log2().ceil().max(0.0)
                        } else {
                            (report.sigma * m as f64).log2().ceil().max(0.0)
                        };
                        audit.push_upper("constfactor_restarts", k_star, cf.restarts as f64, 0.0);
                    }
                }
                _ => {
                    audit.push_upper(
                        "primal_vs_lambda_star_sanity",
                        // any solver output is feasible, so its max is >= lambda*
                        max,
                        lambda_star,
                        policy.audit_tol,
                    );
                }
            }
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_instance_file() -> InstanceFile {
        InstanceFile {
            version: 1,
            resources: 2,
            sigma: 1.0,
            blocks: vec![BlockDesc::Simplex { scale: 2.0 }],
            metadata: Some(InstanceMetadata {
                lambda_star: Some(1.0),
                decmin: None,
                certs: vec![],
                provenance: Some("test".into()),
            }),
        }
    }

    #[test]
    fn instance_roundtrip_is_identity() {
        let file = simple_instance_file();
        let json = file.to_json();
        let back = InstanceFile::from_json(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn version_and_header_checks() {
        let mut file = simple_instance_file();
        file.version = 2;
        assert!(InstanceFile::from_json(&file.to_json()).is_err());
        let mut file = simple_instance_file();
        file.sigma = 0.5;
        assert!(InstanceFile::from_json(&file.to_json()).is_err());
    }

    #[test]
    fn atomic_write_creates_no_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, "hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn trace_csv_has_fixed_columns() {
        let mut stats = RunStats::default();
        stats.phases_completed = 2;
        stats.theta_trace = vec![0.5, 0.75];
        stats.l1_log_price_trace = vec![1.0, 2.0];
        stats.max_x_trace = vec![0.1, 0.2];
        stats.calls_trace = vec![3, 6];
        let csv = trace_csv(&stats);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "phase,l1_log_price,theta,max_x,calls_cumulative"
        );
        assert_eq!(lines.next().unwrap(), "1,1,0.5,0.1,3");
        assert_eq!(lines.next().unwrap(), "2,2,0.75,0.2,6");
    }
}
