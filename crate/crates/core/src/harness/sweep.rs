//! ε-sweeps: members run concurrently in their own subdirectories, then the
//! cross-ε verdicts are computed once all of them have finished.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{MemberSpec, RunConfig};
use super::run::{simulate, RunRecord, SimulateOptions, Verdict};
use crate::comparison::epsilon_stability;
use crate::diagnostics::fit_log_scaling;
use crate::{Error, Result};

/// Largest admissible max/min ratio of a per-run constant across the sweep.
pub const STABILITY_RATIO: f64 = 4.0;
pub const ENERGY_RESIDUAL_TOLERANCE: f64 = 0.15;
/// Admissible range of the energy slope in units of `2π·(number of zeros)`,
/// the logarithmic Dirichlet cost of unit vortices.
pub const ENERGY_SLOPE_RANGE: (f64, f64) = (0.5, 2.0);
pub const BAD_DISK_MAX_MULTIPLIER: f64 = 16.0;
pub const PAIRING_TOLERANCE: f64 = 0.1;
/// Scaled drifts below this are round-off: the zeros did not move.
pub const STATIONARY_DRIFT: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MemberOutcome {
    pub eps: f64,
    pub dir: Option<PathBuf>,
    pub record: Option<RunRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub members: Vec<MemberOutcome>,
    pub aggregate: Vec<Verdict>,
}

impl SweepReport {
    pub fn records(&self) -> Vec<&RunRecord> {
        self.members.iter().filter_map(|m| m.record.as_ref()).collect()
    }

    pub fn failed_members(&self) -> Vec<&MemberOutcome> {
        self.members.iter().filter(|m| m.error.is_some()).collect()
    }

    pub fn aggregate_verdict(&self, name: &str) -> Option<&Verdict> {
        self.aggregate.iter().find(|v| v.name == name)
    }

    /// Every member ran, and every member and aggregate verdict passed.
    pub fn passed(&self) -> bool {
        self.failed_members().is_empty()
            && self.records().iter().all(|r| r.passed())
            && self.aggregate.iter().all(|v| v.passed)
    }
}

fn member_dir(out: &Path, i: usize, eps: f64) -> PathBuf {
    out.join(format!("{i:02}_eps{eps}"))
}

/// Runs the configured sweep with `jobs` worker threads.
pub fn run_sweep(cfg: &RunConfig, out: Option<&Path>, jobs: usize) -> Result<SweepReport> {
    sweep_with(&cfg.members()?, out, jobs, simulate)
}

/// As [`run_sweep`] with an injectable per-member runner. Members that fail
/// are recorded and do not stop the others; completed results stay on disk
/// and the error is returned after the report has been written.
pub fn sweep_with<F>(
    members: &[MemberSpec],
    out: Option<&Path>,
    jobs: usize,
    runner: F,
) -> Result<SweepReport>
where
    F: Fn(&MemberSpec, &SimulateOptions) -> Result<RunRecord> + Sync,
{
    if members.is_empty() {
        return Err(Error::Config("sweep has no members".into()));
    }
    if let Some(out) = out {
        fs::create_dir_all(out)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<MemberOutcome> = pool.install(|| {
        members
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let eps = m.params.eps();
                let dir = out.map(|o| member_dir(o, i, eps));
                let opts = SimulateOptions {
                    out: dir.clone(),
                    ..Default::default()
                };
                match runner(m, &opts) {
                    Ok(r) => MemberOutcome {
                        eps,
                        dir,
                        record: Some(r),
                        error: None,
                    },
                    Err(e) => MemberOutcome {
                        eps,
                        dir,
                        record: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });

    let records: Vec<&RunRecord> = outcomes.iter().filter_map(|o| o.record.as_ref()).collect();
    let aggregate = if outcomes.iter().all(|o| o.error.is_none()) {
        aggregate(&records)?
    } else {
        Vec::new()
    };
    let report = SweepReport {
        members: outcomes,
        aggregate,
    };
    if let Some(out) = out {
        write_report(&out.join("sweep.ndjson"), &report)?;
    }
    if let Some(bad) = report.failed_members().first() {
        return Err(Error::Invalid(format!(
            "sweep member eps = {} failed: {}",
            bad.eps,
            bad.error.as_deref().unwrap_or("")
        )));
    }
    Ok(report)
}

fn write_report(path: &Path, report: &SweepReport) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for m in &report.members {
        let line = match &m.record {
            Some(r) => json!({
                "type": "member",
                "eps": m.eps,
                "dir": m.dir,
                "passed": r.passed(),
                "t_crit": r.t_crit,
                "verdicts": r.verdicts,
                "envelope": r.envelope,
                "critical": r.critical,
            }),
            None => json!({"type": "member", "eps": m.eps, "dir": m.dir, "error": m.error}),
        };
        serde_json::to_writer(&mut f, &line)?;
        f.write_all(b"\n")?;
    }
    for v in &report.aggregate {
        serde_json::to_writer(
            &mut f,
            &json!({"type": "aggregate", "name": v.name, "passed": v.passed, "evidence": v.evidence}),
        )?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

/// Cross-ε verdicts. Records are sorted by decreasing ε first; verdicts that
/// need more members than are available are left out.
pub fn aggregate(records: &[&RunRecord]) -> Result<Vec<Verdict>> {
    let mut rs: Vec<&RunRecord> = records.to_vec();
    rs.sort_by(|a, b| b.eps().total_cmp(&a.eps()));
    let mut out = Vec::new();
    if rs.len() < 2 {
        return Ok(out);
    }
    let crit: Vec<_> = rs.iter().filter_map(|r| r.critical.as_ref().map(|c| (r.eps(), c))).collect();
    if crit.len() < rs.len() {
        return Ok(out);
    }

    if crit.len() >= 3 {
        let pairs: Vec<(f64, f64)> = crit.iter().map(|(e, c)| (*e, c.energy.total)).collect();
        let fit = fit_log_scaling(&pairs)?;
        let zeros = rs[0].certificate.zeros.len();
        let slope_ratio = (zeros > 0)
            .then(|| fit.slope / (2.0 * std::f64::consts::PI * zeros as f64));
        out.push(Verdict {
            name: "energy_scaling".into(),
            passed: fit.max_relative_residual <= ENERGY_RESIDUAL_TOLERANCE,
            evidence: json!({
                "pairs": pairs,
                "slope": fit.slope,
                "intercept": fit.intercept,
                "max_relative_residual": fit.max_relative_residual,
                "slope_per_vortex_cost": slope_ratio,
                "slope_in_range": slope_ratio
                    .map(|r| r >= ENERGY_SLOPE_RANGE.0 && r <= ENERGY_SLOPE_RANGE.1),
            }),
        });
    }

    let envs: Vec<_> = rs.iter().filter_map(|r| r.envelope.as_ref()).collect();
    if envs.len() == rs.len() {
        let a: Vec<f64> = envs.iter().map(|e| e.a_fit).collect();
        let g: Vec<f64> = envs.iter().map(|e| e.grad_fit).collect();
        let (ra, rg) = (epsilon_stability(&a), epsilon_stability(&g));
        // the coarsest constant applied to the finer runs
        let transfer: Vec<f64> = rs
            .iter()
            .map(|r| {
                r.envelope_samples
                    .iter()
                    .map(|(t, f)| f / (a[0] * crate::comparison::envelope_profile(r.eps(), *t)))
                    .fold(0.0, f64::max)
            })
            .collect();
        out.push(Verdict {
            name: "envelope_stability".into(),
            passed: ra <= STABILITY_RATIO && rg <= STABILITY_RATIO,
            evidence: json!({
                "a_fit": a,
                "grad_fit": g,
                "a_ratio": ra,
                "grad_ratio": rg,
                "coarsest_constant_max_ratio": transfer,
            }),
        });
    }

    let drifts: Vec<f64> = crit.iter().filter_map(|(_, c)| c.drift_scaled).collect();
    if drifts.len() == crit.len() {
        // a ratio of round-off values means nothing; stationary zeros pass
        let stationary = drifts.iter().all(|d| *d < STATIONARY_DRIFT);
        let ratio = (!stationary && drifts.iter().all(|d| *d > 0.0)).then(|| epsilon_stability(&drifts));
        out.push(Verdict {
            name: "drift_stability".into(),
            passed: stationary || ratio.is_some_and(|r| r <= STABILITY_RATIO),
            evidence: json!({"drift_scaled": drifts, "ratio": ratio, "stationary": stationary}),
        });
    }

    if crit.iter().all(|(_, c)| !c.pairings.is_empty()) {
        let m: Vec<f64> = crit.iter().map(|(_, c)| c.bad_disk_multiplier).collect();
        let worst = m.iter().copied().fold(0.0, f64::max);
        out.push(Verdict {
            name: "bad_disk".into(),
            passed: worst <= BAD_DISK_MAX_MULTIPLIER,
            evidence: json!({"multipliers": m, "max": worst}),
        });

        let errors: Vec<f64> = crit
            .iter()
            .map(|(_, c)| {
                c.pairings
                    .iter()
                    .map(|p| (p.pairing_over_pi - p.expected_degree as f64).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let last = *errors.last().expect("at least two members");
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        out.push(Verdict {
            name: "jacobian_concentration".into(),
            passed: last <= PAIRING_TOLERANCE && monotone,
            evidence: json!({"max_pairing_error": errors, "monotone": monotone}),
        });
    }
    Ok(out)
}
