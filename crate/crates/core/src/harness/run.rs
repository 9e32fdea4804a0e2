//! One simulation: generate and certify the datum, integrate to `t_end`,
//! evaluate diagnostics at every observation, write artifacts, and judge the
//! requested verifications.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{MemberSpec, Verification};
use crate::comparison::{self, ComparisonBuilder};
use crate::diagnostics::{self, EnergyReport};
use crate::initial_data::{self, Datum};
use crate::integrator::{self, FlowState, Observation};
use crate::torus::{self, Transformer, VectorField};
use crate::vortex::{self, InitialDataCertificate, TrackRecord, Tracker, VortexSet};
use crate::{snapshot, Error, Result};

/// Per-step energy tolerance relative to `E(u₀)`.
pub const ENERGY_STEP_TOLERANCE: f64 = 1e-6;
/// Absolute slack so that data with `E(u₀) ≈ 0` are judged on round-off.
pub const ENERGY_ROUNDOFF_FLOOR: f64 = 1e-12;
/// Bound on `|∫ Ju|`.
pub const JACOBIAN_INTEGRAL_TOLERANCE: f64 = 1e-8;
/// Bound on `|Σ pairing/π|`.
pub const PAIRING_SUM_TOLERANCE: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub energy: f64,
    pub sup_modulus: f64,
    pub min_modulus: f64,
    pub zero_count: usize,
    /// Absent once tracking has failed.
    pub max_drift: Option<f64>,
    /// Absent when the comparison map is not computed.
    pub envelope_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub eps: f64,
    pub center: [f64; 2],
    pub pairing_over_pi: f64,
    pub expected_degree: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub eps: f64,
    pub a_fit: f64,
    pub grad_fit: f64,
    pub t_samples: usize,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub evidence: serde_json::Value,
}

/// Diagnostics at `T_ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSummary {
    pub t: f64,
    pub energy: EnergyReport,
    pub zero_count: usize,
    pub max_drift: Option<f64>,
    /// `max drift / (ε √ln(1/ε))`.
    pub drift_scaled: Option<f64>,
    pub min_modulus: f64,
    pub bad_disk_multiplier: f64,
    pub pairings: Vec<Pairing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub path: PathBuf,
}

/// State accumulated across observations; serialized into checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct Progress {
    step: u64,
    t: f64,
    observations: usize,
    rows: Vec<SeriesRow>,
    tracker: Option<Tracker>,
    tracking_error: Option<String>,
    suspect: bool,
    degree_sum_violated: bool,
    envelope_samples: Vec<(f64, f64)>,
    gradient_samples: Vec<(f64, f64)>,
    jacobian_integral_max: f64,
    max_energy_increase: Option<f64>,
    e0: Option<f64>,
    critical: Option<CriticalSummary>,
    snapshots: Vec<SnapshotEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Checkpoint {
    field: PathBuf,
    progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub member: MemberSpec,
    pub t_crit: f64,
    pub steps: u64,
    pub certificate: InitialDataCertificate,
    pub noise_amplitude: Option<f64>,
    pub series: Vec<SeriesRow>,
    pub tracks: Option<TrackRecord>,
    pub tracking_error: Option<String>,
    pub suspect: bool,
    pub envelope_samples: Vec<(f64, f64)>,
    pub gradient_samples: Vec<(f64, f64)>,
    pub envelope: Option<EnvelopeReport>,
    pub critical: Option<CriticalSummary>,
    pub e0: f64,
    pub e_final: f64,
    /// Largest `E(u_{k+1}) - E(u_k)`; absent for runs without steps.
    pub max_energy_increase: Option<f64>,
    pub jacobian_integral_max: f64,
    pub verdicts: Vec<Verdict>,
    pub snapshots: Vec<SnapshotEntry>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn eps(&self) -> f64 {
        self.member.params.eps()
    }

    pub fn min_modulus(&self) -> f64 {
        self.series.iter().map(|r| r.min_modulus).fold(f64::INFINITY, f64::min)
    }

    pub fn zero_counts_constant(&self) -> bool {
        let n0 = self.certificate.zeros.len();
        self.series.iter().all(|r| r.zero_count == n0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SimulateOptions {
    /// Output directory; nothing is written when absent.
    pub out: Option<PathBuf>,
    /// Continue from `out/checkpoint.json` if present.
    pub resume: bool,
    /// Stop with an error after this many observations (crash testing).
    pub abort_after_observations: Option<usize>,
}

struct Monitor<'a> {
    member: &'a MemberSpec,
    out: Option<PathBuf>,
    zeros0: VortexSet,
    comparison: Option<ComparisonBuilder>,
    tr: Transformer,
    series: Option<csv::Writer<File>>,
    progress: Progress,
    base_increase: f64,
    abort_after: Option<usize>,
    observed_here: usize,
}

impl Monitor<'_> {
    fn observe(&mut self, o: &Observation) -> Result<()> {
        let eps = self.member.params.eps();
        let p = &mut self.progress;
        if p.e0.is_none() {
            p.e0 = Some(o.energy.total);
        }
        let inc = self.base_increase.max(o.max_energy_increase);
        p.max_energy_increase = inc.is_finite().then_some(inc);

        let modulus = torus::pointwise_modulus(o.u);
        let zeros = vortex::detect_zeros(o.u, o.t)?;
        p.suspect |= zeros.suspect;
        p.degree_sum_violated |= zeros.total_degree() != 0;
        let mut max_drift = Some(0.0);
        if o.t > 0.0 && p.tracking_error.is_none() {
            if let Some(tracker) = p.tracker.as_mut() {
                match tracker.push(&zeros) {
                    Ok(d) => max_drift = Some(d),
                    Err(e) => p.tracking_error = Some(e.to_string()),
                }
            }
        }
        if p.tracking_error.is_some() {
            max_drift = None;
        }

        let mut envelope_ratio = None;
        if let Some(cb) = self.comparison.as_mut() {
            let c = cb.at(o.u, o.t)?;
            if o.t > 0.0 {
                p.envelope_samples.push((o.t, c.ew_sup));
                p.gradient_samples.push((o.t, c.grad_w_sup));
                envelope_ratio = Some(c.ew_sup / comparison::envelope_profile(eps, o.t));
            } else {
                envelope_ratio = Some(0.0);
            }
        }

        if self.member.wants(Verification::Jacobian) {
            let j = diagnostics::jacobian_with(&mut self.tr, o.u, o.t);
            p.jacobian_integral_max = p.jacobian_integral_max.max(j.integral().abs());
        }

        if o.critical {
            let j = diagnostics::jacobian_with(&mut self.tr, o.u, o.t);
            let centers = self.zeros0.positions();
            let pairings = match diagnostics::default_bump_radius(&centers) {
                Some(r) => diagnostics::local_degrees(&j, &centers, r)?
                    .into_iter()
                    .zip(&self.zeros0.vortices)
                    .map(|(q, v)| Pairing {
                        eps,
                        center: v.position,
                        pairing_over_pi: q,
                        expected_degree: v.degree,
                    })
                    .collect(),
                None => Vec::new(),
            };
            p.critical = Some(CriticalSummary {
                t: o.t,
                energy: o.energy,
                zero_count: zeros.len(),
                max_drift,
                drift_scaled: max_drift.map(|d| d / vortex::bad_disk_scale(eps)),
                min_modulus: modulus.min(),
                bad_disk_multiplier: vortex::minimal_bad_disk_multiplier(o.u, &self.zeros0, eps),
                pairings,
            });
        }

        let row = SeriesRow {
            t: o.t,
            energy: o.energy.total,
            sup_modulus: modulus.max(),
            min_modulus: modulus.min(),
            zero_count: zeros.len(),
            max_drift,
            envelope_ratio,
        };
        if let Some(w) = self.series.as_mut() {
            w.serialize(&row)?;
            w.flush()?;
        }
        p.rows.push(row);
        p.step = o.step;
        p.t = o.t;
        p.observations += 1;
        self.observed_here += 1;

        if let Some(out) = &self.out {
            let snaps = out.join("snapshots");
            if o.step == 0 && o.t == 0.0 {
                let path = snaps.join("t0.glf");
                snapshot::write(&path, o.u, o.t, eps)?;
                p.snapshots.push(SnapshotEntry { t: o.t, path });
            }
            if o.critical {
                let path = snaps.join("t_crit.glf");
                snapshot::write(&path, o.u, o.t, eps)?;
                p.snapshots.push(SnapshotEntry { t: o.t, path });
            }
            if o.last && !o.critical {
                let path = snaps.join("final.glf");
                snapshot::write(&path, o.u, o.t, eps)?;
                p.snapshots.push(SnapshotEntry { t: o.t, path });
            }
            // checkpoints need an on-grid state to restart from
            let on_grid = (o.step as f64 * self.member.params.dt() - o.t).abs()
                <= 1e-9 * self.member.params.dt();
            if on_grid && p.observations % self.member.checkpoint_every == 0 {
                write_checkpoint(out, o.u, p)?;
            }
        }

        if self.abort_after == Some(self.observed_here) {
            return Err(Error::Invalid(format!(
                "aborted after {} observations",
                self.observed_here
            )));
        }
        Ok(())
    }
}

fn write_checkpoint(out: &Path, u: &VectorField, p: &Progress) -> Result<()> {
    let name = PathBuf::from(format!("checkpoint-{}.glf", p.step));
    snapshot::write(&out.join(&name), u, p.t, f64::NAN)?;
    let ck = Checkpoint {
        field: name.clone(),
        progress: p.clone(),
    };
    let tmp = out.join("checkpoint.json.tmp");
    {
        let mut f = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer(&mut f, &ck)?;
        f.flush()?;
        f.get_ref().sync_all()?;
    }
    let previous = read_checkpoint(out).ok().map(|c| c.field);
    fs::rename(&tmp, out.join("checkpoint.json"))?;
    if let Some(old) = previous {
        if old != name {
            let _ = fs::remove_file(out.join(old));
        }
    }
    Ok(())
}

fn read_checkpoint(out: &Path) -> Result<Checkpoint> {
    let f = File::open(out.join("checkpoint.json"))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

fn write_ndjson<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut f, &it)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

/// Runs one member.
pub fn simulate(member: &MemberSpec, opts: &SimulateOptions) -> Result<RunRecord> {
    let params = &member.params;
    let grid = params.grid();
    let eps = params.eps();
    let Datum {
        field: u0,
        certificate,
        amplitude,
    } = initial_data::make(&member.datum, grid)?;

    if let Some(out) = &opts.out {
        fs::create_dir_all(out.join("snapshots"))?;
        write_ndjson(
            &out.join("certificate.ndjson"),
            std::iter::once(json!({
                "eps": eps,
                "alpha0": certificate.alpha0,
                "beta0": certificate.beta0,
                "r0": certificate.r0,
                "passed": certificate.passed,
                "zero_count": certificate.zeros.len(),
                "zeros": certificate.zeros.vortices,
                "noise_amplitude": amplitude,
            })),
        )?;
    }

    let resumed = match (&opts.out, opts.resume) {
        (Some(out), true) if out.join("checkpoint.json").exists() => {
            let ck = read_checkpoint(out)?;
            let snap = snapshot::read(&out.join(&ck.field))?;
            if snap.field.grid() != grid {
                return Err(Error::GridMismatch {
                    expected: grid.n(),
                    found: snap.field.grid().n(),
                });
            }
            Some((ck.progress, snap.field))
        }
        _ => None,
    };

    let needs_comparison =
        member.wants(Verification::Envelopes) || member.wants(Verification::Gronwall);
    let (progress, state, observe_start) = match resumed {
        Some((p, field)) => {
            let st = FlowState {
                t: p.step as f64 * params.dt(),
                u: field,
                step_count: p.step,
            };
            (p, st, false)
        }
        None => (
            Progress {
                step: 0,
                t: 0.0,
                observations: 0,
                rows: Vec::new(),
                tracker: Some(Tracker::new(&certificate.zeros, eps)),
                tracking_error: None,
                suspect: certificate.zeros.suspect,
                degree_sum_violated: false,
                envelope_samples: Vec::new(),
                gradient_samples: Vec::new(),
                jacobian_integral_max: 0.0,
                max_energy_increase: None,
                e0: None,
                critical: None,
                snapshots: Vec::new(),
            },
            FlowState::initial(u0.clone())?,
            true,
        ),
    };

    let series = match &opts.out {
        Some(out) => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(progress.rows.is_empty())
                .from_path(out.join("series.csv"))?;
            if !progress.rows.is_empty() {
                w.write_record([
                    "t",
                    "energy",
                    "sup_modulus",
                    "min_modulus",
                    "zero_count",
                    "max_drift",
                    "envelope_ratio",
                ])?;
                for r in &progress.rows {
                    w.serialize(r)?;
                }
            }
            w.flush()?;
            Some(w)
        }
        None => None,
    };

    let mut monitor = Monitor {
        member,
        out: opts.out.clone(),
        zeros0: certificate.zeros.clone(),
        comparison: if needs_comparison {
            Some(ComparisonBuilder::new(&u0, eps)?)
        } else {
            None
        },
        tr: Transformer::new(grid),
        series,
        base_increase: progress.max_energy_increase.unwrap_or(f64::NEG_INFINITY),
        progress,
        abort_after: opts.abort_after_observations,
        observed_here: 0,
    };

    let traj = integrator::run_from(state, params, member.cadence, observe_start, &mut |o| {
        monitor.observe(o)
    })?;
    let mut p = monitor.progress;
    let inc = p
        .max_energy_increase
        .unwrap_or(f64::NEG_INFINITY)
        .max(traj.max_energy_increase());
    p.max_energy_increase = inc.is_finite().then_some(inc);
    let e_final = *traj.step_energies.last().expect("at least the final energy");

    let tracks = p.tracker.take().map(Tracker::finish);
    let envelope = if needs_comparison && !p.envelope_samples.is_empty() {
        let a = comparison::fit_envelope(eps, &p.envelope_samples)?;
        let g = comparison::gradient_envelope_check(eps, &p.gradient_samples)?;
        Some(EnvelopeReport {
            eps,
            a_fit: a.a_fit,
            grad_fit: g.a_fit,
            t_samples: a.samples.len(),
            violated: a.violations(a.a_fit) > 0 || g.violations(g.a_fit) > 0,
        })
    } else {
        None
    };

    let mut record = RunRecord {
        member: member.clone(),
        t_crit: params.critical_time(),
        steps: traj.final_state.step_count,
        certificate,
        noise_amplitude: amplitude,
        series: p.rows,
        tracks,
        tracking_error: p.tracking_error,
        suspect: p.suspect,
        envelope_samples: p.envelope_samples,
        gradient_samples: p.gradient_samples,
        envelope,
        critical: p.critical,
        e0: p.e0.unwrap_or(f64::NAN),
        e_final,
        max_energy_increase: p.max_energy_increase,
        jacobian_integral_max: p.jacobian_integral_max,
        verdicts: Vec::new(),
        snapshots: p.snapshots,
    };
    record.verdicts = judge(&record, p.degree_sum_violated)?;

    if let Some(out) = &opts.out {
        write_outputs(out, &record)?;
    }
    Ok(record)
}

fn judge(r: &RunRecord, degree_sum_violated: bool) -> Result<Vec<Verdict>> {
    let eps = r.eps();
    let mut out = Vec::new();
    for v in &r.member.verify {
        let verdict = match v {
            Verification::Zeros => {
                let n0 = r.certificate.zeros.len();
                let counts: Vec<usize> = r.series.iter().map(|s| s.zero_count).collect();
                let degrees_constant = r.tracks.as_ref().is_some_and(|t| t.degrees_constant());
                let min_modulus = r.min_modulus();
                let passed = if n0 > 0 {
                    r.tracking_error.is_none()
                        && r.zero_counts_constant()
                        && degrees_constant
                        && !degree_sum_violated
                        && !r.suspect
                } else {
                    r.zero_counts_constant() && min_modulus > 0.0
                };
                Verdict {
                    name: "zeros".into(),
                    passed,
                    evidence: json!({
                        "initial_zeros": n0,
                        "min_zero_count": counts.iter().min(),
                        "max_zero_count": counts.iter().max(),
                        "degrees_constant": degrees_constant,
                        "degree_sum_zero": !degree_sum_violated,
                        "tracking_error": r.tracking_error,
                        "suspect": r.suspect,
                        "min_modulus": min_modulus,
                        "drift_scaled": r.critical.as_ref().map(|c| c.drift_scaled),
                    }),
                }
            }
            Verification::Energy => {
                let tol = ENERGY_STEP_TOLERANCE * r.e0 + ENERGY_ROUNDOFF_FLOOR;
                Verdict {
                    name: "energy".into(),
                    passed: r.max_energy_increase.map_or(true, |d| d <= tol),
                    evidence: json!({
                        "e0": r.e0,
                        "e_crit": r.critical.as_ref().map(|c| c.energy.total),
                        "e_final": r.e_final,
                        "max_step_increase": r.max_energy_increase,
                        "tolerance": tol,
                    }),
                }
            }
            Verification::Jacobian => {
                let pairings = r.critical.as_ref().map(|c| c.pairings.clone()).unwrap_or_default();
                let sum: f64 = pairings.iter().map(|p| p.pairing_over_pi).sum();
                let max_err = pairings
                    .iter()
                    .map(|p| (p.pairing_over_pi - p.expected_degree as f64).abs())
                    .fold(0.0, f64::max);
                Verdict {
                    name: "jacobian".into(),
                    passed: r.jacobian_integral_max <= JACOBIAN_INTEGRAL_TOLERANCE
                        && sum.abs() <= PAIRING_SUM_TOLERANCE,
                    evidence: json!({
                        "max_abs_integral": r.jacobian_integral_max,
                        "pairing_sum": sum,
                        "max_pairing_error": max_err,
                        "pairings": pairings,
                    }),
                }
            }
            Verification::Envelopes => {
                let (passed, ev) = match &r.envelope {
                    Some(e) => (
                        !e.violated && e.a_fit.is_finite() && e.grad_fit.is_finite(),
                        serde_json::to_value(e)?,
                    ),
                    None => (false, json!({"error": "no comparison samples"})),
                };
                Verdict {
                    name: "envelopes".into(),
                    passed,
                    evidence: ev,
                }
            }
            Verification::Gronwall => gronwall_verdict(r, eps)?,
        };
        out.push(verdict);
    }
    Ok(out)
}

/// The lemma applied to the run's own envelope: `f = sup|eᵗw|`,
/// `h = A ε²eᵗ(e^{2t}-1)^{1/2}`, `c = A`.
fn gronwall_verdict(r: &RunRecord, eps: f64) -> Result<Verdict> {
    let Some(env) = &r.envelope else {
        return Ok(Verdict {
            name: "gronwall".into(),
            passed: false,
            evidence: json!({"error": "no comparison samples"}),
        });
    };
    let a = env.a_fit;
    let pts: Vec<(f64, f64)> = r
        .envelope_samples
        .iter()
        .copied()
        .filter(|(_, f)| *f > 0.0)
        .collect();
    if pts.len() < 3 || !(a > 0.0) {
        return Ok(Verdict {
            name: "gronwall".into(),
            passed: true,
            evidence: json!({"skipped": "fewer than 3 positive samples"}),
        });
    }
    let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let f: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let h: Vec<f64> = t.iter().map(|&s| a * comparison::envelope_profile(eps, s)).collect();
    let inst = comparison::GronwallInstance::new(t.clone(), f, h.clone(), a)?;
    let v = comparison::gronwall_verify(&inst)?;
    let m = comparison::monotone_gronwall_bound(&t, &h, a)?;
    Ok(Verdict {
        name: "gronwall".into(),
        passed: v.lemma_validated(),
        evidence: json!({
            "c": a,
            "hypothesis_holds": v.hypothesis_holds,
            "conclusion_holds": v.conclusion_holds,
            "margin": v.margin,
            "integral_ratio": v.integral_ratio,
            "monotone_bound_holds": m.holds,
            "monotone_margin": m.margin,
        }),
    })
}

fn write_outputs(out: &Path, r: &RunRecord) -> Result<()> {
    let mut lines = vec![json!({
        "type": "config",
        "eps": r.eps(),
        "n": r.member.params.n(),
        "dt": r.member.params.dt(),
        "c0": r.member.params.c0(),
        "t_crit": r.t_crit,
        "t_end": r.member.params.t_end(),
        "steps": r.steps,
        "datum": r.member.datum,
    })];
    for v in &r.verdicts {
        lines.push(json!({"type": "verdict", "name": v.name, "passed": v.passed, "evidence": v.evidence}));
    }
    lines.push(json!({
        "type": "summary",
        "passed": r.passed(),
        "snapshots": r.snapshots,
        "critical": r.critical,
    }));
    write_ndjson(&out.join("run.ndjson"), lines)?;

    if let Some(tracks) = &r.tracks {
        let mut w = csv::Writer::from_path(out.join("tracks.csv"))?;
        w.write_record(["t", "j", "x", "y", "degree", "drift"])?;
        for (j, track) in tracks.tracks.iter().enumerate() {
            for p in track {
                w.write_record(&[
                    p.t.to_string(),
                    j.to_string(),
                    p.position[0].to_string(),
                    p.position[1].to_string(),
                    p.degree.to_string(),
                    p.drift.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    if let Some(c) = &r.critical {
        write_ndjson(&out.join("pairings.ndjson"), &c.pairings)?;
    }
    if let Some(e) = &r.envelope {
        write_ndjson(&out.join("envelope.ndjson"), std::iter::once(e))?;
    }
    Ok(())
}
