//! Zeros of a gridded vector field: detection by sign changes and Newton
//! refinement on the bilinear interpolant, degrees by discrete winding,
//! nearest-neighbour tracking, and the initial-data certificate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::torus::{self, VectorField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub position: [f64; 2],
    pub degree: i32,
    /// Flat index of the lower-left node of the detection cell.
    pub detection_cell: usize,
    /// Unrounded winding number.
    pub winding: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VortexSet {
    pub t: f64,
    pub vortices: Vec<Vortex>,
    /// Some winding was more than 0.1 away from an integer.
    pub suspect: bool,
}

impl VortexSet {
    pub fn empty(t: f64) -> Self {
        Self {
            t,
            vortices: Vec::new(),
            suspect: false,
        }
    }

    pub fn len(&self) -> usize {
        self.vortices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }

    pub fn total_degree(&self) -> i32 {
        self.vortices.iter().map(|v| v.degree).sum()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.vortices.iter().map(|v| v.position).collect()
    }

    pub fn degrees(&self) -> Vec<i32> {
        self.vortices.iter().map(|v| v.degree).collect()
    }

    pub fn min_separation(&self) -> Option<f64> {
        diagnostics::min_separation(&self.positions())
    }

    /// Vortex nearest to `p` in the torus metric, with its distance.
    pub fn nearest(&self, p: [f64; 2]) -> Option<(usize, f64)> {
        self.vortices
            .iter()
            .enumerate()
            .map(|(i, v)| (i, torus::torus_distance(p, v.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Winding number of `f` along the counterclockwise ring of the 8 nodes around
/// node `(ix, iy)`, not rounded.
pub fn winding_at(f: &VectorField, ix: usize, iy: usize) -> f64 {
    const RING: [(isize, isize); 8] = [
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
    ];
    let g = f.grid();
    let angle = |(dx, dy): (isize, isize)| {
        let [a, b] = f.at(g.wrap(ix as isize + dx), g.wrap(iy as isize + dy));
        b.atan2(a)
    };
    let mut total = 0.0;
    let mut prev = angle(RING[7]);
    for off in RING {
        let cur = angle(off);
        // wrap to (-π, π]
        let mut d = cur - prev;
        if d > PI {
            d -= 2.0 * PI;
        } else if d <= -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = cur;
    }
    total / (2.0 * PI)
}

fn bilinear(c: &[[f64; 2]; 4], s: f64, t: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    // corners: c[0]=(0,0), c[1]=(1,0), c[2]=(0,1), c[3]=(1,1)
    let mut val = [0.0; 2];
    let mut jac = [[0.0; 2]; 2];
    for k in 0..2 {
        let (a, b, cc, d) = (c[0][k], c[1][k], c[2][k], c[3][k]);
        val[k] = a * (1.0 - s) * (1.0 - t) + b * s * (1.0 - t) + cc * (1.0 - s) * t + d * s * t;
        jac[k][0] = (b - a) * (1.0 - t) + (d - cc) * t;
        jac[k][1] = (cc - a) * (1.0 - s) + (d - b) * s;
    }
    (val, jac)
}

/// Newton on the bilinear interpolant of the cell; returns local `(s, t)`.
fn refine_in_cell(c: &[[f64; 2]; 4], tol: f64) -> Option<[f64; 2]> {
    for start in [[0.5, 0.5], [0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]] {
        let [mut s, mut t] = start;
        for _ in 0..20 {
            let (v, j) = bilinear(c, s, t);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let ds = (j[1][1] * v[0] - j[0][1] * v[1]) / det;
            let dt = (-j[1][0] * v[0] + j[0][0] * v[1]) / det;
            s -= ds;
            t -= dt;
            if ds.abs().max(dt.abs()) < tol {
                let slack = 1e-6;
                if (-slack..=1.0 + slack).contains(&s) && (-slack..=1.0 + slack).contains(&t) {
                    return Some([s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)]);
                }
                break;
            }
        }
    }
    None
}

/// Detects the zeros of `f`. `t` is only recorded.
pub fn detect_zeros(f: &VectorField, t: f64) -> Result<VortexSet> {
    f.check_finite("field")?;
    let g = f.grid();
    let n = g.n();
    let h = g.spacing();
    let sign = |v: f64| v >= 0.0;
    let mut found: Vec<Vortex> = Vec::new();
    let mut suspect = false;
    for iy in 0..n {
        let iy1 = (iy + 1) % n;
        for ix in 0..n {
            let ix1 = (ix + 1) % n;
            let c = [f.at(ix, iy), f.at(ix1, iy), f.at(ix, iy1), f.at(ix1, iy1)];
            let changes = |k: usize| {
                let s0 = sign(c[0][k]);
                c[1..].iter().any(|p| sign(p[k]) != s0)
            };
            if !(changes(0) && changes(1)) {
                continue;
            }
            let Some([s, tt]) = refine_in_cell(&c, 1e-10) else {
                continue;
            };
            let pos = [
                (g.coord(ix) + s * h).rem_euclid(1.0),
                (g.coord(iy) + tt * h).rem_euclid(1.0),
            ];
            if found
                .iter()
                .any(|v| torus::torus_distance(v.position, pos) < 2.0 * h)
            {
                continue;
            }
            let nx = g.wrap((pos[0] / h).round() as isize);
            let ny = g.wrap((pos[1] / h).round() as isize);
            let w = winding_at(f, nx, ny);
            let degree = w.round() as i32;
            if (w - w.round()).abs() > 0.1 {
                suspect = true;
            }
            found.push(Vortex {
                position: pos,
                degree,
                detection_cell: g.index(ix, iy),
                winding: w,
            });
        }
    }
    Ok(VortexSet {
        t,
        vortices: found,
        suspect,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub position: [f64; 2],
    pub degree: i32,
    pub drift: f64,
}

/// One track per initial zero, sampled at every observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub tracks: Vec<Vec<TrackPoint>>,
    pub times: Vec<f64>,
    /// `max_j |z_j(t) - z_j⁰|` at each time.
    pub max_drift: Vec<f64>,
}

impl TrackRecord {
    pub fn final_max_drift(&self) -> f64 {
        self.max_drift.last().copied().unwrap_or(0.0)
    }

    pub fn degrees_constant(&self) -> bool {
        self.tracks
            .iter()
            .all(|tr| tr.windows(2).all(|w| w[0].degree == w[1].degree))
    }
}

/// Incremental nearest-neighbour tracker.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tracker {
    eps: f64,
    origin: Vec<[f64; 2]>,
    record: TrackRecord,
}

impl Tracker {
    pub fn new(initial: &VortexSet, eps: f64) -> Self {
        let tracks = initial
            .vortices
            .iter()
            .map(|v| {
                vec![TrackPoint {
                    t: initial.t,
                    position: v.position,
                    degree: v.degree,
                    drift: 0.0,
                }]
            })
            .collect();
        Self {
            eps,
            origin: initial.positions(),
            record: TrackRecord {
                tracks,
                times: vec![initial.t],
                max_drift: vec![0.0],
            },
        }
    }

    /// Matches `set` against the previous positions and returns the new max drift.
    pub fn push(&mut self, set: &VortexSet) -> Result<f64> {
        let t = set.t;
        let fail = |reason: String| Error::Tracking { t, reason };
        if set.len() != self.origin.len() {
            return Err(fail(format!(
                "zero count changed from {} to {}",
                self.origin.len(),
                set.len()
            )));
        }
        let limit = 10.0 * self.eps;
        let mut taken = vec![false; set.len()];
        let mut points = Vec::with_capacity(set.len());
        for (j, track) in self.record.tracks.iter().enumerate() {
            let prev = track.last().expect("tracks start non-empty").position;
            let mut d: Vec<(usize, f64)> = set
                .vortices
                .iter()
                .enumerate()
                .map(|(i, v)| (i, torus::torus_distance(prev, v.position)))
                .collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (best, dist) = d[0];
            if dist > limit {
                return Err(fail(format!(
                    "zero {j} moved {dist:.3e} > 10 eps = {limit:.3e} in one interval"
                )));
            }
            if d.len() > 1 && d[1].1 <= 1.2 * dist {
                return Err(fail(format!(
                    "ambiguous match for zero {j}: candidates at {:.3e} and {:.3e}",
                    dist, d[1].1
                )));
            }
            if taken[best] {
                return Err(fail(format!("two tracks matched the same zero {best}")));
            }
            taken[best] = true;
            let v = &set.vortices[best];
            points.push(TrackPoint {
                t,
                position: v.position,
                degree: v.degree,
                drift: torus::torus_distance(self.origin[j], v.position),
            });
        }
        let max = points.iter().map(|p| p.drift).fold(0.0, f64::max);
        for (track, p) in self.record.tracks.iter_mut().zip(points) {
            track.push(p);
        }
        self.record.times.push(t);
        self.record.max_drift.push(max);
        Ok(max)
    }

    pub fn record(&self) -> &TrackRecord {
        &self.record
    }

    pub fn finish(self) -> TrackRecord {
        self.record
    }
}

/// Tracks a time-ordered sequence of detections starting at `sets[0]`.
pub fn track(sets: &[VortexSet], eps: f64) -> Result<TrackRecord> {
    let Some(first) = sets.first() else {
        return Err(Error::Invalid("no vortex sets to track".into()));
    };
    let mut tracker = Tracker::new(first, eps);
    for s in &sets[1..] {
        tracker.push(s)?;
    }
    Ok(tracker.finish())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialDataCertificate {
    pub alpha0: f64,
    pub zeros: VortexSet,
    /// `min |u₀|` outside the disks of radius `r0` around the zeros.
    pub beta0: f64,
    pub r0: f64,
    pub passed: bool,
    pub reason: Option<String>,
}

pub const ALPHA0_MIN: f64 = 1e-3;

/// Computes the certificate without rejecting.
pub fn inspect_initial_data(u0: &VectorField) -> Result<InitialDataCertificate> {
    u0.check_finite("initial datum")?;
    let grad = torus::gradient(u0)?;
    let modulus = torus::pointwise_modulus(u0);
    let alpha0 = modulus
        .values()
        .iter()
        .enumerate()
        .map(|(k, m)| m + grad.det(k).abs())
        .fold(f64::INFINITY, f64::min);
    let zeros = detect_zeros(u0, 0.0)?;
    let r0 = zeros.min_separation().map_or(0.25, |d| 0.25 * d);
    let pos = zeros.positions();
    let g = u0.grid();
    let mut beta0 = f64::INFINITY;
    for iy in 0..g.n() {
        for ix in 0..g.n() {
            let x = [g.coord(ix), g.coord(iy)];
            if pos.iter().all(|p| torus::torus_distance(*p, x) >= r0) {
                beta0 = beta0.min(modulus.at(ix, iy));
            }
        }
    }
    let reason = if alpha0 < ALPHA0_MIN {
        Some(format!("alpha0 below {ALPHA0_MIN:e}"))
    } else if zeros.suspect {
        Some("non-integer winding around a zero".into())
    } else if zeros.vortices.iter().any(|v| v.degree.abs() != 1) {
        Some("zero with degree other than +1 or -1".into())
    } else if zeros.total_degree() != 0 {
        Some(format!("total degree {} != 0", zeros.total_degree()))
    } else {
        None
    };
    Ok(InitialDataCertificate {
        alpha0,
        zeros,
        beta0,
        r0,
        passed: reason.is_none(),
        reason,
    })
}

/// Certificate that must pass for the datum to enter a run.
pub fn certify_initial_data(u0: &VectorField) -> Result<InitialDataCertificate> {
    let cert = inspect_initial_data(u0)?;
    match &cert.reason {
        None => Ok(cert),
        Some(r) => Err(Error::Certification {
            alpha0: cert.alpha0,
            reason: r.clone(),
        }),
    }
}

/// Radius unit `ε √ln(1/ε)` of the bad disks.
pub fn bad_disk_scale(eps: f64) -> f64 {
    eps * (1.0 / eps).ln().sqrt()
}

/// True iff `|u| ≥ ½` at every node farther than `m·ε√ln(1/ε)` from all zeros.
pub fn bad_disk_check(u: &VectorField, zeros0: &VortexSet, eps: f64, m: f64) -> Result<bool> {
    if !(m >= 1.0) {
        return Err(Error::Invalid(format!("multiplier m = {m} must be >= 1")));
    }
    let r = m * bad_disk_scale(eps);
    let pos = zeros0.positions();
    let g = u.grid();
    for iy in 0..g.n() {
        for ix in 0..g.n() {
            let [a, b] = u.at(ix, iy);
            if a.hypot(b) >= 0.5 {
                continue;
            }
            let x = [g.coord(ix), g.coord(iy)];
            if pos.iter().all(|p| torus::torus_distance(*p, x) >= r) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest multiplier (at least 1) for which [`bad_disk_check`] passes:
/// the farthest node with `|u| < ½` from its nearest zero, in units of
/// `ε√ln(1/ε)`. Infinite if such a node exists and there are no zeros.
pub fn minimal_bad_disk_multiplier(u: &VectorField, zeros0: &VortexSet, eps: f64) -> f64 {
    let pos = zeros0.positions();
    let g = u.grid();
    let mut worst: f64 = 0.0;
    for iy in 0..g.n() {
        for ix in 0..g.n() {
            let [a, b] = u.at(ix, iy);
            if a.hypot(b) >= 0.5 {
                continue;
            }
            let x = [g.coord(ix), g.coord(iy)];
            let d = pos
                .iter()
                .map(|p| torus::torus_distance(*p, x))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    (worst / bad_disk_scale(eps)).max(1.0)
}
