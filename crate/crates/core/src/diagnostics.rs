//! Energy functional, Jacobian measure and its pairing with bump functions,
//! and least-squares scaling fits against `ln(1/ε)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::torus::{self, GridSpec, ScalarField, Transformer, VectorField};
use crate::{Error, Result};

/// `E_ε(u) = ∫ |∇u|² + (1 - |u|²)² / (2ε²)` split into its two parts. The
/// potential weight makes `E_ε` an exact Lyapunov functional of
/// `∂ₜu = ε²Δu + (1 - |u|²)u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn new(t: f64, dirichlet: f64, potential: f64) -> Self {
        Self {
            t,
            dirichlet,
            potential,
            total: dirichlet + potential,
        }
    }

    pub fn at(self, t: f64) -> Self {
        Self { t, ..self }
    }
}

pub(crate) fn potential_energy(u: &VectorField, eps: f64) -> f64 {
    let nn = u.grid().node_count();
    let sum: f64 = (0..nn)
        .map(|k| {
            let [a, b] = u.at_index(k);
            let d = 1.0 - (a * a + b * b);
            d * d
        })
        .sum();
    sum / (nn as f64 * 2.0 * eps * eps)
}

/// Energy with spectral gradient and trapezoid quadrature. The report's `t` is 0;
/// use [`EnergyReport::at`] to stamp it.
pub fn energy(u: &VectorField, eps: f64) -> Result<EnergyReport> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps = {eps} must be positive")));
    }
    let grad = torus::gradient(u)?;
    let dirichlet = grad.squared_norm_field().integral();
    Ok(EnergyReport::new(0.0, dirichlet, potential_energy(u, eps)))
}

/// `L²` gradient of `E_ε`: `(2/ε²)(-ε²Δu - (1 - |u|²)u)`, so that
/// `d/dδ E_ε(u + δφ)|₀ = ∫ G·φ`.
pub fn first_variation(u: &VectorField, eps: f64) -> Result<VectorField> {
    let lap = torus::laplacian(u)?;
    let nn = u.grid().node_count();
    let mut out = VectorField::zeros(u.grid());
    let s = 2.0 / (eps * eps);
    for k in 0..nn {
        let [a, b] = u.at_index(k);
        let [la, lb] = lap.at_index(k);
        let r = 1.0 - (a * a + b * b);
        out.set_index(k, [s * (-eps * eps * la - r * a), s * (-eps * eps * lb - r * b)]);
    }
    Ok(out)
}

/// `L²` pairing `∫ f·g` on the torus.
pub fn inner_product(f: &VectorField, g: &VectorField) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch {
            expected: f.grid().n(),
            found: g.grid().n(),
        });
    }
    let s: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    Ok(s / f.grid().node_count() as f64)
}

/// `Ju = det ∇u` sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianField {
    pub t: f64,
    values: ScalarField,
}

impl JacobianField {
    pub fn from_scalar(t: f64, values: ScalarField) -> Self {
        Self { t, values }
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn grid(&self) -> GridSpec {
        self.values.grid()
    }

    pub fn integral(&self) -> f64 {
        self.values.integral()
    }
}

pub fn jacobian(u: &VectorField) -> Result<JacobianField> {
    let grad = torus::gradient(u)?;
    Ok(JacobianField {
        t: 0.0,
        values: grad.det_field(),
    })
}

pub(crate) fn jacobian_with(tr: &mut Transformer, u: &VectorField, t: f64) -> JacobianField {
    let s = tr.spectrum(u);
    JacobianField {
        t,
        values: tr.gradient(&s).det_field(),
    }
}

/// Radial `C²` bump: 1 for `d ≤ radius/2`, 0 for `d ≥ radius`, quintic
/// smoothstep in between.
pub fn bump(d: f64, radius: f64) -> f64 {
    let inner = 0.5 * radius;
    if d <= inner {
        1.0
    } else if d >= radius {
        0.0
    } else {
        let s = (d - inner) / (radius - inner);
        1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// `∫ φ Ju` for the bump centred at `center` (torus metric).
pub fn pair_with_bump(j: &JacobianField, center: [f64; 2], radius: f64) -> Result<f64> {
    if !(radius > 0.0 && radius < 0.5) {
        return Err(Error::Invalid(format!("bump radius {radius} outside (0, 1/2)")));
    }
    let grid = j.grid();
    let n = grid.n();
    let h = grid.spacing();
    // only nodes inside the bounding box of the support contribute
    let reach = (radius / h).ceil() as isize + 1;
    let cx = (center[0] / h).round() as isize;
    let cy = (center[1] / h).round() as isize;
    let mut sum = 0.0;
    let span = (2 * reach + 1).min(n as isize);
    for dy in 0..span {
        let iy = grid.wrap(cy - reach.min(n as isize / 2) + dy);
        for dx in 0..span {
            let ix = grid.wrap(cx - reach.min(n as isize / 2) + dx);
            let d = torus::torus_distance(center, [grid.coord(ix), grid.coord(iy)]);
            let w = bump(d, radius);
            if w != 0.0 {
                sum += w * j.values.at(ix, iy);
            }
        }
    }
    Ok(sum / grid.node_count() as f64)
}

/// Default bump radius: a third of the minimum pairwise torus distance.
pub fn default_bump_radius(centers: &[[f64; 2]]) -> Option<f64> {
    min_separation(centers).map(|d| d / 3.0)
}

pub fn min_separation(points: &[[f64; 2]]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = torus::torus_distance(*a, *b);
            best = Some(best.map_or(d, |m: f64| m.min(d)));
        }
    }
    best
}

/// Pairings of `Ju` with disjoint bumps around each centre, divided by π.
pub fn local_degrees(j: &JacobianField, centers: &[[f64; 2]], radius: f64) -> Result<Vec<f64>> {
    if let Some(sep) = min_separation(centers) {
        if 2.0 * radius >= sep {
            return Err(Error::Invalid(format!(
                "bumps of radius {radius} overlap (minimum separation {sep})"
            )));
        }
    }
    centers
        .iter()
        .map(|c| pair_with_bump(j, *c, radius).map(|p| p / PI))
        .collect()
}

/// Affine least-squares fit `value ≈ slope·ln(1/ε) + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub residual_norm: f64,
    pub max_relative_residual: f64,
}

impl ScalingFit {
    pub fn predict(&self, eps: f64) -> f64 {
        self.slope * (1.0 / eps).ln() + self.intercept
    }
}

pub fn fit_log_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(Error::Invalid(format!(
            "scaling fit needs at least 3 (eps, value) pairs, got {}",
            pairs.len()
        )));
    }
    if pairs.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Invalid("eps values must be strictly decreasing".into()));
    }
    if pairs.iter().any(|(e, v)| !(*e > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("eps must be positive and values finite".into()));
    }
    let m = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(pairs).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    let mut max_rel: f64 = 0.0;
    for (x, (_, v)) in xs.iter().zip(pairs) {
        let r = v - (slope * x + intercept);
        rss += r * r;
        let rel = if *v != 0.0 { r.abs() / v.abs() } else { r.abs() };
        max_rel = max_rel.max(rel);
    }
    Ok(ScalingFit {
        pairs: pairs.to_vec(),
        slope,
        intercept,
        residual_norm: rss.sqrt(),
        max_relative_residual: max_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{TWO_PI, FOUR_PI_SQ};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn energy_closed_forms() {
        let g = grid(32);
        let e = energy(&VectorField::constant(g, [1.0, 0.0]), 0.1).unwrap();
        assert!(e.total.abs() < 1e-20);

        let w = VectorField::from_fn(g, |x, _| [(TWO_PI * x).cos(), (TWO_PI * x).sin()]);
        let e = energy(&w, 0.1).unwrap();
        assert!((e.dirichlet - FOUR_PI_SQ).abs() < 1e-10);
        assert!(e.potential < 1e-25);
        assert!((e.dirichlet - 39.478).abs() < 1e-3);

        let e = energy(&VectorField::zeros(g), 0.1).unwrap();
        assert!((e.potential - 50.0).abs() < 1e-12);
        assert_eq!(e.dirichlet, 0.0);
        assert_eq!(e.total, e.dirichlet + e.potential);
    }

    #[test]
    fn jacobian_closed_forms() {
        let g = grid(32);
        let j = jacobian(&VectorField::constant(g, [0.3, 0.4])).unwrap();
        assert!(j.values().max_abs() < 1e-12);

        let u = VectorField::from_fn(g, |x, y| [(TWO_PI * x).sin(), (TWO_PI * y).sin()]);
        let j = jacobian(&u).unwrap();
        for iy in 0..32 {
            for ix in 0..32 {
                let want = FOUR_PI_SQ * (TWO_PI * g.coord(ix)).cos() * (TWO_PI * g.coord(iy)).cos();
                assert!((j.values().at(ix, iy) - want).abs() < 1e-9);
            }
        }
        assert!(j.integral().abs() < 1e-10);
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0, 0.2), 1.0);
        assert_eq!(bump(0.1, 0.2), 1.0);
        assert_eq!(bump(0.2, 0.2), 0.0);
        assert!((bump(0.15, 0.2) - 0.5).abs() < 1e-15);
        // C¹ and C² at the joints: one-sided differences vanish
        let r = 0.2;
        let d = 1e-4;
        let slope_in = (bump(0.1 + d, r) - 1.0) / d;
        let slope_out = bump(r - d, r) / d;
        assert!(slope_in.abs() < 1e-4 && slope_out.abs() < 1e-4);
    }

    #[test]
    fn zero_jacobian_pairs_to_zero() {
        let g = grid(32);
        let j = JacobianField::from_scalar(0.0, ScalarField::new(g, vec![0.0; 1024]).unwrap());
        assert_eq!(pair_with_bump(&j, [0.5, 0.5], 0.2).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_bumps_rejected() {
        let g = grid(32);
        let j = JacobianField::from_scalar(0.0, ScalarField::new(g, vec![0.0; 1024]).unwrap());
        assert!(local_degrees(&j, &[[0.1, 0.1], [0.3, 0.1]], 0.1).is_err());
        assert!(local_degrees(&j, &[[0.1, 0.1], [0.3, 0.1]], 0.09).is_ok());
        assert!((default_bump_radius(&[[0.0, 0.0], [0.0, 0.5], [0.5, 0.0]]).unwrap() - 0.5 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_fit_exact_affine() {
        let eps: [f64; 4] = [0.05, 0.035, 0.025, 0.02];
        let pairs: Vec<_> = eps.iter().map(|e| (*e, 3.7 * (1.0 / e).ln() - 1.25)).collect();
        let fit = fit_log_scaling(&pairs).unwrap();
        assert!((fit.slope - 3.7).abs() < 1e-10);
        assert!((fit.intercept + 1.25).abs() < 1e-10);
        assert!(fit.max_relative_residual < 1e-12);

        let flat: Vec<_> = eps.iter().map(|e| (*e, 2.0)).collect();
        assert!(fit_log_scaling(&flat).unwrap().slope.abs() < 1e-12);

        assert!(fit_log_scaling(&pairs[..2]).is_err());
        let mut bad = pairs.clone();
        bad.swap(0, 1);
        assert!(fit_log_scaling(&bad).is_err());
    }
}
