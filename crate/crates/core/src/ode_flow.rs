//! Closed-form flow of the reaction ODE `y' = (1 - |y|²) y`:
//!
//! `Φ(t, x) = eᵗ x / √(1 + |x|²(e^{2t} - 1))`
//!
//! together with its first and second differentials. Negative times give the
//! inverse flow, which only exists while the denominator stays positive.

use crate::torus::VectorField;
use crate::{Error, Result};

pub type Vec2 = [f64; 2];
/// Row-major 2×2 matrix, `m[i][j] = ∂ Φ_i / ∂ x_j`.
pub type Mat2 = [[f64; 2]; 2];

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// A time and a point at which `Φ(t, ·)` is defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowPoint {
    pub t: f64,
    pub x: Vec2,
    growth: f64,
    stretch: f64,
    denom: f64,
}

impl FlowPoint {
    pub fn new(t: f64, x: Vec2) -> Result<Self> {
        let stretch = (2.0 * t).exp_m1();
        let denom = 1.0 + dot(x, x) * stretch;
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::FlowDomain { t, denominator: denom });
        }
        Ok(Self {
            t,
            x,
            growth: t.exp(),
            stretch,
            denom,
        })
    }

    /// `1 + |x|²(e^{2t} - 1)`.
    pub fn denominator(&self) -> f64 {
        self.denom
    }

    pub fn phi(&self) -> Vec2 {
        let s = self.growth / self.denom.sqrt();
        [s * self.x[0], s * self.x[1]]
    }

    pub fn dphi(&self) -> Mat2 {
        let x = self.x;
        let a = self.growth / self.denom.sqrt();
        let b = self.growth * self.stretch / (self.denom * self.denom.sqrt());
        [
            [a - b * x[0] * x[0], -b * x[0] * x[1]],
            [-b * x[1] * x[0], a - b * x[1] * x[1]],
        ]
    }

    pub fn d2phi(&self) -> SecondDifferential {
        let s = self.denom;
        let c1 = self.growth * self.stretch / (s * s.sqrt());
        let c2 = 3.0 * self.growth * self.stretch * self.stretch / (s * s * s.sqrt());
        SecondDifferential { x: self.x, c1, c2 }
    }

    /// `eᵗ |x| (e^{2t} - 1) / (1 + |x|²(e^{2t} - 1))^{3/2}`, the scale of `|D²Φ|`.
    /// The operator norm is at most 6 times this: both terms of `D²Φ[p, p]` are
    /// bounded by 3 times it.
    pub fn d2phi_majorant(&self) -> f64 {
        let s = self.denom;
        self.growth * dot(self.x, self.x).sqrt() * self.stretch.abs() / (s * s.sqrt())
    }
}

/// Symmetric bilinear map `D²Φ(t, x)[p, q]`:
///
/// `eᵗ[-a s^{-3/2}(p (x·q) + q (x·p) + (p·q) x) + 3a² s^{-5/2} x (x·p)(x·q)]`
/// with `a = e^{2t} - 1` and `s = 1 + a|x|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondDifferential {
    x: Vec2,
    c1: f64,
    c2: f64,
}

impl SecondDifferential {
    pub fn apply(&self, p: Vec2, q: Vec2) -> Vec2 {
        let xp = dot(self.x, p);
        let xq = dot(self.x, q);
        let pq = dot(p, q);
        let cubic = self.c2 * xp * xq;
        let x = self.x;
        [
            -self.c1 * (p[0] * xq + q[0] * xp + pq * x[0]) + cubic * x[0],
            -self.c1 * (p[1] * xq + q[1] * xp + pq * x[1]) + cubic * x[1],
        ]
    }

    /// `sup_{|p| = |q| = 1} |D²Φ[p, q]|`.
    ///
    /// For a symmetric bilinear map between Euclidean spaces the supremum is
    /// attained on the diagonal, so this maximizes `|D²Φ[e_θ, e_θ]|` over θ.
    pub fn operator_norm(&self) -> f64 {
        let eval = |th: f64| {
            let e = [th.cos(), th.sin()];
            let v = self.apply(e, e);
            v[0].hypot(v[1])
        };
        let samples = 360;
        let step = std::f64::consts::PI / samples as f64;
        let (mut best_th, mut best) = (0.0, eval(0.0));
        for i in 1..samples {
            let th = i as f64 * step;
            let v = eval(th);
            if v > best {
                best = v;
                best_th = th;
            }
        }
        // golden-section polish on the bracketing interval
        let (mut lo, mut hi) = (best_th - step, best_th + step);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if eval(a) > eval(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        best.max(eval(0.5 * (lo + hi)))
    }
}

pub fn phi(t: f64, x: Vec2) -> Result<Vec2> {
    Ok(FlowPoint::new(t, x)?.phi())
}

pub fn dphi(t: f64, x: Vec2) -> Result<Mat2> {
    Ok(FlowPoint::new(t, x)?.dphi())
}

pub fn d2phi(t: f64, x: Vec2) -> Result<SecondDifferential> {
    Ok(FlowPoint::new(t, x)?.d2phi())
}

pub fn d2phi_norm_bound(t: f64, x: Vec2) -> Result<f64> {
    Ok(FlowPoint::new(t, x)?.d2phi_majorant())
}

/// `Φ(t)⁻¹ = Φ(-t)` for `t ≥ 0`; needs `|y|²(1 - e^{-2t}) < 1`.
pub fn phi_inverse(t: f64, y: Vec2) -> Result<Vec2> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("inverse flow needs t >= 0, got {t}")));
    }
    phi(-t, y)
}

/// Applies `Φ(t, ·)` at every node of a field.
pub fn phi_field(t: f64, f: &VectorField) -> Result<VectorField> {
    f.try_map(|x| phi(t, x))
}
