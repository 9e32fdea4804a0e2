//! The comparison map `v = Φ(t, e^{ε²tΔ}u₀)`, the remainder `w = e^{-t}(u - v)`,
//! the residual `𝓡 = -ε² D²Φ(t, g)[∇g, ∇g]`, envelope fits for `w`, and a
//! sampled check of the nonlinear Gronwall-type lemma.

use serde::{Deserialize, Serialize};

use crate::ode_flow::FlowPoint;
use crate::torus::{PackedSpectrum, ScalarField, Transformer, VectorField};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct ComparisonState {
    pub t: f64,
    pub g: VectorField,
    pub v: VectorField,
    pub w: VectorField,
    /// `sup |𝓡(t)|`.
    pub r_sup: f64,
    /// `ε² sup eᵗ|g|(e^{2t}-1)(1 + |g|²(e^{2t}-1))^{-3/2} |∇g|²`.
    pub r_majorant: f64,
    /// `sup |eᵗ w| = sup |u - v|`.
    pub ew_sup: f64,
    /// `sup |∇w|` (Frobenius norm, spectral gradient).
    pub grad_w_sup: f64,
}

impl ComparisonState {
    /// `v + eᵗ w`, which is the simulated `u` up to round-off.
    pub fn reconstruct(&self) -> VectorField {
        self.v
            .lincomb(1.0, &self.w, self.t.exp())
            .expect("fields share one grid")
    }
}

/// Builds comparison states at many times for one `u₀`, reusing its spectrum.
pub struct ComparisonBuilder {
    eps: f64,
    u0_hat: PackedSpectrum,
    tr: Transformer,
}

impl ComparisonBuilder {
    pub fn new(u0: &VectorField, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("eps = {eps} must be positive")));
        }
        u0.check_finite("initial datum")?;
        let mut tr = Transformer::new(u0.grid());
        let u0_hat = tr.spectrum(u0);
        Ok(Self { eps, u0_hat, tr })
    }

    fn heat(&mut self, t: f64) -> Result<(PackedSpectrum, VectorField)> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Invalid(format!("comparison time t = {t} must be >= 0")));
        }
        let g_hat = self.u0_hat.heat(t, self.eps);
        let g = self.tr.field(&g_hat);
        Ok((g_hat, g))
    }

    /// `v(t) = Φ(t, g(t))`.
    pub fn v(&mut self, t: f64) -> Result<VectorField> {
        let (_, g) = self.heat(t)?;
        crate::ode_flow::phi_field(t, &g)
    }

    /// Pointwise `|𝓡(t)|` and `ε² · scale(D²Φ) · |∇g|²`, which bounds it up to a factor 6.
    pub fn residual(&mut self, t: f64) -> Result<(ScalarField, ScalarField)> {
        let (g_hat, g) = self.heat(t)?;
        Ok(self.residual_from(t, &g_hat, &g))
    }

    fn residual_from(&mut self, t: f64, g_hat: &PackedSpectrum, g: &VectorField) -> (ScalarField, ScalarField) {
        let grad = self.tr.gradient(g_hat);
        let grid = g.grid();
        let nn = grid.node_count();
        let e2 = self.eps * self.eps;
        let mut r = Vec::with_capacity(nn);
        let mut maj = Vec::with_capacity(nn);
        for k in 0..nn {
            let p = FlowPoint::new(t, g.at_index(k)).expect("t >= 0 keeps the flow defined");
            let d2 = p.d2phi();
            let mut acc = [0.0; 2];
            for j in 0..2 {
                let dj = grad.partial(j, k);
                let b = d2.apply(dj, dj);
                acc[0] += b[0];
                acc[1] += b[1];
            }
            r.push(e2 * acc[0].hypot(acc[1]));
            maj.push(e2 * p.d2phi_majorant() * grad.squared_norm(k));
        }
        (
            ScalarField::new(grid, r).expect("finite"),
            ScalarField::new(grid, maj).expect("finite"),
        )
    }

    pub fn at(&mut self, u_t: &VectorField, t: f64) -> Result<ComparisonState> {
        if u_t.grid() != self.u0_hat.grid() {
            return Err(Error::GridMismatch {
                expected: self.u0_hat.grid().n(),
                found: u_t.grid().n(),
            });
        }
        let (g_hat, g) = self.heat(t)?;
        let v = crate::ode_flow::phi_field(t, &g)?;
        let w = u_t.lincomb((-t).exp(), &v, -(-t).exp())?;
        let (r, maj) = self.residual_from(t, &g_hat, &g);
        let ew_sup = u_t.sup_distance(&v)?;
        let w_hat = self.tr.spectrum(&w);
        let grad_w_sup = self.tr.gradient(&w_hat).sup_norm();
        Ok(ComparisonState {
            t,
            g,
            v,
            w,
            r_sup: r.max(),
            r_majorant: maj.max(),
            ew_sup,
            grad_w_sup,
        })
    }
}

pub fn build_comparison(u0: &VectorField, u_t: &VectorField, t: f64, eps: f64) -> Result<ComparisonState> {
    ComparisonBuilder::new(u0, eps)?.at(u_t, t)
}

/// `ε² eᵗ (e^{2t} - 1)^{1/2}`, the shape of the bound on `|eᵗ w|`.
pub fn envelope_profile(eps: f64, t: f64) -> f64 {
    eps * eps * t.exp() * (2.0 * t).exp_m1().sqrt()
}

/// `ε √t (e^{2t} - 1)^{1/2}`, the shape of the bound on `|∇w|`.
pub fn gradient_profile(eps: f64, t: f64) -> f64 {
    eps * t.sqrt() * (2.0 * t).exp_m1().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub t: f64,
    pub observed: f64,
    /// Profile value without the constant.
    pub profile: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub eps: f64,
    pub a_fit: f64,
    pub samples: Vec<EnvelopeSample>,
}

impl ErrorEnvelope {
    /// Samples where `observed > a·profile` (with relative slack `1e-12`).
    pub fn violations(&self, a: f64) -> usize {
        self.samples
            .iter()
            .filter(|s| s.observed > a * s.profile * (1.0 + 1e-12))
            .count()
    }
}

fn fit_with(
    eps: f64,
    samples: &[(f64, f64)],
    profile: impl Fn(f64, f64) -> f64,
) -> Result<ErrorEnvelope> {
    let mut out: Vec<EnvelopeSample> = samples
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|&(t, observed)| EnvelopeSample {
            t,
            observed,
            profile: profile(eps, t),
        })
        .collect();
    if out.is_empty() {
        return Err(Error::Invalid("no comparison samples with t > 0".into()));
    }
    if out.iter().any(|s| !(s.observed >= 0.0) || !s.observed.is_finite()) {
        return Err(Error::Invalid("envelope samples must be finite and >= 0".into()));
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    let a_fit = out
        .iter()
        .map(|s| s.observed / s.profile)
        .fold(0.0, f64::max);
    Ok(ErrorEnvelope {
        eps,
        a_fit,
        samples: out,
    })
}

/// Fits `A = max sup|eᵗw(t)| / (ε²eᵗ(e^{2t}-1)^{1/2})` from `(t, sup|eᵗw|)` samples.
pub fn fit_envelope(eps: f64, samples: &[(f64, f64)]) -> Result<ErrorEnvelope> {
    fit_with(eps, samples, envelope_profile)
}

/// Same fit for `(t, sup|∇w|)` against `ε√t(e^{2t}-1)^{1/2}`.
pub fn gradient_envelope_check(eps: f64, samples: &[(f64, f64)]) -> Result<ErrorEnvelope> {
    fit_with(eps, samples, gradient_profile)
}

/// `max / min` of fitted constants across a sweep; infinite if some constant is 0.
pub fn epsilon_stability(constants: &[f64]) -> f64 {
    let max = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = constants.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else if max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Sampled `f`, `h` on a common grid in `(0, T]` and the constant `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallInstance {
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub c: f64,
}

impl GronwallInstance {
    pub fn new(t: Vec<f64>, f: Vec<f64>, h: Vec<f64>, c: f64) -> Result<Self> {
        let inst = Self { t, f, h, c };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let m = self.t.len();
        if m < 3 || self.f.len() != m || self.h.len() != m {
            return Err(Error::Invalid(format!(
                "need >= 3 samples on a common grid (t: {}, f: {}, h: {})",
                m,
                self.f.len(),
                self.h.len()
            )));
        }
        if !(self.t[0] >= 0.0) || self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("sample times must be >= 0 and strictly increasing".into()));
        }
        if let Some(i) = self
            .f
            .iter()
            .chain(&self.h)
            .position(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(Error::Invalid(format!("non-positive sample at position {i}")));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Invalid(format!("c = {} must be positive", self.c)));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().expect("validated non-empty")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallVerdict {
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// `min (2 - f/h)` over the samples.
    pub margin: f64,
    /// `sup_t ∫₀ᵗ e^{t-s} h(s)²/h(t) ds` times `8c`; the integral condition is `≤ 1`.
    pub integral_ratio: f64,
    pub small_time_ratio: f64,
    pub inequality_holds: bool,
}

impl GronwallVerdict {
    /// The lemma's implication on this instance.
    pub fn lemma_validated(&self) -> bool {
        !self.hypothesis_holds || self.conclusion_holds
    }
}

/// `∫₀^{t_k} e^{t_k - s} q(s) ds` for every sample by the trapezoid rule,
/// accumulated as `J_k = e^{Δ} J_{k-1} + Δ/2 (e^{Δ} q_{k-1} + q_k)`. The
/// unsampled piece `[0, t₀]` is a rectangle at `q(t₀)`.
fn weighted_integrals(t: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut j = t[0] * q[0];
    out.push(j);
    for k in 1..t.len() {
        let d = t[k] - t[k - 1];
        let e = d.exp();
        j = e * j + 0.5 * d * (e * q[k - 1] + q[k]);
        out.push(j);
    }
    out
}

pub fn gronwall_verify(inst: &GronwallInstance) -> Result<GronwallVerdict> {
    inst.validate()?;
    let h2: Vec<f64> = inst.h.iter().map(|h| h * h).collect();
    let f2: Vec<f64> = inst.f.iter().map(|f| f * f).collect();
    let jh = weighted_integrals(&inst.t, &h2);
    let jf = weighted_integrals(&inst.t, &f2);
    let integral_ratio = jh
        .iter()
        .zip(&inst.h)
        .map(|(j, h)| 8.0 * inst.c * j / h)
        .fold(0.0, f64::max);
    let small_time_ratio = inst.f[..3]
        .iter()
        .zip(&inst.h[..3])
        .map(|(f, h)| f / h)
        .fold(0.0, f64::max);
    let inequality_holds = (0..inst.t.len()).all(|k| {
        let rhs = inst.c * jf[k] + inst.h[k];
        inst.f[k] <= rhs * (1.0 + 1e-12)
    });
    let hypothesis_holds = integral_ratio <= 1.0 && small_time_ratio <= 1.05 && inequality_holds;
    let margin = inst
        .f
        .iter()
        .zip(&inst.h)
        .map(|(f, h)| 2.0 - f / h)
        .fold(f64::INFINITY, f64::min);
    Ok(GronwallVerdict {
        hypothesis_holds,
        conclusion_holds: margin >= 0.0,
        margin,
        integral_ratio,
        small_time_ratio,
        inequality_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneBound {
    pub holds: bool,
    /// `∫₀ᵀ e^{T-s} h(s) ds`.
    pub integral: f64,
    /// `(1/(8c)) / integral`; the bound holds iff this is `≥ 1`.
    pub margin: f64,
}

/// For nondecreasing `h` the integral hypothesis reduces to
/// `∫₀ᵀ e^{T-s} h(s) ds ≤ 1/(8c)`.
pub fn monotone_gronwall_bound(t: &[f64], h: &[f64], c: f64) -> Result<MonotoneBound> {
    if t.len() < 2 || t.len() != h.len() {
        return Err(Error::Invalid("need >= 2 samples of h on its time grid".into()));
    }
    if !(t[0] >= 0.0) || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("sample times must be >= 0 and strictly increasing".into()));
    }
    if h.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Invalid("h must be finite and non-negative".into()));
    }
    if let Some(k) = h.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::Invalid(format!("h decreases between samples {k} and {}", k + 1)));
    }
    if !(c > 0.0) {
        return Err(Error::Invalid(format!("c = {c} must be positive")));
    }
    let integral = *weighted_integrals(t, h).last().expect("non-empty");
    let bound = 1.0 / (8.0 * c);
    let margin = if integral > 0.0 { bound / integral } else { f64::INFINITY };
    Ok(MonotoneBound {
        holds: integral <= bound,
        integral,
        margin,
    })
}

/// `h(t) = Aε²eᵗ(e^{2t}-1)^{1/2}` on `samples + 1` uniform points of
/// `[0, ln(1/ε) - ln(16A²)]`.
pub fn envelope_instance(a: f64, eps: f64, samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let horizon = (1.0 / eps).ln() - (16.0 * a * a).ln();
    if !(horizon > 0.0) || samples < 2 {
        return Err(Error::Invalid(format!(
            "empty horizon ln(1/eps) - ln(16 A^2) = {horizon} (A = {a}, eps = {eps})"
        )));
    }
    let t: Vec<f64> = (0..=samples)
        .map(|i| horizon * i as f64 / samples as f64)
        .collect();
    let h = t.iter().map(|&s| a * envelope_profile(eps, s)).collect();
    Ok((t, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{GridSpec, TWO_PI};

    fn smooth(g: GridSpec) -> VectorField {
        VectorField::from_fn(g, |x, y| [(TWO_PI * x).sin(), (TWO_PI * y).sin()])
    }

    #[test]
    fn comparison_at_zero_time() {
        let g = GridSpec::new(32).unwrap();
        let u0 = smooth(g);
        let c = build_comparison(&u0, &u0, 0.0, 0.1).unwrap();
        assert!(c.g.sup_distance(&u0).unwrap() < 1e-14);
        assert!(c.v.sup_distance(&u0).unwrap() < 1e-14);
        assert!(crate::torus::sup_norm(&c.w) < 1e-14);
        assert_eq!(c.r_sup, 0.0);
    }

    #[test]
    fn constant_datum_has_no_residual() {
        let g = GridSpec::new(32).unwrap();
        let u0 = VectorField::constant(g, [0.3, -0.2]);
        let ut = VectorField::constant(g, crate::ode_flow::phi(0.8, [0.3, -0.2]).unwrap());
        let c = build_comparison(&u0, &ut, 0.8, 0.1).unwrap();
        assert!(c.r_sup < 1e-20);
        assert!(c.ew_sup < 1e-14);
    }

    #[test]
    fn reconstruction_and_v_identity() {
        let g = GridSpec::new(32).unwrap();
        let u0 = smooth(g);
        let ut = u0.map(|[a, b]| [0.9 * a + 0.01, b]);
        let c = build_comparison(&u0, &ut, 0.4, 0.1).unwrap();
        assert!(c.reconstruct().sup_distance(&ut).unwrap() < 1e-14);
        let want = crate::ode_flow::phi_field(0.4, &c.g).unwrap();
        assert!(c.v.sup_distance(&want).unwrap() <= 1e-12);
        assert!(c.r_sup <= 6.0 * c.r_majorant);
    }

    #[test]
    fn envelope_fits() {
        let eps = 0.03;
        let ts: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        let exact: Vec<_> = ts.iter().map(|&t| (t, 2.0 * envelope_profile(eps, t))).collect();
        let env = fit_envelope(eps, &exact).unwrap();
        assert!((env.a_fit - 2.0).abs() < 1e-14);
        assert_eq!(env.violations(2.0), 0);
        assert!(env.violations(1.9) > 0);

        let zero: Vec<_> = ts.iter().map(|&t| (t, 0.0)).collect();
        assert_eq!(fit_envelope(eps, &zero).unwrap().a_fit, 0.0);

        let grad: Vec<_> = ts.iter().map(|&t| (t, gradient_profile(eps, t))).collect();
        assert!((gradient_envelope_check(eps, &grad).unwrap().a_fit - 1.0).abs() < 1e-14);

        assert!(fit_envelope(eps, &[(0.0, 1.0)]).is_err());
        assert_eq!(epsilon_stability(&[1.0, 3.0, 2.0]), 3.0);
    }

    #[test]
    fn gronwall_f_equals_h() {
        let t: Vec<f64> = (1..=100).map(|i| i as f64 * 0.01).collect();
        let h: Vec<f64> = t.iter().map(|s| 0.01 * (1.0 + s)).collect();
        let inst = GronwallInstance::new(t, h.clone(), h, 1.0).unwrap();
        let v = gronwall_verify(&inst).unwrap();
        assert!(v.hypothesis_holds);
        assert!(v.conclusion_holds);
        assert!((v.margin - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gronwall_vacuous_when_c_huge() {
        let t: Vec<f64> = (1..=50).map(|i| i as f64 * 0.02).collect();
        let h: Vec<f64> = t.iter().map(|s| 0.1 + s).collect();
        let f: Vec<f64> = h.iter().map(|v| 10.0 * v).collect();
        let v = gronwall_verify(&GronwallInstance::new(t, f, h, 1e6).unwrap()).unwrap();
        assert!(!v.hypothesis_holds);
        assert!(!v.conclusion_holds);
        assert!(v.lemma_validated());
    }

    #[test]
    fn gronwall_rejects_bad_samples() {
        let t = vec![0.1, 0.2, 0.3];
        assert!(GronwallInstance::new(t.clone(), vec![1.0, 0.0, 1.0], vec![1.0; 3], 1.0).is_err());
        assert!(GronwallInstance::new(t.clone(), vec![1.0; 3], vec![1.0; 2], 1.0).is_err());
        assert!(GronwallInstance::new(vec![0.1, 0.1, 0.3], vec![1.0; 3], vec![1.0; 3], 1.0).is_err());
        assert!(monotone_gronwall_bound(&t, &[1.0, 0.5, 2.0], 1.0).is_err());
    }

    #[test]
    fn monotone_bound_constant_h() {
        // ∫₀ᵀ e^{T-s} h₀ ds = h₀(eᵀ - 1)
        let t: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.001).collect();
        let h0 = 0.01;
        let b = monotone_gronwall_bound(&t, &vec![h0; t.len()], 1.0).unwrap();
        let exact = h0 * (2f64.exp() - 1.0);
        assert!((b.integral - exact).abs() < 1e-6 * exact);
        assert_eq!(b.holds, exact <= 0.125);
        let b = monotone_gronwall_bound(&t, &vec![h0; t.len()], 10.0).unwrap();
        assert!(!b.holds);
        assert!(monotone_gronwall_bound(&t, &vec![1e-300; t.len()], 1e6).unwrap().holds);
    }
}
