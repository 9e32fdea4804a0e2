//! Initial data generators. Every generated field goes through the
//! certificate before it is returned.
//!
//! Prescribed vortices use Jacobi's `θ₁` with nome `q = e^{-π}`: for a
//! degree `+1` zero at `p` the factor is `θ₁(π(z - p))` and for `-1` its
//! conjugate, with `z = x₁ + i x₂`. The product is periodic in `x₁`, and the
//! Gaussian factor `exp(-πn x₂² - 2πi S x₂)` makes it periodic in `x₂` as well
//! (`n` zeros, `S = Σ₊ p_j - Σ₋ p̄_j`). The modulus is then saturated to 1 away
//! from the cores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::torus::{self, GridSpec, VectorField, TWO_PI};
use crate::vortex::{self, InitialDataCertificate};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrescribedVortex {
    pub x: f64,
    pub y: f64,
    pub degree: i32,
}

fn default_constant() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_core_radius() -> f64 {
    0.05
}

fn default_energy_multiple() -> f64 {
    10.0
}

fn default_retries() -> u32 {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    Constant {
        #[serde(default = "default_constant")]
        value: [f64; 2],
    },
    /// `(sin 2πx₁, sin 2πx₂)`.
    ProductSine,
    /// `(cos 2πx₁, sin 2πx₁)`.
    ZeroFreeWinding,
    PrescribedVortices {
        vortices: Vec<PrescribedVortex>,
        #[serde(default = "default_core_radius")]
        core_radius: f64,
    },
    /// Band-limited noise over a certified base, scaled down until the
    /// certificate passes with the base's zero count.
    RandomFourierHighenergy {
        base: Box<DatumSpec>,
        cutoff: usize,
        amplitude: f64,
        seed: u64,
        /// Energy target is `energy_multiple · ln(1/eps_min)`.
        eps_min: f64,
        #[serde(default = "default_energy_multiple")]
        energy_multiple: f64,
        #[serde(default = "default_retries")]
        max_retries: u32,
    },
}

impl DatumSpec {
    /// The four-vortex datum used throughout the examples and tests.
    pub fn standard_four_vortex() -> Self {
        let v = |x, y, degree| PrescribedVortex { x, y, degree };
        Self::PrescribedVortices {
            vortices: vec![
                v(0.2, 0.3, 1),
                v(0.7, 0.2, -1),
                v(0.35, 0.75, -1),
                v(0.8, 0.65, 1),
            ],
            core_radius: default_core_radius(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::ProductSine => "product_sine",
            Self::ZeroFreeWinding => "zero_free_winding",
            Self::PrescribedVortices { .. } => "prescribed_vortices",
            Self::RandomFourierHighenergy { .. } => "random_fourier_highenergy",
        }
    }

    /// Replaces the seed of random data (no-op for deterministic kinds).
    pub fn with_seed(self, s: u64) -> Self {
        match self {
            Self::RandomFourierHighenergy {
                base,
                cutoff,
                amplitude,
                eps_min,
                energy_multiple,
                max_retries,
                ..
            } => Self::RandomFourierHighenergy {
                base,
                cutoff,
                amplitude,
                seed: s,
                eps_min,
                energy_multiple,
                max_retries,
            },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { value } if !value.iter().all(|v| v.is_finite()) => {
                Err(Error::Invalid("constant datum must be finite".into()))
            }
            Self::PrescribedVortices {
                vortices,
                core_radius,
            } => {
                if vortices.iter().any(|v| v.degree.abs() != 1) {
                    return Err(Error::Invalid("prescribed degrees must be +1 or -1".into()));
                }
                let total: i32 = vortices.iter().map(|v| v.degree).sum();
                if total != 0 {
                    return Err(Error::Invalid(format!(
                        "prescribed degrees sum to {total}; a field on the torus needs total degree 0"
                    )));
                }
                if vortices
                    .iter()
                    .any(|v| !(0.0..1.0).contains(&v.x) || !(0.0..1.0).contains(&v.y))
                {
                    return Err(Error::Invalid("vortex positions must lie in [0, 1)^2".into()));
                }
                if !(*core_radius > 0.0 && *core_radius < 0.25) {
                    return Err(Error::Invalid(format!("core_radius = {core_radius} outside (0, 1/4)")));
                }
                let pts: Vec<_> = vortices.iter().map(|v| [v.x, v.y]).collect();
                if let Some(d) = diagnostics::min_separation(&pts) {
                    if d < 2.0 * core_radius {
                        return Err(Error::Invalid(format!(
                            "vortices {d:.3} apart, closer than two core radii"
                        )));
                    }
                }
                Ok(())
            }
            Self::RandomFourierHighenergy {
                base,
                cutoff,
                amplitude,
                eps_min,
                energy_multiple,
                ..
            } => {
                if matches!(**base, Self::RandomFourierHighenergy { .. }) {
                    return Err(Error::Invalid("noise base cannot itself be random".into()));
                }
                base.validate()?;
                if *cutoff == 0 {
                    return Err(Error::Invalid("noise cutoff must be >= 1".into()));
                }
                if !(*amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(Error::Invalid(format!("noise amplitude {amplitude} must be positive")));
                }
                if !(*eps_min > 0.0 && *eps_min < 1.0) {
                    return Err(Error::Invalid(format!("eps_min = {eps_min} outside (0, 1)")));
                }
                if !(*energy_multiple >= 0.0) {
                    return Err(Error::Invalid("energy_multiple must be >= 0".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A generated datum together with its passing certificate.
#[derive(Clone, Debug)]
pub struct Datum {
    pub field: VectorField,
    pub certificate: InitialDataCertificate,
    /// Noise amplitude actually used (random data only).
    pub amplitude: Option<f64>,
}

pub fn make(spec: &DatumSpec, grid: GridSpec) -> Result<Datum> {
    spec.validate()?;
    let field = match spec {
        DatumSpec::Constant { value } => VectorField::constant(grid, *value),
        DatumSpec::ProductSine => {
            VectorField::from_fn(grid, |x, y| [(TWO_PI * x).sin(), (TWO_PI * y).sin()])
        }
        DatumSpec::ZeroFreeWinding => {
            VectorField::from_fn(grid, |x, _| [(TWO_PI * x).cos(), (TWO_PI * x).sin()])
        }
        DatumSpec::PrescribedVortices {
            vortices,
            core_radius,
        } => {
            let f = prescribed_vortices(grid, vortices, *core_radius);
            let cert = vortex::certify_initial_data(&f)?;
            check_prescribed(&cert, vortices, grid)?;
            return Ok(Datum {
                field: f,
                certificate: cert,
                amplitude: None,
            });
        }
        DatumSpec::RandomFourierHighenergy {
            base,
            cutoff,
            amplitude,
            seed,
            eps_min,
            energy_multiple,
            max_retries,
        } => {
            return high_energy(
                grid,
                base,
                *cutoff,
                *amplitude,
                *seed,
                energy_multiple * (1.0 / eps_min).ln(),
                *eps_min,
                *max_retries,
            );
        }
    };
    let certificate = vortex::certify_initial_data(&field)?;
    Ok(Datum {
        field,
        certificate,
        amplitude: None,
    })
}

fn theta1(z: Complex64) -> Complex64 {
    // 2 Σ (-1)^k q^{(k+½)²} sin((2k+1)z), q = e^{-π}
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..12 {
        let kk = k as f64 + 0.5;
        let w = (-std::f64::consts::PI * kk * kk).exp();
        let term = ((2 * k + 1) as f64 * z).sin() * w;
        if k % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
    }
    2.0 * s
}

fn theta_product(vortices: &[PrescribedVortex], x: f64, y: f64) -> Complex64 {
    let pi = std::f64::consts::PI;
    let n = vortices.len() as f64;
    let mut s = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1.0, 0.0);
    let z = Complex64::new(x, y);
    for v in vortices {
        let p = Complex64::new(v.x, v.y);
        let th = theta1(pi * (z - p));
        if v.degree > 0 {
            f *= th;
            s += p;
        } else {
            f *= th.conj();
            s -= p.conj();
        }
    }
    let gauss = (Complex64::new(-pi * n * y * y, 0.0) - Complex64::new(0.0, TWO_PI) * s * y).exp();
    gauss * f
}

fn prescribed_vortices(grid: GridSpec, vortices: &[PrescribedVortex], core: f64) -> VectorField {
    // |U| ≈ |∂U(p)|·r near each zero, so κ = |U| at one core radius sets the core size
    let kappa = {
        let logs: f64 = vortices
            .iter()
            .map(|v| theta_product(vortices, v.x + core, v.y).norm().ln())
            .sum();
        (logs / vortices.len().max(1) as f64).exp()
    };
    VectorField::from_fn(grid, |x, y| {
        if vortices.is_empty() {
            return [1.0, 0.0];
        }
        let u = theta_product(vortices, x, y);
        let s = (u.norm_sqr() + kappa * kappa).sqrt();
        [u.re / s, u.im / s]
    })
}

fn check_prescribed(cert: &InitialDataCertificate, want: &[PrescribedVortex], grid: GridSpec) -> Result<()> {
    let fail = |reason: String| Error::Certification {
        alpha0: cert.alpha0,
        reason,
    };
    if cert.zeros.len() != want.len() {
        return Err(fail(format!(
            "expected {} zeros, detected {}",
            want.len(),
            cert.zeros.len()
        )));
    }
    for v in want {
        let (i, d) = cert.zeros.nearest([v.x, v.y]).expect("non-empty");
        if d > 2.0 * grid.spacing() || cert.zeros.vortices[i].degree != v.degree {
            return Err(fail(format!(
                "prescribed zero at ({}, {}) not reproduced (nearest at distance {d:.2e})",
                v.x, v.y
            )));
        }
    }
    Ok(())
}

/// Real band-limited noise `Σ_{0 < |k| ≤ K} a_k cos(2πk·x) + b_k sin(2πk·x)`
/// per component, coefficients uniform in `[-1, 1]` and normalized to unit RMS.
fn noise(grid: GridSpec, cutoff: usize, rng: &mut ChaCha8Rng) -> VectorField {
    let k = cutoff as i64;
    let mut modes = Vec::new();
    for k1 in -k..=k {
        for k2 in 0..=k {
            // half plane: skip k and -k duplicates
            if (k2 == 0 && k1 <= 0) || k1 * k1 + k2 * k2 > k * k {
                continue;
            }
            let c: [f64; 4] = [
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            ];
            modes.push((k1 as f64, k2 as f64, c));
        }
    }
    // each cos/sin term has mean square ½, each coefficient mean square ⅓
    let scale = 1.0 / (modes.len() as f64 / 3.0).sqrt();
    VectorField::from_fn(grid, |x, y| {
        let mut out = [0.0; 2];
        for (k1, k2, c) in &modes {
            let (s, co) = (TWO_PI * (k1 * x + k2 * y)).sin_cos();
            out[0] += c[0] * co + c[1] * s;
            out[1] += c[2] * co + c[3] * s;
        }
        [scale * out[0], scale * out[1]]
    })
}

#[allow(clippy::too_many_arguments)]
fn high_energy(
    grid: GridSpec,
    base: &DatumSpec,
    cutoff: usize,
    amplitude: f64,
    seed: u64,
    target: f64,
    eps_min: f64,
    max_retries: u32,
) -> Result<Datum> {
    if cutoff > grid.n() / 4 {
        return Err(Error::Invalid(format!(
            "noise cutoff {cutoff} exceeds n/4 = {}",
            grid.n() / 4
        )));
    }
    let base = make(base, grid)?;
    let want_zeros = base.certificate.zeros.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = noise(grid, cutoff, &mut rng);
    let mut a = amplitude;
    let mut last_alpha = f64::NAN;
    let mut last_reason = String::new();
    for _ in 0..=max_retries {
        let f = base.field.lincomb(1.0, &eta, a)?;
        match vortex::inspect_initial_data(&f)? {
            cert if cert.passed && cert.zeros.len() == want_zeros => {
                let e = diagnostics::energy(&f, eps_min)?.total;
                if e < target {
                    return Err(Error::Certification {
                        alpha0: cert.alpha0,
                        reason: format!(
                            "energy {e:.3} below target {target:.3} at amplitude {a:.3}"
                        ),
                    });
                }
                return Ok(Datum {
                    field: f,
                    certificate: cert,
                    amplitude: Some(a),
                });
            }
            cert => {
                last_alpha = cert.alpha0;
                last_reason = cert.reason.unwrap_or_else(|| {
                    format!("zero count {} differs from base {want_zeros}", cert.zeros.len())
                });
            }
        }
        a *= 0.7;
    }
    Err(Error::Certification {
        alpha0: last_alpha,
        reason: format!("after {max_retries} retries: {last_reason}"),
    })
}

/// Unit-modulus check used by examples: `sup ||u| - 1|`.
pub fn modulus_defect(f: &VectorField) -> f64 {
    torus::pointwise_modulus(f)
        .values()
        .iter()
        .map(|m| (m - 1.0).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::FOUR_PI_SQ;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn simple_kinds() {
        let g = grid(64);
        let d = make(&DatumSpec::ProductSine, g).unwrap();
        assert_eq!(d.certificate.zeros.len(), 4);
        let mut degs = d.certificate.zeros.degrees();
        degs.sort();
        assert_eq!(degs, vec![-1, -1, 1, 1]);

        let d = make(&DatumSpec::ZeroFreeWinding, g).unwrap();
        assert!(d.certificate.zeros.is_empty());
        assert!((d.certificate.alpha0 - 1.0).abs() < 1e-12);
        let e = diagnostics::energy(&d.field, 0.05).unwrap();
        assert!((e.total - FOUR_PI_SQ).abs() < 1e-9);

        let d = make(&DatumSpec::Constant { value: [1.0, 0.0] }, g).unwrap();
        assert_eq!(diagnostics::energy(&d.field, 0.05).unwrap().total, 0.0);
    }

    #[test]
    fn theta_product_is_periodic() {
        let DatumSpec::PrescribedVortices { vortices, .. } = DatumSpec::standard_four_vortex() else {
            unreachable!()
        };
        for (x, y) in [(0.1, 0.2), (0.77, 0.01), (0.5, 0.93)] {
            let u = theta_product(&vortices, x, y);
            let ux = theta_product(&vortices, x + 1.0, y);
            let uy = theta_product(&vortices, x, y + 1.0);
            assert!((u - ux).norm() < 1e-12 * u.norm().max(1.0));
            assert!((u - uy).norm() < 1e-12 * u.norm().max(1.0));
        }
    }

    #[test]
    fn four_vortex_datum() {
        let g = grid(160);
        let d = make(&DatumSpec::standard_four_vortex(), g).unwrap();
        let z = &d.certificate.zeros;
        assert_eq!(z.len(), 4);
        for (p, deg) in [([0.2, 0.3], 1), ([0.7, 0.2], -1), ([0.35, 0.75], -1), ([0.8, 0.65], 1)] {
            let (i, dist) = z.nearest(p).unwrap();
            assert!(dist < 1e-3, "{p:?} {dist}");
            assert_eq!(z.vortices[i].degree, deg);
        }
        // saturated away from the cores
        assert!(d.certificate.beta0 > 0.8, "beta0 = {}", d.certificate.beta0);
        // smooth: spectral tail negligible
        let rep = torus::SpectralRep::forward(&d.field).unwrap();
        let tail = (0..2)
            .map(|c| rep.coefficient(c, 60, 0).norm().max(rep.coefficient(c, 0, 60).norm()))
            .fold(0.0, f64::max);
        assert!(tail < 1e-8, "tail {tail}");
    }

    #[test]
    fn prescribed_spec_validation() {
        let v = |x, y, degree| PrescribedVortex { x, y, degree };
        let bad = [
            vec![v(0.2, 0.2, 1)],
            vec![v(0.2, 0.2, 2), v(0.6, 0.6, -2)],
            vec![v(0.2, 0.2, 1), v(0.22, 0.2, -1)],
            vec![v(1.2, 0.2, 1), v(0.5, 0.5, -1)],
        ];
        for vortices in bad {
            let spec = DatumSpec::PrescribedVortices {
                vortices,
                core_radius: 0.05,
            };
            assert!(make(&spec, grid(64)).is_err());
        }
    }

    fn noisy(base: DatumSpec, seed: u64) -> DatumSpec {
        DatumSpec::RandomFourierHighenergy {
            base: Box::new(base),
            cutoff: 6,
            amplitude: 0.4,
            seed,
            eps_min: 0.025,
            energy_multiple: 10.0,
            max_retries: 10,
        }
    }

    #[test]
    fn high_energy_is_reproducible_and_energetic() {
        let g = grid(64);
        let a = make(&noisy(DatumSpec::ZeroFreeWinding, 7), g).unwrap();
        let b = make(&noisy(DatumSpec::ZeroFreeWinding, 7), g).unwrap();
        assert_eq!(a.field.values(), b.field.values());
        assert!(a.certificate.zeros.is_empty());
        let e = diagnostics::energy(&a.field, 0.025).unwrap().total;
        assert!(e >= 10.0 * 40f64.ln());
        let c = make(&noisy(DatumSpec::ZeroFreeWinding, 8), g).unwrap();
        assert_ne!(a.field.values(), c.field.values());
    }

    #[test]
    fn high_energy_rejects_wide_band() {
        let spec = DatumSpec::RandomFourierHighenergy {
            base: Box::new(DatumSpec::ZeroFreeWinding),
            cutoff: 20,
            amplitude: 0.3,
            seed: 1,
            eps_min: 0.025,
            energy_multiple: 10.0,
            max_retries: 10,
        };
        assert!(make(&spec, grid(64)).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let spec = noisy(DatumSpec::standard_four_vortex(), 3);
        let s = toml::to_string(&spec).unwrap();
        let back: DatumSpec = toml::from_str(&s).unwrap();
        assert_eq!(spec, back);
        let ps: DatumSpec = toml::from_str("kind = \"product_sine\"").unwrap();
        assert_eq!(ps, DatumSpec::ProductSine);
    }
}
