//! Randomized Gronwall instances shared by the property and acceptance tests.

use glflow::comparison::{self, GronwallInstance};
use rand::{Rng, SeedableRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// `f ≤ h` everywhere.
    Below,
    /// `f/h` a random positive spline.
    Random,
    /// `f` solving the integral inequality with equality.
    Extremal,
}

/// A positive piecewise-linear function through random knots.
pub fn spline(knots: &[f64], t: f64, horizon: f64) -> f64 {
    let m = knots.len() - 1;
    let s = (t / horizon * m as f64).clamp(0.0, m as f64);
    let i = (s.floor() as usize).min(m - 1);
    let w = s - i as f64;
    knots[i] * (1.0 - w) + knots[i + 1] * w
}

/// `f = c∫₀ᵗe^{t-s}f² ds + h` solved forward with the verifier's quadrature,
/// so the integral inequality holds with equality. Stops at blow-up.
pub fn extremal_f(t: &[f64], h: &[f64], c: f64) -> Option<Vec<f64>> {
    let root = |a: f64, b: f64| {
        // smallest positive root of a f² - f + b = 0
        let disc = 1.0 - 4.0 * a * b;
        (disc >= 0.0).then(|| 2.0 * b / (1.0 + disc.sqrt()))
    };
    let mut f = vec![root(c * t[0], h[0])?];
    let mut j = t[0] * f[0] * f[0];
    for k in 1..t.len() {
        let d = t[k] - t[k - 1];
        let e = d.exp();
        let a = e * j + 0.5 * d * e * f[k - 1] * f[k - 1];
        let fk = root(0.5 * c * d, c * a + h[k])?;
        j = a + 0.5 * d * fk * fk;
        f.push(fk);
    }
    Some(f)
}

/// `count` instances cycling through the three kinds. Samples live in
/// `(0, T]`, `h` is a positive spline and `c` sits near the threshold of the
/// integral condition. Extremal instances that blow up are regenerated.
pub fn gronwall_batch(seed: u64, count: usize) -> Vec<(Kind, GronwallInstance)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let kind = [Kind::Below, Kind::Random, Kind::Extremal][out.len() % 3];
        let horizon = rng.gen_range(0.1..3.0);
        let m = 200;
        let t: Vec<f64> = (1..=m).map(|i| horizon * i as f64 / m as f64).collect();
        let hk: Vec<f64> = (0..6).map(|_| 10f64.powf(rng.gen_range(-4.0..0.0))).collect();
        let h: Vec<f64> = t.iter().map(|&s| spline(&hk, s, horizon)).collect();
        let probe = GronwallInstance::new(t.clone(), h.clone(), h.clone(), 1.0).unwrap();
        let unit = comparison::gronwall_verify(&probe).unwrap().integral_ratio;
        let c = rng.gen_range(0.05..2.0) / unit;
        let f: Vec<f64> = match kind {
            Kind::Below => h.iter().map(|v| v * rng.gen_range(0.1..1.0)).collect(),
            Kind::Random => {
                let ratio: Vec<f64> = std::iter::once(rng.gen_range(0.2..1.0))
                    .chain((0..5).map(|_| rng.gen_range(0.1..4.0)))
                    .collect();
                t.iter().zip(&h).map(|(&s, v)| v * spline(&ratio, s, horizon)).collect()
            }
            Kind::Extremal => match extremal_f(&t, &h, c) {
                Some(f) => f.into_iter().map(|v| v * (1.0 - 1e-10)).collect(),
                None => continue,
            },
        };
        out.push((kind, GronwallInstance::new(t, f, h, c).unwrap()));
    }
    out
}
