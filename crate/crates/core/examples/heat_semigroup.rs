//! The heat multiplier on single Fourier modes, and the semigroup property.
//!
//! cargo run --example heat_semigroup

use glflow::torus::{self, GridSpec, SpectralRep, VectorField, TWO_PI};

fn main() -> glflow::Result<()> {
    let grid = GridSpec::new(64)?;
    let eps = 0.1;
    let tau = 0.5;

    for k in [1i64, 3, 7] {
        let f = VectorField::from_fn(grid, |x, _| [(TWO_PI * k as f64 * x).cos(), 0.0]);
        let g = torus::heat_semigroup(&f, tau, eps)?;
        let measured = SpectralRep::forward(&g)?.coefficient(0, k, 0).re * 2.0;
        let exact = (-4.0 * std::f64::consts::PI.powi(2) * eps * eps * (k * k) as f64 * tau).exp();
        println!("k = {k}: multiplier {measured:.12}  closed form {exact:.12}");
    }

    let f = VectorField::from_fn(grid, |x, y| [(TWO_PI * x).sin() * (TWO_PI * y).cos(), (TWO_PI * 2.0 * y).sin()]);
    let once = torus::heat_semigroup(&f, 2.0 * tau, eps)?;
    let twice = torus::heat_semigroup(&torus::heat_semigroup(&f, tau, eps)?, tau, eps)?;
    println!("semigroup defect sup|H(2τ)f - H(τ)H(τ)f| = {:.2e}", once.sup_distance(&twice)?);
    println!(
        "max principle: sup|f| = {:.4}, sup|H(τ)f| = {:.4}",
        torus::sup_norm(&f),
        torus::sup_norm(&once)
    );
    Ok(())
}
