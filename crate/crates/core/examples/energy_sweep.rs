//! E_ε(u(T_ε)) against ln(1/ε): the logarithmic energy regime.
//!
//! cargo run --release --example energy_sweep

use glflow::diagnostics;
use glflow::initial_data::{self, DatumSpec};
use glflow::integrator::{self, FlowParams};

fn main() -> glflow::Result<()> {
    let mut pairs = Vec::new();
    for eps in [0.06, 0.05, 0.04] {
        let params = FlowParams::standard(eps, 2.0)?;
        let u0 = initial_data::make(&DatumSpec::standard_four_vortex(), params.grid())?.field;
        let e0 = diagnostics::energy(&u0, eps)?.total;
        let mut e_crit = f64::NAN;
        integrator::run(u0, &params, u64::MAX, &mut |o| {
            if o.critical {
                e_crit = o.energy.total;
            }
            Ok(())
        })?;
        println!("eps = {eps:<6} n = {:<4} E(0) = {e0:8.3}  E(T_eps) = {e_crit:8.3}", params.n());
        pairs.push((eps, e_crit));
    }
    let fit = diagnostics::fit_log_scaling(&pairs)?;
    println!(
        "E(T_eps) ~ {:.3} ln(1/eps) + {:.3}; slope / 8pi = {:.3}; max relative residual {:.2e}",
        fit.slope,
        fit.intercept,
        fit.slope / (8.0 * std::f64::consts::PI),
        fit.max_relative_residual
    );
    Ok(())
}
