//! How the choice of C₀ in T_ε = ln(1/ε) - ½ ln ln(1/ε) - C₀ moves the
//! drift and the energy at T_ε.
//!
//! cargo run --release --example c0_sensitivity [eps]

use glflow::initial_data::{self, DatumSpec};
use glflow::integrator::{self, critical_time, FlowParams};
use glflow::vortex::{self, Tracker};

fn main() -> glflow::Result<()> {
    let eps: f64 = std::env::args().nth(1).map_or(Ok(0.035), |s| s.parse()).expect("eps");
    for c0 in [1.0, 2.0, 3.0] {
        let t = critical_time(eps, c0);
        let params = match FlowParams::standard(eps, c0) {
            Ok(p) => p,
            Err(e) => {
                println!("C0 = {c0}: T_eps = {t:.4}, skipped ({e})");
                continue;
            }
        };
        let datum = initial_data::make(&DatumSpec::standard_four_vortex(), params.grid())?;
        let mut tracker = Tracker::new(&datum.certificate.zeros, eps);
        let mut e_crit = f64::NAN;
        integrator::run(datum.field, &params, 20, &mut |o| {
            if o.t > 0.0 {
                tracker.push(&vortex::detect_zeros(o.u, o.t)?)?;
            }
            if o.critical {
                e_crit = o.energy.total;
            }
            Ok(())
        })?;
        let drift = tracker.record().final_max_drift() / vortex::bad_disk_scale(eps);
        println!("C0 = {c0}: T_eps = {t:.4}, E(T_eps) = {e_crit:.3}, drift / eps sqrt(ln) = {drift:.4}");
    }
    Ok(())
}
