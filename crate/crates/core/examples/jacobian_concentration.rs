//! Bump pairings of the Jacobian at T_ε approach π times the signed degrees.
//!
//! cargo run --release --example jacobian_concentration

use glflow::diagnostics;
use glflow::initial_data::{self, DatumSpec};
use glflow::integrator::{self, FlowParams};

fn main() -> glflow::Result<()> {
    for eps in [0.08, 0.05] {
        let params = FlowParams::standard(eps, 2.0)?;
        let datum = initial_data::make(&DatumSpec::standard_four_vortex(), params.grid())?;
        let centers = datum.certificate.zeros.positions();
        let degrees = datum.certificate.zeros.degrees();
        let radius = diagnostics::default_bump_radius(&centers).expect("several zeros");
        let mut pairings = Vec::new();
        let mut worst_integral: f64 = 0.0;
        integrator::run(datum.field, &params, 25, &mut |o| {
            let j = diagnostics::jacobian(o.u)?;
            worst_integral = worst_integral.max(j.integral().abs());
            if o.critical {
                pairings = diagnostics::local_degrees(&j, &centers, radius)?;
            }
            Ok(())
        })?;
        println!("eps = {eps}: max |int Ju| = {worst_integral:.1e}");
        for (p, d) in pairings.iter().zip(&degrees) {
            println!("  pairing/pi = {p:+.4}  degree {d:+}");
        }
    }
    Ok(())
}
