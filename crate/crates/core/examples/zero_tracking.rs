//! Detect, track and certify the zeros of the four-vortex datum up to T_ε.
//!
//! cargo run --release --example zero_tracking [eps]

use glflow::initial_data::{self, DatumSpec};
use glflow::integrator::{self, FlowParams};
use glflow::vortex::{self, Tracker};

fn main() -> glflow::Result<()> {
    let eps: f64 = std::env::args().nth(1).map_or(Ok(0.05), |s| s.parse()).expect("eps");
    let params = FlowParams::standard(eps, 2.0)?;
    let datum = initial_data::make(&DatumSpec::standard_four_vortex(), params.grid())?;
    let zeros0 = datum.certificate.zeros.clone();
    println!("alpha0 = {:.3}, initial zeros:", datum.certificate.alpha0);
    for v in &zeros0.vortices {
        println!("  ({:.4}, {:.4}) degree {:+}", v.position[0], v.position[1], v.degree);
    }

    let mut tracker = Tracker::new(&zeros0, eps);
    let mut last = None;
    integrator::run(datum.field, &params, 50, &mut |o| {
        let zeros = vortex::detect_zeros(o.u, o.t)?;
        if o.t > 0.0 {
            tracker.push(&zeros)?;
        }
        if o.critical {
            last = Some(vortex::minimal_bad_disk_multiplier(o.u, &zeros0, eps));
        }
        Ok(())
    })?;

    let record = tracker.finish();
    let scale = vortex::bad_disk_scale(eps);
    println!("T_eps = {:.4}, {} observations", params.critical_time(), record.times.len());
    println!("degrees constant: {}", record.degrees_constant());
    println!(
        "max drift {:.3e} = {:.3} eps sqrt(ln 1/eps)",
        record.final_max_drift(),
        record.final_max_drift() / scale
    );
    if let Some(m) = last {
        println!("|u| >= 1/2 outside disks of radius {m:.2} eps sqrt(ln 1/eps)");
    }
    Ok(())
}
