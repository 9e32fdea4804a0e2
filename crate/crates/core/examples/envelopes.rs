//! The comparison map v = Φ(t, e^{ε²tΔ}u₀) and fitted error envelopes for
//! w = e^{-t}(u - v).
//!
//! cargo run --release --example envelopes [eps]

use glflow::comparison::{self, ComparisonBuilder};
use glflow::initial_data::{self, DatumSpec};
use glflow::integrator::{self, FlowParams};

fn main() -> glflow::Result<()> {
    let eps: f64 = std::env::args().nth(1).map_or(Ok(0.05), |s| s.parse()).expect("eps");
    let params = FlowParams::standard(eps, 2.0)?;
    let u0 = initial_data::make(&DatumSpec::standard_four_vortex(), params.grid())?.field;
    let mut builder = ComparisonBuilder::new(&u0, eps)?;
    let (mut env, mut grad) = (Vec::new(), Vec::new());
    println!("{:>8} {:>12} {:>12} {:>12}", "t", "sup|e^t w|", "sup|R|", "R majorant");
    integrator::run(u0, &params, 100, &mut |o| {
        if o.t > 0.0 {
            let c = builder.at(o.u, o.t)?;
            println!("{:>8.4} {:>12.4e} {:>12.4e} {:>12.4e}", o.t, c.ew_sup, c.r_sup, c.r_majorant);
            env.push((o.t, c.ew_sup));
            grad.push((o.t, c.grad_w_sup));
        }
        Ok(())
    })?;
    let a = comparison::fit_envelope(eps, &env)?;
    let g = comparison::gradient_envelope_check(eps, &grad)?;
    println!("A = {:.3} (sup|e^t w| <= A eps^2 e^t sqrt(e^2t - 1))", a.a_fit);
    println!("G = {:.3} (sup|grad e^t w| <= G eps sqrt(t) sqrt(e^2t - 1))", g.a_fit);
    Ok(())
}
