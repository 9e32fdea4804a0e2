//! The closed-form reaction flow Φ: semigroup identity, attraction to the
//! unit circle and the second-differential majorant.
//!
//! cargo run --example reaction_flow

use glflow::ode_flow::{self, FlowPoint};

fn main() -> glflow::Result<()> {
    let x = [0.05, -0.02];
    println!("{:>6} {:>12} {:>14}", "t", "|Phi(t,x)|", "|D2Phi| bound");
    for t in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let p = FlowPoint::new(t, x)?;
        let y = p.phi();
        println!("{t:>6.1} {:>12.6} {:>14.4e}", y[0].hypot(y[1]), p.d2phi_majorant());
    }

    let (s, t) = (0.7, 1.3);
    let a = ode_flow::phi(s + t, x)?;
    let b = ode_flow::phi(s, ode_flow::phi(t, x)?)?;
    println!("semigroup defect: {:.2e}", (a[0] - b[0]).hypot(a[1] - b[1]));

    let back = ode_flow::phi_inverse(t, ode_flow::phi(t, x)?)?;
    println!("inverse defect:   {:.2e}", (back[0] - x[0]).hypot(back[1] - x[1]));

    // the backward flow blows up once 1 - |x|²(1 - e^{-2t}) reaches zero
    match ode_flow::phi(-1.0, [2.0, 0.0]) {
        Ok(y) => println!("Phi(-1, (2,0)) = {y:?}"),
        Err(e) => println!("Phi(-1, (2,0)): {e}"),
    }
    Ok(())
}
