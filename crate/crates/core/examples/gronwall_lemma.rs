//! The Gronwall-type lemma: its hypothesis implies f <= 2h. Checked on the
//! envelope instance with T = ln(1/ε) - ln(16A²) and on a violating one.
//!
//! cargo run --example gronwall_lemma

use glflow::comparison::{self, GronwallInstance};

fn main() -> glflow::Result<()> {
    let (a, eps) = (2.0, 0.01);
    let (t, h) = comparison::envelope_instance(a, eps, 400)?;
    let m = comparison::monotone_gronwall_bound(&t, &h, a)?;
    println!(
        "envelope instance: T = {:.4}, 8A int = {:.4}, margin {:.3}",
        t.last().unwrap(),
        8.0 * a * m.integral,
        m.margin
    );

    // the lemma's samples must be positive, so drop t = 0 where h vanishes
    let (t, h): (Vec<f64>, Vec<f64>) = t.into_iter().zip(h).filter(|p| p.1 > 0.0).unzip();
    let inst = GronwallInstance::new(t.clone(), h.clone(), h.clone(), a)?;
    let v = comparison::gronwall_verify(&inst)?;
    println!(
        "f = h: hypothesis {}, conclusion {}, margin {:.3}",
        v.hypothesis_holds, v.conclusion_holds, v.margin
    );

    let big: Vec<f64> = h.iter().map(|x| 10.0 * x).collect();
    let inst = GronwallInstance::new(t, big, h, 1e6)?;
    let v = comparison::gronwall_verify(&inst)?;
    println!(
        "f = 10h, c = 1e6: hypothesis {}, conclusion {}, lemma validated {}",
        v.hypothesis_holds,
        v.conclusion_holds,
        v.lemma_validated()
    );
    Ok(())
}
