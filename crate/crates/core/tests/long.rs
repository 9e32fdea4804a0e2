//! Finer sweeps, minutes each. `cargo test --release --test long -- --ignored`

use glflow::harness::{simulate, MemberSpec, SimulateOptions, Verification};
use glflow::initial_data::DatumSpec;
use glflow::integrator::critical_time;

fn four_vortex(eps: f64, c0: f64, verify: &[Verification]) -> glflow::harness::RunRecord {
    let m = MemberSpec::standard(DatumSpec::standard_four_vortex(), eps, c0, verify).unwrap();
    simulate(&m, &SimulateOptions::default()).unwrap()
}

#[test]
#[ignore]
fn envelope_constant_stable_from_004_to_002() {
    let [a, b] = [0.04, 0.02].map(|e| {
        let r = four_vortex(e, 2.0, &[Verification::Envelopes]);
        assert!(r.passed(), "eps = {e}: {:?}", r.verdicts);
        r.envelope.unwrap()
    });
    let ratio = a.a_fit / b.a_fit;
    println!("a_fit {} / {} = {ratio}", a.a_fit, b.a_fit);
    assert!((0.25..=4.0).contains(&ratio), "{ratio}");
    let g = a.grad_fit / b.grad_fit;
    assert!((0.25..=4.0).contains(&g), "gradient {g}");
}

#[test]
#[ignore]
fn zeros_conserved_for_every_c0() {
    let eps = 0.025;
    for c0 in [1.0, 2.0, 3.0] {
        assert!(critical_time(eps, c0) > 0.0);
        let r = four_vortex(eps, c0, &[Verification::Zeros, Verification::Energy]);
        let c = r.critical.as_ref().unwrap();
        println!(
            "C0 = {c0}: T = {:.4}, E(T) = {:.3}, drift scaled = {:?}",
            r.t_crit, c.energy.total, c.drift_scaled
        );
        assert!(r.passed(), "C0 = {c0}: {:?}", r.verdicts);
    }
}
