//! Kill a run part way, resume it from its checkpoint and compare with an
//! uninterrupted run.
//!
//! cargo run --release --example resume

use glflow::harness::{simulate, MemberSpec, SimulateOptions, Verification};
use glflow::initial_data::DatumSpec;
use glflow::snapshot;

fn main() -> glflow::Result<()> {
    let dir = std::env::temp_dir().join("glflow-resume-example");
    let _ = std::fs::remove_dir_all(&dir);
    let mut member = MemberSpec::standard(DatumSpec::ProductSine, 0.05, 2.0, &[Verification::Zeros])?;
    member.checkpoint_every = 4;

    let killed = SimulateOptions {
        out: Some(dir.join("killed")),
        abort_after_observations: Some(60),
        ..Default::default()
    };
    match simulate(&member, &killed) {
        Err(e) => println!("first attempt stopped: {e}"),
        Ok(_) => println!("first attempt unexpectedly finished"),
    }
    let resumed = simulate(
        &member,
        &SimulateOptions {
            out: Some(dir.join("killed")),
            resume: true,
            ..Default::default()
        },
    )?;
    let full = simulate(
        &member,
        &SimulateOptions {
            out: Some(dir.join("full")),
            ..Default::default()
        },
    )?;

    let a = snapshot::read(&dir.join("killed/snapshots/t_crit.glf"))?;
    let b = snapshot::read(&dir.join("full/snapshots/t_crit.glf"))?;
    println!("steps {} vs {}", resumed.steps, full.steps);
    println!("sup|u_resumed - u_full| at T_eps = {:.2e}", a.field.sup_distance(&b.field)?);
    println!("series rows {} vs {}", resumed.series.len(), full.series.len());
    Ok(())
}
