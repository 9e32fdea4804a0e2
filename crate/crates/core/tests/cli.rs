use std::path::Path;
use std::process::Command;

fn glflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_glflow")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn verdict_lines(out: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(out.join("run.ndjson"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["type"] == "verdict")
        .collect()
}

#[test]
fn constant_datum_passes_with_no_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "eps = 0.05\n[datum]\nkind = \"constant\"\n");
    let out = dir.path().join("out");
    let o = glflow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(verdict_lines(&out).is_empty());
    for f in ["run.ndjson", "series.csv", "certificate.ndjson", "snapshots/t0.glf", "snapshots/t_crit.glf"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn product_sine_keeps_four_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "eps = 0.05\nverify = [\"zeros\"]\n[datum]\nkind = \"product_sine\"\n",
    );
    let out = dir.path().join("out");
    let o = glflow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = verdict_lines(&out);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["name"], "zeros");
    assert_eq!(v[0]["passed"], true);
    assert_eq!(v[0]["evidence"]["min_zero_count"], 4);
    assert_eq!(v[0]["evidence"]["max_zero_count"], 4);
    let tracks = std::fs::read_to_string(out.join("tracks.csv")).unwrap();
    assert!(tracks.starts_with("t,j,x,y,degree,drift"));
    let s = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(s.starts_with("t,energy,sup_modulus,min_modulus,zero_count,max_drift,envelope_ratio"));
}

#[test]
fn under_resolved_grid_names_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "eps = 0.2\nn_override = 16\n[datum]\nkind = \"constant\"\n");
    let o = glflow(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("resolution rule n >= ceil(8/eps)"), "{err}");
}

#[test]
fn unknown_keys_and_missing_files_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "eps = 0.05\nepsilon = 1\n[datum]\nkind = \"constant\"\n");
    assert_eq!(glflow(&["simulate", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(glflow(&["simulate", "--config", "/nonexistent.toml"]).status.code(), Some(1));
}

#[test]
fn gronwall_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("t,f,h\n");
    for i in 1..=50 {
        let t = i as f64 * 0.02;
        text.push_str(&format!("{t},{},{}\n", 1e-3 * t, 1e-3 * t));
    }
    let samples = write(dir.path(), "s.csv", &text);
    let o = glflow(&["gronwall", &samples, "--c", "2.0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["conclusion_holds"], true);
    assert_eq!(v["margin"], 1.0);

    let bad = write(dir.path(), "bad.csv", "t,f,h\n0.1,x,1\n");
    assert_eq!(glflow(&["gronwall", &bad, "--c", "1"]).status.code(), Some(1));
}

#[test]
fn inspect_dumps_every_node() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "eps = 0.08\n[datum]\nkind = \"zero_free_winding\"\n");
    let out = dir.path().join("out");
    assert_eq!(glflow(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let snap = out.join("snapshots/t0.glf");
    let o = glflow(&["inspect", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ix,iy,x,y,u1,u2,modulus"));
    assert_eq!(lines.count(), 100 * 100);
}

#[test]
fn sweep_reports_and_fails_on_degenerate_member() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "eps = [0.2, 0.15, 0.1]\nc0 = 0.5\nverify = [\"energy\", \"zeros\"]\n[datum]\nkind = \"zero_free_winding\"\n",
    );
    let out = dir.path().join("ok");
    let o = glflow(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("sweep.ndjson").exists());

    let cfg = write(
        dir.path(),
        "d.toml",
        "eps = [0.2, 0.15, 0.1]\nc0 = 0.5\n[datum]\nkind = \"constant\"\nvalue = [0.0, 0.0]\n",
    );
    let out = dir.path().join("bad");
    let o = glflow(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("sweep.ndjson").exists());
}

#[test]
fn failed_verification_exits_with_two() {
    // t_end = 0 leaves the envelope fit without samples, which fails it
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "eps = 0.08\nt_end = 0.0\nverify = [\"envelopes\"]\n[datum]\nkind = \"zero_free_winding\"\n",
    );
    let o = glflow(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
