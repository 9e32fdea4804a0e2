use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glflow::harness::{self, io, RunConfig, SimulateOptions};

#[derive(Parser)]
#[command(version, about = "Spectral Ginzburg-Landau heat flow on the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one ε and judge the configured verifications.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Run every ε of the config and the cross-ε verdicts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the Gronwall lemma on a `t,f,h` CSV.
    Gronwall {
        samples: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a snapshot as CSV.
    Inspect {
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &PathBuf, seed: Option<u64>) -> glflow::Result<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> glflow::Result<bool> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            resume,
        } => {
            let cfg = load(&config, seed)?;
            let members = cfg.members()?;
            let [member] = members.as_slice() else {
                return Err(glflow::Error::Config(format!(
                    "simulate takes a single eps, got {}; use sweep",
                    members.len()
                )));
            };
            let out = out.unwrap_or(cfg.output_dir.clone());
            let record = harness::simulate(
                member,
                &SimulateOptions {
                    out: Some(out.clone()),
                    resume,
                    ..Default::default()
                },
            )?;
            for v in &record.verdicts {
                println!("{:<10} {}", v.name, if v.passed { "pass" } else { "FAIL" });
            }
            println!("wrote {}", out.display());
            Ok(record.passed())
        }
        Command::Sweep {
            config,
            out,
            jobs,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let out = out.unwrap_or(cfg.output_dir.clone());
            let report = harness::run_sweep(&cfg, Some(&out), jobs)?;
            for r in report.records() {
                for v in &r.verdicts {
                    println!("eps={:<8} {:<10} {}", r.eps(), v.name, if v.passed { "pass" } else { "FAIL" });
                }
            }
            for v in &report.aggregate {
                println!("sweep        {:<22} {}", v.name, if v.passed { "pass" } else { "FAIL" });
            }
            println!("wrote {}", out.join("sweep.ndjson").display());
            Ok(report.passed())
        }
        Command::Gronwall { samples, c, out } => {
            let (verdict, line) = io::gronwall_file(&samples, c)?;
            let text = serde_json::to_string(&line)?;
            match out {
                Some(path) => std::fs::write(path, format!("{text}\n"))?,
                None => println!("{text}"),
            }
            Ok(verdict.lemma_validated())
        }
        Command::Inspect { snapshot, out } => {
            match out {
                Some(path) => io::inspect_snapshot(&snapshot, std::fs::File::create(path)?)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    io::inspect_snapshot(&snapshot, &mut lock)?;
                    lock.flush()?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
