use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seqdrift::checkpoint;
use seqdrift::harness::{
    audit_state_size, fit_discriminator, load_dataset, run_experiment, time_phases, write_trace_csv,
    ExperimentConfig,
};
use seqdrift::streams::{gen_drift_stream, write_csv, DriftKind, DriftSchedule, Profile, SynthConfig};
use seqdrift::{DriftMonitor, Result};

#[derive(Parser)]
#[command(name = "seqdrift", version, about = "Sequential drift detection for OS-ELM autoencoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the initial discriminator and save it.
    Train {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Stream an experiment and write its report and trace.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Report destination (JSON); stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a generated drift stream to CSV.
    Synth {
        #[arg(long, value_enum, default_value_t = KindArg::Sudden)]
        kind: KindArg,
        #[arg(long, value_enum, default_value_t = ProfileArg::Mixture)]
        profile: ProfileArg,
        #[arg(long)]
        drift_at: Option<usize>,
        #[arg(long)]
        drift_end: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Per-phase timing of the pipeline.
    Bench {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Serialized state size while streaming.
    Audit {
        #[arg(short, long)]
        config: PathBuf,
        /// Steps to run, cycling the test stream if it is shorter.
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        every: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Sudden,
    Gradual,
    Incremental,
    Reoccurring,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Mixture,
    Fan,
}

fn print_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| seqdrift::Error::Config(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = load_dataset(&cfg)?;
            let d = fit_discriminator(&cfg, &ds)?;
            checkpoint::save(&d, &out)?;
            let th = d.thresholds();
            println!(
                "classes={} dim={} theta_error={} theta_drift={} -> {}",
                d.num_classes(),
                d.dim(),
                th.theta_error,
                th.theta_drift,
                out.display()
            );
        }
        Command::Run { config, report, trace } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            if let Some(path) = trace {
                write_trace_csv(&out.trace, &path)?;
            }
            print_json(&out.report, report.as_deref())?;
        }
        Command::Synth { kind, profile, drift_at, drift_end, n_test, seed, out } => {
            let mut stream = match profile {
                ProfileArg::Mixture => SynthConfig::default(),
                ProfileArg::Fan => SynthConfig::fan(),
            };
            if let Some(n) = n_test {
                stream.n_test = n;
            }
            let at = drift_at.unwrap_or(stream.n_test / 2);
            let schedule = DriftSchedule {
                kind: match kind {
                    KindArg::Sudden => DriftKind::Sudden,
                    KindArg::Gradual => DriftKind::Gradual,
                    KindArg::Incremental => DriftKind::Incremental,
                    KindArg::Reoccurring => DriftKind::Reoccurring,
                },
                drift_at: at,
                drift_end: match kind {
                    KindArg::Sudden => drift_end,
                    _ => Some(drift_end.unwrap_or(at + 50)),
                },
            };
            let ds = gen_drift_stream(&schedule, &stream, seed)?;
            write_csv(&ds, &out)?;
            let profile = if stream.profile == Profile::Fan { "fan" } else { "mixture" };
            println!(
                "{profile}: {} train + {} test rows, drift at {:?} -> {}",
                ds.train.len(),
                ds.test.len(),
                ds.meta.drift_points,
                out.display()
            );
        }
        Command::Bench { config, samples } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = load_dataset(&cfg)?;
            let d = fit_discriminator(&cfg, &ds)?;
            let stream: Vec<Vec<f64>> = ds.test.iter().map(|s| s.x.clone()).collect();
            let t = time_phases(&d, &stream, cfg.reconstruction, samples)?;
            println!("phase,mean_us");
            for (name, us) in t.entries() {
                println!("{name},{us:.3}");
            }
        }
        Command::Audit { config, steps, every } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ds = load_dataset(&cfg)?;
            if ds.test.is_empty() {
                return Err(seqdrift::Error::Empty("test stream"));
            }
            let d = fit_discriminator(&cfg, &ds)?;
            let mut m = DriftMonitor::new(d, cfg.detector, cfg.reconstruction, cfg.training.k_err)?;
            println!("step,detector,discriminator,reconstruction,total");
            let every = every.max(1);
            for i in 0..steps {
                m.step(&ds.test[i % ds.test.len()].x)?;
                if (i + 1) % every == 0 || i + 1 == steps {
                    let a = audit_state_size(m.state(), m.discriminator(), m.reconstruction());
                    println!("{},{},{},{},{}", i + 1, a.detector, a.discriminator, a.reconstruction, a.total());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
