use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use consensus_lab::commands::{self, Globals};
use consensus_lab::demo::{run_demo, DemoName};
use consensus_lab::{CliError, CliResult, JobSpec};

/// Equilibria and stability of nonlinear consensus networks.
///
/// Jobs are JSON documents (a file path, `-` for stdin, or inline text)
/// holding `graph` ({"n", "edges"} with 1-based labels), `coupling`
/// (e.g. {"kind": "odd_polynomial", "coeffs": [1, -1]}) and optionally
/// `x0` or `states`.
#[derive(Debug, Parser)]
#[command(name = "consensus-lab", version)]
struct Cli {
    /// Relative tolerance for counting an eigenvalue as zero.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_zero: f64,
    /// Roots of coupling functions are searched in [-bound, bound].
    #[arg(long, global = true, default_value_t = 10.0)]
    root_bound: f64,
    /// Cap on the number of enumerated states.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_states: usize,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Graph statistics and block decomposition.
    Analyze {
        job: String,
        /// Also write a DOT rendering with blocks coloured.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Enumerate equilibria as CSV.
    Equilibria {
        job: String,
        /// Members sampled from each cycle-block family.
        #[arg(long, default_value_t = 0)]
        lambda_samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Classify equilibria; JSON verdicts with evidence chains.
    Classify {
        job: String,
        /// CSV written by `equilibria`; otherwise `states` from the job, or
        /// the enumerated equilibria.
        #[arg(long)]
        states: Option<PathBuf>,
        /// Skip per-block classification.
        #[arg(long)]
        no_blocks: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Integrate with RK4; trajectory CSV plus a JSON summary.
    Simulate {
        job: String,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Random x0 in [-1, 1]^n instead of the job's `x0`.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep every k-th step in the CSV.
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Summary path (default: stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Reproduce a worked example; exits 7 if any embedded check fails.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        /// Directory for artifacts (default: demo-out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn sink(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: &Option<PathBuf>, v: &impl serde::Serialize) -> CliResult<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let globals = Globals {
        tol_zero: cli.tol_zero,
        root_bound: cli.root_bound,
        max_states: cli.max_states,
    };
    match cli.command {
        Command::Analyze { job, dot, json } => {
            let g = JobSpec::load(&job)?.graph()?;
            let (report, dec) = commands::analyze(&g)?;
            if let Some(p) = dot {
                std::fs::write(p, g.to_dot(Some(&dec)))?;
            }
            if json {
                write_json(&None, &report)?;
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Equilibria {
            job,
            lambda_samples,
            output,
        } => {
            let s = JobSpec::load(&job)?.system()?;
            let eqs = commands::enumerate(&s, &globals, lambda_samples)?;
            log::info!("{} equilibria", eqs.len());
            commands::write_equilibria_csv(sink(&output)?, &eqs)?;
        }
        Command::Classify {
            job,
            states,
            no_blocks,
            output,
        } => {
            let spec = JobSpec::load(&job)?;
            let s = spec.system()?;
            let eqs = match (&states, &spec.states) {
                (Some(p), _) => commands::read_equilibria_csv(&s, File::open(p)?)?,
                (None, Some(xs)) => xs
                    .iter()
                    .map(|x| {
                        spec.check_state(x, s.node_count(), "state")?;
                        Ok(consensus_core::Equilibrium::from_state(
                            &s,
                            x,
                            consensus_core::Provenance::Refined,
                        ))
                    })
                    .collect::<CliResult<Vec<_>>>()?,
                (None, None) => commands::enumerate(&s, &globals, 0)?,
            };
            let report = commands::classify_states(&s, &eqs, &globals, !no_blocks)?;
            write_json(&output, &report)?;
        }
        Command::Simulate {
            job,
            t_end,
            dt,
            random,
            seed,
            every,
            output,
            summary,
        } => {
            let spec = JobSpec::load(&job)?;
            let s = spec.system()?;
            let x0 = if random {
                commands::random_state(s.node_count(), seed)
            } else {
                let x0 = spec
                    .x0
                    .clone()
                    .ok_or_else(|| CliError::Schema("missing 'x0' (or pass --random)".into()))?;
                spec.check_state(&x0, s.node_count(), "x0")?;
                x0
            };
            let (traj, sum) = commands::simulate(&s, &x0, t_end, dt, &globals)?;
            let mut w = sink(&output)?;
            traj.thinned(every.max(1)).write_csv(&mut w)?;
            w.flush()?;
            let text = serde_json::to_string_pretty(&sum)? + "\n";
            match &summary {
                Some(p) => std::fs::write(p, text)?,
                None => eprint!("{text}"),
            }
            if sum.blew_up {
                return Err(CliError::BlewUp(sum.t_end));
            }
        }
        Command::Demo { name, out, seed } => {
            let out = out.unwrap_or_else(|| Path::new("demo-out").join(name.to_string()));
            let report = run_demo(name, &out, seed)?;
            for c in &report.checks {
                println!("[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.actual);
            }
            println!(
                "{} passed in {:.2} s; artifacts in {}",
                report.demo,
                report.seconds,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
