mod error;
mod figures;
mod job;
mod params;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aloha_sic::SimOptions;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use error::{CliError, CliResult};
use figures::{Figure, Sidecar};
use job::{expand_receivers, Job, Runner, SimSpec};
use params::{Snr, Sweep, Values};
use table::Table;

/// Default directory for `figure` output when `--out-dir` is not given.
const OUT_DIR_ENV: &str = "ALOHA_LAB_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "aloha-lab",
    version,
    about = "Slotted Aloha with SIC receivers: closed forms, optimisation and simulation"
)]
struct Cli {
    /// Simulation worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Network {
    /// Number of nodes.
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct Receivers {
    /// Receiver names, comma separated, or `all`.
    #[arg(long = "receiver", value_delimiter = ',', default_value = "all")]
    receivers: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Write here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Defaults to the output file's extension, else the command's natural format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Mu {
    /// SINR threshold (linear).
    #[arg(long)]
    mu: Option<f64>,
    /// start:stop:points:lin|log
    #[arg(long)]
    mu_sweep: Option<Sweep>,
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct Q0 {
    /// Transmission probability of fresh packets.
    #[arg(long)]
    q0: Option<f64>,
    /// start:stop:points:lin|log
    #[arg(long)]
    q0_sweep: Option<Sweep>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Rho {
    /// Mean received SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    rho_db: Option<Snr>,
    /// start:stop:points:lin|log, in dB.
    #[arg(long, allow_hyphen_values = true)]
    rho_db_sweep: Option<Sweep>,
}

impl Rho {
    fn values(&self) -> Values {
        match (self.rho_db, self.rho_db_sweep) {
            (Some(snr), _) => Values::Fixed(snr.db()),
            (None, Some(s)) => Values::Sweep(s),
            (None, None) => unreachable!("clap enforces the group"),
        }
    }

    fn single(&self) -> CliResult<Snr> {
        self.rho_db
            .ok_or_else(|| CliError::usage("this form needs a single --rho-db"))
    }
}

#[derive(Args)]
struct Overlay {
    /// Add Monte Carlo columns using this many slots per point.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl Overlay {
    fn spec(&self) -> Option<SimSpec> {
        self.slots.map(|slots| SimSpec { slots, seed: self.seed })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Conditional success probabilities r_i: against mu for a sweep, against i for a single mu.
    Ri {
        #[command(flatten)]
        net: Network,
        /// Mean received SNR in dB.
        #[arg(long, allow_negative_numbers = true)]
        rho_db: Snr,
        #[command(flatten)]
        receivers: Receivers,
        #[command(flatten)]
        mu: Mu,
        /// Concurrent transmissions for a mu sweep; defaults to n - 1.
        #[arg(long)]
        i: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Steady-state success probability and throughput. Without --q0 the
    /// throughput-maximising q0 is used.
    Throughput {
        #[command(flatten)]
        net: Network,
        /// Mean received SNR in dB.
        #[arg(long, allow_negative_numbers = true)]
        rho_db: Snr,
        #[command(flatten)]
        receivers: Receivers,
        #[command(flatten)]
        mu: Mu,
        #[command(flatten)]
        q0: Q0,
        #[command(flatten)]
        overlay: Overlay,
        #[command(flatten)]
        out: Output,
    },
    /// Sum rate: against mu with --mu-sweep, otherwise its maximum against SNR.
    Sumrate {
        #[command(flatten)]
        net: Network,
        #[command(flatten)]
        rho: Rho,
        #[command(flatten)]
        receivers: Receivers,
        #[arg(long)]
        mu_sweep: Option<Sweep>,
        #[command(flatten)]
        overlay: Overlay,
        #[command(flatten)]
        out: Output,
    },
    /// Optimal threshold, transmission probability, throughput and sum rate.
    OperatingPoint {
        #[command(flatten)]
        net: Network,
        /// Mean received SNR in dB.
        #[arg(long, allow_negative_numbers = true)]
        rho_db: Snr,
        #[command(flatten)]
        receivers: Receivers,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo simulation of the saturated network.
    Simulate {
        #[command(flatten)]
        net: Network,
        /// Mean received SNR in dB.
        #[arg(long, allow_negative_numbers = true)]
        rho_db: Snr,
        #[command(flatten)]
        receivers: Receivers,
        #[command(flatten)]
        mu: Mu,
        #[command(flatten)]
        q0: Q0,
        /// Slots per point.
        #[arg(long)]
        slots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Estimate r_0..r_{n-1} by brute force instead, with --slots samples
        /// per concurrency level. Works where the closed forms refuse.
        #[arg(long)]
        estimate_ri: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Reproduce a figure as CSV plus a JSON sidecar.
    Figure {
        /// Figure id such as fig2 or fig9b; a bare multi-panel id runs every panel.
        #[arg(required_unless_present_any = ["config", "list"])]
        id: Option<String>,
        /// Run this TOML figure config instead of a built-in one.
        #[arg(long, conflicts_with = "id")]
        config: Option<PathBuf>,
        /// Print the built-in figure ids.
        #[arg(long)]
        list: bool,
        /// Override the simulation slots of the config.
        #[arg(long)]
        slots: Option<u64>,
        /// Override the simulation seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to $ALOHA_LAB_OUT_DIR, then the current directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Ergodic sum capacity of the multiple-access channel.
    Capacity {
        #[command(flatten)]
        net: Network,
        #[command(flatten)]
        rho: Rho,
        #[command(flatten)]
        out: Output,
    },
    /// Maximum sum rate of each receiver next to the ergodic capacity, with
    /// secant slopes against log2 of the SNR.
    Compare {
        #[command(flatten)]
        net: Network,
        #[command(flatten)]
        rho: Rho,
        #[command(flatten)]
        receivers: Receivers,
        #[command(flatten)]
        out: Output,
    },
    /// Re-run a figure sidecar and write its CSV.
    Replay {
        /// JSON sidecar written by `figure`.
        sidecar: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() && !e.to_string().contains("Usage:") => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            if code == 2 {
                Cli::command().error(ErrorKind::ValueValidation, e.to_string()).exit();
            }
            eprintln!("error: {e}");
            if code == 3 {
                eprintln!("hint: `aloha-lab simulate --estimate-ri` estimates r_i by simulation instead");
            }
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let runner = Runner::new(SimOptions {
        workers: cli.workers,
        ..SimOptions::default()
    });
    let analytic = |r: &Receivers| expand_receivers(&r.receivers, &runner.registry, true);
    let simulated = |r: &Receivers| expand_receivers(&r.receivers, &runner.registry, false);
    match cli.command {
        Command::Ri {
            net,
            rho_db,
            receivers,
            mu,
            i,
            out,
        } => {
            let receivers = analytic(&receivers)?;
            let job = match (mu.mu, mu.mu_sweep) {
                (_, Some(sweep)) => Job::SuccessVsMu {
                    n: net.n,
                    rho_db,
                    receivers,
                    i,
                    mu: sweep,
                },
                (Some(mu), None) => {
                    if i.is_some() {
                        return Err(CliError::usage("--i only applies to --mu-sweep"));
                    }
                    Job::SuccessVsI {
                        n: net.n,
                        rho_db,
                        receivers,
                        mu,
                        simulation_only: false,
                        simulate: None,
                    }
                }
                (None, None) => unreachable!("clap enforces the group"),
            };
            emit(&runner.run(&job)?, &out, Format::Csv)
        }
        Command::Throughput {
            net,
            rho_db,
            receivers,
            mu,
            q0,
            overlay,
            out,
        } => {
            let receivers = if overlay.slots.is_some() {
                simulated(&receivers)?
            } else {
                analytic(&receivers)?
            };
            let simulate = overlay.spec();
            let n = net.n;
            let job = match (mu.mu, mu.mu_sweep, q0.q0, q0.q0_sweep) {
                (Some(mu), None, q, sweep) if q.is_some() || sweep.is_some() => {
                    let q0 = sweep.unwrap_or_else(|| point(q.unwrap_or_default()));
                    Job::ThroughputVsQ0 {
                        n,
                        rho_db,
                        receivers,
                        mu,
                        q0,
                        simulate,
                    }
                }
                (Some(mu), None, None, None) => Job::ThroughputVsMu {
                    n,
                    rho_db,
                    receivers,
                    q0: None,
                    mu: point(mu),
                    simulate,
                },
                (None, Some(sweep), q0, None) => Job::ThroughputVsMu {
                    n,
                    rho_db,
                    receivers,
                    q0,
                    mu: sweep,
                    simulate,
                },
                (None, Some(_), _, Some(_)) => {
                    return Err(CliError::usage("sweep either --mu-sweep or --q0-sweep, not both"))
                }
                _ => unreachable!("clap enforces the group"),
            };
            emit(&runner.run(&job)?, &out, Format::Csv)
        }
        Command::Sumrate {
            net,
            rho,
            receivers,
            mu_sweep,
            overlay,
            out,
        } => {
            let job = match mu_sweep {
                Some(mu) => {
                    let receivers = if overlay.slots.is_some() {
                        simulated(&receivers)?
                    } else {
                        analytic(&receivers)?
                    };
                    Job::SumRateVsMu {
                        n: net.n,
                        rho_db: rho.single()?,
                        receivers,
                        mu,
                        simulate: overlay.spec(),
                    }
                }
                None => {
                    if overlay.slots.is_some() {
                        return Err(CliError::usage("--slots needs --mu-sweep"));
                    }
                    Job::OptimumVsRho {
                        n: net.n,
                        rho_db: rho.values(),
                        receivers: analytic(&receivers)?,
                        detail: true,
                        capacity: false,
                        slopes: false,
                    }
                }
            };
            emit(&runner.run(&job)?, &out, Format::Csv)
        }
        Command::OperatingPoint {
            net,
            rho_db,
            receivers,
            out,
        } => {
            let job = Job::OperatingPoint {
                n: net.n,
                rho_db,
                receivers: analytic(&receivers)?,
            };
            emit(&runner.run(&job)?, &out, Format::Json)
        }
        Command::Simulate {
            net,
            rho_db,
            receivers,
            mu,
            q0,
            slots,
            seed,
            estimate_ri,
            out,
        } => {
            let receivers = simulated(&receivers)?;
            let job = if estimate_ri {
                let Some(mu) = mu.mu else {
                    return Err(CliError::usage("--estimate-ri takes a single --mu"));
                };
                if q0.q0.is_some() || q0.q0_sweep.is_some() {
                    return Err(CliError::usage("--estimate-ri does not use q0"));
                }
                Job::SuccessVsI {
                    n: net.n,
                    rho_db,
                    receivers,
                    mu,
                    simulation_only: true,
                    simulate: Some(SimSpec { slots, seed }),
                }
            } else {
                let mu = match (mu.mu, mu.mu_sweep) {
                    (Some(x), _) => Values::Fixed(x),
                    (None, Some(s)) => Values::Sweep(s),
                    (None, None) => unreachable!("clap enforces the group"),
                };
                let q0 = match (q0.q0, q0.q0_sweep) {
                    (Some(x), _) => Values::Fixed(x),
                    (None, Some(s)) => Values::Sweep(s),
                    (None, None) => return Err(CliError::usage("simulate needs --q0 or --q0-sweep")),
                };
                Job::Simulate {
                    n: net.n,
                    rho_db,
                    receivers,
                    mu,
                    q0,
                    slots,
                    seed,
                }
            };
            emit(&runner.run(&job)?, &out, Format::Csv)
        }
        Command::Figure {
            id,
            config,
            list,
            slots,
            seed,
            out_dir,
        } => {
            if list {
                for id in figures::ids() {
                    println!("{id}");
                }
                return Ok(());
            }
            let figs = match (config, id) {
                (Some(path), _) => vec![figures::from_path(&path)?],
                (None, Some(id)) => figures::builtin(&id)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let dir = out_dir
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            for mut fig in figs {
                override_simulation(&mut fig, slots, seed)?;
                write_figure(&runner, &fig, &dir)?;
            }
            Ok(())
        }
        Command::Capacity { net, rho, out } => emit(
            &runner.run(&Job::Capacity {
                n: net.n,
                rho_db: rho.values(),
            })?,
            &out,
            Format::Csv,
        ),
        Command::Compare {
            net,
            rho,
            receivers,
            out,
        } => {
            let receivers = analytic(&receivers)?;
            if let (Some(rho_db), [_]) = (rho.rho_db, receivers.as_slice()) {
                let job = Job::OperatingPoint {
                    n: net.n,
                    rho_db,
                    receivers,
                };
                return emit(&runner.run(&job)?, &out, Format::Json);
            }
            let job = Job::OptimumVsRho {
                n: net.n,
                rho_db: rho.values(),
                receivers,
                detail: false,
                capacity: true,
                slopes: true,
            };
            emit(&runner.run(&job)?, &out, Format::Csv)
        }
        Command::Replay { sidecar, out } => {
            let side: Sidecar = serde_json::from_reader(io::BufReader::new(File::open(&sidecar)?))?;
            if side.version != aloha_sic::VERSION {
                eprintln!(
                    "warning: {} was written by version {}, this is {}; output may differ",
                    sidecar.display(),
                    side.version,
                    aloha_sic::VERSION
                );
            }
            emit(&runner.run(&side.job)?, &out, Format::Csv)
        }
    }
}

fn point(x: f64) -> Sweep {
    Sweep {
        start: x,
        stop: x,
        points: 1,
        spacing: params::Spacing::Lin,
    }
}

fn override_simulation(fig: &mut Figure, slots: Option<u64>, seed: Option<u64>) -> CliResult<()> {
    if slots.is_none() && seed.is_none() {
        return Ok(());
    }
    let Some(Some(sim)) = fig.job.simulation_mut() else {
        return Err(CliError::usage(format!("{} has no simulation to override", fig.id)));
    };
    if let Some(slots) = slots {
        sim.slots = slots;
    }
    if let Some(seed) = seed {
        sim.seed = seed;
    }
    Ok(())
}

fn write_figure(runner: &Runner, fig: &Figure, dir: &Path) -> CliResult<()> {
    let table = runner.run(&fig.job)?;
    let csv_name = format!("{}.csv", fig.id);
    let csv_path = dir.join(&csv_name);
    table.write_csv(BufWriter::new(File::create(&csv_path)?))?;
    let side_path = dir.join(format!("{}.json", fig.id));
    let mut w = BufWriter::new(File::create(&side_path)?);
    serde_json::to_writer_pretty(&mut w, &Sidecar::new(fig, csv_name))?;
    writeln!(w)?;
    w.flush()?;
    eprintln!(
        "{}: {} rows -> {}, {}",
        fig.id,
        table.rows.len(),
        csv_path.display(),
        side_path.display()
    );
    Ok(())
}

fn emit(table: &Table, out: &Output, natural: Format) -> CliResult<()> {
    let format = out
        .format
        .unwrap_or_else(|| match out.output.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "json" => Format::Json,
            Some(ext) if ext == "csv" => Format::Csv,
            _ => natural,
        });
    let sink: Box<dyn Write> = match &out.output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(path)?))
        }
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Csv => table.write_csv(sink),
        Format::Json => table.write_json(sink),
    }
}
