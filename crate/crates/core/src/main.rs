use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ehmac::energy::{
    collision_waste, idle_beacon_waste, optimal_factor, optimal_factor_exact, total_waste_poisson, EnergyParams, Poisson,
};
use ehmac::experiment::{
    aggregate, fig2_csv, run_all, run_report, runs_csv, summary_csv, sweep, ExperimentConfig, ExperimentError,
    SweepGrid, SweepRow,
};
use ehmac::protocol::MacVariant;
use ehmac::scenario::Field;

#[derive(Parser)]
#[command(name = "ehmac", version, about = "Receiver-initiated MAC simulator and beacon-rate optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of one configuration and write the summary CSV.
    Simulate {
        #[arg(long)]
        variant: MacVariant,
        /// Expected node count on the field.
        #[arg(long)]
        nodes: f64,
        /// Packets per second per node.
        #[arg(long)]
        rate: f64,
        /// Seconds.
        #[arg(long, default_value_t = 1000.0)]
        duration: f64,
        #[arg(long, default_value_t = 100)]
        reps: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Field as WIDTHxHEIGHT in metres.
        #[arg(long, default_value = "100x100", value_parser = parse_field)]
        field: Field,
        #[arg(long, default_value_t = 35.0)]
        range: f64,
        /// Event trace of replication 0.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Per-replication CSV.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
    /// Run a grid of configurations read from a key-value file.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        runs: Option<PathBuf>,
    },
    /// Closed-form factor versus the numerical optimum.
    Optimize {
        /// Expected arrivals per mean cycle.
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        eb: f64,
        #[arg(long, default_value_t = 4.0)]
        ew: f64,
        #[arg(long, default_value_t = 4.0)]
        etx: f64,
        #[arg(long, default_value_t = 11.0)]
        f_max: f64,
    },
    /// Waste surface over (lambda, f).
    Fig2 {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        eb: f64,
        #[arg(long, default_value_t = 4.0)]
        ew: f64,
        #[arg(long, default_value_t = 4.0)]
        etx: f64,
    },
}

fn parse_field(s: &str) -> Result<Field, String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    Ok(Field { width: num(w)?, height: num(h)? })
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), ExperimentError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn energy(eb: f64, ew: f64, etx: f64) -> Result<EnergyParams, ExperimentError> {
    EnergyParams::new(eb, ew, etx).map_err(|e| ExperimentError::Config(e.to_string()))
}

fn run(cmd: Command) -> Result<(), ExperimentError> {
    match cmd {
        Command::Simulate { variant, nodes, rate, duration, reps, seed, out, field, range, trace, runs } => {
            let mut cfg =
                ExperimentConfig { mean_nodes: nodes, rate, duration, replications: reps, master_seed: seed, field, range, ..Default::default() };
            cfg.mac.variant = variant;
            cfg.validate()?;
            if let Some(path) = trace {
                let file = fs::File::create(&path).map_err(|e| ExperimentError::io(&path, e))?;
                let mut w = BufWriter::new(file);
                run_report(&cfg, 0, Some(&mut w)).map_err(|e| match e {
                    ExperimentError::Io { source, .. } => ExperimentError::io(&path, source),
                    other => other,
                })?;
            }
            let results = run_all(&cfg)?;
            let row = SweepRow {
                variant,
                nodes,
                rate,
                aggregate: aggregate(&results).expect("replications >= 1"),
                runs: results,
            };
            let rows = [row];
            write(&out, &summary_csv(&rows))?;
            if let Some(p) = runs {
                write(&p, &runs_csv(&rows))?;
            }
        }
        Command::Sweep { grid, out, runs } => {
            let text = fs::read_to_string(&grid).map_err(|e| ExperimentError::io(&grid, e))?;
            let grid = SweepGrid::parse(&text)?;
            let rows = sweep(&grid, &ExperimentConfig::default())?;
            emit(out.as_deref(), &summary_csv(&rows))?;
            if let Some(p) = runs {
                write(&p, &runs_csv(&rows))?;
            }
        }
        Command::Optimize { lambda, eb, ew, etx, f_max } => {
            let ep = energy(eb, ew, etx)?;
            if !(lambda >= 0.0 && lambda.is_finite()) || !(f_max >= 1.0) {
                return Err(ExperimentError::Config("lambda must be >= 0 and f-max >= 1".into()));
            }
            let cfg_err = |e: ehmac::energy::EnergyError| ExperimentError::Config(e.to_string());
            let f_star = optimal_factor(lambda, &ep, f_max).value();
            let exact = optimal_factor_exact(lambda, &ep, f_max).map_err(cfg_err)?.value();
            let w_star = total_waste_poisson(f_star, lambda, &ep).map_err(cfg_err)?;
            let w_exact = total_waste_poisson(exact, lambda, &ep).map_err(cfg_err)?;
            // Charging a collision once per event instead of once per sender.
            let per_event = collision_waste(f_star, lambda, &ep, &Poisson).map_err(cfg_err)?
                + idle_beacon_waste(f_star, lambda, &ep, &Poisson).map_err(cfg_err)?;
            println!("f_star\t{f_star}");
            println!("exact_argmin\t{exact}");
            println!("waste_f_star\t{w_star}");
            println!("waste_exact\t{w_exact}");
            println!("regret\t{}", if w_exact > 0.0 { w_star / w_exact } else { 1.0 });
            println!("per_event_waste_f_star\t{per_event}");
        }
        Command::Fig2 { out, eb, ew, etx } => {
            let ep = energy(eb, ew, etx)?;
            emit(out.as_deref(), &fig2_csv(&ep, ehmac::schedule::ScheduleParams::default().max_factor())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ExperimentError::Config(_) | ExperimentError::Scenario(_) => ExitCode::from(2),
                ExperimentError::Io { .. } => ExitCode::FAILURE,
            }
        }
    }
}
