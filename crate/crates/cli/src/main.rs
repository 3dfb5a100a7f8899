use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use cbabm::error::Error;
use cbabm::ingest;
use cbabm::sim::{run_with_city, CityData, RunOptions};
use cbabm::synth::{write_synthetic_city, SynthSpec};
use cbabm::workflow::{port_city, run_calibration};
use cbabm::ScenarioConfig;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cbabm", version, about = "City-based agent-based epidemic simulation")]
struct Cli {
    /// Log more (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write daily_counts.csv and manifest.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides rng_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write snapshot_<day>.geojson for every day.
        #[arg(long)]
        snapshots: bool,
        /// Worker threads; results are identical for any value.
        #[arg(long)]
        workers: Option<usize>,
        /// Check movement, occupancy, and transition rules every iteration
        /// and fail if any is broken.
        #[arg(long)]
        audit: bool,
    },
    /// Fit tunable parameters to observed daily cumulative infections.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// CSV with header `day,infections`.
        #[arg(long)]
        observed: PathBuf,
        #[arg(long)]
        batches: Option<usize>,
        #[arg(long, default_value = "calibration")]
        out: PathBuf,
    },
    /// Derive parameters from a data file.
    Ingest {
        kind: IngestKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Band dimension of a rates file.
        #[arg(long, default_value = "age")]
        dimension: String,
        /// Threshold for busy periods, as a fraction of the busiest slot.
        #[arg(long, default_value_t = 0.5)]
        peak_fraction: f64,
    },
    /// Build a scenario config for a new city and check it with a one-day run.
    Port {
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long)]
        pois: PathBuf,
        /// Directory with patterns.csv, rates_<dim>.csv, and optional
        /// distancing.csv and census.csv.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Config to start from instead of the defaults.
        #[arg(long)]
        base: Option<PathBuf>,
    },
    /// Write a synthetic demo city and a scenario config that uses it.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IngestKind {
    Patterns,
    Rates,
    Distancing,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, body).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            snapshots,
            workers,
            audit,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            let city = CityData::load(&cfg)?;
            let started = Instant::now();
            let opts = RunOptions {
                workers,
                snapshots,
                audit,
            };
            let output = run_with_city(&cfg, &city, &opts)?;
            if let Some(report) = &output.audit {
                if report.total_violations() > 0 {
                    return Err(Error::Internal(format!(
                        "audit found {} rule violations, e.g. {}",
                        report.total_violations(),
                        report.examples.join("; ")
                    )));
                }
                log::info!("audit clean: max displacement {:.1} m", report.max_displacement);
            }
            output.write(&out)?;
            let last = output.daily_counts.last().expect("days >= 1");
            println!(
                "{} days in {:.1}s; final S={} E={} I={} H={} R={} D={}; wrote {}",
                output.daily_counts.len(),
                started.elapsed().as_secs_f64(),
                last.s,
                last.e,
                last.i,
                last.h,
                last.r,
                last.d,
                out.display()
            );
        }
        Command::Calibrate {
            config,
            observed,
            batches,
            out,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let series = ingest::load_observed(&observed)?;
            let city = CityData::load(&cfg)?;
            let outcome = run_calibration(&cfg, &city, &series, batches)?;
            let (best, trace) = outcome.write(&out)?;
            let t = &outcome.result.trace;
            println!(
                "fitness {} -> {} over {} batches ({} failed); wrote {} and {}",
                t[0],
                outcome.result.best_fitness,
                t.len() - 1,
                outcome.result.failed_batches,
                best.display(),
                trace.display()
            );
        }
        Command::Ingest {
            kind,
            input,
            out,
            dimension,
            peak_fraction,
        } => match kind {
            IngestKind::Patterns => {
                let patterns = ingest::load_patterns(&input)?;
                let table = ingest::patterns_to_table(&patterns, peak_fraction, 0.5).value;
                let mut buf = Vec::new();
                table.write(&mut buf)?;
                write(&out, buf)?;
                println!("{} categories from {} POIs", table.rows.len(), patterns.len());
            }
            IngestKind::Rates => {
                let table = ingest::parse_health_rates(&input, &dimension)?;
                let mut buf = Vec::new();
                table.value.write_csv(&mut buf)?;
                write(&out, buf)?;
                println!("{} {dimension} bands", table.value.rows.len());
            }
            IngestKind::Distancing => {
                let d = ingest::derive_social_distancing(&input)?;
                write(&out, format!("social_distancing={}\n", d.value))?;
                println!("social_distancing={}", d.value);
            }
        },
        Command::Port {
            boundary,
            pois,
            data,
            out,
            base,
        } => {
            let base = match base {
                Some(p) => ScenarioConfig::load(&p)?,
                None => ScenarioConfig::default(),
            };
            let report = port_city(&base, &boundary, &pois, &data, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "n_pois={} social_distancing={}; wrote {} and {}",
                report.config.n_pois,
                report.config.social_distancing,
                report.config_path.display(),
                report.poi_params_path.display()
            );
        }
        Command::Synth { out, seed } => {
            let spec = SynthSpec {
                seed,
                ..Default::default()
            };
            let paths = write_synthetic_city(&out, &spec)?;
            let mut cfg = ScenarioConfig::default();
            cfg.files.boundary = Some("boundary.geojson".into());
            cfg.files.pois = Some("pois.geojson".into());
            write(&out.join("scenario.txt"), cfg.to_config_string())?;
            println!(
                "wrote {} POIs, {}, and {}",
                spec.total_pois(),
                paths.data.display(),
                out.join("scenario.txt").display()
            );
        }
    }
    Ok(())
}
