use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adhoc_kitchen::export::{export_network, NetFormat};
use adhoc_kitchen::harness::{self, HarnessError, RunRecord, SweepSpec};
use adhoc_kitchen::plot::{render_bar_svg, summary_bars};
use adhoc_kitchen::{events::EventLog, metrics::build_network};

#[derive(Parser)]
#[command(name = "adhoc-kitchen", version, about = "Ad-hoc teamwork kitchen simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Event log destination (JSONL).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Summary CSV destination; printed to stdout when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Replicated factorial sweep; writes `summary.csv` into the output directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axes: PathBuf,
        #[arg(long, default_value_t = 30)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        /// Run replications one at a time.
        #[arg(long)]
        serial: bool,
    },
    /// Collaboration network of a logged run.
    ExportNet {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "graphml")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grouped bar chart of a summary CSV.
    Plot {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        group: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::Layout(_) => Failure::Config(e.to_string()),
            HarnessError::Io(_) | HarnessError::Csv(_) => Failure::Io(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            seed,
            log,
            summary,
        } => {
            let mut cfg = harness::load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = harness::run_single(&cfg)?;
            if let Some(p) = log {
                write(&p, out.log.to_jsonl().as_bytes())?;
            }
            let csv = harness::csv_string(&[RunRecord {
                config: cfg,
                stats: out.stats,
                wall_time: Default::default(),
            }]);
            match summary {
                Some(p) => write(&p, csv.as_bytes())?,
                None => print!("{csv}"),
            }
        }
        Command::Sweep {
            config,
            axes,
            seeds,
            out,
            serial,
        } => {
            let base = harness::load_config(&config)?;
            let axes = harness::parse_axes(&read(&axes)?).map_err(|e| Failure::Config(e.to_string()))?;
            let spec = SweepSpec {
                base,
                axes,
                n_seeds: seeds,
            };
            let rows = harness::run_sweep(&spec, !serial)?;
            fs::create_dir_all(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            let path = out.join("summary.csv");
            write(&path, harness::csv_string(&rows).as_bytes())?;
            eprintln!("{} runs -> {}", rows.len(), path.display());
        }
        Command::ExportNet { log, format, out } => {
            let format: NetFormat = format.parse().map_err(|e: adhoc_kitchen::export::UnsupportedFormat| {
                Failure::Config(e.to_string())
            })?;
            let events = EventLog::from_jsonl(&read(&log)?)
                .map_err(|e| Failure::Io(format!("{}: {e}", log.display())))?;
            write(&out, export_network(&build_network(&events), format).as_bytes())?;
        }
        Command::Plot {
            summary,
            x,
            group,
            y,
            out,
        } => {
            let groups = summary_bars(&read(&summary)?, &x, &group, &y)
                .map_err(|e| Failure::Config(e.to_string()))?;
            let title = format!("{y} by {x}");
            let svg = render_bar_svg(&groups, &title, &x, &y).map_err(|e| Failure::Config(e.to_string()))?;
            write(&out, svg.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
