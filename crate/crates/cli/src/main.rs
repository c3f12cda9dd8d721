//! `chorale`: generate, validate and analyse chorale performance corpora.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chorale_core::augment::Ensemble;
use chorale_core::pipeline::{run_generate, run_stats, run_validate, PipelineConfig};
use chorale_core::Error;
use clap::{Parser, Subcommand};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "chorale", version, about = "Synthetic four-part chorale performance corpora")]
struct Cli {
    /// Print the full default configuration as TOML and exit.
    #[arg(long)]
    print_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a corpus.
    Generate {
        /// TOML configuration; omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output root (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
        /// Tracks per ensemble.
        #[arg(long)]
        num_tracks: Option<usize>,
        /// Comma-separated subset of string, brass, woodwind, random.
        #[arg(long, value_delimiter = ',')]
        ensembles: Option<Vec<String>>,
        /// Replace tracks that already exist.
        #[arg(long)]
        overwrite: bool,
    },
    /// Validate every track of a corpus.
    Validate {
        root: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Print the full report as JSON on stdout.
        #[arg(long)]
        json: bool,
    },
    /// Intonation histograms and per-ensemble statistics.
    Stats {
        root: PathBuf,
        /// Histogram bin width in semitones.
        #[arg(long, default_value_t = 0.01)]
        bin_width: f64,
        /// Directory for `histograms.csv` and `summary.csv`; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.print_default_config {
        print!("{}", PipelineConfig::default().to_toml());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("no subcommand given; see `chorale --help`");
        return ExitCode::from(EXIT_CONFIG);
    };
    match command {
        Command::Generate { config, out, seed, workers, num_tracks, ensembles, overwrite } => {
            let cfg = match build_config(config.as_deref(), out, seed, workers, num_tracks, ensembles, overwrite) {
                Ok(c) => c,
                Err(e) => {
                    log::error!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            generate(&cfg)
        }
        Command::Validate { root, workers, json } => validate(&root, workers, json),
        Command::Stats { root, bin_width, out } => stats(&root, bin_width, out.as_deref()),
    }
}

fn build_config(
    path: Option<&Path>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    num_tracks: Option<usize>,
    ensembles: Option<Vec<String>>,
    overwrite: bool,
) -> Result<PipelineConfig, Error> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = out {
        cfg.output = out;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(workers) = workers {
        cfg.workers = workers;
    }
    if let Some(n) = num_tracks {
        cfg.num_tracks = n;
    }
    if let Some(names) = ensembles {
        cfg.ensembles = names
            .iter()
            .map(|n| Ensemble::parse(n.trim()).ok_or_else(|| Error::InvalidConfig(format!("unknown ensemble `{n}`"))))
            .collect::<Result<_, _>>()?;
    }
    cfg.overwrite |= overwrite;
    cfg.validate()?;
    Ok(cfg)
}

fn generate(cfg: &PipelineConfig) -> ExitCode {
    match run_generate(cfg) {
        Ok(summary) => {
            println!("wrote {} tracks to {}", summary.entries.len(), cfg.output.display());
            for (id, err) in &summary.failures {
                println!("failed {id}: {err}");
            }
            if summary.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                println!("{} track(s) failed", summary.failures.len());
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Err(e @ (Error::InvalidConfig(_) | Error::Toml(_))) => {
            log::error!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn validate(root: &Path, workers: usize, json: bool) -> ExitCode {
    let summary = match run_validate(root, workers) {
        Ok(s) => s,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("report serializes"));
    }
    let failing: Vec<_> = summary.failing().collect();
    for r in &failing {
        for v in &r.violations {
            eprintln!("{}: {v:?}", r.track_dir.display());
        }
    }
    let manifest = summary.manifest_tracks.map_or("missing".to_string(), |n| n.to_string());
    println!(
        "{} tracks checked, {} with violations, manifest rows: {manifest}",
        summary.reports.len(),
        failing.len()
    );
    if !summary.manifest_matches() {
        println!("manifest does not match the track directories");
    }
    if summary.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn stats(root: &Path, bin_width: f64, out: Option<&Path>) -> ExitCode {
    let stats = match run_stats(root, bin_width) {
        Ok(s) => s,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let written = match out {
        Some(dir) => fs::create_dir_all(dir)
            .map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
            .and_then(|_| {
                let open = |name: &str| {
                    let p = dir.join(name);
                    fs::File::create(&p).map_err(|e| Error::Io { path: p, source: e })
                };
                stats.write_histograms_csv(open("histograms.csv")?)?;
                stats.write_summary_csv(open("summary.csv")?)
            }),
        None => stats
            .write_histograms_csv(std::io::stdout())
            .and_then(|_| {
                println!();
                stats.write_summary_csv(std::io::stdout())
            }),
    };
    if let Err(e) = written {
        log::error!("{e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    eprintln!(
        "{} voiced frames, {} notes, mean note |deviation| {:.4} st",
        stats.voiced_frames, stats.notes, stats.mean_note_abs_deviation
    );
    for (path, err) in &stats.unreadable {
        eprintln!("unreadable {}: {err}", path.display());
    }
    if stats.unreadable.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}
