use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mapevo_core::diff::{diff, DiffResult};
use mapevo_core::eval::{
    backtest_transitions, emit_report, BacktestConfig, ReportFormat, SeriesInput,
};
use mapevo_core::evolution::{impact_matrix, mapping_change_ratio, mapping_diff, MappingDiff};
use mapevo_core::mapping::Mapping;
use mapevo_core::matcher::{
    match_ontologies, MatcherConfig, Strategy, DEFAULT_MAX_DELTA, DEFAULT_THRESHOLD,
};
use mapevo_core::obo::{load_ontology, parse_ontology_with_warnings};
use mapevo_core::pipeline::{run_pipeline, PipelineConfig};
use mapevo_core::prediction::{EvolutionHistory, Method};
use mapevo_core::{Error, ErrorClass, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Ontology and mapping evolution analysis.
#[derive(Debug, Parser)]
#[command(name = "mapevo", version)]
struct Cli {
    /// Worker threads for matching and backtesting (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// More log output on standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an OBO file and report its size; optionally write canonical JSON.
    Parse {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Diff two versions of one ontology.
    Diff {
        old: PathBuf,
        new: PathBuf,
        /// Where to write the diff JSON.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Match two ontology versions and write the mapping TSV plus sidecar.
    Match {
        left: PathBuf,
        right: PathBuf,
        #[command(flatten)]
        matcher: MatcherArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Diff two mappings produced with the same matcher configuration.
    Mapdiff {
        old: PathBuf,
        new: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Impact matrix from two ontology diffs and a mapping diff.
    Impact {
        /// Diff JSON of the left ontology.
        left_diff: PathBuf,
        /// Diff JSON of the right ontology.
        right_diff: PathBuf,
        /// Mapping diff TSV.
        mapdiff: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Predict the next mapping change from an evolution history JSON.
    Predict {
        history: PathBuf,
        /// ME-avg, ME-w2 or IE-w2 (IE-avg also accepted).
        #[arg(long, default_value = "IE-w2")]
        method: String,
    },
    /// Back-test the prediction methods on a series JSON written by `pipeline`.
    Backtest {
        series: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = ["ME-avg".to_string(), "ME-w2".to_string(), "IE-w2".to_string()])]
        methods: Vec<String>,
        /// Window sizes in versions.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5])]
        h: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        targets: usize,
        #[arg(long, default_value = "tsv")]
        format: String,
        /// Output directory; reports go to standard output when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run every stage over the series described by a TOML config.
    Pipeline {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct MatcherArgs {
    /// name, namesyn or context.
    #[arg(long, default_value = "name")]
    strategy: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DELTA)]
    max_delta: f64,
}

impl MatcherArgs {
    fn config(&self) -> Result<MatcherConfig> {
        let strategy: Strategy = self.strategy.parse()?;
        let config = MatcherConfig::new(strategy, self.threshold).with_max_delta(self.max_delta);
        config.validate()?;
        Ok(config)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, content).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Stage {
        stage: "read",
        input: path.display().to_string(),
        source: Box::new(e.into()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse { input, out } => {
            let text = read(&input)?;
            let (onto, warnings) =
                parse_ontology_with_warnings(&text).map_err(|e| Error::Stage {
                    stage: "parse",
                    input: input.display().to_string(),
                    source: Box::new(e),
                })?;
            println!(
                "{}: {} concepts, {} relationships, {} skipped entries",
                if onto.ontology_id().is_empty() {
                    "(unnamed)"
                } else {
                    onto.ontology_id()
                },
                onto.len(),
                onto.relationships().len(),
                warnings.total()
            );
            if let Some(out) = out {
                write(&out, &onto.to_canonical_json())?;
            }
        }
        Command::Diff { old, new, out } => {
            let o = load_ontology(&old)?;
            let n = load_ontology(&new)?.with_version(o.version() + 1);
            let d = diff(&o, &n)?;
            if let Some(out) = out {
                write(&out, &d.to_json())?;
            }
            println!("{}", d.summary_line());
        }
        Command::Match {
            left,
            right,
            matcher,
            out,
        } => {
            let config = matcher.config()?;
            let l = load_ontology(&left)?;
            let r = load_ontology(&right)?;
            let started = Instant::now();
            let m = match_ontologies(&l, &r, &config)?;
            let secs = started.elapsed().as_secs_f64();
            log::info!(
                "match {}: {:.3}s ({:.0} concepts/s)",
                config.label(),
                secs,
                (l.len() + r.len()) as f64 / secs.max(1e-9)
            );
            m.write(&out).map_err(|e| Error::Stage {
                stage: "write",
                input: out.display().to_string(),
                source: Box::new(e),
            })?;
            println!("{}", m.len());
        }
        Command::Mapdiff { old, new, out } => {
            let md = mapping_diff(&Mapping::read(&old)?, &Mapping::read(&new)?)?;
            if let Some(out) = out {
                write(&out, &md.to_tsv())?;
            }
            println!(
                "Add={} Del={} MCR={:.4}",
                md.add.len(),
                md.del.len(),
                mapping_change_ratio(&md)
            );
        }
        Command::Impact {
            left_diff,
            right_diff,
            mapdiff,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let d1: DiffResult = read_json(&left_diff)?;
            let d2: DiffResult = read_json(&right_diff)?;
            let md = MappingDiff::from_tsv(&read(&mapdiff)?)?;
            let matrix = impact_matrix(&d1, &d2, &md);
            let text = match format {
                ReportFormat::Json => matrix.to_json() + "\n",
                ReportFormat::Tsv => matrix.to_tsv(),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Predict { history, method } => {
            let method: Method = method.parse()?;
            let history: EvolutionHistory = read_json(&history)?;
            let p = method.predict(&history)?;
            for w in &p.warnings {
                log::warn!("{w}");
            }
            println!("{}", p.to_json());
        }
        Command::Backtest {
            series,
            methods,
            h,
            targets,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let config = BacktestConfig {
                methods: methods.iter().map(|m| m.parse()).collect::<Result<_>>()?,
                h_range: h,
                targets,
            };
            let series: Vec<SeriesInput> = read_json(&series)?;
            let report = backtest_transitions(&series, &config)?;
            for artifact in emit_report(&report, format) {
                match &out {
                    Some(dir) => write(&dir.join(&artifact.name), &artifact.content)?,
                    None => print!("{}", artifact.content),
                }
            }
        }
        Command::Pipeline { config, output_dir } => {
            let mut config = PipelineConfig::load(&config)?;
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            let started = Instant::now();
            let outcome = run_pipeline(&config)?;
            log::info!("pipeline: {:.3}s", started.elapsed().as_secs_f64());
            println!(
                "{} artifacts, manifest {} (sha256 {})",
                outcome.manifest.artifacts.len(),
                outcome.manifest_path.display(),
                outcome.manifest.digest()
            );
        }
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("--jobs {n}: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_jobs: Option<usize>) -> Result<()> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .target(env_logger::Target::Stderr)
        .init();

    if cli.jobs == Some(0) {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = configure_threads(cli.jobs).and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Internal => EXIT_INTERNAL,
            })
        }
    }
}
