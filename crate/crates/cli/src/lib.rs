//! `safetynet` subcommands. Exit codes: 0 success, 1 runtime or analysis
//! failure, 2 bad flags.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use safetynet_core::metrics::{self, MetricVisit};
use safetynet_core::{prompt, Category, Classifier, DocumentationState, EngineState, VisitRecord, WorkflowStage};
use safetynet_service::{journal, ServiceConfig};
use safetynet_sim::{generate, write_all, SimConfig};
use safetynet_stats::analysis::{self, AnalysisConfig};

#[derive(Debug, Parser)]
#[command(name = "safetynet", version, about = "Clinical safety-net engine, simulator and study analysis")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and write every artifact into a directory.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fold an event journal into engine state.
    Replay {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the study tables from a per-rating CSV.
    Analyze {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON analysis config (conf, fdr, annual_volume, omitted_clinic).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Clinic left out of the sum-to-zero coding.
        #[arg(long)]
        omitted_clinic: Option<String>,
    },
    /// Weekly deployment metrics as CSV.
    Metrics {
        /// Engine event journal (JSON Lines).
        #[arg(long, required_unless_present = "visits", conflicts_with = "visits")]
        journal: Option<PathBuf>,
        /// Visit records (JSON Lines), e.g. a simulator's visits.jsonl.
        #[arg(long)]
        visits: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ClassifierArg::LeftInRed)]
        classifier: ClassifierArg,
        #[arg(long, value_enum, default_value_t = Series::Rate)]
        series: Series,
        /// Restrict the classifier to one stage.
        #[arg(long, value_parser = parse_stage, conflicts_with = "category")]
        stage: Option<WorkflowStage>,
        /// Restrict the classifier to one rated category's stages.
        #[arg(long, value_parser = parse_category)]
        category: Option<Category>,
        /// Quantiles for `--series quantiles`.
        #[arg(long, value_delimiter = ',', default_values_t = metrics::DEFAULT_QUANTILES)]
        quantiles: Vec<f64>,
        /// Largest call count for `--series attending`.
        #[arg(long, default_value_t = metrics::DEFAULT_MAX_CALLS)]
        max_calls: usize,
        /// Bootstrap seed for `--series attending`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the system and user prompt for one stage of a chart.
    Prompt {
        #[arg(long, value_parser = parse_stage)]
        stage: WorkflowStage,
        /// DocumentationState as JSON.
        #[arg(long)]
        doc: PathBuf,
        #[arg(long, value_enum, default_value_t = Part::Both)]
        part: Part,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's port.
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    LeftInRed,
    StartedRed,
}

impl From<ClassifierArg> for Classifier {
    fn from(c: ClassifierArg) -> Self {
        match c {
            ClassifierArg::LeftInRed => Classifier::LeftInRed,
            ClassifierArg::StartedRed => Classifier::StartedRed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Series {
    /// Weekly classified-visit rate per arm.
    Rate,
    /// Quantiles of per-clinician weekly rates.
    Quantiles,
    /// Median attending minutes by number of consult calls.
    Attending,
    /// Weekly median clinical-note length.
    Notes,
    /// Weekly feedback and thumbs-down rates.
    Thumbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Part {
    System,
    User,
    Both,
}

fn parse_stage(s: &str) -> Result<WorkflowStage, String> {
    s.parse().map_err(|e: safetynet_core::DomainError| e.0)
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse().map_err(|e: safetynet_core::DomainError| e.0)
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_logging(verbose: bool) {
    let level = if verbose {
        tracing_subscriber::filter::LevelFilter::INFO
    } else {
        tracing_subscriber::filter::LevelFilter::WARN
    };
    let _ = tracing_subscriber::fmt().with_writer(io::stderr).with_max_level(level).try_init();
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config, out, seed } => simulate(config.as_deref(), &out, seed),
        Command::Replay { journal, out } => replay(&journal, &out),
        Command::Analyze { csv, out, config, omitted_clinic } => analyze(&csv, &out, config.as_deref(), omitted_clinic),
        Command::Metrics { journal, visits, classifier, series, stage, category, quantiles, max_calls, seed, out } => {
            let visits = match (journal, visits) {
                (Some(j), _) => visits_from_journal(&j)?,
                (None, Some(v)) => visits_from_records(&v)?,
                (None, None) => bail!("one of --journal or --visits is required"),
            };
            let stages: Vec<WorkflowStage> = match (stage, category) {
                (Some(s), _) => vec![s],
                (None, Some(c)) => c.stages().to_vec(),
                (None, None) => WorkflowStage::ALL.to_vec(),
            };
            let spec = MetricSpec { classifier: classifier.into(), series, stages, quantiles, max_calls, seed };
            match out {
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    write_metrics(&visits, &spec, BufWriter::new(f))
                }
                None => write_metrics(&visits, &spec, io::stdout().lock()),
            }
        }
        Command::Prompt { stage, doc, part } => {
            let text = std::fs::read_to_string(&doc).with_context(|| format!("reading {}", doc.display()))?;
            let doc: DocumentationState =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", doc.display()))?;
            doc.validate()?;
            print!("{}", render_prompt(stage, &doc, part));
            Ok(())
        }
        Command::Serve { config, port } => {
            let mut cfg = match config {
                Some(p) => ServiceConfig::from_json(
                    &std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => ServiceConfig::default(),
            };
            if let Some(port) = port {
                cfg.port = port;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(safetynet_service::serve(&cfg))?;
            Ok(())
        }
    }
}

pub fn simulate(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = match config {
        Some(p) => {
            SimConfig::from_json(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let cohort = generate(&cfg)?;
    let written = write_all(&cohort, out)?;
    eprintln!("{} visits, {} clinicians", cohort.visits.len(), cohort.clinicians.len());
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn load_events(path: &Path) -> Result<Vec<safetynet_core::EngineEvent>> {
    let loaded = journal::load(path)?;
    if !path.exists() {
        bail!("{}: no such file", path.display());
    }
    if loaded.torn_bytes > 0 {
        eprintln!("warning: dropped a torn final line ({} bytes) from {}", loaded.torn_bytes, path.display());
    }
    Ok(loaded.events)
}

pub fn replay(journal_path: &Path, out: &Path) -> Result<()> {
    let events = load_events(journal_path)?;
    let state = EngineState::replay(&events).context("replaying journal")?;
    let f = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, &state)?;
    w.write_all(b"\n")?;
    w.flush()?;
    eprintln!("{} events, {} visits", events.len(), state.visits.len());
    Ok(())
}

pub fn analyze(csv: &Path, out: &Path, config: Option<&Path>, omitted_clinic: Option<String>) -> Result<()> {
    let mut cfg: AnalysisConfig = match config {
        Some(p) => {
            serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => AnalysisConfig::default(),
    };
    if omitted_clinic.is_some() {
        cfg.omitted_clinic = omitted_clinic;
    }
    let f = File::open(csv).with_context(|| format!("opening {}", csv.display()))?;
    let rows = analysis::read_rows(BufReader::new(f)).with_context(|| csv.display().to_string())?;
    let report = analysis::analyze(&rows, &cfg)?;
    let written = analysis::write_tables(&report, out)?;
    print!("{}", analysis::render_text(&report));
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

pub fn visits_from_journal(path: &Path) -> Result<Vec<MetricVisit>> {
    let state = EngineState::replay(&load_events(path)?).context("replaying journal")?;
    Ok(metrics::from_engine(&state))
}

pub fn visits_from_records(path: &Path) -> Result<Vec<MetricVisit>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: VisitRecord =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?;
        out.push(MetricVisit::from(&rec));
    }
    Ok(out)
}

pub struct MetricSpec {
    pub classifier: Classifier,
    pub series: Series,
    pub stages: Vec<WorkflowStage>,
    pub quantiles: Vec<f64>,
    pub max_calls: usize,
    pub seed: u64,
}

pub fn write_metrics<W: Write>(visits: &[MetricVisit], spec: &MetricSpec, out: W) -> Result<()> {
    match spec.series {
        Series::Rate => metrics::write_csv(&metrics::weekly_rate(visits, spec.classifier, &spec.stages), out)?,
        Series::Quantiles => {
            if let Some(q) = spec.quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
                bail!("quantile {q} is outside [0, 1]");
            }
            metrics::write_csv(
                &metrics::clinician_quantiles(visits, spec.classifier, &spec.stages, &spec.quantiles),
                out,
            )?
        }
        Series::Attending => {
            metrics::write_csv(&metrics::attending_time_by_triggers(visits, spec.max_calls, spec.seed), out)?
        }
        Series::Notes => metrics::write_csv(&metrics::median_note_length(visits), out)?,
        Series::Thumbs => metrics::write_csv(&metrics::thumbs_rates(visits), out)?,
    }
    Ok(())
}

pub fn render_prompt(stage: WorkflowStage, doc: &DocumentationState, part: Part) -> String {
    let pair = prompt::build(stage, doc);
    let mut s = String::new();
    if matches!(part, Part::System | Part::Both) {
        s.push_str(&pair.system_text);
        if !pair.system_text.ends_with('\n') {
            s.push('\n');
        }
    }
    if part == Part::Both {
        s.push_str("\n---\n\n");
    }
    if matches!(part, Part::User | Part::Both) {
        s.push_str(&pair.user_text);
        if !pair.user_text.ends_with('\n') {
            s.push('\n');
        }
    }
    s
}
