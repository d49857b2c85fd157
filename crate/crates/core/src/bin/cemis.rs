use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cemis::api::{self, AppState, ADMIN_TOKEN_ENV};
use cemis::demo::{write_demo_manifest, DemoPoolSizes};
use cemis::domain::{GroupingPolicy, StudyConfig};
use cemis::report::{export, render, ExportFormat, ReportInput, ReportKind};
use cemis::session::{Engine, SystemClock};
use cemis::simulator::{read_profiles, simulate_panel, RunMode};
use cemis::storage::{write_atomic, DataDir, DATA_DIR_ENV};

#[derive(Parser)]
#[command(name = "cemis", version, about = "Blinded expert evaluation of synthetic medical images")]
struct Cli {
    /// Data directory.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an image manifest and store it as a study's pool.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        study: String,
    },
    /// Study management.
    Study {
        #[command(subcommand)]
        command: StudyCommand,
    },
    /// Expert enrollment.
    Expert {
        #[command(subcommand)]
        command: ExpertCommand,
    },
    /// Serve the HTTP API. Needs CEMIS_ADMIN_TOKEN.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Render a report to a file.
    Report {
        #[arg(long)]
        study: String,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulated expert panel through a study.
    Simulate {
        #[arg(long)]
        study: String,
        /// JSON list of skill profiles.
        #[arg(long)]
        profiles: PathBuf,
        /// Run each simulated expert on its own thread.
        #[arg(long)]
        concurrent: bool,
    },
    /// Write a placeholder image pool and its manifest, for trying things out.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DemoPoolSizes::default().real_per_cell)]
        real_per_cell: usize,
        #[arg(long, default_value_t = DemoPoolSizes::default().synthetic_per_cell)]
        synthetic_per_cell: usize,
    },
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Sample A1-A5 from the ingested pool and freeze the plans.
    Create(CreateArgs),
    /// Print the plan summary of an existing study.
    Show {
        #[arg(long)]
        study: String,
    },
}

#[derive(Args)]
struct CreateArgs {
    /// Study config (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    study: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    #[arg(long)]
    shuffle_per_expert: Option<bool>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    HomogeneousSourceCategory,
    HomogeneousSourceMixed,
}

#[derive(Subcommand)]
enum ExpertCommand {
    /// Enroll an expert; prints the id and the session token.
    Add {
        #[arg(long)]
        study: String,
        #[arg(long, allow_negative_numbers = true)]
        years: i64,
    },
}

struct CliError {
    category: String,
    message: String,
}

macro_rules! from_categorized {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self { category: e.category().to_string(), message: e.to_string() }
            }
        }
    )*};
}

from_categorized!(
    cemis::session::EngineError,
    cemis::storage::StorageError,
    cemis::report::ReportError,
    cemis::simulator::SimError,
    cemis::study::StudyError
);

fn fail(category: &str, message: impl Into<String>) -> CliError {
    CliError { category: category.to_string(), message: message.into() }
}

fn load_config(args: CreateArgs) -> Result<StudyConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => read_config(path)?,
        None => {
            let study =
                args.study.clone().ok_or_else(|| fail("config.invalid", "--study is required without --config"))?;
            StudyConfig::new(study, 0)
        }
    };
    if let Some(s) = args.study {
        config.study_id = s;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(p) = args.policy {
        config.grouping_policy = match p {
            Policy::HomogeneousSourceCategory => GroupingPolicy::HomogeneousSourceCategory,
            Policy::HomogeneousSourceMixed => GroupingPolicy::HomogeneousSourceMixed,
        };
    }
    if let Some(s) = args.shuffle_per_expert {
        config.shuffle_per_expert = s;
    }
    Ok(config)
}

fn read_config(path: &Path) -> Result<StudyConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| fail("config.invalid", format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| fail("config.invalid", format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let data = cli.data_dir.map_or_else(DataDir::from_env, DataDir::new);
    let clock = || Arc::new(SystemClock);
    match cli.command {
        Command::Ingest { manifest, study } => {
            let pool = data.ingest_manifest(&study, &manifest)?;
            println!("ingested {} images into study {study}", pool.len());
        }
        Command::Study { command: StudyCommand::Create(args) } => {
            let engine = Engine::create(&data, load_config(args)?, clock())?;
            println!("{}", engine.study().summary());
        }
        Command::Study { command: StudyCommand::Show { study } } => {
            let engine = Engine::open(&data, &study, clock())?;
            println!("{}", engine.study().summary());
        }
        Command::Expert { command: ExpertCommand::Add { study, years } } => {
            let engine = Engine::open(&data, &study, clock())?;
            let e = engine.enroll(years)?;
            println!("expert_id\t{}", e.expert_id);
            println!("session_token\t{}", e.session_token);
        }
        Command::Serve { addr } => {
            let token = std::env::var(ADMIN_TOKEN_ENV).unwrap_or_default();
            let state = Arc::new(AppState::open(data, &token, clock())?);
            let rt = tokio::runtime::Runtime::new().map_err(|e| fail("serve.io", e.to_string()))?;
            rt.block_on(api::serve(state, &addr)).map_err(|e| fail("serve.bind", format!("{addr}: {e}")))?;
        }
        Command::Report { study, kind, format, out } => {
            let kind: ReportKind = kind.parse()?;
            let format: ExportFormat = format.parse()?;
            let engine = Engine::open(&data, &study, clock())?;
            let (responses, profiles) = (engine.responses(), engine.profiles());
            let input = ReportInput { study: engine.study(), responses: &responses, profiles: &profiles };
            let envelope = render(kind, input, chrono::Utc::now())?;
            write_atomic(&out, &export(&envelope, format)?)?;
            println!("wrote {} ({} rows) to {}", kind, envelope.rows.len(), out.display());
            for note in &envelope.footnotes {
                println!("note: {note}");
            }
        }
        Command::Simulate { study, profiles, concurrent } => {
            let profiles = read_profiles(&profiles)?;
            let engine = Engine::open(&data, &study, clock())?;
            let mode = if concurrent { RunMode::Concurrent } else { RunMode::Sequential };
            for e in simulate_panel(&engine, &profiles, mode)? {
                println!("{}\t{} years\t{} answers", e.expert_id, e.years_experience, e.answered);
            }
        }
        Command::Demo { out, seed, real_per_cell, synthetic_per_cell } => {
            let manifest = write_demo_manifest(&out, seed, DemoPoolSizes { real_per_cell, synthetic_per_cell })
                .map_err(|e| fail("storage.io", format!("{}: {e}", out.display())))?;
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.category, e.message);
            ExitCode::FAILURE
        }
    }
}
