//! `barrace`: render, validate and inspect bar chart race scenes.
//!
//! Exit codes: 0 on success, 1 on I/O or parse failures, 2 when the scene
//! does not validate (one violation per line on stderr).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use barrace_core::events::{DEFAULT_JUMP_THRESHOLD, DEFAULT_LEAD_PERIODS};
use barrace_core::{
    detect_events, parse_dataset, suggest_foreshadow, Easing, RankingDataset, Scene, SceneDocument, SceneError,
    SceneStore,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "barrace", version, about = "Bar chart races with visual foreshadowing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export every frame as SVG plus an animation.json manifest.
    Render {
        #[command(flatten)]
        input: SceneInput,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: SettingsOverrides,
    },
    /// Check a scene's settings and foreshadow specs.
    Validate {
        #[command(flatten)]
        input: SceneInput,
        #[command(flatten)]
        overrides: SettingsOverrides,
    },
    /// Print detected ranking events as JSON lines.
    Detect {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
        #[arg(long, default_value_t = DEFAULT_JUMP_THRESHOLD)]
        jump: usize,
        /// Print a foreshadow draft per event instead of the event.
        #[arg(long)]
        suggest: bool,
        /// Lead time for drafts, in periods.
        #[arg(long, default_value_t = DEFAULT_LEAD_PERIODS)]
        lead: f64,
    },
    /// Run the HTTP authoring service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory holding scene documents.
        #[arg(long, default_value = "scenes")]
        root: PathBuf,
    },
}

#[derive(Args)]
struct SceneInput {
    /// CSV data (`item,category,<periods...>`); replaces any dataset embedded in the scene.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Scene document (JSON).
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args)]
struct SettingsOverrides {
    #[arg(long)]
    fps: Option<u32>,
    #[arg(long)]
    seconds_per_period: Option<f64>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long, value_enum)]
    easing: Option<EasingArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EasingArg {
    Linear,
    CubicInOut,
}

impl From<EasingArg> for Easing {
    fn from(e: EasingArg) -> Self {
        match e {
            EasingArg::Linear => Easing::Linear,
            EasingArg::CubicInOut => Easing::CubicInOut,
        }
    }
}

enum Failure {
    Fatal(anyhow::Error),
    Invalid(SceneError),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Fatal(e)
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::ValidationFailed(_)
            | SceneError::Compile(_)
            | SceneError::Render(barrace_core::RenderError::InvalidCanvas(_)) => Failure::Invalid(e),
            other => Failure::Fatal(other.into()),
        }
    }
}

fn read_dataset(path: &Path) -> anyhow::Result<RankingDataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dataset(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_scene(input: &SceneInput, overrides: &SettingsOverrides) -> Result<Scene, Failure> {
    let doc = match &input.scene {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SceneDocument::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SceneDocument::default(),
    };
    let dataset = input.data.as_deref().map(read_dataset).transpose()?;
    let mut doc = doc;
    if let Some(fps) = overrides.fps {
        doc.settings.fps = fps;
    }
    if let Some(spp) = overrides.seconds_per_period {
        doc.settings.seconds_per_period = spp;
    }
    if let Some(top_n) = overrides.top_n {
        doc.settings.top_n = top_n;
    }
    if let Some(easing) = overrides.easing {
        doc.settings.easing = easing.into();
    }
    match doc.into_scene(dataset) {
        Err(SceneError::MissingDataset) => Err(Failure::Fatal(anyhow::anyhow!(
            "no dataset: pass --data or embed one in the scene file"
        ))),
        other => Ok(other?),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Render { input, out, overrides } => {
            let scene = load_scene(&input, &overrides)?;
            let manifest = scene.export(&out)?;
            eprintln!("wrote {} frames and animation.json to {}", manifest.frame_count, out.display());
        }
        Command::Validate { input, overrides } => {
            let scene = load_scene(&input, &overrides)?;
            eprintln!("ok: {} spec(s), {} frames", scene.specs.len(), scene.frame_count());
        }
        Command::Detect {
            data,
            top_n,
            jump,
            suggest,
            lead,
        } => {
            let dataset = read_dataset(&data)?;
            for event in detect_events(&dataset, top_n, jump) {
                let line = if suggest {
                    serde_json::to_string(&suggest_foreshadow(&event, lead).map_err(anyhow::Error::from)?)
                } else {
                    serde_json::to_string(&event)
                }
                .map_err(anyhow::Error::from)?;
                println!("{line}");
            }
        }
        Command::Serve { addr, root } => {
            let store = Arc::new(SceneStore::open(&root).map_err(anyhow::Error::from)?);
            let runtime = tokio::runtime::Runtime::new().map_err(anyhow::Error::from)?;
            runtime
                .block_on(barrace_service::serve(addr, store))
                .with_context(|| format!("serving on {addr}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            match &e {
                SceneError::ValidationFailed(violations) => {
                    for v in violations {
                        eprintln!("{}\t{}\t{}", v.code.as_str(), v.spec_id, v.message);
                    }
                }
                other => eprintln!("{}\t-\t{other}", other.code()),
            }
            ExitCode::from(2)
        }
    }
}
