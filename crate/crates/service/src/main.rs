use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use srdp::commands::{self, SimulateArgs};
use srdp::{Failure, ServiceConfig};
use srdp_core::analysis::{ExtractOptions, Grouping, ResponseMeasure};
use srdp_core::session::{BotPolicy, CommitMode, EngineConfig, TimingModel};

#[derive(Parser)]
#[command(
    name = "srdp",
    version,
    about = "Shift-reduce dependency parsing game: corpus, simulation, analysis and session service"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or validate sentence corpora.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Print the presentation plan for one subject as JSON.
    Plan {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "S01")]
        subject: String,
        #[arg(long)]
        practice: bool,
        /// Corpus file; the built-in corpus when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Play whole sessions with a bot and write one log per subject.
    Simulate {
        /// oracle, shift, reduce or noisy:<p>
        #[arg(long, value_parser = parse_policy)]
        policy: BotPolicy,
        #[arg(long, default_value_t = 12)]
        subjects: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 840)]
        animation_ms: u64,
        #[arg(long, value_enum, default_value_t = Mode::Analog)]
        commit_mode: Mode,
        #[arg(long)]
        practice: bool,
    },
    /// Accuracy and residual response time per sentence category.
    Analyze {
        /// Directory of session logs.
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = GroupingArg::Pooled)]
        grouping: GroupingArg,
        /// Response time: summed judgment times, or trial duration minus
        /// animations.
        #[arg(long = "y", value_enum, default_value_t = Measure::Judged)]
        measure: Measure,
        #[arg(long)]
        include_practice: bool,
        /// Take phrase, mora and character counts from this corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Also write the table as tab-separated values.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Re-run a session log from its inputs and compare byte for byte.
    Replay {
        log: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Run the HTTP and WebSocket session service.
    Serve {
        #[arg(long, env = "SRDP_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "SRDP_PORT")]
        port: Option<u16>,
        #[arg(long, env = "SRDP_LOG_DIR")]
        log_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// Fillers plus template-generated garden-path sentences.
    Generate {
        #[arg(long)]
        fillers: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        per_type: usize,
        #[arg(long, default_value_t = 2015)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Validate {
        /// Corpus file; the built-in corpus when omitted.
        path: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Analog,
    Instant,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupingArg {
    Pooled,
    PerSubject,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Judged,
    Wall,
}

fn parse_policy(s: &str) -> Result<BotPolicy, String> {
    s.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(p.display().to_string(), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io("stdout", e)),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Corpus { action } => match action {
            CorpusAction::Generate {
                fillers,
                lexicon,
                per_type,
                seed,
                out,
            } => {
                let text = commands::corpus_generate(
                    fillers.as_deref(),
                    lexicon.as_deref(),
                    per_type,
                    seed,
                )?;
                write_out(out.as_ref(), &text)
            }
            CorpusAction::Validate { path } => {
                let corpus = commands::read_corpus(path.as_deref())?;
                let report = commands::corpus_validate(&corpus);
                for issue in &report.issues {
                    eprintln!("{issue}");
                }
                if report.is_valid() {
                    println!("{} sentences ok", corpus.records.len());
                    Ok(())
                } else {
                    Err(Failure::Data(format!("{} issues", report.issues.len())))
                }
            }
        },
        Command::Plan {
            seed,
            subject,
            practice,
            corpus,
        } => {
            let corpus = commands::read_corpus(corpus.as_deref())?;
            let plan = commands::make_plan(&corpus, &subject, seed, practice)?;
            let text = serde_json::to_string_pretty(&plan).expect("plan serializes");
            println!("{text}");
            Ok(())
        }
        Command::Simulate {
            policy,
            subjects,
            seed,
            out,
            corpus,
            animation_ms,
            commit_mode,
            practice,
        } => {
            let corpus = commands::read_corpus(corpus.as_deref())?;
            let engine = EngineConfig {
                animation_ms,
                commit_mode: match commit_mode {
                    Mode::Analog => CommitMode::Analog,
                    Mode::Instant => CommitMode::Instant,
                },
                ..Default::default()
            };
            engine
                .validate()
                .map_err(|e| Failure::Config(e.to_string()))?;
            let args = SimulateArgs {
                policy,
                subjects,
                seed,
                out,
                engine,
                timing: TimingModel::default(),
                practice,
            };
            let written = commands::simulate(&corpus, &args)?;
            println!(
                "wrote {} session logs to {}",
                written.len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Analyze {
            dir,
            grouping,
            measure,
            include_practice,
            corpus,
            tsv,
        } => {
            let corpus = corpus
                .as_deref()
                .map(|p| commands::read_corpus(Some(p)))
                .transpose()?;
            let grouping = match grouping {
                GroupingArg::Pooled => Grouping::Pooled,
                GroupingArg::PerSubject => Grouping::PerSubject,
            };
            let opts = ExtractOptions {
                measure: match measure {
                    Measure::Judged => ResponseMeasure::JudgedSum,
                    Measure::Wall => ResponseMeasure::WallClock,
                },
                include_practice,
            };
            let analysis = commands::analyze_dir(&dir, corpus.as_ref(), grouping, opts)?;
            print!("{}", analysis.render_text());
            if let Some(p) = tsv {
                write_out(Some(&p), &analysis.table.render_tsv())?;
            }
            Ok(())
        }
        Command::Replay { log, corpus } => {
            let corpus = commands::read_corpus(corpus.as_deref())?;
            commands::replay_file(&log, &corpus)?;
            println!("{}: replay identical", log.display());
            Ok(())
        }
        Command::Serve {
            config,
            port,
            log_dir,
        } => {
            let mut cfg = match config {
                Some(p) => ServiceConfig::load(&p)?,
                None => ServiceConfig::default(),
            };
            if let Some(port) = port {
                cfg.listen.set_port(port);
            }
            if let Some(dir) = log_dir {
                cfg.log_dir = dir;
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::io("tokio runtime", e))?;
            rt.block_on(srdp::server::serve(cfg))
        }
    }
}
