//! The work behind each subcommand, callable without a process boundary.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srdp_core::analysis::{analyze, Analysis, ExtractOptions, Grouping};
use srdp_core::corpus::{
    build_corpus, fixture_corpus, fixture_fillers, load_corpus, parse_corpus, validate_corpus,
    CorpusFile, CorpusReport, Lexicon,
};
use srdp_core::session::{
    build_plan, build_practice_plan, parse_session_log, replay, run_bot_session, BotPolicy,
    EngineConfig, SessionLog, SessionLogWriter, SessionPlan, TimingModel,
};

use crate::error::Failure;

pub fn read_corpus(path: Option<&Path>) -> Result<CorpusFile, Failure> {
    match path {
        None => Ok(fixture_corpus()),
        Some(p) => load_corpus(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display()))),
    }
}

/// Fillers plus generated garden-path sentences, as corpus text.
pub fn corpus_generate(
    fillers: Option<&Path>,
    lexicon: Option<&Path>,
    per_type: usize,
    seed: u64,
) -> Result<String, Failure> {
    let fillers = match fillers {
        None => fixture_fillers(),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Failure::io(p.display().to_string(), e))?;
            parse_corpus(&text).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?
        }
    };
    let lexicon = match lexicon {
        None => Lexicon::fixture(),
        Some(p) => Lexicon::load(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
    };
    let corpus = build_corpus(&fillers, &lexicon, per_type, seed)
        .map_err(|e| Failure::Data(e.to_string()))?;
    Ok(corpus.to_jsonl())
}

pub fn corpus_validate(corpus: &CorpusFile) -> CorpusReport {
    validate_corpus(corpus)
}

/// Seeds for subject `index` (0-based): plan order, timing, judgment noise.
pub fn subject_seeds(seed: u64, index: usize) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    [rng.next_u64(), rng.next_u64(), rng.next_u64()]
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub policy: BotPolicy,
    pub subjects: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub engine: EngineConfig,
    pub timing: TimingModel,
    pub practice: bool,
}

/// Runs one bot session per subject and writes `<out>/<subject>.jsonl`.
pub fn simulate(corpus: &CorpusFile, args: &SimulateArgs) -> Result<Vec<PathBuf>, Failure> {
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::io(args.out.display().to_string(), e))?;
    let mut written = Vec::new();
    for i in 0..args.subjects {
        let [plan_seed, timing_seed, flip_seed] = subject_seeds(args.seed, i);
        let subject = subject_id(i);
        let plan = make_plan(corpus, &subject, plan_seed, args.practice)?;
        let policy = match args.policy {
            BotPolicy::Noisy { p, .. } => BotPolicy::Noisy { p, seed: flip_seed },
            other => other,
        };
        let timing = TimingModel {
            seed: timing_seed,
            ..args.timing
        };
        let log = run_bot_session(corpus, &plan, policy, timing, args.engine)
            .map_err(|e| Failure::Data(format!("subject {subject}: {e}")))?;
        let path = args.out.join(format!("{subject}.jsonl"));
        write_log(&path, &log)?;
        written.push(path);
    }
    Ok(written)
}

pub fn make_plan(
    corpus: &CorpusFile,
    subject: &str,
    seed: u64,
    practice: bool,
) -> Result<SessionPlan, Failure> {
    let plan = if practice {
        build_practice_plan(corpus, subject, seed, 10)
    } else {
        build_plan(corpus, subject, seed)
    };
    plan.map_err(|e| Failure::Data(e.to_string()))
}

pub fn write_log(path: &Path, log: &SessionLog) -> Result<(), Failure> {
    let ctx = || path.display().to_string();
    let file = File::create(path).map_err(|e| Failure::io(ctx(), e))?;
    let mut w = SessionLogWriter::new(BufWriter::new(file));
    w.write_header(&log.header)
        .map_err(|e| Failure::io(ctx(), e))?;
    for t in &log.trials {
        w.write_trial(t).map_err(|e| Failure::io(ctx(), e))?;
    }
    if let Some(f) = &log.footer {
        w.write_footer(f).map_err(|e| Failure::io(ctx(), e))?;
    }
    Ok(())
}

pub fn read_log(path: &Path) -> Result<SessionLog, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::io(path.display().to_string(), e))?;
    parse_session_log(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// All `*.jsonl` session logs directly inside `dir`, by file name.
pub fn read_log_dir(dir: &Path) -> Result<Vec<(PathBuf, SessionLog)>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::io(dir.display().to_string(), e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| read_log(&p).map(|l| (p, l)))
        .collect()
}

pub fn analyze_dir(
    dir: &Path,
    corpus: Option<&CorpusFile>,
    grouping: Grouping,
    opts: ExtractOptions,
) -> Result<Analysis, Failure> {
    let logs: Vec<SessionLog> = read_log_dir(dir)?.into_iter().map(|(_, l)| l).collect();
    if logs.is_empty() {
        return Err(Failure::Analysis(format!(
            "no sessions found in {}",
            dir.display()
        )));
    }
    let a = analyze(&logs, corpus, grouping, opts).map_err(|e| Failure::Analysis(e.to_string()))?;
    if a.rows.is_empty() {
        return Err(Failure::Analysis(format!(
            "no complete sessions found in {}",
            dir.display()
        )));
    }
    Ok(a)
}

/// Replays a log file and compares the serialized result byte for byte.
pub fn replay_file(path: &Path, corpus: &CorpusFile) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::io(path.display().to_string(), e))?;
    let log =
        parse_session_log(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let again =
        replay(&log, corpus).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let ours = again.to_jsonl();
    if ours == text {
        return Ok(());
    }
    let line = ours
        .lines()
        .zip(text.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| ours.lines().count().min(text.lines().count()))
        + 1;
    Err(Failure::Mismatch(format!(
        "{}: replay differs from line {line}",
        path.display()
    )))
}
