//! One PASS/FAIL line per acceptance criterion.
//!
//! Runs without the libtest harness (`cargo test -p srdp --test acceptance`).
//! Exits nonzero if the set of failing criteria differs from `KNOWN_FAILURES`.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srdp::commands::{read_log_dir, simulate, SimulateArgs};
use srdp::live::LiveSession;
use srdp::wire::{ClientEnvelope, ClientMessage, PROTOCOL_VERSION};
use srdp_core::analysis::{
    column_names, design, extract_observations, fit_ols, ExtractOptions, Matrix,
};
use srdp_core::corpus::{fixture_corpus, gold_tree_for};
use srdp_core::session::{
    build_plan, parse_session_log, replay, run_bot_session, Block, BotPolicy, CommitMode,
    EngineConfig, Input, Phase, Session, SessionHeader, SessionLog, TimingModel,
};
use srdp_core::transition::{
    enumerate_trees, oracle_judgment, run_with_policy, validate_tree, GoldTree, Judgment,
    SentenceType, ROOT,
};

/// Criteria expected to fail, each with a ledger entry.
const KNOWN_FAILURES: &[&str] = &["garden-path traces"];

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(budget: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > budget {
        return Err(format!("took {took:.2?}, budget {budget:?}"));
    }
    Ok(took)
}

// ---- independent oracles -------------------------------------------------

/// List-based transcription of the parsing loop; `reduce(s, q)` answers each
/// judged step. Returns action names and (dependent, head) arcs.
fn simulate_parse(
    n: usize,
    mut reduce: impl FnMut(usize, usize) -> bool,
) -> (Vec<&'static str>, Vec<(usize, usize)>) {
    let mut stack: Vec<usize> = Vec::new();
    let mut queue: VecDeque<usize> = (1..=n).collect();
    let (mut kinds, mut arcs) = (Vec::new(), Vec::new());
    while !(stack.is_empty() && queue.len() == 1) {
        if stack.is_empty() {
            stack.push(queue.pop_front().unwrap());
            kinds.push("DS");
        } else if queue.len() == 1 {
            arcs.push((stack.pop().unwrap(), queue[0]));
            kinds.push("DR");
        } else if reduce(*stack.last().unwrap(), queue[0]) {
            arcs.push((stack.pop().unwrap(), queue[0]));
            kinds.push("REDUCE");
        } else {
            stack.push(queue.pop_front().unwrap());
            kinds.push("SHIFT");
        }
    }
    (kinds, arcs)
}

/// All head arrays with rightward heads and the root last, minus those with
/// crossing arcs.
fn brute_force_trees(n: usize) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let total: usize = (0..n - 1).map(|i| n - i - 1).product();
    for mut code in 0..total {
        let mut heads = vec![ROOT; n];
        for (i, h) in heads.iter_mut().enumerate().take(n - 1) {
            let choices = n - i - 1;
            *h = i + 2 + code % choices;
            code /= choices;
        }
        let crossing = (0..n - 1)
            .any(|a| (0..n - 1).any(|b| a < b && b + 1 < heads[a] && heads[a] < heads[b]));
        if !crossing {
            out.insert(heads);
        }
    }
    out
}

fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for i in (0..n).filter(|&i| i != c) {
            let f = a[i][c];
            for j in 0..n {
                a[i][j] -= f * a[c][j];
                inv[i][j] -= f * inv[c][j];
            }
        }
    }
    inv
}

/// Studentized residuals through `H = X (XᵀX)⁻¹ Xᵀ`.
fn hat_matrix_residuals(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let (n, p) = (x.len(), x[0].len());
    let g = invert(
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| (0..n).map(|i| x[i][a] * x[i][b]).sum())
                    .collect()
            })
            .collect(),
    );
    let h = |i: usize, j: usize| -> f64 {
        (0..p)
            .flat_map(|a| (0..p).map(move |b| (a, b)))
            .map(|(a, b)| x[i][a] * g[a][b] * x[j][b])
            .sum()
    };
    let e: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..n).map(|j| h(i, j) * y[j]).sum::<f64>())
        .collect();
    let sigma = (e.iter().map(|v| v * v).sum::<f64>() / (n - p) as f64).sqrt();
    (0..n)
        .map(|i| e[i] / (sigma * (1.0 - h(i, i)).sqrt()))
        .collect()
}

// ---- criteria ------------------------------------------------------------

fn action_count_law() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let runs = 1000;
    for run in 0..runs {
        let n = rng.random_range(2..=10);
        let r = run_with_policy(n, |_| {
            if rng.random_bool(0.5) {
                Judgment::Reduce
            } else {
                Judgment::Shift
            }
        })
        .map_err(|e| format!("run {run}: {e}"))?;
        ensure!(
            r.trace.len() == 2 * (n - 1),
            "run {run}: {} actions for N={n}",
            r.trace.len()
        );
        ensure!(
            r.arcs.len() == n - 1,
            "run {run}: {} arcs for N={n}",
            r.arcs.len()
        );
        let tree = GoldTree::from_arcs(&r.arcs, n);
        ensure!(
            validate_tree(&tree, n).is_valid(),
            "run {run}: invalid tree {:?}",
            tree.heads
        );
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("{runs} runs, N in [2,10], {took:.0?}"))
}

fn oracle_completeness() -> Check {
    let start = Instant::now();
    let expected = [1usize, 2, 5, 14, 42];
    for (n, &want) in (2..=6).zip(&expected) {
        let trees = enumerate_trees(n);
        let set: BTreeSet<Vec<usize>> = trees.iter().map(|t| t.heads.clone()).collect();
        ensure!(
            trees.len() == want,
            "N={n}: {} trees, expected {want}",
            trees.len()
        );
        ensure!(set.len() == trees.len(), "N={n}: duplicate trees");
        ensure!(
            set == brute_force_trees(n),
            "N={n}: enumeration differs from brute force"
        );
        for gold in &trees {
            let r = run_with_policy(n, |s| oracle_judgment(s, gold).unwrap())
                .map_err(|e| e.to_string())?;
            ensure!(
                GoldTree::from_arcs(&r.arcs, n) == *gold,
                "N={n}: oracle missed {:?}",
                gold.heads
            );
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "counts {expected:?} for N=2..6, all reproduced, {took:.0?}"
    ))
}

fn garden_path_traces() -> Check {
    // frozen after re-derivation with `simulate_parse`
    let fixtures: [(SentenceType, [usize; 6], &str, [usize; 4]); 3] = [
        (
            SentenceType::Ctrl,
            [3, 3, 4, 6, 6, 0],
            "SRRRS",
            [3, 2, 2, 3],
        ),
        (SentenceType::Eb, [6, 3, 4, 6, 6, 0], "SRSRSS", [1, 3, 4, 2]),
        (SentenceType::Lb, [6, 6, 4, 6, 6, 0], "SSRSS", [1, 4, 4, 1]),
    ];
    let mut got_counts = Vec::new();
    for (t, heads, judged, counts) in fixtures {
        let gold = gold_tree_for(t).map_err(|e| e.to_string())?;
        ensure!(gold.heads == heads, "{t:?}: gold tree {:?}", gold.heads);
        let (kinds, _) = simulate_parse(6, |s, q| heads[s - 1] == q);
        let sim_judged: String = kinds
            .iter()
            .filter_map(|k| match *k {
                "SHIFT" => Some('S'),
                "REDUCE" => Some('R'),
                _ => None,
            })
            .collect();
        let sim_counts =
            ["DS", "DR", "SHIFT", "REDUCE"].map(|k| kinds.iter().filter(|x| **x == k).count());
        ensure!(
            sim_judged == judged && sim_counts == counts,
            "{t:?}: fixture disagrees with simulator"
        );

        let r = run_with_policy(6, |s| oracle_judgment(s, &gold).unwrap())
            .map_err(|e| e.to_string())?;
        let seq: String = r
            .judged()
            .iter()
            .map(|j| if *j == Judgment::Reduce { 'R' } else { 'S' })
            .collect();
        ensure!(seq == judged, "{t:?}: judged {seq}, expected {judged}");
        let names: Vec<&str> = r.trace.iter().map(|a| a.kind.abbrev()).collect();
        ensure!(names == kinds, "{t:?}: trace {names:?}");
        let c = r.counts;
        let c = [c.default_shift, c.default_reduce, c.shift, c.reduce].map(|v| v as usize);
        ensure!(c == counts, "{t:?}: counts {c:?}");
        got_counts.push(c);
    }
    // stated counts for CTRL and EB; EB's sums to 10 but needs three judged
    // REDUCEs, and SRSRSS has two
    let stated = [[3, 2, 2, 3], [1, 3, 3, 3]];
    for (i, (want, got)) in stated.iter().zip(&got_counts).enumerate() {
        ensure!(
            want == got,
            "sequences SRRRS/SRSRSS/SSRSS reproduced, but {} counts are {got:?}, stated {want:?}; \
             (1,3,3,3) breaks DS+SHIFT = N-1 for N=6",
            ["CTRL", "EB"][i]
        );
    }
    Ok(format!("counts {got_counts:?}"))
}

fn plan_law() -> Check {
    let start = Instant::now();
    let corpus = fixture_corpus();
    let types: std::collections::HashMap<&str, SentenceType> = corpus
        .records
        .iter()
        .map(|r| (r.id(), r.sentence_type()))
        .collect();
    for seed in 0..10_000u64 {
        let plan = build_plan(&corpus, "S01", seed).map_err(|e| e.to_string())?;
        ensure!(plan.len() == 40, "seed {seed}: {} sentences", plan.len());
        ensure!(
            plan.ids().collect::<HashSet<_>>().len() == 40,
            "seed {seed}: duplicates"
        );
        let mut per_type = [0usize; 4];
        for (i, e) in plan.entries.iter().enumerate() {
            let t = types[e.sentence_id.as_str()];
            per_type[[
                SentenceType::Filler,
                SentenceType::Ctrl,
                SentenceType::Eb,
                SentenceType::Lb,
            ]
            .iter()
            .position(|x| *x == t)
            .unwrap()] += 1;
            let block = match i {
                0..5 => Block::Block1,
                5..35 => Block::Block2,
                _ => Block::Block3,
            };
            ensure!(
                e.block == block,
                "seed {seed}: position {i} in {:?}",
                e.block
            );
            ensure!(
                block == Block::Block2 || t == SentenceType::Filler,
                "seed {seed}: {t:?} outside block 2"
            );
        }
        ensure!(
            per_type == [25, 5, 5, 5],
            "seed {seed}: type counts {per_type:?}"
        );
        if seed % 100 == 0 {
            let again = build_plan(&corpus, "S01", seed).map_err(|e| e.to_string())?;
            ensure!(again == plan, "seed {seed}: not reproducible");
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!("10000 plans, {took:.2?}"))
}

fn regression_fidelity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for d in 0..100 {
        let p = rng.random_range(2..=10);
        let n = rng.random_range(p + 2..=200);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..p)
                    .map(|j| {
                        if j == 0 {
                            1.0
                        } else {
                            rng.random_range(-3.0..3.0) * j as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let fit = fit_ols(&Matrix::from_rows(&rows), &names, &y).map_err(|e| e.to_string())?;
        let r = fit.studentized_residuals().map_err(|e| e.to_string())?;
        for (a, b) in r.iter().zip(hat_matrix_residuals(&rows, &y)) {
            worst = worst.max((a - b).abs());
        }
        ensure!(worst <= 1e-9, "design {d}: residual error {worst:e}");

        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let clean: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect();
        let fit = fit_ols(&Matrix::from_rows(&rows), &names, &clean).map_err(|e| e.to_string())?;
        let err = fit
            .beta
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure!(err <= 1e-8, "design {d}: coefficient error {err:e}");
    }

    // garden-path sentences only: every row has N = 6
    let corpus = fixture_corpus();
    let mut logs = Vec::new();
    for seed in 0..6 {
        let plan = build_plan(&corpus, "S01", seed).map_err(|e| e.to_string())?;
        let timing = TimingModel {
            seed,
            ..Default::default()
        };
        logs.push(
            run_bot_session(
                &corpus,
                &plan,
                BotPolicy::Oracle,
                timing,
                EngineConfig::default(),
            )
            .map_err(|e| e.to_string())?,
        );
    }
    let rows =
        extract_observations(&logs, None, ExtractOptions::default()).map_err(|e| e.to_string())?;
    let six: Vec<_> = rows
        .iter()
        .filter(|r| r.category.is_garden_path())
        .collect();
    ensure!(
        six.iter().all(|r| r.phrases == 6),
        "garden-path row with N != 6"
    );
    let (x, y) = design(&six);
    let fit = fit_ols(&x, &column_names(), &y).map_err(|e| e.to_string())?;
    // phrases is constant; SHIFT = 5 - DS and REDUCE = 5 - DR
    let expected = ["phrases", "n_shift", "n_reduce"];
    ensure!(fit.dropped == expected, "dropped {:?}", fit.dropped);
    fit.studentized_residuals().map_err(|e| e.to_string())?;
    Ok(format!(
        "max residual error {worst:.1e}; N=6 fit of {} rows dropped {:?}",
        six.len(),
        fit.dropped
    ))
}

fn srdp(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_srdp"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "srdp {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn accuracy_row(tsv: &str) -> Result<Vec<f64>, String> {
    let line = tsv
        .lines()
        .find(|l| l.starts_with("acc. (%)\tave."))
        .ok_or("no accuracy row")?;
    line.split('\t')
        .skip(2)
        .map(|v| v.parse::<f64>().map_err(|e| format!("{v}: {e}")))
        .collect()
}

fn end_to_end(dir: &Path) -> Check {
    let start = Instant::now();
    let d = |s: &str| dir.join(s).to_string_lossy().into_owned();
    srdp(&[
        "simulate",
        "--policy",
        "oracle",
        "--subjects",
        "12",
        "--seed",
        "1",
        "--out",
        &d("oracle"),
    ])?;
    let text = srdp(&["analyze", &d("oracle"), "--tsv", &d("oracle.tsv")])?;
    srdp(&[
        "simulate",
        "--policy",
        "noisy:0.3",
        "--subjects",
        "12",
        "--seed",
        "1",
        "--out",
        &d("noisy"),
    ])?;
    srdp(&["analyze", &d("noisy"), "--tsv", &d("noisy.tsv")])?;
    let took = within(Duration::from_secs(10), start)?;

    let table: Vec<&str> = text
        .lines()
        .rev()
        .take(5)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    ensure!(
        table[0]
            .split_whitespace()
            .eq(["Filler", "CTRL", "EB", "LB"]),
        "header `{}`",
        table[0]
    );
    let labels = [
        "acc. (%)  ave.",
        "          stdev.",
        "s.r.r.t.  ave.",
        "          stdev.",
    ];
    for (line, label) in table[1..].iter().zip(labels) {
        ensure!(
            line.starts_with(label),
            "row `{line}`, expected label `{label}`"
        );
        let cells = line[label.len()..].split_whitespace().count();
        ensure!(cells == 4, "row `{line}` has {cells} cells");
    }
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).map_err(|e| e.to_string());
    let oracle = accuracy_row(&read("oracle.tsv")?)?;
    let noisy = accuracy_row(&read("noisy.tsv")?)?;
    ensure!(oracle == [100.0; 4], "oracle accuracy {oracle:?}");
    ensure!(
        noisy.iter().zip(&oracle).all(|(n, o)| n < o),
        "noisy accuracy {noisy:?}"
    );
    Ok(format!(
        "oracle {oracle:?}, noisy(0.3) {noisy:?}, {took:.2?}"
    ))
}

/// Drives a live session with oracle answers, as the browser would.
fn live_session_log(dir: &Path) -> Result<String, String> {
    let corpus = fixture_corpus();
    let plan = build_plan(&corpus, "S99", 42).map_err(|e| e.to_string())?;
    let engine = Session::new(
        SessionHeader::new("ui", plan, EngineConfig::default()),
        &corpus,
    )
    .map_err(|e| e.to_string())?;
    let path = dir.join("live.jsonl");
    let mut live = LiveSession::new("live".into(), engine, path.clone());
    let mut seq = 0;
    let mut send = |live: &mut LiveSession, msg: ClientMessage| {
        seq += 1;
        live.handle(
            ClientEnvelope {
                v: PROTOCOL_VERSION,
                seq,
                msg,
            },
            &corpus,
        )
    };
    send(&mut live, ClientMessage::Hello { t: 0, client: None });
    send(&mut live, ClientMessage::Jump { t: 5 });
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    loop {
        let e = live.engine();
        match e.phase() {
            Phase::SessionDone => break,
            Phase::Idle => return Err("session not started".into()),
            Phase::Animating { until } => {
                send(&mut live, ClientMessage::Tick { t: until });
            }
            Phase::TrialDone { at } => {
                send(&mut live, ClientMessage::Jump { t: at + 900 });
            }
            Phase::AwaitJudgment { since } => {
                let j = oracle_judgment(
                    e.parser_state().unwrap(),
                    &e.current_record().unwrap().heads,
                )
                .unwrap();
                let input = if j == Judgment::Reduce {
                    Input::Right
                } else {
                    Input::Left
                };
                let t = since + rng.random_range(200..1500);
                send(&mut live, ClientMessage::InputEvent { t, input });
                // ticks at an uneven cadence, like a browser frame loop
                let mut now = t;
                while matches!(live.engine().phase(), Phase::AwaitJudgment { .. }) {
                    now += rng.random_range(5..40);
                    send(&mut live, ClientMessage::Tick { t: now });
                }
                send(
                    &mut live,
                    ClientMessage::InputEvent {
                        t: now,
                        input: Input::Neutral,
                    },
                );
            }
        }
    }
    drop(live);
    std::fs::read_to_string(&path).map_err(|e| e.to_string())
}

fn replay_determinism(dir: &Path) -> Check {
    let corpus = fixture_corpus();
    let mut logs: Vec<(String, String)> = Vec::new();
    for (name, engine) in [
        ("analog", EngineConfig::default()),
        (
            "instant",
            EngineConfig {
                commit_mode: CommitMode::Instant,
                animation_ms: 820,
                ..Default::default()
            },
        ),
        (
            "slow",
            EngineConfig {
                icon_speed: 0.7,
                drift_speed: 0.3,
                animation_ms: 860,
                ..Default::default()
            },
        ),
    ] {
        let out = dir.join(format!("replay-{name}"));
        let args = SimulateArgs {
            policy: BotPolicy::Noisy { p: 0.3, seed: 0 },
            subjects: 4,
            seed: 9,
            out: out.clone(),
            engine,
            timing: TimingModel::default(),
            practice: false,
        };
        simulate(&corpus, &args).map_err(|e| e.to_string())?;
        for (path, log) in read_log_dir(&out).map_err(|e| e.to_string())? {
            logs.push((path.display().to_string(), log.to_jsonl()));
        }
    }
    let live = live_session_log(dir)?;
    logs.push(("live".into(), live.clone()));
    // an interrupted session keeps only its finished trials
    let lines: Vec<&str> = live.lines().collect();
    for keep in [1, 2, 12, 30] {
        logs.push((
            format!("live[..{keep}]"),
            lines[..keep].iter().map(|l| format!("{l}\n")).collect(),
        ));
    }

    for (name, text) in &logs {
        let log: SessionLog = parse_session_log(text).map_err(|e| format!("{name}: {e}"))?;
        let again = replay(&log, &corpus)
            .map_err(|e| format!("{name}: {e}"))?
            .to_jsonl();
        ensure!(&again == text, "{name}: replay differs");
    }
    let file = dir.join("replay-analog").join("S01.jsonl");
    srdp(&["replay", &file.to_string_lossy()])?;
    Ok(format!(
        "{} logs byte-identical (bots in 3 engine configs, live, truncated)",
        logs.len()
    ))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("action-count law", Box::new(action_count_law)),
        ("oracle completeness", Box::new(oracle_completeness)),
        ("garden-path traces", Box::new(garden_path_traces)),
        ("plan law", Box::new(plan_law)),
        ("regression fidelity", Box::new(regression_fidelity)),
        ("end-to-end simulation", Box::new(|| end_to_end(dir.path()))),
        (
            "replay determinism",
            Box::new(|| replay_determinism(dir.path())),
        ),
    ];
    let mut failed = Vec::new();
    for (name, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(*name);
            }
        }
    }
    if failed != KNOWN_FAILURES {
        eprintln!("unexpected acceptance outcome: failing {failed:?}, known {KNOWN_FAILURES:?}");
        std::process::exit(1);
    }
}
