use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    CommitMode, EngineConfig, Input, InputEvent, Phase, Session, SessionError, SessionHeader,
    SessionLog, SessionPlan,
};
use crate::corpus::CorpusFile;
use crate::transition::{oracle_judgment, Judgment};

/// Synthetic player used for headless sessions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum BotPolicy {
    Oracle,
    /// Oracle answers, each flipped independently with probability `p`.
    Noisy {
        p: f64,
        seed: u64,
    },
    Constant {
        judgment: Judgment,
    },
}

impl BotPolicy {
    /// Recorded in the session header as `bot:<name>`.
    pub fn agent_name(&self) -> String {
        match self {
            BotPolicy::Oracle => "bot:oracle".into(),
            BotPolicy::Noisy { p, .. } => format!("bot:noisy({p})"),
            BotPolicy::Constant {
                judgment: Judgment::Shift,
            } => "bot:shift".into(),
            BotPolicy::Constant {
                judgment: Judgment::Reduce,
            } => "bot:reduce".into(),
        }
    }
}

impl std::str::FromStr for BotPolicy {
    type Err = String;

    /// `oracle`, `shift`, `reduce`, or `noisy:<p>` (seed filled in later).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BotPolicy::Oracle),
            "shift" => Ok(BotPolicy::Constant {
                judgment: Judgment::Shift,
            }),
            "reduce" => Ok(BotPolicy::Constant {
                judgment: Judgment::Reduce,
            }),
            other => {
                let p = other
                    .strip_prefix("noisy:")
                    .ok_or_else(|| format!("unknown policy `{other}`"))?
                    .parse::<f64>()
                    .map_err(|e| format!("bad flip probability: {e}"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("flip probability {p} outside [0, 1]"));
                }
                Ok(BotPolicy::Noisy { p, seed: 0 })
            }
        }
    }
}

/// Response timing of a synthetic player.
///
/// Think time before each judgment is normal with the given mean and
/// standard deviation plus `per_stack_ms` for every phrase on the stack,
/// floored at `min_think_ms`. With probability `hesitation_p` the bot first
/// leans the wrong way for `hesitation_ms`, which shows up as direction
/// alternations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    pub seed: u64,
    pub think_mean_ms: f64,
    pub think_sd_ms: f64,
    pub per_stack_ms: f64,
    pub min_think_ms: u64,
    pub hesitation_p: f64,
    pub hesitation_ms: u64,
    pub jump_delay_ms: u64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            seed: 0,
            think_mean_ms: 1100.0,
            think_sd_ms: 350.0,
            per_stack_ms: 180.0,
            min_think_ms: 150,
            hesitation_p: 0.15,
            hesitation_ms: 120,
            jump_delay_ms: 1500,
        }
    }
}

/// Plays a whole plan through the engine with synthetic timestamps.
pub fn run_bot_session(
    corpus: &CorpusFile,
    plan: &SessionPlan,
    policy: BotPolicy,
    timing: TimingModel,
    config: EngineConfig,
) -> Result<SessionLog, SessionError> {
    let header = SessionHeader::new(policy.agent_name(), plan.clone(), config);
    let mut session = Session::new(header, corpus)?;
    let mut timing_rng = ChaCha8Rng::seed_from_u64(timing.seed);
    let mut flip_rng = match policy {
        BotPolicy::Noisy { seed, .. } => ChaCha8Rng::seed_from_u64(seed),
        _ => ChaCha8Rng::seed_from_u64(0),
    };
    let think = Normal::new(timing.think_mean_ms, timing.think_sd_ms.max(0.0))
        .map_err(|e| SessionError::Config(format!("timing model: {e}")))?;

    session.start_trial(0)?;
    loop {
        match session.phase() {
            Phase::SessionDone => break,
            Phase::Idle => unreachable!("session was started"),
            Phase::TrialDone { at } => {
                session.feed_input(InputEvent::new(at + timing.jump_delay_ms, Input::Jump))?;
            }
            Phase::Animating { until } => {
                session.tick(until)?;
            }
            Phase::AwaitJudgment { since } => {
                let state = session.parser_state().expect("active trial");
                let gold = &session.current_record().expect("active trial").heads;
                let oracle = oracle_judgment(state, gold)?;
                let judgment = match policy {
                    BotPolicy::Oracle => oracle,
                    BotPolicy::Noisy { p, .. } => {
                        if flip_rng.random_bool(p) {
                            oracle.flipped()
                        } else {
                            oracle
                        }
                    }
                    BotPolicy::Constant { judgment } => judgment,
                };
                let depth = state.stack().len() as f64;
                let ms = think.sample(&mut timing_rng) + timing.per_stack_ms * depth;
                let mut t = since + (ms.max(0.0).round() as u64).max(timing.min_think_ms);

                let (toward, away) = match judgment {
                    Judgment::Reduce => (Input::Right, Input::Left),
                    Judgment::Shift => (Input::Left, Input::Right),
                };
                let hesitate = timing_rng.random_bool(timing.hesitation_p.clamp(0.0, 1.0));
                if hesitate && config.commit_mode == CommitMode::Analog {
                    session.feed_input(InputEvent::new(t, away))?;
                    t += timing.hesitation_ms;
                }
                session.feed_input(InputEvent::new(t, toward))?;
                if let Some(deadline) = session.next_deadline() {
                    session.tick(deadline)?;
                }
                let now = session.now();
                session.feed_input(InputEvent::new(now, Input::Neutral))?;
            }
        }
    }
    Ok(session.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixture_corpus;
    use crate::session::{build_plan, replay, Verdict};
    use crate::transition::{ActionKind, SentenceType};

    fn run(policy: BotPolicy, seed: u64) -> SessionLog {
        let corpus = fixture_corpus();
        let plan = build_plan(&corpus, "S01", seed).unwrap();
        let timing = TimingModel {
            seed,
            ..Default::default()
        };
        run_bot_session(&corpus, &plan, policy, timing, EngineConfig::default()).unwrap()
    }

    #[test]
    fn oracle_session_is_all_ok() {
        let log = run(BotPolicy::Oracle, 1);
        assert!(log.is_complete());
        assert_eq!(log.trials.len(), 40);
        assert!(log.trials.iter().all(|t| t.verdict == Verdict::Ok));
        assert_eq!(log.header.agent, "bot:oracle");
    }

    #[test]
    fn noisy_zero_matches_oracle() {
        let oracle = run(BotPolicy::Oracle, 4);
        let noisy = run(BotPolicy::Noisy { p: 0.0, seed: 9 }, 4);
        assert_eq!(oracle.trials, noisy.trials);
    }

    #[test]
    fn noisy_one_is_anti_oracle() {
        let oracle = run(BotPolicy::Oracle, 5);
        let anti = run(BotPolicy::Noisy { p: 1.0, seed: 9 }, 5);
        for (o, a) in oracle.trials.iter().zip(&anti.trials) {
            let oj: Vec<ActionKind> = o
                .actions
                .iter()
                .map(|x| x.kind)
                .filter(|k| k.is_judged())
                .collect();
            let aj: Vec<ActionKind> = a
                .actions
                .iter()
                .map(|x| x.kind)
                .filter(|k| k.is_judged())
                .collect();
            if let (Some(first_o), Some(first_a)) = (oj.first(), aj.first()) {
                assert_ne!(first_o, first_a);
                assert_eq!(a.verdict, Verdict::Ng, "{}", a.sentence_id);
            }
        }
    }

    #[test]
    fn constant_shift_fails_ctrl() {
        let log = run(
            BotPolicy::Constant {
                judgment: Judgment::Shift,
            },
            2,
        );
        for t in log
            .trials
            .iter()
            .filter(|t| t.category == SentenceType::Ctrl)
        {
            assert_eq!(t.verdict, Verdict::Ng);
        }
    }

    #[test]
    fn bot_logs_replay_exactly() {
        for policy in [BotPolicy::Oracle, BotPolicy::Noisy { p: 0.3, seed: 2 }] {
            let log = run(policy, 11);
            let again = replay(&log, &fixture_corpus()).unwrap();
            assert_eq!(again.to_jsonl(), log.to_jsonl());
        }
    }

    #[test]
    fn deterministic_given_seeds() {
        let a = run(BotPolicy::Noisy { p: 0.3, seed: 2 }, 6).to_jsonl();
        let b = run(BotPolicy::Noisy { p: 0.3, seed: 2 }, 6).to_jsonl();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_names_parse() {
        assert_eq!("oracle".parse::<BotPolicy>().unwrap(), BotPolicy::Oracle);
        assert_eq!(
            "noisy:0.3".parse::<BotPolicy>().unwrap(),
            BotPolicy::Noisy { p: 0.3, seed: 0 }
        );
        assert!("noisy:2".parse::<BotPolicy>().is_err());
        assert!("random".parse::<BotPolicy>().is_err());
    }
}
