use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Arc, GoldTree, Sentence, TransitionError};

/// The four transition kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    DefaultShift,
    DefaultReduce,
    Shift,
    Reduce,
}

impl ActionKind {
    pub fn is_judged(self) -> bool {
        matches!(self, ActionKind::Shift | ActionKind::Reduce)
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            ActionKind::DefaultShift => "DS",
            ActionKind::DefaultReduce => "DR",
            ActionKind::Shift => "SHIFT",
            ActionKind::Reduce => "REDUCE",
        }
    }
}

/// A judge's answer at a judged position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Judgment {
    /// Not attached: the queue front moves onto the stack.
    Shift,
    /// Attached: the stack top depends on the queue front.
    Reduce,
}

impl Judgment {
    pub fn flipped(self) -> Self {
        match self {
            Judgment::Shift => Judgment::Reduce,
            Judgment::Reduce => Judgment::Shift,
        }
    }

    pub fn kind(self) -> ActionKind {
        match self {
            Judgment::Shift => ActionKind::Shift,
            Judgment::Reduce => ActionKind::Reduce,
        }
    }
}

/// One executed transition with the pair it saw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub kind: ActionKind,
    pub stack_top_before: Option<usize>,
    pub queue_front_before: usize,
}

/// What the machine needs next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "pending", rename_all = "snake_case")]
pub enum Pending {
    Automatic { kind: ActionKind },
    Judged { s: usize, q: usize },
    Terminal,
}

impl Pending {
    fn name(&self) -> &'static str {
        match self {
            Pending::Automatic { .. } => "automatic",
            Pending::Judged { .. } => "judged",
            Pending::Terminal => "terminal",
        }
    }
}

/// Parser configuration `⟨stack, queue, arcs⟩` plus the action trace.
///
/// Phrases only ever leave the queue from the front, so the queue is always
/// the contiguous range `queue_front..=n` and is stored as such.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParserState {
    n: usize,
    stack: Vec<usize>,
    queue_front: usize,
    arcs: Vec<Arc>,
    trace: Vec<ActionRecord>,
}

pub fn init_state(sentence: &Sentence) -> Result<ParserState, TransitionError> {
    ParserState::new(sentence.len())
}

impl ParserState {
    /// Initial state for a sentence of `n` phrases: empty stack, full queue.
    pub fn new(n: usize) -> Result<Self, TransitionError> {
        if n < 2 {
            return Err(TransitionError::DegenerateInput(n));
        }
        Ok(ParserState {
            n,
            stack: Vec::with_capacity(n),
            queue_front: 1,
            arcs: Vec::with_capacity(n - 1),
            trace: Vec::with_capacity(2 * (n - 1)),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stack contents, bottom first.
    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    pub fn queue(&self) -> std::ops::RangeInclusive<usize> {
        self.queue_front..=self.n
    }

    pub fn queue_len(&self) -> usize {
        self.n + 1 - self.queue_front
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn trace(&self) -> &[ActionRecord] {
        &self.trace
    }

    pub fn stack_top(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    pub fn queue_front(&self) -> usize {
        self.queue_front
    }

    pub fn pending_action(&self) -> Pending {
        match (self.stack.last(), self.queue_len()) {
            (None, 1) => Pending::Terminal,
            (None, _) => Pending::Automatic {
                kind: ActionKind::DefaultShift,
            },
            (Some(_), 1) => Pending::Automatic {
                kind: ActionKind::DefaultReduce,
            },
            (Some(&s), _) => Pending::Judged {
                s,
                q: self.queue_front,
            },
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.pending_action() == Pending::Terminal
    }

    /// Applies the forced action at an automatic position.
    pub fn apply_automatic(&self) -> Result<ParserState, TransitionError> {
        let mut next = self.clone();
        next.step_automatic()?;
        Ok(next)
    }

    /// Applies a judge's answer at a judged position.
    pub fn apply_judgment(&self, judgment: Judgment) -> Result<ParserState, TransitionError> {
        let mut next = self.clone();
        next.step_judgment(judgment)?;
        Ok(next)
    }

    /// In-place variant of [`ParserState::apply_automatic`].
    pub fn step_automatic(&mut self) -> Result<ActionKind, TransitionError> {
        match self.pending_action() {
            Pending::Automatic { kind } => {
                match kind {
                    ActionKind::DefaultShift => self.shift(kind),
                    _ => self.reduce(kind),
                }
                Ok(kind)
            }
            other => Err(TransitionError::InvalidState {
                expected: "automatic",
                found: other.name(),
            }),
        }
    }

    /// In-place variant of [`ParserState::apply_judgment`].
    pub fn step_judgment(&mut self, judgment: Judgment) -> Result<ActionKind, TransitionError> {
        match self.pending_action() {
            Pending::Judged { .. } => {
                let kind = judgment.kind();
                match judgment {
                    Judgment::Shift => self.shift(kind),
                    Judgment::Reduce => self.reduce(kind),
                }
                Ok(kind)
            }
            other => Err(TransitionError::InvalidState {
                expected: "judged",
                found: other.name(),
            }),
        }
    }

    fn shift(&mut self, kind: ActionKind) {
        self.trace.push(ActionRecord {
            kind,
            stack_top_before: self.stack_top(),
            queue_front_before: self.queue_front,
        });
        self.stack.push(self.queue_front);
        self.queue_front += 1;
    }

    fn reduce(&mut self, kind: ActionKind) {
        let s = self.stack.pop().expect("reduce with empty stack");
        self.trace.push(ActionRecord {
            kind,
            stack_top_before: Some(s),
            queue_front_before: self.queue_front,
        });
        self.arcs.push(Arc::new(s, self.queue_front));
    }

    /// Head array of the (possibly partial) parse.
    pub fn heads(&self) -> GoldTree {
        GoldTree::from_arcs(&self.arcs, self.n)
    }
}

/// Gold-tree oracle: REDUCE iff the stack top's gold head is the queue front.
pub fn oracle_judgment(state: &ParserState, gold: &GoldTree) -> Result<Judgment, TransitionError> {
    match state.pending_action() {
        Pending::Judged { s, q } => Ok(if gold.head_of(s) == Some(q) {
            Judgment::Reduce
        } else {
            Judgment::Shift
        }),
        other => Err(TransitionError::InvalidState {
            expected: "judged",
            found: other.name(),
        }),
    }
}

/// Per-kind action tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub default_shift: u32,
    pub default_reduce: u32,
    pub shift: u32,
    pub reduce: u32,
}

impl ActionCounts {
    pub fn from_kinds(kinds: impl IntoIterator<Item = ActionKind>) -> Self {
        let mut c = ActionCounts::default();
        for k in kinds {
            match k {
                ActionKind::DefaultShift => c.default_shift += 1,
                ActionKind::DefaultReduce => c.default_reduce += 1,
                ActionKind::Shift => c.shift += 1,
                ActionKind::Reduce => c.reduce += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u32 {
        self.default_shift + self.default_reduce + self.shift + self.reduce
    }
}

/// Outcome of a complete run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub arcs: Vec<Arc>,
    pub trace: Vec<ActionRecord>,
    pub counts: ActionCounts,
}

impl ParseResult {
    pub fn judged(&self) -> Vec<Judgment> {
        self.trace
            .iter()
            .filter_map(|r| match r.kind {
                ActionKind::Shift => Some(Judgment::Shift),
                ActionKind::Reduce => Some(Judgment::Reduce),
                _ => None,
            })
            .collect()
    }
}

/// Runs a full parse of an `n`-phrase input, asking `policy` at every judged
/// position.
pub fn run_with_policy<F>(n: usize, mut policy: F) -> Result<ParseResult, TransitionError>
where
    F: FnMut(&ParserState) -> Judgment,
{
    let mut state = ParserState::new(n)?;
    loop {
        match state.pending_action() {
            Pending::Terminal => break,
            Pending::Automatic { .. } => {
                state.step_automatic()?;
            }
            Pending::Judged { .. } => {
                let j = policy(&state);
                state.step_judgment(j)?;
            }
        }
    }
    let counts = ActionCounts::from_kinds(state.trace.iter().map(|r| r.kind));
    Ok(ParseResult {
        arcs: state.arcs,
        trace: state.trace,
        counts,
    })
}

/// Exact arc-set equality against the gold tree.
pub fn is_correct(arcs: &[Arc], gold: &GoldTree) -> Result<bool, TransitionError> {
    let n = gold.len();
    if n == 0 || arcs.len() != n - 1 {
        return Err(TransitionError::InvalidComparison(format!(
            "{} arcs against a {}-phrase gold tree",
            arcs.len(),
            n
        )));
    }
    if let Some(a) = arcs.iter().find(|a| a.head > n || a.dependent > n) {
        return Err(TransitionError::InvalidComparison(format!(
            "arc {}-{} outside a {}-phrase sentence",
            a.dependent, a.head, n
        )));
    }
    let ours: BTreeSet<&Arc> = arcs.iter().collect();
    let gold_arcs = gold.arcs();
    Ok(ours.len() == gold_arcs.len() && gold_arcs.iter().all(|a| ours.contains(a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::ROOT;

    fn ctrl() -> GoldTree {
        GoldTree::new(vec![3, 3, 4, 6, 6, ROOT])
    }

    fn eb() -> GoldTree {
        GoldTree::new(vec![6, 3, 4, 6, 6, ROOT])
    }

    fn lb() -> GoldTree {
        GoldTree::new(vec![6, 6, 4, 6, 6, ROOT])
    }

    fn state_with(n: usize, script: &[Judgment]) -> ParserState {
        let mut st = ParserState::new(n).unwrap();
        let mut script = script.iter();
        loop {
            match st.pending_action() {
                Pending::Automatic { .. } => {
                    st.step_automatic().unwrap();
                }
                Pending::Judged { .. } => match script.next() {
                    Some(&j) => {
                        st.step_judgment(j).unwrap();
                    }
                    None => return st,
                },
                Pending::Terminal => return st,
            }
        }
    }

    #[test]
    fn init() {
        let st = ParserState::new(6).unwrap();
        assert!(st.stack().is_empty());
        assert_eq!(st.queue().collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
        assert!(st.arcs().is_empty());
        assert!(st.trace().is_empty());
        assert_eq!(
            ParserState::new(2).unwrap().queue().collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(
            ParserState::new(1),
            Err(TransitionError::DegenerateInput(1))
        );
    }

    #[test]
    fn pending_positions() {
        let st = ParserState::new(6).unwrap();
        assert_eq!(
            st.pending_action(),
            Pending::Automatic {
                kind: ActionKind::DefaultShift
            }
        );
        let st = st.apply_automatic().unwrap();
        assert_eq!(st.pending_action(), Pending::Judged { s: 1, q: 2 });

        // stack=[4,5], queue=[6] via the CTRL oracle script prefix
        let st = state_with(
            6,
            &[
                Judgment::Shift,
                Judgment::Reduce,
                Judgment::Reduce,
                Judgment::Reduce,
            ],
        )
        .apply_judgment(Judgment::Shift)
        .unwrap();
        assert_eq!(st.stack(), &[4, 5]);
        assert_eq!(st.queue().collect::<Vec<_>>(), vec![6]);
        assert_eq!(
            st.pending_action(),
            Pending::Automatic {
                kind: ActionKind::DefaultReduce
            }
        );
        let st = st.apply_automatic().unwrap();
        assert_eq!(st.stack(), &[4]);
        assert_eq!(st.arcs().last(), Some(&Arc::new(5, 6)));

        let done = state_with(6, &[Judgment::Shift; 4]);
        assert!(done.stack().is_empty());
        assert_eq!(done.pending_action(), Pending::Terminal);
    }

    #[test]
    fn wrong_position_errors() {
        let st = ParserState::new(3).unwrap();
        assert!(matches!(
            st.apply_judgment(Judgment::Shift),
            Err(TransitionError::InvalidState { .. })
        ));
        let st = st.apply_automatic().unwrap();
        assert_eq!(st.stack(), &[1]);
        assert_eq!(st.queue().collect::<Vec<_>>(), vec![2, 3]);
        assert!(matches!(
            st.apply_automatic(),
            Err(TransitionError::InvalidState { .. })
        ));
        let done = state_with(3, &[Judgment::Reduce]);
        assert!(done.is_terminal());
        assert!(done.apply_automatic().is_err());
        assert!(done.apply_judgment(Judgment::Reduce).is_err());
    }

    #[test]
    fn shift_and_reduce_semantics() {
        let st = state_with(6, &[]);
        assert_eq!(st.stack(), &[1]);
        let st = st.apply_judgment(Judgment::Shift).unwrap();
        assert_eq!(st.stack(), &[1, 2]);
        assert_eq!(st.queue().collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        let st = st.apply_judgment(Judgment::Reduce).unwrap();
        assert_eq!(st.stack(), &[1]);
        assert_eq!(st.queue_front(), 3);
        assert_eq!(st.arcs(), &[Arc::new(2, 3)]);
        let rec = st.trace().last().unwrap();
        assert_eq!(rec.kind, ActionKind::Reduce);
        assert_eq!(rec.stack_top_before, Some(2));
        assert_eq!(rec.queue_front_before, 3);
        assert_eq!(st.trace()[0].stack_top_before, None);
    }

    #[test]
    fn oracle_answers() {
        let st = state_with(6, &[]);
        assert_eq!(oracle_judgment(&st, &ctrl()).unwrap(), Judgment::Shift);
        let st = st.apply_judgment(Judgment::Shift).unwrap();
        assert_eq!(oracle_judgment(&st, &ctrl()).unwrap(), Judgment::Reduce);
        // s=1, q=3 under EB
        let st = state_with(6, &[Judgment::Shift, Judgment::Reduce]);
        assert_eq!(st.pending_action(), Pending::Judged { s: 1, q: 3 });
        assert_eq!(oracle_judgment(&st, &eb()).unwrap(), Judgment::Shift);
        assert!(oracle_judgment(&ParserState::new(6).unwrap(), &eb()).is_err());
    }

    #[test]
    fn ctrl_oracle_trace() {
        let gold = ctrl();
        let r = run_with_policy(6, |s| oracle_judgment(s, &gold).unwrap()).unwrap();
        let kinds: Vec<&str> = r.trace.iter().map(|a| a.kind.abbrev()).collect();
        assert_eq!(
            kinds,
            ["DS", "SHIFT", "REDUCE", "REDUCE", "DS", "REDUCE", "DS", "SHIFT", "DR", "DR"]
        );
        let mut arcs = r.arcs.clone();
        arcs.sort();
        let mut expected = vec![
            Arc::new(2, 3),
            Arc::new(1, 3),
            Arc::new(3, 4),
            Arc::new(5, 6),
            Arc::new(4, 6),
        ];
        expected.sort();
        assert_eq!(arcs, expected);
        assert!(is_correct(&r.arcs, &gold).unwrap());
    }

    #[test]
    fn eb_and_lb_oracle_traces() {
        use Judgment::{Reduce as R, Shift as S};
        let gold = eb();
        let r = run_with_policy(6, |s| oracle_judgment(s, &gold).unwrap()).unwrap();
        assert_eq!(r.judged(), vec![S, R, S, R, S, S]);
        assert_eq!(
            &r.arcs[r.arcs.len() - 3..],
            &[Arc::new(5, 6), Arc::new(4, 6), Arc::new(1, 6)]
        );

        let gold = lb();
        let r = run_with_policy(6, |s| oracle_judgment(s, &gold).unwrap()).unwrap();
        assert_eq!(r.judged(), vec![S, S, R, S, S]);
        assert_eq!(
            &r.arcs[r.arcs.len() - 4..],
            &[
                Arc::new(5, 6),
                Arc::new(4, 6),
                Arc::new(2, 6),
                Arc::new(1, 6)
            ]
        );
        assert_eq!(
            r.counts,
            ActionCounts {
                default_shift: 1,
                default_reduce: 4,
                shift: 4,
                reduce: 1
            }
        );
    }

    #[test]
    fn constant_shift_attaches_everything_to_last() {
        let r = run_with_policy(6, |_| Judgment::Shift).unwrap();
        assert_eq!(r.trace.len(), 10);
        let mut arcs = r.arcs.clone();
        arcs.sort();
        assert_eq!(arcs, (1..=5).map(|i| Arc::new(i, 6)).collect::<Vec<_>>());
        assert!(!is_correct(&r.arcs, &ctrl()).unwrap());
    }

    #[test]
    fn two_phrase_sentence_has_no_judgments() {
        let r = run_with_policy(2, |_| panic!("no judged position expected")).unwrap();
        assert_eq!(r.counts.total(), 2);
        assert!(is_correct(&r.arcs, &GoldTree::new(vec![2, ROOT])).unwrap());
    }

    #[test]
    fn comparison_length_mismatch() {
        let r = run_with_policy(4, |_| Judgment::Shift).unwrap();
        assert!(matches!(
            is_correct(&r.arcs, &ctrl()),
            Err(TransitionError::InvalidComparison(_))
        ));
    }
}
