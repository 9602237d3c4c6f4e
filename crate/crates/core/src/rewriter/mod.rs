//! Reference rewriters driven by a configuration tree.
//!
//! [`RewriteSession`] keeps the current term, the configuration tree and the
//! sets of discovered matches. A [`Strategy`] picks the next action: grow a
//! bud, consistency-check an ambiguous non-linear pre-match, or reduce a
//! redex. Reducing a redex prunes the tree only at the rewritten position, so
//! matching work elsewhere in the term is kept.

mod oracle;

use std::collections::BTreeSet;
use std::time::Instant;

pub use oracle::{
    find_redex, is_normal_form, oracle_normalize, oracle_normalize_until, redexes, OracleOutcome, RewriteOrder,
};

use crate::automaton::SetAutomaton;
use crate::matcher::{
    is_fragment, matches, Configuration, ConfigurationTree, MatchError, Redex, RedexSet,
};
use crate::position::Position;
use crate::term::{TermError, TermId, TermPool};
use crate::trs::{is_consistent, RuleId, Trs};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("rule {0} has a non-linear left-hand side; use the non-linear rewriter")]
    UnsupportedRule(RuleId),
    #[error("step limit of {0} rewrite steps exhausted")]
    StepLimit(u64),
    #[error("time limit exceeded after {0} rewrite steps")]
    Deadline(u64),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub rewrite_steps: u64,
    pub symbol_inspections: u64,
    pub consistency_checks: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Grow(Configuration),
    Check(Redex),
    Reduce(Redex),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Grow,
    Check,
    Reduce,
}

/// One executed action. `position` is the observed position for a grow and
/// the redex position otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub kind: StepKind,
    pub position: Position,
    pub rule: Option<RuleId>,
    pub state: Option<crate::automaton::StateId>,
}

#[derive(Clone, Debug)]
pub struct RewriteOptions {
    pub max_steps: u64,
    pub deadline: Option<Instant>,
    /// Verify the loop invariant after every action. Expensive.
    pub check_invariants: bool,
    pub trace: bool,
    /// Skip pruning after a rewrite. Only useful to show that the invariant
    /// checks catch a broken rewriter.
    #[doc(hidden)]
    pub skip_prune: bool,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions {
            max_steps: 1_000_000_000,
            deadline: None,
            check_invariants: false,
            trace: false,
            skip_prune: false,
        }
    }
}

/// Picks the next action of a session. Must return `Some` whenever the
/// session has a bud, an ambiguous match or a redex.
pub trait Strategy {
    fn select(&mut self, session: &RewriteSession<'_>) -> Option<Action>;
}

/// Built-in strategies. Ties between redexes go to the shortest, then
/// leftmost position, then the lowest rule id; buds are taken in pre-order
/// of their frame position, which follows a frame's own observations before
/// moving into its subterms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinStrategy {
    /// Reduce as soon as a redex is known; check ambiguous matches before
    /// exploring further; otherwise grow the leftmost bud.
    ReduceOnDiscovery,
    /// Grow every bud and check every ambiguous match before reducing.
    ExploreAllThenReduce,
}

impl BuiltinStrategy {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinStrategy::ReduceOnDiscovery => "reduce-on-discovery",
            BuiltinStrategy::ExploreAllThenReduce => "explore-all-then-reduce",
        }
    }
}

pub fn builtin_strategies() -> [BuiltinStrategy; 2] {
    [BuiltinStrategy::ReduceOnDiscovery, BuiltinStrategy::ExploreAllThenReduce]
}

impl Strategy for BuiltinStrategy {
    fn select(&mut self, s: &RewriteSession<'_>) -> Option<Action> {
        let redex = || {
            let a = s.reds.first();
            let b = s.enabled.first();
            match (a, b) {
                (Some(a), Some(b)) => Some(a.min(b).clone()),
                (a, b) => a.or(b).cloned(),
            }
            .map(Action::Reduce)
        };
        let check = || s.ambiguous.first().cloned().map(Action::Check);
        let bud = || s.buds.first().map(|(_, c)| Action::Grow(c.clone()));
        match self {
            BuiltinStrategy::ReduceOnDiscovery => redex().or_else(check).or_else(bud),
            BuiltinStrategy::ExploreAllThenReduce => bud().or_else(check).or_else(redex),
        }
    }
}

/// State of one normalization run.
pub struct RewriteSession<'a> {
    automaton: &'a SetAutomaton,
    trs: &'a Trs,
    options: RewriteOptions,
    term: TermId,
    tree: ConfigurationTree,
    /// Buds keyed by frame position.
    buds: BTreeSet<(Position, Configuration)>,
    reds: RedexSet,
    ambiguous: RedexSet,
    disabled: RedexSet,
    enabled: RedexSet,
    counters: Counters,
    trace: Vec<StepRecord>,
}

impl<'a> RewriteSession<'a> {
    pub fn new(automaton: &'a SetAutomaton, trs: &'a Trs, t0: TermId, options: RewriteOptions) -> Self {
        let tree = ConfigurationTree::initial(automaton);
        let root = tree.root().configuration().clone();
        RewriteSession {
            automaton,
            trs,
            options,
            term: t0,
            buds: BTreeSet::from([(root.position.clone(), root)]),
            tree,
            reds: RedexSet::new(),
            ambiguous: RedexSet::new(),
            disabled: RedexSet::new(),
            enabled: RedexSet::new(),
            counters: Counters::default(),
            trace: Vec::new(),
        }
    }

    /// Like [`new`](Self::new), but rejects non-linear rules.
    pub fn new_linear(
        automaton: &'a SetAutomaton,
        trs: &'a Trs,
        t0: TermId,
        options: RewriteOptions,
    ) -> Result<Self, RewriteError> {
        if let Some(r) = trs.rules().iter().find(|r| !r.is_linear()) {
            return Err(RewriteError::UnsupportedRule(r.id));
        }
        Ok(Self::new(automaton, trs, t0, options))
    }

    pub fn term(&self) -> TermId {
        self.term
    }

    pub fn tree(&self) -> &ConfigurationTree {
        &self.tree
    }

    pub fn buds(&self) -> impl Iterator<Item = &Configuration> {
        self.buds.iter().map(|(_, c)| c)
    }

    pub fn linear_redexes(&self) -> &RedexSet {
        &self.reds
    }

    pub fn ambiguous(&self) -> &RedexSet {
        &self.ambiguous
    }

    pub fn disabled(&self) -> &RedexSet {
        &self.disabled
    }

    pub fn enabled(&self) -> &RedexSet {
        &self.enabled
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    pub fn is_done(&self) -> bool {
        self.buds.is_empty() && self.reds.is_empty() && self.enabled.is_empty() && self.ambiguous.is_empty()
    }

    fn record(&mut self, kind: StepKind, position: Position, rule: Option<RuleId>, state: Option<crate::automaton::StateId>) {
        if self.options.trace {
            self.trace.push(StepRecord {
                kind,
                position,
                rule,
                state,
            });
        }
    }

    /// Grows bud `conf` and files the matches it reports.
    pub fn grow(&mut self, pool: &TermPool, conf: &Configuration) -> Result<(), RewriteError> {
        let o = self.tree.grow(self.automaton, pool, self.term, conf)?;
        self.counters.symbol_inspections += 1;
        self.buds.remove(&(conf.position.clone(), conf.clone()));
        for c in &o.successors {
            self.buds.insert((c.position.clone(), c.clone()));
        }
        self.reds.extend(o.linear);
        self.ambiguous.extend(o.nonlinear);
        self.record(StepKind::Grow, o.observed, None, Some(conf.state));
        Ok(())
    }

    /// Consistency-checks an ambiguous pre-match and moves it to the
    /// enabled or disabled set.
    pub fn check(&mut self, pool: &TermPool, redex: &Redex) -> Result<bool, RewriteError> {
        if !self.ambiguous.remove(redex) {
            return Err(RewriteError::Invariant(format!("{redex} is not ambiguous")));
        }
        self.counters.consistency_checks += 1;
        let sub = pool.subterm_at(self.term, &redex.position)?;
        let ok = is_consistent(pool, sub, &self.trs.rule(redex.rule).partition)?;
        if ok {
            self.enabled.insert(redex.clone());
        } else {
            self.disabled.insert(redex.clone());
        }
        self.record(StepKind::Check, redex.position.clone(), Some(redex.rule), None);
        Ok(ok)
    }

    /// Matches reported by the nodes of `ct[p]` on the current term.
    fn matches_below(&self, pool: &TermPool, p: &Position) -> Result<(RedexSet, RedexSet), RewriteError> {
        let Some(sub) = self.tree.subtree_at(self.automaton, p) else {
            return Err(RewriteError::Invariant(format!("no configuration observes {p}")));
        };
        let mut lin = RedexSet::new();
        let mut nonlin = RedexSet::new();
        for conf in sub.nodes() {
            let (l, n) = matches(self.automaton, pool, self.term, conf)?;
            lin.extend(l);
            nonlin.extend(n);
        }
        Ok((lin, nonlin))
    }

    /// Moves enabled and disabled pre-matches whose consistency may change
    /// by a rewrite at `p` back to the ambiguous set, after dropping those
    /// found below `p`. `removed` are the non-linear matches of `ct[p]`.
    pub fn update(&mut self, removed: &RedexSet, p: &Position) {
        self.enabled.retain(|r| !removed.contains(r));
        self.disabled.retain(|r| !removed.contains(r));
        let trs = self.trs;
        let affected = |r: &Redex| {
            trs.rule(r.rule)
                .partition
                .repeated()
                .flatten()
                .any(|q| r.position.concat(q).is_prefix_of(p))
        };
        let rem: Vec<Redex> = self
            .enabled
            .iter()
            .chain(self.disabled.iter())
            .filter(|r| affected(r))
            .cloned()
            .collect();
        for r in &rem {
            self.enabled.remove(r);
            self.disabled.remove(r);
        }
        self.ambiguous.retain(|r| !removed.contains(r));
        self.ambiguous.extend(rem);
    }

    /// Applies `redex`, which must be in the linear or enabled set.
    pub fn reduce(&mut self, pool: &mut TermPool, redex: &Redex) -> Result<(), RewriteError> {
        if !self.reds.contains(redex) && !self.enabled.contains(redex) {
            return Err(RewriteError::Invariant(format!("{redex} is not a known redex")));
        }
        if self.counters.rewrite_steps >= self.options.max_steps {
            return Err(RewriteError::StepLimit(self.options.max_steps));
        }
        if let Some(d) = self.options.deadline {
            if Instant::now() >= d {
                return Err(RewriteError::Deadline(self.counters.rewrite_steps));
            }
        }
        let p = &redex.position;
        let (lin, nonlin) = self.matches_below(pool, p)?;
        self.reds.retain(|r| !lin.contains(r));
        self.update(&nonlin, p);
        if self.options.skip_prune {
            self.reds.remove(redex);
            self.enabled.remove(redex);
        } else {
            let sub = self.tree.subtree_at(self.automaton, p).expect("checked above");
            for c in sub.buds() {
                self.buds.remove(&(c.position.clone(), c.clone()));
            }
            let root = sub.configuration().clone();
            self.tree.prune(self.automaton, p);
            self.buds.insert((root.position.clone(), root));
        }
        let rule = self.trs.rule(redex.rule);
        let old = pool.subterm_at(self.term, p)?;
        let Some(sigma) = pool.match_root(rule.lhs, old) else {
            return Err(RewriteError::Invariant(format!("{redex} does not match")));
        };
        let new = pool.apply_substitution(rule.rhs, &sigma)?;
        self.term = pool.replace_at(self.term, p, new)?;
        self.counters.rewrite_steps += 1;
        self.record(StepKind::Reduce, p.clone(), Some(redex.rule), None);
        Ok(())
    }

    pub fn perform(&mut self, pool: &mut TermPool, action: &Action) -> Result<(), RewriteError> {
        match action {
            Action::Grow(c) => self.grow(pool, c),
            Action::Check(r) => self.check(pool, r).map(|_| ()),
            Action::Reduce(r) => self.reduce(pool, r),
        }?;
        if self.options.check_invariants {
            self.check_invariants(pool)?;
        }
        Ok(())
    }

    /// Runs `strategy` until nothing is left to do; returns the normal form.
    pub fn run(&mut self, pool: &mut TermPool, strategy: &mut dyn Strategy) -> Result<TermId, RewriteError> {
        while !self.is_done() {
            let Some(action) = strategy.select(self) else {
                return Err(RewriteError::Invariant("strategy returned no action".into()));
            };
            self.perform(pool, &action)?;
        }
        Ok(self.term)
    }

    /// Checks that the tree is a fragment of the completed tree of the
    /// current term, that the match sets equal the matches of its nodes,
    /// that they are disjoint, and that enabled and disabled pre-matches
    /// carry the right verdict.
    pub fn check_invariants(&self, pool: &TermPool) -> Result<(), RewriteError> {
        let fail = |m: String| Err(RewriteError::Invariant(m));
        let full = ConfigurationTree::completed(self.automaton, pool, self.term)?;
        if !is_fragment(&self.tree, &full) {
            return fail("configuration tree is not a fragment of the completed tree".into());
        }
        let mut lin = RedexSet::new();
        let mut nonlin = RedexSet::new();
        for conf in self.tree.nodes() {
            let (l, n) = matches(self.automaton, pool, self.term, conf)?;
            lin.extend(l);
            nonlin.extend(n);
        }
        if lin != self.reds {
            return fail(format!("linear redexes {:?} differ from node matches {:?}", self.reds, lin));
        }
        let parts = [&self.ambiguous, &self.disabled, &self.enabled];
        let union: RedexSet = parts.iter().flat_map(|s| s.iter().cloned()).collect();
        if union != nonlin {
            return fail("non-linear pre-matches differ from node matches".into());
        }
        if union.len() != parts.iter().map(|s| s.len()).sum::<usize>() || self.reds.iter().any(|r| union.contains(r)) {
            return fail("match sets are not disjoint".into());
        }
        for (set, want) in [(&self.enabled, true), (&self.disabled, false)] {
            for r in set {
                let sub = pool.subterm_at(self.term, &r.position)?;
                if is_consistent(pool, sub, &self.trs.rule(r.rule).partition)? != want {
                    return fail(format!("{r} has a stale consistency verdict"));
                }
            }
        }
        let bud_set: BTreeSet<&Configuration> = self.tree.buds().into_iter().collect();
        if bud_set != self.buds.iter().map(|(_, c)| c).collect() {
            return fail("bud index out of sync".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteOutcome {
    pub term: TermId,
    pub counters: Counters,
    pub trace: Vec<StepRecord>,
}

fn finish(mut s: RewriteSession<'_>, pool: &mut TermPool, strategy: &mut dyn Strategy) -> Result<RewriteOutcome, RewriteError> {
    let term = s.run(pool, strategy)?;
    Ok(RewriteOutcome {
        term,
        counters: s.counters,
        trace: std::mem::take(&mut s.trace),
    })
}

/// Normalizes `t0` with a left-linear TRS.
pub fn normalize(
    automaton: &SetAutomaton,
    trs: &Trs,
    pool: &mut TermPool,
    t0: TermId,
    strategy: &mut dyn Strategy,
    options: RewriteOptions,
) -> Result<RewriteOutcome, RewriteError> {
    let s = RewriteSession::new_linear(automaton, trs, t0, options)?;
    finish(s, pool, strategy)
}

/// Normalizes `t0`; non-linear pre-matches are consistency-checked before
/// they may be reduced.
pub fn normalize_nonlinear(
    automaton: &SetAutomaton,
    trs: &Trs,
    pool: &mut TermPool,
    t0: TermId,
    strategy: &mut dyn Strategy,
    options: RewriteOptions,
) -> Result<RewriteOutcome, RewriteError> {
    let s = RewriteSession::new(automaton, trs, t0, options);
    finish(s, pool, strategy)
}
