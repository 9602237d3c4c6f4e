//! Set automaton construction.
//!
//! States are sets of match goals. A goal pairs a match obligation (the
//! subpatterns that still have to be observed, each at a position) with a
//! match announcement (the pattern and position reported once the obligation
//! is discharged). Transitions are computed on the fly from the initial state
//! by taking derivatives, partitioning them into independent classes and
//! lifting each class by the greatest common prefix of its announcement
//! positions.

mod dot;

use std::collections::HashMap;
use std::fmt;

pub use dot::export_dot;

use crate::position::{greatest_common_prefix, Position};
use crate::term::{FnId, TermId, TermPool};
use crate::trs::{RuleId, Trs};

/// Index of a distinct left-hand side.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PatternId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// A set of `(position, subpattern)` pairs, sorted by position. Positions
/// within one obligation are distinct.
pub type MatchObligation = Vec<(Position, TermId)>;

/// `mo ↪ pattern@position`.
///
/// `depth` counts the symbols observed since the announcement position was
/// first observed; it is zero while the goal is fresh, and stays zero when
/// depth tracking is disabled.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Goal {
    pub pattern: PatternId,
    pub position: Position,
    pub obligation: MatchObligation,
    pub depth: u32,
}

impl Goal {
    pub fn fresh(pattern: PatternId, term: TermId, position: Position) -> Goal {
        Goal {
            pattern,
            obligation: vec![(position.clone(), term)],
            position,
            depth: 0,
        }
    }

    pub fn is_root(&self) -> bool {
        self.position.is_root()
    }

    /// `ℓ@p ↪ ℓ@p` for the goal's own pattern `ℓ`.
    pub fn is_fresh(&self, patterns: &Patterns) -> bool {
        self.obligation.len() == 1
            && self.obligation[0].0 == self.position
            && self.obligation[0].1 == patterns.term(self.pattern)
    }

    pub fn obligation_positions(&self) -> impl Iterator<Item = &Position> {
        self.obligation.iter().map(|(p, _)| p)
    }
}

/// The distinct left-hand sides of a rewrite system together with the rules
/// that share each of them.
#[derive(Clone, Debug)]
pub struct Patterns {
    terms: Vec<TermId>,
    rules: Vec<Vec<RuleId>>,
    linear: Vec<bool>,
}

impl Patterns {
    pub fn from_trs(trs: &Trs) -> Patterns {
        let mut p = Patterns {
            terms: Vec::new(),
            rules: Vec::new(),
            linear: Vec::new(),
        };
        for rule in trs.rules() {
            match p.terms.iter().position(|&t| t == rule.lhs) {
                Some(i) => p.rules[i].push(rule.id),
                None => {
                    p.terms.push(rule.lhs);
                    p.rules.push(vec![rule.id]);
                    p.linear.push(rule.is_linear());
                }
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: PatternId) -> TermId {
        self.terms[id.0 as usize]
    }

    pub fn rules(&self, id: PatternId) -> &[RuleId] {
        &self.rules[id.0 as usize]
    }

    pub fn is_linear(&self, id: PatternId) -> bool {
        self.linear[id.0 as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = PatternId> {
        (0..self.terms.len() as u32).map(PatternId)
    }
}

/// Which goals of a derivative must stay together in one state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DependencyKind {
    /// Goals whose obligations share a position.
    Standard,
    /// Goals whose announcement positions are prefix-comparable. Keeps all
    /// look-ahead below a pending match in one state, so that a depth-first
    /// traversal reports outer matches before inner ones.
    OutermostPreserving,
}

/// How the observed position of a new state is chosen among the obligation
/// positions of its root goals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelPolicy {
    /// Prefer the obligation whose subpattern is smallest, then the
    /// shortest-then-leftmost position.
    SmallestSubpattern,
    /// Shortest, then leftmost position.
    Shortlex,
}

#[derive(Clone, Debug)]
pub struct ConstructionOptions {
    pub relation: DependencyKind,
    pub label_policy: LabelPolicy,
    /// Record per-goal observation depths (needed by the stack engine).
    pub track_depth: bool,
    pub max_states: usize,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            relation: DependencyKind::Standard,
            label_policy: LabelPolicy::SmallestSubpattern,
            track_depth: true,
            max_states: 1_000_000,
        }
    }
}

impl ConstructionOptions {
    pub fn with_relation(relation: DependencyKind) -> Self {
        ConstructionOptions {
            relation,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructionError {
    #[error("set automaton exceeds the state limit of {0} states; the patterns overlap too much")]
    StateLimit(usize),
    #[error("internal error: derived state {0:?} has no root goal")]
    NoRootGoal(Vec<Goal>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomatonState {
    pub goals: Vec<Goal>,
    pub label: Position,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    pub offset: Position,
    pub target: StateId,
}

/// A reported match: rule `rule` matches at `position`, relative to the
/// configuration that fired it. `depth` is the number of observations on
/// the configuration path since the match position was observed, including
/// the observation that fired it (zero without depth tracking).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Announcement {
    pub rule: RuleId,
    pub position: Position,
    pub depth: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transition {
    /// Sorted by offset, then target.
    pub branches: Vec<Branch>,
    /// Sorted shortest-position first, then by rule.
    pub out_linear: Vec<Announcement>,
    pub out_nonlinear: Vec<Announcement>,
}

impl Transition {
    pub fn is_empty(&self) -> bool {
        self.branches.is_empty() && self.out_linear.is_empty() && self.out_nonlinear.is_empty()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Announcement> {
        self.out_linear.iter().chain(self.out_nonlinear.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomatonStats {
    pub states: usize,
    pub symbols: usize,
    pub rules: usize,
    pub transition_cells: usize,
    pub branch_count: usize,
}

/// A (non-linear) set automaton: linear and non-linear outputs are kept
/// apart so the non-linear ones can be consistency-checked.
#[derive(Clone, Debug)]
pub struct SetAutomaton {
    states: Vec<AutomatonState>,
    transitions: Vec<Transition>,
    num_symbols: usize,
    num_rules: usize,
    patterns: Patterns,
    relation: DependencyKind,
    track_depth: bool,
}

static EMPTY_TRANSITION: Transition = Transition {
    branches: Vec::new(),
    out_linear: Vec::new(),
    out_nonlinear: Vec::new(),
};

impl SetAutomaton {
    pub fn initial(&self) -> StateId {
        StateId(0)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn states(&self) -> impl Iterator<Item = (StateId, &AutomatonState)> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| (StateId(i as u32), s))
    }

    pub fn state(&self, s: StateId) -> &AutomatonState {
        &self.states[s.index()]
    }

    pub fn label(&self, s: StateId) -> &Position {
        &self.states[s.index()].label
    }

    /// `δ` and the outputs for `(s, f)`. Symbols declared after construction
    /// have empty transitions.
    pub fn transition(&self, s: StateId, f: FnId) -> &Transition {
        let f = f.0 as usize;
        if f >= self.num_symbols {
            return &EMPTY_TRANSITION;
        }
        &self.transitions[s.index() * self.num_symbols + f]
    }

    pub fn patterns(&self) -> &Patterns {
        &self.patterns
    }

    pub fn relation(&self) -> DependencyKind {
        self.relation
    }

    pub fn tracks_depth(&self) -> bool {
        self.track_depth
    }

    /// Number of stored `(state, symbol)` cells.
    pub fn transition_cells(&self) -> usize {
        self.transitions.len()
    }

    pub fn stats(&self) -> AutomatonStats {
        AutomatonStats {
            states: self.states.len(),
            symbols: self.num_symbols,
            rules: self.num_rules,
            transition_cells: self.transitions.len(),
            branch_count: self.transitions.iter().map(|t| t.branches.len()).sum(),
        }
    }
}

/// `reduce(mo, f, p)`: drops the pair at `p` and adds the non-variable
/// arguments of its subpattern at `p.i`. An empty result means the goal is
/// complete.
pub fn reduce(pool: &TermPool, mo: &[(Position, TermId)], f: FnId, p: &Position) -> MatchObligation {
    let arity = pool.signature().arity(f);
    let mut out: MatchObligation = Vec::with_capacity(mo.len() + arity);
    for (q, l) in mo {
        if q != p {
            out.push((q.clone(), *l));
        } else {
            let args = pool.args(*l);
            for (i, &a) in args.iter().enumerate().take(arity) {
                if !pool.is_var(a) {
                    out.push((p.child(i as u32 + 1), a));
                }
            }
        }
    }
    out.sort();
    out
}

/// The three parts of an `f`-derivative plus the goals it completes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derivative {
    pub reduced: Vec<Goal>,
    pub unchanged: Vec<Goal>,
    pub fresh: Vec<Goal>,
    /// `(pattern, announcement position, depth)` of every completed goal.
    pub completed: Vec<(PatternId, Position, u32)>,
}

impl Derivative {
    /// Union of reduced, unchanged and fresh goals, canonically ordered.
    pub fn goals(&self) -> Vec<Goal> {
        let mut all: Vec<Goal> = self
            .reduced
            .iter()
            .chain(&self.unchanged)
            .chain(&self.fresh)
            .cloned()
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

/// Computes the `f`-derivative of the goal set `goals` observed at `label`.
pub fn derivative(
    pool: &TermPool,
    patterns: &Patterns,
    goals: &[Goal],
    label: &Position,
    f: FnId,
    track_depth: bool,
) -> Derivative {
    let step = |d: u32| if track_depth { d + 1 } else { 0 };
    let mut out = Derivative::default();
    for g in goals {
        match g.obligation.binary_search_by(|(p, _)| p.cmp(label)) {
            Ok(i) => {
                if pool.head_fn(g.obligation[i].1) != Some(f) {
                    continue;
                }
                let mo = reduce(pool, &g.obligation, f, label);
                if mo.is_empty() {
                    out.completed.push((g.pattern, g.position.clone(), step(g.depth)));
                } else {
                    out.reduced.push(Goal {
                        pattern: g.pattern,
                        position: g.position.clone(),
                        obligation: mo,
                        depth: step(g.depth),
                    });
                }
            }
            Err(_) => {
                let mut g = g.clone();
                if !g.is_fresh(patterns) {
                    g.depth = step(g.depth);
                }
                out.unchanged.push(g);
            }
        }
    }
    for i in 1..=pool.signature().arity(f) as u32 {
        let q = label.child(i);
        for pat in patterns.ids() {
            out.fresh.push(Goal::fresh(pat, patterns.term(pat), q.clone()));
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Equivalence classes of the transitive closure of the chosen dependency
/// relation. Classes keep the input order of their goals and are ordered by
/// their first goal.
pub fn partition(goals: &[Goal], relation: DependencyKind) -> Vec<Vec<Goal>> {
    let mut uf = UnionFind::new(goals.len());
    match relation {
        DependencyKind::Standard => {
            let mut seen: HashMap<&Position, usize> = HashMap::new();
            for (i, g) in goals.iter().enumerate() {
                for p in g.obligation_positions() {
                    match seen.get(p) {
                        Some(&j) => uf.union(i, j),
                        None => {
                            seen.insert(p, i);
                        }
                    }
                }
            }
        }
        DependencyKind::OutermostPreserving => {
            let mut order: Vec<usize> = (0..goals.len()).collect();
            order.sort_by_key(|&i| goals[i].position.len());
            let mut seen: HashMap<Position, usize> = HashMap::new();
            for i in order {
                for q in goals[i].position.prefixes() {
                    if let Some(&j) = seen.get(&q) {
                        uf.union(i, j);
                    }
                }
                seen.entry(goals[i].position.clone()).or_insert(i);
            }
        }
    }
    let mut classes: Vec<Vec<Goal>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, g) in goals.iter().enumerate() {
        let root = uf.find(i);
        let k = *slot.entry(root).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[k].push(g.clone());
    }
    classes
}

/// Shortens every position of the class by the greatest common prefix of
/// its announcement positions. Returns the canonical goal set and the prefix.
pub fn lift(class: &[Goal]) -> (Vec<Goal>, Position) {
    let gcp = greatest_common_prefix(class.iter().map(|g| &g.position))
        .expect("classes are non-empty");
    let strip = |p: &Position| p.strip_prefix(&gcp).expect("announcement is below gcp");
    let mut goals: Vec<Goal> = class
        .iter()
        .map(|g| {
            let mut obligation: MatchObligation =
                g.obligation.iter().map(|(p, l)| (strip(p), *l)).collect();
            obligation.sort();
            Goal {
                pattern: g.pattern,
                position: strip(&g.position),
                obligation,
                depth: g.depth,
            }
        })
        .collect();
    goals.sort();
    goals.dedup();
    (goals, gcp)
}

/// Picks the position a state observes: an obligation position of a root
/// goal, chosen by `policy`.
pub fn select_label(pool: &TermPool, goals: &[Goal], policy: LabelPolicy) -> Option<Position> {
    let candidates = goals
        .iter()
        .filter(|g| g.is_root())
        .flat_map(|g| g.obligation.iter());
    match policy {
        LabelPolicy::Shortlex => candidates
            .map(|(p, _)| p)
            .min_by(|a, b| a.cmp_shortlex(b))
            .cloned(),
        LabelPolicy::SmallestSubpattern => candidates
            .min_by(|(p, l), (q, m)| {
                pool.size(*l)
                    .cmp(&pool.size(*m))
                    .then_with(|| p.cmp_shortlex(q))
            })
            .map(|(p, _)| p.clone()),
    }
}

struct Builder<'a> {
    pool: &'a TermPool,
    patterns: Patterns,
    options: &'a ConstructionOptions,
    states: Vec<AutomatonState>,
    index: HashMap<Vec<Goal>, StateId>,
}

impl Builder<'_> {
    fn intern(&mut self, goals: Vec<Goal>) -> Result<StateId, ConstructionError> {
        if let Some(&s) = self.index.get(&goals) {
            return Ok(s);
        }
        if self.states.len() >= self.options.max_states {
            return Err(ConstructionError::StateLimit(self.options.max_states));
        }
        let Some(label) = select_label(self.pool, &goals, self.options.label_policy) else {
            return Err(ConstructionError::NoRootGoal(goals));
        };
        let id = StateId(self.states.len() as u32);
        self.index.insert(goals.clone(), id);
        self.states.push(AutomatonState { goals, label });
        Ok(id)
    }

    fn announcements(&self, completed: &[(PatternId, Position, u32)]) -> (Vec<Announcement>, Vec<Announcement>) {
        let mut linear = Vec::new();
        let mut nonlinear = Vec::new();
        for (pat, pos, depth) in completed {
            let target = if self.patterns.is_linear(*pat) {
                &mut linear
            } else {
                &mut nonlinear
            };
            for &rule in self.patterns.rules(*pat) {
                target.push(Announcement {
                    rule,
                    position: pos.clone(),
                    depth: *depth,
                });
            }
        }
        let key = |a: &Announcement, b: &Announcement| {
            a.position.cmp_shortlex(&b.position).then(a.rule.cmp(&b.rule))
        };
        linear.sort_by(key);
        nonlinear.sort_by(key);
        (linear, nonlinear)
    }
}

/// Builds the set automaton of the left-hand sides of `trs` by worklist
/// exploration from the initial state.
pub fn construct(
    pool: &TermPool,
    trs: &Trs,
    options: &ConstructionOptions,
) -> Result<SetAutomaton, ConstructionError> {
    let patterns = Patterns::from_trs(trs);
    let num_symbols = pool.signature().num_functions();
    let mut b = Builder {
        pool,
        patterns,
        options,
        states: Vec::new(),
        index: HashMap::new(),
    };
    let mut initial: Vec<Goal> = b
        .patterns
        .ids()
        .map(|p| Goal::fresh(p, b.patterns.term(p), Position::root()))
        .collect();
    initial.sort();
    b.intern(initial)?;

    let mut transitions = Vec::new();
    let mut next = 0;
    while next < b.states.len() {
        let (goals, label) = {
            let s = &b.states[next];
            (s.goals.clone(), s.label.clone())
        };
        for f in 0..num_symbols {
            let f = FnId(f as u32);
            let d = derivative(pool, &b.patterns, &goals, &label, f, options.track_depth);
            let (out_linear, out_nonlinear) = b.announcements(&d.completed);
            let mut branches = Vec::new();
            for class in partition(&d.goals(), options.relation) {
                let (lifted, offset) = lift(&class);
                let target = b.intern(lifted)?;
                branches.push(Branch { offset, target });
            }
            branches.sort();
            transitions.push(Transition {
                branches,
                out_linear,
                out_nonlinear,
            });
        }
        next += 1;
    }
    Ok(SetAutomaton {
        states: b.states,
        transitions,
        num_symbols,
        num_rules: trs.len(),
        patterns: b.patterns,
        relation: options.relation,
        track_depth: options.track_depth,
    })
}

#[cfg(test)]
mod tests;
