//! Running a set automaton over a term.
//!
//! [`eval`] finds all redexes of a term in one pass. The configuration tree
//! API records the same exploration incrementally so that a rewriter can
//! collapse just the part of it invalidated by a rewrite step.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::automaton::{Announcement, SetAutomaton, StateId};
use crate::position::Position;
use crate::term::{FnId, TermId, TermPool};
use crate::trs::RuleId;

/// A state together with the absolute position of its frame.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Configuration {
    pub state: StateId,
    pub position: Position,
}

impl Configuration {
    pub fn new(state: StateId, position: Position) -> Self {
        Configuration { state, position }
    }

    /// `p.L(s)`, the position this configuration inspects.
    pub fn observed(&self, automaton: &SetAutomaton) -> Position {
        self.position.concat(automaton.label(self.state))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.state, self.position)
    }
}

/// `(ℓ → r)@p`. Ordered shortest position first, then leftmost, then by rule.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Redex {
    pub rule: RuleId,
    pub position: Position,
}

impl Ord for Redex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.position
            .cmp_shortlex(&other.position)
            .then(self.rule.cmp(&other.rule))
    }
}

impl PartialOrd for Redex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Redex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.rule, self.position)
    }
}

pub type RedexSet = BTreeSet<Redex>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("internal inconsistency: automaton observes position {0}, which is not in the term")]
    OutOfDomain(Position),
    #[error("term is not ground: variable at position {0}")]
    NotGround(Position),
    #[error("configuration tree has no bud {0}")]
    NoSuchBud(Configuration),
}

fn inspect(pool: &TermPool, t: TermId, position: &Position) -> Result<FnId, MatchError> {
    let u = pool
        .subterm_at(t, position)
        .map_err(|_| MatchError::OutOfDomain(position.clone()))?;
    pool.head_fn(u).ok_or_else(|| MatchError::NotGround(position.clone()))
}

fn absolute<'a>(base: &Position, outputs: &'a [Announcement]) -> impl Iterator<Item = Redex> + 'a {
    let base = base.clone();
    outputs.iter().map(move |o| Redex {
        rule: o.rule,
        position: base.concat(&o.position),
    })
}

/// One symbol observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub configuration: Configuration,
    pub observed: Position,
    pub symbol: FnId,
    pub successors: Vec<Configuration>,
    pub linear: Vec<Redex>,
    pub nonlinear: Vec<Redex>,
}

impl Observation {
    /// Renders one trace row: configuration, observed symbol, new buds and
    /// reported matches.
    pub fn row(&self, pool: &TermPool) -> String {
        let sym = pool.signature().fn_name(self.symbol);
        let buds: Vec<String> = self.successors.iter().map(|c| c.to_string()).collect();
        let outs: Vec<String> = self
            .linear
            .iter()
            .chain(&self.nonlinear)
            .map(|r| r.to_string())
            .collect();
        format!(
            "{}\t{}\t{}\t{{{}}}\t{{{}}}",
            self.configuration,
            self.observed,
            sym,
            buds.join(","),
            outs.join(",")
        )
    }
}

/// Inspects the symbol observed by `conf` and returns its successors and
/// the matches it reports.
pub fn observe(
    automaton: &SetAutomaton,
    pool: &TermPool,
    t: TermId,
    conf: &Configuration,
) -> Result<Observation, MatchError> {
    let observed = conf.observed(automaton);
    let f = inspect(pool, t, &observed)?;
    let tr = automaton.transition(conf.state, f);
    let mut successors: Vec<Configuration> = tr
        .branches
        .iter()
        .map(|b| Configuration::new(b.target, conf.position.concat(&b.offset)))
        .collect();
    successors.sort();
    Ok(Observation {
        configuration: conf.clone(),
        observed,
        symbol: f,
        successors,
        linear: absolute(&conf.position, &tr.out_linear).collect(),
        nonlinear: absolute(&conf.position, &tr.out_nonlinear).collect(),
    })
}

/// `matches_L` and `matches_NL` of one configuration.
pub fn matches(
    automaton: &SetAutomaton,
    pool: &TermPool,
    t: TermId,
    conf: &Configuration,
) -> Result<(RedexSet, RedexSet), MatchError> {
    let o = observe(automaton, pool, t, conf)?;
    Ok((o.linear.into_iter().collect(), o.nonlinear.into_iter().collect()))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalResult {
    pub linear: RedexSet,
    /// Pre-matches of non-linear patterns; they still need a consistency check.
    pub nonlinear: RedexSet,
    pub inspections: u64,
    pub trace: Vec<Observation>,
}

impl EvalResult {
    pub fn all(&self) -> RedexSet {
        self.linear.union(&self.nonlinear).cloned().collect()
    }
}

/// Runs the automaton from `(s0, ε)` until no configurations remain.
/// Every position of `t` is inspected exactly once.
pub fn eval(automaton: &SetAutomaton, pool: &TermPool, t: TermId) -> Result<EvalResult, MatchError> {
    eval_with(automaton, pool, t, false)
}

pub fn eval_with(
    automaton: &SetAutomaton,
    pool: &TermPool,
    t: TermId,
    trace: bool,
) -> Result<EvalResult, MatchError> {
    let mut out = EvalResult::default();
    let mut work = vec![Configuration::new(automaton.initial(), Position::root())];
    while let Some(conf) = work.pop() {
        let o = observe(automaton, pool, t, &conf)?;
        out.inspections += 1;
        out.linear.extend(o.linear.iter().cloned());
        out.nonlinear.extend(o.nonlinear.iter().cloned());
        work.extend(o.successors.iter().rev().cloned());
        if trace {
            out.trace.push(o);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct Slot {
    conf: Configuration,
    /// `None` for a bud.
    children: Option<Vec<u32>>,
    parent: Option<u32>,
}

/// A configuration tree: buds are unexplored configurations, nodes are
/// explored ones with their successors. Stored in an arena so that deep
/// trees need no recursion; slot 0 is the root.
#[derive(Clone, Debug)]
pub struct ConfigurationTree {
    slots: Vec<Slot>,
    free: Vec<u32>,
}

/// Borrowed view of one subtree.
#[derive(Clone, Copy)]
pub struct TreeRef<'a> {
    tree: &'a ConfigurationTree,
    slot: u32,
}

impl<'a> TreeRef<'a> {
    pub fn configuration(&self) -> &'a Configuration {
        &self.tree.slots[self.slot as usize].conf
    }

    pub fn is_bud(&self) -> bool {
        self.tree.slots[self.slot as usize].children.is_none()
    }

    pub fn children(&self) -> impl Iterator<Item = TreeRef<'a>> + 'a {
        let tree = self.tree;
        tree.slots[self.slot as usize]
            .children
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(move |&slot| TreeRef { tree, slot })
    }

    /// All subtrees in pre-order, this one first.
    pub fn descendants(&self) -> Vec<TreeRef<'a>> {
        let mut out = Vec::new();
        let mut stack = vec![*self];
        while let Some(r) = stack.pop() {
            out.push(r);
            let kids: Vec<_> = r.children().collect();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    /// Explored configurations of this subtree.
    pub fn nodes(&self) -> Vec<&'a Configuration> {
        self.descendants()
            .into_iter()
            .filter(|r| !r.is_bud())
            .map(|r| r.configuration())
            .collect()
    }

    pub fn buds(&self) -> Vec<&'a Configuration> {
        self.descendants()
            .into_iter()
            .filter(|r| r.is_bud())
            .map(|r| r.configuration())
            .collect()
    }
}

impl ConfigurationTree {
    pub fn bud(conf: Configuration) -> Self {
        ConfigurationTree {
            slots: vec![Slot {
                conf,
                children: None,
                parent: None,
            }],
            free: Vec::new(),
        }
    }

    /// `bud(s0, ε)`.
    pub fn initial(automaton: &SetAutomaton) -> Self {
        Self::bud(Configuration::new(automaton.initial(), Position::root()))
    }

    pub fn root(&self) -> TreeRef<'_> {
        TreeRef { tree: self, slot: 0 }
    }

    pub fn nodes(&self) -> Vec<&Configuration> {
        self.root().nodes()
    }

    pub fn buds(&self) -> Vec<&Configuration> {
        self.root().buds()
    }

    pub fn num_nodes(&self) -> usize {
        self.slots.len() - self.free.len()
    }

    /// Slots whose configuration position is a prefix of `p`: the only
    /// candidates for observing `p` or anything above it.
    fn along(&self, p: &Position) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![0u32];
        while let Some(i) = stack.pop() {
            let slot = &self.slots[i as usize];
            if !slot.conf.position.is_prefix_of(p) {
                continue;
            }
            out.push(i);
            if let Some(kids) = &slot.children {
                stack.extend(kids.iter().rev());
            }
        }
        out
    }

    fn find_bud(&self, conf: &Configuration) -> Option<u32> {
        self.along(&conf.position).into_iter().find(|&i| {
            let s = &self.slots[i as usize];
            s.children.is_none() && &s.conf == conf
        })
    }

    /// `ct[p]`: the subtree whose root configuration observes `p`.
    pub fn subtree_at(&self, automaton: &SetAutomaton, p: &Position) -> Option<TreeRef<'_>> {
        self.along(p)
            .into_iter()
            .find(|&i| &self.slots[i as usize].conf.observed(automaton) == p)
            .map(|slot| TreeRef { tree: self, slot })
    }

    fn alloc(&mut self, slot: Slot) -> u32 {
        match self.free.pop() {
            Some(i) => {
                self.slots[i as usize] = slot;
                i
            }
            None => {
                self.slots.push(slot);
                (self.slots.len() - 1) as u32
            }
        }
    }

    /// Expands the bud `conf` by one observation on `t`. Returns the
    /// observation, including the matches the new node reports.
    pub fn grow(
        &mut self,
        automaton: &SetAutomaton,
        pool: &TermPool,
        t: TermId,
        conf: &Configuration,
    ) -> Result<Observation, MatchError> {
        let i = self
            .find_bud(conf)
            .ok_or_else(|| MatchError::NoSuchBud(conf.clone()))?;
        let o = observe(automaton, pool, t, conf)?;
        let kids: Vec<u32> = o
            .successors
            .iter()
            .map(|c| {
                self.alloc(Slot {
                    conf: c.clone(),
                    children: None,
                    parent: Some(i),
                })
            })
            .collect();
        self.slots[i as usize].children = Some(kids);
        Ok(o)
    }

    /// Persistent variant of [`grow`](Self::grow).
    pub fn grown(
        &self,
        automaton: &SetAutomaton,
        pool: &TermPool,
        t: TermId,
        conf: &Configuration,
    ) -> Result<ConfigurationTree, MatchError> {
        let mut ct = self.clone();
        ct.grow(automaton, pool, t, conf)?;
        Ok(ct)
    }

    fn release_below(&mut self, i: u32) {
        let mut stack = self.slots[i as usize].children.take().unwrap_or_default();
        while let Some(j) = stack.pop() {
            if let Some(kids) = self.slots[j as usize].children.take() {
                stack.extend(kids);
            }
            self.slots[j as usize].parent = None;
            self.free.push(j);
        }
    }

    /// Collapses every node observing `q` back to a bud.
    pub fn prune(&mut self, automaton: &SetAutomaton, q: &Position) {
        for i in self.along(q) {
            let slot = &self.slots[i as usize];
            if slot.children.is_some() && &slot.conf.observed(automaton) == q {
                self.release_below(i);
            }
        }
    }

    /// Persistent variant of [`prune`](Self::prune).
    pub fn pruned(&self, automaton: &SetAutomaton, q: &Position) -> ConfigurationTree {
        let mut ct = self.clone();
        ct.prune(automaton, q);
        ct
    }

    /// The completed configuration tree of `t`: every bud grown.
    pub fn completed(automaton: &SetAutomaton, pool: &TermPool, t: TermId) -> Result<Self, MatchError> {
        let mut ct = Self::initial(automaton);
        ct.complete(automaton, pool, t)?;
        Ok(ct)
    }

    /// Grows buds until none remain. Returns the number of inspections.
    pub fn complete(&mut self, automaton: &SetAutomaton, pool: &TermPool, t: TermId) -> Result<u64, MatchError> {
        let mut n = 0;
        let mut stack: Vec<u32> = self
            .root()
            .descendants()
            .iter()
            .filter(|r| r.is_bud())
            .map(|r| r.slot)
            .collect();
        while let Some(i) = stack.pop() {
            let conf = self.slots[i as usize].conf.clone();
            let o = observe(automaton, pool, t, &conf)?;
            n += 1;
            let kids: Vec<u32> = o
                .successors
                .into_iter()
                .map(|c| {
                    self.alloc(Slot {
                        conf: c,
                        children: None,
                        parent: Some(i),
                    })
                })
                .collect();
            stack.extend(kids.iter().copied());
            self.slots[i as usize].children = Some(kids);
        }
        Ok(n)
    }

    /// The configuration of the parent of the subtree rooted at `r`.
    pub fn parent_of(&self, r: TreeRef<'_>) -> Option<&Configuration> {
        self.slots[r.slot as usize]
            .parent
            .map(|p| &self.slots[p as usize].conf)
    }
}

/// `a ⊑ b`: `a` is obtained from `b` by collapsing some nodes to buds.
pub fn is_fragment(a: &ConfigurationTree, b: &ConfigurationTree) -> bool {
    let mut stack = vec![(a.root(), b.root())];
    while let Some((x, y)) = stack.pop() {
        if x.configuration() != y.configuration() {
            return false;
        }
        if x.is_bud() {
            continue;
        }
        if y.is_bud() {
            return false;
        }
        let xs: Vec<_> = x.children().collect();
        let ys: Vec<_> = y.children().collect();
        if xs.len() != ys.len() {
            return false;
        }
        stack.extend(xs.into_iter().zip(ys));
    }
    true
}

/// Structural equality; children are kept in canonical order.
impl PartialEq for ConfigurationTree {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(self.root(), other.root())];
        while let Some((x, y)) = stack.pop() {
            if x.configuration() != y.configuration() || x.is_bud() != y.is_bud() {
                return false;
            }
            let xs: Vec<_> = x.children().collect();
            let ys: Vec<_> = y.children().collect();
            if xs.len() != ys.len() {
                return false;
            }
            stack.extend(xs.into_iter().zip(ys));
        }
        true
    }
}

impl Eq for ConfigurationTree {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{construct, ConstructionOptions};
    use crate::syntax::parse_term;
    use crate::trs::{parse_trs, Trs};

    const NESTED_ADD: &str = "symbols: +:2 s:1 0:0\nvars: x y z\nrules:\n+(+(x,s(y)),s(z)) -> 0\n";

    fn p(s: &str) -> Position {
        s.parse().unwrap()
    }

    fn setup(text: &str, term: &str) -> (TermPool, Trs, SetAutomaton, TermId) {
        let (mut pool, trs) = parse_trs(text).unwrap();
        let a = construct(&pool, &trs, &ConstructionOptions::default()).unwrap();
        let t = parse_term(&mut pool, term).unwrap();
        (pool, trs, a, t)
    }

    #[test]
    fn example_one_eval() {
        let (pool, _, a, t) = setup(NESTED_ADD, "+(+(+(0,s(0)),s(0)),s(0))");
        let r = eval(&a, &pool, t).unwrap();
        let got: Vec<Position> = r.linear.iter().map(|x| x.position.clone()).collect();
        assert_eq!(got, vec![p("ε"), p("1")]);
        assert!(r.nonlinear.is_empty());
        assert_eq!(r.inspections, 10);
    }

    #[test]
    fn constant_has_no_redex() {
        let (pool, _, a, t) = setup(NESTED_ADD, "0");
        let r = eval(&a, &pool, t).unwrap();
        assert!(r.all().is_empty());
        assert_eq!(r.inspections, 1);
        let ct = ConfigurationTree::completed(&a, &pool, t).unwrap();
        assert_eq!(ct.nodes().len(), 1);
        assert!(ct.buds().is_empty());
    }

    #[test]
    fn completed_tree_is_a_bijection() {
        let (pool, _, a, t) = setup(NESTED_ADD, "+(+(+(0,s(0)),s(0)),s(0))");
        let ct = ConfigurationTree::completed(&a, &pool, t).unwrap();
        let mut observed: Vec<Position> = ct.nodes().iter().map(|c| c.observed(&a)).collect();
        observed.sort();
        assert_eq!(observed, pool.domain(t));
        for q in pool.domain(t) {
            assert_eq!(ct.subtree_at(&a, &q).unwrap().configuration().observed(&a), q);
        }
    }

    #[test]
    fn grow_follows_example_one() {
        let (pool, _, a, t) = setup(NESTED_ADD, "+(+(+(0,s(0)),s(0)),s(0))");
        let mut ct = ConfigurationTree::initial(&a);
        let root = Configuration::new(a.initial(), p("ε"));
        let o = ct.grow(&a, &pool, t, &root).unwrap();
        assert_eq!(o.successors.len(), 1);
        assert_eq!(o.successors[0].position, p("ε"));
        let s1 = o.successors[0].clone();
        let o = ct.grow(&a, &pool, t, &s1).unwrap();
        let positions: Vec<Position> = o.successors.iter().map(|c| c.position.clone()).collect();
        assert_eq!(positions.len(), 2);
        assert!(positions.contains(&p("ε")) && positions.contains(&p("2.1")));
        assert!(ct.subtree_at(&a, &p("7")).is_none());
        assert!(matches!(ct.grow(&a, &pool, t, &root), Err(MatchError::NoSuchBud(_))));
        let full = ConfigurationTree::completed(&a, &pool, t).unwrap();
        assert!(is_fragment(&ct, &full));
        assert!(!is_fragment(&full, &ct));
    }

    #[test]
    fn prune_collapses_observer() {
        let (pool, _, a, t) = setup(NESTED_ADD, "+(+(+(0,s(0)),s(0)),s(0))");
        let full = ConfigurationTree::completed(&a, &pool, t).unwrap();
        let root = full.pruned(&a, &p("ε"));
        assert_eq!(root, ConfigurationTree::initial(&a));
        let inner = full.pruned(&a, &p("1.2"));
        assert!(is_fragment(&inner, &full));
        let lost = full.subtree_at(&a, &p("1.2")).unwrap().nodes().len();
        assert_eq!(inner.nodes().len(), full.nodes().len() - lost);
        let bud = ConfigurationTree::initial(&a);
        assert_eq!(bud.pruned(&a, &p("ε")), bud);
    }

    #[test]
    fn trace_rows() {
        let (pool, _, a, t) = setup(NESTED_ADD, "+(0,s(0))");
        let r = eval_with(&a, &pool, t, true).unwrap();
        assert_eq!(r.trace.len(), 4);
        assert!(r.trace[0].row(&pool).starts_with("(s0,ε)\tε\t+"));
    }
}
