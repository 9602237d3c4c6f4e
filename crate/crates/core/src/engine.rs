//! Depth-first outermost rewrite engine.
//!
//! The configuration tree is explored with a stack of fixed-size entries,
//! one per observation on the current root-to-bud path. A linear,
//! non-duplicating redex is applied the moment it is reported. The stack is
//! then cut back to the entry that first observed the redex position: the
//! automaton records, for each reported match, how many observations ago that
//! was. Duplicating rules, and non-linear pre-matches that are not (yet)
//! consistent, wait on a separate stack until the subtree below the entry
//! that reported them has been explored.

use std::time::Instant;

use crate::automaton::{Branch, SetAutomaton, StateId};
use crate::matcher::MatchError;
use crate::position::Position;
use crate::rewriter::{Counters, RewriteError};
use crate::term::{FnId, TermId, TermPool};
use crate::trs::{is_consistent, RuleId, Trs};

/// Depth annotation of one reported match: firing `rule` at `position` in
/// state `state` on `symbol` cuts the stack back by `depth - 1` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PruneAnnotation {
    pub state: StateId,
    pub symbol: FnId,
    pub rule: RuleId,
    pub position: Position,
    pub depth: u32,
}

/// Lists the prune depth of every output of the automaton.
pub fn constant_time_prune_support(automaton: &SetAutomaton) -> Vec<PruneAnnotation> {
    let mut out = Vec::new();
    for (state, _) in automaton.states() {
        for f in 0..automaton.num_symbols() {
            let symbol = FnId(f as u32);
            for a in automaton.transition(state, symbol).outputs() {
                out.push(PruneAnnotation {
                    state,
                    symbol,
                    rule: a.rule,
                    position: a.position.clone(),
                    depth: a.depth,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub max_steps: u64,
    pub deadline: Option<Instant>,
    /// Extra checks: the stack is a path of the completed configuration tree,
    /// a duplicating rule only copies redex-free subterms, and the result has
    /// no redex. Expensive.
    pub check_invariants: bool,
    /// Record every symbol inspection in [`EngineOutcome::inspections`].
    pub trace: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            max_steps: 1_000_000_000,
            deadline: None,
            check_invariants: false,
            trace: false,
        }
    }
}

/// One symbol inspection: the absolute position in the term as it was
/// after `steps_before` rewrites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inspection {
    pub steps_before: u64,
    pub position: Position,
    pub symbol: FnId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineOutcome {
    pub term: TermId,
    pub counters: Counters,
    /// Number of exploration passes. More than one only when a non-linear
    /// pre-match had to be dropped and the automaton does not preserve
    /// outermost order.
    pub passes: u32,
    /// Empty unless tracing was requested.
    pub inspections: Vec<Inspection>,
}

struct Entry<'a> {
    state: StateId,
    /// The subterm at this entry's frame.
    subterm: TermId,
    /// Offset from the parent frame; `None` at the root.
    offset: Option<&'a Position>,
    branches: &'a [Branch],
    next: u32,
    explored: bool,
    /// `subterm` changed and the parent has not been told yet.
    dirty: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Parked {
    Duplicating,
    NonLinear,
}

struct ParkedMatch<'a> {
    rule: RuleId,
    /// Relative to the discovering entry's frame.
    position: &'a Position,
    depth: u32,
    discovery: usize,
    kind: Parked,
}

struct Run<'a, 'p> {
    automaton: &'a SetAutomaton,
    trs: &'a Trs,
    pool: &'p mut TermPool,
    options: &'a EngineOptions,
    stack: Vec<Entry<'a>>,
    parked: Vec<ParkedMatch<'a>>,
    counters: Counters,
    dropped: bool,
    inspections: Vec<Inspection>,
}

const CLOCK_INTERVAL: u64 = 1024;

impl<'a> Run<'a, '_> {
    fn invariant(msg: String) -> RewriteError {
        RewriteError::Invariant(msg)
    }

    fn consistent(&mut self, top: usize, rule: RuleId, position: &Position) -> Result<bool, RewriteError> {
        self.counters.consistency_checks += 1;
        let sub = self.pool.subterm_at(self.stack[top].subterm, position)?;
        Ok(is_consistent(self.pool, sub, &self.trs.rule(rule).partition)?)
    }

    fn absolute(&self, top: usize) -> Position {
        let mut p = Position::root();
        for e in &self.stack[1..=top] {
            p = p.concat(e.offset.expect("only the root has no offset"));
        }
        p
    }

    fn check_clock(&self) -> Result<(), RewriteError> {
        if let Some(d) = self.options.deadline {
            if Instant::now() >= d {
                return Err(RewriteError::Deadline(self.counters.rewrite_steps));
            }
        }
        Ok(())
    }

    /// Applies `rule` at `position` (relative to entry `top`) and cuts the
    /// stack back to the entry that observed that position.
    fn apply(&mut self, top: usize, rule: RuleId, position: &Position, depth: u32) -> Result<(), RewriteError> {
        if self.counters.rewrite_steps >= self.options.max_steps {
            return Err(RewriteError::StepLimit(self.options.max_steps));
        }
        if self.counters.rewrite_steps % CLOCK_INTERVAL == 0 {
            self.check_clock()?;
        }
        if depth == 0 || depth as usize > top + 1 {
            return Err(Self::invariant(format!("match depth {depth} at stack height {}", top + 1)));
        }
        let target = top + 1 - depth as usize;
        let rule = self.trs.rule(rule);
        let old = self.pool.subterm_at(self.stack[top].subterm, position)?;
        let Some(sigma) = self.pool.match_root(rule.lhs, old) else {
            return Err(Self::invariant(format!("{} does not match at {position}", rule.id)));
        };
        if self.options.check_invariants && rule.duplicating {
            for (_, bound) in sigma.iter() {
                if !crate::rewriter::redexes(self.pool, self.trs, bound).is_empty() {
                    return Err(Self::invariant(format!("{} duplicates a subterm with a redex", rule.id)));
                }
            }
        }
        let new = self.pool.apply_substitution(rule.rhs, &sigma)?;
        self.stack[top].subterm = self.pool.replace_at(self.stack[top].subterm, position, new)?;
        // fold changes down to the target frame
        let mut rel = position.clone();
        for i in (target + 1..=top).rev() {
            let offset = self.stack[i].offset.expect("only the root has no offset");
            if self.stack[i].dirty || i == top {
                let child = self.stack[i].subterm;
                self.stack[i - 1].subterm = self.pool.replace_at(self.stack[i - 1].subterm, offset, child)?;
                self.stack[i - 1].dirty = true;
            }
            rel = offset.concat(&rel);
        }
        let t = &mut self.stack[target];
        if &rel != self.automaton.label(t.state) {
            return Err(Self::invariant(format!(
                "{} at {rel} does not cut back to the observation of {}",
                rule.id,
                self.automaton.label(t.state)
            )));
        }
        t.dirty = true;
        t.explored = false;
        t.branches = &[];
        t.next = 0;
        self.stack.truncate(target + 1);
        while self.parked.last().is_some_and(|p| p.discovery >= target) {
            self.parked.pop();
        }
        self.counters.rewrite_steps += 1;
        Ok(())
    }

    /// Inspects the symbol observed by the top entry. Returns whether a
    /// rewrite happened.
    fn explore(&mut self, top: usize) -> Result<bool, RewriteError> {
        let e = &self.stack[top];
        let automaton = self.automaton;
        let label = automaton.label(e.state);
        let observed = self
            .pool
            .subterm_at(e.subterm, label)
            .map_err(|_| Self::invariant(format!("observed position {label} is outside the frame")))?;
        self.counters.symbol_inspections += 1;
        if self.counters.symbol_inspections % (CLOCK_INTERVAL * 16) == 0 {
            self.check_clock()?;
        }
        let Some(f) = self.pool.head_fn(observed) else {
            return Err(MatchError::NotGround(self.absolute(top).concat(label)).into());
        };
        if self.options.trace {
            self.inspections.push(Inspection {
                steps_before: self.counters.rewrite_steps,
                position: self.absolute(top).concat(label),
                symbol: f,
            });
        }
        let tr = automaton.transition(e.state, f);
        {
            let e = &mut self.stack[top];
            e.explored = true;
            e.branches = &tr.branches;
            e.next = 0;
        }
        let mut waiting: Vec<ParkedMatch<'a>> = Vec::new();
        for a in &tr.out_linear {
            if !self.trs.rule(a.rule).duplicating {
                self.apply(top, a.rule, &a.position, a.depth)?;
                return Ok(true);
            }
            waiting.push(ParkedMatch {
                rule: a.rule,
                position: &a.position,
                depth: a.depth,
                discovery: top,
                kind: Parked::Duplicating,
            });
        }
        for a in &tr.out_nonlinear {
            let ok = self.consistent(top, a.rule, &a.position)?;
            if ok && !self.trs.rule(a.rule).duplicating {
                self.apply(top, a.rule, &a.position, a.depth)?;
                return Ok(true);
            }
            waiting.push(ParkedMatch {
                rule: a.rule,
                position: &a.position,
                depth: a.depth,
                discovery: top,
                kind: Parked::NonLinear,
            });
        }
        // outermost first on the stack, so innermost is applied first
        waiting.sort_by(|a, b| a.position.cmp_shortlex(b.position).then(a.rule.cmp(&b.rule)));
        self.parked.extend(waiting);
        Ok(false)
    }

    /// Debug check: the stack is a root path of the completed configuration
    /// tree of the current term.
    fn check_path(&mut self) -> Result<(), RewriteError> {
        let top = self.stack.len() - 1;
        let mut current = self.stack[top].subterm;
        for i in (1..=top).rev() {
            let offset = self.stack[i].offset.expect("only the root has no offset");
            current = self.pool.replace_at(self.stack[i - 1].subterm, offset, current)?;
        }
        let full = crate::matcher::ConfigurationTree::completed(self.automaton, self.pool, current)?;
        let nodes: std::collections::HashSet<_> = full.nodes().into_iter().cloned().collect();
        for i in 0..=top {
            let c = crate::matcher::Configuration {
                state: self.stack[i].state,
                position: self.absolute(i),
            };
            if !nodes.contains(&c) {
                return Err(Self::invariant(format!("stack entry {i} ({c:?}) is not in the completed tree")));
            }
        }
        Ok(())
    }

    /// Handles the parked matches of a fully explored entry. Returns whether
    /// a rewrite happened.
    fn unwind(&mut self, top: usize) -> Result<bool, RewriteError> {
        while self.parked.last().is_some_and(|p| p.discovery == top) {
            let p = self.parked.pop().expect("checked");
            if p.kind == Parked::NonLinear && !self.consistent(top, p.rule, p.position)? {
                self.dropped = true;
                continue;
            }
            self.apply(top, p.rule, p.position, p.depth)?;
            return Ok(true);
        }
        Ok(false)
    }

    fn pass(&mut self, t0: TermId) -> Result<TermId, RewriteError> {
        self.stack.clear();
        self.parked.clear();
        self.dropped = false;
        self.stack.push(Entry {
            state: self.automaton.initial(),
            subterm: t0,
            offset: None,
            branches: &[],
            next: 0,
            explored: false,
            dirty: false,
        });
        loop {
            if self.options.check_invariants {
                self.check_path()?;
            }
            let top = self.stack.len() - 1;
            if !self.stack[top].explored {
                self.explore(top)?;
                continue;
            }
            let e = &mut self.stack[top];
            if (e.next as usize) < e.branches.len() {
                let b = &e.branches[e.next as usize];
                e.next += 1;
                let sub = self.pool.subterm_at(e.subterm, &b.offset)?;
                self.stack.push(Entry {
                    state: b.target,
                    subterm: sub,
                    offset: Some(&b.offset),
                    branches: &[],
                    next: 0,
                    explored: false,
                    dirty: false,
                });
                continue;
            }
            if self.unwind(top)? {
                continue;
            }
            let done = self.stack.pop().expect("non-empty");
            let Some(parent) = self.stack.last_mut() else {
                return Ok(done.subterm);
            };
            if done.dirty {
                let offset = done.offset.expect("only the root has no offset");
                parent.subterm = self.pool.replace_at(parent.subterm, offset, done.subterm)?;
                parent.dirty = true;
            }
        }
    }
}

/// Normalizes `t0` by depth-first exploration, rewriting redexes as they
/// are found. The automaton must carry match depths; the outermost
/// preserving relation makes the parked-match handling exact.
pub fn rewrite_outermost(
    automaton: &SetAutomaton,
    trs: &Trs,
    pool: &mut TermPool,
    t0: TermId,
    options: &EngineOptions,
) -> Result<EngineOutcome, RewriteError> {
    if !automaton.tracks_depth() {
        return Err(RewriteError::Invariant("the automaton was built without match depths".into()));
    }
    let mut run = Run {
        automaton,
        trs,
        pool,
        options,
        stack: Vec::new(),
        parked: Vec::new(),
        counters: Counters::default(),
        dropped: false,
        inspections: Vec::new(),
    };
    let mut t = t0;
    let mut passes = 0;
    loop {
        passes += 1;
        let before = run.counters.rewrite_steps;
        t = run.pass(t)?;
        // A dropped pre-match is final only if nothing was rewritten after it
        // could have been checked; rerun to be sure.
        if !run.dropped || run.counters.rewrite_steps == before {
            break;
        }
        if automaton.relation() == crate::automaton::DependencyKind::OutermostPreserving
            && !options.check_invariants
        {
            break;
        }
    }
    if options.check_invariants && !crate::rewriter::redexes(run.pool, trs, t).is_empty() {
        return Err(RewriteError::Invariant("result still contains a redex".into()));
    }
    Ok(EngineOutcome {
        term: t,
        counters: run.counters,
        passes,
        inspections: run.inspections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{construct, ConstructionOptions, DependencyKind};
    use crate::rewriter::{oracle_normalize, RewriteOrder};
    use crate::syntax::{parse_term, to_string};
    use crate::trs::parse_trs;

    const IF_TRS: &str = "symbols: if:3 not:1 true:0 false:0
vars: x y
rules:
if(true,x,y) -> x
if(false,x,y) -> y
not(true) -> false
not(false) -> true
not(not(x)) -> x
";

    fn run(text: &str, term: &str, relation: DependencyKind) -> (TermPool, Trs, EngineOutcome, TermId) {
        let (mut pool, trs) = parse_trs(text).unwrap();
        let a = construct(&pool, &trs, &ConstructionOptions::with_relation(relation)).unwrap();
        let t = parse_term(&mut pool, term).unwrap();
        let opts = EngineOptions {
            check_invariants: true,
            trace: true,
            ..Default::default()
        };
        let out = rewrite_outermost(&a, &trs, &mut pool, t, &opts).unwrap();
        (pool, trs, out, t)
    }

    #[test]
    fn if_example() {
        for relation in [DependencyKind::OutermostPreserving, DependencyKind::Standard] {
            let (pool, _, out, _) = run(IF_TRS, "if(not(not(true)),false,true)", relation);
            assert_eq!(to_string(&pool, out.term), "false");
            assert_eq!(out.counters.symbol_inspections, 5);
            assert_eq!(out.counters.rewrite_steps, 2);
            assert_eq!(out.counters.consistency_checks, 0);
            let seen: Vec<(u64, String, &str)> = out
                .inspections
                .iter()
                .map(|i| (i.steps_before, i.position.to_string(), pool.signature().fn_name(i.symbol)))
                .collect();
            let expect = [(0, "ε", "if"), (0, "1", "not"), (0, "1.1", "not"), (1, "1", "true"), (2, "ε", "false")];
            let expect: Vec<(u64, String, &str)> = expect.iter().map(|&(n, p, f)| (n, p.to_string(), f)).collect();
            assert_eq!(seen, expect, "{relation:?}");
        }
    }

    #[test]
    fn normal_form_costs_one_inspection_per_position() {
        let nested_add = "symbols: +:2 s:1 0:0\nvars: x y z\nrules:\n+(+(x,s(y)),s(z)) -> 0\n";
        let (pool, _, out, t) = run(nested_add, "+(+(s(0),+(0,s(0))),+(s(0),0))", DependencyKind::OutermostPreserving);
        assert_eq!(out.term, t);
        assert_eq!(out.counters.symbol_inspections, pool.size(t));
        assert_eq!(out.counters.rewrite_steps, 0);
    }

    #[test]
    fn open_terms_are_rejected() {
        let (mut pool, trs) = parse_trs(IF_TRS).unwrap();
        let a = construct(&pool, &trs, &ConstructionOptions::default()).unwrap();
        let t = parse_term(&mut pool, "if(not(x),true,y)").unwrap();
        let e = rewrite_outermost(&a, &trs, &mut pool, t, &EngineOptions::default()).unwrap_err();
        assert_eq!(e, RewriteError::Match(MatchError::NotGround("1.1".parse().unwrap())));
    }

    #[test]
    fn duplicating_and_nonlinear_rules() {
        let text = "symbols: f:1 g:2 h:2 a:0 b:0 c:1
vars: x y
rules:
f(x) -> g(x,x)
g(x,x) -> h(x,a)
c(a) -> b
h(x,a) -> x
";
        for rel in [DependencyKind::OutermostPreserving, DependencyKind::Standard] {
            let (mut pool, trs, out, t) = run(text, "f(g(c(a),f(c(c(a)))))", rel);
            let want = oracle_normalize(&mut pool, &trs, t, RewriteOrder::LeftmostInnermost, 1000).unwrap();
            assert_eq!(out.term, want.term, "{}", to_string(&pool, out.term));
        }
    }

    #[test]
    fn prune_depths() {
        let (pool, trs) = parse_trs(IF_TRS).unwrap();
        let a = construct(&pool, &trs, &ConstructionOptions::default()).unwrap();
        let table = constant_time_prune_support(&a);
        let not = pool.signature().function("not").unwrap();
        // not(not(x)) completes on its second observation
        assert!(table.iter().any(|p| p.rule == RuleId(4) && p.symbol == not && p.depth == 2));
        // not(true) completes on its second observation, when true is seen
        assert!(table.iter().all(|p| p.depth >= 1));
        let plain = construct(&pool, &trs, &ConstructionOptions { track_depth: false, ..Default::default() }).unwrap();
        assert!(constant_time_prune_support(&plain).iter().all(|p| p.depth == 0));
    }
}
