//! Seeded random rewrite systems and terms for differential testing.
//!
//! Most generated systems are terminating and confluent by construction:
//! every rule is strictly size-decreasing and no two left-hand sides
//! overlap, so there are no critical pairs. The rest may overlap, duplicate
//! or fail to terminate; for those only the weaker properties are checked.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use crate::automaton::{construct, ConstructionOptions, DependencyKind, SetAutomaton};
use crate::engine::{rewrite_outermost, EngineOptions};
use crate::matcher::{eval, is_fragment, ConfigurationTree, Redex, RedexSet};
use crate::rewriter::{
    builtin_strategies, find_redex, normalize, normalize_nonlinear, oracle_normalize, redexes, RewriteError,
    RewriteOptions, RewriteOrder,
};
use crate::term::{TermId, TermPool};
use crate::trs::{parse_trs, pre_matches, Trs};

const SYMBOLS: [(&str, usize); 8] = [
    ("a", 0),
    ("b", 0),
    ("c", 0),
    ("f", 1),
    ("g", 1),
    ("h", 2),
    ("k", 2),
    ("t", 3),
];
const VARIABLES: [&str; 3] = ["x", "y", "z"];

/// A first-order term over symbol and variable indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tree {
    Var(u16),
    App(u8, Vec<Tree>),
}

impl Tree {
    pub fn size(&self) -> usize {
        match self {
            Tree::Var(_) => 1,
            Tree::App(_, args) => 1 + args.iter().map(Tree::size).sum::<usize>(),
        }
    }

    fn var_counts(&self, counts: &mut BTreeMap<u16, usize>) {
        match self {
            Tree::Var(v) => *counts.entry(*v).or_default() += 1,
            Tree::App(_, args) => args.iter().for_each(|a| a.var_counts(counts)),
        }
    }

    fn subterms(&self) -> Vec<&Tree> {
        let mut out = vec![self];
        if let Tree::App(_, args) = self {
            for a in args {
                out.extend(a.subterms());
            }
        }
        out
    }

    fn rename(&self, shift: u16) -> Tree {
        match self {
            Tree::Var(v) => Tree::Var(v + shift),
            Tree::App(f, args) => Tree::App(*f, args.iter().map(|a| a.rename(shift)).collect()),
        }
    }

    fn substitute(&self, sigma: &BTreeMap<u16, Tree>) -> Tree {
        match self {
            Tree::Var(v) => sigma.get(v).cloned().unwrap_or(Tree::Var(*v)),
            Tree::App(f, args) => Tree::App(*f, args.iter().map(|a| a.substitute(sigma)).collect()),
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            Tree::Var(v) => out.push_str(VARIABLES[*v as usize]),
            Tree::App(f, args) => {
                out.push_str(SYMBOLS[*f as usize].0);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        a.write(out);
                    }
                    out.push(')');
                }
            }
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }
}

fn walk<'t>(t: &'t Tree, sigma: &'t BTreeMap<u16, Tree>) -> &'t Tree {
    let mut t = t;
    while let Tree::Var(v) = t {
        match sigma.get(v) {
            Some(u) => t = u,
            None => break,
        }
    }
    t
}

fn occurs(v: u16, t: &Tree, sigma: &BTreeMap<u16, Tree>) -> bool {
    match walk(t, sigma) {
        Tree::Var(w) => *w == v,
        Tree::App(_, args) => args.iter().any(|a| occurs(v, a, sigma)),
    }
}

/// Syntactic unifiability with occurs check.
fn unifiable(s: &Tree, t: &Tree) -> bool {
    let mut sigma: BTreeMap<u16, Tree> = BTreeMap::new();
    let mut work = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = work.pop() {
        let a = walk(&a, &sigma).clone();
        let b = walk(&b, &sigma).clone();
        match (&a, &b) {
            (Tree::Var(v), Tree::Var(w)) if v == w => {}
            (Tree::Var(v), other) | (other, Tree::Var(v)) => {
                if occurs(*v, other, &sigma) {
                    return false;
                }
                sigma.insert(*v, other.clone());
            }
            (Tree::App(f, xs), Tree::App(g, ys)) => {
                if f != g {
                    return false;
                }
                work.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
        }
    }
    true
}

/// Whether some non-variable subterm of `l1` unifies with `l2` (renamed
/// apart). The root of a rule against itself does not count.
fn overlaps(l1: &Tree, l2: &Tree, same_rule: bool) -> bool {
    let l2 = l2.rename(100);
    l1.subterms()
        .into_iter()
        .enumerate()
        .filter(|(i, s)| matches!(s, Tree::App(..)) && !(same_rule && *i == 0))
        .any(|(_, s)| unifiable(s, &l2))
}

#[derive(Clone, Debug)]
pub struct FuzzCase {
    pub rules: Vec<(Tree, Tree)>,
    pub term: Tree,
    /// Terminating and without critical pairs, hence confluent.
    pub confluent: bool,
}

impl FuzzCase {
    /// The system in the TRS file format.
    pub fn trs_text(&self) -> String {
        let mut s = String::from("symbols:");
        for (name, arity) in SYMBOLS {
            let _ = write!(s, " {name}:{arity}");
        }
        s.push_str("\nvars: x y z\nrules:\n");
        for (l, r) in &self.rules {
            let _ = writeln!(s, "{} -> {}", l.text(), r.text());
        }
        s
    }

    pub fn build(&self) -> (TermPool, Trs, TermId) {
        let (mut pool, trs) = parse_trs(&self.trs_text()).expect("generated systems are well formed");
        let t = crate::syntax::parse_term(&mut pool, &self.term.text()).expect("generated terms are well formed");
        (pool, trs, t)
    }
}

impl std::fmt::Display for FuzzCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}term: {}", self.trs_text(), self.term.text())
    }
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub max_rules: usize,
    pub max_pattern_depth: usize,
    pub max_term_size: usize,
    /// Share of cases that are confluent by construction.
    pub confluent_ratio: f64,
    /// Run the reference rewriters with pruning disabled, to check that the
    /// harness notices.
    #[doc(hidden)]
    pub skip_prune: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_rules: 6,
            max_pattern_depth: 4,
            max_term_size: 40,
            confluent_ratio: 0.75,
            skip_prune: false,
        }
    }
}

struct Gen<'c> {
    rng: ChaCha8Rng,
    cfg: &'c FuzzConfig,
}

impl Gen<'_> {
    fn symbol_with_arity_at_most(&mut self, max: usize) -> u8 {
        let choices: Vec<u8> = (0..SYMBOLS.len() as u8)
            .filter(|&i| SYMBOLS[i as usize].1 <= max)
            .collect();
        *choices.choose(&mut self.rng).expect("constants exist")
    }

    fn constant(&mut self) -> Tree {
        Tree::App(self.symbol_with_arity_at_most(0), Vec::new())
    }

    fn pattern(&mut self, depth: usize, linear: bool, used: &mut Vec<u16>) -> Tree {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf && self.rng.gen_bool(0.7) {
            let v = if !linear && !used.is_empty() && self.rng.gen_bool(0.4) {
                *used.choose(&mut self.rng).expect("non-empty")
            } else {
                match (0..VARIABLES.len() as u16).find(|v| !used.contains(v)) {
                    Some(v) => v,
                    None => return self.constant(),
                }
            };
            used.push(v);
            return Tree::Var(v);
        }
        if leaf {
            return self.constant();
        }
        let f = self.symbol_with_arity_at_most(3);
        let n = SYMBOLS[f as usize].1;
        Tree::App(f, (0..n).map(|_| self.pattern(depth - 1, linear, used)).collect())
    }

    fn lhs(&mut self, linear: bool) -> Tree {
        loop {
            let mut used = Vec::new();
            let depth = self.rng.gen_range(1..=self.cfg.max_pattern_depth);
            let f = self.symbol_with_arity_at_most(3);
            let n = SYMBOLS[f as usize].1;
            if n == 0 {
                continue;
            }
            let args = (0..n).map(|_| self.pattern(depth - 1, linear, &mut used)).collect();
            let l = Tree::App(f, args);
            if l.size() <= 12 {
                return l;
            }
        }
    }

    fn term_over(&mut self, budget: usize, leaves: &[Tree]) -> Tree {
        if budget <= 1 || self.rng.gen_bool(0.25) {
            if !leaves.is_empty() && self.rng.gen_bool(0.6) {
                return leaves.choose(&mut self.rng).expect("non-empty").clone();
            }
            return self.constant();
        }
        let f = self.symbol_with_arity_at_most((budget - 1).min(3));
        let n = SYMBOLS[f as usize].1;
        let share = (budget - 1) / n.max(1);
        Tree::App(f, (0..n).map(|_| self.term_over(share, leaves)).collect())
    }

    /// A right-hand side that makes the rule strictly size-decreasing.
    fn decreasing_rhs(&mut self, l: &Tree) -> Tree {
        let mut lc = BTreeMap::new();
        l.var_counts(&mut lc);
        let vars: Vec<Tree> = lc.keys().map(|&v| Tree::Var(v)).collect();
        for _ in 0..20 {
            let r = if self.rng.gen_bool(0.3) {
                let subs = l.subterms();
                subs[self.rng.gen_range(1..subs.len())].clone()
            } else {
                self.term_over(l.size() - 1, &vars)
            };
            let mut rc = BTreeMap::new();
            r.var_counts(&mut rc);
            if r.size() < l.size() && rc.iter().all(|(v, n)| lc.get(v).is_some_and(|m| n <= m)) {
                return r;
            }
        }
        self.constant()
    }

    fn any_rhs(&mut self, l: &Tree) -> Tree {
        let mut lc = BTreeMap::new();
        l.var_counts(&mut lc);
        let vars: Vec<Tree> = lc.keys().map(|&v| Tree::Var(v)).collect();
        self.term_over(l.size() + 2, &vars)
    }

    fn ground(&mut self, budget: usize, rules: &[(Tree, Tree)]) -> Tree {
        if budget >= 4 && !rules.is_empty() && self.rng.gen_bool(0.2) {
            let (l, _) = rules.choose(&mut self.rng).expect("non-empty").clone();
            let mut lc = BTreeMap::new();
            l.var_counts(&mut lc);
            let room = budget.saturating_sub(l.size()) / lc.len().max(1);
            let mut sigma = BTreeMap::new();
            for &v in lc.keys() {
                sigma.insert(v, self.ground(room.max(1), rules));
            }
            let planted = l.substitute(&sigma);
            if planted.size() <= budget {
                return planted;
            }
        }
        if budget <= 1 {
            return self.constant();
        }
        let f = self.symbol_with_arity_at_most((budget - 1).min(3));
        let n = SYMBOLS[f as usize].1;
        if n == 0 {
            return Tree::App(f, Vec::new());
        }
        let mut left = budget - 1;
        let mut args = Vec::with_capacity(n);
        for i in 0..n {
            let share = if i + 1 == n { left } else { self.rng.gen_range(1..=left - (n - i - 1)) };
            left -= share;
            args.push(self.ground(share, rules));
        }
        Tree::App(f, args)
    }
}

/// Generates the case for `seed`. The same seed always gives the same case.
pub fn generate(seed: u64, cfg: &FuzzConfig) -> FuzzCase {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
    };
    let confluent = g.rng.gen_bool(cfg.confluent_ratio);
    let n = g.rng.gen_range(1..=cfg.max_rules);
    let mut rules: Vec<(Tree, Tree)> = Vec::new();
    for _ in 0..n {
        for _ in 0..20 {
            let linear = g.rng.gen_bool(0.75);
            let l = g.lhs(linear);
            if confluent {
                if overlaps(&l, &l, true) || rules.iter().any(|(m, _)| overlaps(&l, m, false) || overlaps(m, &l, false)) {
                    continue;
                }
                let r = g.decreasing_rhs(&l);
                rules.push((l, r));
            } else {
                let r = g.any_rhs(&l);
                rules.push((l, r));
            }
            break;
        }
    }
    if rules.is_empty() {
        rules.push((Tree::App(3, vec![Tree::Var(0)]), Tree::Var(0)));
    }
    let size = g.rng.gen_range(1..=cfg.max_term_size);
    let term = g.ground(size, &rules);
    FuzzCase {
        rules,
        term,
        confluent,
    }
}

/// Counts and findings of one checked case.
#[derive(Clone, Debug, Default)]
pub struct CaseReport {
    /// The step budget ran out somewhere, so rewriting results were skipped.
    pub budget_exhausted: bool,
    /// The tree laws included one for an actual rewrite step.
    pub rewrite_checked: bool,
    pub violations: Vec<String>,
}

const CASE_STEPS: u64 = 5_000;
const CASE_STATES: usize = 50_000;
const CASE_SIZE: u64 = 1_000;
const CASE_TIME: Duration = Duration::from_secs(5);

/// Both oracle orders reach a normal form within the step budget without
/// any intermediate term growing past `CASE_SIZE`.
fn tame(pool: &mut TermPool, trs: &Trs, t: TermId) -> bool {
    for order in [RewriteOrder::LeftmostOutermost, RewriteOrder::LeftmostInnermost] {
        let mut normal = FxHashSet::default();
        let mut u = t;
        let mut steps = 0;
        while let Some(redex) = find_redex(pool, trs, u, order, &mut normal) {
            steps += 1;
            if steps > CASE_STEPS || pool.size(u) > CASE_SIZE {
                return false;
            }
            let rule = trs.rule(redex.rule);
            let old = pool.subterm_at(u, &redex.position).expect("redex");
            let sigma = pool.match_root(rule.lhs, old).expect("redex");
            let new = pool.apply_substitution(rule.rhs, &sigma).expect("rule variables are bound");
            u = pool.replace_at(u, &redex.position, new).expect("redex");
        }
    }
    true
}

/// Brute-force pre-matches of every rule at every position.
pub fn pre_match_set(pool: &TermPool, trs: &Trs, t: TermId) -> RedexSet {
    let mut out = RedexSet::new();
    for p in pool.domain(t) {
        let u = pool.subterm_at(t, &p).expect("own domain");
        for r in trs.rules() {
            if pre_matches(pool, u, r.lhs) {
                out.insert(Redex {
                    rule: r.id,
                    position: p.clone(),
                });
            }
        }
    }
    out
}

fn automaton(pool: &TermPool, trs: &Trs, relation: DependencyKind) -> Result<SetAutomaton, String> {
    let opts = ConstructionOptions {
        max_states: CASE_STATES,
        ..ConstructionOptions::with_relation(relation)
    };
    construct(pool, trs, &opts).map_err(|e| e.to_string())
}

/// Matching: the automaton finds exactly the brute-force (pre-)matches,
/// inspecting every position once.
pub fn check_matching(case: &FuzzCase) -> CaseReport {
    let mut report = CaseReport::default();
    let (pool, trs, t) = case.build();
    for rel in [DependencyKind::Standard, DependencyKind::OutermostPreserving] {
        let a = match automaton(&pool, &trs, rel) {
            Ok(a) => a,
            Err(e) => {
                report.violations.push(e);
                continue;
            }
        };
        match eval(&a, &pool, t) {
            Ok(r) => {
                if r.all() != pre_match_set(&pool, &trs, t) {
                    report.violations.push(format!("{rel:?}: eval differs from brute-force matching"));
                }
                let consistent: RedexSet = r
                    .nonlinear
                    .iter()
                    .filter(|m| {
                        let u = pool.subterm_at(t, &m.position).expect("found by eval");
                        crate::trs::is_consistent(&pool, u, &trs.rule(m.rule).partition).unwrap_or(false)
                    })
                    .cloned()
                    .collect();
                let found: RedexSet = r.linear.union(&consistent).cloned().collect();
                if found != redexes(&pool, &trs, t) {
                    report.violations.push(format!("{rel:?}: checked matches differ from redexes"));
                }
                if r.inspections != pool.size(t) {
                    report.violations.push(format!("{rel:?}: {} inspections for {} positions", r.inspections, pool.size(t)));
                }
            }
            Err(e) => report.violations.push(format!("{rel:?}: eval failed: {e}")),
        }
    }
    report
}

/// Rewriting: every engine returns a normal form, and on confluent cases
/// they all return the same one.
pub fn check_rewriting(case: &FuzzCase, cfg: &FuzzConfig) -> CaseReport {
    let mut report = CaseReport::default();
    let (mut pool, trs, t) = case.build();
    let (std_a, op_a) = match (
        automaton(&pool, &trs, DependencyKind::Standard),
        automaton(&pool, &trs, DependencyKind::OutermostPreserving),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            report.violations.push(e);
            return report;
        }
    };
    if !case.confluent && !tame(&mut pool, &trs, t) {
        report.budget_exhausted = true;
        return report;
    }
    let deadline = Some(Instant::now() + CASE_TIME);
    let opts = RewriteOptions {
        max_steps: CASE_STEPS,
        deadline,
        check_invariants: true,
        skip_prune: cfg.skip_prune,
        ..Default::default()
    };
    let eopts = EngineOptions {
        max_steps: CASE_STEPS,
        deadline,
        check_invariants: true,
        ..Default::default()
    };
    let mut results: Vec<(String, Result<TermId, RewriteError>)> = Vec::new();
    for order in [RewriteOrder::LeftmostOutermost, RewriteOrder::LeftmostInnermost] {
        let r = oracle_normalize(&mut pool, &trs, t, order, CASE_STEPS).map(|o| o.term);
        results.push((format!("oracle {order:?}"), r));
    }
    for mut strat in builtin_strategies() {
        if trs.is_left_linear() {
            let r = normalize(&std_a, &trs, &mut pool, t, &mut strat, opts.clone()).map(|o| o.term);
            results.push((format!("normalize {}", strat.name()), r));
        }
        let r = normalize_nonlinear(&std_a, &trs, &mut pool, t, &mut strat, opts.clone()).map(|o| o.term);
        results.push((format!("normalize_nonlinear {}", strat.name()), r));
    }
    for (name, a) in [("outermost-preserving", &op_a), ("standard", &std_a)] {
        let r = rewrite_outermost(a, &trs, &mut pool, t, &eopts).map(|o| o.term);
        results.push((format!("stack engine {name}"), r));
    }
    let mut normal_forms = Vec::new();
    for (name, r) in results {
        match r {
            Ok(nf) => {
                if !redexes(&pool, &trs, nf).is_empty() {
                    report.violations.push(format!("{name}: result {} has a redex", crate::syntax::to_string(&pool, nf)));
                }
                normal_forms.push((name, nf));
            }
            Err(RewriteError::StepLimit(_) | RewriteError::Deadline(_)) => report.budget_exhausted = true,
            Err(e) => report.violations.push(format!("{name}: {e}")),
        }
    }
    if case.confluent {
        if report.budget_exhausted {
            report.violations.push("a terminating case exhausted the step budget".into());
        }
        if let Some((first, nf)) = normal_forms.first() {
            for (name, other) in &normal_forms[1..] {
                if other != nf {
                    report.violations.push(format!(
                        "{name} returned {} but {first} returned {}",
                        crate::syntax::to_string(&pool, *other),
                        crate::syntax::to_string(&pool, *nf)
                    ));
                }
            }
        }
    }
    report
}

/// The configuration tree laws: growing stays below the completed tree,
/// pruning is monotone and yields a fragment, pruning removes exactly the
/// subtree at the pruned position, and pruning forgets a rewrite step.
pub fn check_tree_laws(case: &FuzzCase, seed: u64) -> CaseReport {
    let mut report = CaseReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut pool, trs, t) = case.build();
    let a = match automaton(&pool, &trs, DependencyKind::Standard) {
        Ok(a) => a,
        Err(e) => {
            report.violations.push(e);
            return report;
        }
    };
    let mut violations: Vec<String> = Vec::new();
    let mut fail = |m: &str| violations.push(m.to_string());
    let Ok(full) = ConfigurationTree::completed(&a, &pool, t) else {
        report.violations.push("completed tree failed".into());
        return report;
    };
    // a random partial exploration
    let mut partial = ConfigurationTree::initial(&a);
    let grows = rng.gen_range(0..=pool.size(t));
    for _ in 0..grows {
        let buds: Vec<_> = partial.buds().into_iter().cloned().collect();
        let Some(b) = buds.choose(&mut rng) else { break };
        if partial.grow(&a, &pool, t, b).is_err() {
            fail("grow failed on a bud");
            break;
        }
        if !is_fragment(&partial, &full) {
            fail("grow left the completed tree");
            break;
        }
    }
    let domain = pool.domain(t);
    let p = domain.choose(&mut rng).expect("non-empty domain").clone();
    let pruned = partial.pruned(&a, &p);
    if !is_fragment(&pruned, &partial) {
        fail("prune(ct,p) is not a fragment of ct");
    }
    if !is_fragment(&pruned, &full.pruned(&a, &p)) {
        fail("prune is not monotone");
    }
    if let Some(sub) = partial.subtree_at(&a, &p) {
        let mut expect: Vec<_> = partial.nodes().into_iter().cloned().collect();
        let gone: Vec<_> = sub.nodes().into_iter().cloned().collect();
        expect.retain(|c| !gone.contains(c));
        let mut got: Vec<_> = pruned.nodes().into_iter().cloned().collect();
        expect.sort();
        got.sort();
        if got != expect {
            fail("prune removed more or less than the subtree at p");
        }
    }
    let mut rewrite_checked = false;
    if let Some(redex) = redexes(&pool, &trs, t).into_iter().collect::<Vec<_>>().choose(&mut rng) {
        let rule = trs.rule(redex.rule);
        let old = pool.subterm_at(t, &redex.position).expect("redex");
        let sigma = pool.match_root(rule.lhs, old).expect("redex");
        let new = pool.apply_substitution(rule.rhs, &sigma).expect("rule variables are bound");
        let t2 = pool.replace_at(t, &redex.position, new).expect("redex");
        rewrite_checked = true;
        match ConfigurationTree::completed(&a, &pool, t2) {
            Ok(full2) => {
                if full.pruned(&a, &redex.position) != full2.pruned(&a, &redex.position) {
                    fail("pruning at a rewritten position does not forget the rewrite");
                }
            }
            Err(_) => fail("completed tree of the reduct failed"),
        }
    }
    report.violations = violations;
    report.rewrite_checked = rewrite_checked;
    report
}

/// Greedily shrinks a failing case: drops rules and replaces the term by
/// subterms while `fails` keeps holding.
pub fn minimize(case: &FuzzCase, fails: impl Fn(&FuzzCase) -> bool) -> FuzzCase {
    let mut best = case.clone();
    loop {
        let mut improved = false;
        for i in 0..best.rules.len() {
            if best.rules.len() == 1 {
                break;
            }
            let mut c = best.clone();
            c.rules.remove(i);
            if fails(&c) {
                best = c;
                improved = true;
                break;
            }
        }
        if !improved {
            let subs: Vec<Tree> = best.term.subterms().into_iter().skip(1).cloned().collect();
            for s in subs {
                let c = FuzzCase {
                    term: s,
                    ..best.clone()
                };
                if fails(&c) {
                    best = c;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SelftestReport {
    pub cases: usize,
    pub confluent_cases: usize,
    pub budget_exhausted: usize,
    /// `(seed, minimized case, messages)`
    pub failures: Vec<(u64, FuzzCase, Vec<String>)>,
}

/// Runs the matching, rewriting and tree-law checks on `iterations` cases
/// starting at `seed`.
pub fn selftest(seed: u64, iterations: usize, cfg: &FuzzConfig) -> SelftestReport {
    let mut report = SelftestReport::default();
    for i in 0..iterations as u64 {
        let s = seed.wrapping_add(i);
        let case = generate(s, cfg);
        report.cases += 1;
        if case.confluent {
            report.confluent_cases += 1;
        }
        let check = |c: &FuzzCase| {
            let mut m = check_matching(c).violations;
            m.extend(check_tree_laws(c, s).violations);
            let r = check_rewriting(c, cfg);
            m.extend(r.violations);
            (m, r.budget_exhausted)
        };
        let (violations, exhausted) = check(&case);
        if exhausted {
            report.budget_exhausted += 1;
        }
        if !violations.is_empty() {
            let small = minimize(&case, |c| !check(c).0.is_empty());
            let messages = check(&small).0;
            report.failures.push((s, small, messages));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = FuzzConfig::default();
        assert_eq!(generate(7, &cfg).to_string(), generate(7, &cfg).to_string());
    }

    #[test]
    fn confluent_cases_have_no_overlaps() {
        let cfg = FuzzConfig::default();
        for seed in 0..200 {
            let c = generate(seed, &cfg);
            if !c.confluent {
                continue;
            }
            for (i, (l1, r1)) in c.rules.iter().enumerate() {
                assert!(r1.size() < l1.size());
                for (j, (l2, _)) in c.rules.iter().enumerate() {
                    assert!(!overlaps(l1, l2, i == j), "{c}");
                }
            }
        }
    }

    #[test]
    fn unification() {
        let x = Tree::Var(0);
        let y = Tree::Var(1);
        let f = |t: Tree| Tree::App(3, vec![t]);
        let h = |s: Tree, t: Tree| Tree::App(5, vec![s, t]);
        assert!(unifiable(&h(x.clone(), x.clone()), &h(f(y.clone()), f(Tree::App(0, vec![])))));
        assert!(!unifiable(&x, &f(x.clone())));
        assert!(!unifiable(&h(x.clone(), x.clone()), &h(Tree::App(0, vec![]), Tree::App(1, vec![]))));
        // f(f(x)) overlaps itself at position 1
        assert!(overlaps(&f(f(x.clone())), &f(f(x.clone())), true));
        assert!(!overlaps(&f(x.clone()), &f(x), true));
    }

    #[test]
    fn minimize_shrinks() {
        let case = generate(3, &FuzzConfig::default());
        let small = minimize(&case, |c| !c.rules.is_empty());
        assert_eq!(small.rules.len(), 1);
        assert_eq!(small.term.size(), 1);
    }
}
