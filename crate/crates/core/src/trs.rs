//! Rewrite rules, the TRS file format, and the variable-partition machinery
//! used to support non-linear left-hand sides.

use std::fmt;

use crate::position::Position;
use crate::syntax::{parse_term_at, ParseError};
use crate::term::{Head, TermError, TermId, TermPool};

/// Rule identifier, assigned in file order. Displayed 1-based (`R1`, `R2`, ...).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RuleId(pub u32);

impl RuleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0 + 1)
    }
}

/// Partition of the variable positions of a pattern: positions holding the
/// same variable share a class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariablePartition {
    classes: Vec<Vec<Position>>,
}

impl VariablePartition {
    pub fn classes(&self) -> &[Vec<Position>] {
        &self.classes
    }

    /// Classes of size at least two.
    pub fn repeated(&self) -> impl Iterator<Item = &[Position]> {
        self.classes
            .iter()
            .filter(|c| c.len() >= 2)
            .map(|c| c.as_slice())
    }

    pub fn is_linear(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// Total number of variable positions, `|ℰ(ℓ)|`.
    pub fn num_positions(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

/// `π(ℓ)`: one class per variable, positions in pre-order.
pub fn variable_partition(pool: &TermPool, pattern: TermId) -> VariablePartition {
    let mut classes: Vec<(crate::term::VarId, Vec<Position>)> = Vec::new();
    for p in pool.variable_positions(pattern) {
        let Head::Var(v) = pool.head(pool.subterm_at(pattern, &p).expect("own domain")) else {
            unreachable!()
        };
        match classes.iter_mut().find(|(w, _)| *w == v) {
            Some((_, c)) => c.push(p),
            None => classes.push((v, vec![p])),
        }
    }
    VariablePartition {
        classes: classes.into_iter().map(|(_, c)| c).collect(),
    }
}

/// Whether every class of `partition` holds identical subterms of `t`.
pub fn is_consistent(
    pool: &TermPool,
    t: TermId,
    partition: &VariablePartition,
) -> Result<bool, TermError> {
    for class in partition.repeated() {
        let first = pool.subterm_at(t, &class[0])?;
        for p in &class[1..] {
            if pool.subterm_at(t, p)? != first {
                return Ok(false);
            }
        }
    }
    // singleton classes still have to lie in the domain
    for class in partition.classes() {
        if class.len() == 1 {
            pool.subterm_at(t, &class[0])?;
        }
    }
    Ok(true)
}

/// Whether `t` agrees with `pattern` on the head symbol at every
/// non-variable position of the pattern.
pub fn pre_matches(pool: &TermPool, t: TermId, pattern: TermId) -> bool {
    let mut stack = vec![(pattern, t)];
    while let Some((l, u)) = stack.pop() {
        match pool.head(l) {
            Head::Var(_) => {}
            h => {
                if pool.head(u) != h {
                    return false;
                }
                stack.extend(pool.args(l).iter().copied().zip(pool.args(u).iter().copied()));
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub id: RuleId,
    pub lhs: TermId,
    pub rhs: TermId,
    pub partition: VariablePartition,
    pub duplicating: bool,
}

impl RewriteRule {
    pub fn is_linear(&self) -> bool {
        self.partition.is_linear()
    }
}

/// True iff some variable occurs more often in the right-hand side than in
/// the left-hand side.
pub fn is_duplicating(pool: &TermPool, lhs: TermId, rhs: TermId) -> bool {
    let left = pool.var_occurrences(lhs);
    pool.var_occurrences(rhs).into_iter().any(|(v, n)| {
        let m = left.iter().find(|(w, _)| *w == v).map_or(0, |e| e.1);
        n > m
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrsError {
    #[error("a rewrite system needs at least one rule")]
    Empty,
    #[error("rule {0}: the left-hand side is a variable")]
    VariableLhs(RuleId),
    #[error("rule {rule}: variable `{var}` of the right-hand side does not occur on the left")]
    FreshVariable { rule: RuleId, var: String },
}

/// A finite, non-empty set of rewrite rules over the signature of a pool.
#[derive(Clone, Debug)]
pub struct Trs {
    rules: Vec<RewriteRule>,
}

impl Trs {
    pub fn new(pool: &TermPool, rules: &[(TermId, TermId)]) -> Result<Trs, TrsError> {
        if rules.is_empty() {
            return Err(TrsError::Empty);
        }
        let mut out = Vec::with_capacity(rules.len());
        for (i, &(lhs, rhs)) in rules.iter().enumerate() {
            let id = RuleId(i as u32);
            if pool.is_var(lhs) {
                return Err(TrsError::VariableLhs(id));
            }
            let lvars = pool.vars(lhs);
            if let Some(v) = pool.vars(rhs).into_iter().find(|v| !lvars.contains(v)) {
                return Err(TrsError::FreshVariable {
                    rule: id,
                    var: pool.signature().var_name(v).to_string(),
                });
            }
            out.push(RewriteRule {
                id,
                lhs,
                rhs,
                partition: variable_partition(pool, lhs),
                duplicating: is_duplicating(pool, lhs, rhs),
            });
        }
        Ok(Trs { rules: out })
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &RewriteRule {
        &self.rules[id.index()]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_left_linear(&self) -> bool {
        self.rules.iter().all(RewriteRule::is_linear)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses the TRS file format:
///
/// ```text
/// symbols: if:3 not:1 true:0 false:0
/// vars: x y z
/// rules:
/// if(true, x, y) -> x
/// not(not(x)) -> x
/// ```
///
/// Section entries may continue over several lines. `vars:` may be omitted.
pub fn parse_trs(text: &str) -> Result<(TermPool, Trs), ParseError> {
    #[derive(PartialEq, PartialOrd, Clone, Copy)]
    enum Section {
        None,
        Symbols,
        Vars,
        Rules,
    }
    let mut pool = TermPool::default();
    let mut section = Section::None;
    let mut rules = Vec::new();
    let mut rule_lines = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - trimmed.len();
        let mut body = trimmed;
        let mut body_col = indent + 1;
        for (header, next) in [
            ("symbols:", Section::Symbols),
            ("vars:", Section::Vars),
            ("rules:", Section::Rules),
        ] {
            if let Some(rest) = trimmed.strip_prefix(header) {
                if next <= section {
                    return Err(ParseError::new(
                        line_no,
                        indent + 1,
                        format!("section `{header}` out of order"),
                    ));
                }
                if next != Section::Symbols && section < Section::Symbols {
                    return Err(ParseError::new(line_no, indent + 1, "missing `symbols:` section"));
                }
                section = next;
                body = rest;
                body_col = indent + header.len() + 1;
                break;
            }
        }
        match section {
            Section::None => {
                return Err(ParseError::new(line_no, indent + 1, "expected `symbols:`"));
            }
            Section::Symbols => {
                for (col, word) in words(body, body_col) {
                    let Some((name, arity)) = word.rsplit_once(':') else {
                        return Err(ParseError::new(line_no, col, format!("expected `name:arity`, found `{word}`")));
                    };
                    let arity: usize = arity.parse().map_err(|_| {
                        ParseError::new(line_no, col, format!("invalid arity in `{word}`"))
                    })?;
                    if name.is_empty() || !name.chars().all(crate::syntax::is_ident_char) {
                        return Err(ParseError::new(line_no, col, format!("invalid symbol name `{name}`")));
                    }
                    pool.signature_mut()
                        .declare_fn(name, arity)
                        .map_err(|e| ParseError::new(line_no, col, e.to_string()))?;
                }
            }
            Section::Vars => {
                for (col, word) in words(body, body_col) {
                    if !word.chars().all(crate::syntax::is_ident_char) {
                        return Err(ParseError::new(line_no, col, format!("invalid variable name `{word}`")));
                    }
                    pool.signature_mut()
                        .declare_var(word)
                        .map_err(|e| ParseError::new(line_no, col, e.to_string()))?;
                }
            }
            Section::Rules => {
                if body.trim().is_empty() {
                    continue;
                }
                let Some(arrow) = body.find("->") else {
                    return Err(ParseError::new(line_no, body_col, "expected `lhs -> rhs`"));
                };
                let lhs = parse_term_at(&mut pool, &body[..arrow], line_no, body_col)?;
                let rhs_col = body_col + arrow + 2;
                let rhs = parse_term_at(&mut pool, &body[arrow + 2..], line_no, rhs_col)?;
                rules.push((lhs, rhs));
                rule_lines.push(line_no);
            }
        }
    }
    if section < Section::Rules {
        let line = text.lines().count().max(1);
        return Err(ParseError::new(line, 1, "missing `rules:` section"));
    }
    let trs = Trs::new(&pool, &rules).map_err(|e| {
        let line = match &e {
            TrsError::Empty => text.lines().count().max(1),
            TrsError::VariableLhs(r) | TrsError::FreshVariable { rule: r, .. } => {
                rule_lines[r.index()]
            }
        };
        ParseError::new(line, 1, e.to_string())
    })?;
    Ok((pool, trs))
}

fn words(body: &str, col: usize) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
        match (c.is_whitespace() || c == ',', start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((col + s, &body[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    out.into_iter()
}
