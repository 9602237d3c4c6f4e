//! Brute-force rewriting used as an independent reference: every position
//! is tried against every rule with plain root matching.

use std::time::Instant;

use rustc_hash::FxHashSet;

use super::RewriteError;
use crate::matcher::{Redex, RedexSet};
use crate::position::Position;
use crate::term::{TermId, TermPool};
use crate::trs::Trs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RewriteOrder {
    LeftmostOutermost,
    LeftmostInnermost,
}

fn match_at(pool: &TermPool, trs: &Trs, u: TermId) -> Option<crate::trs::RuleId> {
    trs.rules()
        .iter()
        .find(|r| pool.match_root(r.lhs, u).is_some())
        .map(|r| r.id)
}

/// All redexes of `t`.
pub fn redexes(pool: &TermPool, trs: &Trs, t: TermId) -> RedexSet {
    let mut out = RedexSet::new();
    for p in pool.domain(t) {
        let u = pool.subterm_at(t, &p).expect("own domain");
        for r in trs.rules() {
            if pool.match_root(r.lhs, u).is_some() {
                out.insert(Redex {
                    rule: r.id,
                    position: p.clone(),
                });
            }
        }
    }
    out
}

pub fn is_normal_form(pool: &TermPool, trs: &Trs, t: TermId) -> bool {
    find_redex(pool, trs, t, RewriteOrder::LeftmostOutermost, &mut FxHashSet::default()).is_none()
}

/// The first redex in the given order, lowest rule id first. Subterms found
/// to be in normal form are added to `normal` and skipped later.
pub fn find_redex(
    pool: &TermPool,
    trs: &Trs,
    t: TermId,
    order: RewriteOrder,
    normal: &mut FxHashSet<TermId>,
) -> Option<Redex> {
    // (subterm, next child index); the path is read off the indices
    let mut stack: Vec<(TermId, usize)> = vec![(t, 0)];
    let here = |stack: &[(TermId, usize)]| {
        Position::from_indices(&stack[..stack.len() - 1].iter().map(|&(_, i)| i as u32).collect::<Vec<_>>())
    };
    while let Some(top) = stack.last_mut() {
        let (u, idx) = *top;
        if idx == 0 && normal.contains(&u) {
            stack.pop();
            continue;
        }
        if idx == 0 && order == RewriteOrder::LeftmostOutermost {
            if let Some(rule) = match_at(pool, trs, u) {
                return Some(Redex { rule, position: here(&stack) });
            }
        }
        let args = pool.args(u);
        if idx < args.len() {
            top.1 += 1;
            stack.push((args[idx], 0));
            continue;
        }
        if order == RewriteOrder::LeftmostInnermost {
            if let Some(rule) = match_at(pool, trs, u) {
                return Some(Redex { rule, position: here(&stack) });
            }
        }
        normal.insert(u);
        stack.pop();
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub term: TermId,
    pub steps: u64,
}

/// Rewrites the first redex in `order` until none is left.
pub fn oracle_normalize(
    pool: &mut TermPool,
    trs: &Trs,
    t0: TermId,
    order: RewriteOrder,
    max_steps: u64,
) -> Result<OracleOutcome, RewriteError> {
    oracle_normalize_until(pool, trs, t0, order, max_steps, None)
}

/// [`oracle_normalize`] with a wall-clock deadline.
pub fn oracle_normalize_until(
    pool: &mut TermPool,
    trs: &Trs,
    t0: TermId,
    order: RewriteOrder,
    max_steps: u64,
    deadline: Option<Instant>,
) -> Result<OracleOutcome, RewriteError> {
    let mut normal = FxHashSet::default();
    let mut t = t0;
    let mut steps = 0;
    while let Some(redex) = find_redex(pool, trs, t, order, &mut normal) {
        if steps >= max_steps {
            return Err(RewriteError::StepLimit(max_steps));
        }
        if steps % 256 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(RewriteError::Deadline(steps));
        }
        let rule = trs.rule(redex.rule);
        let old = pool.subterm_at(t, &redex.position)?;
        let sigma = pool.match_root(rule.lhs, old).expect("found by matching");
        let new = pool.apply_substitution(rule.rhs, &sigma)?;
        t = pool.replace_at(t, &redex.position, new)?;
        steps += 1;
    }
    Ok(OracleOutcome { term: t, steps })
}
