//! Ranked alphabets and maximally shared terms.
//!
//! Every term lives in a [`TermPool`]. The pool interns nodes by
//! `(head, children)`, so two terms of the same pool are structurally equal
//! iff their [`TermId`]s are equal. The pool is append-only.

use std::collections::HashMap;
use std::hash::{BuildHasher, Hash, Hasher};

use hashbrown::HashTable;
use rustc_hash::FxBuildHasher;

use crate::position::Position;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FnId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u32);

/// Head symbol of a term node: a function symbol or a variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Head {
    Fn(FnId),
    Var(VarId),
}

/// Pool-scoped identifier of a term.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[cfg(test)]
    pub(crate) fn from_index(i: usize) -> TermId {
        TermId(i as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// A ranked alphabet plus a set of variable names.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    functions: Vec<Symbol>,
    fn_index: HashMap<String, FnId>,
    variables: Vec<String>,
    var_index: HashMap<String, VarId>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a function symbol. Redeclaring a name with the same arity
    /// returns the existing symbol.
    pub fn declare_fn(&mut self, name: &str, arity: usize) -> Result<FnId, TermError> {
        if self.var_index.contains_key(name) {
            return Err(TermError::NameClash(name.to_string()));
        }
        if let Some(&id) = self.fn_index.get(name) {
            let declared = self.functions[id.0 as usize].arity;
            if declared != arity {
                return Err(TermError::ArityRedeclared {
                    name: name.to_string(),
                    declared,
                    found: arity,
                });
            }
            return Ok(id);
        }
        let id = FnId(self.functions.len() as u32);
        self.functions.push(Symbol {
            name: name.to_string(),
            arity,
        });
        self.fn_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn declare_var(&mut self, name: &str) -> Result<VarId, TermError> {
        if self.fn_index.contains_key(name) {
            return Err(TermError::NameClash(name.to_string()));
        }
        if let Some(&id) = self.var_index.get(name) {
            return Ok(id);
        }
        let id = VarId(self.variables.len() as u32);
        self.variables.push(name.to_string());
        self.var_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn function(&self, name: &str) -> Option<FnId> {
        self.fn_index.get(name).copied()
    }

    pub fn variable(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn symbol(&self, f: FnId) -> &Symbol {
        &self.functions[f.0 as usize]
    }

    pub fn arity(&self, f: FnId) -> usize {
        self.functions[f.0 as usize].arity
    }

    pub fn fn_name(&self, f: FnId) -> &str {
        &self.functions[f.0 as usize].name
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.variables[v.0 as usize]
    }

    pub fn num_functions(&self) -> usize {
        self.functions.len()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn functions(&self) -> impl Iterator<Item = (FnId, &Symbol)> {
        self.functions
            .iter()
            .enumerate()
            .map(|(i, s)| (FnId(i as u32), s))
    }

    pub fn variables(&self) -> impl Iterator<Item = (VarId, &str)> {
        self.variables
            .iter()
            .enumerate()
            .map(|(i, s)| (VarId(i as u32), s.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("symbol `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("symbol `{name}` declared with arity {declared}, redeclared with arity {found}")]
    ArityRedeclared {
        name: String,
        declared: usize,
        found: usize,
    },
    #[error("`{0}` is declared both as a function symbol and as a variable")]
    NameClash(String),
    #[error("position {position} is not in the domain of the term")]
    OutOfDomain { position: Position },
    #[error("variable `{0}` is not bound by the substitution")]
    UnboundVariable(String),
}

#[derive(Clone, Copy, Debug)]
struct Node {
    head: Head,
    start: u32,
    len: u32,
    ground: bool,
}

/// A mapping from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: Vec<(VarId, TermId)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VarId) -> Option<TermId> {
        self.bindings
            .iter()
            .find(|(w, _)| *w == v)
            .map(|&(_, t)| t)
    }

    /// Binds `v` to `t`, replacing any previous binding.
    pub fn insert(&mut self, v: VarId, t: TermId) {
        match self.bindings.iter_mut().find(|(w, _)| *w == v) {
            Some(slot) => slot.1 = t,
            None => self.bindings.push((v, t)),
        }
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, TermId)> + '_ {
        self.bindings.iter().copied()
    }
}

impl FromIterator<(VarId, TermId)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (VarId, TermId)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in iter {
            s.insert(v, t);
        }
        s
    }
}

/// Content-addressed store of terms.
#[derive(Clone)]
pub struct TermPool {
    sig: Signature,
    nodes: Vec<Node>,
    args: Vec<TermId>,
    table: HashTable<TermId>,
    hasher: FxBuildHasher,
}

impl Default for TermPool {
    fn default() -> Self {
        Self::new(Signature::new())
    }
}

impl std::fmt::Debug for TermPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TermPool")
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl TermPool {
    pub fn new(sig: Signature) -> Self {
        TermPool {
            sig,
            nodes: Vec::new(),
            args: Vec::new(),
            table: HashTable::new(),
            hasher: FxBuildHasher,
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_mut(&mut self) -> &mut Signature {
        &mut self.sig
    }

    /// Number of distinct nodes stored.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn hash_node(&self, head: Head, children: &[TermId]) -> u64 {
        let mut h = self.hasher.build_hasher();
        head.hash(&mut h);
        children.hash(&mut h);
        h.finish()
    }

    /// Returns the unique term with the given head and children, creating it
    /// if necessary.
    pub fn create(&mut self, head: Head, children: &[TermId]) -> Result<TermId, TermError> {
        let expected = match head {
            Head::Fn(f) => self.sig.arity(f),
            Head::Var(_) => 0,
        };
        if expected != children.len() {
            let name = match head {
                Head::Fn(f) => self.sig.fn_name(f).to_string(),
                Head::Var(v) => self.sig.var_name(v).to_string(),
            };
            return Err(TermError::ArityMismatch {
                name,
                expected,
                found: children.len(),
            });
        }
        debug_assert!(children.iter().all(|c| c.index() < self.nodes.len()));
        Ok(self.intern(head, children))
    }

    fn intern(&mut self, head: Head, children: &[TermId]) -> TermId {
        let hash = self.hash_node(head, children);
        let nodes = &self.nodes;
        let args = &self.args;
        let found = self.table.find(hash, |&id| {
            let n = nodes[id.index()];
            n.head == head && &args[n.start as usize..(n.start + n.len) as usize] == children
        });
        if let Some(&id) = found {
            return id;
        }
        let id = TermId(self.nodes.len() as u32);
        let ground = matches!(head, Head::Fn(_))
            && children.iter().all(|c| self.nodes[c.index()].ground);
        let start = self.args.len() as u32;
        self.args.extend_from_slice(children);
        self.nodes.push(Node {
            head,
            start,
            len: children.len() as u32,
            ground,
        });
        let (nodes, args) = (&self.nodes, &self.args);
        let hasher = &self.hasher;
        self.table.insert_unique(hash, id, |&other| {
            let n = nodes[other.index()];
            let mut h = hasher.build_hasher();
            n.head.hash(&mut h);
            args[n.start as usize..(n.start + n.len) as usize].hash(&mut h);
            h.finish()
        });
        id
    }

    pub fn app(&mut self, f: FnId, children: &[TermId]) -> Result<TermId, TermError> {
        self.create(Head::Fn(f), children)
    }

    pub fn constant(&mut self, f: FnId) -> Result<TermId, TermError> {
        self.create(Head::Fn(f), &[])
    }

    pub fn var(&mut self, v: VarId) -> TermId {
        self.intern(Head::Var(v), &[])
    }

    pub fn head(&self, t: TermId) -> Head {
        self.nodes[t.index()].head
    }

    /// The function symbol at the root, or `None` for a variable.
    pub fn head_fn(&self, t: TermId) -> Option<FnId> {
        match self.head(t) {
            Head::Fn(f) => Some(f),
            Head::Var(_) => None,
        }
    }

    pub fn args(&self, t: TermId) -> &[TermId] {
        let n = self.nodes[t.index()];
        &self.args[n.start as usize..(n.start + n.len) as usize]
    }

    pub fn is_var(&self, t: TermId) -> bool {
        matches!(self.head(t), Head::Var(_))
    }

    pub fn is_ground(&self, t: TermId) -> bool {
        self.nodes[t.index()].ground
    }

    /// `t|_p`
    pub fn subterm_at(&self, t: TermId, p: &Position) -> Result<TermId, TermError> {
        let mut cur = t;
        for &i in p.indices() {
            let args = self.args(cur);
            match args.get(i as usize - 1) {
                Some(&c) => cur = c,
                None => {
                    return Err(TermError::OutOfDomain {
                        position: p.clone(),
                    })
                }
            }
        }
        Ok(cur)
    }

    /// `t[u]_p`; `t` itself is left untouched.
    pub fn replace_at(&mut self, t: TermId, p: &Position, u: TermId) -> Result<TermId, TermError> {
        let mut path = Vec::with_capacity(p.len());
        let mut cur = t;
        for &i in p.indices() {
            let args = self.args(cur);
            if i as usize > args.len() {
                return Err(TermError::OutOfDomain {
                    position: p.clone(),
                });
            }
            path.push((cur, i as usize - 1));
            cur = args[i as usize - 1];
        }
        let mut acc = u;
        let mut buf: Vec<TermId> = Vec::new();
        for &(node, slot) in path.iter().rev() {
            buf.clear();
            buf.extend_from_slice(self.args(node));
            if buf[slot] == acc {
                acc = node;
                continue;
            }
            buf[slot] = acc;
            let head = self.head(node);
            acc = self.intern(head, &buf);
        }
        Ok(acc)
    }

    /// All positions of `t` in pre-order.
    pub fn domain(&self, t: TermId) -> Vec<Position> {
        let mut out = Vec::new();
        let mut stack = vec![(t, Position::root())];
        while let Some((u, p)) = stack.pop() {
            let args = self.args(u);
            for i in (1..=args.len()).rev() {
                stack.push((args[i - 1], p.child(i as u32)));
            }
            out.push(p);
        }
        out
    }

    /// Positions where `t` has a variable.
    pub fn variable_positions(&self, t: TermId) -> Vec<Position> {
        self.domain(t)
            .into_iter()
            .filter(|p| self.is_var(self.subterm_at(t, p).expect("own domain")))
            .collect()
    }

    /// `|𝒟(t)|`, the number of positions of `t` (its tree size).
    pub fn size(&self, t: TermId) -> u64 {
        let mut memo: HashMap<TermId, u64> = HashMap::new();
        let mut stack = vec![(t, false)];
        while let Some((u, expanded)) = stack.pop() {
            if memo.contains_key(&u) {
                continue;
            }
            let args = self.args(u);
            if expanded {
                let s = args.iter().fold(1u64, |acc, c| acc.saturating_add(memo[c]));
                memo.insert(u, s);
            } else {
                stack.push((u, true));
                for &c in args {
                    if !memo.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
            }
        }
        memo[&t]
    }

    /// Variables of `t`, each listed once, in order of first occurrence.
    pub fn vars(&self, t: TermId) -> Vec<VarId> {
        let mut out = Vec::new();
        self.for_each_var(t, |v| {
            if !out.contains(&v) {
                out.push(v);
            }
        });
        out
    }

    /// Number of occurrences of each variable of `t`.
    pub fn var_occurrences(&self, t: TermId) -> Vec<(VarId, usize)> {
        let mut out: Vec<(VarId, usize)> = Vec::new();
        self.for_each_var(t, |v| match out.iter_mut().find(|(w, _)| *w == v) {
            Some(e) => e.1 += 1,
            None => out.push((v, 1)),
        });
        out
    }

    fn for_each_var(&self, t: TermId, mut f: impl FnMut(VarId)) {
        let mut stack = vec![t];
        while let Some(u) = stack.pop() {
            if self.is_ground(u) {
                continue;
            }
            match self.head(u) {
                Head::Var(v) => f(v),
                Head::Fn(_) => stack.extend(self.args(u).iter().rev()),
            }
        }
    }

    /// `t^σ`
    pub fn apply_substitution(
        &mut self,
        t: TermId,
        sigma: &Substitution,
    ) -> Result<TermId, TermError> {
        if self.is_ground(t) {
            return Ok(t);
        }
        match self.head(t) {
            Head::Var(v) => sigma
                .get(v)
                .ok_or_else(|| TermError::UnboundVariable(self.sig.var_name(v).to_string())),
            head @ Head::Fn(_) => {
                let n = self.nodes[t.index()];
                let mut buf = Vec::with_capacity(n.len as usize);
                for k in 0..n.len {
                    let c = self.args[(n.start + k) as usize];
                    buf.push(self.apply_substitution(c, sigma)?);
                }
                Ok(self.intern(head, &buf))
            }
        }
    }

    /// Root matching: finds `σ` with `t = pattern^σ`.
    ///
    /// Repeated variables are handled by comparing the bound subterms, which
    /// is an id comparison.
    pub fn match_root(&self, pattern: TermId, t: TermId) -> Option<Substitution> {
        let mut sigma = Substitution::new();
        if self.match_into(pattern, t, &mut sigma) {
            Some(sigma)
        } else {
            None
        }
    }

    fn match_into(&self, pattern: TermId, t: TermId, sigma: &mut Substitution) -> bool {
        if self.is_ground(pattern) {
            return pattern == t;
        }
        match self.head(pattern) {
            Head::Var(v) => match sigma.get(v) {
                Some(bound) => bound == t,
                None => {
                    sigma.insert(v, t);
                    true
                }
            },
            head => {
                if self.head(t) != head {
                    return false;
                }
                let (pa, ta) = (self.args(pattern), self.args(t));
                pa.iter()
                    .zip(ta.iter())
                    .all(|(&p, &u)| self.match_into(p, u, sigma))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Peano {
        pool: TermPool,
        zero: FnId,
        succ: FnId,
        plus: FnId,
    }

    fn peano() -> Peano {
        let mut sig = Signature::new();
        let zero = sig.declare_fn("0", 0).unwrap();
        let succ = sig.declare_fn("s", 1).unwrap();
        let plus = sig.declare_fn("+", 2).unwrap();
        Peano {
            pool: TermPool::new(sig),
            zero,
            succ,
            plus,
        }
    }

    fn p(s: &str) -> Position {
        s.parse().unwrap()
    }

    #[test]
    fn create_is_idempotent() {
        let mut pe = peano();
        let z = pe.pool.constant(pe.zero).unwrap();
        let a = pe.pool.app(pe.succ, &[z]).unwrap();
        let b = pe.pool.app(pe.succ, &[z]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn create_rejects_wrong_arity() {
        let mut pe = peano();
        let z = pe.pool.constant(pe.zero).unwrap();
        let err = pe.pool.app(pe.plus, &[z]).unwrap_err();
        assert!(matches!(err, TermError::ArityMismatch { expected: 2, found: 1, .. }));
    }

    #[test]
    fn example_term_has_five_nodes() {
        let mut pe = peano();
        let z = pe.pool.constant(pe.zero).unwrap();
        let sz = pe.pool.app(pe.succ, &[z]).unwrap();
        let a = pe.pool.app(pe.plus, &[z, sz]).unwrap();
        let b = pe.pool.app(pe.plus, &[a, sz]).unwrap();
        let t = pe.pool.app(pe.plus, &[b, sz]).unwrap();
        assert_eq!(pe.pool.len(), 5);
        assert_eq!(pe.pool.size(t), 10);
        assert_eq!(pe.pool.domain(t).len(), 10);
        assert_eq!(pe.pool.subterm_at(t, &p("1.2.1")).unwrap(), z);
        assert_eq!(pe.pool.subterm_at(t, &p("ε")).unwrap(), t);
        assert!(pe.pool.subterm_at(t, &p("3")).is_err());
        assert!(pe.pool.subterm_at(t, &p("2.1.1")).is_err());
    }

    #[test]
    fn replace_keeps_original_and_shares() {
        let mut pe = peano();
        let z = pe.pool.constant(pe.zero).unwrap();
        let sz = pe.pool.app(pe.succ, &[z]).unwrap();
        let t = pe.pool.app(pe.plus, &[sz, z]).unwrap();
        let r = pe.pool.replace_at(t, &p("1.1"), sz).unwrap();
        assert_eq!(pe.pool.subterm_at(r, &p("1.1")).unwrap(), sz);
        assert_eq!(pe.pool.subterm_at(t, &p("1.1")).unwrap(), z);
        assert_eq!(pe.pool.replace_at(t, &p("1"), sz).unwrap(), t);
        assert_eq!(pe.pool.replace_at(t, &p("ε"), z).unwrap(), z);
        assert!(pe.pool.replace_at(t, &p("2.1"), z).is_err());
    }

    #[test]
    fn substitution_and_matching() {
        let mut pe = peano();
        let x = pe.pool.signature_mut().declare_var("x").unwrap();
        let y = pe.pool.signature_mut().declare_var("y").unwrap();
        let (vx, vy) = (pe.pool.var(x), pe.pool.var(y));
        let sy = pe.pool.app(pe.succ, &[vy]).unwrap();
        let pat = pe.pool.app(pe.plus, &[vx, sy]).unwrap();
        let z = pe.pool.constant(pe.zero).unwrap();
        let sigma: Substitution = [(x, z), (y, z)].into_iter().collect();
        let inst = pe.pool.apply_substitution(pat, &sigma).unwrap();
        let sz = pe.pool.app(pe.succ, &[z]).unwrap();
        let expected = pe.pool.app(pe.plus, &[z, sz]).unwrap();
        assert_eq!(inst, expected);
        assert!(pe.pool.is_ground(inst));
        assert!(!pe.pool.is_ground(pat));
        let m = pe.pool.match_root(pat, inst).unwrap();
        assert_eq!(m.get(x), Some(z));
        assert_eq!(m.get(y), Some(z));
        assert!(pe.pool.match_root(pat, sz).is_none());
        let partial: Substitution = [(x, z)].into_iter().collect();
        assert!(matches!(
            pe.pool.apply_substitution(pat, &partial),
            Err(TermError::UnboundVariable(_))
        ));
        assert_eq!(pe.pool.apply_substitution(inst, &Substitution::new()).unwrap(), inst);
    }

    #[test]
    fn non_linear_matching_compares_bindings() {
        let mut sig = Signature::new();
        let f = sig.declare_fn("f", 3).unwrap();
        let h = sig.declare_fn("h", 1).unwrap();
        let a = sig.declare_fn("a", 0).unwrap();
        let x = sig.declare_var("x").unwrap();
        let y = sig.declare_var("y").unwrap();
        let mut pool = TermPool::new(sig);
        let (vx, vy) = (pool.var(x), pool.var(y));
        let ta = pool.constant(a).unwrap();
        let ha = pool.app(h, &[ta]).unwrap();
        let t = pool.app(f, &[ta, ha, ha]).unwrap();
        let fxxy = pool.app(f, &[vx, vx, vy]).unwrap();
        let fxyy = pool.app(f, &[vx, vy, vy]).unwrap();
        assert!(pool.match_root(fxxy, t).is_none());
        assert!(pool.match_root(fxyy, t).is_some());
        assert_eq!(pool.vars(fxxy), vec![x, y]);
        assert_eq!(pool.var_occurrences(fxxy), vec![(x, 2), (y, 1)]);
        assert_eq!(pool.variable_positions(fxxy), vec![p("1"), p("2"), p("3")]);
    }

    #[test]
    fn signature_rejects_clashes() {
        let mut sig = Signature::new();
        sig.declare_fn("f", 1).unwrap();
        assert!(sig.declare_fn("f", 2).is_err());
        assert!(sig.declare_var("f").is_err());
        sig.declare_var("x").unwrap();
        assert!(sig.declare_fn("x", 0).is_err());
    }
}
