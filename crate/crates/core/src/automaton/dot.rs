use std::fmt::Write;

use super::{Goal, SetAutomaton};
use crate::syntax;
use crate::term::{FnId, TermPool};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn goal_text(pool: &TermPool, g: &Goal) -> String {
    let mo: Vec<String> = g
        .obligation
        .iter()
        .map(|(p, l)| format!("{}@{}", syntax::to_string(pool, *l), p))
        .collect();
    format!("{{{}}} -> l{}@{}", mo.join(", "), g.pattern.0 + 1, g.position)
}

/// Renders the automaton in Graphviz DOT syntax. Each state is a box listing
/// its goals and label; each non-empty `(state, symbol)` transition is a
/// point node fanning out to its branches, annotated with the symbol and
/// the reported matches. Output is deterministic.
pub fn export_dot(pool: &TermPool, automaton: &SetAutomaton) -> String {
    let sig = pool.signature();
    let mut out = String::new();
    out.push_str("digraph set_automaton {\n");
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    for (id, state) in automaton.states() {
        let mut label = format!("{id}   L = {}\\l", state.label);
        for g in &state.goals {
            label.push_str(&escape(&goal_text(pool, g)));
            label.push_str("\\l");
        }
        let _ = writeln!(out, "  \"{id}\" [label=\"{label}\"];");
    }
    for (id, _) in automaton.states() {
        for f in 0..automaton.num_symbols() {
            let f = FnId(f as u32);
            let t = automaton.transition(id, f);
            if t.is_empty() {
                continue;
            }
            let hub = format!("{id}/{}", escape(sig.fn_name(f)));
            let mut label = escape(sig.fn_name(f));
            let outputs: Vec<String> = t
                .outputs()
                .map(|a| format!("{}@{}", a.rule, a.position))
                .collect();
            if !outputs.is_empty() {
                let _ = write!(label, " / {}", outputs.join(", "));
            }
            let _ = writeln!(out, "  \"{hub}\" [shape=point];");
            let _ = writeln!(out, "  \"{id}\" -> \"{hub}\" [label=\"{label}\", arrowhead=none];");
            for b in &t.branches {
                let _ = writeln!(out, "  \"{hub}\" -> \"{}\" [label=\"{}\"];", b.target, b.offset);
            }
        }
    }
    out.push_str("}\n");
    out
}
