use super::*;
use crate::syntax::parse_term;
use crate::trs::parse_trs;

const NESTED_ADD: &str = "symbols: +:2 s:1 0:0\nvars: x y z\nrules:\n+(+(x,s(y)),s(z)) -> 0\n";

const IF_TRS: &str = "symbols: if:3 not:1 true:0 false:0
vars: x y
rules:
if(true,x,y) -> x
if(false,x,y) -> y
not(true) -> false
not(false) -> true
not(not(x)) -> x
";

fn p(s: &str) -> Position {
    s.parse().unwrap()
}

fn build(text: &str, relation: DependencyKind) -> (TermPool, Trs, SetAutomaton) {
    let (pool, trs) = parse_trs(text).unwrap();
    let a = construct(&pool, &trs, &ConstructionOptions::with_relation(relation)).unwrap();
    (pool, trs, a)
}

fn sym(pool: &TermPool, name: &str) -> FnId {
    pool.signature().function(name).unwrap()
}

#[test]
fn reduce_examples() {
    let (mut pool, _) = parse_trs(NESTED_ADD).unwrap();
    let inner = parse_term(&mut pool, "+(x,s(y))").unwrap();
    let sz = parse_term(&mut pool, "s(z)").unwrap();
    let s = sym(&pool, "s");
    let mo = vec![(p("1"), inner), (p("2"), sz)];
    assert_eq!(reduce(&pool, &mo, s, &p("2")), vec![(p("1"), inner)]);
    assert!(reduce(&pool, &[(p("2"), sz)], s, &p("2")).is_empty());
}

#[test]
fn nested_add_automaton() {
    let (pool, _, a) = build(NESTED_ADD, DependencyKind::Standard);
    assert_eq!(a.num_states(), 4);
    let s = sym(&pool, "s");
    let zero = sym(&pool, "0");
    assert!(a.transition(a.initial(), zero).is_empty());
    let mut found = 0;
    for (id, _) in a.states() {
        let t = a.transition(id, s);
        if t.outputs().count() == 0 {
            continue;
        }
        found += 1;
        let offsets: Vec<Position> = t.branches.iter().map(|b| b.offset.clone()).collect();
        assert_eq!(offsets, vec![p("1"), p("1.2.1")]);
        assert_eq!(t.out_linear.len(), 1);
        assert_eq!(t.out_linear[0].position, Position::root());
        let back = t.branches.iter().find(|b| b.offset == p("1.2.1")).unwrap();
        assert_eq!(back.target, a.initial());
    }
    assert_eq!(found, 1);
    // s1 observes the right argument first
    let s1 = a.transition(a.initial(), sym(&pool, "+")).branches[0].target;
    assert_eq!(a.label(s1), &p("2"));
}

#[test]
fn nested_add_derivative_parts() {
    let (pool, trs, a) = build(NESTED_ADD, DependencyKind::Standard);
    let plus = sym(&pool, "+");
    let s = sym(&pool, "s");
    let s1 = a.transition(a.initial(), plus).branches[0].target;
    let st = a.state(s1);
    let d = derivative(&pool, a.patterns(), &st.goals, &st.label, s, false);
    let l = trs.rules()[0].lhs;
    let pat = PatternId(0);
    assert_eq!(d.unchanged, vec![Goal::fresh(pat, l, p("1"))]);
    assert_eq!(d.fresh, vec![Goal::fresh(pat, l, p("2.1"))]);
    assert_eq!(d.reduced.len(), 1);
    assert_eq!(d.reduced[0].position, Position::root());
    assert_eq!(d.reduced[0].obligation.len(), 1);
    assert_eq!(d.reduced[0].obligation[0].0, p("1"));
    assert!(d.completed.is_empty());

    let classes = partition(&d.goals(), DependencyKind::Standard);
    assert_eq!(classes.len(), 2);
    let lifted: Vec<Position> = classes.iter().map(|c| lift(c).1).collect();
    assert!(lifted.contains(&Position::root()));
    assert!(lifted.contains(&p("2.1")));
    let k2 = classes.iter().find(|c| c.len() == 1).unwrap();
    assert_eq!(lift(k2).0, a.state(a.initial()).goals);
}

#[test]
fn partition_is_transitive() {
    let t = TermId::from_index(0);
    let g = |ps: &[&str], pos: &str| Goal {
        pattern: PatternId(0),
        position: p(pos),
        obligation: ps.iter().map(|s| (p(s), t)).collect(),
        depth: 0,
    };
    let goals = vec![g(&["1"], "1"), g(&["1", "2"], "ε"), g(&["2"], "2")];
    assert_eq!(partition(&goals, DependencyKind::Standard).len(), 1);
    assert_eq!(partition(&goals[..1], DependencyKind::Standard).len(), 1);
    let split = vec![g(&["1"], "1"), g(&["2"], "2")];
    assert_eq!(partition(&split, DependencyKind::Standard).len(), 2);
    assert_eq!(partition(&split, DependencyKind::OutermostPreserving).len(), 2);
    let nested = vec![g(&["1.1"], "1.1"), g(&["2"], "ε"), g(&["1.2"], "1")];
    assert_eq!(partition(&nested, DependencyKind::OutermostPreserving).len(), 1);
    assert_eq!(partition(&nested, DependencyKind::Standard).len(), 3);
}

#[test]
fn lift_without_common_prefix_is_identity() {
    let t = TermId::from_index(0);
    let goals = vec![
        Goal { pattern: PatternId(0), position: p("1"), obligation: vec![(p("1"), t)], depth: 0 },
        Goal { pattern: PatternId(0), position: p("2"), obligation: vec![(p("2"), t)], depth: 0 },
    ];
    let (lifted, off) = lift(&goals);
    assert_eq!(off, Position::root());
    assert_eq!(lifted, goals);
}

#[test]
fn if_automaton_run() {
    let (mut pool, _, a) = build(IF_TRS, DependencyKind::Standard);
    let t = parse_term(&mut pool, "if(not(not(true)),false,true)").unwrap();
    let s0 = a.initial();
    assert_eq!(a.label(s0), &Position::root());
    let t_if = a.transition(s0, sym(&pool, "if"));
    assert!(t_if.outputs().next().is_none());
    let s1 = t_if.branches.iter().find(|b| b.offset.is_root()).unwrap().target;
    assert_eq!(a.label(s1), &p("1"));
    let t_not = a.transition(s1, sym(&pool, "not"));
    let s2 = t_not.branches.iter().find(|b| b.offset == p("1")).unwrap().target;
    assert_eq!(a.label(s2), &p("1"));
    let t_not2 = a.transition(s2, sym(&pool, "not"));
    let out: Vec<_> = t_not2.outputs().map(|o| (o.rule.0, o.position.clone())).collect();
    assert_eq!(out, vec![(4, Position::root())]);
    let _ = t;
}

#[test]
fn transition_cells_law_and_split() {
    for text in [NESTED_ADD, IF_TRS] {
        for rel in [DependencyKind::Standard, DependencyKind::OutermostPreserving] {
            let (pool, trs, a) = build(text, rel);
            let st = a.stats();
            assert_eq!(st.transition_cells, st.symbols * st.states);
            assert_eq!(st.symbols, pool.signature().num_functions());
            for (id, state) in a.states() {
                assert!(state.goals.iter().any(Goal::is_root));
                for f in 0..a.num_symbols() {
                    let t = a.transition(id, FnId(f as u32));
                    assert!(t.out_linear.iter().all(|o| trs.rule(o.rule).is_linear()));
                    assert!(t.out_nonlinear.iter().all(|o| !trs.rule(o.rule).is_linear()));
                }
            }
        }
    }
}

#[test]
fn state_limit_aborts() {
    let (pool, trs) = parse_trs(IF_TRS).unwrap();
    let opts = ConstructionOptions { max_states: 2, ..Default::default() };
    assert_eq!(construct(&pool, &trs, &opts).unwrap_err(), ConstructionError::StateLimit(2));
}

#[test]
fn dot_is_deterministic() {
    let (pool, _, a) = build(NESTED_ADD, DependencyKind::Standard);
    let one = export_dot(&pool, &a);
    let (pool2, _, b) = build(NESTED_ADD, DependencyKind::Standard);
    assert_eq!(one, export_dot(&pool2, &b));
    assert!(one.contains("label=\"1.2.1\""));
}

#[test]
fn shortlex_labels_grow_nested_add() {
    let (pool, trs) = parse_trs(NESTED_ADD).unwrap();
    let opts = ConstructionOptions { label_policy: LabelPolicy::Shortlex, ..Default::default() };
    let a = construct(&pool, &trs, &opts).unwrap();
    assert!(a.num_states() > 4);
}
