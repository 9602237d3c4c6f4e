use proptest::prelude::*;

use setrw::automaton::derivative;
use setrw::fuzz::{check_matching, check_rewriting, check_tree_laws, generate, FuzzConfig};
use setrw::matcher::ConfigurationTree;
use setrw::position::greatest_common_prefix;
use setrw::syntax::to_string;
use setrw::term::Substitution;
use setrw::trs::{is_consistent, pre_matches, variable_partition};
use setrw::{construct, parse_term, parse_trs, ConstructionOptions, DependencyKind, Position, TermId, TermPool};

const SIGNATURE: &str = "symbols: a:0 b:0 f:1 h:2 t:3
vars: x y z
rules:
f(x) -> x
";

fn pool() -> TermPool {
    parse_trs(SIGNATURE).expect("valid").0
}

/// Term text over the fixed signature; `open` allows variables.
fn term_text(open: bool) -> impl Strategy<Value = String> {
    let leaf = if open {
        prop_oneof![Just("a"), Just("b"), Just("x"), Just("y"), Just("z")].boxed()
    } else {
        prop_oneof![Just("a"), Just("b")].boxed()
    };
    leaf.prop_map(str::to_string).prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|s| format!("f({s})")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("h({l},{r})")),
            (inner.clone(), inner.clone(), inner).prop_map(|(p, q, r)| format!("t({p},{q},{r})")),
        ]
    })
}

fn pick(pool: &TermPool, t: TermId, index: usize) -> Position {
    let domain = pool.domain(t);
    domain[index % domain.len()].clone()
}

fn position() -> impl Strategy<Value = Position> {
    proptest::collection::vec(1u32..4, 0..6).prop_map(|v| Position::from_indices(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn structural_equality_is_id_equality(s in term_text(true), t in term_text(true)) {
        let mut pool = pool();
        let a = parse_term(&mut pool, &s).unwrap();
        let b = parse_term(&mut pool, &t).unwrap();
        prop_assert_eq!(a == b, s == t);
        prop_assert_eq!(parse_term(&mut pool, &s).unwrap(), a);
    }

    #[test]
    fn print_then_parse_is_identity(s in term_text(true)) {
        let mut pool = pool();
        let t = parse_term(&mut pool, &s).unwrap();
        prop_assert_eq!(to_string(&pool, t), s.clone());
        let spaced = s.replace(',', " , ");
        prop_assert_eq!(parse_term(&mut pool, &spaced).unwrap(), t);
    }

    #[test]
    fn replacing_a_subterm_by_itself_is_identity(s in term_text(true)) {
        let mut pool = pool();
        let t = parse_term(&mut pool, &s).unwrap();
        for p in pool.domain(t) {
            let u = pool.subterm_at(t, &p).unwrap();
            prop_assert_eq!(pool.replace_at(t, &p, u).unwrap(), t);
        }
    }

    #[test]
    fn replacement_is_local(s in term_text(true), u in term_text(true), i in any::<usize>()) {
        let mut pool = pool();
        let t = parse_term(&mut pool, &s).unwrap();
        let u = parse_term(&mut pool, &u).unwrap();
        let p = pick(&pool, t, i);
        let t2 = pool.replace_at(t, &p, u).unwrap();
        prop_assert_eq!(pool.subterm_at(t2, &p).unwrap(), u);
        prop_assert_eq!(pool.size(t2), pool.size(t) - pool.size(pool.subterm_at(t, &p).unwrap()) + pool.size(u));
        for q in pool.domain(t) {
            if p.is_prefix_of(&q) {
                continue;
            }
            let before = pool.head(pool.subterm_at(t, &q).unwrap());
            let after = pool.head(pool.subterm_at(t2, &q).unwrap());
            prop_assert_eq!(before, after);
            if !q.is_prefix_of(&p) {
                prop_assert_eq!(pool.subterm_at(t, &q).unwrap(), pool.subterm_at(t2, &q).unwrap());
            }
        }
    }

    #[test]
    fn matching_inverts_substitution(l in term_text(true), sx in term_text(false), sy in term_text(false), sz in term_text(false)) {
        let mut pool = pool();
        let l = parse_term(&mut pool, &l).unwrap();
        let mut sigma = Substitution::new();
        for (name, text) in [("x", &sx), ("y", &sy), ("z", &sz)] {
            let v = pool.signature().variable(name).unwrap();
            let value = parse_term(&mut pool, text).unwrap();
            sigma.insert(v, value);
        }
        let t = pool.apply_substitution(l, &sigma).unwrap();
        prop_assert!(pool.is_ground(t));
        let found = pool.match_root(l, t);
        prop_assert!(found.is_some());
        let found = found.unwrap();
        for v in pool.vars(l) {
            prop_assert_eq!(found.get(v), sigma.get(v));
        }
        prop_assert_eq!(pool.apply_substitution(l, &found).unwrap(), t);
    }

    #[test]
    fn match_is_pre_match_and_consistency(l in term_text(true), s in term_text(false), plant in any::<bool>()) {
        let mut pool = pool();
        let l = parse_term(&mut pool, &l).unwrap();
        prop_assume!(!pool.is_var(l));
        let t = if plant {
            // an instance of the pattern, with one ground value for all variables
            let mut sigma = Substitution::new();
            let value = parse_term(&mut pool, &s).unwrap();
            for v in pool.vars(l) {
                sigma.insert(v, value);
            }
            pool.apply_substitution(l, &sigma).unwrap()
        } else {
            parse_term(&mut pool, &s).unwrap()
        };
        let partition = variable_partition(&pool, l);
        let pre = pre_matches(&pool, t, l);
        let consistent = pre && is_consistent(&pool, t, &partition).unwrap();
        let matched = pool.match_root(l, t);
        prop_assert_eq!(matched.is_some(), pre && consistent);
        if let Some(sigma) = matched {
            prop_assert_eq!(pool.apply_substitution(l, &sigma).unwrap(), t);
        }
    }

    #[test]
    fn partition_size_reflects_linearity(l in term_text(true)) {
        let mut pool = pool();
        let l = parse_term(&mut pool, &l).unwrap();
        let partition = variable_partition(&pool, l);
        prop_assert_eq!(partition.num_positions(), pool.variable_positions(l).len());
        let linear = pool.var_occurrences(l).iter().all(|&(_, n)| n == 1);
        prop_assert_eq!(partition.is_linear(), linear);
        prop_assert_eq!(partition.classes().len() == partition.num_positions(), linear);
    }

    #[test]
    fn position_algebra(p in position(), q in position()) {
        let pq = p.concat(&q);
        prop_assert!(p.is_prefix_of(&pq));
        prop_assert_eq!(pq.strip_prefix(&p), Some(q.clone()));
        prop_assert_eq!(pq.to_string().parse::<Position>().unwrap(), pq.clone());
        let g = greatest_common_prefix([&p, &q]).unwrap();
        prop_assert!(g.is_prefix_of(&p) && g.is_prefix_of(&q));
        prop_assert_eq!(p.cmp_shortlex(&q), q.cmp_shortlex(&p).reverse());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn automaton_laws(seed in any::<u64>()) {
        let case = generate(seed, &FuzzConfig::default());
        let (pool, trs, _) = case.build();
        for relation in [DependencyKind::Standard, DependencyKind::OutermostPreserving] {
            let opts = ConstructionOptions { max_states: 50_000, ..ConstructionOptions::with_relation(relation) };
            let a = construct(&pool, &trs, &opts).unwrap();
            let st = a.stats();
            prop_assert_eq!(st.transition_cells, st.symbols * st.states);
            for (id, state) in a.states() {
                let roots: Vec<_> = state.goals.iter().filter(|g| g.position.is_root()).collect();
                prop_assert!(!roots.is_empty(), "{id} has no root goal");
                prop_assert!(roots.iter().any(|g| g.obligation.iter().any(|(p, _)| p == &state.label)));
                for (f, _) in pool.signature().functions() {
                    let tr = a.transition(id, f);
                    for o in &tr.out_linear {
                        prop_assert!(trs.rule(o.rule).partition.is_linear());
                    }
                    for o in &tr.out_nonlinear {
                        prop_assert!(!trs.rule(o.rule).partition.is_linear());
                    }
                    let d = derivative(&pool, a.patterns(), &state.goals, &state.label, f, a.tracks_depth());
                    prop_assert_eq!(d.fresh.len(), pool.signature().arity(f) * a.patterns().len());
                }
            }
        }
    }

    #[test]
    fn completed_tree_covers_every_position_once(seed in any::<u64>()) {
        let case = generate(seed, &FuzzConfig::default());
        let (pool, trs, t) = case.build();
        let a = construct(&pool, &trs, &ConstructionOptions::default()).unwrap();
        let full = ConfigurationTree::completed(&a, &pool, t).unwrap();
        let mut observed: Vec<Position> = full.nodes().iter().map(|c| c.observed(&a)).collect();
        observed.sort();
        let mut domain = pool.domain(t);
        domain.sort();
        prop_assert_eq!(observed, domain);
        prop_assert!(full.buds().is_empty());
    }

    #[test]
    fn eval_agrees_with_brute_force(seed in any::<u64>()) {
        let case = generate(seed, &FuzzConfig::default());
        let r = check_matching(&case);
        prop_assert!(r.violations.is_empty(), "{:?}\n{}", r.violations, case);
    }

    #[test]
    fn tree_laws(seed in any::<u64>()) {
        let case = generate(seed, &FuzzConfig::default());
        let r = check_tree_laws(&case, seed);
        prop_assert!(r.violations.is_empty(), "{:?}\n{}", r.violations, case);
    }

    #[test]
    fn engines_agree(seed in any::<u64>()) {
        let cfg = FuzzConfig::default();
        let case = generate(seed, &cfg);
        let r = check_rewriting(&case, &cfg);
        prop_assert!(r.violations.is_empty(), "{:?}\n{}", r.violations, case);
    }
}
