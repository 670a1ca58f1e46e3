use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlqdag::baseline::{enumerate, BaselineConfig};
use rlqdag::check::{check_consistency, check_well_formed, validate_restrictions};
use rlqdag::cost::Estimator;
use rlqdag::eval::{constants, evaluate, evaluate_naive, random_graph};
use rlqdag::frontend::{parse_query, parse_term, print_term, Query};
use rlqdag::plans::{count_plans, interpret};
use rlqdag::syntax::{export, interpret as tree_interpret, unfold};
use rlqdag::term::{canonicalize, type_of, Name};
use rlqdag::transforms::{expand, ExpansionConfig, Rule, RuleSet};
use rlqdag::{EqId, Store, Term};

fn path() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(String::from);
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| format!("({})+", x)),
            inner.clone().prop_map(|x| format!("^({})", x)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({})/({})", x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({})|({})", x, y)),
        ]
    })
}

fn query() -> impl Strategy<Value = String> {
    (path(), 0..3usize).prop_map(|(p, k)| match k {
        0 => p,
        1 => format!("?s <- ?s {} v1", p),
        _ => format!("?t <- v2 {} ?t", p),
    })
}

fn expanded(q: &Query, rules: RuleSet, rep: bool) -> (Store, EqId) {
    let mut s = Store::new(q.catalog.clone());
    let root = s.add_term(&q.term).unwrap();
    let cfg = ExpansionConfig { rules, rep, max_nodes: 20_000, ..Default::default() };
    expand(&mut s, &cfg);
    let root = s.find(root);
    (s, root)
}

fn rules() -> impl Strategy<Value = RuleSet> {
    proptest::collection::vec(any::<bool>(), Rule::ALL.len()).prop_map(|bits| {
        let on: Vec<Rule> = Rule::ALL.iter().zip(bits).filter(|(_, b)| *b).map(|(r, _)| *r).collect();
        RuleSet::of(&on)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn printed_terms_parse_back(src in query()) {
        let q = parse_query(&src).unwrap();
        let back = parse_term(&print_term(&q.term)).unwrap();
        prop_assert_eq!(canonicalize(&back), canonicalize(&q.term));
        prop_assert!(type_of(&q.term, &q.catalog).is_ok());
    }

    #[test]
    fn translated_queries_respect_restrictions(src in query()) {
        let q = parse_query(&src).unwrap();
        let mut s = Store::new(q.catalog.clone());
        s.add_term(&q.term).unwrap();
        prop_assert!(validate_restrictions(&s).is_empty());
    }

    #[test]
    fn semi_naive_matches_naive(src in query(), seed in any::<u64>(), nodes in 3..25usize, edges in 1..40usize) {
        let q = parse_query(&src).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<Name> = q.catalog.keys().cloned().collect();
        let db = random_graph(&labels, nodes, edges, &constants(&q.term), &mut rng);
        prop_assert_eq!(evaluate(&q.term, &db).unwrap(), evaluate_naive(&q.term, &db).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn count_matches_interpretation(src in query(), rules in rules(), rep in any::<bool>()) {
        let q = parse_query(&src).unwrap();
        let (s, root) = expanded(&q, rules, rep);
        let n = count_plans(&s, root).unwrap();
        prop_assume!(n <= 20_000);
        let (plans, cut) = interpret(&s, root, 20_000);
        prop_assert!(!cut);
        prop_assert_eq!(plans.len() as u128, n);
        let distinct: HashSet<_> = plans.iter().collect();
        prop_assert_eq!(distinct.len(), plans.len());
        for p in plans.iter().take(50) {
            prop_assert!(s.contains_plan(root, p));
        }
    }

    #[test]
    fn unfold_preserves_interpretation(src in query(), rules in rules()) {
        let q = parse_query(&src).unwrap();
        let (s, root) = expanded(&q, rules, false);
        let Ok(tree) = export(&s, root, 50_000) else { return Ok(()) };
        let (a, cut_a) = tree_interpret(&tree, &Vec::new(), 20_000).unwrap();
        prop_assume!(!cut_a);
        let flat = unfold(&tree, &Vec::new()).unwrap();
        prop_assert!(flat.binders.is_empty());
        let (b, cut_b) = tree_interpret(&flat, &Vec::new(), 20_000).unwrap();
        prop_assert!(!cut_b);
        let canon = |v: &[std::sync::Arc<Term>]| v.iter().map(|t| canonicalize(t)).collect::<HashSet<_>>();
        prop_assert_eq!(canon(&a), canon(&b));
        let (c, _) = interpret(&s, root, 20_000);
        prop_assert_eq!(canon(&a), canon(&c));
    }

    #[test]
    fn expansions_are_well_formed_and_consistent(src in query(), seed in any::<u64>(), rep in any::<bool>()) {
        let q = parse_query(&src).unwrap();
        let (s, _) = expanded(&q, RuleSet::all(), rep);
        prop_assert!(check_consistency(&s).is_empty(), "{:?}", check_consistency(&s));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<Name> = q.catalog.keys().cloned().collect();
        let mut db = random_graph(&labels, 8, 12, &constants(&q.term), &mut rng);
        for c in s.live_classes() {
            let r = check_well_formed(&s, c, &mut db, 8, &mut rng).unwrap();
            prop_assert!(r.is_none(), "{}", r.unwrap());
        }
    }

    #[test]
    fn best_plan_is_a_member_and_no_worse(src in query()) {
        let q = parse_query(&src).unwrap();
        let (s, root) = expanded(&q, RuleSet::all(), false);
        let mut e = Estimator::new(&s, None, Default::default());
        let (best, cost) = e.best_plan(root).unwrap();
        prop_assert!(s.contains_plan(root, &best));
        prop_assert!(cost <= e.term_cost(&q.term) * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn store_and_baseline_agree(src in query(), rep in any::<bool>()) {
        let q = parse_query(&src).unwrap();
        let (s, root) = expanded(&q, RuleSet::all(), rep);
        let n = count_plans(&s, root).unwrap();
        prop_assume!(n <= 2_000);
        let b = enumerate(&q.term, &q.catalog, &BaselineConfig { rep, ..Default::default() });
        prop_assert!(b.complete());
        let (mine, _) = interpret(&s, root, 2_000);
        let a: HashSet<String> = mine.iter().map(|t| t.to_string()).collect();
        let o: HashSet<String> = b.plans.iter().map(|t| t.to_string()).collect();
        prop_assert_eq!(a, o);
    }
}
