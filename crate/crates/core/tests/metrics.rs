use std::collections::BTreeMap;
use std::io::Cursor;

use clozeforge::metrics::{
    evaluate, exact_match, list_f1, mrr, normalize, read_answers, reciprocal_rank, span_f1, AnswerValue, EvalError,
    Task,
};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    pred: String,
    golds: Vec<String>,
    f1: f64,
    em: f64,
    normalized: String,
}

#[test]
fn conformance_fixture_matches_reference_exactly() {
    let cases: Vec<Case> = serde_json::from_str(include_str!("../fixtures/metrics_conformance.json")).unwrap();
    assert_eq!(cases.len(), 20);
    for c in &cases {
        assert_eq!(normalize(&c.pred), c.normalized, "{:?}", c.pred);
        assert_eq!(span_f1(&c.pred, &c.golds), c.f1, "{:?} vs {:?}", c.pred, c.golds);
        assert_eq!(exact_match(&c.pred, &c.golds), c.em, "{:?} vs {:?}", c.pred, c.golds);
    }
    let worked = cases.iter().find(|c| c.pred == "impaired social interaction").unwrap();
    assert_eq!(worked.golds, ["social interaction"]);
    assert_eq!(span_f1(&worked.pred, &worked.golds), 0.8);
}

#[test]
fn ranked_and_list_measures() {
    assert_eq!(reciprocal_rank(&["x", "Paris"], &["paris"]), 0.5);
    assert_eq!(reciprocal_rank(&["x", "y"], &["paris"]), 0.0);
    let qs = vec![(vec!["a1", "gold"], vec!["gold"]), (vec!["gold"], vec!["gold"])];
    assert_eq!(mrr(&qs), 0.75);
    // 2 of 3 predicted correct, 2 of 4 gold found: p = 2/3, r = 1/2
    let f = list_f1(&["a", "b", "z"], &["a", "b", "c", "d"]);
    assert!((f - 4.0 / 7.0).abs() < 1e-12);
}

fn answers(lines: &str) -> BTreeMap<String, AnswerValue> {
    read_answers(Cursor::new(lines)).unwrap()
}

#[test]
fn evaluate_by_task() {
    let gold = answers("{\"qid\":\"1\",\"gold\":[\"social interaction\"]}\n{\"qid\":\"2\",\"answers\":\"Paris\"}\n");
    let pred = answers("{\"qid\":\"1\",\"pred\":\"impaired social interaction\"}\n{\"qid\":\"2\",\"pred\":\"paris\"}\n");
    let r = evaluate(Task::Span, &pred, &gold).unwrap();
    assert_eq!(r.f1, Some(0.9));
    assert_eq!(r.em, Some(0.5));

    let gold = answers("{\"qid\":\"q\",\"gold\":{\"set\":[\"a\",\"b\"]}}\n");
    let pred = answers("{\"qid\":\"q\",\"pred\":[\"b\",\"c\"]}\n");
    assert_eq!(evaluate(Task::List, &pred, &gold).unwrap().list_f1, Some(0.5));
    assert_eq!(evaluate(Task::Factoid, &pred, &gold).unwrap().mrr, Some(1.0));
}

#[test]
fn evaluate_rejects_misaligned_inputs() {
    let gold = answers("{\"qid\":\"1\",\"gold\":\"x\"}\n");
    let other = answers("{\"qid\":\"2\",\"pred\":\"x\"}\n");
    assert!(matches!(evaluate(Task::Span, &other, &gold), Err(EvalError::MissingPredictions(_))));
    assert!(matches!(evaluate(Task::Span, &other, &BTreeMap::new()), Err(EvalError::EmptyGold)));
    let both = answers("{\"qid\":\"1\",\"pred\":\"x\"}\n{\"qid\":\"2\",\"pred\":\"x\"}\n");
    assert!(matches!(evaluate(Task::Span, &both, &gold), Err(EvalError::UnknownPredictions(_))));
    assert!(matches!(
        read_answers(Cursor::new("{\"qid\":\"1\",\"pred\":\"x\"}\n{\"qid\":\"1\",\"pred\":\"y\"}\n")),
        Err(EvalError::DuplicateQid(_))
    ));
    assert!(matches!(read_answers(Cursor::new("{oops\n")), Err(EvalError::Parse { line: 1, .. })));
}

proptest! {
    #[test]
    fn em_bounded_by_f1(pred in "[a-c ,.!]{0,12}", gold in "[a-c ,.!]{0,12}") {
        let golds = [gold.clone()];
        let f1 = span_f1(&pred, &golds);
        let em = exact_match(&pred, &golds);
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(em <= f1);
        prop_assert_eq!(span_f1(&gold, &golds), 1.0);
        prop_assert_eq!(normalize(&normalize(&pred)), normalize(&pred));
    }

    #[test]
    fn f1_symmetric_for_single_gold(a in "[a-d ]{1,12}", b in "[a-d ]{1,12}") {
        prop_assert_eq!(span_f1(&a, std::slice::from_ref(&b)), span_f1(&b, std::slice::from_ref(&a)));
    }
}
