mod common;

use std::fs;

use fict_core::conllu::parse_str;

#[test]
fn filters_match_hand_labels() {
    common::check_golden_filters().unwrap();
}

#[test]
fn golden_fixture_round_trips() {
    let text = fs::read_to_string(common::fixture("golden.conllu")).unwrap();
    let sentences = parse_str(&text).unwrap();
    let again: String = sentences.iter().map(|s| s.to_conllu()).collect();
    assert_eq!(again, text);
}
