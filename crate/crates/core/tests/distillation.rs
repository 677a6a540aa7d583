mod common;

use proptest::prelude::*;
use structqa::correction::Author;
use structqa::distill::{
    export, loss_c, loss_q, loss_report, loss_stage1, loss_stage2, self_records, sft_loss, teacher_records,
    PreferencePair, RecordKind, Reduction, SftRecord, TableScorer,
};

use common::fixtures::{self, run, Bench};

const EPS: f64 = 1e-9;

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for j in 0..b.len() {
            let cur = row[j + 1];
            row[j + 1] = (prev + usize::from(ca != b[j])).min(row[j] + 1).min(cur + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

#[test]
fn two_round_trace_gives_three_records() {
    let t = run(&Bench::people(), &fixtures::two_rounds());
    let records = teacher_records(&t).unwrap();
    let kinds: Vec<RecordKind> = records.iter().map(|r| r.kind).collect();
    assert_eq!(kinds, vec![RecordKind::QueryGen, RecordKind::Correction, RecordKind::Correction]);
    assert_eq!(records[0].target, fixtures::TOTAL_AGE_FINAL);
    assert_eq!(records[0].input, t.query_prompt);
    for (r, round) in records[1..].iter().zip(&t.rounds) {
        assert_eq!(r.round, Some(round.index));
        assert_eq!(r.input, round.prompt);
        assert!(r.target.ends_with(&format!("\n\n{}", fixtures::TOTAL_AGE_FINAL)));
        assert!(r.target.starts_with(&round.analysis));
    }
    assert!(!records[1].target.contains("sum(set=output_of_query1)"), "must not train on the round's own update");
}

#[test]
fn unsolved_traces_give_nothing() {
    let bench = Bench::people();
    for f in [fixtures::failed(), fixtures::gold_mismatch()] {
        let t = run(&bench, &f);
        assert!(teacher_records(&t).is_err(), "{}", f.name);
        let (sft, pairs) = export(std::slice::from_ref(&t));
        assert!(sft.is_empty() && pairs.is_empty(), "{}", f.name);
    }
}

#[test]
fn student_pairs_per_round() {
    let bench = Bench::people();
    let one = run(&bench, &fixtures::one_round(Author::Student));
    let pairs = self_records(&one).unwrap();
    assert_eq!(pairs.len(), 1);
    assert_eq!(pairs[0].rejected, one.initial_plan_text);

    let three = run(&bench, &fixtures::three_rounds_student());
    assert_eq!(three.n, 3);
    let pairs = self_records(&three).unwrap();
    assert_eq!(pairs.len(), 3);
    for p in &pairs {
        assert_eq!(p.chosen, fixtures::MEAN_AGE_FINAL);
        assert_eq!(p.prompt, three.query_prompt);
    }
    let distances: Vec<usize> = pairs.iter().map(|p| levenshtein(&p.rejected, &p.chosen)).collect();
    assert!(distances.windows(2).all(|w| w[0] >= w[1]), "{distances:?}");
}

#[test]
fn teacher_traces_give_no_pairs() {
    let t = run(&Bench::people(), &fixtures::two_rounds());
    assert!(self_records(&t).is_err());
}

#[test]
fn export_over_all_fixtures() {
    let bench = Bench::people();
    let traces: Vec<_> = fixtures::all().iter().map(|f| run(&bench, f)).collect();
    let (sft, pairs) = export(&traces);
    // direct 1, one_round 2, two_rounds 3, student one_round 2, student three 4
    assert_eq!(sft.len(), 12);
    assert_eq!(pairs.len(), 4);
}

fn record(kind: RecordKind, target: &str) -> SftRecord {
    SftRecord {
        kind,
        input: "ctx".into(),
        target: target.into(),
        round: None,
        trace_id: "t".into(),
    }
}

fn pair(chosen: &str, rejected: &str) -> PreferencePair {
    PreferencePair {
        prompt: "ctx".into(),
        chosen: chosen.into(),
        rejected: rejected.into(),
        round: 1,
        trace_id: "t".into(),
    }
}

fn scorer() -> TableScorer {
    TableScorer::new([("a", -0.1), ("b", -0.2), ("c", -0.3), ("d", -0.4)], -1.0)
        .with_sequence("good", vec![-1.0])
        .with_sequence("bad", vec![-2.5])
        .with_sequence("worse", vec![-0.5])
}

#[test]
fn query_loss_from_token_table() {
    let l = loss_q(&[record(RecordKind::QueryGen, "a b c")], &scorer()).unwrap();
    assert!((l - 0.6).abs() < EPS, "{l}");
}

#[test]
fn stage_one_is_sum_of_parts() {
    let records = [
        record(RecordKind::QueryGen, "a b c"),
        record(RecordKind::Correction, "d d"),
        record(RecordKind::Correction, "b unknown"),
    ];
    let r = loss_report(&records, &[], &scorer()).unwrap();
    assert!((r.l_q - 0.6).abs() < EPS);
    assert!((r.l_c - 2.0).abs() < EPS, "0.8 + 1.2, got {}", r.l_c);
    assert_eq!(r.l_1, r.l_q + r.l_c);
    assert_eq!(r.l_2, 0.0);
}

#[test]
fn preference_loss_single_pair() {
    let l = loss_stage2(&[pair("good", "bad")], &scorer()).unwrap();
    assert!((l + 1.5).abs() < EPS, "{l}");
}

#[test]
fn preference_loss_shared_chosen() {
    let l = loss_stage2(&[pair("good", "bad"), pair("good", "worse")], &scorer()).unwrap();
    assert!((l + 1.0).abs() < EPS, "-(1.5) - (-0.5), got {l}");
}

#[test]
fn token_mean_reduction() {
    let records = [record(RecordKind::Correction, "a b"), record(RecordKind::Correction, "c d")];
    let l = sft_loss(&records, RecordKind::Correction, &scorer(), Reduction::TokenMean).unwrap();
    assert!((l - 0.25).abs() < EPS, "{l}");
}

#[test]
fn wrong_kind_rejected() {
    assert!(loss_c(&[record(RecordKind::QueryGen, "a")], &scorer()).is_err());
}

#[test]
fn positive_logprob_rejected() {
    let s = TableScorer::new([("a", 0.5)], -1.0);
    assert!(loss_q(&[record(RecordKind::QueryGen, "a")], &s).is_err());
}

proptest! {
    #[test]
    fn stage_one_additive(q in prop::collection::vec(-5.0f64..0.0, 0..6), c in prop::collection::vec(-5.0f64..0.0, 0..6)) {
        let s = TableScorer::default().with_sequence("q", q.clone()).with_sequence("c", c.clone());
        let lq = loss_q(&[record(RecordKind::QueryGen, "q")], &s).unwrap();
        let lc = loss_c(&[record(RecordKind::Correction, "c")], &s).unwrap();
        prop_assert!((lq + q.iter().sum::<f64>()).abs() < EPS);
        prop_assert!((lc + c.iter().sum::<f64>()).abs() < EPS);
        prop_assert_eq!(loss_stage1(lq, lc), lq + lc);
    }

    #[test]
    fn preference_loss_is_negated_margin(cor in -10.0f64..0.0, err in -10.0f64..0.0) {
        let s = TableScorer::default().with_sequence("x", vec![cor]).with_sequence("y", vec![err]);
        let l = loss_stage2(&[pair("x", "y")], &s).unwrap();
        prop_assert!((l - (err - cor)).abs() < EPS);
    }
}
