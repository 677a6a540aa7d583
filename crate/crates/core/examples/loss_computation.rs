//! Computes the training losses over a few records with a lookup-table
//! scorer standing in for a model.

use structqa::distill::{loss_report, PreferencePair, RecordKind, SftRecord, TableScorer};

fn record(kind: RecordKind, target: &str) -> SftRecord {
    SftRecord {
        kind,
        input: "prompt".into(),
        target: target.into(),
        round: None,
        trace_id: "demo".into(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scorer = TableScorer::new([("query1", -0.1), ("=", -0.2), ("count(set=output_of_query1)", -0.3)], -1.0)
        .with_sequence("good", vec![-1.0])
        .with_sequence("bad", vec![-2.5]);
    let records = [
        record(RecordKind::QueryGen, "query1 = count(set=output_of_query1)"),
        record(RecordKind::Correction, "Use count. query1 = count(set=output_of_query1)"),
    ];
    let pairs = [PreferencePair {
        prompt: "prompt".into(),
        chosen: "good".into(),
        rejected: "bad".into(),
        round: 1,
        trace_id: "demo".into(),
    }];
    let r = loss_report(&records, &pairs, &scorer)?;
    println!("query generation {:.3}", r.l_q);
    println!("correction       {:.3}", r.l_c);
    println!("stage one        {:.3}", r.l_1);
    println!("stage two        {:.3}", r.l_2);
    Ok(())
}
