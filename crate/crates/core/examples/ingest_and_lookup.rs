//! Builds condition graphs from a table, triples and quads, then looks
//! edges up by pattern.

use structqa::graph::{
    ingest_table, ingest_temporal, ingest_triples, io::write_dump, schema_summary, Comparator, Pattern,
    QualifierPattern, Scalar, TableOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = ingest_table(
        &["Name", "Colleges", "Hometown", "Age"],
        &[vec!["Alice", "Utah", "Texas", "20"], vec!["Bob", "Ohio", "Texas", "25"]],
        &TableOptions::default(),
    )?;
    println!("{}\n", schema_summary(&table).render());

    for e in table.lookup(&Pattern::default().relation("Colleges").tail("Utah"))? {
        println!("match: {e}");
    }
    for e in table.lookup(&Pattern::default().relation("Age").tail_cmp(Comparator::Gt, 21.0))? {
        println!("older than 21: {}", e.head);
    }

    let kg = ingest_triples(&[("Heat", "directed_by", "Michael Mann"), ("Heat", "release_year", "1995")])?;
    println!("\nknowledge graph: {} edges, heads {:?}", kg.len(), kg.head_entities());

    let tkg = ingest_temporal(&[
        ("Bill Clinton", "president_of", "USA", "1993"),
        ("George W. Bush", "president_of", "USA", "2001"),
    ])?;
    let in_office = Pattern::default().relation("president_of").qualifier(QualifierPattern {
        key: Some("time".into()),
        value: Some((Comparator::Lt, Scalar::number(2000.0))),
    });
    for e in tkg.lookup(&in_office)? {
        println!("took office before 2000: {}", e.head);
    }

    println!("\nedge dump:");
    write_dump(&tkg, std::io::stdout().lock())?;
    Ok(())
}
