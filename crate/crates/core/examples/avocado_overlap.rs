//! Overlap of price buckets as the window grows, on the bundled avocado fixture.

use std::path::PathBuf;

use steerkit::estimators::{BinGrid, Discretization};
use steerkit::evaluation::{overlap_sweep, ActionQuery};
use steerkit::ingest::{ingest_csv, Combine, GroupSpec, IngestSchema};

fn main() -> steerkit::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/avocado_fixture.csv");
    let mut schema = IngestSchema::new("Date", &["AveragePrice"], &["Total Volume"]);
    schema.log_transform = true;
    schema.group = Some(GroupSpec {
        column: "region".into(),
        keep: vec!["Southeast".into(), "GreatLakes".into()],
        combine: Combine::Concatenate,
    });
    let (series, audit) = ingest_csv(&path, &schema)?;
    println!("{} observations from {} rows", audit.observations, audit.rows_read);

    let disc = Discretization::new(
        vec![BinGrid::from_edges(&[14.539, 15.014, 15.837])?],
        vec![BinGrid::from_edges(&[-0.479, 0.131, 0.683])?],
    );
    let queries = [ActionQuery::new("Low", vec![0]), ActionQuery::new("High", vec![1])];
    let rows = overlap_sweep(&series, &[1, 3, 5, 7, 9], &disc, &queries)?;
    println!(" K  bin   estimate  undefined  mass");
    for row in rows {
        let estimate = row.estimate.map_or("N/A".to_string(), |v| format!("{:.3}", v[0]));
        println!(
            "{:>2}  {:<4}  {estimate:>8}  {:>4}/{:<4}  {:.1}%",
            row.k,
            row.action_bin,
            row.undefined_strata,
            row.occupied_strata,
            100.0 * row.undefined_mass
        );
    }
    Ok(())
}
