//! Bootstrap spread and bias of a price elasticity estimate for several windows.

use std::path::PathBuf;

use steerkit::estimators::{AdjustmentMode, BinGrid, Discretization};
use steerkit::evaluation::{bootstrap, AdjustmentPed, DEFAULT_REPLICATES};
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
    let (series, _) = ingest_csv(&path, &schema)?;
    let disc = Discretization::new(
        vec![BinGrid::from_edges(&[14.539, 15.014, 15.837])?],
        vec![BinGrid::from_edges(&[-0.479, 0.131, 0.683])?],
    );
    let strict = AdjustmentPed { disc: disc.clone(), mode: AdjustmentMode::Strict };
    let reference = AdjustmentPed { disc, mode: AdjustmentMode::ZeroFill };

    println!(" K  point     bias      std      95% interval        failed");
    for k in [1, 3, 5, 7] {
        let r = match bootstrap(&strict, &reference, &series, k, DEFAULT_REPLICATES, 2024) {
            Ok(r) => r,
            Err(steerkit::Error::BootstrapFailed { failures }) => {
                println!("{k:>2}  every replicate hit an undefined stratum ({failures}/{DEFAULT_REPLICATES})");
                continue;
            }
            Err(e) => return Err(e),
        };
        println!(
            "{k:>2}  {:>7}  {:>7.3}  {:>7.3}  [{:>7.3}, {:>7.3}]  {}/{}{}",
            r.point_estimate.map_or("N/A".into(), |v| format!("{v:.3}")),
            r.bias_vs_reference,
            r.std_dev,
            r.ci_low,
            r.ci_high,
            r.failures,
            r.replicates,
            if r.unreliable { " unreliable" } else { "" }
        );
    }
    Ok(())
}
