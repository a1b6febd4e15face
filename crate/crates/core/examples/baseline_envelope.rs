//! Runs the nominal reference scenario and prints per-class delay ranges.

use std::path::Path;

use switchfdi::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/baseline.json");
    let scenario = Scenario::load(&path)?;
    print!("{}", scenario.bound_report()?);
    let report = scenario.simulate()?;
    print!("{}", report.summary_text());
    Ok(())
}
