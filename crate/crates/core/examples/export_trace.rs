//! Writes a run's CSV trace and an SVG plot of the High class into a
//! directory (default: a fresh temporary one).
//!
//! ```text
//! cargo run --example export_trace -- [out-dir]
//! ```

use std::path::{Path, PathBuf};

use switchfdi::scenario::{plot_trace, Scenario};
use switchfdi::time::TimeValue;
use switchfdi::Priority;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = match std::env::args().nth(1) {
        Some(dir) => PathBuf::from(dir),
        None => std::env::temp_dir().join(format!("switchfdi-trace-{}", std::process::id())),
    };
    let mut scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fdi_ftc.json"))?;
    scenario.ftc.enabled = false;
    let report = scenario.run(&out)?;
    print!("{}", report.summary_text());
    let svg = out.join("high.svg");
    plot_trace(&out, Priority::HIGH, &svg, Some(&TimeValue::Units(80)))?;
    for entry in std::fs::read_dir(&out)? {
        let entry = entry?;
        println!("{:>9} bytes  {}", entry.metadata()?.len(), entry.path().display());
    }
    Ok(())
}
