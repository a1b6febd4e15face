//! The fault-injection scenario with and without the compensating
//! scheduler, plus the decision table it uses.

use std::path::Path;

use switchfdi::ftc::{decide, ClassDelayStatus};
use switchfdi::scenario::Scenario;
use switchfdi::time::format_tu;
use switchfdi::Priority;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for s in ClassDelayStatus::all() {
        println!("{:?} / {:?} / {:?} -> {}", s.high, s.mean, s.low, decide(s));
    }
    println!();

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fdi_ftc.json");
    for ftc in [false, true] {
        let mut scenario = Scenario::load(&path)?;
        scenario.ftc.enabled = ftc;
        let report = scenario.simulate()?;
        let high = report.trace.summary(Priority::HIGH)?;
        println!(
            "ftc {:<3}  High max {:>8} T.U  High violations {:>4}  decisions {}",
            if ftc { "on" } else { "off" },
            format_tu(high.max.ticks(), report.trace.tick_scale),
            high.violations,
            report.trace.decisions.len()
        );
        for d in report.trace.decisions.iter().take(4) {
            println!(
                "    at {} T.U port {}: {}",
                format_tu(d.at.ticks(), report.trace.tick_scale),
                d.port,
                d.action
            );
        }
    }
    Ok(())
}
