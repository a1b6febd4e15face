//! Adds three extra High frames per period on one port and watches the
//! worst delay grow window by window.

use std::path::Path;

use switchfdi::scenario::Scenario;
use switchfdi::time::format_tu;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/congested.json");
    let report = Scenario::load(&path)?.simulate()?;
    let scale = report.trace.tick_scale;
    let window = 1000 * scale;
    let windows = report.trace.horizon.ticks().div_ceil(window) as usize;
    let mut maxima = vec![0u64; windows];
    for d in &report.trace.deliveries {
        let w = &mut maxima[((d.delivered_at.ticks() / window) as usize).min(windows - 1)];
        *w = (*w).max(d.delay.ticks());
    }
    for (i, m) in maxima.iter().enumerate().filter(|(_, m)| **m > 0) {
        println!(
            "window {:>5}..{:<5} T.U  max delay {:>9} T.U",
            i as u64 * 1000,
            (i as u64 + 1) * 1000,
            format_tu(*m, scale)
        );
    }
    println!("backlog at the horizon: {} frames", report.conservation.queued);
    Ok(())
}
