//! Feeds delivery records to the detector by hand and prints each verdict.

use switchfdi::fdi::{Detector, Thresholds};
use switchfdi::metrics::DeliveryRecord;
use switchfdi::{Priority, SimTime};

fn main() {
    let thresholds = Thresholds::new()
        .with_class(Priority::HIGH, SimTime(80_000))
        .with_class(Priority::MEAN, SimTime(80_000))
        .with_class(Priority::LOW, SimTime(80_000));
    // two compliant deliveries in a row are needed to recover
    let mut fdi = Detector::new(Priority::THREE_CLASS, thresholds, 2);

    for (id, delay_tu) in [(0u64, 3u64), (1, 80), (2, 81), (3, 4), (4, 5), (5, 6)] {
        let d = DeliveryRecord {
            packet_id: id,
            flow_id: "hp".into(),
            class: Priority::HIGH,
            port: 0,
            created_at: SimTime(0),
            delivered_at: SimTime(delay_tu * 1000),
            delay: SimTime(delay_tu * 1000),
        };
        let obs = fdi.observe(&d).unwrap();
        let state = fdi.class_state(Priority::HIGH).unwrap();
        print!("packet {id}: delay {delay_tu:>2} T.U -> {:?}", state.mode);
        if let Some(f) = obs.fault {
            print!("  fault {} residual {} ticks", f.kind, f.residual);
        }
        if let Some(m) = obs.transition {
            print!("  (now {m:?})");
        }
        println!();
    }
}
