//! Network-calculus bounds for flows sharing one output port, step by step
//! and through `switch_bounds`.

use num_rational::Ratio;
use switchfdi::netcalc::{delay_bound, fmt_rational, leftover_service, switch_bounds, ArrivalCurve, ServiceCurve};
use switchfdi::switch::{SchedulerKind, SwitchConfig};
use switchfdi::traffic::FlowSpec;
use switchfdi::{Priority, SimTime};

fn main() {
    let q = |n, d| Ratio::new(n, d);

    // token bucket (4, 1) through a rate-latency server (2, 1)
    let d = delay_bound(ArrivalCurve::new(q(4, 1), q(1, 1)), ServiceCurve::new(q(2, 1), q(1, 1))).unwrap();
    println!("delay_bound(sigma=4, rho=1, R=2, T=1) = {}", fmt_rational(&d));

    // a low class behind one high flow of 2 T.U every 5 T.U
    let link = ServiceCurve::new(q(1, 1), q(0, 1));
    let high = ArrivalCurve::new(q(2, 1), q(2, 5));
    let lo = leftover_service(link, high, q(0, 1)).unwrap();
    println!(
        "leftover for low: rate {} latency {}",
        fmt_rational(&lo.rate),
        fmt_rational(&lo.latency)
    );

    let cfg = SwitchConfig {
        num_ports: 1,
        priorities: 3,
        ingress_service: SimTime::ZERO,
        output_service: SimTime(2000),
        shared_capacity: None,
        scheduler: SchedulerKind::StrictPriority,
    };
    let flows = [
        FlowSpec::periodic("hp", Priority::HIGH, (0, 0), SimTime(5000), SimTime(2000)),
        FlowSpec::periodic("mp", Priority::MEAN, (0, 0), SimTime(10000), SimTime(1000)),
        FlowSpec::periodic("lp", Priority::LOW, (0, 0), SimTime(5000), SimTime(2000)),
    ];
    for b in switch_bounds(&cfg, &flows, 1000) {
        match b.bound {
            Ok(d) => println!(
                "{:>3} {:<4} bound {:>6} T.U = {} ticks",
                b.flow_id,
                b.class.to_string(),
                fmt_rational(&d.bound),
                d.bound_ticks.ticks()
            ),
            Err(e) => println!("{:>3} {:<4} {e}", b.flow_id, b.class.to_string()),
        }
    }
}
