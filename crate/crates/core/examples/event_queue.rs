//! The deterministic event kernel on its own: a ticking source whose events
//! reschedule themselves, plus two events that tie on time.

use switchfdi::kernel::EventQueue;
use switchfdi::SimTime;

enum Ev {
    Tick(u32),
    Note(&'static str),
}

fn main() {
    let mut q = EventQueue::new();
    q.schedule(SimTime::from_tu(0, 1000), Ev::Tick(0)).unwrap();
    // same instant: dispatched in scheduling order
    q.schedule(SimTime::from_tu(7, 1000), Ev::Note("first at 7")).unwrap();
    q.schedule(SimTime::from_tu(7, 1000), Ev::Note("second at 7")).unwrap();

    let summary = q.run_until(SimTime::from_tu(20, 1000), |q, ev| match ev.payload {
        Ev::Tick(n) => {
            println!("{:>6} ticks  tick {n}", ev.fire_at.ticks());
            let next = ev.fire_at + SimTime::from_tu(5, 1000);
            q.schedule(next, Ev::Tick(n + 1)).unwrap();
        }
        Ev::Note(text) => println!("{:>6} ticks  {text}", ev.fire_at.ticks()),
    });
    println!(
        "dispatched {} events, clock at {} ticks, {} still pending",
        summary.dispatched,
        summary.final_clock.ticks(),
        q.len()
    );
}
