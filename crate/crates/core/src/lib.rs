//! Discrete-event simulation of a priority-aware shared-memory Ethernet
//! switch, with network-calculus delay bounds used as thresholds by an
//! online fault detector and a compensating scheduler.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernel`]: virtual clock and deterministic event queue
//! - [`switch`]: shared ingress FIFO, per-port priority queues, output links
//! - [`traffic`]: periodic sources and burst injection
//! - [`netcalc`]: arrival/service curves and per-flow delay bounds
//! - [`fdi`]: per-class Normal/Faulty detector
//! - [`ftc`]: compensation table and holding queues
//! - [`metrics`] and [`plot`]: run traces, CSV files, SVG scatter plots
//! - [`scenario`]: JSON scenario files, validation, and the run/bound/plot
//!   entry points used by the `switchfdi` binary
//! - [`sim`]: the event loop wiring all of the above together

pub mod fdi;
pub mod ftc;
pub mod kernel;
pub mod metrics;
pub mod netcalc;
pub mod plot;
pub mod priority;
pub mod scenario;
pub mod sim;
pub mod switch;
pub mod time;
pub mod traffic;

pub use priority::Priority;
pub use time::SimTime;
