//! Online delay-fault detector.
//!
//! Every delivered frame is compared against its class threshold. A frame
//! whose delay strictly exceeds the threshold raises a [`FaultEvent`] and
//! puts its class in [`Mode::Faulty`]; `k` consecutive compliant
//! deliveries return the class to [`Mode::Normal`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::metrics::DeliveryRecord;
use crate::netcalc::DelayBound;
use crate::priority::Priority;
use crate::switch::{FlowId, Packet};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Normal,
    Faulty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassState {
    pub class: Priority,
    pub mode: Mode,
    pub since: SimTime,
    pub compliant_streak: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    DelayViolation,
    Drop,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::DelayViolation => "delay_violation",
            FaultKind::Drop => "drop",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultEvent {
    pub at: SimTime,
    pub class: Priority,
    pub packet_id: u64,
    pub measured: SimTime,
    pub bound: SimTime,
    /// `measured - bound` in ticks; zero for drops.
    pub residual: i64,
    pub kind: FaultKind,
}

impl FaultEvent {
    pub fn drop_of(p: &Packet, at: SimTime, bound: Option<SimTime>) -> FaultEvent {
        FaultEvent {
            at,
            class: p.class,
            packet_id: p.id,
            measured: SimTime::ZERO,
            bound: bound.unwrap_or_default(),
            residual: 0,
            kind: FaultKind::Drop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FdiError {
    #[error("no delay bound configured for class {0} (flow {1})")]
    MissingBound(Priority, String),
    #[error("class {0} is not monitored")]
    UnknownClass(Priority),
    #[error("delivery of class {delivery} checked against a bound for class {bound}")]
    ClassMismatch { delivery: Priority, bound: Priority },
}

/// Per-class thresholds in ticks: explicit class overrides win over
/// per-flow computed bounds.
#[derive(Debug, Clone, Default)]
pub struct Thresholds {
    class_overrides: BTreeMap<Priority, SimTime>,
    per_flow: HashMap<FlowId, SimTime>,
}

impl Thresholds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_class(mut self, class: Priority, bound: SimTime) -> Self {
        self.class_overrides.insert(class, bound);
        self
    }

    pub fn set_class(&mut self, class: Priority, bound: SimTime) {
        self.class_overrides.insert(class, bound);
    }

    pub fn set_flow(&mut self, flow: FlowId, bound: SimTime) {
        self.per_flow.insert(flow, bound);
    }

    pub fn lookup(&self, flow: &str, class: Priority) -> Option<SimTime> {
        self.class_overrides
            .get(&class)
            .or_else(|| self.per_flow.get(flow))
            .copied()
    }

    pub fn class_override(&self, class: Priority) -> Option<SimTime> {
        self.class_overrides.get(&class).copied()
    }
}

/// Result of checking one delivery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub fault: Option<FaultEvent>,
    /// Set when the class switched between Normal and Faulty.
    pub transition: Option<Mode>,
}

pub struct Detector {
    states: BTreeMap<Priority, ClassState>,
    thresholds: Thresholds,
    k: u32,
}

impl Detector {
    /// Monitors `classes`, all starting Normal. `k` is clamped to at least 1.
    pub fn new(classes: impl IntoIterator<Item = Priority>, thresholds: Thresholds, k: u32) -> Detector {
        let states = classes
            .into_iter()
            .map(|class| {
                (
                    class,
                    ClassState {
                        class,
                        mode: Mode::Normal,
                        since: SimTime::ZERO,
                        compliant_streak: 0,
                    },
                )
            })
            .collect();
        Detector {
            states,
            thresholds,
            k: k.max(1),
        }
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn class_state(&self, class: Priority) -> Result<ClassState, FdiError> {
        self.states.get(&class).copied().ok_or(FdiError::UnknownClass(class))
    }

    pub fn is_faulty(&self, class: Priority) -> bool {
        self.states.get(&class).is_some_and(|s| s.mode == Mode::Faulty)
    }

    /// Checks `d` against the threshold configured for its flow and class.
    pub fn observe(&mut self, d: &DeliveryRecord) -> Result<Observation, FdiError> {
        let bound = self
            .thresholds
            .lookup(&d.flow_id, d.class)
            .ok_or_else(|| FdiError::MissingBound(d.class, d.flow_id.to_string()))?;
        self.observe_ticks(d, bound)
    }

    /// Checks `d` against an explicit bound of the same class.
    pub fn observe_against(&mut self, d: &DeliveryRecord, bound: &DelayBound) -> Result<Observation, FdiError> {
        if d.class != bound.class {
            return Err(FdiError::ClassMismatch {
                delivery: d.class,
                bound: bound.class,
            });
        }
        self.observe_ticks(d, bound.bound_ticks)
    }

    fn observe_ticks(&mut self, d: &DeliveryRecord, bound: SimTime) -> Result<Observation, FdiError> {
        let k = self.k;
        let state = self.states.get_mut(&d.class).ok_or(FdiError::UnknownClass(d.class))?;
        let before = state.mode;
        let fault = if d.delay > bound {
            state.mode = Mode::Faulty;
            state.compliant_streak = 0;
            Some(FaultEvent {
                at: d.delivered_at,
                class: d.class,
                packet_id: d.packet_id,
                measured: d.delay,
                bound,
                residual: d.delay.ticks() as i64 - bound.ticks() as i64,
                kind: FaultKind::DelayViolation,
            })
        } else {
            state.compliant_streak = state.compliant_streak.saturating_add(1);
            if state.compliant_streak >= k {
                state.mode = Mode::Normal;
            }
            None
        };
        let transition = (state.mode != before).then(|| {
            state.since = d.delivered_at;
            state.mode
        });
        Ok(Observation { fault, transition })
    }
}
