//! Fault-tolerant scheduling for three-class output ports.
//!
//! The per-class fault status selects one of four scheduling actions. The
//! holding actions park mean- and/or low-priority frames in a per-port
//! holding FIFO so they cannot occupy the link ahead of urgent traffic.

use std::collections::VecDeque;
use std::fmt;

use crate::fdi::Detector;
use crate::priority::Priority;
use crate::switch::{OutputQueues, Packet};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassStatus {
    WithinBound,
    Violating,
}

impl ClassStatus {
    pub fn is_violating(self) -> bool {
        self == ClassStatus::Violating
    }
}

impl fmt::Display for ClassStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassStatus::WithinBound => "within_bound",
            ClassStatus::Violating => "violating",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassDelayStatus {
    pub high: ClassStatus,
    pub mean: ClassStatus,
    pub low: ClassStatus,
}

impl ClassDelayStatus {
    pub const ALL_WITHIN: ClassDelayStatus = ClassDelayStatus {
        high: ClassStatus::WithinBound,
        mean: ClassStatus::WithinBound,
        low: ClassStatus::WithinBound,
    };

    pub fn from_detector(d: &Detector) -> ClassDelayStatus {
        let status = |c| {
            if d.is_faulty(c) {
                ClassStatus::Violating
            } else {
                ClassStatus::WithinBound
            }
        };
        ClassDelayStatus {
            high: status(Priority::HIGH),
            mean: status(Priority::MEAN),
            low: status(Priority::LOW),
        }
    }

    /// All eight combinations, high-priority status varying slowest.
    pub fn all() -> impl Iterator<Item = ClassDelayStatus> {
        let both = [ClassStatus::WithinBound, ClassStatus::Violating];
        both.into_iter().flat_map(move |high| {
            both.into_iter()
                .flat_map(move |mean| both.into_iter().map(move |low| ClassDelayStatus { high, mean, low }))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// Park mean and low frames; only high frames are sent.
    TransmitHpHoldMpBp,
    /// Normal priority order; a low frame goes only when no mean frame waits.
    TransmitBpIfNoMp,
    /// Park low frames; send high, then mean.
    HoldBpTransmitHpThenMp,
    NoCompensation,
}

impl Action {
    pub fn held_classes(self) -> &'static [Priority] {
        match self {
            Action::TransmitHpHoldMpBp => &[Priority::MEAN, Priority::LOW],
            Action::HoldBpTransmitHpThenMp => &[Priority::LOW],
            Action::TransmitBpIfNoMp | Action::NoCompensation => &[],
        }
    }

    pub fn holds(self, class: Priority) -> bool {
        self.held_classes().contains(&class)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::TransmitHpHoldMpBp => "transmit_hp_hold_mp_bp",
            Action::TransmitBpIfNoMp => "transmit_bp_if_no_mp",
            Action::HoldBpTransmitHpThenMp => "hold_bp_transmit_hp_then_mp",
            Action::NoCompensation => "no_compensation",
        })
    }
}

/// The compensation table.
pub fn decide(s: ClassDelayStatus) -> Action {
    use ClassStatus::*;
    match (s.high, s.mean, s.low) {
        (Violating, _, _) => Action::TransmitHpHoldMpBp,
        (WithinBound, Violating, _) => Action::HoldBpTransmitHpThenMp,
        (WithinBound, WithinBound, Violating) => Action::TransmitBpIfNoMp,
        (WithinBound, WithinBound, WithinBound) => Action::NoCompensation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompensationDecision {
    pub action: Action,
    pub port: usize,
    pub at: SimTime,
    pub status: ClassDelayStatus,
}

/// Frames parked by a holding action, in hold order.
#[derive(Debug, Clone, Default)]
pub struct HoldingQueue {
    held: VecDeque<Packet>,
}

impl HoldingQueue {
    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.held.iter()
    }

    fn hold_all(&mut self, queues: &mut OutputQueues, class: Priority) {
        self.held.extend(queues.take_all(class));
    }

    /// Returns held frames whose class satisfies `release` to the heads of
    /// their class queues. Held frames are always older
    /// than anything that reached the class queue afterwards, so putting
    /// them in front keeps each class FIFO.
    fn release_where(&mut self, queues: &mut OutputQueues, release: impl Fn(Priority) -> bool) {
        let (out, stay): (VecDeque<Packet>, VecDeque<Packet>) = std::mem::take(&mut self.held)
            .into_iter()
            .partition(|p| release(p.class));
        self.held = stay;
        for p in out.into_iter().rev() {
            queues.push_front(p);
        }
    }

    fn release_all(&mut self, queues: &mut OutputQueues) {
        self.release_where(queues, |_| true);
    }
}

/// Executes `action` on one idle port and returns the frame to transmit.
pub fn apply(action: Action, queues: &mut OutputQueues, holding: &mut HoldingQueue) -> Option<Packet> {
    holding.release_where(queues, |c| !action.holds(c));
    for &class in action.held_classes() {
        holding.hold_all(queues, class);
    }
    match action {
        Action::TransmitHpHoldMpBp => queues.pop(Priority::HIGH),
        Action::TransmitBpIfNoMp => queues
            .pop(Priority::HIGH)
            .or_else(|| queues.pop(Priority::MEAN))
            .or_else(|| queues.pop(Priority::LOW)),
        Action::HoldBpTransmitHpThenMp => queues.pop(Priority::HIGH).or_else(|| queues.pop(Priority::MEAN)),
        Action::NoCompensation => queues.pop_strict_priority(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum FtcError {
    #[error("cannot revert port {port}: not every class is within its bound")]
    StillViolating { port: usize },
}

/// Per-port compensation state.
pub struct Compensator {
    current: Vec<Action>,
    holding: Vec<HoldingQueue>,
}

impl Compensator {
    pub fn new(num_ports: usize) -> Compensator {
        Compensator {
            current: vec![Action::NoCompensation; num_ports],
            holding: vec![HoldingQueue::default(); num_ports],
        }
    }

    pub fn action(&self, port: usize) -> Action {
        self.current[port]
    }

    pub fn holding(&self, port: usize) -> &HoldingQueue {
        &self.holding[port]
    }

    pub fn held(&self) -> usize {
        self.holding.iter().map(HoldingQueue::len).sum()
    }

    /// Re-decides for `port`; returns the decision when the action changed.
    pub fn review(&mut self, port: usize, status: ClassDelayStatus, at: SimTime) -> Option<CompensationDecision> {
        let action = decide(status);
        if self.current[port] == action {
            return None;
        }
        self.current[port] = action;
        Some(CompensationDecision {
            action,
            port,
            at,
            status,
        })
    }

    /// Moves frames between class queues and the holding FIFO as the
    /// current action requires, without selecting anything.
    pub fn settle(&mut self, port: usize, queues: &mut OutputQueues) {
        let action = self.current[port];
        let holding = &mut self.holding[port];
        holding.release_where(queues, |c| !action.holds(c));
        for &class in action.held_classes() {
            holding.hold_all(queues, class);
        }
    }

    /// Selection on an idle link under the current action.
    pub fn select(&mut self, port: usize, queues: &mut OutputQueues) -> Option<Packet> {
        apply(self.current[port], queues, &mut self.holding[port])
    }

    /// Returns `port` to plain strict priority once every class is within
    /// bound, draining the holding FIFO back into the class queues.
    pub fn revert(&mut self, port: usize, status: ClassDelayStatus, queues: &mut OutputQueues) -> Result<(), FtcError> {
        if status != ClassDelayStatus::ALL_WITHIN {
            return Err(FtcError::StillViolating { port });
        }
        self.current[port] = Action::NoCompensation;
        self.holding[port].release_all(queues);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::SimTime;
    use ClassStatus::*;

    fn status(high: ClassStatus, mean: ClassStatus, low: ClassStatus) -> ClassDelayStatus {
        ClassDelayStatus { high, mean, low }
    }

    fn pkt(id: u64, class: Priority) -> Packet {
        Packet::new(id, "f".into(), class, (0, 0), SimTime(2000), SimTime::ZERO)
    }

    fn queues(pkts: &[(u64, Priority)]) -> OutputQueues {
        let mut q = OutputQueues::new(3);
        for &(id, c) in pkts {
            q.push_back(pkt(id, c));
        }
        q
    }

    #[test]
    fn decision_examples() {
        assert_eq!(
            decide(status(Violating, Violating, Violating)),
            Action::TransmitHpHoldMpBp
        );
        assert_eq!(
            decide(status(WithinBound, WithinBound, Violating)),
            Action::TransmitBpIfNoMp
        );
        assert_eq!(
            decide(status(WithinBound, WithinBound, WithinBound)),
            Action::NoCompensation
        );
        assert_eq!(
            decide(status(WithinBound, Violating, WithinBound)),
            Action::HoldBpTransmitHpThenMp
        );
    }

    #[test]
    fn hold_mp_bp_sends_high_and_parks_the_rest() {
        let mut q = queues(&[(1, Priority::HIGH), (2, Priority::MEAN), (3, Priority::LOW)]);
        let mut h = HoldingQueue::default();
        let sent = apply(Action::TransmitHpHoldMpBp, &mut q, &mut h).unwrap();
        assert_eq!(sent.id, 1);
        assert_eq!(h.iter().map(|p| p.id).collect::<Vec<_>>(), vec![2, 3]);
        assert!(q.is_empty());
        assert!(apply(Action::TransmitHpHoldMpBp, &mut q, &mut h).is_none());
    }

    #[test]
    fn zero_test_passes_when_no_mean_frame() {
        let mut q = queues(&[(1, Priority::LOW)]);
        let mut h = HoldingQueue::default();
        assert_eq!(apply(Action::TransmitBpIfNoMp, &mut q, &mut h).unwrap().id, 1);
    }

    #[test]
    fn zero_test_fails_when_mean_frame_waits() {
        let mut q = queues(&[(1, Priority::MEAN), (2, Priority::LOW)]);
        let mut h = HoldingQueue::default();
        assert_eq!(apply(Action::TransmitBpIfNoMp, &mut q, &mut h).unwrap().id, 1);
    }

    #[test]
    fn hold_bp_sends_high_then_mean() {
        let mut q = queues(&[(1, Priority::LOW), (2, Priority::MEAN), (3, Priority::HIGH)]);
        let mut h = HoldingQueue::default();
        assert_eq!(apply(Action::HoldBpTransmitHpThenMp, &mut q, &mut h).unwrap().id, 3);
        assert_eq!(apply(Action::HoldBpTransmitHpThenMp, &mut q, &mut h).unwrap().id, 2);
        assert!(apply(Action::HoldBpTransmitHpThenMp, &mut q, &mut h).is_none());
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn lifting_compensation_releases_in_fifo_order() {
        let mut q = queues(&[(1, Priority::MEAN), (2, Priority::LOW), (3, Priority::MEAN)]);
        let mut h = HoldingQueue::default();
        apply(Action::TransmitHpHoldMpBp, &mut q, &mut h);
        // a newer mean frame arrives while the others are parked
        q.push_back(pkt(4, Priority::MEAN));
        let sent = apply(Action::NoCompensation, &mut q, &mut h).unwrap();
        assert_eq!(sent.id, 1);
        assert!(h.is_empty());
        let rest: Vec<u64> = q.queue(Priority::MEAN).iter().map(|p| p.id).collect();
        assert_eq!(rest, vec![3, 4]);
    }

    #[test]
    fn revert_drains_holding() {
        let mut c = Compensator::new(1);
        let mut q = queues(&[(1, Priority::MEAN), (2, Priority::LOW)]);
        let s = status(Violating, WithinBound, WithinBound);
        assert!(c.review(0, s, SimTime(5)).is_some());
        assert!(c.select(0, &mut q).is_none());
        assert_eq!(c.held(), 2);

        assert_eq!(c.revert(0, s, &mut q), Err(FtcError::StillViolating { port: 0 }));
        assert_eq!(c.held(), 2);

        c.revert(0, ClassDelayStatus::ALL_WITHIN, &mut q).unwrap();
        assert_eq!(c.action(0), Action::NoCompensation);
        assert_eq!(q.queue(Priority::MEAN)[0].id, 1);
        assert_eq!(q.queue(Priority::LOW)[0].id, 2);

        // empty holding queue: mode switch only
        c.revert(0, ClassDelayStatus::ALL_WITHIN, &mut q).unwrap();
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn review_reports_only_changes() {
        let mut c = Compensator::new(2);
        assert!(c.review(1, ClassDelayStatus::ALL_WITHIN, SimTime(0)).is_none());
        let d = c
            .review(1, status(WithinBound, Violating, WithinBound), SimTime(9))
            .unwrap();
        assert_eq!(
            (d.action, d.port, d.at),
            (Action::HoldBpTransmitHpThenMp, 1, SimTime(9))
        );
        assert!(c
            .review(1, status(WithinBound, Violating, Violating), SimTime(10))
            .is_none());
        assert_eq!(c.action(0), Action::NoCompensation);
    }
}
