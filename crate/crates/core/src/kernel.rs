//! Deterministic discrete-event engine.
//!
//! Events are dispatched in `(fire_at, seq)` order where `seq` is the
//! insertion counter, so simultaneous events fire in the order they were
//! scheduled and every run of the same scenario replays identically.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::time::SimTime;

/// Identifier returned by [`EventQueue::schedule`]; equal to the event's
/// insertion sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<E> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub payload: E,
}

impl<E> Event<E> {
    pub fn id(&self) -> EventId {
        EventId(self.seq)
    }
}

struct Entry<E>(Event<E>);

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Entry<E> {}

impl<E> Entry<E> {
    fn key(&self) -> (SimTime, u64) {
        (self.0.fire_at, self.0.seq)
    }
}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; invert to pop the smallest key first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("cannot schedule an event at {at} when the clock is already at {now}")]
    SchedulingInPast { at: SimTime, now: SimTime },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub dispatched: u64,
    pub final_clock: SimTime,
    pub last_event_at: Option<SimTime>,
}

/// Pending-event set plus the virtual clock.
pub struct EventQueue<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<E>>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, fire_at: SimTime, payload: E) -> Result<EventId, KernelError> {
        if fire_at < self.now {
            return Err(KernelError::SchedulingInPast {
                at: fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { fire_at, seq, payload }));
        Ok(EventId(seq))
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.fire_at)
    }

    /// Removes the next event if it fires at or before `limit`, advancing
    /// the clock to its firing time.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<Event<E>> {
        if self.peek_time()? > limit {
            return None;
        }
        let Entry(ev) = self.heap.pop()?;
        debug_assert!(ev.fire_at >= self.now);
        self.now = ev.fire_at;
        Some(ev)
    }

    /// Moves the clock forward without dispatching anything.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Dispatches every event with `fire_at <= t_end` to `handler`, which
    /// may schedule further events. The clock ends at `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> RunSummary
    where
        F: FnMut(&mut EventQueue<E>, Event<E>),
    {
        let mut dispatched = 0;
        let mut last = None;
        while let Some(ev) = self.pop_until(t_end) {
            dispatched += 1;
            last = Some(ev.fire_at);
            handler(self, ev);
        }
        self.advance_to(t_end);
        RunSummary {
            dispatched,
            final_clock: self.now,
            last_event_at: last,
        }
    }
}
