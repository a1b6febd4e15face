//! Periodic sources and burst injection.

use crate::priority::Priority;
use crate::switch::FlowId;
use crate::time::SimTime;

/// A strictly periodic frame source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub flow_id: FlowId,
    pub period: SimTime,
    /// First release instant.
    pub phase: SimTime,
    pub class: Priority,
    pub ingress_port: usize,
    pub egress_port: usize,
    pub transmission_time: SimTime,
    pub packets_per_release: u32,
    /// Maximum release jitter; each release is delayed by a seeded uniform
    /// draw in `[0, jitter]`. Zero disables jitter.
    pub jitter: SimTime,
}

impl FlowSpec {
    /// A jitter-free single-packet flow.
    pub fn periodic(
        flow_id: &str,
        class: Priority,
        ports: (usize, usize),
        period: SimTime,
        transmission_time: SimTime,
    ) -> FlowSpec {
        FlowSpec {
            flow_id: flow_id.into(),
            period,
            phase: SimTime::ZERO,
            class,
            ingress_port: ports.0,
            egress_port: ports.1,
            transmission_time,
            packets_per_release: 1,
            jitter: SimTime::ZERO,
        }
    }

    pub fn with_phase(mut self, phase: SimTime) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_packets_per_release(mut self, n: u32) -> Self {
        self.packets_per_release = n;
        self
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let invalid = |reason: &str| TrafficError::InvalidFlow {
            flow_id: self.flow_id.to_string(),
            reason: reason.to_string(),
        };
        if self.period == SimTime::ZERO {
            return Err(invalid("period must be positive"));
        }
        if self.transmission_time == SimTime::ZERO {
            return Err(invalid("transmission time must be positive"));
        }
        if self.packets_per_release == 0 {
            return Err(invalid("packets_per_release must be positive"));
        }
        if self.jitter >= self.period {
            return Err(invalid("jitter must be smaller than the period"));
        }
        Ok(())
    }

    /// Nominal (jitter-free) release instant number `k`.
    pub fn release_at(&self, k: u64) -> SimTime {
        self.phase + SimTime(k * self.period.ticks())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrafficError {
    #[error("invalid flow {flow_id}: {reason}")]
    InvalidFlow { flow_id: String, reason: String },
}

/// Nominal release instants of `f` up to and including `horizon`.
pub fn periodic_source(f: &FlowSpec, horizon: SimTime) -> Result<Vec<SimTime>, TrafficError> {
    f.validate()?;
    if f.phase > horizon {
        return Ok(Vec::new());
    }
    let count = (horizon - f.phase).ticks() / f.period.ticks() + 1;
    Ok((0..count).map(|k| f.release_at(k)).collect())
}

/// Which releases a burst piggybacks on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BurstTarget {
    Flow(FlowId),
    /// Every flow leaving through `port` with class `class`.
    PortClass {
        port: usize,
        class: Priority,
    },
}

impl BurstTarget {
    pub fn matches(&self, f: &FlowSpec) -> bool {
        match self {
            BurstTarget::Flow(id) => *id == f.flow_id,
            BurstTarget::PortClass { port, class } => f.egress_port == *port && f.class == *class,
        }
    }
}

/// Extra frames added to every target release inside a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurstSpec {
    pub target: BurstTarget,
    pub extra_per_period: u32,
    pub start: SimTime,
    pub end: SimTime,
}

impl BurstSpec {
    /// The window is closed on both ends; a zero-length window injects
    /// nothing.
    pub fn covers(&self, t: SimTime) -> bool {
        self.start < self.end && self.start <= t && t <= self.end
    }
}

/// Instants at which `b` adds `extra_per_period` frames to flow `f`.
pub fn inject_burst(b: &BurstSpec, f: &FlowSpec, horizon: SimTime) -> Result<Vec<SimTime>, TrafficError> {
    if !b.target.matches(f) {
        return Ok(Vec::new());
    }
    Ok(periodic_source(f, horizon)?
        .into_iter()
        .filter(|&t| b.covers(t))
        .collect())
}
