//! Event-driven run of one switch under periodic load.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fdi::{Detector, FaultEvent, Thresholds};
use crate::ftc::{ClassDelayStatus, Compensator};
use crate::kernel::{EventQueue, KernelError, RunSummary};
use crate::metrics::RunTrace;
use crate::priority::Priority;
use crate::switch::{Ingested, Packet, SchedulerKind, Started, Switch, SwitchConfig, SwitchError};
use crate::time::SimTime;
use crate::traffic::{BurstSpec, FlowSpec, TrafficError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    SourceRelease,
    BurstInjection,
    SwitchingDone,
    TransmissionEnd,
    CompensationReview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SimEvent {
    SourceRelease { flow: usize, k: u64 },
    BurstInjection { burst: usize, flow: usize },
    SwitchingDone,
    TransmissionEnd { port: usize },
    CompensationReview,
}

impl SimEvent {
    fn kind(&self) -> EventKind {
        match self {
            SimEvent::SourceRelease { .. } => EventKind::SourceRelease,
            SimEvent::BurstInjection { .. } => EventKind::BurstInjection,
            SimEvent::SwitchingDone => EventKind::SwitchingDone,
            SimEvent::TransmissionEnd { .. } => EventKind::TransmissionEnd,
            SimEvent::CompensationReview => EventKind::CompensationReview,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdiSetup {
    pub thresholds: Thresholds,
    pub k: u32,
}

/// Everything a run needs, already validated and converted to ticks.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub switch: SwitchConfig,
    pub flows: Vec<FlowSpec>,
    pub bursts: Vec<BurstSpec>,
    pub horizon: SimTime,
    pub tick_scale: u64,
    pub seed: u64,
    pub fdi: Option<FdiSetup>,
    pub scenario_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("flow {flow} (class {class}) has no fault-detection threshold")]
    MissingBound { flow: String, class: Priority },
    #[error("compensating scheduler needs fault detection and exactly three priority classes")]
    CompensationNeedsThreeClassFdi,
}

/// Packet accounting at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Conservation {
    pub generated: u64,
    pub delivered: u64,
    pub queued: u64,
    pub in_flight: u64,
    pub held: u64,
    pub dropped: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.generated == self.delivered + self.queued + self.in_flight + self.held + self.dropped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransmissionStart {
    pub port: usize,
    pub started: Started,
}

/// What one dispatched event did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepInfo {
    pub kind: EventKind,
    pub at: SimTime,
    pub starts: Vec<TransmissionStart>,
}

pub struct Simulation {
    queue: EventQueue<SimEvent>,
    switch: Switch,
    flows: Vec<FlowSpec>,
    bursts: Vec<BurstSpec>,
    horizon: SimTime,
    jitter: Vec<Option<ChaCha8Rng>>,
    next_packet_id: u64,
    detector: Option<Detector>,
    compensator: Option<Compensator>,
    review_pending: bool,
    trace: RunTrace,
    generated: u64,
    delivered: u64,
    dropped: u64,
    starts: Vec<TransmissionStart>,
    dispatched: u64,
}

impl Simulation {
    pub fn new(setup: SimSetup) -> Result<Simulation, SimError> {
        let SimSetup {
            switch,
            flows,
            bursts,
            horizon,
            tick_scale,
            seed,
            fdi,
            scenario_digest,
        } = setup;
        for f in &flows {
            f.validate()?;
        }
        let compensating = switch.scheduler == SchedulerKind::Compensation;
        if compensating && (fdi.is_none() || switch.priorities != 3) {
            return Err(SimError::CompensationNeedsThreeClassFdi);
        }
        let detector = match fdi {
            Some(FdiSetup { thresholds, k }) => {
                if let Some(f) = flows.iter().find(|f| thresholds.lookup(&f.flow_id, f.class).is_none()) {
                    return Err(SimError::MissingBound {
                        flow: f.flow_id.to_string(),
                        class: f.class,
                    });
                }
                Some(Detector::new(switch.classes().rev(), thresholds, k))
            }
            None => None,
        };
        let compensator = compensating.then(|| Compensator::new(switch.num_ports));
        let jitter = flows
            .iter()
            .enumerate()
            .map(|(i, f)| {
                (f.jitter > SimTime::ZERO)
                    .then(|| ChaCha8Rng::seed_from_u64(seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            })
            .collect();
        let mut sim = Simulation {
            queue: EventQueue::new(),
            switch: Switch::new(switch)?,
            flows,
            bursts,
            horizon,
            jitter,
            next_packet_id: 0,
            detector,
            compensator,
            review_pending: false,
            trace: RunTrace::new(scenario_digest, tick_scale, horizon),
            generated: 0,
            delivered: 0,
            dropped: 0,
            starts: Vec::new(),
            dispatched: 0,
        };
        for flow in 0..sim.flows.len() {
            sim.schedule_release(flow, 0)?;
        }
        Ok(sim)
    }

    fn schedule_release(&mut self, flow: usize, k: u64) -> Result<(), SimError> {
        let f = &self.flows[flow];
        let mut at = f.release_at(k);
        if let Some(rng) = self.jitter[flow].as_mut() {
            at += SimTime(rng.gen_range(0..=f.jitter.ticks()));
        }
        if at <= self.horizon {
            self.queue.schedule(at, SimEvent::SourceRelease { flow, k })?;
        }
        Ok(())
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn horizon(&self) -> SimTime {
        self.horizon
    }

    pub fn switch(&self) -> &Switch {
        &self.switch
    }

    pub fn detector(&self) -> Option<&Detector> {
        self.detector.as_ref()
    }

    pub fn compensator(&self) -> Option<&Compensator> {
        self.compensator.as_ref()
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace
    }

    pub fn conservation(&self) -> Conservation {
        Conservation {
            generated: self.generated,
            delivered: self.delivered,
            queued: self.switch.queued() as u64,
            in_flight: self.switch.in_flight() as u64,
            held: self.compensator.as_ref().map_or(0, |c| c.held() as u64),
            dropped: self.dropped,
        }
    }

    /// Dispatches the next event within the horizon.
    pub fn step(&mut self) -> Result<Option<StepInfo>, SimError> {
        let Some(ev) = self.queue.pop_until(self.horizon) else {
            return Ok(None);
        };
        self.dispatched += 1;
        self.starts.clear();
        let t = ev.fire_at;
        match ev.payload {
            SimEvent::SourceRelease { flow, k } => self.on_release(flow, k, t)?,
            SimEvent::BurstInjection { burst, flow } => {
                for _ in 0..self.bursts[burst].extra_per_period {
                    self.emit(flow, t)?;
                }
            }
            SimEvent::SwitchingDone => {
                let s = self.switch.finish_switching(t)?;
                if let Some(next) = s.next_switching_at {
                    self.queue.schedule(next, SimEvent::SwitchingDone)?;
                }
                if self.switch.port(s.port).is_idle() {
                    self.try_start(s.port, t)?;
                }
            }
            SimEvent::TransmissionEnd { port } => self.on_transmission_end(port, t)?,
            SimEvent::CompensationReview => {
                self.review_pending = false;
                for port in 0..self.switch.config().num_ports {
                    self.review_port(port, t);
                    if self.switch.port(port).is_idle() {
                        self.try_start(port, t)?;
                    }
                }
            }
        }
        Ok(Some(StepInfo {
            kind: ev.payload.kind(),
            at: t,
            starts: self.starts.clone(),
        }))
    }

    /// Runs to the horizon.
    pub fn run(&mut self) -> Result<RunSummary, SimError> {
        let mut last = None;
        while let Some(info) = self.step()? {
            last = Some(info.at);
        }
        self.queue.advance_to(self.horizon);
        Ok(RunSummary {
            dispatched: self.dispatched,
            final_clock: self.queue.now(),
            last_event_at: last,
        })
    }

    fn on_release(&mut self, flow: usize, k: u64, t: SimTime) -> Result<(), SimError> {
        for _ in 0..self.flows[flow].packets_per_release {
            self.emit(flow, t)?;
        }
        let nominal = self.flows[flow].release_at(k);
        let f = &self.flows[flow];
        let hits: Vec<usize> = self
            .bursts
            .iter()
            .enumerate()
            .filter(|(_, b)| b.target.matches(f) && b.covers(nominal))
            .map(|(i, _)| i)
            .collect();
        for burst in hits {
            self.queue.schedule(t, SimEvent::BurstInjection { burst, flow })?;
        }
        self.schedule_release(flow, k + 1)
    }

    fn emit(&mut self, flow: usize, t: SimTime) -> Result<(), SimError> {
        let f = &self.flows[flow];
        let p = Packet::new(
            self.next_packet_id,
            f.flow_id.clone(),
            f.class,
            (f.ingress_port, f.egress_port),
            f.transmission_time,
            t,
        );
        self.next_packet_id += 1;
        self.generated += 1;
        match self.switch.ingest(p, t)? {
            Ingested::Accepted { switching_at } => {
                if let Some(at) = switching_at {
                    self.queue.schedule(at, SimEvent::SwitchingDone)?;
                }
            }
            Ingested::Dropped(p) => {
                self.dropped += 1;
                let bound = self
                    .detector
                    .as_ref()
                    .and_then(|d| d.thresholds().lookup(&p.flow_id, p.class));
                self.trace.record(FaultEvent::drop_of(&p, t, bound));
            }
        }
        Ok(())
    }

    fn on_transmission_end(&mut self, port: usize, t: SimTime) -> Result<(), SimError> {
        let (_, record) = self.switch.complete_transmission(port, t)?;
        self.delivered += 1;
        if let Some(detector) = self.detector.as_mut() {
            let obs = detector
                .observe(&record)
                .expect("every flow has a threshold (checked at setup)");
            self.trace.record(record);
            if let Some(fault) = obs.fault {
                self.trace.record(fault);
            }
            if obs.transition.is_some() && self.compensator.is_some() && !self.review_pending {
                self.review_pending = true;
                self.queue.schedule(t, SimEvent::CompensationReview)?;
            }
        } else {
            self.trace.record(record);
        }
        self.try_start(port, t)
    }

    fn status(&self) -> ClassDelayStatus {
        self.detector
            .as_ref()
            .map_or(ClassDelayStatus::ALL_WITHIN, ClassDelayStatus::from_detector)
    }

    fn review_port(&mut self, port: usize, t: SimTime) {
        let status = self.status();
        let Some(comp) = self.compensator.as_mut() else {
            return;
        };
        if let Some(decision) = comp.review(port, status, t) {
            self.trace.record(decision);
        }
        comp.settle(port, &mut self.switch.port_mut(port).queues);
    }

    fn try_start(&mut self, port: usize, t: SimTime) -> Result<(), SimError> {
        let started = if self.compensator.is_some() {
            self.review_port(port, t);
            let comp = self.compensator.as_mut().expect("checked above");
            match comp.select(port, &mut self.switch.port_mut(port).queues) {
                Some(p) => Some(self.switch.start_transmission(port, p, t)?),
                None => None,
            }
        } else {
            self.switch.select_next(port, t)?
        };
        if let Some(started) = started {
            self.queue
                .schedule(started.ends_at, SimEvent::TransmissionEnd { port })?;
            self.starts.push(TransmissionStart { port, started });
        }
        Ok(())
    }
}
