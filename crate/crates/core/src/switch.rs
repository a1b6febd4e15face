//! Output-queued shared-memory switch.
//!
//! Frames enter one shared ingress FIFO, are switched to their egress port
//! and land in a per-(port, priority) FIFO. Each output link serves one
//! frame at a time, non-preemptively, highest non-empty priority first.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::metrics::DeliveryRecord;
use crate::priority::{Priority, MAX_PRIORITIES};
use crate::time::SimTime;

pub type FlowId = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub flow_id: FlowId,
    pub class: Priority,
    pub ingress_port: usize,
    pub egress_port: usize,
    /// Service time on the output link.
    pub transmission_time: SimTime,
    pub created_at: SimTime,
    pub ingress_enqueued_at: SimTime,
    pub output_enqueued_at: SimTime,
    pub transmission_started_at: Option<SimTime>,
    pub delivered_at: Option<SimTime>,
}

impl Packet {
    pub fn new(
        id: u64,
        flow_id: FlowId,
        class: Priority,
        ports: (usize, usize),
        transmission_time: SimTime,
        created_at: SimTime,
    ) -> Packet {
        Packet {
            id,
            flow_id,
            class,
            ingress_port: ports.0,
            egress_port: ports.1,
            transmission_time,
            created_at,
            ingress_enqueued_at: created_at,
            output_enqueued_at: created_at,
            transmission_started_at: None,
            delivered_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    #[default]
    StrictPriority,
    Compensation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchConfig {
    pub num_ports: usize,
    pub priorities: u8,
    pub ingress_service: SimTime,
    pub output_service: SimTime,
    pub shared_capacity: Option<usize>,
    pub scheduler: SchedulerKind,
}

impl SwitchConfig {
    pub fn validate(&self) -> Result<(), SwitchError> {
        if self.num_ports == 0 {
            return Err(SwitchError::NoPorts);
        }
        if self.priorities == 0 || self.priorities > MAX_PRIORITIES {
            return Err(SwitchError::BadPriorityCount(self.priorities));
        }
        if self.output_service == SimTime::ZERO {
            return Err(SwitchError::ZeroOutputService);
        }
        Ok(())
    }

    pub fn classes(&self) -> impl DoubleEndedIterator<Item = Priority> {
        (0..self.priorities).map(|l| Priority::new(l).expect("validated priority count"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SwitchError {
    #[error("port {port} out of range (switch has {num_ports} ports)")]
    InvalidPort { port: usize, num_ports: usize },
    #[error("class {class} not configured (switch has {priorities} priorities)")]
    InvalidClass { class: Priority, priorities: u8 },
    #[error("switch needs at least one port")]
    NoPorts,
    #[error("priority count {0} outside 1..=8")]
    BadPriorityCount(u8),
    #[error("output service time must be positive")]
    ZeroOutputService,
    #[error("shared ingress FIFO is empty")]
    NothingToSwitch,
    #[error("output link {0} is busy")]
    LinkBusy(usize),
    #[error("output link {0} is idle")]
    LinkIdle(usize),
}

/// Per-priority FIFOs of one output port.
#[derive(Debug, Clone, Default)]
pub struct OutputQueues {
    queues: Vec<VecDeque<Packet>>,
}

impl OutputQueues {
    pub fn new(priorities: u8) -> Self {
        Self {
            queues: (0..priorities).map(|_| VecDeque::new()).collect(),
        }
    }

    pub fn push_back(&mut self, p: Packet) {
        self.queues[p.class.index()].push_back(p);
    }

    pub fn push_front(&mut self, p: Packet) {
        self.queues[p.class.index()].push_front(p);
    }

    pub fn pop(&mut self, class: Priority) -> Option<Packet> {
        self.queues.get_mut(class.index())?.pop_front()
    }

    pub fn queue(&self, class: Priority) -> &VecDeque<Packet> {
        &self.queues[class.index()]
    }

    pub fn take_all(&mut self, class: Priority) -> VecDeque<Packet> {
        self.queues
            .get_mut(class.index())
            .map(std::mem::take)
            .unwrap_or_default()
    }

    pub fn is_class_empty(&self, class: Priority) -> bool {
        self.queues.get(class.index()).is_none_or(VecDeque::is_empty)
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(VecDeque::is_empty)
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn highest_nonempty(&self) -> Option<Priority> {
        self.queues
            .iter()
            .enumerate()
            .rev()
            .find(|(_, q)| !q.is_empty())
            .map(|(l, _)| Priority::new(l as u8).expect("queue index below 8"))
    }

    /// Pops the head of the highest non-empty class.
    pub fn pop_strict_priority(&mut self) -> Option<Packet> {
        let class = self.highest_nonempty()?;
        self.pop(class)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OutputPort {
    pub queues: OutputQueues,
    in_flight: Option<Packet>,
}

impl OutputPort {
    pub fn is_idle(&self) -> bool {
        self.in_flight.is_none()
    }

    pub fn in_flight(&self) -> Option<&Packet> {
        self.in_flight.as_ref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ingested {
    /// Accepted; `switching_at` is set when the shared stage was idle and a
    /// switching completion must be scheduled for the new head.
    Accepted {
        switching_at: Option<SimTime>,
    },
    Dropped(Packet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Switched {
    pub packet_id: u64,
    pub port: usize,
    pub class: Priority,
    pub next_switching_at: Option<SimTime>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Started {
    pub packet_id: u64,
    pub class: Priority,
    pub ends_at: SimTime,
}

pub struct Switch {
    cfg: SwitchConfig,
    shared: VecDeque<Packet>,
    switching: bool,
    ports: Vec<OutputPort>,
}

impl Switch {
    pub fn new(cfg: SwitchConfig) -> Result<Switch, SwitchError> {
        cfg.validate()?;
        let ports = (0..cfg.num_ports)
            .map(|_| OutputPort {
                queues: OutputQueues::new(cfg.priorities),
                in_flight: None,
            })
            .collect();
        Ok(Switch {
            cfg,
            shared: VecDeque::new(),
            switching: false,
            ports,
        })
    }

    pub fn config(&self) -> &SwitchConfig {
        &self.cfg
    }

    fn check_port(&self, port: usize) -> Result<(), SwitchError> {
        if port >= self.cfg.num_ports {
            Err(SwitchError::InvalidPort {
                port,
                num_ports: self.cfg.num_ports,
            })
        } else {
            Ok(())
        }
    }

    fn check_class(&self, class: Priority) -> Result<(), SwitchError> {
        if class.level() >= self.cfg.priorities {
            Err(SwitchError::InvalidClass {
                class,
                priorities: self.cfg.priorities,
            })
        } else {
            Ok(())
        }
    }

    /// Appends `p` to the shared ingress FIFO, tail-dropping when the
    /// shared buffer is full.
    pub fn ingest(&mut self, mut p: Packet, t: SimTime) -> Result<Ingested, SwitchError> {
        self.check_port(p.ingress_port)?;
        self.check_class(p.class)?;
        if let Some(cap) = self.cfg.shared_capacity {
            if self.shared.len() >= cap {
                return Ok(Ingested::Dropped(p));
            }
        }
        p.ingress_enqueued_at = t;
        self.shared.push_back(p);
        let switching_at = if self.switching {
            None
        } else {
            self.switching = true;
            Some(t + self.cfg.ingress_service)
        };
        Ok(Ingested::Accepted { switching_at })
    }

    /// Completes switching of the shared FIFO head: routes it to its output
    /// queue and reports when the next head finishes switching.
    pub fn finish_switching(&mut self, t: SimTime) -> Result<Switched, SwitchError> {
        let p = self.shared.pop_front().ok_or(SwitchError::NothingToSwitch)?;
        let packet_id = p.id;
        let next_switching_at = if self.shared.is_empty() {
            self.switching = false;
            None
        } else {
            Some(t + self.cfg.ingress_service)
        };
        let (port, class) = self.route(p, t)?;
        Ok(Switched {
            packet_id,
            port,
            class,
            next_switching_at,
        })
    }

    /// Demultiplexes `p` into the output queue of its egress port and class.
    pub fn route(&mut self, mut p: Packet, t: SimTime) -> Result<(usize, Priority), SwitchError> {
        self.check_port(p.egress_port)?;
        self.check_class(p.class)?;
        let (port, class) = (p.egress_port, p.class);
        p.output_enqueued_at = t;
        self.ports[port].queues.push_back(p);
        Ok((port, class))
    }

    /// Strict-priority selection on an idle link. Returns the started
    /// transmission, or `None` when every queue of the port is empty.
    pub fn select_next(&mut self, port: usize, t: SimTime) -> Result<Option<Started>, SwitchError> {
        self.check_port(port)?;
        if !self.ports[port].is_idle() {
            return Err(SwitchError::LinkBusy(port));
        }
        match self.ports[port].queues.pop_strict_priority() {
            Some(p) => self.start_transmission(port, p, t).map(Some),
            None => Ok(None),
        }
    }

    /// Puts `p` on the idle output link of `port`.
    pub fn start_transmission(&mut self, port: usize, mut p: Packet, t: SimTime) -> Result<Started, SwitchError> {
        self.check_port(port)?;
        let slot = &mut self.ports[port].in_flight;
        if slot.is_some() {
            return Err(SwitchError::LinkBusy(port));
        }
        p.transmission_started_at = Some(t);
        let started = Started {
            packet_id: p.id,
            class: p.class,
            ends_at: t + p.transmission_time,
        };
        *slot = Some(p);
        Ok(started)
    }

    /// Finishes the in-flight transmission of `port`; the link becomes idle.
    pub fn complete_transmission(&mut self, port: usize, t: SimTime) -> Result<(Packet, DeliveryRecord), SwitchError> {
        self.check_port(port)?;
        let mut p = self.ports[port].in_flight.take().ok_or(SwitchError::LinkIdle(port))?;
        let started = p.transmission_started_at.expect("in-flight packet has a start time");
        assert_eq!(
            started + p.transmission_time,
            t,
            "transmission of packet {} was preempted",
            p.id
        );
        assert!(t > p.created_at, "packet {} delivered with zero delay", p.id);
        p.delivered_at = Some(t);
        let record = DeliveryRecord {
            packet_id: p.id,
            flow_id: p.flow_id.clone(),
            class: p.class,
            port,
            created_at: p.created_at,
            delivered_at: t,
            delay: t - p.created_at,
        };
        Ok((p, record))
    }

    pub fn port(&self, port: usize) -> &OutputPort {
        &self.ports[port]
    }

    pub fn port_mut(&mut self, port: usize) -> &mut OutputPort {
        &mut self.ports[port]
    }

    pub fn ports(&self) -> &[OutputPort] {
        &self.ports
    }

    pub fn shared_len(&self) -> usize {
        self.shared.len()
    }

    /// Packets waiting in the shared FIFO or any output queue.
    pub fn queued(&self) -> usize {
        self.shared.len() + self.ports.iter().map(|p| p.queues.len()).sum::<usize>()
    }

    pub fn in_flight(&self) -> usize {
        self.ports.iter().filter(|p| !p.is_idle()).count()
    }
}
