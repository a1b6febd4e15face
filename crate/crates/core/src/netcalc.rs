//! Min-plus delay bounds for affine arrivals and rate-latency service.
//!
//! Work is measured in time units of transmission on a unit-rate output
//! link, so a port's base service curve has rate 1. All arithmetic is exact;
//! conversion to ticks happens once, rounding up.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::priority::Priority;
use crate::switch::{FlowId, SwitchConfig};
use crate::time::SimTime;
use crate::traffic::FlowSpec;

pub type Rational = Ratio<i128>;

pub fn ticks_to_units(t: SimTime, scale: u64) -> Rational {
    Ratio::new(t.ticks() as i128, scale as i128)
}

/// Smallest tick count not below `units`.
pub fn units_to_ticks_ceil(units: Rational, scale: u64) -> SimTime {
    let ticks = (units * Ratio::from_integer(scale as i128)).ceil().to_integer();
    SimTime(ticks.to_u64().expect("bound fits in u64 ticks"))
}

/// Renders a rational as `p/q` (or `p` when integral).
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with a fixed number of places, rounded half up.
pub fn fmt_decimal(r: &Rational, places: u32) -> String {
    let scale = 10i128.pow(places);
    let scaled = (*r * Ratio::from_integer(scale)).round().to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let a = scaled.abs();
    if places == 0 {
        return format!("{sign}{a}");
    }
    format!("{sign}{}.{:0width$}", a / scale, a % scale, width = places as usize)
}

/// Leaky-bucket arrival constraint: at most `sigma + rho * t` work in any
/// window of length `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrivalCurve {
    pub sigma: Rational,
    pub rho: Rational,
}

impl ArrivalCurve {
    pub fn new(sigma: Rational, rho: Rational) -> Self {
        Self { sigma, rho }
    }

    pub fn zero() -> Self {
        Self::new(Rational::zero(), Rational::zero())
    }

    pub fn value_at(&self, t: Rational) -> Rational {
        if t <= Rational::zero() {
            Rational::zero()
        } else {
            self.sigma + self.rho * t
        }
    }
}

/// Pointwise sum of arrival constraints.
pub fn aggregate(a1: ArrivalCurve, a2: ArrivalCurve) -> ArrivalCurve {
    ArrivalCurve::new(a1.sigma + a2.sigma, a1.rho + a2.rho)
}

impl Add for ArrivalCurve {
    type Output = ArrivalCurve;
    fn add(self, rhs: ArrivalCurve) -> ArrivalCurve {
        aggregate(self, rhs)
    }
}

impl Sum for ArrivalCurve {
    fn sum<I: Iterator<Item = ArrivalCurve>>(iter: I) -> ArrivalCurve {
        iter.fold(ArrivalCurve::zero(), aggregate)
    }
}

/// Rate-latency service guarantee `rate * max(0, t - latency)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceCurve {
    pub rate: Rational,
    pub latency: Rational,
}

impl ServiceCurve {
    pub fn new(rate: Rational, latency: Rational) -> Self {
        Self { rate, latency }
    }

    pub fn value_at(&self, t: Rational) -> Rational {
        if t <= self.latency {
            Rational::zero()
        } else {
            self.rate * (t - self.latency)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum NetCalcError {
    #[error("unstable: arrival rate {} exceeds service rate {}", fmt_rational(.rho), fmt_rational(.rate))]
    Unstable { rho: Rational, rate: Rational },
}

/// Arrival curve of a periodic flow. A release jitter `J` on period `P`
/// widens the burst by `rho * J`.
pub fn flow_arrival(f: &FlowSpec, scale: u64) -> ArrivalCurve {
    let work = Ratio::from_integer(f.packets_per_release as i128) * ticks_to_units(f.transmission_time, scale);
    let period = ticks_to_units(f.period, scale);
    if period.is_zero() {
        return ArrivalCurve::new(work, Rational::zero());
    }
    let rho = work / period;
    let sigma = work + rho * ticks_to_units(f.jitter, scale);
    ArrivalCurve::new(sigma, rho)
}

/// Worst-case delay: the horizontal deviation between `a` and `s`.
pub fn delay_bound(a: ArrivalCurve, s: ServiceCurve) -> Result<Rational, NetCalcError> {
    if a.rho > s.rate || s.rate <= Rational::zero() {
        return Err(NetCalcError::Unstable {
            rho: a.rho,
            rate: s.rate,
        });
    }
    Ok(s.latency + a.sigma / s.rate)
}

/// Service left to one class under non-preemptive static priority, given
/// the aggregate arrival of all strictly higher classes and the longest
/// frame of any strictly lower class (which may already be on the wire).
pub fn leftover_service(
    s: ServiceCurve,
    higher: ArrivalCurve,
    max_lower_job: Rational,
) -> Result<ServiceCurve, NetCalcError> {
    if higher.rho >= s.rate {
        return Err(NetCalcError::Unstable {
            rho: higher.rho,
            rate: s.rate,
        });
    }
    if higher.sigma.is_zero() && higher.rho.is_zero() && max_lower_job.is_zero() {
        return Ok(s);
    }
    let rate = s.rate - higher.rho;
    let latency = (s.rate * s.latency + higher.sigma + max_lower_job) / rate;
    Ok(ServiceCurve::new(rate, latency))
}

/// Min-plus convolution of two rate-latency curves.
pub fn concatenate(s1: ServiceCurve, s2: ServiceCurve) -> ServiceCurve {
    ServiceCurve::new(s1.rate.min(s2.rate), s1.latency + s2.latency)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayBound {
    pub flow_id: FlowId,
    pub class: Priority,
    pub bound: Rational,
    pub bound_ticks: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum BoundError {
    #[error("port {port} class {class} is unstable ({source})")]
    Unstable {
        port: usize,
        class: Priority,
        #[source]
        source: NetCalcError,
    },
    #[error("shared ingress stage is unstable ({0})")]
    IngressUnstable(NetCalcError),
}

/// Every intermediate of one flow's bound, for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowBound {
    pub flow_id: FlowId,
    pub class: Priority,
    pub port: usize,
    /// Aggregate arrival of the flow's own class at its port.
    pub own: ArrivalCurve,
    /// Aggregate arrival of strictly higher classes at its port.
    pub higher: ArrivalCurve,
    pub max_lower_job: Rational,
    pub base: ServiceCurve,
    pub leftover: Result<ServiceCurve, BoundError>,
    pub bound: Result<DelayBound, BoundError>,
}

/// Worst-case delay through the shared ingress FIFO: every flow may
/// present its burst at once and each frame takes `ingress_service`.
fn ingress_latency(cfg: &SwitchConfig, flows: &[FlowSpec], scale: u64) -> Result<Rational, NetCalcError> {
    let per_packet = ticks_to_units(cfg.ingress_service, scale);
    if per_packet.is_zero() {
        return Ok(Rational::zero());
    }
    let packets: ArrivalCurve = flows
        .iter()
        .map(|f| {
            let n = Ratio::from_integer(f.packets_per_release as i128);
            let period = ticks_to_units(f.period, scale);
            let rho = n / period;
            ArrivalCurve::new(n + rho * ticks_to_units(f.jitter, scale), rho)
        })
        .sum();
    let work = ArrivalCurve::new(packets.sigma * per_packet, packets.rho * per_packet);
    delay_bound(work, ServiceCurve::new(Rational::from_integer(1), Rational::zero()))
}

/// Per-flow end-to-end bounds through one switch.
///
/// Each output link is a unit-rate server preceded by the shared ingress
/// stage; a flow's class sees the leftover of that server after strictly
/// higher classes on the same port plus one blocking lower-class frame.
pub fn switch_bounds(cfg: &SwitchConfig, flows: &[FlowSpec], scale: u64) -> Vec<FlowBound> {
    let ingress = ingress_latency(cfg, flows, scale).map_err(BoundError::IngressUnstable);
    let one = Rational::from_integer(1);
    flows
        .iter()
        .map(|f| {
            let port = f.egress_port;
            let same_port = || flows.iter().filter(move |g| g.egress_port == port);
            let own: ArrivalCurve = same_port()
                .filter(|g| g.class == f.class)
                .map(|g| flow_arrival(g, scale))
                .sum();
            let higher: ArrivalCurve = same_port()
                .filter(|g| g.class > f.class)
                .map(|g| flow_arrival(g, scale))
                .sum();
            let max_lower_job = same_port()
                .filter(|g| g.class < f.class)
                .map(|g| ticks_to_units(g.transmission_time, scale))
                .max()
                .unwrap_or_else(Rational::zero);
            let base = ServiceCurve::new(one, *ingress.as_ref().unwrap_or(&Rational::zero()));
            let unstable = |source| BoundError::Unstable {
                port,
                class: f.class,
                source,
            };
            let leftover = ingress.and_then(|_| leftover_service(base, higher, max_lower_job).map_err(unstable));
            let bound = leftover.and_then(|lo| {
                let bound = delay_bound(own, lo).map_err(unstable)?;
                Ok(DelayBound {
                    flow_id: f.flow_id.clone(),
                    class: f.class,
                    bound,
                    bound_ticks: units_to_ticks_ceil(bound, scale),
                })
            });
            FlowBound {
                flow_id: f.flow_id.clone(),
                class: f.class,
                port,
                own,
                higher,
                max_lower_job,
                base,
                leftover,
                bound,
            }
        })
        .collect()
}

impl fmt::Display for ArrivalCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(sigma={}, rho={})",
            fmt_rational(&self.sigma),
            fmt_rational(&self.rho)
        )
    }
}

impl fmt::Display for ServiceCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(rate={}, latency={})",
            fmt_rational(&self.rate),
            fmt_rational(&self.latency)
        )
    }
}
