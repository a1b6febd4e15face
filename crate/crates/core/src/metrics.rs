//! Run trace: deliveries, faults and compensation decisions, plus their
//! CSV form.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::fdi::{FaultEvent, FaultKind};
use crate::ftc::{Action, ClassDelayStatus, ClassStatus, CompensationDecision};
use crate::netcalc::Rational;
use crate::priority::Priority;
use crate::switch::FlowId;
use crate::time::{format_tu, SimTime};

pub const DELIVERIES_FILE: &str = "deliveries.csv";
pub const FAULTS_FILE: &str = "faults.csv";
pub const DECISIONS_FILE: &str = "decisions.csv";

const DELIVERY_HEADER: [&str; 8] = [
    "packet_id",
    "flow_id",
    "class",
    "port",
    "created_ticks",
    "delivered_ticks",
    "delay_ticks",
    "delay_tu",
];
const FAULT_HEADER: [&str; 7] = [
    "at_ticks",
    "class",
    "packet_id",
    "kind",
    "measured_ticks",
    "bound_ticks",
    "residual_ticks",
];
const DECISION_HEADER: [&str; 6] = ["at_ticks", "port", "action", "hp_status", "mp_status", "bp_status"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub packet_id: u64,
    pub flow_id: FlowId,
    pub class: Priority,
    pub port: usize,
    pub created_at: SimTime,
    pub delivered_at: SimTime,
    pub delay: SimTime,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("class {0} has no deliveries")]
    EmptyClass(Priority),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{file}: {message}")]
    Format { file: String, message: String },
}

pub enum Record {
    Delivery(DeliveryRecord),
    Fault(FaultEvent),
    Decision(CompensationDecision),
}

impl From<DeliveryRecord> for Record {
    fn from(r: DeliveryRecord) -> Self {
        Record::Delivery(r)
    }
}

impl From<FaultEvent> for Record {
    fn from(r: FaultEvent) -> Self {
        Record::Fault(r)
    }
}

impl From<CompensationDecision> for Record {
    fn from(r: CompensationDecision) -> Self {
        Record::Decision(r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSummary {
    pub class: Priority,
    pub count: usize,
    pub min: SimTime,
    pub max: SimTime,
    /// Exact mean delay in ticks.
    pub mean: Rational,
    pub violations: usize,
}

impl ClassSummary {
    pub fn mean_tu(&self, scale: u64, places: u32) -> String {
        crate::netcalc::fmt_decimal(&(self.mean / Ratio::from_integer(scale as i128)), places)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunTrace {
    pub scenario_digest: String,
    pub tick_scale: u64,
    pub horizon: SimTime,
    pub deliveries: Vec<DeliveryRecord>,
    pub faults: Vec<FaultEvent>,
    pub decisions: Vec<CompensationDecision>,
}

impl RunTrace {
    pub fn new(scenario_digest: String, tick_scale: u64, horizon: SimTime) -> Self {
        Self {
            scenario_digest,
            tick_scale,
            horizon,
            ..Self::default()
        }
    }

    /// Appends in occurrence order.
    pub fn record(&mut self, r: impl Into<Record>) {
        match r.into() {
            Record::Delivery(d) => self.deliveries.push(d),
            Record::Fault(f) => self.faults.push(f),
            Record::Decision(d) => self.decisions.push(d),
        }
    }

    pub fn deliveries_of(&self, class: Priority) -> impl Iterator<Item = &DeliveryRecord> {
        self.deliveries.iter().filter(move |d| d.class == class)
    }

    pub fn summary(&self, class: Priority) -> Result<ClassSummary, MetricsError> {
        let mut count = 0usize;
        let mut min = SimTime(u64::MAX);
        let mut max = SimTime::ZERO;
        let mut total: i128 = 0;
        for d in self.deliveries_of(class) {
            count += 1;
            min = min.min(d.delay);
            max = max.max(d.delay);
            total += d.delay.ticks() as i128;
        }
        if count == 0 {
            return Err(MetricsError::EmptyClass(class));
        }
        let violations = self
            .faults
            .iter()
            .filter(|f| f.class == class && f.kind == FaultKind::DelayViolation)
            .count();
        Ok(ClassSummary {
            class,
            count,
            min,
            max,
            mean: Ratio::new(total, count as i128),
            violations,
        })
    }

    /// Writes the three trace files into `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<(), MetricsError> {
        std::fs::create_dir_all(dir)?;
        write_deliveries(
            &self.deliveries,
            self.tick_scale,
            File::create(dir.join(DELIVERIES_FILE))?,
        )?;
        write_faults(&self.faults, File::create(dir.join(FAULTS_FILE))?)?;
        write_decisions(&self.decisions, File::create(dir.join(DECISIONS_FILE))?)?;
        Ok(())
    }

    /// Reads a trace written by [`RunTrace::export_csv`]. The digest and
    /// horizon are not part of the CSV files and come back empty.
    pub fn import_csv(dir: &Path, tick_scale: u64) -> Result<RunTrace, MetricsError> {
        Ok(RunTrace {
            scenario_digest: String::new(),
            tick_scale,
            horizon: SimTime::ZERO,
            deliveries: read_deliveries(File::open(dir.join(DELIVERIES_FILE))?)?,
            faults: read_faults(File::open(dir.join(FAULTS_FILE))?)?,
            decisions: read_decisions(File::open(dir.join(DECISIONS_FILE))?)?,
        })
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

#[derive(Serialize, Deserialize)]
struct DeliveryRow {
    packet_id: u64,
    flow_id: String,
    class: Priority,
    port: usize,
    created_ticks: u64,
    delivered_ticks: u64,
    delay_ticks: u64,
    delay_tu: String,
}

#[derive(Serialize, Deserialize)]
struct FaultRow {
    at_ticks: u64,
    class: Priority,
    packet_id: u64,
    kind: FaultKind,
    measured_ticks: u64,
    bound_ticks: u64,
    residual_ticks: i64,
}

#[derive(Serialize, Deserialize)]
struct DecisionRow {
    at_ticks: u64,
    port: usize,
    action: String,
    hp_status: String,
    mp_status: String,
    bp_status: String,
}

pub fn write_deliveries<W: Write>(rows: &[DeliveryRecord], scale: u64, w: W) -> Result<(), MetricsError> {
    let mut w = writer(w);
    w.write_record(DELIVERY_HEADER)?;
    for d in rows {
        w.serialize(DeliveryRow {
            packet_id: d.packet_id,
            flow_id: d.flow_id.to_string(),
            class: d.class,
            port: d.port,
            created_ticks: d.created_at.ticks(),
            delivered_ticks: d.delivered_at.ticks(),
            delay_ticks: d.delay.ticks(),
            delay_tu: format_tu(d.delay.ticks(), scale),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_faults<W: Write>(rows: &[FaultEvent], w: W) -> Result<(), MetricsError> {
    let mut w = writer(w);
    w.write_record(FAULT_HEADER)?;
    for f in rows {
        w.serialize(FaultRow {
            at_ticks: f.at.ticks(),
            class: f.class,
            packet_id: f.packet_id,
            kind: f.kind,
            measured_ticks: f.measured.ticks(),
            bound_ticks: f.bound.ticks(),
            residual_ticks: f.residual,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_decisions<W: Write>(rows: &[CompensationDecision], w: W) -> Result<(), MetricsError> {
    let mut w = writer(w);
    w.write_record(DECISION_HEADER)?;
    for d in rows {
        w.serialize(DecisionRow {
            at_ticks: d.at.ticks(),
            port: d.port,
            action: d.action.to_string(),
            hp_status: d.status.high.to_string(),
            mp_status: d.status.mean.to_string(),
            bp_status: d.status.low.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str], file: &str) -> Result<(), MetricsError> {
    let got = r.headers()?;
    if got.iter().ne(expected.iter().copied()) {
        return Err(MetricsError::Format {
            file: file.to_string(),
            message: format!("unexpected header {:?}", got.iter().collect::<Vec<_>>()),
        });
    }
    Ok(())
}

pub fn read_deliveries<R: Read>(r: R) -> Result<Vec<DeliveryRecord>, MetricsError> {
    let mut r = reader(r);
    check_header(&mut r, &DELIVERY_HEADER, DELIVERIES_FILE)?;
    r.deserialize::<DeliveryRow>()
        .map(|row| {
            let row = row?;
            Ok(DeliveryRecord {
                packet_id: row.packet_id,
                flow_id: row.flow_id.into(),
                class: row.class,
                port: row.port,
                created_at: SimTime(row.created_ticks),
                delivered_at: SimTime(row.delivered_ticks),
                delay: SimTime(row.delay_ticks),
            })
        })
        .collect()
}

pub fn read_faults<R: Read>(r: R) -> Result<Vec<FaultEvent>, MetricsError> {
    let mut r = reader(r);
    check_header(&mut r, &FAULT_HEADER, FAULTS_FILE)?;
    r.deserialize::<FaultRow>()
        .map(|row| {
            let row = row?;
            Ok(FaultEvent {
                at: SimTime(row.at_ticks),
                class: row.class,
                packet_id: row.packet_id,
                measured: SimTime(row.measured_ticks),
                bound: SimTime(row.bound_ticks),
                residual: row.residual_ticks,
                kind: row.kind,
            })
        })
        .collect()
}

fn parse_status(s: &str) -> Result<ClassStatus, MetricsError> {
    match s {
        "within_bound" => Ok(ClassStatus::WithinBound),
        "violating" => Ok(ClassStatus::Violating),
        other => Err(MetricsError::Format {
            file: DECISIONS_FILE.to_string(),
            message: format!("unknown status {other:?}"),
        }),
    }
}

fn parse_action(s: &str) -> Result<Action, MetricsError> {
    [
        Action::TransmitHpHoldMpBp,
        Action::TransmitBpIfNoMp,
        Action::HoldBpTransmitHpThenMp,
        Action::NoCompensation,
    ]
    .into_iter()
    .find(|a| a.to_string() == s)
    .ok_or_else(|| MetricsError::Format {
        file: DECISIONS_FILE.to_string(),
        message: format!("unknown action {s:?}"),
    })
}

pub fn read_decisions<R: Read>(r: R) -> Result<Vec<CompensationDecision>, MetricsError> {
    let mut r = reader(r);
    check_header(&mut r, &DECISION_HEADER, DECISIONS_FILE)?;
    r.deserialize::<DecisionRow>()
        .map(|row| {
            let row = row?;
            Ok(CompensationDecision {
                action: parse_action(&row.action)?,
                port: row.port,
                at: SimTime(row.at_ticks),
                status: ClassDelayStatus {
                    high: parse_status(&row.hp_status)?,
                    mean: parse_status(&row.mp_status)?,
                    low: parse_status(&row.bp_status)?,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TU: u64 = 1000;

    fn delivery(id: u64, class: Priority, created: u64, delivered: u64) -> DeliveryRecord {
        DeliveryRecord {
            packet_id: id,
            flow_id: "hp".into(),
            class,
            port: 1,
            created_at: SimTime(created),
            delivered_at: SimTime(delivered),
            delay: SimTime(delivered - created),
        }
    }

    fn fault(id: u64, residual: i64) -> FaultEvent {
        FaultEvent {
            at: SimTime(90 * TU),
            class: Priority::HIGH,
            packet_id: id,
            measured: SimTime((80 * TU as i64 + residual) as u64),
            bound: SimTime(80 * TU),
            residual,
            kind: FaultKind::DelayViolation,
        }
    }

    #[test]
    fn records_keep_occurrence_order() {
        let mut t = RunTrace::new(String::new(), TU, SimTime(100 * TU));
        t.record(delivery(1, Priority::HIGH, 0, 2 * TU));
        t.record(delivery(0, Priority::LOW, 0, 2 * TU));
        t.record(fault(1, 5 * TU as i64));
        assert_eq!(t.deliveries.iter().map(|d| d.packet_id).collect::<Vec<_>>(), vec![1, 0]);
        assert_eq!(t.faults.len(), 1);
    }

    #[test]
    fn singleton_summary() {
        let mut t = RunTrace::new(String::new(), TU, SimTime(100 * TU));
        t.record(delivery(1, Priority::HIGH, 0, 2 * TU));
        let s = t.summary(Priority::HIGH).unwrap();
        assert_eq!((s.count, s.min, s.max), (1, SimTime(2 * TU), SimTime(2 * TU)));
        assert_eq!(s.mean, Ratio::from_integer(2 * TU as i128));
        assert_eq!(s.mean_tu(TU, 3), "2.000");
        assert!(matches!(t.summary(Priority::MEAN), Err(MetricsError::EmptyClass(_))));
    }

    #[test]
    fn empty_fault_file_is_header_only() {
        let mut buf = Vec::new();
        write_faults(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "at_ticks,class,packet_id,kind,measured_ticks,bound_ticks,residual_ticks\n"
        );
    }

    #[test]
    fn delivery_rows_are_stable() {
        let mut buf = Vec::new();
        write_deliveries(&[delivery(3, Priority::HIGH, 5 * TU, 9 * TU)], TU, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "packet_id,flow_id,class,port,created_ticks,delivered_ticks,delay_ticks,delay_tu\n\
             3,hp,high,1,5000,9000,4000,4.000\n"
        );
    }

    #[test]
    fn decision_rows() {
        let d = CompensationDecision {
            action: Action::HoldBpTransmitHpThenMp,
            port: 0,
            at: SimTime(128_000),
            status: ClassDelayStatus {
                high: ClassStatus::WithinBound,
                mean: ClassStatus::Violating,
                low: ClassStatus::WithinBound,
            },
        };
        let mut buf = Vec::new();
        write_decisions(&[d], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.ends_with("128000,0,hold_bp_transmit_hp_then_mp,within_bound,violating,within_bound\n"));
        assert_eq!(read_decisions(&buf[..]).unwrap(), vec![d]);
    }

    #[test]
    fn wrong_header_is_reported() {
        let err = read_faults(&b"a,b\n1,2\n"[..]).unwrap_err();
        assert!(matches!(err, MetricsError::Format { .. }));
    }

    fn arb_delivery() -> impl Strategy<Value = DeliveryRecord> {
        (
            any::<u32>(),
            0u8..8,
            0usize..16,
            0u64..1 << 40,
            1u64..1 << 20,
            "[a-z][a-z0-9_]{0,8}",
        )
            .prop_map(|(id, level, port, created, delay, flow)| DeliveryRecord {
                packet_id: id as u64,
                flow_id: flow.into(),
                class: Priority::new(level).unwrap(),
                port,
                created_at: SimTime(created),
                delivered_at: SimTime(created + delay),
                delay: SimTime(delay),
            })
    }

    fn arb_fault() -> impl Strategy<Value = FaultEvent> {
        (
            any::<u32>(),
            0u8..3,
            0u64..1 << 40,
            0u64..1 << 30,
            1u64..1 << 20,
            any::<bool>(),
        )
            .prop_map(|(id, level, at, bound, over, drop)| FaultEvent {
                at: SimTime(at),
                class: Priority::new(level).unwrap(),
                packet_id: id as u64,
                measured: if drop { SimTime::ZERO } else { SimTime(bound + over) },
                bound: SimTime(bound),
                residual: if drop { 0 } else { over as i64 },
                kind: if drop {
                    FaultKind::Drop
                } else {
                    FaultKind::DelayViolation
                },
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(
            deliveries in proptest::collection::vec(arb_delivery(), 0..20),
            faults in proptest::collection::vec(arb_fault(), 0..10),
        ) {
            let mut buf = Vec::new();
            write_deliveries(&deliveries, TU, &mut buf).unwrap();
            prop_assert_eq!(read_deliveries(&buf[..]).unwrap(), deliveries);
            let mut buf = Vec::new();
            write_faults(&faults, &mut buf).unwrap();
            prop_assert_eq!(read_faults(&buf[..]).unwrap(), faults);
        }
    }
}
