//! Scenario files and the run, bound, validate and plot entry points.
//!
//! A scenario is a single JSON document. Times are integers (time units) or
//! strings such as `"2.5 tu"`, converted exactly through `tick_scale`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fdi::Thresholds;
use crate::kernel::RunSummary;
use crate::metrics::{ClassSummary, MetricsError, RunTrace};
use crate::netcalc::{fmt_decimal, fmt_rational, switch_bounds, BoundError, FlowBound};
use crate::plot::{self, PlotOptions};
use crate::priority::{Priority, MAX_PRIORITIES};
use crate::sim::{Conservation, FdiSetup, SimError, SimSetup, Simulation};
use crate::switch::{SchedulerKind, SwitchConfig};
use crate::time::{format_tu, SimTime, TimeValue, DEFAULT_TICK_SCALE};
use crate::traffic::{BurstSpec, BurstTarget, FlowSpec};

/// Name of the effective scenario written next to the trace files.
pub const SCENARIO_FILE: &str = "scenario.json";

fn default_tick_scale() -> u64 {
    DEFAULT_TICK_SCALE
}

fn default_one() -> u32 {
    1
}

fn zero_time() -> TimeValue {
    TimeValue::Units(0)
}

fn is_zero_time(t: &TimeValue) -> bool {
    *t == TimeValue::Units(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchSection {
    pub num_ports: usize,
    pub priorities: u8,
    #[serde(default = "zero_time")]
    pub ingress_service: TimeValue,
    pub output_service: TimeValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_capacity: Option<usize>,
    /// Optional; follows `ftc.enabled` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub flow_id: String,
    pub class: Priority,
    pub ingress_port: usize,
    pub egress_port: usize,
    pub period: TimeValue,
    #[serde(default = "zero_time", skip_serializing_if = "is_zero_time")]
    pub phase: TimeValue,
    /// Defaults to the switch's `output_service`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission_time: Option<TimeValue>,
    #[serde(default = "default_one")]
    pub packets_per_release: u32,
    #[serde(default = "zero_time", skip_serializing_if = "is_zero_time")]
    pub jitter: TimeValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TargetSection {
    Flow { flow: String },
    PortClass { port: usize, class: Priority },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSection {
    pub target: TargetSection,
    pub extra_per_period: u32,
    pub start: TimeValue,
    pub end: TimeValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsMode {
    Computed,
}

/// `"computed"`, or a map from class to threshold. Classes missing from
/// the map fall back to computed bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundsSection {
    Mode(BoundsMode),
    Classes(BTreeMap<Priority, TimeValue>),
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection::Mode(BoundsMode::Computed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdiSection {
    pub enabled: bool,
    #[serde(default = "default_one")]
    pub k: u32,
}

impl Default for FdiSection {
    fn default() -> Self {
        FdiSection { enabled: false, k: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtcSection {
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub switch: SwitchSection,
    pub flows: Vec<FlowSection>,
    #[serde(default)]
    pub bursts: Vec<BurstSection>,
    pub horizon: TimeValue,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub fdi: FdiSection,
    #[serde(default)]
    pub ftc: FtcSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tick_scale")]
    pub tick_scale: u64,
}

/// One problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Dotted location such as `flows[2].period`, or `line:column` for
    /// syntax errors.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {0}")]
    Parse(Diagnostic),
    #[error("invalid scenario ({} problem(s))", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("unstable delay bound: {}", .0.iter().map(|(f, e)| format!("{f}: {e}")).collect::<Vec<_>>().join("; "))]
    Unstable(Vec<(String, BoundError)>),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot serialise scenario: {0}")]
    Json(#[from] serde_json::Error),
}

impl ScenarioError {
    /// Process exit status: 2 for unreadable or invalid scenarios, 3 for an
    /// unstable computed bound, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Parse(_) | ScenarioError::Invalid(_) => 2,
            ScenarioError::Unstable(_) => 3,
            _ => 1,
        }
    }
}

/// The scenario in simulator types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub switch: SwitchConfig,
    pub flows: Vec<FlowSpec>,
    pub bursts: Vec<BurstSpec>,
    pub horizon: SimTime,
    pub overrides: BTreeMap<Priority, SimTime>,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub ftc: Option<bool>,
    pub horizon: Option<u64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        serde_json::from_str(text).map_err(|e| {
            ScenarioError::Parse(Diagnostic::new(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            ))
        })
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Scenario::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(ftc) = o.ftc {
            self.ftc.enabled = ftc;
            if self.switch.scheduler.is_some() {
                self.switch.scheduler = Some(if ftc {
                    SchedulerKind::Compensation
                } else {
                    SchedulerKind::StrictPriority
                });
            }
        }
        if let Some(h) = o.horizon {
            self.horizon = TimeValue::Units(h);
        }
    }

    pub fn to_json_pretty(&self) -> Result<String, ScenarioError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario always serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Every invariant violation, in file order. Empty means valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        match self.resolve() {
            Ok(_) => Vec::new(),
            Err(d) => d,
        }
    }

    /// Converts to simulator types, collecting every problem found.
    pub fn resolve(&self) -> Result<Resolved, Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let scale = self.tick_scale;
        if scale == 0 {
            diags.push(Diagnostic::new("tick_scale", "must be positive"));
            return Err(diags);
        }
        let time = |loc: String, v: &TimeValue, diags: &mut Vec<Diagnostic>| match v.to_ticks(scale) {
            Ok(t) => Some(t),
            Err(e) => {
                diags.push(Diagnostic::new(loc, e.to_string()));
                None
            }
        };

        let horizon = time("horizon".into(), &self.horizon, &mut diags);
        if horizon == Some(SimTime::ZERO) {
            diags.push(Diagnostic::new("horizon", "must be positive"));
        }

        let sw = &self.switch;
        if sw.num_ports == 0 {
            diags.push(Diagnostic::new("switch.num_ports", "must be positive"));
        }
        if sw.priorities == 0 || sw.priorities > MAX_PRIORITIES {
            diags.push(Diagnostic::new(
                "switch.priorities",
                format!("must be between 1 and {MAX_PRIORITIES}"),
            ));
        }
        let ingress_service = time("switch.ingress_service".into(), &sw.ingress_service, &mut diags);
        let output_service = time("switch.output_service".into(), &sw.output_service, &mut diags);
        if output_service == Some(SimTime::ZERO) {
            diags.push(Diagnostic::new("switch.output_service", "must be positive"));
        }
        if (self.fdi.enabled || self.ftc.enabled) && sw.priorities != 3 {
            diags.push(Diagnostic::new(
                "switch.priorities",
                format!(
                    "fault detection and compensation need exactly three priority classes, found {}",
                    sw.priorities
                ),
            ));
        }
        if self.ftc.enabled && !self.fdi.enabled {
            diags.push(Diagnostic::new(
                "ftc.enabled",
                "compensation needs fault detection (fdi.enabled)",
            ));
        }
        let scheduler = if self.ftc.enabled {
            SchedulerKind::Compensation
        } else {
            SchedulerKind::StrictPriority
        };
        if let Some(s) = sw.scheduler.filter(|s| *s != scheduler) {
            diags.push(Diagnostic::new(
                "switch.scheduler",
                format!("{s:?} contradicts ftc.enabled = {}", self.ftc.enabled),
            ));
        }
        if self.fdi.enabled && self.fdi.k == 0 {
            diags.push(Diagnostic::new("fdi.k", "must be at least 1"));
        }

        let port_ok = |p: usize| p < sw.num_ports;
        let class_ok = |c: Priority| c.level() < sw.priorities;
        let mut seen = HashSet::new();
        let mut flows = Vec::new();
        for (i, f) in self.flows.iter().enumerate() {
            let at = |field: &str| format!("flows[{i}].{field}");
            if f.flow_id.is_empty() {
                diags.push(Diagnostic::new(at("flow_id"), "must not be empty"));
            }
            if !seen.insert(f.flow_id.as_str()) {
                diags.push(Diagnostic::new(
                    at("flow_id"),
                    format!("duplicate flow id {:?}", f.flow_id),
                ));
            }
            if !class_ok(f.class) {
                diags.push(Diagnostic::new(
                    at("class"),
                    format!(
                        "class {} not configured (switch has {} priorities)",
                        f.class, sw.priorities
                    ),
                ));
            }
            for (field, p) in [("ingress_port", f.ingress_port), ("egress_port", f.egress_port)] {
                if !port_ok(p) {
                    diags.push(Diagnostic::new(
                        at(field),
                        format!("port {p} does not exist (switch has {} ports)", sw.num_ports),
                    ));
                }
            }
            if f.packets_per_release == 0 {
                diags.push(Diagnostic::new(at("packets_per_release"), "must be positive"));
            }
            let period = time(at("period"), &f.period, &mut diags);
            let phase = time(at("phase"), &f.phase, &mut diags);
            let jitter = time(at("jitter"), &f.jitter, &mut diags);
            let tx = match &f.transmission_time {
                Some(v) => time(at("transmission_time"), v, &mut diags),
                None => output_service,
            };
            if period == Some(SimTime::ZERO) {
                diags.push(Diagnostic::new(at("period"), "must be positive"));
            }
            if f.transmission_time.is_some() && tx == Some(SimTime::ZERO) {
                diags.push(Diagnostic::new(at("transmission_time"), "must be positive"));
            }
            if let (Some(j), Some(p)) = (jitter, period) {
                if p > SimTime::ZERO && j >= p {
                    diags.push(Diagnostic::new(at("jitter"), "must be smaller than the period"));
                }
            }
            if let (Some(period), Some(phase), Some(jitter), Some(tx)) = (period, phase, jitter, tx) {
                flows.push(FlowSpec {
                    flow_id: f.flow_id.as_str().into(),
                    period,
                    phase,
                    class: f.class,
                    ingress_port: f.ingress_port,
                    egress_port: f.egress_port,
                    transmission_time: tx,
                    packets_per_release: f.packets_per_release,
                    jitter,
                });
            }
        }

        let mut bursts = Vec::new();
        for (i, b) in self.bursts.iter().enumerate() {
            let at = |field: &str| format!("bursts[{i}].{field}");
            let target = match &b.target {
                TargetSection::Flow { flow } => {
                    if !self.flows.iter().any(|f| &f.flow_id == flow) {
                        diags.push(Diagnostic::new(at("target"), format!("unknown flow {flow:?}")));
                    }
                    BurstTarget::Flow(flow.as_str().into())
                }
                TargetSection::PortClass { port, class } => {
                    if !port_ok(*port) {
                        diags.push(Diagnostic::new(
                            at("target.port"),
                            format!("port {port} does not exist"),
                        ));
                    }
                    if !class_ok(*class) {
                        diags.push(Diagnostic::new(
                            at("target.class"),
                            format!("class {class} not configured"),
                        ));
                    }
                    BurstTarget::PortClass {
                        port: *port,
                        class: *class,
                    }
                }
            };
            let start = time(at("start"), &b.start, &mut diags);
            let end = time(at("end"), &b.end, &mut diags);
            if let (Some(start), Some(end)) = (start, end) {
                if start > end {
                    diags.push(Diagnostic::new(at("end"), "burst window ends before it starts"));
                }
                bursts.push(BurstSpec {
                    target,
                    extra_per_period: b.extra_per_period,
                    start,
                    end,
                });
            }
        }

        let mut overrides = BTreeMap::new();
        if let BoundsSection::Classes(map) = &self.bounds {
            for (class, v) in map {
                let loc = format!("bounds.{class}");
                if !class_ok(*class) {
                    diags.push(Diagnostic::new(loc.clone(), format!("class {class} not configured")));
                }
                if let Some(t) = time(loc, v, &mut diags) {
                    overrides.insert(*class, t);
                }
            }
        }

        if !diags.is_empty() {
            return Err(diags);
        }
        Ok(Resolved {
            switch: SwitchConfig {
                num_ports: sw.num_ports,
                priorities: sw.priorities,
                ingress_service: ingress_service.expect("no diagnostics"),
                output_service: output_service.expect("no diagnostics"),
                shared_capacity: sw.shared_capacity,
                scheduler,
            },
            flows,
            bursts,
            horizon: horizon.expect("no diagnostics"),
            overrides,
        })
    }

    fn resolved(&self) -> Result<Resolved, ScenarioError> {
        self.resolve().map_err(ScenarioError::Invalid)
    }

    /// Per-flow bounds without running anything.
    pub fn bounds(&self) -> Result<Vec<FlowBound>, ScenarioError> {
        let r = self.resolved()?;
        Ok(switch_bounds(&r.switch, &r.flows, self.tick_scale))
    }

    /// Detector thresholds: class overrides first, computed bounds for the
    /// remaining flows.
    pub fn thresholds(&self) -> Result<Thresholds, ScenarioError> {
        let r = self.resolved()?;
        thresholds_for(&r, self.tick_scale)
    }

    pub fn to_setup(&self) -> Result<SimSetup, ScenarioError> {
        let r = self.resolved()?;
        let fdi = if self.fdi.enabled {
            Some(FdiSetup {
                thresholds: thresholds_for(&r, self.tick_scale)?,
                k: self.fdi.k,
            })
        } else {
            None
        };
        Ok(SimSetup {
            switch: r.switch,
            flows: r.flows,
            bursts: r.bursts,
            horizon: r.horizon,
            tick_scale: self.tick_scale,
            seed: self.seed,
            fdi,
            scenario_digest: self.digest(),
        })
    }

    /// Runs to the horizon and keeps the trace in memory.
    pub fn simulate(&self) -> Result<RunReport, ScenarioError> {
        let mut sim = Simulation::new(self.to_setup()?)?;
        let summary = sim.run()?;
        let conservation = sim.conservation();
        Ok(RunReport {
            summary,
            conservation,
            trace: sim.into_trace(),
        })
    }

    /// Runs and writes the trace files plus the effective scenario to `out`.
    pub fn run(&self, out: &Path) -> Result<RunReport, ScenarioError> {
        let report = self.simulate()?;
        report.trace.export_csv(out)?;
        let path = out.join(SCENARIO_FILE);
        fs::write(&path, self.to_json_pretty()?).map_err(|source| ScenarioError::Io { path, source })?;
        Ok(report)
    }

    /// One line per flow with the intermediate curves and the bound.
    pub fn bound_report(&self) -> Result<String, ScenarioError> {
        let scale = self.tick_scale;
        let mut out = String::new();
        for b in self.bounds()? {
            let head = format!("{} class={} port={}", b.flow_id, b.class, b.port);
            let line = match (&b.leftover, &b.bound) {
                (Ok(lo), Ok(d)) => format!(
                    "{head} sigma={} rho={} leftover_rate={} leftover_latency={} bound={} ({} T.U) bound_ticks={}",
                    fmt_rational(&b.own.sigma),
                    fmt_rational(&b.own.rho),
                    fmt_rational(&lo.rate),
                    fmt_rational(&lo.latency),
                    fmt_rational(&d.bound),
                    fmt_decimal(&d.bound, decimals(scale)),
                    d.bound_ticks.ticks()
                ),
                (_, Err(e)) => format!(
                    "{head} sigma={} rho={} Unstable: {e}",
                    fmt_rational(&b.own.sigma),
                    fmt_rational(&b.own.rho)
                ),
                (Err(e), Ok(_)) => format!("{head} Unstable: {e}"),
            };
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }
}

fn decimals(scale: u64) -> u32 {
    let mut places = 0;
    let mut s = scale;
    while s >= 10 && s.is_multiple_of(10) {
        s /= 10;
        places += 1;
    }
    places.max(3)
}

fn thresholds_for(r: &Resolved, scale: u64) -> Result<Thresholds, ScenarioError> {
    let mut th = Thresholds::new();
    for (class, t) in &r.overrides {
        th.set_class(*class, *t);
    }
    if r.flows.iter().all(|f| r.overrides.contains_key(&f.class)) {
        return Ok(th);
    }
    let mut unstable = Vec::new();
    for b in switch_bounds(&r.switch, &r.flows, scale) {
        if r.overrides.contains_key(&b.class) {
            continue;
        }
        match b.bound {
            Ok(d) => th.set_flow(d.flow_id, d.bound_ticks),
            Err(e) => unstable.push((b.flow_id.to_string(), e)),
        }
    }
    if unstable.is_empty() {
        Ok(th)
    } else {
        Err(ScenarioError::Unstable(unstable))
    }
}

/// Result of one run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: RunSummary,
    pub conservation: Conservation,
    pub trace: RunTrace,
}

impl RunReport {
    pub fn class_summaries(&self) -> Vec<ClassSummary> {
        let mut classes: Vec<Priority> = self.trace.deliveries.iter().map(|d| d.class).collect();
        classes.sort_unstable_by(|a, b| b.cmp(a));
        classes.dedup();
        classes.into_iter().filter_map(|c| self.trace.summary(c).ok()).collect()
    }

    /// Human-readable run summary.
    pub fn summary_text(&self) -> String {
        let scale = self.trace.tick_scale;
        let c = &self.conservation;
        let mut s = format!(
            "digest {}\nevents {} final_clock {} T.U\npackets generated={} delivered={} queued={} in_flight={} held={} dropped={}\n",
            self.trace.scenario_digest,
            self.summary.dispatched,
            format_tu(self.summary.final_clock.ticks(), scale),
            c.generated,
            c.delivered,
            c.queued,
            c.in_flight,
            c.held,
            c.dropped
        );
        for cs in self.class_summaries() {
            s.push_str(&format!(
                "class {:<4} count={} min={} max={} mean={} violations={}\n",
                cs.class.to_string(),
                cs.count,
                format_tu(cs.min.ticks(), scale),
                format_tu(cs.max.ticks(), scale),
                cs.mean_tu(scale, 3),
                cs.violations
            ));
        }
        s.push_str(&format!(
            "faults={} decisions={}\n",
            self.trace.faults.len(),
            self.trace.decisions.len()
        ));
        s
    }
}

/// Plots one class of a trace directory written by [`Scenario::run`].
///
/// When the directory holds the effective scenario, its tick scale is used
/// and the class threshold is drawn as the bound line.
pub fn plot_trace(dir: &Path, class: Priority, out: &Path, cap: Option<&TimeValue>) -> Result<(), ScenarioError> {
    let scenario = match dir.join(SCENARIO_FILE) {
        p if p.exists() => Some(Scenario::load(&p)?),
        _ => None,
    };
    let scale = scenario.as_ref().map_or(DEFAULT_TICK_SCALE, |s| s.tick_scale);
    let cap = cap
        .map(|c| c.to_ticks(scale))
        .transpose()
        .map_err(|e| ScenarioError::Invalid(vec![Diagnostic::new("cap", e.to_string())]))?;
    let trace = RunTrace::import_csv(dir, scale)?;
    let bound = scenario.as_ref().and_then(|s| class_threshold(s, class));
    let opts = PlotOptions {
        bound,
        cap,
        title: None,
    };
    plot::plot(&trace, class, &opts, out)?;
    Ok(())
}

/// The largest threshold any flow of `class` is checked against.
fn class_threshold(s: &Scenario, class: Priority) -> Option<SimTime> {
    let r = s.resolve().ok()?;
    if let Some(t) = r.overrides.get(&class) {
        return Some(*t);
    }
    switch_bounds(&r.switch, &r.flows, s.tick_scale)
        .into_iter()
        .filter(|b| b.class == class)
        .map(|b| b.bound.ok().map(|d| d.bound_ticks))
        .collect::<Option<Vec<_>>>()?
        .into_iter()
        .max()
}
