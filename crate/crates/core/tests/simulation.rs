use proptest::prelude::*;

use switchfdi::fdi::{FaultKind, Thresholds};
use switchfdi::sim::{FdiSetup, SimError, SimSetup, Simulation};
use switchfdi::switch::{SchedulerKind, SwitchConfig};
use switchfdi::traffic::{BurstSpec, BurstTarget, FlowSpec};
use switchfdi::{Priority, SimTime};

const TU: u64 = 1000;

fn config(ports: usize) -> SwitchConfig {
    SwitchConfig {
        num_ports: ports,
        priorities: 3,
        ingress_service: SimTime::ZERO,
        output_service: SimTime(2 * TU),
        shared_capacity: None,
        scheduler: SchedulerKind::StrictPriority,
    }
}

fn setup(switch: SwitchConfig, flows: Vec<FlowSpec>, horizon_tu: u64) -> SimSetup {
    SimSetup {
        switch,
        flows,
        bursts: Vec::new(),
        horizon: SimTime(horizon_tu * TU),
        tick_scale: TU,
        seed: 7,
        fdi: None,
        scenario_digest: String::new(),
    }
}

fn flow(id: &str, class: Priority, port: usize) -> FlowSpec {
    FlowSpec::periodic(id, class, (0, port), SimTime(5 * TU), SimTime(2 * TU))
}

#[test]
fn lone_flow_sees_only_its_transmission_time() {
    let mut sim = Simulation::new(setup(config(1), vec![flow("a", Priority::HIGH, 0)], 100)).unwrap();
    let summary = sim.run().unwrap();
    assert_eq!(summary.final_clock, SimTime(100 * TU));
    assert!(sim.trace().deliveries.iter().all(|d| d.delay == SimTime(2 * TU)));
    // releases at 0, 5, ..., 100; the one at 100 is still on the link
    assert_eq!(sim.trace().deliveries.len(), 20);
    assert_eq!(sim.conservation().in_flight, 1);
}

#[test]
fn ingress_stage_adds_its_service_time() {
    let mut cfg = config(1);
    cfg.ingress_service = SimTime(500);
    let mut sim = Simulation::new(setup(cfg, vec![flow("a", Priority::HIGH, 0)], 50)).unwrap();
    sim.run().unwrap();
    assert!(sim.trace().deliveries.iter().all(|d| d.delay == SimTime(2500)));
}

#[test]
fn full_shared_buffer_drops_and_reports() {
    let mut cfg = config(1);
    cfg.ingress_service = SimTime(TU);
    cfg.shared_capacity = Some(1);
    let f = flow("a", Priority::MEAN, 0).with_packets_per_release(3);
    let mut s = setup(cfg, vec![f], 20);
    s.fdi = Some(FdiSetup {
        thresholds: Thresholds::new().with_class(Priority::MEAN, SimTime(50 * TU)),
        k: 1,
    });
    let mut sim = Simulation::new(s).unwrap();
    sim.run().unwrap();
    let c = sim.conservation();
    assert!(c.dropped > 0);
    assert!(c.balanced());
    let drops: Vec<_> = sim
        .trace()
        .faults
        .iter()
        .filter(|f| f.kind == FaultKind::Drop)
        .collect();
    assert_eq!(drops.len() as u64, c.dropped);
    assert!(drops
        .iter()
        .all(|f| f.bound == SimTime(50 * TU) && f.class == Priority::MEAN));
}

#[test]
fn burst_adds_frames_only_inside_its_window() {
    let mut s = setup(config(1), vec![flow("a", Priority::HIGH, 0)], 100);
    s.bursts.push(BurstSpec {
        target: BurstTarget::Flow("a".into()),
        extra_per_period: 2,
        start: SimTime(10 * TU),
        end: SimTime(20 * TU),
    });
    let mut sim = Simulation::new(s).unwrap();
    sim.run().unwrap();
    // 21 nominal releases plus 2 extra at 10, 15 and 20
    assert_eq!(sim.conservation().generated, 21 + 6);
}

#[test]
fn jitter_is_reproducible_per_seed() {
    let jittery = FlowSpec {
        jitter: SimTime(3 * TU),
        ..flow("a", Priority::HIGH, 0)
    };
    let trace = |seed| {
        let mut s = setup(config(1), vec![jittery.clone(), flow("b", Priority::LOW, 0)], 200);
        s.seed = seed;
        let mut sim = Simulation::new(s).unwrap();
        sim.run().unwrap();
        sim.into_trace().deliveries
    };
    assert_eq!(trace(1), trace(1));
    assert_ne!(trace(1), trace(2));
}

#[test]
fn compensation_needs_three_class_fault_detection() {
    let mut cfg = config(1);
    cfg.scheduler = SchedulerKind::Compensation;
    let err = Simulation::new(setup(cfg, vec![flow("a", Priority::HIGH, 0)], 10))
        .err()
        .unwrap();
    assert_eq!(err, SimError::CompensationNeedsThreeClassFdi);
}

#[test]
fn every_flow_needs_a_threshold() {
    let mut s = setup(
        config(1),
        vec![flow("a", Priority::HIGH, 0), flow("b", Priority::LOW, 0)],
        10,
    );
    s.fdi = Some(FdiSetup {
        thresholds: Thresholds::new().with_class(Priority::HIGH, SimTime(TU)),
        k: 1,
    });
    match Simulation::new(s) {
        Err(SimError::MissingBound { flow, class }) => {
            assert_eq!(flow, "b");
            assert_eq!(class, Priority::LOW);
        }
        other => panic!("unexpected {:?}", other.err()),
    }
}

#[test]
fn tight_threshold_flags_every_late_frame() {
    let mut s = setup(
        config(1),
        vec![flow("lp", Priority::LOW, 0), flow("hp", Priority::HIGH, 0)],
        50,
    );
    s.fdi = Some(FdiSetup {
        thresholds: Thresholds::new()
            .with_class(Priority::HIGH, SimTime(3 * TU))
            .with_class(Priority::LOW, SimTime(3 * TU)),
        k: 1,
    });
    let mut sim = Simulation::new(s).unwrap();
    sim.run().unwrap();
    let late: Vec<u64> = sim
        .trace()
        .deliveries
        .iter()
        .filter(|d| d.delay > SimTime(3 * TU))
        .map(|d| d.packet_id)
        .collect();
    let flagged: Vec<u64> = sim.trace().faults.iter().map(|f| f.packet_id).collect();
    assert!(!late.is_empty());
    assert_eq!(late, flagged);
    assert!(sim.detector().unwrap().is_faulty(Priority::HIGH));
}

#[test]
fn compensation_holds_low_while_mean_is_faulty() {
    let mut cfg = config(1);
    cfg.scheduler = SchedulerKind::Compensation;
    let flows = vec![
        flow("hp", Priority::HIGH, 0),
        flow("mp", Priority::MEAN, 0).with_packets_per_release(2),
        flow("bp", Priority::LOW, 0),
    ];
    let mut s = setup(cfg, flows, 200);
    s.fdi = Some(FdiSetup {
        thresholds: Thresholds::new()
            .with_class(Priority::HIGH, SimTime(20 * TU))
            .with_class(Priority::MEAN, SimTime(20 * TU))
            .with_class(Priority::LOW, SimTime(1000 * TU)),
        k: 1,
    });
    let mut sim = Simulation::new(s).unwrap();
    sim.run().unwrap();
    let first = sim.trace().decisions.first().expect("a decision is taken");
    assert_eq!(first.action.to_string(), "hold_bp_transmit_hp_then_mp");
    let held_from = first.at;
    assert!(sim.compensator().unwrap().held() > 0);
    assert!(sim
        .trace()
        .deliveries
        .iter()
        .filter(|d| d.class == Priority::LOW)
        .all(|d| d.delivered_at <= held_from + SimTime(2 * TU)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn packets_are_conserved_and_delays_positive(
        ports in 1usize..3,
        specs in prop::collection::vec((0u8..3, 0usize..3, 2u64..12, 1u64..4, 1u32..3, 0u64..5), 1..5),
        ingress in 0u64..400,
        capacity in prop::option::of(1usize..6),
        seed in any::<u64>(),
    ) {
        let mut cfg = config(ports);
        cfg.ingress_service = SimTime(ingress);
        cfg.shared_capacity = capacity;
        let flows: Vec<FlowSpec> = specs
            .iter()
            .enumerate()
            .map(|(i, &(class, port, period, tx, ppr, phase))| {
                FlowSpec::periodic(
                    &format!("f{i}"),
                    Priority::new(class).unwrap(),
                    (0, port % ports),
                    SimTime(period * TU),
                    SimTime(tx * TU),
                )
                .with_packets_per_release(ppr)
                .with_phase(SimTime(phase * TU))
            })
            .collect();
        let mut s = setup(cfg, flows, 150);
        s.seed = seed;
        let mut sim = Simulation::new(s).unwrap();
        while sim.step().unwrap().is_some() {
            prop_assert!(sim.conservation().balanced());
        }
        prop_assert!(sim.trace().deliveries.iter().all(|d| d.delay > SimTime::ZERO && d.delivered_at <= SimTime(150 * TU)));
    }
}
