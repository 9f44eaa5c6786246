//! The coupled pair must (a) merge exactly and stay merged, and (b) leave
//! each copy's marginal law untouched — the whole construction is useless
//! if the shared randomness biases either trajectory. Both properties are
//! checked against plain single-copy runs.

mod common;

use esq_core::analysis::{ks_two_sample, ks_two_sample_critical, tv_distance, DiscretePmf};
use esq_core::coupling::{
    coupled_ensemble, coupling_survival, tv_upper_bound_from_coupling, CouplingOutcome,
};
use esq_core::model::StateFactor;
use esq_core::simulator::ensemble_snapshots;
use esq_core::{ArrivalLaw, ServiceLaw, SimMode, SimulatorConfig, SystemState};

fn count_pmf<'a>(states: impl Iterator<Item = &'a SystemState>) -> DiscretePmf {
    let mut counts: Vec<u64> = Vec::new();
    for s in states {
        if counts.len() <= s.n() {
            counts.resize(s.n() + 1, 0);
        }
        counts[s.n()] += 1;
    }
    DiscretePmf::from_counts(&counts).unwrap()
}

fn decaying_arrivals() -> ArrivalLaw {
    ArrivalLaw::count_times_factor(
        1.8,
        StateFactor::ExpDecayX0 {
            floor: 0.25,
            rate: 1.5,
        },
    )
    .unwrap()
}

// Once the copies merge they are the same process: identical snapshots and
// identical final states, bit for bit. Both copies must have drained at
// least once before the merging arrival.
#[test]
fn merged_copies_are_identical_ever_after() {
    let arrival = decaying_arrivals();
    let service = ServiceLaw::pareto_hazard(4.0).unwrap();
    let x0 = SystemState::new(0.0, vec![0.5, 1.5]).unwrap();
    let y0 = SystemState::idle(0.7);
    let snaps = vec![5.0, 20.0, 70.0];
    let cfg = SimulatorConfig::new(21_2026, 80.0, SimMode::Agenda)
        .unwrap()
        .with_snapshots(snaps.clone())
        .unwrap();
    let outcomes = coupled_ensemble(&cfg, &arrival, &service, &x0, &y0, 400).unwrap();

    let mut merged_runs = 0;
    for o in &outcomes {
        assert_eq!(o.x_snapshots.len(), snaps.len());
        if o.coupling_time.censored {
            assert!(o.merge_state.is_none());
            continue;
        }
        merged_runs += 1;
        let tc = o.coupling_time.value;
        assert_eq!(
            o.merge_state.as_ref().unwrap(),
            &SystemState::regeneration(),
            "merging arrival must hit two empty copies"
        );
        assert!(!o.both_idle_time.censored);
        assert!(o.both_idle_time.value <= tc);
        assert_eq!(o.x_final, o.y_final);
        for (i, &ts) in snaps.iter().enumerate() {
            if ts >= tc {
                assert_eq!(o.x_snapshots[i], o.y_snapshots[i], "snapshot at {ts}");
            }
        }
    }
    assert!(
        merged_runs > 350,
        "only {merged_runs}/400 pairs merged within the horizon"
    );
    // the shared stream keeps firing while copies are busy
    assert!(outcomes.iter().any(|o| o.attempts > 0));

    let km = coupling_survival(&outcomes).unwrap();
    assert!(km.eval(80.0) < 0.15);
    assert!((km.eval(0.0) - 1.0).abs() < 1e-12);
}

#[test]
fn identical_initial_states_couple_immediately() {
    let arrival = decaying_arrivals();
    let service = ServiceLaw::pareto_hazard(4.0).unwrap();
    let x0 = SystemState::new(0.3, vec![1.0]).unwrap();
    let cfg = SimulatorConfig::new(22_2026, 10.0, SimMode::Agenda).unwrap();
    let outcomes = coupled_ensemble(&cfg, &arrival, &service, &x0, &x0, 50).unwrap();
    for o in &outcomes {
        assert!(!o.coupling_time.censored);
        assert_eq!(o.coupling_time.value, 0.0);
        assert_eq!(o.attempts, 0);
        assert_eq!(o.merge_state.as_ref().unwrap(), &x0);
        assert_eq!(o.x_final, o.y_final);
    }
}

// The acid test: each copy of the pair, viewed alone, must have the same
// law as a plain single run from the same initial state. Checked at a
// fixed time on both the count and the total elapsed age.
#[test]
fn coupled_marginals_match_plain_runs() {
    let arrival = decaying_arrivals();
    let service = ServiceLaw::pareto_hazard(3.5).unwrap();
    let x0 = SystemState::new(0.0, vec![0.5]).unwrap();
    let y0 = SystemState::idle(0.3);
    let t = 4.0;
    let n = 6_000;

    let cfg_pair = SimulatorConfig::new(23_2026, t, SimMode::Agenda)
        .unwrap()
        .with_snapshots(vec![t])
        .unwrap();
    let outcomes = coupled_ensemble(&cfg_pair, &arrival, &service, &x0, &y0, n).unwrap();

    let cfg_plain = SimulatorConfig::new(24_2026, t, SimMode::Agenda)
        .unwrap()
        .with_snapshots(vec![t])
        .unwrap();
    let plain_x = ensemble_snapshots(&cfg_plain, &arrival, &service, &x0, n).unwrap();
    let plain_y = ensemble_snapshots(&cfg_plain, &arrival, &service, &y0, n).unwrap();

    let coupled = |pick: fn(&CouplingOutcome) -> &SystemState| -> Vec<&SystemState> {
        outcomes.iter().map(pick).collect()
    };
    let pairs = [
        ("x", coupled(|o| &o.x_snapshots[0]), &plain_x),
        ("y", coupled(|o| &o.y_snapshots[0]), &plain_y),
    ];
    for (name, coupled_states, plain) in pairs {
        let tv = tv_distance(
            &count_pmf(coupled_states.iter().copied()),
            &count_pmf(plain.iter().map(|r| &r[0])),
        );
        assert!(tv < 0.05, "{name}-copy count law is biased: tv = {tv}");

        let load = |s: &SystemState| s.elapsed().iter().sum::<f64>();
        let a: Vec<f64> = coupled_states.iter().map(|s| load(s)).collect();
        let b: Vec<f64> = plain.iter().map(|r| load(&r[0])).collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        let crit = ks_two_sample_critical(0.001, n, n);
        assert!(
            ks < crit,
            "{name}-copy elapsed law is biased: ks = {ks} >= {crit}"
        );
    }
}

// The unmerged fraction bounds the total variation distance between the
// two time-t laws from above; an empirical lower bound from independent
// ensembles must stay below it (up to sampling noise), and the bound
// itself must shrink with time.
#[test]
fn unmerged_fraction_dominates_observed_tv() {
    let arrival = ArrivalLaw::constant(1.0).unwrap();
    let service = ServiceLaw::exponential(1.0).unwrap();
    let x0 = SystemState::new(0.0, vec![0.0, 0.0, 0.0]).unwrap();
    let y0 = SystemState::regeneration();
    let times = [1.0, 3.0, 6.0];
    let n = 6_000;

    let cfg_pair = SimulatorConfig::new(25_2026, 6.0, SimMode::Agenda).unwrap();
    let outcomes = coupled_ensemble(&cfg_pair, &arrival, &service, &x0, &y0, n).unwrap();

    let cfg_plain = SimulatorConfig::new(26_2026, 6.0, SimMode::Agenda)
        .unwrap()
        .with_snapshots(times.to_vec())
        .unwrap();
    let from_x = ensemble_snapshots(&cfg_plain, &arrival, &service, &x0, n).unwrap();
    let from_y = ensemble_snapshots(&cfg_plain, &arrival, &service, &y0, n).unwrap();

    let mut last_upper = 1.0 + 1e-12;
    for (i, &t) in times.iter().enumerate() {
        let upper = tv_upper_bound_from_coupling(&outcomes, t);
        let lower = tv_distance(
            &count_pmf(from_x.iter().map(|r| &r[i])),
            &count_pmf(from_y.iter().map(|r| &r[i])),
        );
        assert!(
            upper + 0.025 > lower,
            "at t = {t}: bound {upper} fails to cover observed tv {lower}"
        );
        assert!(upper <= last_upper, "bound must be nonincreasing in t");
        last_upper = upper;
    }
    assert!(last_upper < 0.6, "hardly any pairs merged by t = 6");
}
