//! End-to-end acceptance gate. Each test checks one release criterion at
//! its stated tolerance and prints a single PASS/FAIL line (visible with
//! `--nocapture`, and always on failure).

use std::collections::BTreeSet;

use rayon::prelude::*;

use esq_core::analysis::{
    empirical_pmf, equilibrium_elapsed_cdf, ks_critical, ks_statistic, moment_estimate,
    tail_exponent_fit, tv_distance, tv_distance_tags, DiscretePmf, StateBinner, StateTag,
};
use esq_core::coupling::{coupled_ensemble, coupling_survival, tv_upper_bound_from_coupling};
use esq_core::model::{
    check_conditions, drift_upper_bound, generator_terms, lyapunov, PerCountTail, StateFactor,
};
use esq_core::simulator::regen::{occupation_pmf, regenerative_cycles};
use esq_core::simulator::{ensemble_snapshots, simulate_replica};
use esq_core::{ArrivalLaw, LyapunovParams, ServiceLaw, SimMode, SimulatorConfig, SystemState};

fn report(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn count_pmf(states: &[SystemState]) -> DiscretePmf {
    let mut counts = vec![0u64; states.iter().map(|s| s.n()).max().unwrap_or(0) + 1];
    for s in states {
        counts[s.n()] += 1;
    }
    DiscretePmf::from_counts(&counts).unwrap()
}

fn poisson(mean: f64) -> DiscretePmf {
    let mut probs = vec![(-mean).exp()];
    let mut k = 0usize;
    loop {
        k += 1;
        let next = probs[k - 1] * mean / k as f64;
        probs.push(next);
        if k as f64 > mean && next < 1e-14 {
            break;
        }
    }
    DiscretePmf::new(probs).unwrap()
}

fn snapshot_states(
    seed: u64,
    horizon: f64,
    mode: SimMode,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
    replicas: usize,
) -> Vec<Vec<SystemState>> {
    let cfg = SimulatorConfig::new(seed, horizon, mode)
        .unwrap()
        .with_snapshots(vec![horizon])
        .unwrap();
    ensemble_snapshots(&cfg, arrival, service, initial, replicas).unwrap()
}

#[test]
fn closed_form_count_law_at_fixed_time() {
    let arrival = ArrivalLaw::constant(1.0).unwrap();
    let service = ServiceLaw::exponential(1.0).unwrap();
    let snaps = snapshot_states(
        4101,
        50.0,
        SimMode::Agenda,
        &arrival,
        &service,
        &SystemState::idle(0.0),
        10_000,
    );
    let states: Vec<SystemState> = snaps.into_iter().map(|mut v| v.pop().unwrap()).collect();
    let tv = tv_distance(&count_pmf(&states), &poisson(1.0));
    report(
        "count law matches the exact stationary Poisson at t = 50",
        tv < 0.03,
        &format!("TV = {tv:.4} over 10000 replicas (limit 0.03)"),
    );
}

#[test]
fn insensitive_count_law_and_equilibrium_ages() {
    let arrival = ArrivalLaw::constant(1.0).unwrap();
    let service = ServiceLaw::pareto_hazard(3.0).unwrap();
    let snaps = snapshot_states(
        4102,
        50.0,
        SimMode::Agenda,
        &arrival,
        &service,
        &SystemState::idle(0.0),
        22_000,
    );
    let states: Vec<SystemState> = snaps.into_iter().map(|mut v| v.pop().unwrap()).collect();

    // service mean is 1/2, so the insensitive count law is Poisson(1/2)
    let tv = tv_distance(&count_pmf(&states), &poisson(0.5));

    let ages: Vec<f64> = states
        .iter()
        .flat_map(|s| s.elapsed().iter().copied())
        .collect();
    let pooled = ages.len();
    let ks = ks_statistic(&ages, |u| equilibrium_elapsed_cdf(&service, u)).unwrap();
    let crit = ks_critical(0.01, pooled);

    let pass = tv < 0.03 && pooled >= 10_000 && ks < crit;
    report(
        "insensitivity: counts Poisson and ages equilibrium-distributed",
        pass,
        &format!(
            "TV = {tv:.4} (limit 0.03), KS = {ks:.4} vs critical {crit:.4} on {pooled} pooled ages"
        ),
    );
}

#[test]
fn drift_majorant_dominates_on_random_states() {
    // the arrival saturates its declared envelope: lambda(x) = max(n, 1)
    let arrival = ArrivalLaw::count_times_factor(1.0, StateFactor::One).unwrap();
    let service = ServiceLaw::pareto_hazard(31.0).unwrap();
    let params = LyapunovParams::new(31.0, 2.0, 2.0, 1.0, 0.5).unwrap();
    assert!(check_conditions(&arrival, &service, &params).all_ok());

    use esq_core::simulator::rng::{stream, StreamRole};
    use rand::Rng;
    let mut rng = stream(4103, 0, StreamRole::Scratch);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=20usize);
        let x0 = rng.gen::<f64>() * 3.0;
        let elapsed: Vec<f64> = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                if rng.gen::<f64>() < 0.3 {
                    u * 0.2
                } else {
                    u * 40.0
                }
            })
            .collect();
        let x = SystemState::new(x0, elapsed).unwrap();
        let net = generator_terms(&x, &arrival, &service, params.m, params.a).net();
        let bound = drift_upper_bound(&x, &params, arrival.big_lambda()).unwrap();
        let ok = bound < 0.0 && net <= bound + 1e-9 * bound.abs();
        violations += !ok as usize;
        worst = worst.max(net - bound);
    }
    report(
        "exact generator stays below the negative drift bound",
        violations == 0,
        &format!("{violations} violations in 10000 random states (n <= 20), worst net - bound = {worst:.3e}"),
    );
}

#[test]
fn generator_matches_one_step_monte_carlo() {
    const DELTA: f64 = 1e-3;
    const REPLICAS: usize = 1_000_000;
    const M: f64 = 2.0;
    const A: f64 = 2.0;

    let arrival = ArrivalLaw::constant(0.8).unwrap();
    let service = ServiceLaw::exponential(1.2).unwrap();

    let states: [(f64, &[f64]); 20] = [
        (0.0, &[0.0]),
        (0.5, &[0.3]),
        (1.3, &[1.0]),
        (0.0, &[2.0]),
        (0.5, &[4.0]),
        (1.3, &[0.2, 0.8]),
        (0.0, &[1.0, 1.0]),
        (0.5, &[0.5, 2.5]),
        (1.3, &[3.0, 0.1]),
        (0.0, &[1.5, 2.0]),
        (0.5, &[0.1, 0.5, 1.2]),
        (1.3, &[0.7, 1.4, 2.8]),
        (0.0, &[2.0, 2.0, 2.0]),
        (0.5, &[0.0, 0.0, 0.0]),
        (1.3, &[3.5, 0.2, 1.1]),
        (0.0, &[0.2, 0.4, 0.6, 0.8]),
        (0.5, &[1.0, 2.0, 3.0, 4.0]),
        (1.3, &[0.1, 0.1, 2.2, 2.2]),
        (0.0, &[0.5, 1.5, 0.5, 1.5]),
        (0.5, &[2.5, 0.3, 1.7, 0.9]),
    ];

    let mut worst_sigmas = 0.0f64;
    for (i, (x0, elapsed)) in states.iter().enumerate() {
        let x = SystemState::new(*x0, elapsed.to_vec()).unwrap();
        let exact = generator_terms(&x, &arrival, &service, M, A).net();

        let cfg = SimulatorConfig::new(4500 + i as u64, DELTA, SimMode::Agenda).unwrap();
        let aged = lyapunov(&x.advance(DELTA).unwrap(), M, A);
        // deviation of L(X_delta) from pure aging; zero unless an event fired
        let devs: Vec<f64> = (0..REPLICAS as u64)
            .into_par_iter()
            .map(|r| {
                let traj = simulate_replica(&cfg, &arrival, &service, &x, r).unwrap();
                lyapunov(&traj.state_at(DELTA), M, A) - aged
            })
            .collect();
        let n = REPLICAS as f64;
        let mean_dev: f64 = devs.iter().sum::<f64>() / n;
        let var: f64 = devs
            .iter()
            .map(|d| (d - mean_dev) * (d - mean_dev))
            .sum::<f64>()
            / (n - 1.0);
        let estimate = (aged - lyapunov(&x, M, A) + mean_dev) / DELTA;
        let se = (var / n).sqrt() / DELTA;
        let sigmas = (estimate - exact).abs() / se;
        worst_sigmas = worst_sigmas.max(sigmas);
    }
    report(
        "one-step Monte Carlo drift agrees with the exact generator",
        worst_sigmas <= 3.0,
        &format!("20 states x 1e6 replicas, worst |estimate - exact| = {worst_sigmas:.2} standard errors (limit 3)"),
    );
}

#[test]
fn simulation_modes_agree_across_the_law_matrix() {
    let arrivals = [
        ("constant", ArrivalLaw::constant(1.0).unwrap()),
        (
            "per_count",
            ArrivalLaw::per_count(vec![1.2, 0.9, 0.5], PerCountTail::HoldLast).unwrap(),
        ),
        (
            "decaying",
            ArrivalLaw::count_times_factor(
                0.7,
                StateFactor::ExpDecayX0 {
                    floor: 0.5,
                    rate: 1.0,
                },
            )
            .unwrap(),
        ),
    ];
    let services = [
        ("exponential", ServiceLaw::exponential(1.0).unwrap()),
        ("pareto", ServiceLaw::pareto_hazard(3.0).unwrap()),
        ("weibull", ServiceLaw::weibull(1.4, 1.0).unwrap()),
        (
            "table",
            ServiceLaw::table(&[(0.0, 0.4), (1.0, 1.1), (2.5, 0.7)]).unwrap(),
        ),
    ];

    let mut worst = 0.0f64;
    let mut worst_pair = String::new();
    for (i, (an, arrival)) in arrivals.iter().enumerate() {
        for (j, (sn, service)) in services.iter().enumerate() {
            let seed = 4300 + (i * services.len() + j) as u64;
            let pmfs: Vec<DiscretePmf> = [SimMode::Agenda, SimMode::HazardThinning]
                .iter()
                .map(|&mode| {
                    let snaps = snapshot_states(
                        seed,
                        20.0,
                        mode,
                        arrival,
                        service,
                        &SystemState::idle(0.0),
                        10_000,
                    );
                    let states: Vec<SystemState> =
                        snaps.into_iter().map(|mut v| v.pop().unwrap()).collect();
                    count_pmf(&states)
                })
                .collect();
            let tv = tv_distance(&pmfs[0], &pmfs[1]);
            if tv > worst {
                worst = tv;
                worst_pair = format!("{an} x {sn}");
            }
        }
    }
    report(
        "agenda and hazard-thinning drivers agree at t = 20",
        worst < 0.02,
        &format!(
            "worst TV = {worst:.4} at {worst_pair} over 12 pairings x 10000 replicas (limit 0.02)"
        ),
    );
}

#[test]
fn regenerative_estimator_matches_time_average_and_closed_form() {
    let arrival = ArrivalLaw::constant(1.0).unwrap();
    let service = ServiceLaw::exponential(1.0).unwrap();
    let binner = StateBinner::ByCount;

    let cycle_cfg = SimulatorConfig::new(4106, 400.0, SimMode::Agenda).unwrap();
    let (_, estimate) =
        regenerative_cycles(&cycle_cfg, &arrival, &service, &binner, 10_000).unwrap();
    let regen = estimate.pmf.to_count_pmf();

    let long_cfg = SimulatorConfig::new(4206, 20_000.0, SimMode::Agenda).unwrap();
    let long = occupation_pmf(&long_cfg, &arrival, &service, &binner, 0.1)
        .unwrap()
        .to_count_pmf();

    let tv_long = tv_distance(&regen, &long);
    let tv_closed = tv_distance(&regen, &poisson(1.0));
    report(
        "regenerative and long-run occupancy estimates agree",
        tv_long < 0.02 && tv_closed < 0.03,
        &format!("TV(regen, time-average) = {tv_long:.4} (limit 0.02), TV(regen, Poisson) = {tv_closed:.4} (limit 0.03)"),
    );
}

#[test]
fn coupled_pairs_preserve_marginals_and_merge_exactly() {
    let arrival = ArrivalLaw::constant(1.0).unwrap();
    let service = ServiceLaw::exponential(1.0).unwrap();
    let x0 = SystemState::new(0.0, vec![0.5, 1.5, 3.0]).unwrap();
    let y0 = SystemState::regeneration();

    let cfg = SimulatorConfig::new(4107, 25.0, SimMode::Agenda)
        .unwrap()
        .with_snapshots(vec![20.0])
        .unwrap();
    let outcomes = coupled_ensemble(&cfg, &arrival, &service, &x0, &y0, 10_000).unwrap();

    let mut merge_defects = 0usize;
    let mut merged = 0usize;
    for o in &outcomes {
        if o.coupling_time.censored {
            continue;
        }
        merged += 1;
        let mut ok = o.merge_state.as_ref() == Some(&SystemState::regeneration());
        if o.coupling_time.value <= 20.0 {
            ok &= o.x_snapshots[0] == o.y_snapshots[0];
        }
        ok &= o.x_final == o.y_final;
        merge_defects += !ok as usize;
    }

    let x_coupled: Vec<SystemState> = outcomes.iter().map(|o| o.x_snapshots[0].clone()).collect();
    let plain = snapshot_states(4207, 20.0, SimMode::Agenda, &arrival, &service, &x0, 10_000);
    let x_plain: Vec<SystemState> = plain.into_iter().map(|mut v| v.pop().unwrap()).collect();
    let tv = tv_distance(&count_pmf(&x_coupled), &count_pmf(&x_plain));

    report(
        "coupling preserves marginals and merges bit-exactly",
        tv < 0.02 && merge_defects == 0 && merged > 9_000,
        &format!(
            "marginal TV = {tv:.4} (limit 0.02), {merge_defects} merge defects in {merged} merged pairs of 10000"
        ),
    );
}

#[test]
fn distance_bracket_holds_and_coupling_tail_decays() {
    let arrival = ArrivalLaw::count_times_factor(
        1.0,
        StateFactor::ExpDecayX0 {
            floor: 0.2,
            rate: 1.0,
        },
    )
    .unwrap();
    let service = ServiceLaw::pareto_hazard(31.0).unwrap();
    let params = LyapunovParams::new(31.0, 2.0, 2.0, 1.0, 0.5).unwrap();
    assert!(check_conditions(&arrival, &service, &params).all_ok());

    let x0 = SystemState::new(0.0, vec![2.0, 5.0]).unwrap();
    let y0 = SystemState::regeneration();
    let times = [1.0, 2.0, 5.0, 10.0, 20.0];

    let couple_cfg = SimulatorConfig::new(4108, 30.0, SimMode::Agenda).unwrap();
    let outcomes = coupled_ensemble(&couple_cfg, &arrival, &service, &x0, &y0, 10_000).unwrap();
    let n_up = outcomes.len() as f64;

    let ensemble = |seed: u64, initial: &SystemState| -> Vec<Vec<SystemState>> {
        let cfg = SimulatorConfig::new(seed, 30.0, SimMode::Agenda)
            .unwrap()
            .with_snapshots(times.to_vec())
            .unwrap();
        ensemble_snapshots(&cfg, &arrival, &service, initial, 10_000).unwrap()
    };
    let xs = ensemble(4208, &x0);
    let ys = ensemble(4308, &y0);
    let n_low = xs.len() as f64;

    let binner = StateBinner::ByCount;
    let mut bracket_ok = true;
    let mut rows = String::new();
    for (i, &t) in times.iter().enumerate() {
        let col = |e: &[Vec<SystemState>]| -> Vec<SystemState> {
            e.iter().map(|row| row[i].clone()).collect()
        };
        let px = empirical_pmf(&col(&xs), &binner).unwrap();
        let py = empirical_pmf(&col(&ys), &binner).unwrap();
        let lower = tv_distance_tags(&px, &py);
        let cells: BTreeSet<StateTag> = px
            .iter()
            .map(|(c, _)| c)
            .chain(py.iter().map(|(c, _)| c))
            .collect();
        let var: f64 = cells
            .iter()
            .map(|&c| {
                let (p, q) = (px.get(c), py.get(c));
                (p * (1.0 - p) + q * (1.0 - q)) / n_low
            })
            .sum();
        let lower_se = 0.5 * var.sqrt();

        let upper = tv_upper_bound_from_coupling(&outcomes, t);
        let upper_se = (upper * (1.0 - upper) / n_up).sqrt();

        bracket_ok &= lower <= upper + 2.0 * (lower_se + upper_se);
        rows.push_str(&format!(" t={t}: {lower:.4} <= {upper:.4}+2se;"));
    }

    let curve = coupling_survival(&outcomes).unwrap();
    let fit = tail_exponent_fit(&curve, None).unwrap();

    report(
        "binned distance stays below the coupling bound and the tail decays",
        bracket_ok && fit.exponent <= -1.0,
        &format!(
            "bracket:{rows} survival slope = {:.2} (limit -1)",
            fit.exponent
        ),
    );
}

#[test]
fn hitting_moments_scale_with_the_energy_function() {
    let arrival = ArrivalLaw::constant(1.0).unwrap();
    let service = ServiceLaw::pareto_hazard(9.0).unwrap();
    let params = LyapunovParams::new(9.0, 1.5, 1.05, 0.1, 0.05).unwrap();
    assert!(check_conditions(&arrival, &service, &params).all_ok());

    let nested: [&[f64]; 4] = [
        &[9.0],
        &[9.0, 3.0],
        &[9.0, 3.0, 1.0, 1.0],
        &[9.0, 3.0, 1.0, 1.0, 0.5, 0.5, 0.25, 0.25],
    ];
    let power = params.ell + 1.0;
    let outer = params.a_prime();

    let mut ratios = Vec::new();
    for (i, elapsed) in nested.iter().enumerate() {
        let x = SystemState::new(0.0, elapsed.to_vec()).unwrap();
        let cfg = SimulatorConfig::new(4109 + i as u64, 150.0, SimMode::Agenda).unwrap();
        let ht = esq_core::simulator::hitting_times(&cfg, &arrival, &service, &x, 4_000).unwrap();
        let est = moment_estimate(&ht.empty, power).unwrap();
        assert!(
            !est.unreliable,
            "emptying-time samples are censored too often for a moment estimate"
        );
        ratios.push(est.value / lyapunov(&x, params.m, outer));
    }
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
        / ratios.iter().cloned().fold(f64::MAX, f64::min);
    report(
        "emptying-time moments are proportional to the initial energy",
        spread < 10.0,
        &format!(
            "ratio spread max/min = {spread:.2} across nested states n = 1, 2, 4, 8 (limit 10); ratios {:?}",
            ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn rerun_from_manifest_reproduces_identical_bytes() {
    use std::process::Command;

    let bin = env!("CARGO_BIN_EXE_esq");
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let config = format!(
        r#"
[model.arrival]
kind = "per_count"
rates = [1.5, 1.0, 0.6]

[model.service]
kind = "weibull"
shape = 1.4
scale = 1.0

[sim]
seed = 77
horizon = 30.0
replicas = 50
snapshot_times = [10.0, 30.0]

[stationary]
cycles = 300
warmup = 0.1

[output]
dir = "{}"
"#,
        out_dir.display()
    );
    let cfg_path = tmp.path().join("exp.toml");
    std::fs::write(&cfg_path, &config).unwrap();

    let run = |cmd: &str, cfg: &std::path::Path, workers: &str| {
        let out = Command::new(bin)
            .args([cmd, "--config"])
            .arg(cfg)
            .env("ESQ_WORKERS", workers)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let manifest: esq_cli::manifest::ManifestDoc =
            toml::from_str(&std::fs::read_to_string(out_dir.join("manifest.toml")).unwrap())
                .unwrap();
        manifest
    };

    let mut defects = Vec::new();
    for cmd in ["simulate", "stationary"] {
        let first = run(cmd, &cfg_path, "1");

        // rerun from the manifest's own config echo, with a different
        // worker count for good measure
        let rerun_path = tmp.path().join(format!("rerun-{cmd}.toml"));
        std::fs::write(&rerun_path, toml::to_string(&first.config).unwrap()).unwrap();
        let second = run(cmd, &rerun_path, "3");

        for (a, b) in first.files.iter().zip(&second.files) {
            if (a.name.clone(), a.sha256.clone(), a.bytes)
                != (b.name.clone(), b.sha256.clone(), b.bytes)
            {
                defects.push(format!("{cmd}/{}", a.name));
            }
        }
        if first.files.len() != second.files.len() {
            defects.push(format!("{cmd}: file count changed"));
        }
        // digests in the manifest must describe the bytes on disk
        for f in &second.files {
            let data = std::fs::read(out_dir.join(&f.name)).unwrap();
            if esq_cli::manifest::sha256_hex(&data) != f.sha256 {
                defects.push(format!("{cmd}/{}: digest mismatch on disk", f.name));
            }
        }
    }
    report(
        "rerunning from a manifest reproduces byte-identical outputs",
        defects.is_empty(),
        &format!(
            "simulate + stationary, reruns under different worker counts; defects: {:?}",
            defects
        ),
    );
}
