use aoi_sched::channel::{Action, ChannelModel};
use aoi_sched::mdp::{DelayedModel, FrameSpec, NoSensingModel, ScheduleModel, TruncationBound};
use aoi_sched::sim::{
    estimate_mixture, simulate, simulate_greedy, FnScheduler, MixtureMode, PolicyScheduler,
    SimConfig, Simulator, SlotRecord, GENERATOR,
};
use aoi_sched::solver::{
    average_energy_of_policy, bisect_lambda, rvi_threshold_no_sensing, BisectOptions,
    MixturePolicy, RviOptions, StructuredSolve,
};

fn frame(k: u32) -> FrameSpec {
    FrameSpec::new(k).unwrap()
}

fn no_sensing(k: u32, n: u32, p11: f64, p01: f64) -> NoSensingModel {
    NoSensingModel::build(
        frame(k),
        ChannelModel::new(p11, p01).unwrap(),
        TruncationBound::new(n, &frame(k)).unwrap(),
    )
    .unwrap()
}

fn delayed(k: u32, n: u32, p11: f64, p01: f64) -> DelayedModel {
    DelayedModel::build(
        frame(k),
        ChannelModel::new(p11, p01).unwrap(),
        TruncationBound::new(n, &frame(k)).unwrap(),
    )
    .unwrap()
}

fn cfg(horizon: u64, seed: u64, warmup: u64) -> SimConfig {
    SimConfig::new(horizon, seed, warmup).unwrap()
}

#[test]
fn equal_seeds_give_identical_results() {
    let m = no_sensing(3, 100, 0.7, 0.3);
    let r = rvi_threshold_no_sensing(&m, 2.0, &RviOptions::default()).unwrap();
    let a = simulate(&m, &r.actions, &cfg(20_000, 9, 100)).unwrap();
    let b = simulate(&m, &r.actions, &cfg(20_000, 9, 100)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.metadata.generator, GENERATOR);
    assert_eq!(a.metadata.seed, 9);
    let c = simulate(&m, &r.actions, &cfg(20_000, 10, 100)).unwrap();
    assert_ne!(a.avg_aoi, c.avg_aoi);

    let ch = ChannelModel::new(0.7, 0.3).unwrap();
    let g1 = simulate_greedy(frame(3), &ch, 0.4, &cfg(20_000, 4, 0)).unwrap();
    let g2 = simulate_greedy(frame(3), &ch, 0.4, &cfg(20_000, 4, 0)).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn channel_transition_frequencies_match_the_chain() {
    for (p11, p01) in [(0.7, 0.3), (0.9, 0.2), (0.55, 0.5)] {
        let ch = ChannelModel::new(p11, p01).unwrap();
        let mut records: Vec<SlotRecord> = Vec::new();
        let mut idle = FnScheduler(|_: &_| Action::Suspend);
        Simulator::new(frame(2), &ch)
            .run_traced(&mut idle, &cfg(100_000, 21, 0), |r| records.push(*r))
            .unwrap();
        let (mut from_good, mut good_good, mut from_bad, mut bad_good) = (0u64, 0u64, 0u64, 0u64);
        for w in records.windows(2) {
            if w[0].good {
                from_good += 1;
                good_good += u64::from(w[1].good);
            } else {
                from_bad += 1;
                bad_good += u64::from(w[1].good);
            }
        }
        for (hits, trials, p) in [(good_good, from_good, p11), (bad_good, from_bad, p01)] {
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let freq = hits as f64 / trials as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "{freq} vs {p} (σ = {sigma})"
            );
        }
    }
}

#[test]
fn aoi_paths_only_reset_on_acknowledgements() {
    let m = delayed(4, 120, 0.8, 0.2);
    let r = m
        .solve_structured(1.5, &RviOptions::default(), None)
        .unwrap();
    let mut records: Vec<SlotRecord> = Vec::new();
    let mut policy = PolicyScheduler::new(&m, &r.actions).unwrap();
    Simulator::for_model(&m)
        .run_traced(&mut policy, &cfg(30_000, 3, 0), |x| records.push(*x))
        .unwrap();
    assert_eq!(records.len(), 30_000);
    assert_eq!((records[0].aoi, records[0].slot), (4, 1));
    for w in records.windows(2) {
        let (now, next) = (w[0], w[1]);
        assert_eq!(now.ack, now.transmit && now.good);
        assert!(!now.transmit || now.aoi >= 4);
        if now.ack {
            assert_eq!(next.aoi, u64::from(now.slot));
        } else {
            assert_eq!(next.aoi, now.aoi + 1);
        }
        assert_eq!(next.slot, now.slot % 4 + 1);
    }
}

#[test]
fn greedy_stays_within_budget() {
    let ch = ChannelModel::new(0.7, 0.3).unwrap();
    let horizon = 100_000;
    for e_max in [0.05, 0.1, 0.3, 0.6, 1.0] {
        let r = simulate_greedy(frame(3), &ch, e_max, &cfg(horizon, 5, 0)).unwrap();
        assert!(
            r.avg_energy <= e_max + 1.0 / horizon as f64,
            "{} > {e_max}",
            r.avg_energy
        );
        assert_eq!(r.aoi_histogram.values().sum::<u64>(), horizon);
    }
}

#[test]
fn degenerate_mixtures_equal_their_components() {
    let m = no_sensing(3, 100, 0.7, 0.3);
    let mix = bisect_lambda(&m, 0.3, &BisectOptions::default()).unwrap();
    assert!(!mix.is_deterministic());
    let c = cfg(20_000, 17, 500);
    let minus = simulate(&m, &mix.minus.actions, &c).unwrap();
    let plus = simulate(&m, &mix.plus.actions, &c).unwrap();
    for mode in [MixtureMode::Initial, MixtureMode::PerSlot] {
        let only_minus = MixturePolicy {
            q: 1.0,
            ..mix.clone()
        };
        let est = estimate_mixture(&m, &only_minus, &c, mode).unwrap();
        assert_eq!(
            (est.avg_aoi, est.avg_energy),
            (minus.avg_aoi, minus.avg_energy)
        );
        let only_plus = MixturePolicy {
            q: 0.0,
            ..mix.clone()
        };
        let est = estimate_mixture(&m, &only_plus, &c, mode).unwrap();
        assert_eq!(
            (est.avg_aoi, est.avg_energy),
            (plus.avg_aoi, plus.avg_energy)
        );
    }
}

#[test]
fn mixture_spends_the_budget() {
    let m = no_sensing(3, 200, 0.7, 0.3);
    let mix = bisect_lambda(&m, 0.3, &BisectOptions::default()).unwrap();
    let est = estimate_mixture(
        &m,
        &mix,
        &SimConfig::new(100_000, 1, 1000).unwrap(),
        MixtureMode::Initial,
    )
    .unwrap();
    assert!(est.avg_energy <= 0.3 + 0.01);
    assert!(
        (est.avg_energy - 0.3).abs() <= 2.0 * est.energy_stderr,
        "{} ± {}",
        est.avg_energy,
        est.energy_stderr
    );
    let per_slot = estimate_mixture(
        &m,
        &mix,
        &SimConfig::new(100_000, 1, 1000).unwrap(),
        MixtureMode::PerSlot,
    )
    .unwrap();
    assert!(per_slot.avg_energy <= 0.3 + 0.01);
}

#[test]
fn monte_carlo_agrees_with_the_stationary_law() {
    let m = no_sensing(3, 200, 0.7, 0.3);
    let r = rvi_threshold_no_sensing(&m, 0.0, &RviOptions::default()).unwrap();
    let analytic = average_energy_of_policy(m.mdp(), &r.actions).unwrap();
    let mc = simulate(&m, &r.actions, &SimConfig::new(100_000, 1, 1000).unwrap()).unwrap();
    assert!((mc.avg_energy - analytic).abs() <= 0.01);
    assert!(
        mc.avg_aoi >= 2.0 - 1e-9,
        "below the sawtooth mean (K + 1)/2"
    );
}
