use aoi_sched::channel::{Action, ChannelModel};
use aoi_sched::mdp::{DelayedModel, FrameSpec, NoSensingModel, ScheduleModel, TruncationBound};
use aoi_sched::solver::structure::{aoi_threshold_shape, belief_threshold_shape};
use aoi_sched::solver::{
    average_energy_of_policy, bisect_lambda, dual_value_sweep, enumerate_and_evaluate,
    evaluate_policy, rvi_plain, rvi_threshold_delayed, rvi_threshold_no_sensing, BisectOptions,
    PowerOptions, RviOptions, ThresholdPolicyAoI, ThresholdPolicyBelief,
};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn no_sensing(k: u32, n: u32, p11: f64, p01: f64) -> NoSensingModel {
    let frame = FrameSpec::new(k).unwrap();
    NoSensingModel::build(
        frame,
        ChannelModel::new(p11, p01).unwrap(),
        TruncationBound::new(n, &frame).unwrap(),
    )
    .unwrap()
}

fn delayed(k: u32, n: u32, p11: f64, p01: f64) -> DelayedModel {
    let frame = FrameSpec::new(k).unwrap();
    DelayedModel::build(
        frame,
        ChannelModel::new(p11, p01).unwrap(),
        TruncationBound::new(n, &frame).unwrap(),
    )
    .unwrap()
}

fn tight() -> RviOptions {
    RviOptions::with_eps(1e-10)
}

#[test]
fn oracle_agrees_with_rvi_on_small_instances() {
    let m = delayed(2, 4, 0.7, 0.3);
    let oracle = enumerate_and_evaluate(m.mdp(), 1.0, 14).unwrap();
    let rvi = rvi_plain(m.mdp(), 1.0, &tight()).unwrap();
    assert_abs_diff_eq!(oracle.gain, rvi.gain, epsilon = 1e-6);

    // 21 states; the admissibility rule keeps the enumeration manageable
    let m = no_sensing(2, 4, 0.7, 0.3);
    let oracle = enumerate_and_evaluate(m.mdp(), 1.0, 21).unwrap();
    let rvi = rvi_plain(m.mdp(), 1.0, &tight()).unwrap();
    assert_abs_diff_eq!(oracle.gain, rvi.gain, epsilon = 1e-6);
    assert!(oracle
        .minimizers
        .iter()
        .any(|p| ThresholdPolicyBelief::from_actions(&m, p).is_ok()));
}

#[test]
fn gain_and_averages_move_with_the_price() {
    for (p11, p01) in [(0.7, 0.3), (0.9, 0.5)] {
        let m = no_sensing(3, 80, p11, p01);
        let d = delayed(3, 80, p11, p01);
        let lambdas = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
        for model in [m.mdp(), d.mdp()] {
            let mut last: Option<(f64, f64, f64)> = None;
            for &l in &lambdas {
                let r = rvi_plain(model, l, &tight()).unwrap();
                let avg = evaluate_policy(model, &r.actions, &PowerOptions::default()).unwrap();
                assert_abs_diff_eq!(avg.lagrangian(l), r.gain, epsilon = 1e-6);
                if let Some((gain, aoi, energy)) = last {
                    assert!(r.gain >= gain - 1e-8);
                    assert!(avg.aoi >= aoi - 1e-8, "AoI fell from {aoi} to {}", avg.aoi);
                    assert!(avg.energy <= energy + 1e-8);
                }
                last = Some((r.gain, avg.aoi, avg.energy));
            }
        }
    }
}

#[test]
fn free_transmission_transmits_whenever_allowed() {
    let m = delayed(3, 40, 0.7, 0.3);
    let r = rvi_threshold_delayed(&m, 0.0, &RviOptions::default()).unwrap();
    for (s, a) in m.states().iter().zip(&r.actions) {
        assert_eq!(a.is_transmit(), s.aoi >= 3, "{s}");
    }
    let m = no_sensing(3, 40, 0.7, 0.3);
    let r = rvi_threshold_no_sensing(&m, 3.0, &RviOptions::default()).unwrap();
    for (s, a) in m.states().iter().zip(&r.actions) {
        if s.aoi < 3 {
            assert_eq!(*a, Action::Suspend);
        }
    }
}

#[test]
fn unconstrained_energy_anchor() {
    let m = no_sensing(3, 200, 0.7, 0.3);
    let r = rvi_plain(m.mdp(), 0.0, &RviOptions::default()).unwrap();
    let e = average_energy_of_policy(m.mdp(), &r.actions).unwrap();
    assert!((0.6067..=0.6267).contains(&e), "energy {e}");
}

#[test]
fn trivial_policies_have_trivial_energy() {
    let m = no_sensing(3, 30, 0.7, 0.3);
    let never = vec![Action::Suspend; m.mdp().len()];
    assert_eq!(average_energy_of_policy(m.mdp(), &never).unwrap(), 0.0);

    let frame = FrameSpec::new(1).unwrap();
    let always_good = ChannelModel::new(1.0, 1.0).unwrap();
    let m =
        DelayedModel::build(frame, always_good, TruncationBound::new(5, &frame).unwrap()).unwrap();
    let always = vec![Action::Transmit; m.mdp().len()];
    assert_abs_diff_eq!(
        average_energy_of_policy(m.mdp(), &always).unwrap(),
        1.0,
        epsilon = 1e-10
    );
}

#[test]
fn bisection_meets_the_budget() {
    let m = no_sensing(3, 100, 0.7, 0.3);
    let opts = BisectOptions::default();
    let loose = bisect_lambda(&m, 1.0, &opts).unwrap();
    assert_eq!(loose.q, 1.0);
    assert_eq!(loose.minus.lambda, 0.0);
    assert_eq!(loose.plus.lambda, 0.0);

    for e_max in [0.1, 0.25, 0.3, 0.45] {
        let mix = bisect_lambda(&m, e_max, &opts).unwrap();
        assert!(mix.plus.lambda - mix.minus.lambda < opts.eps_lambda);
        assert!(mix.minus.averages.energy > e_max && mix.plus.averages.energy <= e_max);
        assert_abs_diff_eq!(mix.avg_energy(), e_max, epsilon = 1e-9);
    }
    let d = delayed(3, 100, 0.7, 0.3);
    let mix = bisect_lambda(&d, 0.3, &opts).unwrap();
    assert_abs_diff_eq!(mix.avg_energy(), 0.3, epsilon = 1e-9);
}

#[test]
fn dual_curve_is_concave_and_starts_at_the_free_optimum() {
    let m = delayed(2, 30, 0.7, 0.3);
    let grid: Vec<f64> = (0..=400).map(|i| f64::from(i) * 0.05).collect();
    let dual = dual_value_sweep(&m, 0.4, &grid, &tight()).unwrap();
    let free = rvi_plain(m.mdp(), 0.0, &tight()).unwrap();
    assert_abs_diff_eq!(dual[0].dual, free.gain, epsilon = 1e-8);
    for w in dual.windows(3) {
        assert!(w[2].dual - 2.0 * w[1].dual + w[0].dual <= 1e-8);
    }
    let mix = bisect_lambda(
        &m,
        0.4,
        &BisectOptions {
            rvi: tight(),
            ..Default::default()
        },
    )
    .unwrap();
    let best = dual
        .iter()
        .map(|d| d.dual)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(best <= mix.avg_aoi() + 1e-6);
    assert!(
        (best - mix.avg_aoi()).abs() <= 1e-3,
        "{best} vs {}",
        mix.avg_aoi()
    );
}

/// The shortcut only skips states above a transmitting one in some group.
fn skippable<'a>(mut groups: impl Iterator<Item = &'a Vec<usize>>, actions: &[Action]) -> bool {
    groups.any(|g| g.iter().filter(|&&i| actions[i].is_transmit()).count() > 1)
}

/// Smallest bound above `k` at which the belief lift `μ^(N+1)` is below 1e-3.
fn mild_bound(k: u32, memory: f64) -> u32 {
    let needed = if memory <= 0.0 {
        0.0
    } else {
        (1e-3f64).ln() / memory.ln() - 1.0
    };
    (needed.ceil() as u32).max(k + 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn structured_solvers_match_plain(
        k in 2u32..=4,
        p01 in 0.0f64..0.8,
        spread in 0.0f64..1.0,
        lambda in 0.0f64..12.0,
        extra in 3u32..15,
    ) {
        let p11 = (p01 + spread * (1.0 - p01)).min(0.99);
        let n = k + extra;
        let m = no_sensing(k, n, p11, p01);
        let plain = rvi_plain(m.mdp(), lambda, &tight()).unwrap();
        let fast = rvi_threshold_no_sensing(&m, lambda, &tight()).unwrap();
        prop_assert_eq!(&plain.actions, &fast.actions);
        prop_assert!((plain.gain - fast.gain).abs() <= 1e-9);

        let d = delayed(k, n, p11, p01);
        let plain = rvi_plain(d.mdp(), lambda, &tight()).unwrap();
        let fast = rvi_threshold_delayed(&d, lambda, &tight()).unwrap();
        prop_assert_eq!(&plain.actions, &fast.actions);
        prop_assert!((plain.gain - fast.gain).abs() <= 1e-9);
        if skippable(d.groups().iter().map(|g| &g.states), &fast.actions) {
            prop_assert!(fast.argmin_evaluations < plain.argmin_evaluations);
        }
        let thresholds = ThresholdPolicyAoI::from_actions(&d, &fast.actions).unwrap();
        prop_assert!(thresholds.ordering_violations().is_empty());
        prop_assert!(aoi_threshold_shape(&d, &fast.actions, false).passed());
    }

    #[test]
    fn belief_thresholds_and_savings_under_mild_truncation(
        k in 2u32..=4,
        p01 in 0.0f64..0.9,
        memory in 0.0f64..0.9,
        lambda in 0.0f64..12.0,
    ) {
        let p11 = (p01 + memory).min(0.99);
        let n = mild_bound(k, p11 - p01);
        let m = no_sensing(k, n, p11, p01);
        let plain = rvi_plain(m.mdp(), lambda, &RviOptions::default()).unwrap();
        let fast = rvi_threshold_no_sensing(&m, lambda, &RviOptions::default()).unwrap();
        prop_assert_eq!(&plain.actions, &fast.actions);
        // the cap group is always compared in full
        if skippable(m.groups().iter().filter(|g| g.aoi < n).map(|g| &g.states), &fast.actions) {
            prop_assert!(fast.argmin_evaluations < plain.argmin_evaluations);
        }
        prop_assert!(belief_threshold_shape(&m, &fast.actions, false).passed());
        prop_assert!(ThresholdPolicyBelief::from_actions(&m, &fast.actions).is_ok());
    }
}
