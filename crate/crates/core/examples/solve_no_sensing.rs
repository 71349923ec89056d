//! Solve the no-sensing model for a fixed energy price and print the
//! belief thresholds of the optimal policy.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{FrameSpec, NoSensingModel, ScheduleModel, TruncationBound};
use aoi_sched::solver::{
    evaluate_policy, rvi_plain, rvi_threshold_no_sensing, PowerOptions, RviOptions,
    ThresholdPolicyBelief,
};

fn main() {
    let frame = FrameSpec::new(3).unwrap();
    let model = NoSensingModel::build(
        frame,
        ChannelModel::new(0.7, 0.3).unwrap(),
        TruncationBound::new(100, &frame).unwrap(),
    )
    .unwrap();
    let lambda = 5.0;
    println!("{} states", model.mdp().len());

    let opts = RviOptions::default();
    let plain = rvi_plain(model.mdp(), lambda, &opts).unwrap();
    let fast = rvi_threshold_no_sensing(&model, lambda, &opts).unwrap();
    println!(
        "gain {:.6} (plain) vs {:.6} (threshold-aware)",
        plain.gain, fast.gain
    );
    println!(
        "argmin evaluations: {} vs {}",
        plain.argmin_evaluations, fast.argmin_evaluations
    );
    assert_eq!(plain.actions, fast.actions);

    let avg = evaluate_policy(model.mdp(), &fast.actions, &PowerOptions::default()).unwrap();
    println!(
        "average AoI {:.4}, average energy {:.4}",
        avg.aoi, avg.energy
    );

    let policy = ThresholdPolicyBelief::from_actions(&model, &fast.actions).unwrap();
    println!("\nsmallest transmitting belief per (AoI, slot), first rows:");
    for ((aoi, slot), w) in policy.thresholds.iter().take(12) {
        match w {
            Some(w) => println!("  Δ={aoi:>3} k={slot}  ω* = {w:.4}"),
            None => println!("  Δ={aoi:>3} k={slot}  never transmits"),
        }
    }
}
