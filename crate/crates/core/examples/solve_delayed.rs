//! Solve the delayed-sensing model and print the AoI thresholds per frame
//! slot and last observed channel state.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{DelayedModel, FrameSpec, TruncationBound};
use aoi_sched::solver::{rvi_threshold_delayed, RviOptions, ThresholdPolicyAoI};

fn main() {
    let frame = FrameSpec::new(4).unwrap();
    let model = DelayedModel::build(
        frame,
        ChannelModel::new(0.8, 0.2).unwrap(),
        TruncationBound::new(200, &frame).unwrap(),
    )
    .unwrap();

    println!("  λ    gain      thresholds (slot: good / bad)");
    for lambda in [0.0, 2.0, 8.0, 20.0] {
        let r = rvi_threshold_delayed(&model, lambda, &RviOptions::default()).unwrap();
        let policy = ThresholdPolicyAoI::from_actions(&model, &r.actions).unwrap();
        let show = |t: Option<u32>| t.map_or("-".to_string(), |t| t.to_string());
        let cells: Vec<String> = (1..=4)
            .map(|k| {
                format!(
                    "{k}: {}/{}",
                    show(policy.threshold(k, true)),
                    show(policy.threshold(k, false))
                )
            })
            .collect();
        println!("{lambda:>5}  {:>8.4}  {}", r.gain, cells.join("  "));
        assert!(policy.ordering_violations().is_empty());
    }
}
