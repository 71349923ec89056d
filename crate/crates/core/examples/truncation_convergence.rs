//! Optimal average cost of the truncated model as the AoI bound grows.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{FrameSpec, NoSensingModel, ScheduleModel, TruncationBound};
use aoi_sched::solver::{rvi_threshold_no_sensing, RviOptions};

fn main() {
    let frame = FrameSpec::new(3).unwrap();
    let ch = ChannelModel::new(0.7, 0.3).unwrap();
    for lambda in [0.0, 1.0, 5.0] {
        println!("λ = {lambda}");
        let mut last: Option<f64> = None;
        for n in [25, 50, 100, 200, 400] {
            let model =
                NoSensingModel::build(frame, ch, TruncationBound::new(n, &frame).unwrap()).unwrap();
            let r = rvi_threshold_no_sensing(&model, lambda, &RviOptions::with_eps(1e-10)).unwrap();
            let diff = last.map_or(String::new(), |g| {
                format!("  change {:.2e}", (r.gain - g).abs())
            });
            println!(
                "  N = {n:>3}  {:>4} states  gain {:.10}{diff}",
                model.mdp().len(),
                r.gain
            );
            last = Some(r.gain);
        }
    }
}
