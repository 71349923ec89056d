//! Optimal constrained policies against the greedy baseline that
//! transmits whenever its energy account allows.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{DelayedModel, FrameSpec, NoSensingModel, TruncationBound};
use aoi_sched::sim::{estimate_mixture, simulate_greedy, MixtureMode, SimConfig};
use aoi_sched::solver::{bisect_lambda, BisectOptions};

fn main() {
    let frame = FrameSpec::new(3).unwrap();
    let ch = ChannelModel::new(0.7, 0.3).unwrap();
    let bound = TruncationBound::new(200, &frame).unwrap();
    let no_sensing = NoSensingModel::build(frame, ch, bound).unwrap();
    let delayed = DelayedModel::build(frame, ch, bound).unwrap();
    let cfg = SimConfig::new(100_000, 7, 1000).unwrap();
    let opts = BisectOptions::default();

    println!("E_max  no-sensing  delayed  greedy");
    for e_max in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6] {
        let ns = estimate_mixture(
            &no_sensing,
            &bisect_lambda(&no_sensing, e_max, &opts).unwrap(),
            &cfg,
            MixtureMode::Initial,
        )
        .unwrap();
        let dl = estimate_mixture(
            &delayed,
            &bisect_lambda(&delayed, e_max, &opts).unwrap(),
            &cfg,
            MixtureMode::Initial,
        )
        .unwrap();
        let greedy = simulate_greedy(frame, &ch, e_max, &cfg).unwrap();
        println!(
            "{e_max:<5}  {:<10.3}  {:<7.3}  {:.3}",
            ns.avg_aoi, dl.avg_aoi, greedy.avg_aoi
        );
    }
}
