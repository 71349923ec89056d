//! Meet an average energy budget by mixing the two deterministic policies
//! found by bisection on the energy price, then check it by simulation.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{FrameSpec, NoSensingModel, TruncationBound};
use aoi_sched::sim::{estimate_mixture, MixtureMode, SimConfig};
use aoi_sched::solver::{bisect_lambda, BisectOptions};

fn main() {
    let frame = FrameSpec::new(3).unwrap();
    let model = NoSensingModel::build(
        frame,
        ChannelModel::new(0.7, 0.3).unwrap(),
        TruncationBound::new(200, &frame).unwrap(),
    )
    .unwrap();
    let cfg = SimConfig::new(100_000, 1, 1000).unwrap();

    println!(
        "E_max   λ-       λ+       q       AoI     energy   simulated AoI     simulated energy"
    );
    for e_max in [0.1, 0.2, 0.3, 0.5] {
        let mix = bisect_lambda(&model, e_max, &BisectOptions::default()).unwrap();
        let est = estimate_mixture(&model, &mix, &cfg, MixtureMode::Initial).unwrap();
        println!(
            "{e_max:<6}  {:<7.3}  {:<7.3}  {:.3}   {:.4}  {:.4}   {:.4} ± {:.4}   {:.4} ± {:.4}",
            mix.minus.lambda,
            mix.plus.lambda,
            mix.q,
            mix.avg_aoi(),
            mix.avg_energy(),
            est.avg_aoi,
            est.aoi_stderr,
            est.avg_energy,
            est.energy_stderr
        );
    }
}
