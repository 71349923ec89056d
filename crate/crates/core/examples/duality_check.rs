//! The Lagrange dual over a price grid against the cost of the
//! constrained mixture policy.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{DelayedModel, FrameSpec, TruncationBound};
use aoi_sched::solver::{bisect_lambda, dual_value_sweep, BisectOptions, RviOptions};

fn main() {
    let frame = FrameSpec::new(2).unwrap();
    let model = DelayedModel::build(
        frame,
        ChannelModel::new(0.7, 0.3).unwrap(),
        TruncationBound::new(30, &frame).unwrap(),
    )
    .unwrap();
    let e_max = 0.4;
    let grid: Vec<f64> = (0..=2000).map(|i| f64::from(i) * 0.01).collect();
    let opts = RviOptions::with_eps(1e-10);

    let dual = dual_value_sweep(&model, e_max, &grid, &opts).unwrap();
    let best = dual
        .iter()
        .max_by(|a, b| a.dual.total_cmp(&b.dual))
        .unwrap();
    let mix = bisect_lambda(
        &model,
        e_max,
        &BisectOptions {
            rvi: opts,
            ..Default::default()
        },
    )
    .unwrap();

    println!("dual maximum {:.6} at λ = {:.2}", best.dual, best.lambda);
    println!(
        "mixture AoI  {:.6} with λ in [{:.4}, {:.4}], q = {:.4}",
        mix.avg_aoi(),
        mix.minus.lambda,
        mix.plus.lambda,
        mix.q
    );
    println!("gap {:.2e}", (best.dual - mix.avg_aoi()).abs());
}
