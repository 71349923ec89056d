//! Discounted value functions checked for the monotonicity and threshold
//! properties the structured solvers rely on.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{DelayedModel, FrameSpec, NoSensingModel, TruncationBound};
use aoi_sched::solver::structure::{
    structure_suite_delayed, structure_suite_no_sensing, StructureSuite,
};

fn report(label: &str, suite: &StructureSuite) {
    println!("{label} ({} sweeps)", suite.sweeps);
    for c in &suite.checks {
        println!(
            "  {:<28} {:>8} checked  {} violations",
            c.name, c.checked, c.violation_count
        );
    }
}

fn main() {
    let frame = FrameSpec::new(3).unwrap();
    let ch = ChannelModel::new(0.7, 0.3).unwrap();
    let bound = TruncationBound::new(60, &frame).unwrap();
    let lambda = 2.0;

    let ns = NoSensingModel::build(frame, ch, bound).unwrap();
    report(
        "no sensing",
        &structure_suite_no_sensing(&ns, lambda, 0.95).unwrap(),
    );
    let dl = DelayedModel::build(frame, ch, bound).unwrap();
    report(
        "delayed sensing",
        &structure_suite_delayed(&dl, lambda, 0.95).unwrap(),
    );
}
