//! Trace the first slots of a simulated run: channel state, decisions and
//! the AoI sawtooth.

use aoi_sched::channel::ChannelModel;
use aoi_sched::mdp::{DelayedModel, FrameSpec, TruncationBound};
use aoi_sched::sim::{PolicyScheduler, SimConfig, Simulator, SlotRecord};
use aoi_sched::solver::{rvi_threshold_delayed, RviOptions};

fn main() {
    let frame = FrameSpec::new(3).unwrap();
    let model = DelayedModel::build(
        frame,
        ChannelModel::new(0.8, 0.3).unwrap(),
        TruncationBound::new(100, &frame).unwrap(),
    )
    .unwrap();
    let r = rvi_threshold_delayed(&model, 4.0, &RviOptions::default()).unwrap();
    let mut scheduler = PolicyScheduler::new(&model, &r.actions).unwrap();

    let mut trace: Vec<SlotRecord> = Vec::new();
    let cfg = SimConfig::new(10_000, 2, 0).unwrap();
    let result = Simulator::for_model(&model)
        .run_traced(&mut scheduler, &cfg, |s| trace.push(*s))
        .unwrap();

    println!("  t  slot  channel  action    AoI");
    for (t, s) in trace.iter().take(30).enumerate() {
        let action = match (s.transmit, s.ack) {
            (false, _) => "idle",
            (true, true) => "sent",
            (true, false) => "lost",
        };
        let bar = "#".repeat(s.aoi.min(40) as usize);
        println!(
            "{t:>3}  {:>4}  {:<7}  {action:<6}  {:>3} {bar}",
            s.slot,
            if s.good { "good" } else { "bad" },
            s.aoi
        );
    }
    println!(
        "\naverage AoI {:.3}, energy {:.3} over {} slots",
        result.avg_aoi, result.avg_energy, cfg.horizon
    );
}
