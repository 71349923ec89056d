//! Belief updates of a two-state Markov channel: one-step map, m-step
//! closed form, the stationary point and symbolic beliefs.

use aoi_sched::channel::{Belief, ChannelModel, Origin};

fn main() {
    let ch = ChannelModel::new(0.7, 0.3).unwrap();
    println!("memory μ = p11 - p01 = {:.2}", ch.memory());
    println!(
        "stationary good probability = {:.4}",
        ch.stationary_good_probability().unwrap()
    );

    println!("\n m   from good   from bad");
    for m in 0..=8 {
        let good = Belief::new(&ch, Origin::FromGood, m);
        let bad = Belief::new(&ch, Origin::FromBad, m);
        println!("{m:>2}   {:.6}    {:.6}", good.value, bad.value);
    }

    // stepping a symbolic belief agrees with the closed form
    let stepped = (0..5).fold(Belief::new(&ch, Origin::FromBad, 0), |b, _| b.advance(&ch));
    let closed = ch.m_step_update(ch.p01(), 5).unwrap();
    println!(
        "\nfive steps from p01: symbolic {:.12}, closed form {closed:.12}",
        stepped.value
    );
}
