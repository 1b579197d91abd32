// Best MCS per RSS under the logistic link model, plus one sampled window.

use ratelab::domain::{McsIndex, StateBin};
use ratelab::linksim::{expected_reward, generate_frames, oracle_best_mcs, LinkModel};
use ratelab::rng::{self, Stream};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = LinkModel::default();
    let mut last = None;
    for bin in StateBin::all() {
        let rss = bin.dbm() as f64;
        let best = oracle_best_mcs(&model, rss);
        if last != Some(best) {
            println!("from {:>4} dBm: mcs {} (expected reward {:.3})", bin.dbm(), best, expected_reward(&model, best, rss));
            last = Some(best);
        }
    }

    let mut r = rng::stream(1, Stream::Link);
    let mcs = McsIndex::new(5)?;
    let window = generate_frames(&model, mcs, -73.0, 0.05, &mut r);
    println!("mcs 5 at -73 dBm over 50 ms: {}/{} frames", window.successes, window.attempts);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
