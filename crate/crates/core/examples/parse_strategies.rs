// The three parser strategies agree on valid files and reject the same
// malformed ones.

use ratelab::domain::LinkObservation;
use ratelab::parsers::{parse_reward, parse_state, render_state_file, ParserStrategy};
use ratelab::rng::{self, Stream};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut decor = rng::stream(3, Stream::Decor);
    let state = render_state_file(LinkObservation::new(-56.4), &mut decor);
    print!("{state}");
    for strategy in ParserStrategy::ALL {
        let level = parse_state(&state, strategy)?;
        let stats = parse_reward("9120,9876\n", strategy)?;
        let bad = parse_reward("9120;9876\n", strategy).unwrap_err();
        println!("{strategy:>8}: level {level} dBm, {}/{} frames, bad input -> {:?}", stats.successes, stats.attempts, bad.kind());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
