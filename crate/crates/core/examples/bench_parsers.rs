// Parser microbenchmark on the host clock: repeated timed loops, the
// fastest repeat is kept.

use ratelab::clock::SimClock;
use ratelab::parsers::{bench_parsers, BenchCorpus};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = BenchCorpus::generate(11, 64);
    let report = bench_parsers(&corpus, 2_000, 3, &SimClock::real());
    print!("{}", report.to_table());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
