// Per-stage profile under a virtual clock with injected host latencies.

use ratelab::backends::LatencyInjection;
use ratelab::config::{OutputFormat, RunConfig};
use ratelab::profiler::{export_report, run_profile};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = RunConfig::from_text("agent = q_learning\nsteps = 500\n")?;
    config.env.injection = LatencyInjection::fixed_ms(15.105, 0.246, 0.299);
    let report = run_profile(&config)?;
    print!("{}", export_report(&report, OutputFormat::Table)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
