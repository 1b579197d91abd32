// A stats table refreshed every 100 ms puts a floor under the step time,
// however short the reward query period is.

use ratelab::backends::EnvBackendKind;
use ratelab::config::RunConfig;
use ratelab::profiler::run_profile;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ratelab-stale-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    for backend in [EnvBackendKind::InMemory, EnvBackendKind::stale_file()] {
        let mut config = RunConfig::from_text("agent = q_learning\nsteps = 200\n")?;
        config.env.workdir = dir.clone();
        config.backend = backend.clone();
        let report = run_profile(&config)?;
        let mean_ms = report.totals.map_or(0.0, |t| t.mean) / 1e6;
        println!("{:<12} mean step {mean_ms:.3} ms", backend.name());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
