// Simple vs final environment presets, summarized like an end-to-end
// comparison table.

use ratelab::cli::cmd_profile;
use ratelab::config::RunConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join(format!("ratelab-presets-{}", std::process::id()));
    let config = RunConfig::from_text(&format!(
        "preset = pair\nagent = q_learning\nsteps = 300\nformat = json\nout = {}\n",
        out.display()
    ))?;
    let result = cmd_profile(&config)?;
    print!("{}", result.summary);
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
