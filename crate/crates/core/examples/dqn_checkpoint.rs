// Train a DQN online, save it, and reload it frozen: the frozen copy skips
// the train stage entirely.

use ratelab::agents::{load_agent, save_agent};
use ratelab::config::RunConfig;
use ratelab::profiler::run_profile;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ratelab-dqn-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("agent.json");

    let mut online = RunConfig::from_text("agent = dqn_online\nsteps = 200\nclock = real\nreward_query_period_ms = 5\n")?;
    online.agent_save = Some(path.clone());
    let trained = run_profile(&online)?;
    if let Some(e) = &trained.error {
        return Err(e.clone().into());
    }

    let mut frozen = online.clone();
    frozen.agent.kind = ratelab::agents::AgentKind::DqnFrozen;
    frozen.agent_checkpoint = Some(path.clone());
    frozen.agent_save = None;
    let replay = run_profile(&frozen)?;

    for (name, report) in [("online", &trained), ("frozen", &replay)] {
        let stages = report.stages.as_ref().ok_or("empty report")?;
        println!(
            "{name}: decide {:.1} us, train {:.1} us",
            stages.decide.mean / 1e3,
            stages.train.mean / 1e3
        );
    }

    // A saved checkpoint reloads bit for bit.
    let agent = load_agent(&path)?;
    save_agent(&agent, 0, &dir.join("again.json"))?;
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
