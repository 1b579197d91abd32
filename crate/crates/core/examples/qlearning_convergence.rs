// Tabular Q-learning on a constant -50 dBm link converges to the oracle MCS.

use ratelab::backends::{EnvConfig, Environment, EnvBackendKind};
use ratelab::agents::{Agent, AgentConfig, AgentKind};
use ratelab::clock::SimClock;
use ratelab::domain::{discretize_rss, Transition};
use ratelab::linksim::{oracle_best_mcs, Link, LinkModel, TraceKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = LinkModel::default();
    let link = Link::new(model.clone(), TraceKind::Constant { level: -50.0 }, 5)?;
    let mut env = Environment::new(EnvBackendKind::InMemory, EnvConfig::default(), link, 5)?;
    let mut agent = Agent::new(&AgentConfig { kind: AgentKind::QLearning, ..AgentConfig::default() }, 5)?;
    let clock = SimClock::virtual_clock();

    let mut state = discretize_rss(env.get_state(&clock)?);
    for _ in 0..8_000 {
        let action = agent.decide(state);
        let step = env.step(action, &clock)?;
        let next_state = discretize_rss(step.observation);
        agent.train(Transition { state, action, reward: step.reward, next_state })?;
        state = next_state;
    }
    println!("greedy mcs {} / oracle mcs {}", agent.greedy(state), oracle_best_mcs(&model, -50.0));
    println!("virtual time elapsed: {:.1} s", clock.now_ns() as f64 / 1e9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
