//! Versioned JSON checkpoints.
//!
//! ```text
//! { "format": "ratelab-agent", "version": 1, "seed": 7,
//!   "agent": { "kind": "dqn", "net": {...}, "config": {...}, "replay": {...}, "steps": 123 } }
//! ```
//!
//! `agent.kind` is `q_learning` or `dqn`. Floats are written in shortest
//! round-trip form, so a reload reproduces every parameter bit for bit.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentError, DqnAgent, DqnConfig, EpsilonSchedule, Mlp, QLearningAgent, QTable, ReplayBuffer};
use crate::domain::{MCS_COUNT, STATE_BINS};
use crate::rng::{self, Stream};

pub const CHECKPOINT_FORMAT: &str = "ratelab-agent";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: String,
    pub version: u32,
    /// Seed for the exploration rng of a reloaded agent.
    pub seed: u64,
    pub agent: CheckpointBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckpointBody {
    QLearning { table: QTable, epsilon: EpsilonSchedule, steps: u64 },
    Dqn { net: Mlp, config: DqnConfig, replay: ReplayBuffer, steps: u64 },
}

impl AgentCheckpoint {
    pub fn from_agent(agent: &Agent, seed: u64) -> Self {
        let body = match agent {
            Agent::QLearning(a) => CheckpointBody::QLearning {
                table: a.table.clone(),
                epsilon: a.epsilon,
                steps: a.steps,
            },
            Agent::Dqn(a) => CheckpointBody::Dqn {
                net: a.net.clone(),
                config: a.config.clone(),
                replay: a.replay.clone(),
                steps: a.steps,
            },
        };
        AgentCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            seed,
            agent: body,
        }
    }

    pub fn into_agent(self) -> Result<Agent, AgentError> {
        let rng = rng::stream(self.seed, Stream::Agent);
        match self.agent {
            CheckpointBody::QLearning { table, epsilon, steps } => {
                let table = QTable::from_values(table.values().to_vec(), table.alpha, table.gamma)
                    .ok_or_else(|| invalid("q-table has wrong shape or non-finite values"))?;
                let mut a = QLearningAgent::new(table.alpha, table.gamma, epsilon, rng);
                a.table = table;
                a.steps = steps;
                Ok(Agent::QLearning(a))
            }
            CheckpointBody::Dqn { net, config, replay, steps } => {
                if !net.is_well_formed() || net.input_dim() != 1 || net.output_dim() != MCS_COUNT {
                    return Err(invalid("network has wrong shape or non-finite parameters").into());
                }
                if replay.len() > replay.capacity() {
                    return Err(invalid("replay buffer exceeds its capacity").into());
                }
                Ok(Agent::Dqn(DqnAgent { net, replay, config, steps, rng }))
            }
        }
    }
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn save_agent(agent: &Agent, seed: u64, path: &Path) -> Result<(), AgentError> {
    let json = serde_json::to_vec_pretty(&AgentCheckpoint::from_agent(agent, seed))
        .map_err(io::Error::from)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_agent(path: &Path) -> Result<Agent, AgentError> {
    let bytes = fs::read(path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(io::Error::from)?;
    let format = value.get("format").and_then(|v| v.as_str()).unwrap_or("<missing>");
    let version = value.get("version").and_then(|v| v.as_u64());
    if format != CHECKPOINT_FORMAT || version != Some(CHECKPOINT_VERSION as u64) {
        return Err(AgentError::VersionMismatch {
            found: format!("{format} v{}", version.map_or("?".to_string(), |v| v.to_string())),
        });
    }
    let checkpoint: AgentCheckpoint = serde_json::from_value(value).map_err(io::Error::from)?;
    checkpoint.into_agent()
}

const _: () = assert!(STATE_BINS == 76);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentConfig, AgentKind};
    use crate::domain::{McsIndex, RewardValue, StateBin, Transition};

    fn trained(kind: AgentKind) -> Agent {
        let config = AgentConfig { kind, batch_size: 8, replay_capacity: 64, ..AgentConfig::default() };
        let mut agent = Agent::new(&config, 11).unwrap();
        for i in 0..50 {
            let s = StateBin::from_dbm(-95 + (i * 7) % 76).unwrap();
            let a = agent.decide(s);
            let r = RewardValue::new((i % 10) as f64 / 10.0).unwrap();
            let _ = agent.train(Transition { state: s, action: a, reward: r, next_state: s });
        }
        agent
    }

    fn greedy_policy(agent: &Agent) -> Vec<McsIndex> {
        StateBin::all().map(|s| agent.greedy(s)).collect()
    }

    #[test]
    fn round_trip_preserves_policy() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [AgentKind::QLearning, AgentKind::DqnOnline, AgentKind::DqnFrozen] {
            let agent = trained(kind);
            let path = dir.path().join(format!("{kind}.json"));
            save_agent(&agent, 11, &path).unwrap();
            let loaded = load_agent(&path).unwrap();
            assert_eq!(loaded.kind(), kind);
            assert_eq!(greedy_policy(&loaded).len(), 76);
            assert_eq!(greedy_policy(&agent), greedy_policy(&loaded));
            for s in StateBin::all() {
                let a: Vec<u64> = agent.action_values(s).iter().map(|v| v.to_bits()).collect();
                let b: Vec<u64> = loaded.action_values(s).iter().map(|v| v.to_bits()).collect();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn empty_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let agent = Agent::new(&AgentConfig::default(), 1).unwrap();
        let path = dir.path().join("fresh.json");
        save_agent(&agent, 1, &path).unwrap();
        let Agent::Dqn(loaded) = load_agent(&path).unwrap() else { panic!("expected dqn") };
        assert!(loaded.replay.is_empty());
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let agent = trained(AgentKind::DqnOnline);
        let path = dir.path().join("a.json");
        save_agent(&agent, 1, &path).unwrap();
        let good = fs::read_to_string(&path).unwrap();

        fs::write(&path, &good[..good.len() / 2]).unwrap();
        assert!(matches!(load_agent(&path), Err(AgentError::IoFailure(_))));

        fs::write(&path, good.replace("\"version\": 1", "\"version\": 2")).unwrap();
        assert!(matches!(load_agent(&path), Err(AgentError::VersionMismatch { .. })));

        fs::write(&path, good.replace(CHECKPOINT_FORMAT, "something-else")).unwrap();
        assert!(matches!(load_agent(&path), Err(AgentError::VersionMismatch { .. })));

        fs::write(&path, b"\x00\x01garbage").unwrap();
        assert!(load_agent(&path).is_err());

        // Structurally valid JSON with a truncated weight vector.
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["agent"]["net"]["layers"][0]["weights"].as_array_mut().unwrap().pop();
        fs::write(&path, v.to_string()).unwrap();
        assert!(matches!(load_agent(&path), Err(AgentError::IoFailure(_))));

        assert!(matches!(load_agent(&dir.path().join("missing.json")), Err(AgentError::IoFailure(_))));
    }
}
