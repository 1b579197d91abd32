use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{AgentError, EpsilonSchedule};
use crate::agents::mlp::Mlp;
use crate::domain::{StateBin, Transition, MCS_COUNT, RSS_MIN_DBM, RSS_MAX_DBM};
use crate::rng::{self, SimRng};

/// Maps a state bin affinely onto `[0, 1]`: -95 dBm -> 0, -20 dBm -> 1.
pub fn normalize_state(state: StateBin) -> f64 {
    (state.dbm() - RSS_MIN_DBM) as f64 / (RSS_MAX_DBM - RSS_MIN_DBM) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub training_enabled: bool,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: vec![24, 24],
            replay_capacity: 10_000,
            batch_size: 32,
            learning_rate: 1e-3,
            gamma: 0.9,
            epsilon: EpsilonSchedule::default(),
            training_enabled: true,
        }
    }
}

impl DqnConfig {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![1];
        sizes.extend(&self.hidden);
        sizes.push(MCS_COUNT);
        sizes
    }
}

/// Fixed-capacity FIFO of transitions, sampled uniformly with replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sample(&self, n: usize, rng: &mut SimRng) -> Vec<Transition> {
        (0..n)
            .map(|_| self.items[rng::below(rng, self.items.len() as u64) as usize])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub net: Mlp,
    pub replay: ReplayBuffer,
    pub config: DqnConfig,
    pub steps: u64,
    pub(crate) rng: SimRng,
}

impl DqnAgent {
    pub fn new(config: DqnConfig, rng: SimRng) -> Self {
        let mut rng = rng;
        let net = Mlp::random(&config.layer_sizes(), &mut rng);
        let replay = ReplayBuffer::new(config.replay_capacity);
        DqnAgent { net, replay, config, steps: 0, rng }
    }

    pub fn action_values(&self, state: StateBin) -> Vec<f64> {
        self.net.forward(&[normalize_state(state)])
    }

    /// Pushes the transition and, once the buffer holds a full batch, runs
    /// one training step on a uniform sample.
    pub fn observe(&mut self, t: Transition) -> Result<Option<f64>, AgentError> {
        if !self.config.training_enabled {
            return Err(AgentError::TrainingDisabled);
        }
        self.replay.push(t);
        if self.replay.len() < self.config.batch_size {
            return Ok(None);
        }
        let batch = self.replay.sample(self.config.batch_size, &mut self.rng);
        dqn_train_step(self, &batch).map(Some)
    }
}

/// One gradient-descent step on the squared TD error of `batch`, with targets
/// `r + gamma * max Q(s', .)` from the same network held constant. Returns
/// the loss before the update.
pub fn dqn_train_step(agent: &mut DqnAgent, batch: &[Transition]) -> Result<f64, AgentError> {
    if !agent.config.training_enabled {
        return Err(AgentError::TrainingDisabled);
    }
    if batch.is_empty() {
        return Err(AgentError::Config("training batch is empty".into()));
    }
    let samples: Vec<(Vec<f64>, usize, f64)> = batch
        .iter()
        .map(|t| {
            let next_max = agent
                .action_values(t.next_state)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let target = t.reward.value() + agent.config.gamma * next_max;
            (vec![normalize_state(t.state)], t.action.as_usize(), target)
        })
        .collect();
    let (loss, grads) = agent.net.loss_and_gradients(&samples);
    agent.net.apply_gradients(&grads, agent.config.learning_rate);
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{McsIndex, RewardValue};
    use crate::rng::Stream;

    fn transition(s: i32, a: u8, r: f64, next: i32) -> Transition {
        Transition {
            state: StateBin::from_dbm(s).unwrap(),
            action: McsIndex::new(a).unwrap(),
            reward: RewardValue::new(r).unwrap(),
            next_state: StateBin::from_dbm(next).unwrap(),
        }
    }

    fn agent(config: DqnConfig) -> DqnAgent {
        DqnAgent::new(config, rng::stream(5, Stream::Agent))
    }

    #[test]
    fn normalization_endpoints() {
        assert_eq!(normalize_state(StateBin::from_dbm(-95).unwrap()), 0.0);
        assert_eq!(normalize_state(StateBin::from_dbm(-20).unwrap()), 1.0);
    }

    #[test]
    fn default_architecture() {
        let a = agent(DqnConfig::default());
        assert_eq!(a.net.sizes(), vec![1, 24, 24, 8]);
    }

    #[test]
    fn frozen_agent_refuses_training() {
        let mut a = agent(DqnConfig { training_enabled: false, ..DqnConfig::default() });
        let before = a.net.clone();
        assert!(matches!(
            dqn_train_step(&mut a, &[transition(-50, 1, 0.5, -50)]),
            Err(AgentError::TrainingDisabled)
        ));
        assert!(matches!(a.observe(transition(-50, 1, 0.5, -50)), Err(AgentError::TrainingDisabled)));
        assert_eq!(a.net, before);
    }

    #[test]
    fn matched_targets_give_zero_loss() {
        // Zero net with gamma = 0 predicts 0 everywhere; reward 0 matches.
        let mut a = agent(DqnConfig { gamma: 0.0, ..DqnConfig::default() });
        a.net = Mlp::zeros(&[1, 24, 24, 8]);
        let before = a.net.clone();
        let loss = dqn_train_step(&mut a, &[transition(-50, 3, 0.0, -40)]).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(a.net, before);
    }

    #[test]
    fn gamma_zero_target_is_reward() {
        let mut a = agent(DqnConfig { gamma: 0.0, ..DqnConfig::default() });
        let t = transition(-60, 5, 0.8, -30);
        let predicted = a.action_values(t.state)[5];
        let loss = dqn_train_step(&mut a, &[t]).unwrap();
        assert!((loss - (predicted - 0.8).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn replay_buffer_capacity_and_sampling_gate() {
        let mut a = agent(DqnConfig { replay_capacity: 40, batch_size: 32, ..DqnConfig::default() });
        for i in 0..31 {
            assert_eq!(a.observe(transition(-50, (i % 8) as u8, 0.1, -50)).unwrap(), None);
        }
        assert!(a.observe(transition(-50, 0, 0.1, -50)).unwrap().is_some());
        for _ in 0..100 {
            a.observe(transition(-50, 0, 0.1, -50)).unwrap();
        }
        assert_eq!(a.replay.len(), 40);
    }

    #[test]
    fn loss_decreases_on_fixed_batch() {
        let mut a = agent(DqnConfig::default());
        let batch: Vec<Transition> =
            (0..32).map(|i| transition(-95 + 2 * i, (i % 8) as u8, (i % 5) as f64 / 4.0, -90 + 2 * i)).collect();
        let first = dqn_train_step(&mut a, &batch).unwrap();
        let mut last = first;
        for _ in 0..100 {
            last = dqn_train_step(&mut a, &batch).unwrap();
        }
        assert!(last < first, "{last} !< {first}");
    }
}
