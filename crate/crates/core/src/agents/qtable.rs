use serde::{Deserialize, Serialize};

use crate::domain::{StateBin, Transition, MCS_COUNT, STATE_BINS};

/// Tabular action values over the RSS grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    /// Row-major `STATE_BINS x MCS_COUNT`.
    values: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
}

impl QTable {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        QTable { values: vec![0.0; STATE_BINS * MCS_COUNT], alpha, gamma }
    }

    pub fn from_values(values: Vec<f64>, alpha: f64, gamma: f64) -> Option<Self> {
        (values.len() == STATE_BINS * MCS_COUNT && values.iter().all(|v| v.is_finite()))
            .then_some(QTable { values, alpha, gamma })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, state: StateBin) -> &[f64] {
        let i = state.index() * MCS_COUNT;
        &self.values[i..i + MCS_COUNT]
    }

    pub fn row_mut(&mut self, state: StateBin) -> &mut [f64] {
        let i = state.index() * MCS_COUNT;
        &mut self.values[i..i + MCS_COUNT]
    }

    /// `Q(s,a) += alpha * (r + gamma * max Q(s',.) - Q(s,a))`, evaluated as
    /// `(1 - alpha) * Q + alpha * target` so that alpha = 1 lands exactly on
    /// the target and alpha = 0 leaves the entry untouched.
    pub fn update(&mut self, t: &Transition) {
        let next_max = self.row(t.next_state).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a = t.action.as_usize();
        let q = self.row(t.state)[a];
        let target = t.reward.value() + self.gamma * next_max;
        self.row_mut(t.state)[a] = (1.0 - self.alpha) * q + self.alpha * target;
    }
}

pub fn q_update(table: &mut QTable, transition: &Transition) {
    table.update(transition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{McsIndex, RewardValue};
    use proptest::prelude::*;

    fn transition(s: i32, a: u8, r: f64, next: i32) -> Transition {
        Transition {
            state: StateBin::from_dbm(s).unwrap(),
            action: McsIndex::new(a).unwrap(),
            reward: RewardValue::new(r).unwrap(),
            next_state: StateBin::from_dbm(next).unwrap(),
        }
    }

    #[test]
    fn one_step_fixed_point() {
        let mut q = QTable::new(1.0, 0.0);
        q_update(&mut q, &transition(-50, 2, 0.5, -50));
        assert_eq!(q.row(StateBin::from_dbm(-50).unwrap())[2], 0.5);
    }

    #[test]
    fn discounted_update() {
        let mut q = QTable::new(0.5, 0.9);
        let next = StateBin::from_dbm(-60).unwrap();
        q.row_mut(next)[4] = 1.0;
        q_update(&mut q, &transition(-50, 1, 0.0, -60));
        assert!((q.row(StateBin::from_dbm(-50).unwrap())[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn zero_alpha_is_identity() {
        let mut q = QTable::new(0.0, 0.9);
        q.row_mut(StateBin::from_dbm(-30).unwrap())[3] = 0.7;
        let before = q.clone();
        q_update(&mut q, &transition(-30, 3, 1.0, -30));
        assert_eq!(q, before);
    }

    proptest! {
        #[test]
        fn alpha_one_gamma_zero_sets_reward(prior in -10.0f64..10.0, r in 0.0f64..=1.0, a in 0u8..8) {
            let mut q = QTable::new(1.0, 0.0);
            let s = StateBin::from_dbm(-70).unwrap();
            q.row_mut(s)[a as usize] = prior;
            q_update(&mut q, &transition(-70, a, r, -40));
            prop_assert_eq!(q.row(s)[a as usize], r);
        }
    }
}
