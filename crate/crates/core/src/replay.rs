//! Uniform-replay transition storage.
//!
//! A fixed-capacity ring buffer of environment transitions with
//! uniform-with-replacement minibatch sampling. Sampling assembles the
//! batch into dense row-major arrays so network forward/backward passes
//! can run as matrix products.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::Prng;
use crate::sim::{ACTION_DIM, OBS_DIM};

/// One environment step: `(s, a, r, s', done)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: [f64; OBS_DIM],
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_state: [f64; OBS_DIM],
    pub done: bool,
}

/// A sampled minibatch in dense form. Row `i` across all fields is one
/// transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.dones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dones.is_empty()
    }
}

/// Fixed-capacity ring buffer over [`Transition`]s.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    write_index: usize,
    data: Vec<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay buffer capacity must be positive".into()));
        }
        Ok(ReplayBuffer { capacity, write_index: 0, data: Vec::new() })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Append a transition, overwriting the oldest once full.
    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.write_index] = t;
        }
        self.write_index = (self.write_index + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.data[index]
    }

    /// Draw `batch_size` transitions uniformly with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut Prng) -> Result<Batch> {
        if self.data.is_empty() {
            return Err(Error::Config("cannot sample from an empty replay buffer".into()));
        }
        let mut states = Array2::zeros((batch_size, OBS_DIM));
        let mut actions = Array2::zeros((batch_size, ACTION_DIM));
        let mut rewards = Array1::zeros(batch_size);
        let mut next_states = Array2::zeros((batch_size, OBS_DIM));
        let mut dones = Vec::with_capacity(batch_size);
        for row in 0..batch_size {
            let t = &self.data[rng.index(self.data.len())];
            for (j, v) in t.state.iter().enumerate() {
                states[[row, j]] = *v;
            }
            for (j, v) in t.action.iter().enumerate() {
                actions[[row, j]] = *v;
            }
            rewards[row] = t.reward;
            for (j, v) in t.next_state.iter().enumerate() {
                next_states[[row, j]] = *v;
            }
            dones.push(t.done);
        }
        Ok(Batch { states, actions, rewards, next_states, dones })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn marked(tag: f64) -> Transition {
        let mut state = [0.0; OBS_DIM];
        state[0] = tag;
        let mut next_state = [0.0; OBS_DIM];
        next_state[0] = tag + 0.5;
        Transition {
            state,
            action: [tag; ACTION_DIM],
            reward: tag,
            next_state,
            done: (tag as i64) % 2 == 0,
        }
    }

    #[test]
    fn ring_overwrites_oldest_first() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        for i in 0..6 {
            buf.push(marked(i as f64));
        }
        assert_eq!(buf.len(), 4);
        // Slots 0 and 1 were recycled by items 4 and 5.
        let kept: Vec<f64> = (0..4).map(|i| buf.get(i).reward).collect();
        assert_eq!(kept, vec![4.0, 5.0, 2.0, 3.0]);
        buf.push(marked(6.0));
        assert_eq!(buf.get(2).reward, 6.0);
        assert_eq!(buf.len(), 4);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn sample_from_empty_is_an_error() {
        let buf = ReplayBuffer::new(8).unwrap();
        let mut rng = Prng::new(0, Stream::Replay);
        assert!(buf.sample(4, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_uniform_over_slots() {
        let slots = 100;
        let mut buf = ReplayBuffer::new(slots).unwrap();
        for i in 0..slots {
            buf.push(marked(i as f64));
        }
        let mut rng = Prng::new(9, Stream::Replay);
        let draws = 50_000;
        let mut counts = vec![0usize; slots];
        let batch = buf.sample(draws, &mut rng).unwrap();
        for row in 0..draws {
            counts[batch.rewards[row] as usize] += 1;
        }
        // Each slot is Binomial(draws, 1/slots); allow 4.5 sigma so the
        // max over 100 slots stays overwhelmingly inside the bound.
        let p = 1.0 / slots as f64;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (slot, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() < 4.5 * sigma,
                "slot {slot} drawn {c} times, expected ~{mean:.0}"
            );
        }
    }

    #[test]
    fn sampling_with_replacement_exceeds_population() {
        let mut buf = ReplayBuffer::new(16).unwrap();
        for i in 0..3 {
            buf.push(marked(i as f64));
        }
        let mut rng = Prng::new(1, Stream::Replay);
        let batch = buf.sample(64, &mut rng).unwrap();
        assert_eq!(batch.len(), 64);
        for row in 0..64 {
            assert!(batch.rewards[row] < 3.0);
        }
    }

    #[test]
    fn sampled_rows_reproduce_whole_transitions() {
        let mut buf = ReplayBuffer::new(8).unwrap();
        for i in 0..8 {
            buf.push(marked(i as f64));
        }
        let mut rng = Prng::new(4, Stream::Replay);
        let batch = buf.sample(32, &mut rng).unwrap();
        for row in 0..32 {
            let tag = batch.rewards[row];
            assert_eq!(batch.states[[row, 0]], tag);
            assert_eq!(batch.actions[[row, 2]], tag);
            assert_eq!(batch.next_states[[row, 0]], tag + 0.5);
            assert_eq!(batch.dones[row], (tag as i64) % 2 == 0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut buf = ReplayBuffer::new(32).unwrap();
        for i in 0..32 {
            buf.push(marked(i as f64));
        }
        let a = buf.sample(16, &mut Prng::new(7, Stream::Replay)).unwrap();
        let b = buf.sample(16, &mut Prng::new(7, Stream::Replay)).unwrap();
        let c = buf.sample(16, &mut Prng::new(8, Stream::Replay)).unwrap();
        assert_eq!(a.rewards, b.rewards);
        assert_ne!(a.rewards, c.rewards);
    }
}
