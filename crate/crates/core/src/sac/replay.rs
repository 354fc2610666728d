use ndarray::{Array1, Array2};
use rand::Rng;

use crate::nn::Scalar;
use crate::seeding::StreamRng;

/// One environment step for replay.
///
/// `continuation` is 0 only when the step reached the goal. Timeouts keep it
/// at 1 and carry the post-reset observation as `next_obs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub continuation: f64,
}

/// Row-major mini-batch gathered from a [`ReplayBuffer`].
#[derive(Debug, Clone)]
pub struct Batch<F> {
    pub obs: Array2<F>,
    pub actions: Array2<F>,
    pub rewards: Array1<F>,
    pub next_obs: Array2<F>,
    pub continuations: Array1<F>,
}

impl<F: Scalar> Batch<F> {
    pub fn from_transitions<'a>(items: impl ExactSizeIterator<Item = &'a Transition>) -> Self {
        let items: Vec<&Transition> = items.collect();
        assert!(!items.is_empty(), "empty batch");
        let rows = items.len();
        let od = items[0].obs.len();
        let ad = items[0].action.len();
        let gather = |cols: usize, f: &dyn Fn(&Transition) -> &[f64]| {
            Array2::from_shape_fn((rows, cols), |(r, c)| F::of(f(items[r])[c]))
        };
        Self {
            obs: gather(od, &|t| &t.obs),
            actions: gather(ad, &|t| &t.action),
            next_obs: gather(od, &|t| &t.next_obs),
            rewards: items.iter().map(|t| F::of(t.reward)).collect(),
            continuations: items.iter().map(|t| F::of(t.continuation)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Fixed-capacity FIFO store; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.next
        };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Uniform sample with replacement.
    pub fn sample<F: Scalar>(&self, batch_size: usize, rng: &mut StreamRng) -> Batch<F> {
        assert!(!self.items.is_empty(), "sampling an empty replay buffer");
        let n = self.items.len();
        let picks: Vec<&Transition> = (0..batch_size)
            .map(|_| &self.items[rng.random_range(0..n)])
            .collect();
        Batch::from_transitions(picks.into_iter())
    }
}
