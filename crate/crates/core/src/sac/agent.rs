use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use super::checkpoint::Checkpoint;
use super::policy::{squash_head, DeterministicActor};
use super::{AgentConfig, Batch, ReplayBuffer};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp, MlpGrads, Scalar, ScalarAdam};
use crate::seeding::{stream, StreamRng};

/// Soft Bellman target `r + γ·c·(min Q'(s', a') - α·log π(a'|s'))`.
pub fn critic_target(
    reward: f64,
    continuation: f64,
    min_next_q: f64,
    next_log_prob: f64,
    alpha: f64,
    gamma: f64,
) -> f64 {
    reward + gamma * continuation * (min_next_q - alpha * next_log_prob)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub critic: f64,
    pub actor: f64,
    pub temperature: f64,
    pub alpha: f64,
    /// Mean of `-log π` over the actor batch.
    pub entropy: f64,
}

/// Soft actor-critic learner over element type `F`.
#[derive(Debug, Clone)]
pub struct SacAgent<F: Scalar> {
    config: AgentConfig,
    obs_dim: usize,
    action_dim: usize,
    actor: Mlp<F>,
    critics: [Mlp<F>; 2],
    targets: [Mlp<F>; 2],
    log_alpha: f64,
    actor_opt: Adam<F>,
    critic_opts: [Adam<F>; 2],
    alpha_opt: ScalarAdam,
    rng: StreamRng,
    updates: u64,
}

const ACTOR_OUTPUT_SCALE: f64 = 0.01;

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

fn grads_finite<F: Scalar>(g: &MlpGrads<F>) -> bool {
    g.is_finite()
}

impl<F: Scalar> SacAgent<F> {
    /// Networks are initialised from the `networks` stream of `seed`; action
    /// noise and replay sampling use the `sampling` stream.
    pub fn new(obs_dim: usize, action_dim: usize, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream(seed, "networks", 0);
        let actor = Mlp::new(
            &layer_sizes(obs_dim, &config.actor_hidden, 2 * action_dim),
            ACTOR_OUTPUT_SCALE,
            &mut init,
        );
        let critic_sizes = layer_sizes(obs_dim + action_dim, &config.critic_hidden, 1);
        let critics = [
            Mlp::new(&critic_sizes, 1.0, &mut init),
            Mlp::new(&critic_sizes, 1.0, &mut init),
        ];
        let betas = config.adam_betas;
        Ok(Self {
            actor_opt: Adam::new(&actor, config.actor_lr, betas),
            critic_opts: [
                Adam::new(&critics[0], config.critic_lr, betas),
                Adam::new(&critics[1], config.critic_lr, betas),
            ],
            alpha_opt: ScalarAdam::new(config.temp_lr, betas),
            targets: critics.clone(),
            log_alpha: config.init_temperature.ln(),
            rng: stream(seed, "sampling", 0),
            updates: 0,
            obs_dim,
            action_dim,
            actor,
            critics,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn set_log_alpha(&mut self, log_alpha: f64) {
        self.log_alpha = log_alpha;
    }

    pub fn target_entropy(&self) -> f64 {
        self.config.target_entropy_for(self.action_dim)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn actor(&self) -> &Mlp<F> {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Mlp<F> {
        &mut self.actor
    }

    pub fn critic(&self, i: usize) -> &Mlp<F> {
        &self.critics[i]
    }

    pub fn critic_mut(&mut self, i: usize) -> &mut Mlp<F> {
        &mut self.critics[i]
    }

    pub fn target(&self, i: usize) -> &Mlp<F> {
        &self.targets[i]
    }

    pub fn deterministic_policy(&self) -> DeterministicActor<F> {
        DeterministicActor::new(self.actor.clone())
    }

    /// Standard normal noise of shape `(rows, action_dim)` from the sampling stream.
    pub fn noise(&mut self, rows: usize) -> Array2<F> {
        let rng = &mut self.rng;
        Array2::from_shape_simple_fn((rows, self.action_dim), || {
            let z: f64 = StandardNormal.sample(rng);
            F::of(z)
        })
    }

    fn log_std_bounds(&self) -> (f64, f64) {
        (self.config.log_std_min, self.config.log_std_max)
    }

    /// Sample (or, if `deterministic`, take the mean of) the policy at `obs`.
    pub fn act(&mut self, obs: &[f64], deterministic: bool) -> Vec<f64> {
        let x = Array2::from_shape_fn((1, obs.len()), |(_, c)| F::of(obs[c]));
        let head = self.actor.forward(x.view());
        if deterministic {
            (0..self.action_dim)
                .map(|j| head[[0, j]].to_f64_lossy().tanh())
                .collect()
        } else {
            let eps = self.noise(1);
            let sq = squash_head(&head, &eps, self.log_std_bounds());
            sq.actions.row(0).iter().map(|a| a.to_f64_lossy()).collect()
        }
    }

    fn critic_input(obs: ArrayView2<F>, actions: ArrayView2<F>) -> Array2<F> {
        concatenate(Axis(1), &[obs, actions]).expect("batch rows agree")
    }

    /// Bootstrapped targets for a batch, with `next_eps` as the policy noise
    /// at the next observations.
    pub fn critic_targets(&self, batch: &Batch<F>, next_eps: &Array2<F>) -> Array1<F> {
        let head = self.actor.forward(batch.next_obs.view());
        let sq = squash_head(&head, next_eps, self.log_std_bounds());
        let input = Self::critic_input(batch.next_obs.view(), sq.actions.view());
        let q1 = self.targets[0].forward(input.view());
        let q2 = self.targets[1].forward(input.view());
        let alpha = F::of(self.alpha());
        let gamma = F::of(self.config.gamma);
        Array1::from_shape_fn(batch.len(), |r| {
            let min_q = q1[[r, 0]].min(q2[[r, 0]]);
            batch.rewards[r] + gamma * batch.continuations[r] * (min_q - alpha * sq.log_probs[r])
        })
    }

    /// Sum over both critics of the mean squared error to the soft target,
    /// with gradients for each critic.
    pub fn critic_loss(&self, batch: &Batch<F>, next_eps: &Array2<F>) -> (f64, [MlpGrads<F>; 2]) {
        let y = self.critic_targets(batch, next_eps);
        let input = Self::critic_input(batch.obs.view(), batch.actions.view());
        let n = F::of(batch.len() as f64);
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(2);
        for critic in &self.critics {
            let (q, cache) = critic.forward_cached(input.view());
            let diff = &q.column(0) - &y;
            loss += (diff.mapv(|d| d * d).sum() / n).to_f64_lossy();
            let d_out = (diff * (F::of(2.0) / n)).insert_axis(Axis(1));
            let (g, _) = critic.backward(&cache, d_out, true);
            grads.push(g.expect("parameter gradients requested"));
        }
        let g2 = grads.pop().expect("two critics");
        let g1 = grads.pop().expect("two critics");
        (loss, [g1, g2])
    }

    /// `mean(α·log π(ã|s) - min_k Q_k(s, ã))` with `ã` reparameterised by
    /// `eps`. Returns the loss, actor gradients and per-sample log-probs.
    pub fn actor_loss(&self, batch: &Batch<F>, eps: &Array2<F>) -> (f64, MlpGrads<F>, Array1<F>) {
        let d = self.action_dim;
        let rows = batch.len();
        let n = F::of(rows as f64);
        let alpha = F::of(self.alpha());
        let (head, cache) = self.actor.forward_cached(batch.obs.view());
        let sq = squash_head(&head, eps, self.log_std_bounds());
        let input = Self::critic_input(batch.obs.view(), sq.actions.view());
        let (q1, c1) = self.critics[0].forward_cached(input.view());
        let (q2, c2) = self.critics[1].forward_cached(input.view());

        let mut loss = F::zero();
        let mut d1 = Array2::zeros((rows, 1));
        let mut d2 = Array2::zeros((rows, 1));
        for r in 0..rows {
            let (a, b) = (q1[[r, 0]], q2[[r, 0]]);
            loss += alpha * sq.log_probs[r] - a.min(b);
            if a <= b {
                d1[[r, 0]] = -F::one() / n;
            } else {
                d2[[r, 0]] = -F::one() / n;
            }
        }
        let (_, din1) = self.critics[0].backward(&c1, d1, false);
        let (_, din2) = self.critics[1].backward(&c2, d2, false);
        let od = self.obs_dim;
        let dq_da = &din1.slice(s![.., od..]) + &din2.slice(s![.., od..]);

        let two = F::of(2.0);
        let mut d_head = Array2::zeros((rows, 2 * d));
        for r in 0..rows {
            for j in 0..d {
                let a = sq.actions[[r, j]];
                // d/du of the sample path: through Q via tanh, and through
                // -ln(1 - tanh(u)^2) whose derivative is 2 tanh(u).
                let g_u = dq_da[[r, j]] * (F::one() - a * a) + alpha * two * a / n;
                d_head[[r, j]] = g_u;
                if sq.log_std_free[[r, j]] {
                    d_head[[r, d + j]] = g_u * sq.std[[r, j]] * sq.eps[[r, j]] - alpha / n;
                }
            }
        }
        let (grads, _) = self.actor.backward(&cache, d_head, true);
        (
            (loss / n).to_f64_lossy(),
            grads.expect("parameter gradients requested"),
            sq.log_probs,
        )
    }

    /// `-log α · mean(log π + target_entropy)` and its derivative in `log α`.
    pub fn temperature_loss(&self, log_probs: &Array1<F>) -> (f64, f64) {
        let h = self.target_entropy();
        let m = log_probs
            .iter()
            .map(|lp| lp.to_f64_lossy() + h)
            .sum::<f64>()
            / log_probs.len() as f64;
        (-self.log_alpha * m, -m)
    }

    pub fn soft_update_targets(&mut self) {
        let tau = F::of(self.config.tau);
        for (t, c) in self.targets.iter_mut().zip(&self.critics) {
            t.soft_update_from(c, tau);
        }
    }

    /// One gradient step each on the critics, the actor and the temperature,
    /// followed by the soft target update.
    pub fn update_on_batch(
        &mut self,
        batch: &Batch<F>,
        next_eps: &Array2<F>,
        eps: &Array2<F>,
    ) -> Result<Losses> {
        let update = self.updates;
        let (critic, [g1, g2]) = self.critic_loss(batch, next_eps);
        if !critic.is_finite() || !grads_finite(&g1) || !grads_finite(&g2) {
            return Err(Error::NonFinite {
                what: "critic loss or gradient",
                update,
            });
        }
        self.critic_opts[0].step(&mut self.critics[0], &g1);
        self.critic_opts[1].step(&mut self.critics[1], &g2);

        let (actor, ga, log_probs) = self.actor_loss(batch, eps);
        if !actor.is_finite() || !grads_finite(&ga) {
            return Err(Error::NonFinite {
                what: "actor loss or gradient",
                update,
            });
        }
        self.actor_opt.step(&mut self.actor, &ga);

        let (temperature, g_alpha) = self.temperature_loss(&log_probs);
        if !temperature.is_finite() || !g_alpha.is_finite() {
            return Err(Error::NonFinite {
                what: "temperature loss",
                update,
            });
        }
        self.alpha_opt.step(&mut self.log_alpha, g_alpha);

        self.soft_update_targets();
        self.updates += 1;
        let entropy =
            -log_probs.iter().map(|x| x.to_f64_lossy()).sum::<f64>() / log_probs.len() as f64;
        Ok(Losses {
            critic,
            actor,
            temperature,
            alpha: self.alpha(),
            entropy,
        })
    }

    /// Sample a batch from `buffer` and run [`Self::update_on_batch`].
    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<Losses> {
        let batch = buffer.sample::<F>(self.config.batch_size, &mut self.rng);
        let next_eps = self.noise(batch.len());
        let eps = self.noise(batch.len());
        self.update_on_batch(&batch, &next_eps, &eps)
    }

    /// Parameters and config as a checkpoint; `meta` is appended to the header.
    pub fn to_checkpoint(&self, meta: &[(String, String)]) -> Checkpoint {
        let mut ckpt = Checkpoint::default();
        ckpt.push_header("obs_dim", self.obs_dim.to_string());
        ckpt.push_header("action_dim", self.action_dim.to_string());
        ckpt.push_header("updates", self.updates.to_string());
        for (k, v) in self.config.entries() {
            ckpt.push_header(k, v);
        }
        for (k, v) in meta {
            ckpt.push_header(k, v.clone());
        }
        ckpt.push_mlp("actor", &self.actor);
        ckpt.push_mlp("critic1", &self.critics[0]);
        ckpt.push_mlp("critic2", &self.critics[1]);
        ckpt.push_mlp("target1", &self.targets[0]);
        ckpt.push_mlp("target2", &self.targets[1]);
        ckpt.push_scalar("log_alpha", self.log_alpha);
        ckpt
    }

    /// Rebuild an agent from a checkpoint. Optimiser state starts fresh.
    pub fn from_checkpoint(ckpt: &Checkpoint, seed: u64) -> Result<Self> {
        let mut config = AgentConfig::default();
        for (k, v) in ckpt.header() {
            config.set(k, v)?;
        }
        let obs_dim: usize = ckpt.header_parse("obs_dim")?;
        let action_dim: usize = ckpt.header_parse("action_dim")?;
        let mut agent = Self::new(obs_dim, action_dim, config, seed)?;
        agent.actor = ckpt.mlp("actor")?;
        agent.critics = [ckpt.mlp("critic1")?, ckpt.mlp("critic2")?];
        agent.targets = [ckpt.mlp("target1")?, ckpt.mlp("target2")?];
        agent.log_alpha = ckpt.scalar("log_alpha")?;
        agent.updates = ckpt.header_parse("updates")?;
        if agent.actor.sizes() != layer_sizes(obs_dim, &agent.config.actor_hidden, 2 * action_dim) {
            return Err(Error::Checkpoint(
                "actor shape disagrees with header".into(),
            ));
        }
        let betas = agent.config.adam_betas;
        agent.actor_opt = Adam::new(&agent.actor, agent.config.actor_lr, betas);
        agent.critic_opts = [
            Adam::new(&agent.critics[0], agent.config.critic_lr, betas),
            Adam::new(&agent.critics[1], agent.config.critic_lr, betas),
        ];
        Ok(agent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use crate::sac::Transition;
    use ndarray::array;
    use rand::Rng;

    fn small_config() -> AgentConfig {
        AgentConfig {
            actor_hidden: vec![16, 16],
            critic_hidden: vec![16, 16],
            batch_size: 8,
            buffer_capacity: 64,
            warmup_steps: 0,
            ..AgentConfig::default()
        }
    }

    fn random_batch(seed: u64, rows: usize, od: usize, ad: usize) -> Batch<f64> {
        let mut rng = stream(seed, "batch", 0);
        let items: Vec<Transition> = (0..rows)
            .map(|i| Transition {
                obs: (0..od).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: (0..ad).map(|_| rng.random_range(-0.9..0.9)).collect(),
                reward: -1.0,
                next_obs: (0..od).map(|_| rng.random_range(-1.0..1.0)).collect(),
                continuation: if i % 3 == 0 { 0.0 } else { 1.0 },
            })
            .collect();
        Batch::from_transitions(items.iter())
    }

    #[test]
    fn target_examples() {
        assert_eq!(critic_target(-1.0, 1.0, -50.0, 3.0, 0.1, 0.0), -1.0);
        assert_eq!(critic_target(-1.0, 0.0, -50.0, 3.0, 0.1, 0.99), -1.0);
        assert!((critic_target(-1.0, 1.0, -10.0, 0.0, 0.1, 0.99) + 10.9).abs() < 1e-12);
    }

    #[test]
    fn batched_targets_match_scalar_formula() {
        let mut agent: SacAgent<f64> = SacAgent::new(3, 2, small_config(), 1).unwrap();
        let batch = random_batch(2, 8, 3, 2);
        let eps = agent.noise(8);
        let y = agent.critic_targets(&batch, &eps);
        let head = agent.actor().forward(batch.next_obs.view());
        let sq = squash_head(&head, &eps, (-10.0, 2.0));
        let input = SacAgent::<f64>::critic_input(batch.next_obs.view(), sq.actions.view());
        let q1 = agent.target(0).forward(input.view());
        let q2 = agent.target(1).forward(input.view());
        for r in 0..8 {
            let expected = critic_target(
                batch.rewards[r],
                batch.continuations[r],
                q1[[r, 0]].min(q2[[r, 0]]),
                sq.log_probs[r],
                agent.alpha(),
                0.99,
            );
            assert!((y[r] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        let mut agent: SacAgent<f64> = SacAgent::new(3, 2, small_config(), 3).unwrap();
        let batch = random_batch(4, 8, 3, 2);
        let next_eps = agent.noise(8);
        let (_, grads) = agent.critic_loss(&batch, &next_eps);
        for k in 0..2 {
            let params = agent.critic(k).params_flat();
            let mut probe = agent.clone();
            let report = gradient_check(
                &params,
                &grads[k].flat(),
                |p| {
                    probe.critic_mut(k).set_params_flat(p);
                    probe.critic_loss(&batch, &next_eps).0
                },
                1e-5,
                1e-4,
            );
            assert!(report.passed(), "critic {k}: {report:?}");
        }
    }

    #[test]
    fn actor_gradients_match_finite_differences() {
        let mut agent: SacAgent<f64> = SacAgent::new(3, 2, small_config(), 5).unwrap();
        let batch = random_batch(6, 8, 3, 2);
        let eps = agent.noise(8);
        let (_, grads, _) = agent.actor_loss(&batch, &eps);
        let params = agent.actor().params_flat();
        let mut probe = agent.clone();
        let report = gradient_check(
            &params,
            &grads.flat(),
            |p| {
                probe.actor_mut().set_params_flat(p);
                probe.actor_loss(&batch, &eps).0
            },
            1e-5,
            1e-4,
        );
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn temperature_gradient_is_exact() {
        let mut agent: SacAgent<f64> = SacAgent::new(3, 2, small_config(), 5).unwrap();
        let lp = array![0.3, -1.2, 2.0];
        let (_, g) = agent.temperature_loss(&lp);
        let la = agent.log_alpha();
        let report = gradient_check(
            &[la],
            &[g],
            |p| {
                agent.set_log_alpha(p[0]);
                agent.temperature_loss(&lp).0
            },
            1e-5,
            1e-4,
        );
        assert!(report.max_rel_error < 1e-8, "{report:?}");
    }

    #[test]
    fn updates_are_reproducible_and_keep_alpha_positive() {
        let run = || {
            let mut agent: SacAgent<f32> = SacAgent::new(3, 2, small_config(), 9).unwrap();
            let mut buf = ReplayBuffer::new(64);
            let mut rng = stream(9, "data", 0);
            for _ in 0..64 {
                buf.push(Transition {
                    obs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    action: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    reward: -1.0,
                    next_obs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    continuation: 1.0,
                });
            }
            (0..50)
                .map(|_| {
                    let l = agent.update(&buf).unwrap();
                    assert!(l.alpha > 0.0);
                    (l.critic.to_bits(), l.actor.to_bits())
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn fresh_policy_is_near_standard_normal() {
        let agent: SacAgent<f64> = SacAgent::new(6, 2, AgentConfig::default(), 0).unwrap();
        let x = Array2::from_elem((1, 6), 0.5);
        let head = agent.actor().forward(x.view());
        for v in head.iter() {
            assert!(v.abs() < 0.05, "{head}");
        }
    }

    #[test]
    fn greedy_critic_matches_value_iteration() {
        // Two states visited alternately, reward 1 - (a - c_s)^2, alpha = 0,
        // deterministic (noise-free) policy.
        let centres = [0.5, -0.3];
        let gamma = 0.5;
        let reward = |s: usize, a: f64| 1.0 - (a - centres[s]).powi(2);
        let obs = |s: usize| {
            if s == 0 {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }
        };
        let config = AgentConfig {
            actor_hidden: vec![32, 32],
            critic_hidden: vec![32, 32],
            gamma,
            tau: 0.05,
            batch_size: 256,
            ..AgentConfig::default()
        };
        let mut agent: SacAgent<f64> = SacAgent::new(2, 1, config, 21).unwrap();
        agent.set_log_alpha(f64::NEG_INFINITY);
        let mut rng = stream(21, "bandit", 0);
        let mut buf = ReplayBuffer::new(1000);
        for i in 0..1000 {
            let s = i % 2;
            let a: f64 = rng.random_range(-1.0..1.0);
            buf.push(Transition {
                obs: obs(s),
                action: vec![a],
                reward: reward(s, a),
                next_obs: obs(1 - s),
                continuation: 1.0,
            });
        }
        let zeros = Array2::zeros((256, 1));
        for _ in 0..12_000 {
            let batch = buf.sample::<f64>(256, &mut rng);
            let (_, [g1, g2]) = agent.critic_loss(&batch, &zeros);
            agent.critic_opts[0].step(&mut agent.critics[0], &g1);
            agent.critic_opts[1].step(&mut agent.critics[1], &g2);
            let (_, ga, _) = agent.actor_loss(&batch, &zeros);
            agent.actor_opt.step(&mut agent.actor, &ga);
            agent.soft_update_targets();
        }

        let grid: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 * 0.001).collect();
        let best = |s: usize| grid.iter().map(|&a| reward(s, a)).fold(f64::MIN, f64::max);
        let mut v = [0.0; 2];
        for _ in 0..200 {
            v = [best(0) + gamma * v[1], best(1) + gamma * v[0]];
        }
        for s in 0..2 {
            let greedy = agent.act(&obs(s), true)[0];
            assert!(
                (greedy - centres[s]).abs() < 0.05,
                "state {s}: greedy action {greedy}"
            );
            for a in [-0.8, -0.3, 0.0, 0.3, 0.8] {
                let mut x = obs(s);
                x.push(a);
                let input = Array2::from_shape_vec((1, 3), x).unwrap();
                let expected = reward(s, a) + gamma * v[1 - s];
                for k in 0..2 {
                    let q = agent.critic(k).forward(input.view())[[0, 0]];
                    assert!(
                        (q - expected).abs() < 1e-2,
                        "Q{k}({s}, {a}) = {q}, want {expected}"
                    );
                }
            }
        }
    }
}
