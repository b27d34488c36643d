"""Adversarial inverse RL inner loop.

The discriminator has the odds-ratio form D(s,a) = exp(f(s,a)) /
(exp(f(s,a)) + pi(a|s)): a logit network f over state-action pairs combined
with the policy's own action probability. Expert pairs are labeled 1,
generated pairs 0, and the discriminator trains on single state-action
pairs with a cross-entropy loss. The policy's reward is
log D - log(1 - D), which reduces algebraically to f - log pi, so
maximizing it is entropy-regularized imitation.

One inner iteration rolls out a generated batch under the current policy,
takes ``disc_updates`` ADAM steps on the discriminator, recomputes rewards
with the updated discriminator, and takes ``policy_updates`` trust-region
steps. The discriminator sees the behavior policy's stored probabilities
throughout an iteration; they are not refreshed between its ADAM steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractViolation
from .evaluate import MetricsRecord, kinematic_extremes
from .nets import AdamState, DenseNet, adam_step, backward, forward, init_dense_net, log_softmax
from .simulator import LaneChangeEnv, NUM_ACTIONS, STATE_DIM, TERM_CRASH, TERM_SUCCESS, TERM_TIMEOUT
from .trpo import TrustRegionConfig, trust_region_step

DISC_INPUT_DIM = STATE_DIM + NUM_ACTIONS


@dataclass
class Policy:
    """Categorical policy over the six gap/commit actions."""

    net: DenseNet

    def logits(self, states: np.ndarray) -> np.ndarray:
        return forward(self.net, states)

    def log_probs(self, states: np.ndarray) -> np.ndarray:
        return log_softmax(self.logits(states))

    def probs(self, states: np.ndarray) -> np.ndarray:
        return np.exp(self.log_probs(states))

    def action_log_probs(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        lp = self.log_probs(states)
        return lp[np.arange(len(actions)), actions]

    def sample(self, state_vec: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
        p = np.exp(log_softmax(forward(self.net, state_vec)))
        action = int(rng.choice(NUM_ACTIONS, p=p / p.sum()))
        return action, float(p[action])

    def greedy(self, state_vec: np.ndarray) -> tuple[int, float]:
        p = np.exp(log_softmax(forward(self.net, state_vec)))
        action = int(np.argmax(p))
        return action, float(p[action])

    def copy(self) -> "Policy":
        return Policy(self.net.copy())


@dataclass
class Discriminator:
    """Logit network over (state, one-hot action) with its ADAM state."""

    net: DenseNet
    adam: AdamState

    def copy(self) -> "Discriminator":
        return Discriminator(self.net.copy(), self.adam.copy())


@dataclass
class ModelParams:
    """The joint parameter record: discriminator and policy networks."""

    disc: DenseNet
    policy: DenseNet

    def copy(self) -> "ModelParams":
        return ModelParams(self.disc.copy(), self.policy.copy())


def init_model_params(seed: int, hidden: tuple[int, ...] = (64, 64),
                      activation: str = "tanh") -> ModelParams:
    disc = init_dense_net((DISC_INPUT_DIM, *hidden, 1), seed=seed,
                          hidden_activation=activation)
    policy = init_dense_net((STATE_DIM, *hidden, NUM_ACTIONS), seed=seed + 1,
                            hidden_activation=activation)
    return ModelParams(disc=disc, policy=policy)


def one_hot(actions: np.ndarray, n: int = NUM_ACTIONS) -> np.ndarray:
    out = np.zeros((len(actions), n))
    out[np.arange(len(actions)), actions] = 1.0
    return out


def disc_inputs(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return np.concatenate([states, one_hot(actions)], axis=1)


def f_values(disc: Discriminator, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return forward(disc.net, disc_inputs(states, actions))[:, 0]


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def prob_from_f(f, log_pi):
    """D = exp(f) / (exp(f) + pi), computed in log space."""
    return 1.0 / (1.0 + np.exp(-(np.asarray(f, dtype=np.float64) - log_pi)))


def reward_from_f(f, log_pi):
    """log D - log(1 - D); algebraically f - log pi, computed from D."""
    x = np.asarray(f, dtype=np.float64) - log_pi
    return _softplus(x) - _softplus(-x)


def disc_prob(disc: Discriminator, policy: Policy, state: np.ndarray,
              action: int) -> float:
    states = np.asarray(state, dtype=np.float64)[None, :]
    actions = np.asarray([action])
    f = f_values(disc, states, actions)
    log_pi = policy.action_log_probs(states, actions)
    return float(prob_from_f(f, log_pi)[0])


def reward(disc: Discriminator, policy: Policy, state: np.ndarray,
           action: int) -> float:
    states = np.asarray(state, dtype=np.float64)[None, :]
    actions = np.asarray([action])
    f = f_values(disc, states, actions)
    log_pi = policy.action_log_probs(states, actions)
    return float(reward_from_f(f, log_pi)[0])


def disc_loss(disc: Discriminator,
              expert_states: np.ndarray, expert_actions: np.ndarray,
              expert_log_pi: np.ndarray,
              gen_states: np.ndarray, gen_actions: np.ndarray,
              gen_log_pi: np.ndarray) -> float:
    """Cross-entropy with expert pairs labeled 1 and generated pairs 0."""
    if len(expert_states) == 0 or len(gen_states) == 0:
        raise ContractViolation("discriminator loss needs nonempty batches")
    x_e = f_values(disc, expert_states, expert_actions) - expert_log_pi
    x_g = f_values(disc, gen_states, gen_actions) - gen_log_pi
    return float(_softplus(-x_e).mean() + _softplus(x_g).mean())


def disc_loss_grad(disc: Discriminator,
                   expert_states, expert_actions, expert_log_pi,
                   gen_states, gen_actions, gen_log_pi) -> tuple[float, np.ndarray]:
    """Loss and its gradient w.r.t. the flat logit-network parameters."""
    x_e = f_values(disc, expert_states, expert_actions) - expert_log_pi
    x_g = f_values(disc, gen_states, gen_actions) - gen_log_pi
    loss = float(_softplus(-x_e).mean() + _softplus(x_g).mean())
    d_e = prob_from_f(x_e, 0.0)  # sigmoid(x_e)
    d_g = prob_from_f(x_g, 0.0)
    g_e = ((d_e - 1.0) / len(x_e))[:, None]
    g_g = (d_g / len(x_g))[:, None]
    grad = (backward(disc.net, disc_inputs(expert_states, expert_actions), g_e)
            + backward(disc.net, disc_inputs(gen_states, gen_actions), g_g))
    return loss, grad


@dataclass
class RolloutBatch:
    """Generated episodes with everything needed for both updates."""

    states: np.ndarray          # (N, 44)
    actions: np.ndarray         # (N,)
    behavior_probs: np.ndarray  # (N,) pi(a|s) under the collecting policy
    ep_slices: list[tuple[int, int]]
    terminations: list[str]
    speeds: np.ndarray
    accels: np.ndarray
    decision_steps: np.ndarray
    rewards: np.ndarray | None = None
    advantages: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.states)

    @property
    def episodes(self) -> int:
        return len(self.ep_slices)


def collect_rollouts(env: LaneChangeEnv, policy: Policy, episodes: int,
                     seed: int) -> RolloutBatch:
    """Sample episodes from the environment under the current policy."""
    states, actions, probs, speeds, accels = [], [], [], [], []
    slices, terms, dsteps = [], [], []
    for i in range(episodes):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        env_seed, action_seed = (int(s) for s in ss.generate_state(2))
        rng = np.random.default_rng(action_seed)
        scene = env.reset(env_seed)
        start = len(states)
        while not scene.terminal:
            vec = env.encode_state(scene)
            action, p = policy.sample(vec, rng)
            outcome = env.step(scene, action)
            states.append(vec)
            actions.append(action)
            probs.append(p)
            speeds.append(outcome.scene.ego.speed)
            accels.append(outcome.scene.ego.accel)
            scene = outcome.scene
        slices.append((start, len(states)))
        terms.append(scene.termination)
        dsteps.append(scene.decision_steps)
    return RolloutBatch(states=np.asarray(states, dtype=np.float64),
                        actions=np.asarray(actions, dtype=np.int64),
                        behavior_probs=np.asarray(probs, dtype=np.float64),
                        ep_slices=slices, terminations=terms,
                        speeds=np.asarray(speeds, dtype=np.float64),
                        accels=np.asarray(accels, dtype=np.float64),
                        decision_steps=np.asarray(dsteps, dtype=np.int64))


def update_discriminator(disc: Discriminator, batch: RolloutBatch,
                         expert_states: np.ndarray, expert_actions: np.ndarray,
                         expert_log_pi: np.ndarray, steps: int,
                         minibatch: int, rng: np.random.Generator) -> tuple[Discriminator, dict]:
    """``steps`` ADAM updates on balanced expert/generated minibatches."""
    if steps < 1:
        raise ContractViolation("discriminator update count must be >= 1")
    gen_log_pi = np.log(batch.behavior_probs)
    half = max(1, minibatch // 2)
    net, adam = disc.net.copy(), disc.adam.copy()
    losses = []
    for _ in range(steps):
        e_idx = rng.integers(0, len(expert_states), size=half)
        g_idx = rng.integers(0, len(batch), size=half)
        probe = Discriminator(net, adam)
        loss, grad = disc_loss_grad(
            probe, expert_states[e_idx], expert_actions[e_idx], expert_log_pi[e_idx],
            batch.states[g_idx], batch.actions[g_idx], gen_log_pi[g_idx])
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite discriminator loss")
        new_flat, adam = adam_step(net.get_flat(), grad, adam)
        net = net.with_flat(new_flat)
        losses.append(loss)
    return Discriminator(net, adam), {"disc_losses": losses, "disc_steps": steps}


def compute_rewards_and_advantages(disc: Discriminator, batch: RolloutBatch,
                                   gamma: float) -> RolloutBatch:
    """Rewards from the (updated) discriminator and stored behavior
    probabilities; advantages are discounted returns-to-go minus the batch
    mean baseline."""
    f = f_values(disc, batch.states, batch.actions)
    rewards = reward_from_f(f, np.log(batch.behavior_probs))
    returns = np.empty_like(rewards)
    for start, end in batch.ep_slices:
        acc = 0.0
        for t in range(end - 1, start - 1, -1):
            acc = rewards[t] + gamma * acc
            returns[t] = acc
    advantages = returns - returns.mean()
    return replace(batch, rewards=rewards, advantages=advantages)


def update_policy(policy: Policy, batch: RolloutBatch, steps: int,
                  config: TrustRegionConfig) -> tuple[Policy, dict]:
    """``steps`` trust-region updates on the batch advantages."""
    if batch.advantages is None:
        raise ContractViolation("batch advantages not computed")
    net = policy.net
    infos = []
    for _ in range(steps):
        net, info = trust_region_step(net, batch.states, batch.actions,
                                      batch.behavior_probs, batch.advantages,
                                      config)
        infos.append(info)
    return Policy(net), {
        "policy_steps": steps,
        "policy_accepted": sum(1 for i in infos if i.accepted),
        "policy_kls": [i.kl for i in infos if i.accepted],
        "policy_improvements": [i.surrogate_improvement for i in infos if i.accepted],
        "policy_errors": [i.error for i in infos if i.error],
    }


@dataclass
class InnerConfig:
    iterations: int = 1
    gen_episodes: int = 20
    disc_updates: int = 50          # ADAM steps per iteration
    policy_updates: int = 1         # trust-region steps per iteration
    disc_minibatch: int = 128
    disc_lr: float = 1e-3
    gamma: float = 0.99
    trust_region: TrustRegionConfig = field(default_factory=TrustRegionConfig)

    def __post_init__(self):
        if self.disc_updates < 1 or self.policy_updates < 1:
            raise ValueError("update frequencies must be >= 1")


def flatten_demos(trajectories) -> tuple[np.ndarray, np.ndarray]:
    states = np.concatenate([t.states for t in trajectories])
    actions = np.concatenate([t.actions for t in trajectories])
    return states, actions


def batch_metrics(iteration: int, disc: Discriminator, batch: RolloutBatch,
                  expert_states, expert_actions, expert_log_pi,
                  policy_info: dict, disc_info: dict) -> MetricsRecord:
    d_expert = prob_from_f(f_values(disc, expert_states, expert_actions),
                           expert_log_pi)
    d_gen = prob_from_f(f_values(disc, batch.states, batch.actions),
                        np.log(batch.behavior_probs))
    ep_rewards = [batch.rewards[s:e].sum() for s, e in batch.ep_slices]
    ex = kinematic_extremes(batch.speeds, batch.accels, batch.ep_slices)
    n = batch.episodes
    terms = batch.terminations
    return MetricsRecord(
        iteration=iteration,
        disc_prob_expert=float(d_expert.mean()),
        disc_prob_generated=float(d_gen.mean()),
        mean_total_reward=float(np.mean(ep_rewards)),
        mean_rollout_steps=float(np.mean([e - s for s, e in batch.ep_slices])),
        mean_decision_steps=float(batch.decision_steps.mean()),
        success_ratio=sum(1 for t in terms if t == TERM_SUCCESS) / n,
        crash_ratio=sum(1 for t in terms if t == TERM_CRASH) / n,
        timeout_ratio=sum(1 for t in terms if t == TERM_TIMEOUT) / n,
        mean_max_accel=ex["max_accel"], mean_min_accel=ex["min_accel"],
        mean_max_speed=ex["max_speed"], mean_min_speed=ex["min_speed"],
        disc_loss=float(np.mean(disc_info["disc_losses"])),
        policy_accepted=policy_info["policy_accepted"],
        policy_kl=float(np.max(policy_info["policy_kls"])) if policy_info["policy_kls"] else 0.0,
        disc_steps=disc_info["disc_steps"],
        policy_steps=policy_info["policy_steps"],
    )


def inner_train(env: LaneChangeEnv, params: ModelParams,
                expert_states: np.ndarray, expert_actions: np.ndarray,
                config: InnerConfig, seed: int) -> tuple[ModelParams, list[MetricsRecord]]:
    """Per-task adversarial training: returns task-adapted parameters and
    one metrics record per iteration. ``config.iterations == 0`` returns the
    input parameters unchanged."""
    if len(expert_states) == 0:
        raise ContractViolation("inner training needs expert data")
    params = params.copy()
    disc = Discriminator(params.disc, AdamState.for_params(params.disc.num_params,
                                                           lr=config.disc_lr))
    policy = Policy(params.policy)
    records = []
    for it in range(config.iterations):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(it,))
        rollout_seed, disc_seed = (int(s) for s in ss.generate_state(2))
        batch = collect_rollouts(env, policy, config.gen_episodes, rollout_seed)
        expert_log_pi = policy.action_log_probs(expert_states, expert_actions)
        disc, disc_info = update_discriminator(
            disc, batch, expert_states, expert_actions, expert_log_pi,
            config.disc_updates, config.disc_minibatch,
            np.random.default_rng(disc_seed))
        batch = compute_rewards_and_advantages(disc, batch, config.gamma)
        policy, policy_info = update_policy(policy, batch,
                                            config.policy_updates,
                                            config.trust_region)
        records.append(batch_metrics(it, disc, batch, expert_states,
                                     expert_actions, expert_log_pi,
                                     policy_info, disc_info))
    return ModelParams(disc=disc.net, policy=policy.net), records
