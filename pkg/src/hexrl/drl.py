"""Policy synthesis: replay buffer, actor-critic updates, episode loop.

Two algorithm flavors are supported, the single-critic kind ("ddpg") and
the twin-critic kind with delayed updates ("td3"). The enhanced variants
layer selective buffering, minority oversampling, and decider-constrained
(0-distrust) projection on top; all of those are switches in TrainConfig,
not separate code paths.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, smote_oversample
from .densenet import AdamState, DenseNet, adam_step
from .mdp import (DeciderProfile, RewardConfig, action_bounds, project,
                  reward, transition)

POLICY_FORMAT_TAG = "hexrl-policy/1"


@dataclass
class ExperienceTuple:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=float)
        self.action = np.asarray(self.action, dtype=float)
        self.next_state = np.asarray(self.next_state, dtype=float)
        self.reward = float(self.reward)
        if not (self.state.shape == self.action.shape == self.next_state.shape):
            raise ValueError("state, action and next_state must share a shape")
        if np.abs(self.next_state - (self.state + self.action)).max() > 1e-12:
            raise ValueError("next_state must equal state + action")


class ReplayBuffer:
    """Fixed-capacity ring; once full, writes overwrite the oldest entries."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.write_cursor = 0
        self._storage: list[ExperienceTuple | None] = [None] * capacity

    @property
    def count(self) -> int:
        return min(self.write_cursor, self.capacity)

    def insert(self, experience: ExperienceTuple) -> None:
        self._storage[self.write_cursor % self.capacity] = experience
        self.write_cursor += 1

    def contents(self) -> list[ExperienceTuple]:
        return [e for e in self._storage if e is not None]

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample with replacement."""
        if self.count == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.count, size=batch_size)
        return [self._storage[i] for i in idx]


class SelectiveInserter:
    """Keep only the best-reward experience of every window of steps.

    The running best persists across episode boundaries; it is flushed to
    the buffer (and reset) whenever the inner-iteration counter hits a
    multiple of the window.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be positive")
        self.window = window
        self.best: ExperienceTuple | None = None
        self.best_reward = -np.inf

    def observe(self, experience: ExperienceTuple, step: int,
                buffer: ReplayBuffer) -> None:
        if experience.reward > self.best_reward:
            self.best = experience
            self.best_reward = experience.reward
        if step % self.window == 0:
            buffer.insert(self.best)
            self.best = None
            self.best_reward = -np.inf


@dataclass
class TrainConfig:
    episodes: int = 1000
    inner_iterations: int = 300
    batch_size: int = 64
    selective_window: int = 5
    cold_start_count: int | None = None       # defaults to batch_size
    seed: int = 0
    hitl: DeciderProfile | None = None
    selective_buffering: bool = False
    smote: bool = False
    smote_k: int = 5
    algorithm: str = "td3"
    gamma: float = 0.99
    tau: float = 0.005
    exploration_sigma: float = 0.1
    buffer_capacity: int | None = None        # defaults to episodes * inner_iterations
    hidden_units: int = 50
    actor_learning_rate: float = 0.001
    critic_learning_rate: float = 0.001
    reward: RewardConfig | None = None        # omega defaults to the model's

    def __post_init__(self):
        if min(self.episodes, self.inner_iterations, self.batch_size,
               self.selective_window) < 1:
            raise ValueError("episodes, iterations, batch size and window "
                             "must all be at least 1")
        if self.algorithm not in ("ddpg", "td3"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")


class ActorCriticPolicy:
    """Actor, critic(s), their targets, and the Adam state for each."""

    def __init__(self, actor: DenseNet, critics: list[DenseNet],
                 algorithm: str, gamma: float = 0.99, tau: float = 0.005,
                 exploration_sigma: float = 0.1,
                 profile: DeciderProfile | None = None,
                 actor_learning_rate: float = 0.001,
                 critic_learning_rate: float = 0.001):
        if algorithm not in ("ddpg", "td3"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        expected = 1 if algorithm == "ddpg" else 2
        if len(critics) != expected:
            raise ValueError(f"{algorithm} uses {expected} critic(s)")
        self.actor = actor
        self.critics = critics
        self.target_actor = actor.copy()
        self.target_critics = [c.copy() for c in critics]
        self.algorithm = algorithm
        self.gamma = gamma
        self.tau = tau
        self.exploration_sigma = exploration_sigma
        self.profile = profile
        self.actor_adam = AdamState.for_parameters(
            actor.parameters(), learning_rate=actor_learning_rate)
        self.critic_adams = [
            AdamState.for_parameters(c.parameters(),
                                     learning_rate=critic_learning_rate)
            for c in critics]

    @property
    def p(self) -> int:
        return self.actor.input_dim

    @classmethod
    def create(cls, p: int, algorithm: str, rng: np.random.Generator,
               gamma: float = 0.99, tau: float = 0.005,
               exploration_sigma: float = 0.1, hidden_units: int = 50,
               profile: DeciderProfile | None = None,
               actor_learning_rate: float = 0.001,
               critic_learning_rate: float = 0.001) -> "ActorCriticPolicy":
        h = hidden_units
        actor = DenseNet.create([p, h, h, p], ["relu", "relu", "tanh"], rng)
        n_critics = 1 if algorithm == "ddpg" else 2
        critics = [DenseNet.create([2 * p, h, h, 1],
                                   ["relu", "relu", "identity"], rng)
                   for _ in range(n_critics)]
        return cls(actor, critics, algorithm, gamma, tau, exploration_sigma,
                   profile, actor_learning_rate, critic_learning_rate)

    def act(self, x: np.ndarray) -> np.ndarray:
        """Deterministic raw action (before projection)."""
        return self.actor.forward(x)

    def act_exploratory(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.act(x) + rng.normal(0.0, self.exploration_sigma, size=self.p)


def soft_update(policy: ActorCriticPolicy) -> None:
    """Blend online parameters into the targets at rate tau."""
    tau = policy.tau
    pairs = [(policy.actor, policy.target_actor)]
    pairs += list(zip(policy.critics, policy.target_critics))
    for online, target in pairs:
        for src, dst in zip(online.parameters(), target.parameters()):
            dst *= 1.0 - tau
            dst += tau * src


def _stack_batch(batch):
    X = np.stack([e.state for e in batch])
    Z = np.stack([e.action for e in batch])
    R = np.array([e.reward for e in batch])
    Xn = np.stack([e.next_state for e in batch])
    return X, Z, R, Xn


def critic_target(policy: ActorCriticPolicy, batch,
                  rng: np.random.Generator) -> np.ndarray:
    """Bootstrap targets y = r + gamma * Q'(x_next, noisy pi'(x_next)).

    Target networks evaluate the bootstrap; the twin-critic flavor takes
    the elementwise minimum over its two target critics.
    """
    y, _ = _critic_target_detailed(policy, batch, rng)
    return y


def _critic_target_detailed(policy, batch, rng):
    _, _, R, Xn = _stack_batch(batch)
    noisy = policy.target_actor.forward_batch(Xn) + rng.normal(
        0.0, policy.exploration_sigma, size=(len(batch), policy.p))
    pairs = np.hstack([Xn, noisy])
    per_critic = np.stack([tc.forward_batch(pairs)[:, 0]
                           for tc in policy.target_critics])
    q = per_critic.min(axis=0)
    return R + policy.gamma * q, R[None, :] + policy.gamma * per_critic


def critic_update(policy: ActorCriticPolicy, batch, rng: np.random.Generator,
                  curve: "TrainingCurve | None" = None) -> float:
    """One Adam step on the squared target error for every critic.

    Returns the mean pre-update loss across critics. Both twin critics
    regress toward the shared min-target. When a curve is given, the
    worst min-vs-single-critic target margin is recorded on it.
    """
    if not batch:
        raise ValueError("cannot update on an empty batch")
    X, Z, _, _ = _stack_batch(batch)
    y, per_critic = _critic_target_detailed(policy, batch, rng)
    if curve is not None and policy.algorithm == "td3":
        margin = float((y[None, :] - per_critic).max())
        curve.max_td3_target_margin = max(curve.max_td3_target_margin, margin)
    inputs = np.hstack([X, Z])
    n = len(batch)
    losses = []
    for critic, adam in zip(policy.critics, policy.critic_adams):
        pred = critic.forward_batch(inputs)[:, 0]
        losses.append(float(np.mean((pred - y) ** 2)))
        grad_out = (2.0 * (pred - y) / n)[:, None]
        grads, _ = critic.backward_batch(inputs, grad_out)
        adam_step(critic.parameters(), grads, adam)
    return float(np.mean(losses))


def actor_update(policy: ActorCriticPolicy, batch) -> None:
    """Ascend the first critic's value of the deterministic policy's actions."""
    if not batch:
        raise ValueError("cannot update on an empty batch")
    X, _, _, _ = _stack_batch(batch)
    n = len(batch)
    actions = policy.actor.forward_batch(X)
    critic = policy.critics[0]
    pairs = np.hstack([X, actions])
    # minimize -mean(Q): d(-J)/dQ = -1/n for every row
    grad_out = np.full((n, 1), -1.0 / n)
    _, input_grads = critic.backward_batch(pairs, grad_out)
    action_grads = input_grads[:, policy.p:]
    grads, _ = policy.actor.backward_batch(X, action_grads)
    adam_step(policy.actor.parameters(), grads, policy.actor_adam)


@dataclass
class TrainingCurve:
    """Per-episode reward trace plus run diagnostics."""

    episode_rewards: np.ndarray
    episode_steps: np.ndarray
    total_steps: int = 0
    total_updates: int = 0
    # max over all training batches of (min-target - single-critic target);
    # never positive for the twin-critic flavor, -inf when no such batch ran
    max_td3_target_margin: float = -np.inf


def _cold_start(buffer, model, data, config, reward_cfg, rng):
    count = config.cold_start_count or config.batch_size
    for _ in range(count):
        x = data.features[rng.integers(0, data.n)]
        lower, upper = action_bounds(x)
        z = project(rng.uniform(lower, upper), x, config.hitl)
        r = reward(x, z, model, reward_cfg)
        buffer.insert(ExperienceTuple(x, z, r, transition(x, z)))


def synthesize_policy(model, data: Dataset,
                      config: TrainConfig) -> tuple[ActorCriticPolicy, TrainingCurve]:
    """Learn an explanation-producing policy against a trained classifier.

    Runs ``episodes`` outer episodes of at most ``inner_iterations`` steps
    each; an episode ends early once the running state's classification
    flips relative to the episode's first state (an explanatory point has
    been found). Identical config and seed give bit-identical results.
    """
    if data.p != model.p:
        raise ValueError(f"dataset has {data.p} features, model expects {model.p}")
    if config.hitl is not None and config.hitl.p != data.p:
        raise ValueError("decider profile length must match the feature count")

    seed_seq = np.random.SeedSequence(config.seed)
    s_init, s_env, s_batch, s_smote = seed_seq.spawn(4)
    rng_init = np.random.default_rng(s_init)
    rng_env = np.random.default_rng(s_env)
    rng_batch = np.random.default_rng(s_batch)

    if config.smote:
        data = smote_oversample(data, config.smote_k,
                                seed=int(s_smote.generate_state(1)[0]))

    reward_cfg = config.reward or RewardConfig(omega=model.omega)
    policy = ActorCriticPolicy.create(
        data.p, config.algorithm, rng_init, gamma=config.gamma, tau=config.tau,
        exploration_sigma=config.exploration_sigma,
        hidden_units=config.hidden_units, profile=config.hitl,
        actor_learning_rate=config.actor_learning_rate,
        critic_learning_rate=config.critic_learning_rate)

    capacity = config.buffer_capacity or config.episodes * config.inner_iterations
    buffer = ReplayBuffer(capacity)
    inserter = SelectiveInserter(config.selective_window)
    _cold_start(buffer, model, data, config, reward_cfg, rng_env)

    episode_rewards = np.zeros(config.episodes)
    episode_steps = np.zeros(config.episodes, dtype=int)
    curve = TrainingCurve(episode_rewards, episode_steps)

    for episode in range(config.episodes):
        x = data.features[rng_env.integers(0, data.n)]
        initial_class = model.classify(x)
        rewards_here = []
        for t in range(1, config.inner_iterations + 1):
            z = project(policy.act_exploratory(x, rng_env), x, config.hitl)
            r = reward(x, z, model, reward_cfg)
            x_next = transition(x, z)
            rewards_here.append(r)
            experience = ExperienceTuple(x, z, r, x_next)
            if config.selective_buffering:
                inserter.observe(experience, t, buffer)
            else:
                buffer.insert(experience)

            update_now = (config.algorithm == "ddpg") or (t % 2 == 0)
            if update_now and buffer.count > 0:
                batch = buffer.sample(config.batch_size, rng_batch)
                loss = critic_update(policy, batch, rng_batch, curve)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite critic loss at episode {episode + 1}, "
                        f"step {t}: {loss}")
                actor_update(policy, batch)
                soft_update(policy)
                curve.total_updates += 1

            curve.total_steps += 1
            x = x_next
            if model.classify(x) != initial_class:
                break
        episode_rewards[episode] = float(np.mean(rewards_here))
        episode_steps[episode] = len(rewards_here)

    return policy, curve


def explain(policy: ActorCriticPolicy, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic explanation for one instance: projected action and
    the explanatory point it reaches."""
    x = np.asarray(x, dtype=float)
    z = project(policy.act(x), x, policy.profile)
    return z, transition(x, z)


# --- degeneracy detection --------------------------------------------------
#
# "Future discounted value" of a state under a frozen policy/critic pair:
# take the policy's projected action, collect the real reward, and bootstrap
# one step with the critic on the raw follow-up action. This mirrors how
# training targets are formed (projected executed action, raw bootstrap
# action), so snapshots of the replay buffer can be compared era against era.


def future_discounted_value(x: np.ndarray, actor_fn, critic_fn, model,
                            reward_cfg: RewardConfig, gamma: float,
                            profile: DeciderProfile | None = None) -> float:
    x = np.asarray(x, dtype=float)
    z = project(np.asarray(actor_fn(x), dtype=float), x, profile)
    r = reward(x, z, model, reward_cfg)
    x_next = transition(x, z)
    q = float(critic_fn(x_next, np.asarray(actor_fn(x_next), dtype=float)))
    return r + gamma * q


def detect_instance_degeneracy(y_l: float, y_lprime: float) -> bool:
    """An instance is degenerate when its earlier-era value strictly
    exceeds the later-era one."""
    return y_l > y_lprime


def detect_buffer_degeneracy(snapshot_l, snapshot_lprime, actor_fn, critic_fn,
                             model, reward_cfg: RewardConfig, gamma: float,
                             profile: DeciderProfile | None = None) -> bool:
    """Compare two buffer snapshots under one frozen policy/critic pair.

    True when the earlier snapshot's states average a strictly higher
    future discounted value than the later snapshot's states.
    """
    if not snapshot_l or not snapshot_lprime:
        raise ValueError("buffer snapshots must be nonempty")

    def mean_value(snapshot):
        return float(np.mean([
            future_discounted_value(e.state, actor_fn, critic_fn, model,
                                    reward_cfg, gamma, profile)
            for e in snapshot]))

    return mean_value(snapshot_l) > mean_value(snapshot_lprime)


@dataclass
class DegeneracyFixture:
    """A scalar (p=1) setup small enough for grid-search policy fitting."""

    snapshot_l: list            # ExperienceTuple list, the earlier era
    snapshot_lprime: list       # the later era
    critic: DenseNet            # fixed Q over (state, action) pairs
    model: object               # fixed classifier environment
    reward_cfg: RewardConfig
    gamma: float
    slopes: np.ndarray          # grid of linear-policy slopes
    intercepts: np.ndarray      # grid of linear-policy intercepts


@dataclass
class ImplicationReport:
    buffer_degenerate: bool
    policy_degenerate: bool
    violated: bool
    mean_y_l: float
    mean_y_lprime: float
    mean_y_crossed: float       # era-l states scored with the era-l' policy
    policy_l: tuple[float, float]
    policy_lprime: tuple[float, float]


def _grid_policy_values(states: np.ndarray, slopes: np.ndarray,
                        intercepts: np.ndarray,
                        fixture: DegeneracyFixture) -> np.ndarray:
    """Mean critic value of every grid policy's projected actions."""
    x = np.asarray(states, dtype=float)          # (n,)
    a = slopes[:, None]                          # (G, 1)
    b = intercepts[:, None]
    raw = a * x[None, :] + b                     # (G, n)
    z = np.clip(raw, -x[None, :], 1.0 - x[None, :])
    x_tile = np.broadcast_to(x[None, :], z.shape)
    q = fixture.critic.forward_batch(
        np.stack([x_tile.ravel(), z.ravel()], axis=1))[:, 0].reshape(z.shape)
    return q.mean(axis=1)


def fit_linear_policy(states, fixture: DegeneracyFixture) -> tuple[float, float]:
    """Grid-fitted (slope, intercept) of the loss-minimizing policy.

    The policy parameters enter the critic loss only through the value of
    the policy's own actions, so the loss-minimizing member of the family
    is the one whose actions maximize the frozen critic over the
    snapshot's states; a dense grid search finds it exactly.
    """
    grid_a, grid_b = np.meshgrid(fixture.slopes, fixture.intercepts,
                                 indexing="ij")
    values = _grid_policy_values(states, grid_a.ravel(), grid_b.ravel(),
                                 fixture)
    best = int(np.argmax(values))
    return float(grid_a.ravel()[best]), float(grid_b.ravel()[best])


def _linear_actor(a: float, b: float):
    return lambda x: np.array([a * float(x[0]) + b])


def check_degeneracy_implication(fixture: DegeneracyFixture) -> ImplicationReport:
    """Test whether buffer degeneracy entails policy degeneracy here.

    Both eras' policies are the grid-search loss minimizers over their
    respective snapshots; the critic and environment stay fixed. A
    violation means the earlier buffer dominates yet the later policy
    does not lose on the earlier era's states.
    """
    states_l = np.array([float(e.state[0]) for e in fixture.snapshot_l])
    states_lp = np.array([float(e.state[0]) for e in fixture.snapshot_lprime])
    pol_l = fit_linear_policy(states_l, fixture)
    pol_lp = fit_linear_policy(states_lp, fixture)

    def critic_fn(x, z):
        return fixture.critic.forward(np.array([float(x[0]), float(z[0])]))[0]

    def mean_y(states, pol):
        actor = _linear_actor(*pol)
        return float(np.mean([
            future_discounted_value(np.array([s]), actor, critic_fn,
                                    fixture.model, fixture.reward_cfg,
                                    fixture.gamma)
            for s in states]))

    mean_y_l = mean_y(states_l, pol_l)
    mean_y_lprime = mean_y(states_lp, pol_l)
    mean_y_crossed = mean_y(states_l, pol_lp)

    buffer_degenerate = mean_y_l > mean_y_lprime
    policy_degenerate = mean_y_l > mean_y_crossed
    return ImplicationReport(
        buffer_degenerate=buffer_degenerate,
        policy_degenerate=policy_degenerate,
        violated=buffer_degenerate and not policy_degenerate,
        mean_y_l=mean_y_l, mean_y_lprime=mean_y_lprime,
        mean_y_crossed=mean_y_crossed,
        policy_l=pol_l, policy_lprime=pol_lp)


def make_degenerate_fixture(seed: int, size: int = 12,
                            max_attempts: int = 50) -> DegeneracyFixture:
    """Random scalar fixture whose later snapshot is buffer-degenerate.

    The environment is a steep 1-D sigmoid classifier; the fixed critic
    scores (state, action) pairs by how close the landing point sits to
    the decision boundary. The earlier era's states hug the boundary, the
    later era's states sit far on one dominant side, so the two eras'
    fitted policies genuinely differ (the policy family is the constant-
    action slice of the linear grid; a family containing a state-
    conditional optimum would fit the same policy to both eras and make
    the comparison vacuous). Draws are retried until the buffer-degeneracy
    premise actually holds; the conclusion is never part of the filter.
    """
    from .classifiers import LogisticRegressionModel
    from .densenet import Layer

    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        steep = rng.uniform(6.0, 10.0)
        center = rng.uniform(0.4, 0.6)
        model = LogisticRegressionModel(DenseNet([
            Layer(np.array([[steep]]), np.array([-steep * center]), "identity"),
        ]))
        # Q mirrors the reward's shape and scale: a side-change bonus
        # 10|side_x - side_u| (sides taken with a near-step sigmoid so the
        # bonus fires only on genuine crossings), a landing-closeness
        # penalty 2|s_u - 1/2|, and an action-length penalty
        # 4|sigmoid(z) - 1/2| ~ |z|.
        side_steep = 60.0
        level = rng.uniform(0.0, 1.0)
        critic = DenseNet([
            Layer(np.array([[side_steep, 0.0], [side_steep, side_steep],
                            [steep, steep], [0.0, 1.0]]),
                  np.array([-side_steep * center, -side_steep * center,
                            -steep * center, 0.0]), "sigmoid"),
            Layer(np.array([[1.0, -1.0, 0.0, 0.0], [-1.0, 1.0, 0.0, 0.0],
                            [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, -1.0, 0.0],
                            [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 0.0, -1.0]]),
                  np.array([0.0, 0.0, -0.5, 0.5, -0.5, 0.5]), "relu"),
            Layer(np.array([[10.0, 10.0, -2.0, -2.0, -4.0, -4.0]]),
                  np.array([level]), "identity"),
        ])
        reward_cfg = RewardConfig(omega=model.omega)

        def tuples_from(states):
            out = []
            for s in states:
                x = np.array([s])
                lower, upper = action_bounds(x)
                z = project(rng.uniform(lower, upper) * 0.2, x)
                out.append(ExperienceTuple(
                    x, z, reward(x, z, model, reward_cfg), transition(x, z)))
            return out

        near = np.clip(center + rng.uniform(-0.15, 0.15, size=size),
                       0.02, 0.98)
        # the later era drifted far to one side of the boundary
        side = rng.choice([-1.0, 1.0])
        far = np.clip(center + side * rng.uniform(0.30, 0.48, size=size),
                      0.01, 0.99)
        # beyond +-0.6 every candidate action clamps for most states, so
        # wider intercepts only duplicate boundary policies
        fixture = DegeneracyFixture(
            snapshot_l=tuples_from(near),
            snapshot_lprime=tuples_from(far),
            critic=critic, model=model, reward_cfg=reward_cfg, gamma=0.2,
            slopes=np.array([0.0]),
            intercepts=np.linspace(-0.6, 0.6, 241))
        if check_degeneracy_implication(fixture).buffer_degenerate:
            return fixture
    raise RuntimeError(f"no buffer-degenerate draw within {max_attempts} attempts")


def save_policy(policy: ActorCriticPolicy, path, config_digest: str = "") -> None:
    payload = {
        "format": POLICY_FORMAT_TAG,
        "algorithm": policy.algorithm,
        "gamma": policy.gamma,
        "tau": policy.tau,
        "exploration_sigma": policy.exploration_sigma,
        "config_digest": config_digest,
        "profile": (None if policy.profile is None
                    else policy.profile.trusted.tolist()),
        "actor": policy.actor.to_dict(),
        "critics": [c.to_dict() for c in policy.critics],
        "target_actor": policy.target_actor.to_dict(),
        "target_critics": [c.to_dict() for c in policy.target_critics],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_policy(path) -> ActorCriticPolicy:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != POLICY_FORMAT_TAG:
        raise ValueError(f"unsupported policy format {payload.get('format')!r}")
    profile = (None if payload["profile"] is None
               else DeciderProfile(np.array(payload["profile"])))
    policy = ActorCriticPolicy(
        DenseNet.from_dict(payload["actor"]),
        [DenseNet.from_dict(c) for c in payload["critics"]],
        payload["algorithm"], payload["gamma"], payload["tau"],
        payload["exploration_sigma"], profile)
    policy.target_actor = DenseNet.from_dict(payload["target_actor"])
    policy.target_critics = [DenseNet.from_dict(c)
                             for c in payload["target_critics"]]
    return policy
