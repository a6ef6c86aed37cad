"""The explanation MDP: reward shaping, transitions, and action projection.

States are instances x in [0,1]^p, actions are bounded perturbations z
with x + z staying inside the unit box, and the environment is a trained
classifier. The reward prefers post-action probabilities that just crest
the decision threshold, pays a bonus for flipping the classification,
and charges for action length and density.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Network outputs are never exactly zero, so the density penalty needs a
# deadband; trust-constrained coordinates are written as exact zeros and
# therefore never count.
ZERO_NORM_DEADBAND = 1e-9


@dataclass
class RewardConfig:
    alpha: float = 4.0
    beta: float = 10.0
    epsilon_magnitude: float = 0.01
    omega: float = 0.5

    def __post_init__(self):
        if min(self.alpha, self.beta, self.epsilon_magnitude) <= 0.0:
            raise ValueError("alpha, beta and epsilon_magnitude must be positive")
        if not 0.0 < self.omega < 1.0:
            raise ValueError("omega must lie in (0, 1)")


@dataclass
class DeciderProfile:
    """Which features a decider accepts in an explanation (1 = trusted)."""

    trusted: np.ndarray

    def __post_init__(self):
        self.trusted = np.asarray(self.trusted, dtype=int)
        if self.trusted.ndim != 1:
            raise ValueError("trusted mask must be a vector")
        if not set(np.unique(self.trusted)) <= {0, 1}:
            raise ValueError("trusted mask must be 0/1")
        if self.trusted.sum() == 0:
            raise ValueError("at least one feature must be trusted, otherwise "
                             "the only feasible action is zero")

    @property
    def p(self) -> int:
        return self.trusted.shape[0]

    @classmethod
    def from_trusted_indices(cls, indices, p: int) -> "DeciderProfile":
        mask = np.zeros(p, dtype=int)
        mask[list(indices)] = 1
        return cls(mask)

    @classmethod
    def from_untrusted_indices(cls, indices, p: int) -> "DeciderProfile":
        mask = np.ones(p, dtype=int)
        mask[list(indices)] = 0
        return cls(mask)

    @classmethod
    def load(cls, path, feature_names: list[str] | None = None,
             p: int | None = None) -> "DeciderProfile":
        """Read a JSON array of trusted feature names or indices."""
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
        if not isinstance(entries, list):
            raise ValueError("decider profile must be a JSON array")
        indices = []
        for entry in entries:
            if isinstance(entry, bool):
                raise ValueError("profile entries must be names or indices")
            if isinstance(entry, int):
                indices.append(entry)
            elif isinstance(entry, str):
                if feature_names is None:
                    raise ValueError(
                        f"profile names feature {entry!r} but no feature names "
                        "are available to resolve it")
                indices.append(feature_names.index(entry))
            else:
                raise ValueError(f"bad profile entry {entry!r}")
        if p is None:
            if feature_names is None:
                raise ValueError("need feature names or an explicit p")
            p = len(feature_names)
        return cls.from_trusted_indices(indices, p)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump([int(i) for i in np.flatnonzero(self.trusted)], fh)


def epsilon_shift(current_class: int, config: RewardConfig) -> float:
    """Signed threshold nudge: aim slightly past the boundary.

    Points currently classified 0 should overshoot the threshold upward,
    points classified 1 downward.
    """
    return config.epsilon_magnitude if current_class == 0 else -config.epsilon_magnitude


def action_bounds(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise (lower, upper) bounds keeping x + z inside the unit box."""
    x = np.asarray(x, dtype=float)
    return -x, 1.0 - x


def project(z: np.ndarray, x: np.ndarray,
            profile: DeciderProfile | None = None) -> np.ndarray:
    """Clamp a raw action into the feasible region for x.

    With a decider profile, untrusted coordinates are forced to exactly
    zero (their feasible set collapses to {0}), which guarantees a zero
    disagreement score for the projected action.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if z.shape != x.shape:
        raise ValueError("action and instance must have the same length")
    lower, upper = action_bounds(x)
    projected = np.minimum(np.maximum(lower, z), upper)
    if profile is not None:
        if profile.p != x.shape[0]:
            raise ValueError("profile length must match instance length")
        projected = np.where(profile.trusted == 1, projected, 0.0)
    return projected


def transition(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Next state is the elementwise sum; callers must project first."""
    return np.asarray(x, dtype=float) + np.asarray(z, dtype=float)


def zero_norm(z: np.ndarray) -> int:
    """Count of action coordinates above the density deadband."""
    return int((np.abs(np.asarray(z, dtype=float)) > ZERO_NORM_DEADBAND).sum())


def reward_batch(X: np.ndarray, Z: np.ndarray, model,
                 config: RewardConfig) -> np.ndarray:
    """Vectorized reward for rows of already-projected (state, action) pairs.

    Four terms per row: a quadratic penalty for missing the nudged
    threshold, a bonus for flipping the classification, and L2/L0 action
    costs (L0 scaled by 1/p).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape != Z.shape:
        raise ValueError("states and actions must have matching shapes")
    X_next = X + Z
    if X_next.min() < -1e-9 or X_next.max() > 1.0 + 1e-9:
        raise ValueError("action leaves the unit box; project before scoring")
    p = X.shape[1]
    omega = config.omega

    prob_now = np.asarray(model.predict_proba(X), dtype=float)
    prob_next = np.asarray(model.predict_proba(X_next), dtype=float)
    class_now = (prob_now >= omega).astype(float)
    class_next = (prob_next >= omega).astype(float)
    eps = np.where(class_now == 0.0, config.epsilon_magnitude,
                   -config.epsilon_magnitude)

    closeness = -config.alpha * (prob_next - (omega + eps)) ** 2
    flip_bonus = config.beta * (class_next - class_now) ** 2
    length_cost = np.sqrt((Z ** 2).sum(axis=1))
    density_cost = (np.abs(Z) > ZERO_NORM_DEADBAND).sum(axis=1) / p
    return closeness + flip_bonus - length_cost - density_cost


def reward(x: np.ndarray, z: np.ndarray, model, config: RewardConfig) -> float:
    """Score a single already-projected action taken from state x."""
    return float(reward_batch(np.asarray(x)[None, :], np.asarray(z)[None, :],
                              model, config)[0])


def disagreement_score(z: np.ndarray, profile: DeciderProfile) -> int:
    """How many untrusted features the explanation actually uses.

    Trusted-but-unused features do not count; only a nonzero entry on an
    untrusted feature raises the score.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[0] != profile.p:
        raise ValueError("action and profile must have the same length")
    used = z != 0.0
    return int((used & (profile.trusted == 0)).sum())
