"""Growing-spheres competitor: sample-based boundary search around one point.

Spherical layers are sampled around the instance, first shrinking until a
layer free of class flips is found, then growing annular layers outward
until the first flip appears. The closest flipped point is greedily
sparsified coordinate by coordinate. Unlike the policy-based explainers
this restarts from scratch for every instance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ExplanationNotFound(RuntimeError):
    """No class flip was found within the search budget."""


@dataclass
class GrowConfig:
    n_in_layer: int = 200
    first_radius: float = 1.1
    decrease_radius: float = 2.0
    seed: int = 0
    max_grow_steps: int = 50
    max_shrink_steps: int = 50

    def __post_init__(self):
        if min(self.n_in_layer, self.max_grow_steps, self.max_shrink_steps) < 1:
            raise ValueError("layer size and step caps must be positive")
        if self.first_radius <= 0.0:
            raise ValueError("first_radius must be positive")
        if self.decrease_radius <= 1.0:
            raise ValueError("decrease_radius must exceed 1")


def _sample_layer(x, inner, outer, count, rng):
    """Points in the [inner, outer] shell around x, clipped to the unit box."""
    p = x.shape[0]
    directions = rng.normal(size=(count, p))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = rng.uniform(inner, outer, size=(count, 1))
    return np.clip(x + directions / norms * radii, 0.0, 1.0)


def growing_spheres_explain(model, x, config: GrowConfig | None = None):
    """Find (z, x_prime) with a flipped classification near x.

    Raises :class:`ExplanationNotFound` when the growth cap is exhausted
    without a flip (e.g. a constant classifier); there is no silent
    fallback output.
    """
    config = config or GrowConfig()
    x = np.asarray(x, dtype=float)
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("instance must lie in the unit box")
    rng = np.random.default_rng(config.seed)
    original_class = model.classify(x)

    def flipped(points):
        return np.asarray(model.classify(points)) != original_class

    # shrink until the ball around x is flip-free
    radius = config.first_radius
    last_enemies = None
    found_clean_ball = False
    for _ in range(config.max_shrink_steps):
        samples = _sample_layer(x, 0.0, radius, config.n_in_layer, rng)
        mask = flipped(samples)
        if not mask.any():
            found_clean_ball = True
            break
        last_enemies = samples[mask]
        radius /= config.decrease_radius

    if found_clean_ball:
        # grow annular layers outward from the clean radius
        step = radius * config.decrease_radius / 5.0
        enemies = None
        for _ in range(config.max_grow_steps):
            samples = _sample_layer(x, radius, radius + step,
                                    config.n_in_layer, rng)
            mask = flipped(samples)
            if mask.any():
                enemies = samples[mask]
                break
            radius += step
        if enemies is None:
            raise ExplanationNotFound(
                f"no class flip within {config.max_grow_steps} growth steps "
                f"(final radius {radius:.3f})")
    else:
        # shrink cap hit: the boundary hugs x, the tiny-ball flips are as
        # close as any annulus would get
        enemies = last_enemies

    distances = np.linalg.norm(enemies - x, axis=1)
    x_prime = enemies[int(np.argmin(distances))].copy()

    # greedy sparsification: zero small coordinates while the flip survives
    z = x_prime - x
    for j in np.argsort(np.abs(z)):
        if z[j] == 0.0:
            continue
        candidate = x_prime.copy()
        candidate[j] = x[j]
        if model.classify(candidate) != original_class:
            x_prime = candidate
            z = x_prime - x
    return x_prime - x, x_prime
