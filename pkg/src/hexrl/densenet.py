"""Dense feed-forward networks with manual backprop and Adam updates.

Small fully-connected nets power every learned component of the package:
the actor and critic(s) of the policy engine and the logistic/MLP
classifier environments. All arithmetic is float64 numpy; nets this size
(tens of units) need nothing heavier.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")

FORMAT_TAG = "hexrl-densenet/1"


def _activate(name: str, u: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(u, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-u))
    if name == "tanh":
        return np.tanh(u)
    if name == "identity":
        return u
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(name: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    """Derivative of the activation wrt its pre-activation input."""
    if name == "relu":
        return (pre > 0.0).astype(float)
    if name == "sigmoid":
        return post * (1.0 - post)
    if name == "tanh":
        return 1.0 - post * post
    if name == "identity":
        return np.ones_like(pre)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class Layer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray     # (out_dim,)
    activation: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("layer weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError("bias length must match weight rows")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")


class DenseNet:
    """A stack of dense layers; dimensions must chain between layers."""

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("a DenseNet needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weights.shape[0] != nxt.weights.shape[1]:
                raise ValueError(
                    f"layer output dim {prev.weights.shape[0]} does not chain "
                    f"into next layer input dim {nxt.weights.shape[1]}"
                )
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    @classmethod
    def create(cls, dims: list[int], activations: list[str],
               rng: np.random.Generator) -> "DenseNet":
        """Fresh net with uniform +-1/sqrt(fan_in) weights and zero biases.

        ``dims`` lists the layer sizes input-first, e.g. [2, 50, 50, 1];
        ``activations`` names one activation per weight layer.
        """
        if len(activations) != len(dims) - 1:
            raise ValueError("need one activation per layer")
        layers = []
        for fan_in, fan_out, act in zip(dims, dims[1:], activations):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
            layers.append(Layer(w, np.zeros(fan_out), act))
        return cls(layers)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.input_dim:
            raise ValueError(
                f"input has {x.shape[-1]} features, net expects {self.input_dim}"
            )
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate a single input vector. Pure and deterministic."""
        x = self._check_input(x)
        if x.ndim != 1:
            raise ValueError("forward takes a 1-D vector; use forward_batch")
        return self.forward_batch(x[None, :])[0]

    def forward_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(np.atleast_2d(X))
        a = X
        for layer in self.layers:
            a = _activate(layer.activation, a @ layer.weights.T + layer.bias)
        return a

    def _forward_cached(self, X: np.ndarray):
        pres, posts = [], [X]
        a = X
        for layer in self.layers:
            u = a @ layer.weights.T + layer.bias
            a = _activate(layer.activation, u)
            pres.append(u)
            posts.append(a)
        return pres, posts

    def backward(self, x: np.ndarray, output_gradient: np.ndarray):
        """Chain-rule gradients of a scalar objective through the net.

        ``output_gradient`` is d(objective)/d(output). Returns
        ``(parameter_gradients, input_gradient)`` where the parameter
        gradients come as a flat list [dW0, db0, dW1, db1, ...] matching
        :meth:`parameters`.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("backward takes a 1-D vector; use backward_batch")
        grads, input_grads = self.backward_batch(
            x[None, :], np.asarray(output_gradient, dtype=float)[None, :])
        return grads, input_grads[0]

    def backward_batch(self, X: np.ndarray, output_gradient: np.ndarray):
        """Batched backprop; parameter gradients are summed over rows."""
        X = self._check_input(np.atleast_2d(X))
        G = np.atleast_2d(np.asarray(output_gradient, dtype=float))
        if G.shape != (X.shape[0], self.output_dim):
            raise ValueError(
                f"output gradient shape {G.shape} does not match "
                f"({X.shape[0]}, {self.output_dim})"
            )
        pres, posts = self._forward_cached(X)
        grads: list[np.ndarray] = []
        delta = G
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            delta = delta * _activation_grad(layer.activation, pres[i], posts[i + 1])
            grads.insert(0, delta.sum(axis=0))          # db
            grads.insert(0, delta.T @ posts[i])          # dW
            delta = delta @ layer.weights
        return grads, delta

    def parameters(self) -> list[np.ndarray]:
        """Live views of all parameter arrays, [W0, b0, W1, b1, ...]."""
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.bias)
        return params

    def copy(self) -> "DenseNet":
        return DenseNet([
            Layer(layer.weights.copy(), layer.bias.copy(), layer.activation)
            for layer in self.layers
        ])

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "layers": [
                {
                    "activation": layer.activation,
                    "weights": layer.weights.tolist(),  # row-major
                    "bias": layer.bias.tolist(),
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DenseNet":
        if payload.get("format") != FORMAT_TAG:
            raise ValueError(f"unsupported net format {payload.get('format')!r}")
        return cls([
            Layer(np.array(entry["weights"]), np.array(entry["bias"]),
                  entry["activation"])
            for entry in payload["layers"]
        ])

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "DenseNet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class AdamState:
    """Adam moments for one parameter list; shapes mirror the params."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.learning_rate < 0.0:
            raise ValueError("learning rate must be non-negative")

    @classmethod
    def for_parameters(cls, params: list[np.ndarray], **kwargs) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> None:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params, grads and Adam moments must align")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
