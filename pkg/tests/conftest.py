import numpy as np
import pytest

from hexrl.classifiers import TrainControls, train_classifier
from hexrl.dataset import SplitSpec, split, synth_boundary


@pytest.fixture(scope="session")
def linear_problem():
    """Small separable problem with a trained logistic model."""
    data = synth_boundary("linear", 400, 2, seed=1)
    train, validation, test = split(data, SplitSpec(seed=0))
    model = train_classifier(
        "logistic_regression", train, validation,
        TrainControls(max_epochs=150, patience=150), seed=0)
    return {"train": train, "validation": validation, "test": test,
            "model": model}


class VectorizedStub:
    """Classifier stand-in with a closed-form probability."""

    def __init__(self, fn, p, omega=0.5):
        self._fn = fn
        self.p = p
        self.omega = omega

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return float(self._fn(X[None, :])[0])
        return self._fn(X)

    def classify(self, X):
        probs = self.predict_proba(X)
        if np.isscalar(probs):
            return 0 if probs < self.omega else 1
        return (np.asarray(probs) >= self.omega).astype(int)


@pytest.fixture
def stub_model():
    return VectorizedStub


@pytest.fixture
def diagonal_model():
    """p=2 model whose probability rises along x1 + x2."""
    return VectorizedStub(
        lambda X: 1.0 / (1.0 + np.exp(-6.0 * (X[:, 0] + X[:, 1] - 1.0))), p=2)
