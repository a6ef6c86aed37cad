"""Binary classifier environments sharing one probability/classify interface.

Five model families are supported: logistic regression, a one-hidden-layer
neural net, CART decision trees, bagged random forests, and kernel SVMs
(Platt-calibrated to produce probabilities). Every model exposes
``predict_proba`` and ``classify`` so the explanation machinery never has
to care which family it is driving.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .densenet import AdamState, DenseNet, adam_step
from .dataset import Dataset

MODEL_FORMAT_TAG = "hexrl-classifier/1"


def _sigmoid(u):
    out = np.empty_like(u, dtype=float)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def auc_score(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC with tie correction."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=float)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


class ClassifierModel:
    """Shared surface: calibrated probabilities plus a threshold rule."""

    kind = "abstract"

    def __init__(self, p: int, omega: float = 0.5):
        if not 0.0 < omega < 1.0:
            raise ValueError("omega must lie in (0, 1)")
        self.p = p
        self.omega = omega

    def _proba_matrix(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, X):
        """Probability of class 1; scalar for a single instance."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.p:
            raise ValueError(f"expected {self.p} features, got {X.shape[1]}")
        probs = self._proba_matrix(X)
        return float(probs[0]) if single else probs

    def classify(self, X):
        """0 below the threshold, 1 at or above it."""
        probs = self.predict_proba(X)
        if np.isscalar(probs):
            return 0 if probs < self.omega else 1
        return (probs >= self.omega).astype(int)

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(payload: dict) -> "ClassifierModel":
        if payload.get("format") != MODEL_FORMAT_TAG:
            raise ValueError(f"unsupported model format {payload.get('format')!r}")
        kind = payload["kind"]
        cls = _MODEL_REGISTRY.get(kind)
        if cls is None:
            raise ValueError(f"unknown model kind {kind!r}")
        return cls._from_payload(payload)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @staticmethod
    def load(path) -> "ClassifierModel":
        with open(path, encoding="utf-8") as fh:
            return ClassifierModel.from_dict(json.load(fh))


class NetClassifier(ClassifierModel):
    """Logistic regression / MLP: a dense net emitting a logit."""

    def __init__(self, net: DenseNet, omega: float = 0.5):
        super().__init__(net.input_dim, omega)
        self.net = net

    def _proba_matrix(self, X):
        return _sigmoid(self.net.forward_batch(X)[:, 0])

    def to_dict(self):
        return {"format": MODEL_FORMAT_TAG, "kind": self.kind,
                "omega": self.omega, "net": self.net.to_dict()}

    @classmethod
    def _from_payload(cls, payload):
        return cls(DenseNet.from_dict(payload["net"]), payload["omega"])


class LogisticRegressionModel(NetClassifier):
    kind = "logistic_regression"


class NeuralNetModel(NetClassifier):
    kind = "neural_net"


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (probability)."""

    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    probability: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self):
        if self.is_leaf:
            return {"probability": self.probability}
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, payload):
        if "probability" in payload:
            return cls(probability=payload["probability"])
        return cls(feature=payload["feature"], threshold=payload["threshold"],
                   left=cls.from_dict(payload["left"]),
                   right=cls.from_dict(payload["right"]))


def _tree_probabilities(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.probability
        else:
            goes_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
    return out


def _weighted_gini(w_neg: float, w_pos: float) -> float:
    total = w_neg + w_pos
    if total <= 0.0:
        return 0.0
    q = w_pos / total
    return 2.0 * q * (1.0 - q)


def _best_split(X, y, weights, min_leaf):
    """Scan every feature for the weighted-gini-optimal threshold."""
    n = len(y)
    w = weights[y]
    parent = _weighted_gini(w[y == 0].sum(), w[y == 1].sum())
    total_w = w.sum()
    best = (None, 0.0, 0.0)  # feature, threshold, gain
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        ws = w[order]
        wpos = np.where(y[order] == 1, ws, 0.0)
        cum_w = np.cumsum(ws)
        cum_pos = np.cumsum(wpos)
        # split after position i keeps i+1 rows left
        counts = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (counts >= min_leaf) & (n - counts >= min_leaf)
        if not valid.any():
            continue
        idx = np.flatnonzero(valid)
        wl = cum_w[idx]
        pl = cum_pos[idx]
        wr = total_w - wl
        pr = cum_pos[-1] - pl
        gini_l = 2.0 * (pl / wl) * (1.0 - pl / wl)
        gini_r = 2.0 * (pr / wr) * (1.0 - pr / wr)
        gains = parent - (wl / total_w) * gini_l - (wr / total_w) * gini_r
        k = int(np.argmax(gains))
        if gains[k] > best[2] + 1e-12:
            threshold = 0.5 * (xs[idx[k]] + xs[idx[k] + 1])
            best = (j, float(threshold), float(gains[k]))
    return best


def _grow_tree(X, y, weights, depth, max_depth, min_leaf) -> TreeNode:
    w = weights[y]
    w_pos = w[y == 1].sum()
    leaf_probability = float(w_pos / w.sum())
    if depth >= max_depth or len(np.unique(y)) == 1 or len(y) < 2 * min_leaf:
        return TreeNode(probability=leaf_probability)
    feature, threshold, gain = _best_split(X, y, weights, min_leaf)
    if feature is None or gain <= 1e-12:
        return TreeNode(probability=leaf_probability)
    goes_left = X[:, feature] <= threshold
    return TreeNode(
        feature=feature, threshold=threshold,
        left=_grow_tree(X[goes_left], y[goes_left], weights,
                        depth + 1, max_depth, min_leaf),
        right=_grow_tree(X[~goes_left], y[~goes_left], weights,
                         depth + 1, max_depth, min_leaf),
    )


class DecisionTreeModel(ClassifierModel):
    kind = "decision_tree"

    def __init__(self, root: TreeNode, p: int, omega: float = 0.5):
        super().__init__(p, omega)
        self.root = root

    def _proba_matrix(self, X):
        return _tree_probabilities(self.root, X)

    def to_dict(self):
        return {"format": MODEL_FORMAT_TAG, "kind": self.kind,
                "omega": self.omega, "p": self.p, "tree": self.root.to_dict()}

    @classmethod
    def _from_payload(cls, payload):
        return cls(TreeNode.from_dict(payload["tree"]), payload["p"],
                   payload["omega"])


class RandomForestModel(ClassifierModel):
    """Probability is the plain mean of the member trees' probabilities,
    so a one-tree forest is identical to that decision tree."""

    kind = "random_forest"

    def __init__(self, trees: list[TreeNode], p: int, omega: float = 0.5):
        if not trees:
            raise ValueError("a forest needs at least one tree")
        super().__init__(p, omega)
        self.trees = trees

    def _proba_matrix(self, X):
        probs = np.zeros(X.shape[0])
        for tree in self.trees:
            probs += _tree_probabilities(tree, X)
        return probs / len(self.trees)

    def to_dict(self):
        return {"format": MODEL_FORMAT_TAG, "kind": self.kind,
                "omega": self.omega, "p": self.p,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def _from_payload(cls, payload):
        return cls([TreeNode.from_dict(t) for t in payload["trees"]],
                   payload["p"], payload["omega"])


class SvmModel(ClassifierModel):
    """Kernel SVM scored by a weighted support expansion, Platt-calibrated."""

    kind = "svm"

    def __init__(self, kernel: str, support: np.ndarray, coef: np.ndarray,
                 bias: float, gamma: float, platt: tuple[float, float],
                 omega: float = 0.5):
        super().__init__(support.shape[1], omega)
        if kernel not in ("linear", "rbf", "poly"):
            raise ValueError(f"unknown kernel {kernel!r}")
        self.kernel = kernel
        self.support = np.asarray(support, dtype=float)
        self.coef = np.asarray(coef, dtype=float)
        self.bias = float(bias)
        self.gamma = float(gamma)
        self.platt = (float(platt[0]), float(platt[1]))

    def _kernel_matrix(self, X: np.ndarray) -> np.ndarray:
        if self.kernel == "linear":
            return X @ self.support.T
        if self.kernel == "poly":
            return (X @ self.support.T + 1.0) ** 2
        sq = ((X[:, None, :] - self.support[None, :, :]) ** 2).sum(axis=2)
        return np.exp(-self.gamma * sq)

    def decision_scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self._kernel_matrix(X) @ self.coef + self.bias

    def _proba_matrix(self, X):
        a, b = self.platt
        return _sigmoid(-(a * self.decision_scores(X) + b))

    def to_dict(self):
        return {"format": MODEL_FORMAT_TAG, "kind": self.kind,
                "omega": self.omega, "kernel": self.kernel,
                "support": self.support.tolist(), "coef": self.coef.tolist(),
                "bias": self.bias, "gamma": self.gamma,
                "platt": list(self.platt)}

    @classmethod
    def _from_payload(cls, payload):
        return cls(payload["kernel"], np.array(payload["support"]),
                   np.array(payload["coef"]), payload["bias"],
                   payload["gamma"], tuple(payload["platt"]), payload["omega"])


_MODEL_REGISTRY = {
    cls.kind: cls
    for cls in (LogisticRegressionModel, NeuralNetModel, DecisionTreeModel,
                RandomForestModel, SvmModel)
}


def platt_calibrate(scores, labels, max_iterations: int = 100) -> tuple[float, float]:
    """Fit (A, B) so that 1/(1+exp(A*s+B)) maximizes the label likelihood.

    Newton's method with the usual regularized targets; robust to
    separable score sets.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    prior1 = int((labels == 1).sum())
    prior0 = int((labels == 0).sum())
    if prior0 == 0 or prior1 == 0:
        raise ValueError("calibration needs both classes")

    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(labels == 1, hi, lo)

    a, b = 0.0, np.log((prior0 + 1.0) / (prior1 + 1.0))
    sigma = 1e-12

    def negloglik(a_, b_):
        f = a_ * scores + b_
        # log(1+exp(-|f|)) + max(f,0) is the stable -log p form
        return float(np.sum(np.where(f >= 0, t * f, (t - 1.0) * f)
                            + np.log1p(np.exp(-np.abs(f)))))

    best = negloglik(a, b)
    for _ in range(max_iterations):
        f = a * scores + b
        p = _sigmoid(-f)             # model probability of class 1
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float(np.dot(d1, scores))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-10 and abs(g2) < 1e-10:
            break
        h11 = float(np.dot(d2, scores * scores)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h12 = float(np.dot(d2, scores))
        det = h11 * h22 - h12 * h12
        da = -(h22 * g1 - h12 * g2) / det
        db = -(h11 * g2 - h12 * g1) / det
        step = 1.0
        while step >= 1e-10:
            cand = negloglik(a + step * da, b + step * db)
            if cand < best + 1e-12:
                a, b = a + step * da, b + step * db
                best = cand
                break
            step /= 2.0
        else:
            break
    return a, b


@dataclass
class TrainControls:
    """Knobs for every trainable family; defaults are the stock recipes."""

    omega: float = 0.5
    learning_rate: float = 0.01
    batch_size: int = 64
    max_epochs: int = 4000
    patience: int = 200
    hidden_sizes: tuple = (3, 5, 10, 25, 50, 100)
    max_depths: tuple = (5, 10, 30, 50)
    tree_counts: tuple = (50, 100, 200, 400, 600)
    kernels: tuple = ("linear", "rbf", "poly")
    svm_iterations: int | None = None
    min_leaf: int = 2


def _check_trainable(data: Dataset):
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(np.unique(data.labels)) < 2:
        raise ValueError("cannot train on a single-class dataset")


def _log_loss(probs, y):
    eps = 1e-12
    probs = np.clip(probs, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(probs) + (1 - y) * np.log(1.0 - probs)))


def _fit_net(dims, train: Dataset, validation: Dataset | None,
             controls: TrainControls, rng) -> DenseNet:
    """Minibatch Adam on the logistic loss with patience-based early stop."""
    activations = ["relu"] * (len(dims) - 2) + ["identity"]
    net = DenseNet.create(dims, activations, rng)
    state = AdamState.for_parameters(net.parameters(),
                                     learning_rate=controls.learning_rate)
    monitor = validation if validation is not None else train
    X, y = train.features, train.labels.astype(float)

    best_loss = np.inf
    best_params = [p.copy() for p in net.parameters()]
    stale = 0
    for _ in range(controls.max_epochs):
        order = rng.permutation(train.n)
        for start in range(0, train.n, controls.batch_size):
            idx = order[start:start + controls.batch_size]
            logits = net.forward_batch(X[idx])
            probs = _sigmoid(logits[:, 0])
            grad_logits = ((probs - y[idx]) / len(idx))[:, None]
            grads, _ = net.backward_batch(X[idx], grad_logits)
            adam_step(net.parameters(), grads, state)
        loss = _log_loss(_sigmoid(net.forward_batch(monitor.features)[:, 0]),
                         monitor.labels)
        if loss < best_loss - 1e-9:
            best_loss = loss
            best_params = [p.copy() for p in net.parameters()]
            stale = 0
        else:
            stale += 1
            if stale >= controls.patience:
                break
    for p, saved in zip(net.parameters(), best_params):
        p[...] = saved
    return net


def _tree_class_weights(labels: np.ndarray) -> np.ndarray:
    """Penalties for trees/forests: positives weighted by the negative share."""
    n = len(labels)
    n_neg = int((labels == 0).sum())
    w_pos = n_neg / n
    return np.array([1.0 - w_pos, w_pos])


def _svm_sample_costs(labels: np.ndarray) -> np.ndarray:
    """Per-sample misclassification costs: n/n_neg for positives, inverse for negatives."""
    n = len(labels)
    n_neg = int((labels == 0).sum())
    cost_pos = n / n_neg
    costs = np.where(labels == 1, cost_pos, 1.0 / cost_pos)
    return costs


def _fit_svm_kernel(kernel: str, train: Dataset, controls: TrainControls,
                    rng) -> SvmModel:
    """Kernelized Pegasos subgradient descent, then Platt calibration."""
    X = train.features
    y_signed = np.where(train.labels == 1, 1.0, -1.0)
    n = train.n
    gamma = 1.0 / train.p
    lam = 1.0 / n
    iterations = controls.svm_iterations or max(1000, 10 * n)

    if kernel == "linear":
        gram = X @ X.T
    elif kernel == "poly":
        gram = (X @ X.T + 1.0) ** 2
    else:
        sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        gram = np.exp(-gamma * sq)

    costs = _svm_sample_costs(train.labels)
    alpha = np.zeros(n)
    for t in range(1, iterations + 1):
        i = int(rng.integers(0, n))
        margin = y_signed[i] / (lam * t) * float(gram[i] @ (alpha * costs * y_signed))
        if margin < 1.0:
            alpha[i] += 1.0

    coef = alpha * costs * y_signed / (lam * iterations)
    model = SvmModel(kernel, X, coef, 0.0, gamma, (0.0, 0.0),
                     omega=controls.omega)
    scores = model.decision_scores(X)
    model.platt = platt_calibrate(scores, train.labels)
    return model


def _grid_best(candidates, eval_fn):
    """Pick the highest-scoring candidate; earlier (smaller) wins ties."""
    best_model, best_score = None, -np.inf
    for model in candidates:
        score = eval_fn(model)
        if score > best_score + 1e-12:
            best_model, best_score = model, score
    return best_model


def train_classifier(kind: str, train: Dataset,
                     validation: Dataset | None = None,
                     controls: TrainControls | None = None,
                     seed: int = 0) -> ClassifierModel:
    """Fit one of the five model families on a unit-box dataset.

    Families with hyperparameters are grid-searched; candidates are scored
    by AUC on the validation split when one is given, else on the training
    data, with ties broken toward the smaller model.
    """
    _check_trainable(train)
    controls = controls or TrainControls()
    rng = np.random.default_rng(seed)
    scoring = validation if validation is not None else train

    def auc_of(model):
        return auc_score(scoring.labels, model.predict_proba(scoring.features))

    if kind == "logistic_regression":
        net = _fit_net([train.p, 1], train, validation, controls, rng)
        return LogisticRegressionModel(net, controls.omega)

    if kind == "neural_net":
        candidates = (
            NeuralNetModel(_fit_net([train.p, h, 1], train, validation,
                                    controls, rng), controls.omega)
            for h in controls.hidden_sizes
        )
        return _grid_best(candidates, auc_of)

    if kind == "decision_tree":
        weights = _tree_class_weights(train.labels)
        candidates = (
            DecisionTreeModel(
                _grow_tree(train.features, train.labels, weights, 0, depth,
                           controls.min_leaf),
                train.p, controls.omega)
            for depth in controls.max_depths
        )
        return _grid_best(candidates, auc_of)

    if kind == "random_forest":
        weights = _tree_class_weights(train.labels)

        def forest(depth, count):
            trees = []
            for _ in range(count):
                idx = rng.integers(0, train.n, size=train.n)
                trees.append(_grow_tree(train.features[idx], train.labels[idx],
                                        weights, 0, depth, controls.min_leaf))
            return RandomForestModel(trees, train.p, controls.omega)

        candidates = (forest(depth, count)
                      for depth in controls.max_depths
                      for count in controls.tree_counts)
        return _grid_best(candidates, auc_of)

    if kind == "svm":
        candidates = (_fit_svm_kernel(kernel, train, controls, rng)
                      for kernel in controls.kernels)
        return _grid_best(candidates, auc_of)

    raise ValueError(f"unknown classifier kind {kind!r}")
