"""Evaluation: boundary deviance, decider-acceptability metrics, scenarios.

The two experiment scenarios mirror how the explainers are meant to be
used: a decider-free pass where every method explains freely, and a
HITL pass where a fraction of features (the UAP) is marked unacceptable
per trial and constrained variants must stay inside the trusted set.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import drl
from .baselines import ExplanationNotFound, GrowConfig, growing_spheres_explain
from .classifiers import ClassifierModel
from .dataset import Dataset
from .mdp import DeciderProfile, RewardConfig, reward

EXPLAINERS = ("ddpg", "td3", "hex-ddpg", "hex-td3", "grow")


def dbd(model, x_prime) -> float:
    """Decision boundary deviance: |f(x') - omega|."""
    return float(abs(model.predict_proba(np.asarray(x_prime, dtype=float))
                     - model.omega))


def uep(z, profile: DeciderProfile, uap: float) -> float:
    """Share of the unacceptable features an explanation actually uses.

    The profile must mark round(p * uap) features untrusted; usage means
    a nonzero action coordinate. The count of untrusted features is the
    normalizer, which keeps the value in [0, 1].
    """
    if uap <= 0.0:
        raise ValueError("UEP is undefined for UAP = 0")
    z = np.asarray(z, dtype=float)
    untrusted = profile.trusted == 0
    expected = int(round(profile.p * uap))
    if int(untrusted.sum()) != expected:
        raise ValueError(
            f"profile marks {int(untrusted.sum())} features untrusted but "
            f"UAP {uap} implies {expected}")
    return float(((z != 0.0) & untrusted).sum() / untrusted.sum())


def explanation_ranking(z, feature_names, q: int):
    """Top-q features by |z|, largest first; exact zeros are omitted."""
    z = np.asarray(z, dtype=float)
    if q > len(feature_names):
        raise ValueError("q cannot exceed the feature count")
    nonzero = [j for j in range(z.shape[0]) if z[j] != 0.0]
    nonzero.sort(key=lambda j: (-abs(z[j]), j))
    return [(feature_names[j], float(z[j])) for j in nonzero[:q]]


def rolling_curve(rewards, window: int) -> np.ndarray:
    """Trailing mean; early entries average whatever history exists."""
    if window < 1:
        raise ValueError("window must be positive")
    rewards = np.asarray(rewards, dtype=float)
    out = np.empty_like(rewards)
    for i in range(rewards.shape[0]):
        out[i] = rewards[max(0, i - window + 1):i + 1].mean()
    return out


@dataclass
class InstanceRecord:
    instance_id: int
    z: np.ndarray
    x_prime: np.ndarray
    probability: float
    dbd: float
    reward: float
    uep: float | None = None
    found: bool = True


@dataclass
class EvalReport:
    """Per-instance explanation records for one (trial, model, explainer)."""

    scenario: str
    explainer: str
    model_kind: str
    trial: int
    seed: int
    records: list[InstanceRecord]
    uap: float | None = None

    @property
    def mean_dbd(self) -> float:
        return float(np.mean([r.dbd for r in self.records]))

    @property
    def mean_reward(self) -> float:
        return float(np.mean([r.reward for r in self.records]))

    @property
    def mean_uep(self) -> float | None:
        values = [r.uep for r in self.records if r.uep is not None]
        return float(np.mean(values)) if values else None

    def key(self):
        return (self.scenario, self.model_kind, self.explainer, self.uap)


@dataclass
class ScenarioConfig:
    """Everything one scenario run needs besides the trained models."""

    train_data: Dataset
    test_data: Dataset
    train_template: drl.TrainConfig = field(default_factory=drl.TrainConfig)
    trials: int = 10
    test_instances: int = 100
    uaps: tuple = (0.1, 0.5, 0.9)
    seed: int = 0
    grow: GrowConfig = field(default_factory=GrowConfig)


def derive_seed(root: int, *parts) -> int:
    """Stable child seed from a root and a path of labels/ints."""
    words = [root & 0xFFFFFFFF]
    for part in parts:
        if isinstance(part, str):
            words.append(sum(ord(ch) * 31 ** i for i, ch in enumerate(part))
                         & 0xFFFFFFFF)
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def _explainer_train_config(name: str, template: drl.TrainConfig, seed: int,
                            profile: DeciderProfile | None) -> drl.TrainConfig:
    if name not in ("ddpg", "td3", "hex-ddpg", "hex-td3"):
        raise ValueError(f"{name!r} is not a policy explainer")
    enhanced = name.startswith("hex-")
    return replace(
        template,
        algorithm=name.removeprefix("hex-"),
        selective_buffering=enhanced,
        smote=enhanced,
        hitl=profile if enhanced else None,
        seed=seed,
    )


def _evaluate_explainer(name, model, scenario_cfg, instances, seed,
                        profile=None, uap=None):
    reward_cfg = RewardConfig(omega=model.omega)
    policy = None
    if name != "grow":
        config = _explainer_train_config(name, scenario_cfg.train_template,
                                         seed, profile)
        policy, _ = drl.synthesize_policy(model, scenario_cfg.train_data, config)

    records = []
    for i, x in enumerate(instances):
        found = True
        if name == "grow":
            try:
                z, x_prime = growing_spheres_explain(
                    model, x, replace(scenario_cfg.grow,
                                      seed=derive_seed(seed, "grow", i)))
            except ExplanationNotFound:
                z, x_prime, found = np.zeros_like(x), x.copy(), False
        else:
            z, x_prime = drl.explain(policy, x)
        records.append(InstanceRecord(
            instance_id=i, z=z, x_prime=x_prime,
            probability=float(model.predict_proba(x_prime)),
            dbd=dbd(model, x_prime),
            reward=reward(x, z, model, reward_cfg),
            uep=None if profile is None else uep(z, profile, uap),
            found=found))
    return records


def _draw_profile(p: int, uap: float, rng) -> DeciderProfile:
    untrusted_count = int(round(p * uap))
    if untrusted_count >= p:
        raise ValueError(
            f"UAP {uap} with p={p} leaves no trusted features")
    if untrusted_count < 1:
        raise ValueError(f"UAP {uap} with p={p} marks nothing untrusted")
    untrusted = rng.choice(p, size=untrusted_count, replace=False)
    return DeciderProfile.from_untrusted_indices(untrusted, p)


def run_scenario(scenario: str, models: dict[str, ClassifierModel],
                 explainers, config: ScenarioConfig) -> list[EvalReport]:
    """Run the full trial x model x explainer matrix for one scenario.

    Per trial, a fresh held-out instance set is drawn; in the HITL
    scenario a fresh untrusted-feature set is drawn per (trial, UAP) and
    held fixed across explainers and models within that cell.
    """
    if scenario not in ("decider_free", "hitl"):
        raise ValueError(f"unknown scenario {scenario!r}")
    for name in explainers:
        if name not in EXPLAINERS:
            raise ValueError(f"unknown explainer {name!r}")
    if not models:
        raise ValueError("no models supplied")

    reports = []
    for trial in range(config.trials):
        trial_rng = np.random.default_rng(derive_seed(config.seed, "trial", trial))
        n_test = min(config.test_instances, config.test_data.n)
        rows = trial_rng.choice(config.test_data.n, size=n_test, replace=False)
        instances = config.test_data.features[rows]

        if scenario == "hitl":
            profiles = {u: _draw_profile(config.test_data.p, u, trial_rng)
                        for u in config.uaps}
        else:
            profiles = {None: None}

        for uap_value, profile in profiles.items():
            for model_name, model in models.items():
                for explainer in explainers:
                    run_seed = derive_seed(config.seed, "run", trial,
                                           explainer, model_name,
                                           -1 if uap_value is None
                                           else int(uap_value * 1000))
                    records = _evaluate_explainer(
                        explainer, model, config, instances, run_seed,
                        profile=profile, uap=uap_value)
                    reports.append(EvalReport(
                        scenario=scenario, explainer=explainer,
                        model_kind=model_name, trial=trial, seed=run_seed,
                        records=records, uap=uap_value))
    return reports


def summarize_reports(reports: list[EvalReport]) -> list[dict]:
    """Unweighted mean of per-trial means for every scenario cell."""
    groups: dict[tuple, list[EvalReport]] = {}
    for report in reports:
        groups.setdefault(report.key(), []).append(report)
    summary = []
    for (scenario, model_kind, explainer, uap), group in sorted(
            groups.items(), key=lambda kv: [str(k) for k in kv[0]]):
        ueps = [r.mean_uep for r in group if r.mean_uep is not None]
        summary.append({
            "scenario": scenario,
            "model": model_kind,
            "explainer": explainer,
            "uap": uap,
            "trials": len(group),
            "mean_dbd": float(np.mean([r.mean_dbd for r in group])),
            "mean_reward": float(np.mean([r.mean_reward for r in group])),
            "mean_uep": float(np.mean(ueps)) if ueps else None,
        })
    return summary


# --- artifact emission -------------------------------------------------------

def write_records_csv(reports: list[EvalReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "model", "explainer", "trial", "uap",
                         "instance_id", "found", "probability", "dbd",
                         "reward", "uep", "z", "x_prime"])
        for report in reports:
            for r in report.records:
                writer.writerow([
                    report.scenario, report.model_kind, report.explainer,
                    report.trial,
                    "" if report.uap is None else report.uap,
                    r.instance_id, int(r.found),
                    repr(r.probability), repr(r.dbd), repr(r.reward),
                    "" if r.uep is None else repr(r.uep),
                    " ".join(repr(float(v)) for v in r.z),
                    " ".join(repr(float(v)) for v in r.x_prime),
                ])


def write_aggregates_json(summary: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)


def write_learning_curve(path, rewards, window: int = 40) -> None:
    smoothed = rolling_curve(rewards, window)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "raw_reward", "rolling_mean"])
        for i, (raw, smooth) in enumerate(zip(np.asarray(rewards), smoothed), 1):
            writer.writerow([i, repr(float(raw)), repr(float(smooth))])


def read_learning_curve(path) -> tuple[np.ndarray, np.ndarray]:
    raw, smooth = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            raw.append(float(row["raw_reward"]))
            smooth.append(float(row["rolling_mean"]))
    return np.array(raw), np.array(smooth)


# --- minimal SVG rendering (no plotting dependency) --------------------------

_SVG_W, _SVG_H = 640, 400
_MARGIN = 54


def _svg_header(title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]


def _axis_lines():
    x0, y0 = _MARGIN, _SVG_H - _MARGIN
    x1, y1 = _SVG_W - _MARGIN, _MARGIN
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def svg_line_chart(series: dict[str, np.ndarray], path, title="",
                   x_label="episode", y_label="reward") -> None:
    """Render labeled line series to a standalone SVG file."""
    values = [np.asarray(v, dtype=float) for v in series.values() if len(v)]
    if not values:
        raise ValueError("nothing to plot")
    lo = min(v.min() for v in values)
    hi = max(v.max() for v in values)
    if hi == lo:
        hi = lo + 1.0
    longest = max(len(v) for v in values)

    def sx(i, n):
        span = max(n - 1, 1)
        return _MARGIN + (i / span) * (_SVG_W - 2 * _MARGIN)

    def sy(v):
        return _SVG_H - _MARGIN - (v - lo) / (hi - lo) * (_SVG_H - 2 * _MARGIN)

    parts = _svg_header(title) + _axis_lines()
    parts.append(
        f'<text x="{_SVG_W / 2}" y="{_SVG_H - 14}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>')
    parts.append(
        f'<text x="16" y="{_SVG_H / 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_SVG_H / 2})">{y_label}</text>')
    for tick in (lo, (lo + hi) / 2, hi):
        parts.append(
            f'<text x="{_MARGIN - 6}" y="{sy(tick) + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick:.3g}</text>')
    for k, (label, v) in enumerate(series.items()):
        v = np.asarray(v, dtype=float)
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(f"{sx(i, len(v)):.1f},{sy(val):.1f}"
                          for i, val in enumerate(v))
        parts.append(f'<polyline fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{points}"/>')
        parts.append(f'<text x="{_SVG_W - _MARGIN + 4}" '
                     f'y="{_MARGIN + 14 * k + 10}" font-family="sans-serif" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))


def svg_bar_chart(pairs, path, title="") -> None:
    """Horizontal signed bars, e.g. the top-q entries of an explanation."""
    if not pairs:
        pairs = [("(empty)", 0.0)]
    biggest = max(abs(v) for _, v in pairs) or 1.0
    mid_x = _SVG_W / 2
    usable = (_SVG_W - 2 * _MARGIN) / 2
    bar_h = min(28, (_SVG_H - 2 * _MARGIN) / len(pairs) - 6)

    parts = _svg_header(title)
    parts.append(f'<line x1="{mid_x}" y1="{_MARGIN}" x2="{mid_x}" '
                 f'y2="{_SVG_H - _MARGIN}" stroke="black"/>')
    for k, (label, value) in enumerate(pairs):
        y = _MARGIN + k * (bar_h + 6)
        width = abs(value) / biggest * usable
        x = mid_x if value >= 0 else mid_x - width
        color = "#2ca02c" if value >= 0 else "#d62728"
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{width:.1f}" '
                     f'height="{bar_h:.1f}" fill="{color}"/>')
        anchor = "end" if value >= 0 else "start"
        lx = mid_x - 6 if value >= 0 else mid_x + 6
        parts.append(f'<text x="{lx}" y="{y + bar_h / 2 + 4}" '
                     f'text-anchor="{anchor}" font-family="sans-serif" '
                     f'font-size="11">{label} ({value:+.3f})</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
