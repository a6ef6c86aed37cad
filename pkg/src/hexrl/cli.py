"""Command-line entry points: train-classifier, synthesize, explain,
evaluate, report.

Every command accepts --config pointing at a TOML or JSON file whose keys
mirror the long flag names (dashes become underscores); explicit flags win
over config-file values. Exit codes: 0 success, 2 usage/config error,
1 runtime failure. Diagnostics go to stderr, data to stdout.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import drl, evaluation
from .baselines import GrowConfig, growing_spheres_explain, ExplanationNotFound
from .classifiers import ClassifierModel, TrainControls, auc_score, train_classifier
from .dataset import CsvFormatError, Dataset, SplitSpec, load_csv, split
from .mdp import DeciderProfile

OUT_DIR_ENV = "HEXRL_OUT_DIR"


class UsageError(Exception):
    """Bad flags, bad config, or missing inputs; exits with code 2."""


def _outpath(value) -> Path:
    path = Path(value)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text)


def _merge_options(args: argparse.Namespace, defaults: dict) -> dict:
    """Layer defaults < config file < explicit flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        file_options = _load_config_file(args.config)
        unknown = set(file_options) - set(defaults)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_options)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _int_list(text) -> tuple:
    return tuple(int(v) for v in str(text).split(","))


def _float_list(text) -> tuple:
    return tuple(float(v) for v in str(text).split(","))


def _str_list(text) -> tuple:
    return tuple(s.strip() for s in str(text).split(",") if s.strip())


def _load_dataset(options) -> Dataset:
    path = options["data"]
    if not path:
        raise UsageError("--data is required")
    if not Path(path).exists():
        raise UsageError(f"dataset file {path} does not exist")
    try:
        return load_csv(path, options["label"])
    except CsvFormatError as exc:
        raise UsageError(str(exc)) from exc


def _split_of(data: Dataset, options) -> Dataset:
    parts = dict(zip(("train", "validation", "test"),
                     split(data, SplitSpec(seed=options["split_seed"]))))
    name = options["use_split"]
    if name == "all":
        return data
    if name not in parts:
        raise UsageError(f"--use-split must be train/validation/test/all, got {name!r}")
    return parts[name]


def _load_model(path) -> ClassifierModel:
    if not Path(path).exists():
        raise UsageError(f"model file {path} does not exist")
    return ClassifierModel.load(path)


def _digest(options: dict) -> str:
    canon = json.dumps(options, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# --- train-classifier --------------------------------------------------------

TRAIN_DEFAULTS = {
    "data": None, "label": "label", "kind": "logistic_regression",
    "out": "model.json", "seed": 0, "split_seed": 0, "omega": 0.5,
    "max_epochs": 4000, "patience": 200, "learning_rate": 0.01,
    "batch_size": 64, "hidden_sizes": (3, 5, 10, 25, 50, 100),
    "max_depths": (5, 10, 30, 50), "tree_counts": (50, 100, 200, 400, 600),
    "kernels": ("linear", "rbf", "poly"), "svm_iterations": 0,
}


def cmd_train_classifier(args) -> int:
    options = _merge_options(args, TRAIN_DEFAULTS)
    data = _load_dataset(options)
    train, validation, test = split(data, SplitSpec(seed=options["split_seed"]))
    controls = TrainControls(
        omega=options["omega"], learning_rate=options["learning_rate"],
        batch_size=options["batch_size"], max_epochs=options["max_epochs"],
        patience=options["patience"],
        hidden_sizes=tuple(options["hidden_sizes"]),
        max_depths=tuple(options["max_depths"]),
        tree_counts=tuple(options["tree_counts"]),
        kernels=tuple(options["kernels"]),
        svm_iterations=options["svm_iterations"] or None)
    model = train_classifier(options["kind"], train, validation, controls,
                             seed=options["seed"])
    out = _outpath(options["out"])
    model.save(out)
    print(f"kind={options['kind']} saved={out}")
    for name, part in (("train", train), ("validation", validation),
                       ("test", test)):
        probs = model.predict_proba(part.features)
        acc = float(np.mean((probs >= model.omega).astype(int) == part.labels))
        try:
            auc = f"{auc_score(part.labels, probs):.6f}"
        except ValueError:
            auc = "n/a"
        print(f"{name}: accuracy={acc:.6f} auc={auc}")
    return 0


# --- synthesize --------------------------------------------------------------

SYNTH_DEFAULTS = {
    "data": None, "label": "label", "model": None,
    "out_policy": "policy.json", "out_curve": "curve.csv",
    "algorithm": "td3", "episodes": 1000, "inner_iterations": 300,
    "batch_size": 64, "window": 5, "selective": False, "smote": False,
    "decider": "", "seed": 0, "split_seed": 0, "use_split": "validation",
    "gamma": 0.99, "tau": 0.005, "sigma": 0.1, "hidden_units": 50,
    "curve_window": 40,
}


def _build_train_config(options, data: Dataset) -> drl.TrainConfig:
    profile = None
    if options["decider"]:
        if not Path(options["decider"]).exists():
            raise UsageError(f"decider profile {options['decider']} does not exist")
        profile = DeciderProfile.load(options["decider"],
                                      feature_names=data.feature_names)
    return drl.TrainConfig(
        episodes=options["episodes"],
        inner_iterations=options["inner_iterations"],
        batch_size=options["batch_size"],
        selective_window=options["window"],
        seed=options["seed"],
        hitl=profile,
        selective_buffering=bool(options["selective"]),
        smote=bool(options["smote"]),
        algorithm=options["algorithm"],
        gamma=options["gamma"], tau=options["tau"],
        exploration_sigma=options["sigma"],
        hidden_units=options["hidden_units"])


def cmd_synthesize(args) -> int:
    options = _merge_options(args, SYNTH_DEFAULTS)
    if not options["model"]:
        raise UsageError("--model is required")
    model = _load_model(options["model"])
    data = _split_of(_load_dataset(options), options)
    config = _build_train_config(options, data)
    policy, curve = drl.synthesize_policy(model, data, config)

    policy_path = _outpath(options["out_policy"])
    curve_path = _outpath(options["out_curve"])
    drl.save_policy(policy, policy_path, config_digest=_digest(options))
    evaluation.write_learning_curve(curve_path, curve.episode_rewards,
                                    window=options["curve_window"])
    print(f"policy={policy_path} curve={curve_path} "
          f"episodes={len(curve.episode_rewards)} steps={curve.total_steps} "
          f"hitl={int(config.hitl is not None)}")
    return 0


# --- explain -----------------------------------------------------------------

EXPLAIN_DEFAULTS = {
    "data": None, "label": "label", "model": None, "policy": "",
    "explainer": "policy", "out": "explanations.csv", "svg": "",
    "top_q": 5, "instances": 3, "rows": (), "seed": 0, "split_seed": 0,
    "use_split": "test", "grow_n_in_layer": 200, "grow_first_radius": 1.1,
    "grow_decrease_radius": 2.0,
}


def cmd_explain(args) -> int:
    options = _merge_options(args, EXPLAIN_DEFAULTS)
    if not options["model"]:
        raise UsageError("--model is required")
    model = _load_model(options["model"])
    data = _split_of(_load_dataset(options), options)
    if data.p != model.p:
        raise UsageError(f"dataset has {data.p} features, model expects {model.p}")

    if options["explainer"] == "policy":
        if not options["policy"]:
            raise UsageError("--policy is required for the policy explainer")
        if not Path(options["policy"]).exists():
            raise UsageError(f"policy file {options['policy']} does not exist")
        policy = drl.load_policy(options["policy"])
        if policy.p != model.p:
            raise UsageError(f"policy acts on {policy.p} features, "
                             f"model expects {model.p}")

        def explain_one(x, _i):
            return drl.explain(policy, x)
    elif options["explainer"] == "grow":
        grow = GrowConfig(n_in_layer=options["grow_n_in_layer"],
                          first_radius=options["grow_first_radius"],
                          decrease_radius=options["grow_decrease_radius"])

        def explain_one(x, i):
            return growing_spheres_explain(
                model, x, replace(grow, seed=evaluation.derive_seed(
                    options["seed"], "grow", i)))
    else:
        raise UsageError(f"--explainer must be policy or grow, "
                         f"got {options['explainer']!r}")

    rows = list(options["rows"]) or list(range(min(options["instances"], data.n)))
    q = min(options["top_q"], data.p)
    out_rows = []
    first_ranking = None
    for i in rows:
        if not 0 <= i < data.n:
            raise UsageError(f"row {i} out of range (n={data.n})")
        x = data.features[i]
        try:
            z, x_prime = explain_one(x, i)
            found = True
        except ExplanationNotFound:
            z, x_prime, found = np.zeros_like(x), x.copy(), False
        ranking = evaluation.explanation_ranking(z, data.feature_names, q)
        if first_ranking is None:
            first_ranking = (i, ranking)
        out_rows.append([
            i, int(found), repr(float(model.predict_proba(x_prime))),
            repr(evaluation.dbd(model, x_prime)),
            ";".join(f"{name}:{value:+.6f}" for name, value in ranking),
            " ".join(repr(float(v)) for v in z),
            " ".join(repr(float(v)) for v in x_prime),
        ])

    out = _outpath(options["out"])
    import csv as _csv
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["instance_id", "found", "probability", "dbd",
                         "ranking", "z", "x_prime"])
        writer.writerows(out_rows)
    print(f"explanations={out} instances={len(out_rows)}")

    if options["svg"] and first_ranking is not None:
        i, ranking = first_ranking
        svg_path = _outpath(options["svg"])
        evaluation.svg_bar_chart(ranking, svg_path,
                                 title=f"top-{q} explanation, instance {i}")
        print(f"chart={svg_path}")
    return 0


# --- evaluate ----------------------------------------------------------------

EVALUATE_DEFAULTS = {
    "data": None, "label": "label", "models": (), "explainers": ("hex-td3",),
    "scenario": "decider-free", "trials": 10, "uaps": (0.1, 0.5, 0.9),
    "test_instances": 100, "episodes": 1000, "inner_iterations": 300,
    "batch_size": 64, "window": 5, "seed": 0, "split_seed": 0,
    "use_split": "validation", "out_dir": "eval-out", "gamma": 0.99,
    "tau": 0.005, "sigma": 0.1, "hidden_units": 50,
}


def cmd_evaluate(args) -> int:
    options = _merge_options(args, EVALUATE_DEFAULTS)
    if not options["models"]:
        raise UsageError("--models is required (comma-separated model files)")
    models = {}
    for path in options["models"]:
        model = _load_model(path)
        models[Path(path).stem] = model

    data = _load_dataset(options)
    train_part = _split_of(data, options)
    _, _, test_part = split(data, SplitSpec(seed=options["split_seed"]))

    template = drl.TrainConfig(
        episodes=options["episodes"],
        inner_iterations=options["inner_iterations"],
        batch_size=options["batch_size"],
        selective_window=options["window"],
        gamma=options["gamma"], tau=options["tau"],
        exploration_sigma=options["sigma"],
        hidden_units=options["hidden_units"])
    config = evaluation.ScenarioConfig(
        train_data=train_part, test_data=test_part, train_template=template,
        trials=options["trials"], test_instances=options["test_instances"],
        uaps=tuple(options["uaps"]), seed=options["seed"])

    scenario = options["scenario"].replace("-", "_")
    reports = evaluation.run_scenario(scenario, models,
                                      list(options["explainers"]), config)
    summary = evaluation.summarize_reports(reports)

    out_dir = _outpath(options["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_records_csv(reports, out_dir / "records.csv")
    evaluation.write_aggregates_json(summary, out_dir / "aggregates.json")
    for row in summary:
        uap = "-" if row["uap"] is None else row["uap"]
        uep = "-" if row["mean_uep"] is None else f"{row['mean_uep']:.4f}"
        print(f"{row['scenario']} model={row['model']} "
              f"explainer={row['explainer']} uap={uap} "
              f"dbd={row['mean_dbd']:.4f} reward={row['mean_reward']:.4f} "
              f"uep={uep}")
    print(f"records={out_dir / 'records.csv'} "
          f"aggregates={out_dir / 'aggregates.json'}")
    return 0


# --- report ------------------------------------------------------------------

REPORT_DEFAULTS = {"curves": (), "svg": "curves.svg", "window": 40}


def cmd_report(args) -> int:
    options = _merge_options(args, REPORT_DEFAULTS)
    if not options["curves"]:
        raise UsageError("--curves is required (label=path or path, comma-separated)")
    series = {}
    for entry in options["curves"]:
        label, _, path = entry.rpartition("=")
        path = path or entry
        label = label or Path(path).stem
        if not Path(path).exists():
            raise UsageError(f"curve file {path} does not exist")
        raw, _ = evaluation.read_learning_curve(path)
        series[label] = evaluation.rolling_curve(raw, options["window"])
    svg_path = _outpath(options["svg"])
    evaluation.svg_line_chart(series, svg_path, title="learning curves",
                              y_label=f"reward (rolling {options['window']})")
    for label, smoothed in series.items():
        w = min(options["window"], len(smoothed))
        print(f"{label}: first-window={smoothed[w - 1]:.4f} "
              f"final={smoothed[-1]:.4f}")
    print(f"chart={svg_path}")
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexrl",
        description="explanation-producing policies for binary classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="TOML/JSON config file; flags win")
        p.add_argument("--data", help="input CSV (header row required)")
        p.add_argument("--label", help="label column name")
        p.add_argument("--seed", type=int)
        p.add_argument("--split-seed", dest="split_seed", type=int)

    p = sub.add_parser("train-classifier", help="fit one classifier family")
    add_common(p)
    p.add_argument("--kind", choices=("logistic_regression", "neural_net",
                                      "decision_tree", "random_forest", "svm"))
    p.add_argument("--out")
    p.add_argument("--omega", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--hidden-sizes", dest="hidden_sizes", type=_int_list)
    p.add_argument("--max-depths", dest="max_depths", type=_int_list)
    p.add_argument("--tree-counts", dest="tree_counts", type=_int_list)
    p.add_argument("--kernels", type=_str_list)
    p.add_argument("--svm-iterations", dest="svm_iterations", type=int)
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("synthesize", help="learn an explanation policy")
    add_common(p)
    p.add_argument("--model")
    p.add_argument("--out-policy", dest="out_policy")
    p.add_argument("--out-curve", dest="out_curve")
    p.add_argument("--algorithm", choices=("ddpg", "td3"))
    p.add_argument("--episodes", type=int)
    p.add_argument("--inner-iterations", dest="inner_iterations", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--selective", action="store_const", const=True)
    p.add_argument("--smote", action="store_const", const=True)
    p.add_argument("--decider", help="JSON array of trusted features")
    p.add_argument("--use-split", dest="use_split",
                   choices=("train", "validation", "test", "all"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--hidden-units", dest="hidden_units", type=int)
    p.add_argument("--curve-window", dest="curve_window", type=int)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("explain", help="explain instances with a policy or grow")
    add_common(p)
    p.add_argument("--model")
    p.add_argument("--policy")
    p.add_argument("--explainer", choices=("policy", "grow"))
    p.add_argument("--out")
    p.add_argument("--svg")
    p.add_argument("--top-q", dest="top_q", type=int)
    p.add_argument("--instances", type=int)
    p.add_argument("--rows", type=_int_list)
    p.add_argument("--use-split", dest="use_split",
                   choices=("train", "validation", "test", "all"))
    p.add_argument("--grow-n-in-layer", dest="grow_n_in_layer", type=int)
    p.add_argument("--grow-first-radius", dest="grow_first_radius", type=float)
    p.add_argument("--grow-decrease-radius", dest="grow_decrease_radius",
                   type=float)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="run a scenario matrix")
    add_common(p)
    p.add_argument("--models", type=_str_list)
    p.add_argument("--explainers", type=_str_list)
    p.add_argument("--scenario", choices=("decider-free", "hitl"))
    p.add_argument("--trials", type=int)
    p.add_argument("--uaps", type=_float_list)
    p.add_argument("--test-instances", dest="test_instances", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--inner-iterations", dest="inner_iterations", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--use-split", dest="use_split",
                   choices=("train", "validation", "test", "all"))
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--hidden-units", dest="hidden_units", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render learning-curve charts")
    p.add_argument("--config", help="TOML/JSON config file; flags win")
    p.add_argument("--curves", type=_str_list)
    p.add_argument("--svg")
    p.add_argument("--window", type=int)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report, exit 1
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
