"""Command-line operator surface: generate, train, eval, report.

Exit codes: 0 success, 2 validation/configuration error, 3 numeric
divergence during training. Output CSVs start with one comment line
echoing the semantically relevant arguments (seeds, configs, policy
names; never filesystem paths), so reruns with identical seeds produce
byte-identical files regardless of where they are written.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import baselines, datastore, synthgen
from .agent import (
    DivergenceError,
    GreedyPolicy,
    atom_support,
    load_checkpoint,
    save_checkpoint,
    schedule_from_json,
    train,
)
from .datastore import Dataset, DatasetError, load_dataset
from .env import EnvConfig, SchedulingEnv
from .evaluation import METRIC_KEYS, FrameApCache, PolicyEvaluation, evaluate_policy
from .metrics import IouThresholdSpec
from .synthgen import ScenarioError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3

_METRIC_COLUMNS = {"ap@0.7": "ap_0.7", "ap@0.5": "ap_0.5", "ap@0.5:0.95": "ap_0.5:0.95"}


def _fmt(value: float) -> str:
    return format(value, ".6f")


def _portfolio_cell(detector_ids) -> str:
    return "+".join(detector_ids)


def _resolve_portfolio(dataset: Dataset, portfolio: str | None):
    if portfolio is None:
        return dataset.detectors
    ids = [p.strip() for p in portfolio.split(",") if p.strip()]
    by_id = {d.detector_id: d for d in dataset.detectors}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise DatasetError(f"portfolio references unknown detectors: {missing}")
    if len(set(ids)) != len(ids):
        raise DatasetError("portfolio lists a detector twice")
    return tuple(by_id[i] for i in ids)


def _echo_line(command: str, **kv) -> str:
    parts = [f"# detsched {command}"]
    parts += [f"{k}={v}" for k, v in kv.items()]
    return " ".join(parts)


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    config = synthgen.load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else config.master_seed
    summary = synthgen.generate_dataset(config, args.out_dir, seed)
    print(_echo_line("generate", scenario=config.name, seed=seed))
    print(
        "dataset: {sequences} sequences ({train_sequences} train / "
        "{test_sequences} test), {frames} frames, {detectors} detectors, "
        "{prediction_records} prediction records".format(**summary)
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    detectors = _resolve_portfolio(dataset, args.portfolio)
    if len(detectors) < 2:
        raise DatasetError("training needs a portfolio of at least two detectors")
    schedule = schedule_from_json(json.loads(Path(args.config).read_text(encoding="utf-8")))
    reward_iou = IouThresholdSpec.parse(args.iou)
    env = SchedulingEnv(
        dataset,
        EnvConfig(
            detectors=detectors,
            reward_iou=reward_iou,
            split=datastore.SPLIT_TRAIN,
            include_held_age=args.observe_held_age,
        ),
    )
    train_ids = dataset.train_sequence_ids
    if not train_ids:
        raise DatasetError("dataset has no training sequences")

    result = train(env, train_ids, schedule, args.seed)

    out = Path(args.out)
    metadata = {
        "detector_ids": [d.detector_id for d in detectors],
        "reward_iou": reward_iou.label(),
        "seed": args.seed,
        "include_held_age": args.observe_held_age,
        "config_name": Path(args.config).stem,
        "total_steps": schedule.total_steps,
    }
    save_checkpoint(out, result.approximator, metadata)

    log_path = Path(args.log) if args.log else out.with_suffix(out.suffix + ".log.csv")
    with open(log_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            _echo_line(
                "train",
                split="train",
                variant=datastore.HOLDOUT,
                seed=args.seed,
                config=Path(args.config).stem,
                iou=reward_iou.label(),
                portfolio=_portfolio_cell(metadata["detector_ids"]),
            )
            + "\n"
        )
        writer = csv.writer(fh)
        writer.writerow(["step", "epsilon", "loss", "mean_return_last_100"])
        for row in result.log:
            writer.writerow(
                [row.step, _fmt(row.epsilon), _fmt(row.loss), _fmt(row.mean_return_last_100)]
            )
    episodes = len(result.episode_returns)
    recent = result.episode_returns[-100:]
    mean_recent = sum(recent) / len(recent) if recent else float("nan")
    print(_echo_line("train", seed=args.seed, config=Path(args.config).stem,
                     iou=reward_iou.label(),
                     portfolio=_portfolio_cell(metadata["detector_ids"])))
    print(
        f"trained {schedule.total_steps} steps over {episodes} episodes; "
        f"mean return of last 100 episodes: {mean_recent:.3f}"
    )
    print(f"checkpoint: {out}")
    print(f"log: {log_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _default_lighting_actions(detectors) -> tuple[int, int]:
    lidar = [i for i, d in enumerate(detectors) if d.modality == "lidar"]
    rgb = [i for i, d in enumerate(detectors) if d.modality == "rgb"]
    if not lidar or not rgb:
        raise DatasetError(
            "cannot infer lighting actions; pass --dark and --bright detector ids"
        )
    dark = min(lidar, key=lambda i: detectors[i].latency_frames)
    bright = max(rgb, key=lambda i: detectors[i].latency_frames)
    return dark, bright


def _action_index(detectors, detector_id: str) -> int:
    for i, d in enumerate(detectors):
        if d.detector_id == detector_id:
            return i
    raise DatasetError(f"detector {detector_id!r} not in the portfolio")


def _build_eval_policy(args, env, detectors, seed):
    """Returns (name, policy) for --baseline / --checkpoint arguments."""
    if args.checkpoint:
        approximator, metadata = load_checkpoint(args.checkpoint)
        if approximator.spec.n_actions != env.action_count:
            raise DatasetError(
                f"checkpoint was trained on {approximator.spec.n_actions} detectors, "
                f"portfolio has {env.action_count}"
            )
        atoms = atom_support(
            approximator.spec.n_atoms, approximator.spec.v_min, approximator.spec.v_max
        )
        return "learned", GreedyPolicy(approximator, atoms, env.state_features)
    spec = args.baseline
    excluded = [e.strip() for e in (args.exclude or "").split(",") if e.strip()]
    suffix = "".join(f"-wo-{e}" for e in excluded)
    if spec.startswith("fixed:"):
        detector_id = spec.split(":", 1)[1]
        return spec, baselines.FixedPolicy(_action_index(detectors, detector_id))
    if spec == "random":
        allowed = [
            i for i, d in enumerate(detectors) if d.detector_id not in excluded
        ]
        if not allowed:
            raise DatasetError("all actions excluded for the random baseline")
        return f"random{suffix}", baselines.RandomPolicy(allowed, seed)
    if spec == "alternating":
        order = [i for i, d in enumerate(detectors) if d.detector_id not in excluded]
        if not order:
            raise DatasetError("all actions excluded for the alternating baseline")
        return f"alternating{suffix}", baselines.AlternatingPolicy(order)
    if spec == "lighting":
        if args.dark:
            dark = _action_index(detectors, args.dark)
        else:
            dark = _default_lighting_actions(detectors)[0]
        if args.bright:
            bright = _action_index(detectors, args.bright)
        else:
            bright = _default_lighting_actions(detectors)[1]
        if args.threshold is None:
            raise DatasetError("lighting baseline needs --threshold or --sweep")
        return (
            f"lighting@{args.threshold:g}",
            baselines.LightingHeuristicPolicy(args.threshold, dark, bright),
        )
    raise DatasetError(f"unknown baseline {spec!r}")


def _write_eval_csv(path: Path, echo: str, rows, all_detector_ids) -> None:
    usage_columns = [f"usage_{d}" for d in all_detector_ids]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(echo + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["policy", "portfolio"]
            + [_METRIC_COLUMNS[k] for k in METRIC_KEYS]
            + ["decisions", "frames"]
            + usage_columns
        )
        for ev in rows:
            usage_pct = ev.usage_percentages()
            writer.writerow(
                [ev.name, _portfolio_cell(ev.portfolio)]
                + [_fmt(ev.metrics[k]) for k in METRIC_KEYS]
                + [ev.decision_count, ev.frame_count]
                + [format(usage_pct.get(d, 0.0), ".2f") for d in all_detector_ids]
            )


def cmd_eval(args) -> int:
    if bool(args.checkpoint) == bool(args.baseline):
        raise DatasetError("pass exactly one of --checkpoint or --baseline")
    dataset = load_dataset(args.dataset)

    if args.checkpoint:
        _, metadata = load_checkpoint(args.checkpoint)
        portfolio_arg = args.portfolio or ",".join(metadata["detector_ids"])
        include_held_age = bool(metadata.get("include_held_age", False))
    else:
        portfolio_arg = args.portfolio
        include_held_age = False
    detectors = _resolve_portfolio(dataset, portfolio_arg)

    env = SchedulingEnv(
        dataset,
        EnvConfig(
            detectors=detectors,
            reward_iou=IouThresholdSpec.single(0.5),  # stepping only; metrics below
            split=datastore.SPLIT_TEST,
            include_held_age=include_held_age,
        ),
    )
    test_ids = dataset.test_sequence_ids
    if not test_ids:
        raise DatasetError("dataset has no test sequences")
    cache = FrameApCache(env)

    out = Path(args.out)
    all_ids = [d.detector_id for d in dataset.detectors]
    rows = []
    echo_kv = dict(seed=args.seed, portfolio=_portfolio_cell(d.detector_id for d in detectors))

    if args.baseline == "lighting" and args.sweep:
        dark = _action_index(detectors, args.dark) if args.dark else _default_lighting_actions(detectors)[0]
        bright = _action_index(detectors, args.bright) if args.bright else _default_lighting_actions(detectors)[1]
        sweep_rows, best = baselines.sweep_lighting_thresholds(
            env, test_ids, dark, bright, cache
        )
        sweep_path = out.with_name(out.stem + "_sweep" + out.suffix)
        with open(sweep_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(_echo_line("eval", baseline="lighting", sweep=True, **echo_kv) + "\n")
            writer = csv.writer(fh)
            writer.writerow(["threshold"] + [_METRIC_COLUMNS[k] for k in METRIC_KEYS])
            for threshold, metrics in sweep_rows:
                writer.writerow([_fmt(threshold)] + [_fmt(metrics[k]) for k in METRIC_KEYS])
        # Summary row: the per-metric best over the grid (fitted on the
        # evaluation split, i.e. an oracle for the lighting signal alone).
        summary = PolicyEvaluation(
            name="lighting",
            portfolio=tuple(d.detector_id for d in detectors),
            frame_count=0,
            decision_count=0,
            metrics={k: best[k][1] for k in METRIC_KEYS},
            usage_counts={},
        )
        rows.append(summary)
        echo = _echo_line("eval", baseline="lighting", sweep=True, **echo_kv)
        _write_eval_csv(out, echo, rows, all_ids)
        print(echo)
        for k in METRIC_KEYS:
            print(f"best {k}: {best[k][1]:.6f} at threshold {best[k][0]:.2f}")
        print(f"sweep table: {sweep_path}")
        print(f"report: {out}")
        return EXIT_OK

    name, policy = _build_eval_policy(args, env, detectors, args.seed)
    evaluation = evaluate_policy(env, policy, test_ids, name, cache)
    rows.append(evaluation)
    echo = _echo_line("eval", policy=name, **echo_kv)
    _write_eval_csv(out, echo, rows, all_ids)
    print(echo)
    metrics = " ".join(f"{k}={evaluation.metrics[k]:.6f}" for k in METRIC_KEYS)
    print(f"{name}: {metrics} over {evaluation.frame_count} frames")
    usage = evaluation.usage_percentages()
    print("usage: " + " ".join(f"{d}={usage.get(d, 0.0):.2f}%" for d in all_ids))
    print(f"report: {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _read_eval_rows(path: Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def cmd_report(args) -> int:
    rows: list[dict] = []
    for path in args.inputs:
        rows.extend(_read_eval_rows(Path(path)))
    if args.portfolio:
        wanted = set(p.strip() for p in args.portfolio.split(",") if p.strip())
        rows = [r for r in rows if set(r["portfolio"].split("+")) == wanted]
    if not rows:
        raise DatasetError("no rows to report (check inputs and --portfolio)")
    metric_cols = [_METRIC_COLUMNS[k] for k in METRIC_KEYS]
    best = {col: max(float(r[col]) for r in rows) for col in metric_cols}
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(_echo_line("report", rows=len(rows)) + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["policy", "portfolio"]
            + metric_cols
            + [f"best_{c}" for c in metric_cols]
        )
        for r in rows:
            writer.writerow(
                [r["policy"], r["portfolio"]]
                + [r[c] for c in metric_cols]
                + [int(float(r[c]) == best[c]) for c in metric_cols]
            )
    print(_echo_line("report", rows=len(rows)))
    width = max(len(r["policy"]) for r in rows)
    for r in rows:
        flags = "".join("*" if float(r[c]) == best[c] else " " for c in metric_cols)
        print(f"{r['policy']:<{width}}  " + "  ".join(r[c] for c in metric_cols) + f"  {flags}")
    print(f"report: {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detsched",
        description="Latency-aware detector scheduling: data generation, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset from a scenario config")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("out_dir", help="output dataset directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario master seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the scheduling agent on the train split")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--config", required=True, help="schedule config JSON")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--log", default=None, help="training log CSV (default: <out>.log.csv)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iou", default="0.5", help="reward IoU spec: 0.5 | 0.7 | coco")
    p.add_argument("--portfolio", default=None, help="comma-separated detector ids")
    p.add_argument("--observe-held-age", action="store_true",
                   help="append held-prediction age to the observation")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or baseline on the test split")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--baseline", default=None,
                   help="fixed:<id> | random | alternating | lighting")
    p.add_argument("--exclude", default=None, help="detector ids excluded from random/alternating")
    p.add_argument("--threshold", type=float, default=None, help="lighting threshold (0..255)")
    p.add_argument("--dark", default=None, help="lighting: detector id used below the threshold")
    p.add_argument("--bright", default=None, help="lighting: detector id used at/above the threshold")
    p.add_argument("--sweep", action="store_true", help="sweep the ten lighting thresholds")
    p.add_argument("--portfolio", default=None, help="comma-separated detector ids")
    p.add_argument("--iou", default="0.5", help="kept for symmetry; all metric columns are always emitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="evaluation CSV output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge evaluation CSVs into one comparison table")
    p.add_argument("inputs", nargs="+", help="evaluation CSV files")
    p.add_argument("--out", required=True)
    p.add_argument("--portfolio", default=None, help="keep only rows for this portfolio")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
