"""``percept-lab`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..clipcore import load_clip, save_clip
from ..encoders import CONFIGS, TrainHyper, pretrain, save_weights
from ..errors import ConfigurationError, FormatError, PerceptLabError, UsageError
from ..renderer import SetupTag, render_trajectory
from ..reward import reward_profile, write_profile_csv
from ..simworld.arm import ARM_VARIANTS
from ..simworld.demos import scripted_demo
from ..simworld.tasks import default_task, rollout, write_trajectory_csv
from .config import ConfigReader, load_config, parse_config, read_controls, write_controls
from .dataset import DatasetSpec, build_synthetic_dataset, load_dataset, save_dataset
from .experiment import (
    experiment_config_from,
    make_encoder,
    read_rows,
    records_from_traces,
    run_experiment,
    write_rows,
)
from .plots import write_line_plot
from .stats import correlate_table, format_table, write_correlation_csv

PLAIN_KEYS = {
    "task", "tasks", "setup", "setups", "encoder", "learner", "seeds", "encoder_config", "weights",
    "output_dir", "arm", "morph_arm",
}
SECTIONS = ("sto.", "episodic.", "style.", "dataset.", "pretrain.", "profile.", "replay.", "v2.", "baseline1.",
            "results.")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (key = value lines)")
    common.add_argument("--seed", type=int, help="override every seed the command uses")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser = _Parser(prog="percept-lab", description="Perceptual-reward learning from one video demonstration.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "dataset": "render the synthetic activity dataset",
        "pretrain": "pretrain the activity encoder, write a weight file",
        "demo": "render a scripted demonstration",
        "learn": "run the experiment matrix, write results.csv",
        "correlate": "reward/completion correlation table",
        "profile": "sliding-window reward profile between two clips",
        "replay": "render a saved control sequence",
    }
    for name, text in helps.items():
        aliases = ["render"] if name == "replay" else []
        sub.add_parser(name, parents=[common], help=text, description=text, aliases=aliases)
    return parser


def _reader(args) -> ConfigReader:
    if args.config:
        values = load_config(args.config)
        base_dir = Path(args.config).resolve().parent
    else:
        values, base_dir = {}, Path.cwd()
    for item in args.set:
        extra = parse_config(item, "--set")
        if not extra:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        values.update(extra)
    if args.seed is not None:
        values["seeds"] = str(args.seed)
        for key in ("dataset.seed", "pretrain.seed"):
            values[key] = str(args.seed)
    for key in values:
        if key not in PLAIN_KEYS and not key.startswith(SECTIONS):
            raise ConfigurationError(f"unknown config key {key!r}")
    return ConfigReader(values, base_dir)


def _out(reader: ConfigReader) -> Path:
    return reader.path("output_dir", "out")


def _dataset_spec(reader: ConfigReader) -> DatasetSpec:
    enc = CONFIGS[reader.str("encoder_config", "desk")]() if reader.str("encoder_config", "desk") in CONFIGS else None
    if enc is None:
        raise ConfigurationError(f"unknown encoder_config {reader.str('encoder_config')!r}")
    return DatasetSpec(per_class=reader.int("dataset.per_class", 40), height=enc.input_h, width=enc.input_w,
                       n_frames=enc.input_frames, seed=reader.int("dataset.seed", 0),
                       morph_fraction=reader.float("dataset.morph_fraction", 0.3))


def cmd_dataset(reader: ConfigReader) -> str:
    target = reader.path("dataset.dir") or _out(reader) / "dataset"
    ds = build_synthetic_dataset(_dataset_spec(reader))
    save_dataset(ds, target)
    return f"wrote {len(ds)} clips to {target}"


def cmd_pretrain(reader: ConfigReader) -> str:
    enc_name = reader.str("encoder_config", "desk")
    if enc_name not in CONFIGS:
        raise ConfigurationError(f"unknown encoder_config {enc_name!r}")
    config = CONFIGS[enc_name]()
    src = reader.path("dataset.dir")
    if src is not None:
        if not src.exists():
            raise ConfigurationError(f"dataset directory not found: {src}")
        ds = load_dataset(src)
    else:
        ds = build_synthetic_dataset(_dataset_spec(reader))
    d = TrainHyper()
    hyper = TrainHyper(lr=reader.float("pretrain.lr", d.lr), epochs=reader.int("pretrain.epochs", d.epochs),
                       batch=reader.int("pretrain.batch", d.batch), seed=reader.int("pretrain.seed", d.seed),
                       momentum=reader.float("pretrain.momentum", d.momentum),
                       weight_decay=reader.float("pretrain.weight_decay", d.weight_decay))
    result = pretrain(ds, config, hyper)
    out = _out(reader)
    weights_path = reader.path("weights") or out / "weights.oslw"
    save_weights(result.weights, weights_path)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "pretrain_trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "accuracy"])
        for i, (loss, acc) in enumerate(zip(result.loss_trace, result.accuracy_trace)):
            w.writerow([i, repr(float(loss)), repr(float(acc))])
    write_line_plot(out / "pretrain_loss.svg", {"loss": list(result.loss_trace)}, title="pretraining loss",
                    xlabel="epoch", ylabel="cross-entropy")
    return f"wrote {weights_path} (final loss {result.loss_trace[-1]:.4f})"


def cmd_demo(reader: ConfigReader) -> str:
    cfg = experiment_config_from(reader)
    arm = ARM_VARIANTS[cfg.arm]
    task = default_task(cfg.task)
    seed = cfg.seeds[0]
    controls = scripted_demo(task, arm, seed)
    traj = rollout(task, controls, arm)
    out = _out(reader) / "demo" / cfg.task
    clip = render_trajectory(traj, arm, cfg.style, 16, zone=(task.zone_center, task.zone_radius))
    save_clip(clip, out / "clip")
    write_controls(out / "controls.txt", controls, {"task": cfg.task, "arm": cfg.arm})
    write_trajectory_csv(traj, out / "trajectory.csv")
    return f"wrote demonstration of {cfg.task} to {out}"


def _cells(reader: ConfigReader):
    tasks = reader.list("tasks", None) or [reader.str("task", "reach")]
    setups = reader.list("setups", None) or [reader.str("setup", "V1")]
    return [(t, s) for t in tasks for s in setups]


def cmd_learn(reader: ConfigReader) -> str:
    out = _out(reader)
    configs = [experiment_config_from(reader, task, setup) for task, setup in _cells(reader)]
    encoder = make_encoder(configs[0])
    summary, traces = [], []
    for cfg in configs:
        record = run_experiment(cfg, encoder)
        # each cell writes its own files; results.csv is the serial merge below
        write_rows(out / "cells" / f"{cfg.label}.csv", record.summary_rows())
        write_rows(out / "cells" / f"{cfg.label}_traces.csv", record.trace_rows())
        for run in record.runs:
            write_controls(out / "controls" / f"{cfg.label}_seed{run.seed}.txt", run.best_controls,
                           {"task": cfg.task, "arm": cfg.arm, "setup": cfg.setup.value})
        write_line_plot(out / "plots" / f"{cfg.label}_cost.svg",
                        {f"seed {r.seed}": r.cost_trace for r in record.runs},
                        title=f"{cfg.task} {cfg.setup.value} cost", xlabel=
                        "iteration" if cfg.learner == "sto" else "episode", ylabel="cost")
        summary += record.summary_rows()
        traces += record.trace_rows()
    write_rows(out / "results.csv", summary)
    write_rows(out / "traces.csv", traces)
    return f"wrote {len(summary)} result rows to {out / 'results.csv'}"


def cmd_correlate(reader: ConfigReader) -> str:
    out = _out(reader)
    src = reader.path("results.traces") or out / "traces.csv"
    cells = correlate_table(records_from_traces(read_rows(src)))
    write_correlation_csv(cells, out / "correlation_table.csv")
    return format_table(cells)


def cmd_profile(reader: ConfigReader) -> str:
    demo_dir, trial_dir = reader.path("profile.demo"), reader.path("profile.trial")
    if demo_dir is None or trial_dir is None:
        raise ConfigurationError("profile needs 'profile.demo' and 'profile.trial' clip directories")
    for p in (demo_dir, trial_dir):
        if not p.exists():
            raise ConfigurationError(f"clip directory not found: {p}")
    cfg = experiment_config_from(reader)
    encoder = make_encoder(cfg)
    window = reader.int("profile.window", 16)
    stride = reader.int("profile.stride", 1)
    values = reward_profile(load_clip(demo_dir), load_clip(trial_dir), encoder, window, stride)
    out = _out(reader)
    write_profile_csv(values, out / "profile.csv", stride)
    write_line_plot(out / "profile.svg", {"reward": values}, title="reward profile", xlabel="window",
                    ylabel="reward")
    return f"wrote {len(values)} windows to {out / 'profile.csv'}"


def cmd_replay(reader: ConfigReader) -> str:
    src = reader.path("replay.controls")
    if src is None:
        raise ConfigurationError("replay needs 'replay.controls = <file>'")
    controls, meta = read_controls(src)
    cfg = experiment_config_from(reader, meta.get("task"), meta.get("setup"))
    arm = ARM_VARIANTS[meta.get("arm", cfg.arm)]
    if controls.shape[1] != arm.dof:
        raise ConfigurationError(f"{src} has {controls.shape[1]} joints per control, {arm.name} has {arm.dof}")
    task = default_task(cfg.task)
    traj = rollout(task, controls, arm)
    out = _out(reader) / "replay"
    n = reader.int("replay.frames", 16)
    clip = render_trajectory(traj, arm, cfg.style, n, zone=(task.zone_center, task.zone_radius))
    save_clip(clip, out / "clip")
    write_trajectory_csv(traj, out / "trajectory.csv")
    return f"rendered {len(controls)} controls to {out}"


COMMANDS = {
    "dataset": cmd_dataset, "pretrain": cmd_pretrain, "demo": cmd_demo, "learn": cmd_learn,
    "correlate": cmd_correlate, "profile": cmd_profile, "replay": cmd_replay, "render": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(f"a command is required\n\n{parser.format_help()}")
        reader = _reader(args)
        message = COMMANDS[args.command](reader)
    except SystemExit as exc:          # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigurationError, FormatError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (PerceptLabError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())
