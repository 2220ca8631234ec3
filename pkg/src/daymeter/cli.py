"""Command-line interface: simulate, train, decode, score, evaluate.

Every command is deterministic given --seed, orders its outputs by day then
frame index, and exits nonzero with a one-line JSON error on stderr when an
input file is malformed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .activities import ActivityLabel, DayLog, FrameRecord, MissingLabelError
from .config import RunConfig
from .fluents import analyze_day, fluent_trace
from .inference import build_training_windows, decode_day, resolve_input_mode
from .io import (
    load_model,
    read_frames_jsonl,
    save_model,
    write_fluents_csv,
    write_frames_jsonl,
    write_json,
)
from .metrics import (
    GROUP_NAMES,
    LABEL_NAMES,
    collapse_to_groups,
    confusion,
    macro_metrics,
    metrics_table,
    per_class_table,
)
from .nn import BilstmCrfModel
from .simulate import (
    RNG_ALGORITHM,
    ScheduleSpec,
    TEMPLATES,
    generate_day,
    template_spec,
)
from .training import TrainOptions, TrainingDivergedError, fit


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "window", None) is not None:
        config.window = args.window
    if getattr(args, "mode", None) is not None:
        config.decode_mode = args.mode
    return config


def _parse_schedule(obj: dict, seed: int) -> ScheduleSpec:
    if not isinstance(obj, dict) or "blocks" not in obj:
        raise ValueError("schedule spec must be an object with a 'blocks' list")
    blocks = tuple(
        (ActivityLabel.from_key(name), float(minutes)) for name, minutes in obj["blocks"]
    )
    kwargs = {}
    for key in (
        "margin", "noise_sigma", "feature_mode", "scene_dim", "object_dim",
        "proposals_per_frame", "feature_noise", "center_scale",
    ):
        if key in obj:
            kwargs[key] = obj[key]
    if "fill_activity" in obj:
        kwargs["fill_activity"] = ActivityLabel.from_key(obj["fill_activity"])
    return ScheduleSpec(blocks=blocks, seed=obj.get("seed", seed), **kwargs)


def cmd_simulate(args) -> int:
    config = _load_config(args)
    if (args.spec is None) == (args.template is None):
        raise ValueError("simulate needs exactly one of --spec or --template")
    if args.template is not None:
        specs = [template_spec(args.template, seed=config.seed)] * args.days
        source = {"template": args.template}
    else:
        with open(args.spec, encoding="utf-8") as fh:
            obj = json.load(fh)
        if isinstance(obj, dict) and "days" in obj:
            specs = [_parse_schedule(d, config.seed) for d in obj["days"]]
        else:
            specs = [_parse_schedule(obj, config.seed)] * args.days
        source = {"spec_file": os.path.basename(args.spec)}
    logs = [
        generate_day(
            spec,
            day_id=d + 1,
            frame_interval_s=config.frame_interval_s,
            day_start_s=config.day_start_s,
            day_end_s=config.day_end_s,
        )
        for d, spec in enumerate(specs)
    ]
    write_frames_jsonl(args.output, logs)
    write_json(
        args.output + ".meta.json",
        {"generator": RNG_ALGORITHM, "seed": config.seed, "days": len(logs), **source},
    )
    print(f"wrote {sum(len(l) for l in logs)} frames over {len(logs)} day(s) to {args.output}")
    return 0


def _model_dims(logs: list[DayLog], mode: str) -> tuple[int, int]:
    if mode != "features":
        return 1, 1
    scene_dim = len(logs[0].frames[0].scene_feat)
    object_dim = 1
    for log in logs:
        for f in log.frames:
            if f.object_feats:
                object_dim = len(f.object_feats[0])
                return scene_dim, object_dim
    return scene_dim, object_dim


def cmd_train(args) -> int:
    config = _load_config(args)
    logs = read_frames_jsonl(args.input, config.frame_interval_s, config.day_start_s)
    windows = build_training_windows(logs, config.window)
    mode = resolve_input_mode(logs[0].frames, config.input_mode)
    scene_dim, object_dim = _model_dims(logs, mode)
    model = BilstmCrfModel.create(
        scene_dim=scene_dim,
        object_dim=object_dim,
        hidden_dim=config.hidden_dim,
        fc1_out=config.fc1_out,
        fc2_out=config.fc2_out,
        fc3_out=config.fc3_out,
        seed=config.seed,
        transition_priors=config.resolved_transition_priors(),
    )
    opts = TrainOptions(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        batch_size=config.batch_size,
        seed=config.seed,
    )
    trace = fit(
        model,
        windows,
        opts,
        log_fn=lambda epoch, loss: print(f"epoch {epoch + 1}: loss {loss:.6f}"),
    )
    save_model(args.output, model)
    print(
        f"trained on {trace.n_windows} windows ({trace.input_mode}), "
        f"final loss {trace.final_loss:.6f}, model saved to {args.output}"
    )
    return 0


def cmd_decode(args) -> int:
    config = _load_config(args)
    logs = read_frames_jsonl(args.input, config.frame_interval_s, config.day_start_s)
    model = load_model(args.model)
    out_logs = []
    for log in logs:
        labels = decode_day(
            model,
            log,
            window_len=config.window,
            decode_mode=config.decode_mode,
            input_mode=config.input_mode,
        )
        out_logs.append(
            DayLog(
                log.day_id,
                [
                    FrameRecord(day_id=log.day_id, idx=i, activity=a)
                    for i, a in enumerate(labels)
                ],
                log.frame_interval_s,
                log.day_start_s,
            )
        )
    write_frames_jsonl(args.output, out_logs)
    print(f"decoded {sum(len(l) for l in out_logs)} frames to {args.output}")
    return 0


def cmd_score(args) -> int:
    config = _load_config(args)
    logs = read_frames_jsonl(args.input, config.frame_interval_s, config.day_start_s)
    params = config.fluent_params()
    gmap = config.resolved_group_map()
    os.makedirs(args.output, exist_ok=True)
    traces = []
    for log in logs:
        trace = fluent_trace(log, params)
        traces.append(trace)
        report = analyze_day(
            log, params, gmap, script_min_duration_s=config.script_min_duration_s
        )
        write_json(os.path.join(args.output, f"report_day{log.day_id}.json"),
                   report.to_dict())
        with open(
            os.path.join(args.output, f"script_day{log.day_id}.txt"),
            "w",
            encoding="utf-8",
        ) as fh:
            fh.write(report.script + "\n")
        print(f"day {log.day_id}: lifestyle {report.lifestyle_score:.4f}")
    write_fluents_csv(os.path.join(args.output, "fluents.csv"), traces)
    return 0


def _metrics_obj(m, cm, names) -> dict:
    return {
        "names": names,
        "confusion": [[int(v) for v in row] for row in cm],
        "accuracy": m.accuracy,
        "macro_precision": m.macro_precision,
        "macro_recall": m.macro_recall,
        "macro_f1": m.macro_f1,
        "macro_f1_from_means": m.macro_f1_from_means,
        "per_class": {
            name: {
                "precision": float(m.precision[i]),
                "recall": float(m.recall[i]),
                "f1": float(m.f1[i]),
            }
            for i, name in enumerate(names)
        },
    }


def _pooled_codes(logs: list[DayLog]) -> np.ndarray:
    return np.array([a.value for log in logs for a in log.labels()], dtype=int)


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    pred_logs = read_frames_jsonl(args.input, config.frame_interval_s, config.day_start_s)
    truth_logs = read_frames_jsonl(args.truth, config.frame_interval_s, config.day_start_s)
    pred_days = {l.day_id: len(l) for l in pred_logs}
    truth_days = {l.day_id: len(l) for l in truth_logs}
    if pred_days != truth_days:
        raise ValueError(
            f"prediction/truth days do not align: {pred_days} vs {truth_days}"
        )
    preds = _pooled_codes(pred_logs)
    truth = _pooled_codes(truth_logs)
    gmap = config.resolved_group_map()
    cm = confusion(preds, truth, len(ActivityLabel))
    m = macro_metrics(cm)
    cm_groups = collapse_to_groups(cm, gmap)
    m_groups = macro_metrics(cm_groups)
    write_json(
        args.output,
        {
            "labels": _metrics_obj(m, cm, LABEL_NAMES),
            "groups": _metrics_obj(m_groups, cm_groups, GROUP_NAMES),
        },
    )
    print(metrics_table(m, "labels"))
    print(metrics_table(m_groups, "groups"))
    print()
    print(per_class_table(m, LABEL_NAMES))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daymeter",
        description="Label lifelog frame streams and score daily lifestyle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic labeled days")
    p.add_argument("--spec", help="schedule spec JSON file")
    p.add_argument("--template", choices=sorted(TEMPLATES), help="shipped day template")
    p.add_argument("--days", type=int, default=1, help="replicate the spec over N days")
    p.add_argument("--output", required=True, help="frames.jsonl to write")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit the model on labeled frames")
    p.add_argument("--input", required=True, help="frames.jsonl with labels")
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="predict per-frame activities")
    p.add_argument("--input", required=True, help="frames.jsonl with emissions/features")
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True, help="predictions jsonl to write")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--mode", choices=["window", "whole-day"])
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="fluent traces and lifestyle reports")
    p.add_argument("--input", required=True, help="frames.jsonl with labels")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="confusion matrices and macro metrics")
    p.add_argument("--input", required=True, help="predictions jsonl")
    p.add_argument("--truth", required=True, help="ground-truth jsonl")
    p.add_argument("--output", required=True, help="metrics JSON to write")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, MissingLabelError, TrainingDivergedError,
            json.JSONDecodeError) as e:
        print(
            json.dumps({"error": type(e).__name__, "message": str(e)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
