"""File formats: frames.jsonl, the binary model file, and report writers.

frames.jsonl holds one JSON object per frame:

    {"day": int, "idx": int, "activity": str|null, "emissions": [12 floats]|null,
     "scene_feat": [floats]|null, "object_feats": [[floats]]|null}

ordered by day then idx.  The model file is binary: an 8-byte magic, a
uint32 format version, a JSON metadata blob, then named tensors with
explicit shapes and float64 little-endian payloads, so a save/load round
trip is bit-exact.  All writers are deterministic: same inputs, same bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import fields as dataclass_fields

import numpy as np

from .activities import (
    ActivityLabel,
    DayLog,
    FrameRecord,
)
from .fluents import FluentTrace
from .nn import BilstmCrfModel, DenseLayer, FusionHeadParams, LstmCellParams

FRAME_KEYS = ("day", "idx", "activity", "emissions", "scene_feat", "object_feats")

MODEL_MAGIC = b"DMTRMDL\x00"
MODEL_VERSION = 1


def frame_to_obj(f: FrameRecord) -> dict:
    return {
        "day": f.day_id,
        "idx": f.idx,
        "activity": f.activity.key if f.activity is not None else None,
        "emissions": list(f.emissions) if f.emissions is not None else None,
        "scene_feat": list(f.scene_feat) if f.scene_feat is not None else None,
        "object_feats": (
            [list(p) for p in f.object_feats] if f.object_feats is not None else None
        ),
    }


def frame_from_obj(obj: dict, lineno: int) -> FrameRecord:
    if not isinstance(obj, dict):
        raise ValueError(f"line {lineno}: expected a JSON object")
    unknown = set(obj) - set(FRAME_KEYS)
    if unknown:
        raise ValueError(f"line {lineno}: unknown frame keys {sorted(unknown)}")
    for key in ("day", "idx"):
        if not isinstance(obj.get(key), int):
            raise ValueError(f"line {lineno}: missing or non-integer {key!r}")
    activity = obj.get("activity")
    emissions = obj.get("emissions")
    scene = obj.get("scene_feat")
    objects = obj.get("object_feats")
    try:
        return FrameRecord(
            day_id=obj["day"],
            idx=obj["idx"],
            activity=ActivityLabel.from_key(activity) if activity is not None else None,
            emissions=tuple(float(v) for v in emissions) if emissions is not None else None,
            scene_feat=tuple(float(v) for v in scene) if scene is not None else None,
            object_feats=(
                tuple(tuple(float(v) for v in p) for p in objects)
                if objects is not None
                else None
            ),
        )
    except (TypeError, ValueError) as e:
        raise ValueError(f"line {lineno}: {e}") from None


def write_frames_jsonl(path: str, logs: list[DayLog]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in sorted(logs, key=lambda d: d.day_id):
            for f in log.frames:
                fh.write(json.dumps(frame_to_obj(f)) + "\n")


def read_frames_jsonl(
    path: str,
    frame_interval_s: float = 3.0,
    day_start_s: float = 8 * 3600,
) -> list[DayLog]:
    """Parse a frames.jsonl file into per-day logs (clock geometry supplied
    by the caller, it is not stored in the file)."""
    by_day: dict[int, list[FrameRecord]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"line {lineno}: invalid JSON ({e.msg})") from None
            f = frame_from_obj(obj, lineno)
            by_day.setdefault(f.day_id, []).append(f)
    if not by_day:
        raise ValueError(f"no frames found in {path}")
    logs = []
    for day_id in sorted(by_day):
        frames = sorted(by_day[day_id], key=lambda f: f.idx)
        logs.append(DayLog(day_id, frames, frame_interval_s, day_start_s))
    return logs


def _cell_field_names() -> list[str]:
    return [f.name for f in dataclass_fields(LstmCellParams)]


def save_model(path: str, model: BilstmCrfModel) -> None:
    tensors = model.named_params()
    meta = json.dumps({"num_labels": model.num_labels}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        fh.write(struct.pack("<I", len(meta)))
        fh.write(meta)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("model file truncated")
    return data


def load_model(path: str) -> BilstmCrfModel:
    with open(path, "rb") as fh:
        if _read_exact(fh, len(MODEL_MAGIC)) != MODEL_MAGIC:
            raise ValueError(f"{path} is not a model file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != MODEL_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        (meta_len,) = struct.unpack("<I", _read_exact(fh, 4))
        json.loads(_read_exact(fh, meta_len).decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1))
            shape = tuple(
                struct.unpack("<I", _read_exact(fh, 4))[0] for _ in range(ndim)
            )
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(fh, size * 8), dtype="<f8")
            tensors[name] = data.reshape(shape).astype(float)
    return _model_from_tensors(tensors)


def _model_from_tensors(t: dict[str, np.ndarray]) -> BilstmCrfModel:
    def layer(prefix: str) -> DenseLayer:
        return DenseLayer(w=t[f"{prefix}.w"], b=t[f"{prefix}.b"])

    def cell(prefix: str) -> LstmCellParams:
        return LstmCellParams(**{n: t[f"{prefix}.{n}"] for n in _cell_field_names()})

    try:
        return BilstmCrfModel(
            fusion=FusionHeadParams(
                fc1=layer("fusion.fc1"), fc2=layer("fusion.fc2"), fc3=layer("fusion.fc3")
            ),
            fwd=cell("fwd"),
            bwd=cell("bwd"),
            proj=layer("proj"),
            transitions=t["transitions"],
        )
    except KeyError as e:
        raise ValueError(f"model file is missing tensor {e.args[0]!r}") from None


def write_fluents_csv(path: str, traces: list[FluentTrace]) -> None:
    """Per-frame fluent values, ordered by day then frame index."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("day,idx,hunger,thirst,fatigue\n")
        for trace in sorted(traces, key=lambda t: t.day_id):
            for i in range(len(trace)):
                h, t, f = trace.values[i]
                fh.write(
                    f"{trace.day_id},{i},{float(h)!r},{float(t)!r},{float(f)!r}\n"
                )


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
