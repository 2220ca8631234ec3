"""Windowing and decoding: from frame signals to predicted label sequences.

Days are split into consecutive non-overlapping windows (default 15 frames,
final partial window kept at its natural length) and each window is decoded
independently; a whole-day mode decodes the full chain instead.  Frames can
feed the model two ways: raw scene/object features run through the fusion
head and BiLSTM, while precomputed emission rows feed the chain directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activities import ActivityLabel, DayLog, FrameRecord, MissingLabelError
from .crf import viterbi
from .nn import (
    BilstmCrfModel,
    bilstm_forward,
    emission_forward,
    fusion_forward_many,
)

INPUT_MODES = ("auto", "emissions", "features")


@dataclass
class Window:
    """A contiguous span of one day's frames."""

    day_id: int
    start: int
    frames: list[FrameRecord]

    def __len__(self) -> int:
        return len(self.frames)

    def label_codes(self) -> np.ndarray:
        codes = []
        for f in self.frames:
            if f.activity is None:
                raise MissingLabelError(
                    f"day {self.day_id}: frame {f.idx} has no activity label"
                )
            codes.append(f.activity.value)
        return np.array(codes, dtype=int)


def build_windows(log: DayLog, window_len: int) -> list[Window]:
    if window_len < 1:
        raise ValueError("window length must be >= 1")
    return [
        Window(log.day_id, start, log.frames[start:start + window_len])
        for start in range(0, len(log.frames), window_len)
    ]


def build_training_windows(logs: list[DayLog], window_len: int) -> list[Window]:
    out: list[Window] = []
    for log in logs:
        out.extend(build_windows(log, window_len))
    return out


def resolve_input_mode(frames: list[FrameRecord], requested: str = "auto") -> str:
    """Pick the model input path for these frames.

    'auto' prefers raw features when present, otherwise direct emissions.
    """
    if requested not in INPUT_MODES:
        raise ValueError(f"input mode must be one of {INPUT_MODES}")
    has_features = frames[0].scene_feat is not None
    has_emissions = frames[0].emissions is not None
    if requested == "auto":
        if has_features:
            return "features"
        if has_emissions:
            return "emissions"
        raise ValueError("frames carry neither features nor emissions")
    if requested == "features" and not has_features:
        raise ValueError("features requested but frames have no scene features")
    if requested == "emissions" and not has_emissions:
        raise ValueError("emissions requested but frames carry none")
    return requested


def frames_emissions(frames: list[FrameRecord]) -> np.ndarray:
    rows = []
    for f in frames:
        if f.emissions is None:
            raise ValueError(f"frame (day={f.day_id}, idx={f.idx}) has no emissions")
        rows.append(f.emissions)
    return np.array(rows, dtype=float)


def frames_features(
    frames: list[FrameRecord],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scene matrix, concatenated proposal stack, and per-frame proposal counts."""
    scenes = []
    proposals = []
    counts = []
    for f in frames:
        if f.scene_feat is None:
            raise ValueError(f"frame (day={f.day_id}, idx={f.idx}) has no scene feature")
        scenes.append(f.scene_feat)
        feats = f.object_feats or ()
        counts.append(len(feats))
        proposals.extend(feats)
    scene_mat = np.array(scenes, dtype=float)
    count_arr = np.array(counts, dtype=int)
    if proposals:
        stack = np.array(proposals, dtype=float)
    else:
        stack = np.zeros((0, 0))
    return scene_mat, stack, count_arr


def scores_for_frames(
    model: BilstmCrfModel, frames: list[FrameRecord], mode: str
) -> np.ndarray:
    """Emission matrix P (n x k) for one window of frames."""
    if mode == "emissions":
        return frames_emissions(frames)
    scenes, stack, counts = frames_features(frames)
    if stack.shape[0] == 0:
        stack = np.zeros((0, model.fusion.fc2.in_dim))
    xs, _ = fusion_forward_many(model.fusion, scenes, stack, counts)
    hs = bilstm_forward(model.fwd, model.bwd, xs)
    return emission_forward(model.proj, hs)


def decode_day(
    model: BilstmCrfModel,
    log: DayLog,
    window_len: int = 15,
    decode_mode: str = "window",
    input_mode: str = "auto",
) -> list[ActivityLabel]:
    """Viterbi-decode one day into per-frame labels."""
    if decode_mode not in ("window", "whole-day"):
        raise ValueError(f"decode mode must be window or whole-day, got {decode_mode!r}")
    if not log.frames:
        return []
    mode = resolve_input_mode(log.frames, input_mode)
    spans = (
        build_windows(log, window_len)
        if decode_mode == "window"
        else [Window(log.day_id, 0, list(log.frames))]
    )
    labels: list[ActivityLabel] = []
    for win in spans:
        p = scores_for_frames(model, win.frames, mode)
        codes, _ = viterbi(p, model.transitions)
        labels.extend(ActivityLabel(int(c)) for c in codes)
    return labels
