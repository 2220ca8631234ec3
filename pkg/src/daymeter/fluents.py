"""Latent hunger/thirst/fatigue dynamics and the day-level lifestyle score.

Each fluent is 0 on frames whose activity resets it and otherwise follows a
sigmoid of the time since the last reset:

    value(i) = 1 / (1 + exp(-((i - i_reset) / frames_per_hour - alpha)))

so the fluent crosses 0.5 exactly ``alpha`` hours after its reset.  The
lifestyle score of a day is 1 minus the frame-mean of the three fluents
divided by three, which lands in (0, 1]; higher is healthier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activities import (
    DEFAULT_SCRIPT_MIN_DURATION_S,
    ActivityGroup,
    ActivityLabel,
    DayLog,
    GroupMap,
    group_of,
    render_script,
    run_length_encode,
)

FLUENT_NAMES = ("hunger", "thirst", "fatigue")

DEFAULT_RESET_MAP: dict[str, frozenset[ActivityLabel]] = {
    "hunger": frozenset({ActivityLabel.EATING}),
    "thirst": frozenset({ActivityLabel.DRINKING}),
    "fatigue": frozenset({ActivityLabel.RESTING}),
}


@dataclass(frozen=True)
class FluentParams:
    """Fluent half-rise times (hours), frame rate, and reset activities.

    ``initial_reset_idx`` is the frame index of the virtual reset assumed
    before the day starts (recording begins after breakfast/wake-up).
    """

    alpha_hunger: float = 5.0
    alpha_thirst: float = 2.0
    alpha_fatigue: float = 1.0
    frames_per_hour: float = 1200.0
    reset_map: dict[str, frozenset[ActivityLabel]] = field(
        default_factory=lambda: dict(DEFAULT_RESET_MAP)
    )
    initial_reset_idx: int = 0

    def __post_init__(self) -> None:
        for name in FLUENT_NAMES:
            if self.alpha(name) <= 0:
                raise ValueError(f"alpha_{name} must be positive")
            if not self.reset_map.get(name):
                raise ValueError(f"reset set for {name} is empty")
        if self.frames_per_hour <= 0:
            raise ValueError("frames_per_hour must be positive")

    def alpha(self, fluent: str) -> float:
        return {
            "hunger": self.alpha_hunger,
            "thirst": self.alpha_thirst,
            "fatigue": self.alpha_fatigue,
        }[fluent]

    @classmethod
    def for_frame_interval(cls, frame_interval_s: float, **kwargs) -> "FluentParams":
        return cls(frames_per_hour=3600.0 / frame_interval_s, **kwargs)


def fluent_value(
    i: int, i_reset: int, alpha: float, frames_per_hour: float
) -> float:
    """Sigmoid build-up of one fluent, ``i - i_reset`` frames after its reset."""
    if i < i_reset:
        raise ValueError(f"frame {i} precedes reset frame {i_reset}")
    return 1.0 / (1.0 + math.exp(-((i - i_reset) / frames_per_hour - alpha)))


@dataclass
class FluentTrace:
    """Per-frame values of the three fluents for one day; columns are
    hunger, thirst, fatigue."""

    day_id: int
    values: np.ndarray

    @property
    def hunger(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def thirst(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def fatigue(self) -> np.ndarray:
        return self.values[:, 2]

    def __len__(self) -> int:
        return self.values.shape[0]


def fluent_trace(log: DayLog, params: FluentParams | None = None) -> FluentTrace:
    """Evaluate all three fluents on every frame of a fully labeled day."""
    if params is None:
        params = FluentParams.for_frame_interval(log.frame_interval_s)
    codes = np.array([a.value for a in log.labels()], dtype=int)
    n = codes.shape[0]
    idx = np.arange(n)
    values = np.zeros((n, 3))
    for col, name in enumerate(FLUENT_NAMES):
        reset_codes = np.array([a.value for a in params.reset_map[name]], dtype=int)
        is_reset = np.isin(codes, reset_codes)
        last_reset = np.maximum.accumulate(
            np.where(is_reset, idx, params.initial_reset_idx)
        )
        if np.any(idx < last_reset):
            raise ValueError("initial_reset_idx lies after the first frame")
        v = 1.0 / (
            1.0 + np.exp(-((idx - last_reset) / params.frames_per_hour
                           - params.alpha(name)))
        )
        v[is_reset] = 0.0
        values[:, col] = v
    return FluentTrace(day_id=log.day_id, values=values)


def lifestyle_score(trace: FluentTrace) -> float:
    """1 minus the frame-mean of the three fluents over three; in (0, 1]."""
    n = len(trace)
    if n == 0:
        raise ValueError("empty fluent trace")
    return 1.0 - float(trace.values.sum()) / (3.0 * n)


@dataclass
class LifestyleReport:
    """Day-level summary: score, fluent means, group time budget, timeline."""

    day_id: int
    lifestyle_score: float
    fluent_means: dict[str, float]
    group_seconds: dict[ActivityGroup, float]
    intervals: list
    script: str

    def to_dict(self) -> dict:
        return {
            "day": self.day_id,
            "lifestyle_score": self.lifestyle_score,
            "fluent_means": dict(self.fluent_means),
            "group_seconds": {g.key: s for g, s in self.group_seconds.items()},
            "intervals": [
                {
                    "activity": iv.activity.key,
                    "start_idx": iv.start_idx,
                    "end_idx": iv.end_idx,
                    "start": _fmt_clock(iv.start_clock),
                    "end": _fmt_clock(iv.end_clock),
                }
                for iv in self.intervals
            ],
            "script": self.script,
        }


def _fmt_clock(seconds: float) -> str:
    from .activities import format_clock

    return format_clock(seconds)


def analyze_day(
    log: DayLog,
    params: FluentParams | None = None,
    gmap: GroupMap | None = None,
    script_min_duration_s: float = DEFAULT_SCRIPT_MIN_DURATION_S,
) -> LifestyleReport:
    """Assemble the full report for one labeled day; deterministic."""
    trace = fluent_trace(log, params)
    score = lifestyle_score(trace)
    means = {
        name: float(trace.values[:, col].mean())
        for col, name in enumerate(FLUENT_NAMES)
    }
    intervals = run_length_encode(log)
    group_seconds: dict[ActivityGroup, float] = {g: 0.0 for g in ActivityGroup}
    for iv in intervals:
        group_seconds[group_of(iv.activity, gmap)] += iv.duration_s
    script = render_script(intervals, min_duration_s=script_min_duration_s)
    return LifestyleReport(
        day_id=log.day_id,
        lifestyle_score=score,
        fluent_means=means,
        group_seconds=group_seconds,
        intervals=intervals,
        script=script,
    )
