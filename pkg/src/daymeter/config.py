"""Run configuration: one flat key/value JSON file covers every knob.

Defaults follow the source setting wherever it fixes a value: 3-second
frames from 08:00 to 18:00, 15-frame decoding windows, fluent half-rise
times of 5/2/1 hours.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .activities import (
    ActivityGroup,
    ActivityLabel,
    DEFAULT_GROUP_MAP,
    GroupMap,
    parse_clock,
    validate_group_map,
)
from .fluents import DEFAULT_RESET_MAP, FLUENT_NAMES, FluentParams


@dataclass
class RunConfig:
    frame_interval_s: float = 3.0
    day_start: str = "08:00"
    day_end: str = "18:00"
    alpha_hunger: float = 5.0
    alpha_thirst: float = 2.0
    alpha_fatigue: float = 1.0
    window: int = 15
    decode_mode: str = "window"  # window | whole-day
    input_mode: str = "auto"  # auto | emissions | features
    learning_rate: float = 0.1
    epochs: int = 10
    batch_size: int = 256
    seed: int = 0
    hidden_dim: int = 100
    fc1_out: int = 500
    fc2_out: int = 400
    fc3_out: int = 500
    script_min_duration_s: float = 300.0
    initial_reset_idx: int = 0
    group_map: dict[str, str] | None = None
    reset_map: dict[str, list[str]] | None = None
    transition_priors: list | None = None

    def __post_init__(self) -> None:
        if self.decode_mode not in ("window", "whole-day"):
            raise ValueError(f"decode_mode must be window or whole-day, got {self.decode_mode!r}")
        if self.input_mode not in ("auto", "emissions", "features"):
            raise ValueError(f"bad input_mode {self.input_mode!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    @property
    def day_start_s(self) -> int:
        return parse_clock(self.day_start)

    @property
    def day_end_s(self) -> int:
        return parse_clock(self.day_end)

    def resolved_group_map(self) -> GroupMap:
        gmap = dict(DEFAULT_GROUP_MAP)
        for label_key, group_key in (self.group_map or {}).items():
            gmap[ActivityLabel.from_key(label_key)] = ActivityGroup.from_key(group_key)
        validate_group_map(gmap)
        return gmap

    def fluent_params(self) -> FluentParams:
        reset = dict(DEFAULT_RESET_MAP)
        for name, keys in (self.reset_map or {}).items():
            if name not in FLUENT_NAMES:
                raise ValueError(f"unknown fluent {name!r} in reset_map")
            reset[name] = frozenset(ActivityLabel.from_key(k) for k in keys)
        return FluentParams(
            alpha_hunger=self.alpha_hunger,
            alpha_thirst=self.alpha_thirst,
            alpha_fatigue=self.alpha_fatigue,
            frames_per_hour=3600.0 / self.frame_interval_s,
            reset_map=reset,
            initial_reset_idx=self.initial_reset_idx,
        )

    def resolved_transition_priors(self) -> list[tuple[int, int, float]] | None:
        """Priors as augmented-state index triples; label keys plus the
        pseudo-labels 'start' and 'stop' are accepted in config files."""
        if not self.transition_priors:
            return None
        k = len(ActivityLabel)
        out = []
        for entry in self.transition_priors:
            src, dst, score = entry
            out.append((_state_index(src, k), _state_index(dst, k), float(score)))
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise ValueError(f"config file {path} is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)


def _state_index(key: str, k: int) -> int:
    if key == "start":
        return k
    if key == "stop":
        return k + 1
    return ActivityLabel.from_key(key).value
