"""Activity taxonomy, day/frame containers, and timeline utilities.

Days are modeled as ordered frame sequences on a fixed capture grid
(one frame every ``frame_interval_s`` seconds starting at ``day_start_s``).
The frame index is the canonical time axis; wall-clock values are derived.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

NUM_ACTIVITIES = 12
NUM_GROUPS = 5


class ActivityLabel(enum.IntEnum):
    """The twelve frame-level activities, with stable serialization codes."""

    USING_COMPUTER = 0
    READING = 1
    USING_PHONE = 2
    ATTENDING_CLASS = 3
    WALKING = 4
    RESTING = 5
    EXERCISING_OUTDOOR = 6
    EXERCISING_INDOOR = 7
    SHOPPING = 8
    EATING = 9
    DRINKING = 10
    SOCIAL = 11

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "ActivityLabel":
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown activity: {key!r}") from None


class ActivityGroup(enum.IntEnum):
    """Coarse five-way grouping of the activities."""

    SEDENTARY = 0
    FOOD = 1
    MOTION = 2
    REST = 3
    SOCIAL_ERRANDS = 4

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> "ActivityGroup":
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown activity group: {key!r}") from None


GroupMap = dict[ActivityLabel, ActivityGroup]

DEFAULT_GROUP_MAP: GroupMap = {
    ActivityLabel.USING_COMPUTER: ActivityGroup.SEDENTARY,
    ActivityLabel.READING: ActivityGroup.SEDENTARY,
    ActivityLabel.USING_PHONE: ActivityGroup.SEDENTARY,
    ActivityLabel.ATTENDING_CLASS: ActivityGroup.SEDENTARY,
    ActivityLabel.WALKING: ActivityGroup.MOTION,
    ActivityLabel.RESTING: ActivityGroup.REST,
    ActivityLabel.EXERCISING_OUTDOOR: ActivityGroup.MOTION,
    ActivityLabel.EXERCISING_INDOOR: ActivityGroup.MOTION,
    ActivityLabel.SHOPPING: ActivityGroup.SOCIAL_ERRANDS,
    ActivityLabel.EATING: ActivityGroup.FOOD,
    ActivityLabel.DRINKING: ActivityGroup.FOOD,
    ActivityLabel.SOCIAL: ActivityGroup.SOCIAL_ERRANDS,
}


def validate_group_map(gmap: GroupMap) -> None:
    """Check that a group map is total over the labels and onto the groups."""
    missing = [a.key for a in ActivityLabel if a not in gmap]
    if missing:
        raise ValueError(f"group map is not total, missing: {missing}")
    used = set(gmap.values())
    empty = [g.key for g in ActivityGroup if g not in used]
    if empty:
        raise ValueError(f"group map leaves groups empty: {empty}")


def group_of(label: ActivityLabel, gmap: GroupMap | None = None) -> ActivityGroup:
    """Return the group a label belongs to under ``gmap`` (default map if None)."""
    if gmap is None:
        gmap = DEFAULT_GROUP_MAP
    return gmap[label]


DEFAULT_DAY_START_S = 8 * 3600
DEFAULT_DAY_END_S = 18 * 3600
DEFAULT_FRAME_INTERVAL_S = 3.0


def parse_clock(text: str) -> int:
    """Parse 'HH:MM' into seconds since midnight."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"bad clock time {text!r}, expected HH:MM")
    hh, mm = int(parts[0]), int(parts[1])
    if not (0 <= hh < 24 and 0 <= mm < 60):
        raise ValueError(f"bad clock time {text!r}")
    return hh * 3600 + mm * 60


def format_clock(seconds: float) -> str:
    """Format seconds since midnight as 24-hour 'HH:MM'."""
    total = int(round(seconds))
    return f"{total // 3600:02d}:{total % 3600 // 60:02d}"


class MissingLabelError(ValueError):
    """A frame that was required to carry an activity label does not."""


@dataclass(frozen=True)
class FrameRecord:
    """One captured frame: identity plus whichever signals are available.

    At least one of ``activity``, ``emissions``, ``scene_feat`` must be
    present.  ``emissions`` is a length-12 vector of unnormalized per-label
    scores; ``scene_feat``/``object_feats`` are raw feature vectors.
    ``clock_time`` is derived from the owning day's geometry and may be left
    None when constructing records outside a DayLog.
    """

    day_id: int
    idx: int
    clock_time: float | None = None
    activity: ActivityLabel | None = None
    emissions: tuple[float, ...] | None = None
    scene_feat: tuple[float, ...] | None = None
    object_feats: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.activity is None and self.emissions is None and self.scene_feat is None:
            raise ValueError(
                f"frame (day={self.day_id}, idx={self.idx}) carries no activity, "
                "emissions, or scene feature"
            )
        if self.emissions is not None and len(self.emissions) != NUM_ACTIVITIES:
            raise ValueError(
                f"frame (day={self.day_id}, idx={self.idx}) has "
                f"{len(self.emissions)} emission scores, expected {NUM_ACTIVITIES}"
            )


@dataclass
class DayLog:
    """One day of frames on a regular capture grid.

    Frame indices must be contiguous from 0.  The default geometry
    (3 s interval, 08:00 start, 10-hour day) yields 12,000 frames.
    """

    day_id: int
    frames: list[FrameRecord] = field(default_factory=list)
    frame_interval_s: float = DEFAULT_FRAME_INTERVAL_S
    day_start_s: float = DEFAULT_DAY_START_S

    def __post_init__(self) -> None:
        fixed = []
        for pos, f in enumerate(self.frames):
            if f.idx != pos:
                raise ValueError(
                    f"day {self.day_id}: frame indices not contiguous "
                    f"(found idx {f.idx} at position {pos})"
                )
            clock = self.clock_of(pos)
            fixed.append(f if f.clock_time == clock else replace(f, clock_time=clock))
        self.frames = fixed

    def __len__(self) -> int:
        return len(self.frames)

    def clock_of(self, idx: int) -> float:
        return self.day_start_s + idx * self.frame_interval_s

    def labels(self) -> list[ActivityLabel]:
        """The per-frame label sequence; every frame must be labeled."""
        out = []
        for f in self.frames:
            if f.activity is None:
                raise MissingLabelError(
                    f"day {self.day_id}: frame {f.idx} has no activity label"
                )
            out.append(f.activity)
        return out

    @classmethod
    def from_labels(
        cls,
        day_id: int,
        labels: list[ActivityLabel],
        frame_interval_s: float = DEFAULT_FRAME_INTERVAL_S,
        day_start_s: float = DEFAULT_DAY_START_S,
    ) -> "DayLog":
        frames = [
            FrameRecord(day_id=day_id, idx=i, activity=a) for i, a in enumerate(labels)
        ]
        return cls(day_id, frames, frame_interval_s, day_start_s)


@dataclass(frozen=True)
class ActivityInterval:
    """A maximal run of one activity; end_idx is exclusive."""

    activity: ActivityLabel
    start_idx: int
    end_idx: int
    start_clock: float
    end_clock: float

    @property
    def n_frames(self) -> int:
        return self.end_idx - self.start_idx

    @property
    def duration_s(self) -> float:
        return self.end_clock - self.start_clock


def run_length_encode(log: DayLog) -> list[ActivityInterval]:
    """Collapse a fully labeled day into maximal constant-activity intervals.

    Concatenating the intervals reproduces the frame-level label sequence
    exactly; adjacent intervals always differ in activity.
    """
    labels = log.labels()
    intervals: list[ActivityInterval] = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            intervals.append(
                ActivityInterval(
                    activity=labels[start],
                    start_idx=start,
                    end_idx=i,
                    start_clock=log.clock_of(start),
                    end_clock=log.clock_of(i),
                )
            )
            start = i
    return intervals


def expand_intervals(intervals: list[ActivityInterval]) -> list[ActivityLabel]:
    """Inverse of run_length_encode: rebuild the frame-level label sequence."""
    out: list[ActivityLabel] = []
    for iv in intervals:
        out.extend([iv.activity] * iv.n_frames)
    return out


SCRIPT_PHRASES: dict[ActivityLabel, str] = {
    ActivityLabel.USING_COMPUTER: "uses computer",
    ActivityLabel.READING: "reads",
    ActivityLabel.USING_PHONE: "uses phone",
    ActivityLabel.ATTENDING_CLASS: "attends class",
    ActivityLabel.WALKING: "walks",
    ActivityLabel.RESTING: "rests",
    ActivityLabel.EXERCISING_OUTDOOR: "exercises outdoors",
    ActivityLabel.EXERCISING_INDOOR: "exercises indoors",
    ActivityLabel.SHOPPING: "shops",
    ActivityLabel.EATING: "eats",
    ActivityLabel.DRINKING: "drinks water",
    ActivityLabel.SOCIAL: "socializes",
}

# Activities whose brief occurrences read better without a time range
# ("drinks water" rather than "drinks water from 09:50 to 09:51").
UNTIMED_WHEN_SHORT = frozenset({ActivityLabel.DRINKING})

DEFAULT_SCRIPT_MIN_DURATION_S = 300.0


def render_script(
    intervals: list[ActivityInterval],
    min_duration_s: float = DEFAULT_SCRIPT_MIN_DURATION_S,
) -> str:
    """Render sorted, non-overlapping intervals as a human-readable day script.

    One line per interval, e.g. "uses computer from 09:00 to 11:00".
    Intervals of UNTIMED_WHEN_SHORT activities shorter than ``min_duration_s``
    are rendered as the bare phrase.
    """
    lines = []
    for iv in intervals:
        phrase = SCRIPT_PHRASES[iv.activity]
        if iv.activity in UNTIMED_WHEN_SHORT and iv.duration_s < min_duration_s:
            lines.append(phrase)
        else:
            lines.append(
                f"{phrase} from {format_clock(iv.start_clock)} "
                f"to {format_clock(iv.end_clock)}"
            )
    return "\n".join(lines)
