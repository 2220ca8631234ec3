import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from daymeter.activities import (
    DEFAULT_GROUP_MAP,
    ActivityGroup,
    ActivityInterval,
    ActivityLabel,
    DayLog,
    FrameRecord,
    MissingLabelError,
    expand_intervals,
    format_clock,
    group_of,
    parse_clock,
    render_script,
    run_length_encode,
    validate_group_map,
)

A = ActivityLabel
G = ActivityGroup


def test_label_codes_are_bijection_onto_0_11():
    codes = sorted(a.value for a in ActivityLabel)
    assert codes == list(range(12))
    for a in ActivityLabel:
        assert ActivityLabel.from_key(a.key) is a
        assert ActivityLabel(a.value) is a


def test_exactly_five_groups():
    assert len(ActivityGroup) == 5
    for g in ActivityGroup:
        assert ActivityGroup.from_key(g.key) is g


def test_unknown_keys_rejected():
    with pytest.raises(ValueError):
        ActivityLabel.from_key("napping")
    with pytest.raises(ValueError):
        ActivityGroup.from_key("leisure")


def test_default_group_map_examples():
    assert group_of(A.EATING) is G.FOOD
    assert group_of(A.USING_COMPUTER) is G.SEDENTARY
    assert group_of(A.WALKING) is G.MOTION


def test_default_group_map_total_and_surjective():
    validate_group_map(DEFAULT_GROUP_MAP)
    for a in ActivityLabel:
        assert group_of(a) is group_of(a)  # deterministic
        assert isinstance(group_of(a), ActivityGroup)


def test_partial_group_map_rejected():
    broken = dict(DEFAULT_GROUP_MAP)
    del broken[A.SOCIAL]
    with pytest.raises(ValueError, match="not total"):
        validate_group_map(broken)
    all_sedentary = {a: G.SEDENTARY for a in ActivityLabel}
    with pytest.raises(ValueError, match="empty"):
        validate_group_map(all_sedentary)


def test_clock_parsing_and_formatting():
    assert parse_clock("08:00") == 28800
    assert parse_clock("18:00") == 64800
    assert format_clock(9 * 3600) == "09:00"
    assert format_clock(11 * 3600 + 5 * 60) == "11:05"
    with pytest.raises(ValueError):
        parse_clock("25:00")
    with pytest.raises(ValueError):
        parse_clock("0800")


def test_frame_requires_some_signal():
    with pytest.raises(ValueError, match="no activity"):
        FrameRecord(day_id=1, idx=0)
    with pytest.raises(ValueError, match="emission scores"):
        FrameRecord(day_id=1, idx=0, emissions=(0.0,) * 5)


def test_daylog_contiguity_and_clock():
    log = DayLog.from_labels(1, [A.EATING, A.EATING, A.WALKING])
    assert [f.clock_time for f in log.frames] == [28800.0, 28803.0, 28806.0]
    bad = [FrameRecord(day_id=1, idx=i, activity=A.EATING) for i in (0, 2)]
    with pytest.raises(ValueError, match="contiguous"):
        DayLog(1, bad)


def test_default_geometry_yields_12000_frames():
    n = int((18 - 8) * 3600 / 3)
    assert n == 12000
    log = DayLog.from_labels(1, [A.RESTING] * n)
    assert len(log) == 12000
    assert log.clock_of(len(log)) == 18 * 3600


def test_rle_basic():
    log = DayLog.from_labels(1, [A.EATING] * 3 + [A.WALKING] * 2)
    ivs = run_length_encode(log)
    assert [(iv.activity, iv.start_idx, iv.end_idx) for iv in ivs] == [
        (A.EATING, 0, 3),
        (A.WALKING, 3, 5),
    ]
    assert ivs[0].start_clock == 28800.0
    assert ivs[0].end_clock == 28809.0


def test_rle_constant_day_single_interval():
    log = DayLog.from_labels(1, [A.EATING] * 12000)
    ivs = run_length_encode(log)
    assert len(ivs) == 1
    assert ivs[0].n_frames == 12000


def test_rle_requires_labels():
    frames = [
        FrameRecord(day_id=1, idx=0, activity=A.EATING),
        FrameRecord(day_id=1, idx=1, emissions=(0.0,) * 12),
    ]
    with pytest.raises(MissingLabelError):
        run_length_encode(DayLog(1, frames))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from(list(ActivityLabel)), min_size=1, max_size=500)
)
def test_rle_round_trip(labels):
    log = DayLog.from_labels(1, labels)
    ivs = run_length_encode(log)
    assert expand_intervals(ivs) == labels
    for left, right in zip(ivs, ivs[1:]):
        assert left.activity != right.activity
        assert left.end_idx == right.start_idx


def test_render_script_paper_style_line():
    iv = ActivityInterval(A.USING_COMPUTER, 1200, 3600, 9 * 3600, 11 * 3600)
    assert render_script([iv]) == "uses computer from 09:00 to 11:00"


def test_render_script_empty():
    assert render_script([]) == ""


def test_render_script_short_drink_untimed():
    drink = ActivityInterval(A.DRINKING, 0, 20, 28800.0, 28860.0)  # one minute
    long_drink = ActivityInterval(A.DRINKING, 0, 200, 28800.0, 29400.0)
    assert render_script([drink]) == "drinks water"
    assert render_script([long_drink]) == "drinks water from 08:00 to 08:10"
    # short non-drinking intervals keep their time range
    blip = ActivityInterval(A.EATING, 0, 20, 28800.0, 28860.0)
    assert render_script([blip]) == "eats from 08:00 to 08:01"


def test_render_script_one_line_per_interval():
    labels = (
        [A.USING_COMPUTER] * 100 + [A.DRINKING] * 10 + [A.USING_COMPUTER] * 50
        + [A.EATING] * 400 + [A.WALKING] * 40
    )
    log = DayLog.from_labels(1, labels)
    ivs = run_length_encode(log)
    script = render_script(ivs)
    assert len(script.splitlines()) == len(ivs)
