import pytest
from hypothesis import given, settings, strategies as st

from motionref.core import BoundingBox, FrameContext
from motionref.describe import (
    DIRECTION_PHRASES,
    DISTANCE_PHRASES,
    POSITION_PHRASES,
    SPEED_PHRASES,
    classify_direction,
    classify_distance,
    classify_position,
    classify_speed,
    compose_description,
    direction_descriptor,
    distance_descriptor,
    motion_quantities,
    parse_description,
    position_descriptor,
    speed_descriptor,
)
from motionref.errors import InvalidBoxError, UndefinedDescriptorError

from oracles import naive_direction, naive_position

CTX = FrameContext(0, 1000, 1000)


def at(x, y, w=40.0, h=40.0):
    return BoundingBox(x, y, w, h)


# -- position ---------------------------------------------------------------


@pytest.mark.parametrize(
    "x,y,expected",
    [
        (500, 500, "in front"),
        (300, 500, "on the left"),
        (400, 400, "front-left"),
        (550, 500, "in front"),  # d_x = 0.05 exactly: every strict branch fails
        (500, 300, "ahead"),
        (500, 700, "behind"),
        (700, 500, "on the right"),
        (700, 300, "front-right"),
        (300, 700, "back-left"),
        (700, 700, "back-right"),
    ],
)
def test_position_examples(x, y, expected):
    assert position_descriptor(at(x, y), CTX) == expected


def test_position_rejects_invalid_box():
    with pytest.raises(InvalidBoxError):
        position_descriptor(BoundingBox(1, 1, 0, 4), CTX)


def test_position_branch_order_ahead_before_left():
    # satisfies both "ahead" (|dx| < 0.1) and "on the left" (|dy| < 0.1)
    assert classify_position(-0.07, -0.07) == "ahead"


# -- direction --------------------------------------------------------------


@pytest.mark.parametrize(
    "dx,dy,expected",
    [
        (0.0, -0.01, "moving forward"),
        (0.02, -0.01, "moving forward slightly right"),
        (-0.02, -0.01, "moving forward slightly left"),
        (0.0, 0.01, "moving backward"),
        (0.0, 0.0, "motion unclear"),
        (-0.01, 0.0005, "moving left"),
        (0.01, -0.0005, "moving right"),
    ],
)
def test_direction_rule(dx, dy, expected):
    assert classify_direction(dx, dy) == expected


def test_direction_descriptor_normalises_by_frame_size():
    ctx = FrameContext(0, 1000, 500)
    # 20 px right of 1000 = 0.02, 5 px up of 500 = -0.01
    assert direction_descriptor(at(100, 100), at(120, 95), ctx) == "moving forward slightly right"
    assert direction_descriptor(at(100, 100), at(100, 100), ctx) == "motion unclear"


# -- distance / speed -------------------------------------------------------


def test_distance_examples():
    assert distance_descriptor(at(0, 0, 10, 10), at(0, 0, 11, 10)) == "approaching"
    assert distance_descriptor(at(0, 0, 10, 10), at(0, 0, 10.2, 10)) == "keeping distance"
    assert distance_descriptor(at(0, 0, 10, 10), at(0, 0, 10, 10)) == "keeping distance"
    assert distance_descriptor(at(0, 0, 10, 10), at(0, 0, 9, 10)) == "moving away"


def test_speed_examples():
    # displacements of 10 px then 16 px on a 1000 px wide frame
    acc = [at(100, 500), at(110, 500), at(126, 500)]
    dec = [at(100, 500), at(116, 500), at(126, 500)]
    const = [at(100, 500), at(107, 500), at(114, 500)]
    assert speed_descriptor(acc, CTX) == "accelerating"
    assert speed_descriptor(dec, CTX) == "decelerating"
    assert speed_descriptor(const, CTX) == "constant speed"
    assert classify_speed(0.016 - 0.010) == "accelerating"
    assert classify_speed(0.010 - 0.016) == "decelerating"


def test_speed_needs_three_boxes():
    with pytest.raises(UndefinedDescriptorError):
        speed_descriptor([at(1, 1), at(2, 2)], CTX)


# -- composition ------------------------------------------------------------


def test_single_box_at_center():
    d = compose_description([(0, at(500, 500))], CTX)
    assert d.sentence == "Target is in front"
    assert d.n_valid == 1


def test_empty_history():
    d = compose_description([], CTX)
    assert d.sentence == "" and d.n_valid == 0


def test_two_boxes_have_no_speed():
    d = compose_description([(0, at(500, 500)), (1, at(500, 490))], CTX)
    assert d.sentence == "Target is in front, moving forward, keeping distance"
    assert d.speed_trend == ""


def test_four_frame_approach_with_acceleration():
    # upward steps of 10, 15, 20 px (speed 0.015 -> 0.020), area x1.21 per step
    window = [
        (0, at(500, 340, 40.0, 40.0)),
        (1, at(500, 330, 44.0, 44.0)),
        (2, at(500, 315, 48.4, 48.4)),
        (3, at(500, 295, 53.24, 53.24)),
    ]
    d = compose_description(window, CTX)
    assert d.sentence == "Target is ahead, moving forward, approaching and accelerating"
    assert d.n_valid == 4


def test_sentinels_are_skipped():
    s = BoundingBox.sentinel()
    window = [(0, at(500, 500)), (1, s), (2, at(500, 480)), (3, s)]
    d = compose_description(window, CTX)
    assert d.n_valid == 2
    assert d.direction == "moving forward"


def test_motion_quantities_flags_undefined():
    q = motion_quantities([(0, at(500, 500))], CTX)
    assert q.delta_x is None and q.delta_speed is None
    q = motion_quantities([(0, at(500, 500)), (1, at(530, 460)), (2, at(560, 420))], CTX)
    assert q.speed == pytest.approx(0.05)
    assert q.delta_speed == pytest.approx(0.0, abs=1e-15)


def test_parse_roundtrip():
    for s in (
        "Target is in front",
        "Target is front-left, moving backward slightly right, moving away",
        "Target is on the right, motion unclear, keeping distance and constant speed",
    ):
        assert parse_description(s).sentence == s
    with pytest.raises(ValueError):
        parse_description("Target is upside down")


# -- properties -------------------------------------------------------------

coord = st.integers(1, 999)
size = st.integers(2, 200)
boxes = st.builds(lambda x, y, w, h: BoundingBox(float(x), float(y), float(w), float(h)), coord, coord, size, size)
windows = st.lists(boxes, min_size=1, max_size=5)


@given(windows)
def test_closed_vocabulary(window):
    d = compose_description(list(enumerate(window)), CTX)
    assert d.position in POSITION_PHRASES
    if d.n_valid >= 2:
        assert d.direction in DIRECTION_PHRASES and d.distance_trend in DISTANCE_PHRASES
    if d.n_valid >= 3:
        assert d.speed_trend in SPEED_PHRASES
    assert parse_description(d.sentence).sentence == d.sentence
    assert compose_description(list(enumerate(window)), CTX) == d


@given(windows, st.integers(-300, 300), st.integers(-300, 300))
def test_translation_invariance(window, ox, oy):
    shifted = [BoundingBox(b.x + ox, b.y + oy, b.w, b.h) for b in window]
    a = compose_description(list(enumerate(window)), CTX)
    b = compose_description(list(enumerate(shifted)), CTX)
    assert (a.direction, a.distance_trend, a.speed_trend) == (b.direction, b.distance_trend, b.speed_trend)


@given(windows, st.sampled_from([0.125, 0.5, 2.0, 4.0, 16.0]))
def test_distance_scale_invariance(window, c):
    # powers of two keep the arithmetic exact
    scaled = [BoundingBox(b.x, b.y, b.w * c, b.h * c) for b in window]
    a = compose_description(list(enumerate(window)), CTX)
    b = compose_description(list(enumerate(scaled)), CTX)
    assert a.distance_trend == b.distance_trend


@given(boxes, st.sampled_from([0.25, 0.5, 2.0, 8.0]))
def test_position_normalisation_invariance(b, s):
    ctx2 = FrameContext(0, CTX.width * s, CTX.height * s)
    b2 = BoundingBox(b.x * s, b.y * s, b.w, b.h)
    assert position_descriptor(b, CTX) == position_descriptor(b2, ctx2)


@settings(max_examples=300)
@given(st.integers(-50, 50), st.integers(-50, 50))
def test_rules_agree_with_oracle_sampled(i, j):
    assert classify_position(i / 100, j / 100) == naive_position(i / 100, j / 100)
    assert classify_direction(i / 1000, j / 1000) == naive_direction(i / 1000, j / 1000)


def test_distance_and_speed_tables_complete():
    assert classify_distance(100, 110) == "approaching"
    assert classify_distance(100, 102) == "keeping distance"
    assert classify_distance(100, 90) == "moving away"
