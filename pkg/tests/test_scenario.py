import numpy as np
import pytest

from motionref.io import SequenceInfo
from motionref.pipeline import describe_sequence
from motionref.scenario import ObjectSpec, Scenario, generate_scenario, write_scenario


def boxes_of(gen, id_):
    return [o.box for o in gen.observations if o.id == id_]


def test_parked_boxes_identical():
    sc = Scenario(12, 1000, 500, [ObjectSpec(1, "parked", 100, 200, 40, 30)])
    bs = boxes_of(generate_scenario(sc), 1)
    assert len(bs) == 12 and all(b == bs[0] for b in bs)


def test_constant_velocity_arithmetic_sequence():
    sc = Scenario(10, 1000, 500, [ObjectSpec(1, "constant_velocity", 100, 200, 40, 30, vx=2.0)])
    xs = [b.x for b in boxes_of(generate_scenario(sc), 1)]
    assert xs == [100.0 + 2.0 * k for k in range(10)]


def test_accelerating_reported_from_third_frame():
    sc = Scenario(8, 1242, 375, [ObjectSpec(1, "accelerating", 600, 300, 50, 40, ay=-0.5)])
    gen = generate_scenario(sc)
    dys = np.diff([b.y for b in boxes_of(gen, 1)])
    np.testing.assert_allclose(np.diff(dys), -0.5)
    rows = describe_sequence(gen.observations, gen.info, capacity=4)
    for frame, _, sentence in rows:
        assert sentence.endswith("accelerating") == (frame >= 2), (frame, sentence)


def test_out_of_frame_frames_dropped():
    sc = Scenario(20, 100, 100, [ObjectSpec(1, "constant_velocity", 90, 50, 10, 10, vx=5.0)])
    frames = [o.frame for o in generate_scenario(sc).observations]
    assert frames == [0, 1, 2]


def test_start_end_and_relevance():
    sc = Scenario(10, 100, 100, [
        ObjectSpec(1, "parked", 50, 50, 10, 10, start=3, end=5, relevant=True),
        ObjectSpec(2, "parked", 20, 20, 10, 10),
    ])
    gen = generate_scenario(sc)
    assert [o.frame for o in gen.ground_truth] == [3, 4, 5]
    assert gen.info.relevant_ids == [1]


@pytest.mark.parametrize("kw", [
    dict(frames=0),
    dict(objects=[ObjectSpec(1, "hovering", 5, 5, 1, 1)]),
    dict(objects=[ObjectSpec(1, "parked", 500, 5, 1, 1)]),
    dict(objects=[ObjectSpec(1, "parked", 5, 5, 0, 1)]),
    dict(objects=[ObjectSpec(1, "parked", 5, 5, 1, 1), ObjectSpec(1, "parked", 6, 6, 1, 1)]),
])
def test_invalid_specs(kw):
    args = dict(frames=5, width=100, height=100, objects=[])
    args.update(kw)
    with pytest.raises(ValueError):
        Scenario(**args)


def test_noise_seeded(tmp_path):
    sc = Scenario.from_dict({
        "frames": 5, "width": 200, "height": 100, "noise_px": 1.0,
        "objects": [{"id": 1, "motion": "parked", "x": 100, "y": 50, "w": 10, "h": 10}],
    })
    a, b, c = generate_scenario(sc, 3), generate_scenario(sc, 3), generate_scenario(sc, 4)
    assert boxes_of(a, 1) == boxes_of(b, 1) != boxes_of(c, 1)
    paths = write_scenario(a, tmp_path / "s1")
    paths2 = write_scenario(b, tmp_path / "s2")
    assert paths["trajectories"].read_bytes() == paths2["trajectories"].read_bytes()
    assert paths["gt"].with_suffix(".json").exists()
