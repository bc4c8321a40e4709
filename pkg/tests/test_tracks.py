import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazestudio.errors import (
    BadGrade,
    EmptyTrack,
    InsufficientData,
    MalformedLine,
    NonMonotonicTime,
)
from gazestudio.tracks import (
    GazeSample,
    GazeTrack,
    load_track,
    meta_path_for,
    parse_track,
    save_track,
    serialize_track,
    step_lengths,
)

META = {
    "image_id": "img1",
    "reader_id": "r1",
    "decision": 2,
    "image_width": 800,
    "image_height": 800,
    "nominal_rate_hz": 90,
}


def jsonl(rows):
    return ("\n".join(json.dumps(r) for r in rows) + "\n").encode()


def make_track(points, width=800, height=800):
    samples = [GazeSample(t=float(i) * 11.1, x=float(x), y=float(y)) for i, (x, y) in enumerate(points)]
    return GazeTrack(samples=samples, image_id="img1", reader_id="r1", decision=0,
                     image_width=width, image_height=height)


class TestParseTrack:
    def test_three_valid_lines_in_order(self):
        raw = jsonl([
            {"t_ms": 0, "x": 1.5, "y": 2.5},
            {"t_ms": 11.1, "x": 3.0, "y": 4.0},
            {"t_ms": 22.2, "x": 5.0, "y": 6.0},
        ])
        track = parse_track(raw, META)
        assert len(track) == 3
        assert track.times().tolist() == [0.0, 11.1, 22.2]
        assert track.decision == 2
        assert track.image_width == 800

    def test_malformed_line_number(self):
        raw = b'{"t_ms": "abc", "x": 1, "y": 2}\n'
        with pytest.raises(MalformedLine) as exc:
            parse_track(raw, META)
        assert exc.value.line_no == 1

    def test_malformed_later_line(self):
        raw = jsonl([{"t_ms": 0, "x": 1, "y": 2}]) + b"not json\n"
        with pytest.raises(MalformedLine) as exc:
            parse_track(raw, META)
        assert exc.value.line_no == 2

    def test_negative_x_clamped_to_zero(self):
        raw = jsonl([{"t_ms": 0, "x": -5, "y": 10}])
        track = parse_track(raw, META)
        assert track.samples[0].x == 0.0

    def test_overflow_clamped_to_width(self):
        raw = jsonl([{"t_ms": 0, "x": 1e4, "y": 900}])
        track = parse_track(raw, META)
        assert track.samples[0].x == 800.0
        assert track.samples[0].y == 800.0

    def test_empty_log(self):
        with pytest.raises(EmptyTrack):
            parse_track(b"", META)
        with pytest.raises(EmptyTrack):
            parse_track(b"\n  \n", META)

    def test_non_finite_rejected(self):
        with pytest.raises(MalformedLine):
            parse_track(b'{"t_ms": 0, "x": null, "y": 2}\n', META)

    def test_negative_time_rejected(self):
        with pytest.raises(MalformedLine):
            parse_track(jsonl([{"t_ms": -1, "x": 1, "y": 2}]), META)

    def test_sorting_repairs_out_of_order(self):
        raw = jsonl([{"t_ms": 20, "x": 1, "y": 1}, {"t_ms": 10, "x": 2, "y": 2}])
        track = parse_track(raw, META)
        assert track.times().tolist() == [10.0, 20.0]

    def test_unsorted_raises_when_sorting_disabled(self):
        raw = jsonl([{"t_ms": 20, "x": 1, "y": 1}, {"t_ms": 10, "x": 2, "y": 2}])
        with pytest.raises(NonMonotonicTime):
            parse_track(raw, META, sort=False)

    def test_duplicate_timestamps_rejected(self):
        raw = jsonl([{"t_ms": 5, "x": 1, "y": 1}, {"t_ms": 5, "x": 2, "y": 2}])
        with pytest.raises(NonMonotonicTime):
            parse_track(raw, META)

    def test_bad_grade_in_meta(self):
        with pytest.raises(BadGrade):
            parse_track(jsonl([{"t_ms": 0, "x": 1, "y": 2}]), {**META, "decision": 7})

    def test_missing_meta_key(self):
        with pytest.raises(KeyError):
            parse_track(jsonl([{"t_ms": 0, "x": 1, "y": 2}]), {"image_id": "x"})


class TestStepLengths:
    def test_three_four_five(self):
        track = make_track([(0, 0), (3, 4), (3, 4)])
        steps = step_lengths(track)
        assert steps.steps.tolist() == [5.0, 0.0]

    def test_single_sample(self):
        with pytest.raises(InsufficientData):
            step_lengths(make_track([(1, 1)]))

    def test_identical_points_zero_steps(self):
        track = make_track([(7, 7)] * 6)
        assert step_lengths(track).steps.tolist() == [0.0] * 5


coords = st.floats(min_value=0.0, max_value=800.0, allow_nan=False)
point_lists = st.lists(st.tuples(coords, coords), min_size=2, max_size=60)


@given(point_lists)
def test_step_count_is_samples_minus_one(points):
    track = make_track(points)
    assert len(step_lengths(track)) == len(points) - 1


@given(point_lists, st.floats(-math.pi, math.pi), st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=60)
def test_steps_invariant_under_rigid_motion(points, angle, dx, dy):
    track = make_track(points)
    base = step_lengths(track).steps
    c, s = math.cos(angle), math.sin(angle)
    moved = make_track([(c * x - s * y + dx, s * x + c * y + dy) for x, y in points])
    np.testing.assert_allclose(step_lengths(moved).steps, base, rtol=0, atol=1e-9)


@given(
    st.lists(st.tuples(coords, coords), min_size=1, max_size=40),
    st.integers(0, 4),
)
@settings(max_examples=60)
def test_parse_of_serialize_is_identity(points, grade):
    samples = [GazeSample(t=float(i) * 7.75, x=x, y=y) for i, (x, y) in enumerate(points)]
    track = GazeTrack(samples=samples, image_id="im", reader_id="rd", decision=grade)
    body, meta = serialize_track(track)
    back = parse_track(body, meta)
    assert back == track


def test_save_load_pair(tmp_path):
    track = make_track([(1, 2), (3, 4), (5, 6)])
    path = tmp_path / "case.gaze.jsonl"
    save_track(track, path)
    assert meta_path_for(path).exists()
    assert load_track(path) == track
