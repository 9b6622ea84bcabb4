"""Constraint sets, projections, and schedules."""

import numpy as np
import pytest

import hyperheat as hh
from hyperheat.constraint import (
    schedule_derivative,
    schedule_from_json,
    schedule_to_json,
    schedule_value,
)
from hyperheat.errors import OutOfRange, ParseError


def test_project_is_suffix_overwrite():
    k = hh.ConstraintSet(np.array([0.0]))
    assert np.array_equal(hh.project(np.array([5.0, 7.0]), k), [5.0, 0.0])


def test_project_idempotent_on_admissible():
    k = hh.ConstraintSet(np.array([1.0, -2.0]))
    x = np.array([3.0, 4.0, 1.0, -2.0])
    assert np.array_equal(hh.project(x, k), x)


def test_projection_optimality_brute():
    rng = np.random.default_rng(0)
    k = hh.ConstraintSet(np.array([0.3, -1.2]))
    x = rng.normal(size=5)
    px = hh.project(x, k)
    for _ in range(100):
        y = np.concatenate((rng.normal(size=3), k.a_values))
        assert np.linalg.norm(x - px) <= np.linalg.norm(x - y) + 1e-12


def test_project_is_nonexpansive():
    rng = np.random.default_rng(1)
    k = hh.ConstraintSet(rng.normal(size=2))
    for _ in range(200):
        x, y = rng.normal(size=6), rng.normal(size=6)
        assert np.linalg.norm(hh.project(x, k) - hh.project(y, k)) <= np.linalg.norm(
            x - y
        ) + 1e-12


def test_lift_reduce_identities():
    rng = np.random.default_rng(2)
    k = hh.ConstraintSet(np.array([2.0, 3.0]))
    f = rng.normal(size=4)
    assert np.array_equal(hh.reduce(hh.lift(f, k), k), f)
    x = rng.normal(size=6)
    assert np.array_equal(hh.lift(hh.reduce(x, k), k), hh.project(x, k))


def test_lift_with_no_free_coordinates():
    k = hh.ConstraintSet(np.array([1.0, 2.0]))
    assert np.array_equal(hh.lift(np.zeros(0), k), [1.0, 2.0])


def test_constant_schedule():
    s = hh.Schedule.constant([1.5, -1.0])
    assert np.array_equal(schedule_value(s, 0.0), [1.5, -1.0])
    assert np.array_equal(schedule_value(s, 100.0), [1.5, -1.0])
    assert np.array_equal(schedule_derivative(s, 3.0), [0.0, 0.0])


def test_linear_segment_value_and_derivative():
    s = hh.Schedule(times=np.array([0.0, 1.0]), samples=np.array([[0.0], [2.0]]))
    assert schedule_value(s, 0.5) == pytest.approx(1.0)
    assert schedule_derivative(s, 0.5) == pytest.approx(2.0)


def test_derivative_right_slope_at_knot():
    s = hh.Schedule(
        times=np.array([0.0, 1.0, 2.0]),
        samples=np.array([[0.0], [1.0], [3.0]]),
    )
    assert schedule_derivative(s, 1.0) == pytest.approx(2.0)
    assert schedule_derivative(s, 2.0) == pytest.approx(2.0)  # final knot: last slope
    assert schedule_derivative(s, 0.0) == pytest.approx(1.0)


def test_out_of_range():
    s = hh.Schedule(times=np.array([0.0, 1.0]), samples=np.array([[0.0], [2.0]]))
    with pytest.raises(OutOfRange):
        s.value(1.5)
    with pytest.raises(OutOfRange):
        s.value(-0.1)


def test_schedule_validation():
    with pytest.raises(ValueError):
        hh.Schedule(times=np.array([0.5, 1.0]), samples=np.zeros((2, 1)))
    with pytest.raises(ValueError):
        hh.Schedule(times=np.array([0.0, 0.0]), samples=np.zeros((2, 1)))
    with pytest.raises(ValueError):
        hh.Schedule(times=np.array([0.0, 1.0]), samples=np.zeros((3, 1)))


def test_schedule_json_round_trip():
    s = hh.Schedule(
        times=np.array([0.0, 0.5, 2.0]),
        samples=np.array([[0.0, 1.0], [2.0, -1.0], [1.0, 0.0]]),
    )
    s2 = schedule_from_json(schedule_to_json(s), expected_dim=2)
    assert np.array_equal(s.times, s2.times)
    assert np.array_equal(s.samples, s2.samples)


def test_schedule_json_validation():
    with pytest.raises(ParseError):
        schedule_from_json('{"times": [0, 1], "values": [[1]]}')
    with pytest.raises(ParseError):
        schedule_from_json('{"times": [0, 1], "values": [[1], [2]]}', expected_dim=2)
    with pytest.raises(ParseError):
        schedule_from_json('{"times": [0, 1]}')


def test_indicator_section_shape_helper():
    from hyperheat.constraint import indicator_section_residual

    xi = np.array([0.0, 0.0, 4.0, -2.0])
    assert indicator_section_residual(xi, 2) == 0.0
    assert indicator_section_residual(np.array([1.0, 0.0, 3.0]), 1) == 1.0
