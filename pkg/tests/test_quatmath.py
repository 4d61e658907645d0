import math

import numpy as np
import pytest

from safeslew.quatmath import (
    IDENTITY,
    InvalidAttitudeError,
    error_angle,
    error_quaternion,
    from_axis_angle,
    qconj,
    qmul,
    qnormalize,
    random_unit_quaternion,
    rotate_to_body,
    rotate_to_inertial,
)


def test_qmul_identity():
    rng = np.random.default_rng(0)
    for _ in range(100):
        q = rng.standard_normal(4)
        assert np.allclose(qmul(IDENTITY, q), q, atol=0.0)
        assert np.allclose(qmul(q, IDENTITY), q, atol=0.0)


def test_qmul_ij_equals_k():
    i = np.array([0.0, 1.0, 0.0, 0.0])
    j = np.array([0.0, 0.0, 1.0, 0.0])
    assert np.array_equal(qmul(i, j), np.array([0.0, 0.0, 0.0, 1.0]))


def test_qmul_norm_multiplicative():
    rng = np.random.default_rng(1)
    for _ in range(500):
        a = rng.standard_normal(4) * rng.uniform(0.1, 3.0)
        b = rng.standard_normal(4) * rng.uniform(0.1, 3.0)
        lhs = np.linalg.norm(qmul(a, b))
        rhs = np.linalg.norm(a) * np.linalg.norm(b)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, rhs)


def test_qmul_associative():
    rng = np.random.default_rng(2)
    for _ in range(300):
        a, b, c = (random_unit_quaternion(rng) for _ in range(3))
        left = qmul(qmul(a, b), c)
        right = qmul(a, qmul(b, c))
        assert np.max(np.abs(left - right)) <= 1e-12


def test_qconj_identity():
    assert np.array_equal(qconj(IDENTITY), IDENTITY)


def test_qconj_defining_property():
    rng = np.random.default_rng(3)
    for _ in range(100):
        q = rng.standard_normal(4)
        prod = qmul(q, qconj(q))
        assert abs(prod[0] - np.dot(q, q)) <= 1e-12 * np.dot(q, q)
        assert np.max(np.abs(prod[1:])) <= 1e-12


def test_qconj_example_scenario_value():
    q = np.array([0.6428, 0.3138, -0.5892, 0.3757])
    assert np.array_equal(qconj(q), np.array([0.6428, -0.3138, 0.5892, -0.3757]))


def test_rotate_identity():
    rng = np.random.default_rng(4)
    for _ in range(50):
        v = rng.standard_normal(3)
        assert np.allclose(rotate_to_inertial(IDENTITY, v), v, atol=0.0)


def test_rotate_90deg_about_z():
    q = from_axis_angle(np.array([0.0, 0.0, 1.0]), math.pi / 2.0)
    out = rotate_to_inertial(q, np.array([1.0, 0.0, 0.0]))
    assert np.max(np.abs(out - np.array([0.0, 1.0, 0.0]))) <= 1e-15


def test_rotate_isometry_and_inverse():
    rng = np.random.default_rng(5)
    for _ in range(500):
        q = random_unit_quaternion(rng)
        v = rng.standard_normal(3)
        out = rotate_to_inertial(q, v)
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) <= 1e-12
        back = rotate_to_body(q, out)
        assert np.max(np.abs(back - v)) <= 1e-12


def test_rotate_rejects_non_unit():
    with pytest.raises(InvalidAttitudeError):
        rotate_to_inertial(np.array([1.1, 0.0, 0.0, 0.0]), np.ones(3))


def test_qnormalize_rejects_zero():
    with pytest.raises(InvalidAttitudeError):
        qnormalize(np.zeros(4))


def test_error_quaternion_same_attitude_is_identity():
    rng = np.random.default_rng(6)
    for _ in range(10_000):
        q = random_unit_quaternion(rng)
        qe = error_quaternion(q, q)
        assert abs(qe[0] - 1.0) <= 1e-12
        assert np.max(np.abs(qe[1:])) <= 1e-12


def test_error_quaternion_identity_target_canonicalizes():
    rng = np.random.default_rng(7)
    for _ in range(200):
        q = random_unit_quaternion(rng)
        qe = error_quaternion(q, IDENTITY)
        assert qe[0] >= 0.0
        expected = q if q[0] >= 0.0 else -q
        assert np.max(np.abs(qe - expected)) <= 1e-15


def test_error_angle_values():
    assert error_angle(np.array([1.0, 0.0, 0.0, 0.0])) == 0.0
    assert error_angle(np.array([0.0, 1.0, 0.0, 0.0])) == math.pi
    # scalar part cos(50 deg) -> full error angle of 100 deg
    q50 = from_axis_angle(np.array([0.0, 1.0, 0.0]), math.radians(100.0))
    assert abs(error_angle(q50) - math.radians(100.0)) <= 1e-12
    # example scenario: scalar part 0.6428 is a deviation of ~100 deg
    assert abs(error_angle(np.array([0.6428, 0.0, 0.0, 0.0])) - 1.7452969029637897) <= 1e-15
    assert abs(math.degrees(1.7452969029637897) - 100.0) < 2e-3


def test_error_angle_clamps_drift():
    assert error_angle(np.array([1.0 + 5e-13, 0.0, 0.0, 0.0])) == 0.0
