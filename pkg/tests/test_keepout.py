import math

import numpy as np
import pytest

from safeslew.keepout import KeepOutZone, build_mf, delta_n_body, kappa, theta_and_margin
from safeslew.quatmath import (
    from_axis_angle,
    random_unit_quaternion,
    random_unit_vector,
    rotate_to_inertial,
)


def _mf_oracle(r, n, half_angle):
    # independent assembly straight from the block definition
    c = math.cos(half_angle)
    top = float(np.dot(r, n)) - c
    cross = np.cross(r, n)
    a3 = np.outer(r, n) + np.outer(n, r) - (float(np.dot(r, n)) + c) * np.eye(3)
    m = np.zeros((4, 4))
    m[0, 0] = top
    m[0, 1:] = cross
    m[1:, 0] = cross
    m[1:, 1:] = a3
    return m


def test_build_mf_aligned_top_left():
    m = build_mf(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), math.radians(25.0))
    assert abs(m[0, 0] - 0.09369221296335006) <= 1e-15


def test_build_mf_example_zone_top_left(table2_zone):
    # avoid direction normalized at construction; frozen from the oracle
    assert abs(table2_zone.m[0, 0] - (-0.2034128619741823)) <= 1e-15


def test_build_mf_matches_oracle_and_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(200):
        r = random_unit_vector(rng)
        n = random_unit_vector(rng)
        half = rng.uniform(0.05, 1.5)
        m = build_mf(r, n, half)
        assert np.array_equal(m, m.T)
        assert np.max(np.abs(m - _mf_oracle(r, n, half))) <= 1e-15


def test_zone_validation():
    with pytest.raises(ValueError):
        KeepOutZone.create(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), 0.0)
    with pytest.raises(ValueError):
        KeepOutZone.create(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]), math.pi / 2)
    with pytest.raises(ValueError):
        KeepOutZone.create(np.zeros(3), np.array([1.0, 0.0, 0.0]), 0.4)
    z = KeepOutZone.create(np.array([2.0, 0.0, 0.0]), np.array([0.0, 3.0, 0.0]), 0.4)
    assert abs(np.linalg.norm(z.n_inertial) - 1.0) <= 1e-9
    assert abs(np.linalg.norm(z.r_body) - 1.0) <= 1e-9


def test_kappa_identity_selects_top_left(table2_zone):
    q = np.array([1.0, 0.0, 0.0, 0.0])
    assert kappa(q, table2_zone) == table2_zone.m[0, 0]


def test_kappa_boresight_at_center(table2_zone):
    # rotate the boresight onto the avoid direction: kappa = 1 - cos(theta_F)
    r = table2_zone.r_body
    n = table2_zone.n_inertial
    axis = np.cross(r, n)
    angle = math.acos(float(r @ n))
    q = from_axis_angle(axis, angle)
    assert abs(kappa(q, table2_zone) - (1.0 - math.cos(table2_zone.half_angle))) <= 1e-12


def test_kappa_matches_angle_form():
    rng = np.random.default_rng(1)
    zones = [
        KeepOutZone.create(random_unit_vector(rng), random_unit_vector(rng), rng.uniform(0.05, 1.5))
        for _ in range(20)
    ]
    for i in range(10_000):
        z = zones[i % len(zones)]
        q = random_unit_quaternion(rng)
        direct = float(rotate_to_inertial(q, z.r_body) @ z.n_inertial) - math.cos(z.half_angle)
        assert abs(kappa(q, z) - direct) <= 1e-10


def test_kappa_sign_matches_margin_sign():
    rng = np.random.default_rng(2)
    zones = [
        KeepOutZone.create(random_unit_vector(rng), random_unit_vector(rng), rng.uniform(0.05, 1.5))
        for _ in range(10)
    ]
    for i in range(100_000):
        z = zones[i % len(zones)]
        q = random_unit_quaternion(rng)
        k = kappa(q, z)
        _, margin = theta_and_margin(q, z)
        assert (k < 0.0) == (margin > 0.0) or abs(k) < 1e-13
        assert kappa(-q, z) == k
        assert abs(k) <= 2.0


def test_theta_and_margin_identity(table2_zone):
    theta, margin = theta_and_margin(np.array([1.0, 0.0, 0.0, 0.0]), table2_zone)
    assert abs(theta - 0.7913370273607957) <= 1e-15
    assert abs(margin - 0.3550047143622133) <= 1e-15


def test_theta_margin_boundary_consistency(table2_zone):
    # boresight exactly on the cone edge: margin = 0 and kappa = 0
    r = table2_zone.r_body
    n = table2_zone.n_inertial
    axis = np.cross(r, n)
    angle = math.acos(float(r @ n)) - table2_zone.half_angle
    q = from_axis_angle(axis, angle)
    theta, margin = theta_and_margin(q, table2_zone)
    assert abs(margin) <= 1e-10
    assert abs(kappa(q, table2_zone)) <= 1e-10
    assert abs(theta - table2_zone.half_angle) <= 1e-10


def test_theta_antipodal(table2_zone):
    r = table2_zone.r_body
    n = table2_zone.n_inertial
    axis = np.cross(r, n)
    angle = math.acos(float(r @ n)) + math.pi  # overshoot to the antipode
    q = from_axis_angle(axis, angle)
    theta, _ = theta_and_margin(q, table2_zone)
    assert abs(theta - math.pi) <= 1e-7


def test_delta_n_direct_substitution():
    # identity attitude, boresight x, avoid direction y: (-1, 1, 0)/sqrt(2)
    z = KeepOutZone.create(np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]), 0.4)
    dn, degenerate = delta_n_body(np.array([1.0, 0.0, 0.0, 0.0]), z)
    assert not degenerate
    assert np.max(np.abs(dn - np.array([-1.0, 1.0, 0.0]) / math.sqrt(2.0))) <= 1e-15


def test_delta_n_unit_norm():
    rng = np.random.default_rng(3)
    z = KeepOutZone.create(random_unit_vector(rng), random_unit_vector(rng), 0.5)
    count = 0
    for _ in range(10_000):
        q = random_unit_quaternion(rng)
        dn, degenerate = delta_n_body(q, z)
        if not degenerate:
            count += 1
            assert abs(np.linalg.norm(dn) - 1.0) <= 1e-12
    assert count > 9_900


def test_delta_n_degenerate_flag():
    z = KeepOutZone.create(np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]), 0.4)
    # rotate boresight exactly onto the avoid direction
    q = from_axis_angle(np.array([0.0, 0.0, 1.0]), math.pi / 2.0)
    dn, degenerate = delta_n_body(q, z)
    assert degenerate
    assert np.array_equal(dn, np.zeros(3))
