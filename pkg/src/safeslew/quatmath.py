"""Quaternion algebra and frame rotations.

All quaternions are scalar-first numpy arrays q = [q0, q1, q2, q3] with q0
the scalar part and [q1, q2, q3] the vector part. A unit quaternion q maps
body-frame vectors to the inertial frame through the sandwich product
q (x) [0, v] (x) q*.
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# Norm tolerance accepted by rotation routines before declaring the
# attitude invalid.
UNIT_TOL = 1e-6


class InvalidAttitudeError(ValueError):
    """Raised when a quaternion that must be unit-norm is not."""


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a (x) b, scalar-first. Inputs need not be unit."""
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return np.array(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ]
    )


def qconj(a: np.ndarray) -> np.ndarray:
    """Conjugate [a0, -a1, -a2, -a3]."""
    return np.array([a[0], -a[1], -a[2], -a[3]])


def qnormalize(q: np.ndarray) -> np.ndarray:
    """Rescale to unit norm. Degenerate (near-zero) input is an error."""
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n < 1e-12:
        raise InvalidAttitudeError(f"cannot normalize near-zero quaternion (norm={n:.3e})")
    return q / n


def rotate_to_inertial(q: np.ndarray, v_body: np.ndarray) -> np.ndarray:
    """Rotate a body-frame vector into the inertial frame: q (x) [0,v] (x) q*.

    q must be unit-norm within UNIT_TOL; norm of v is preserved.
    """
    _check_unit(q)
    return _rotate(q, v_body)


def rotate_to_body(q: np.ndarray, v_inertial: np.ndarray) -> np.ndarray:
    """Rotate an inertial-frame vector into the body frame (inverse rotation)."""
    _check_unit(q)
    return _rotate(qconj(q), v_inertial)


def _check_unit(q: np.ndarray) -> None:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if abs(n - 1.0) > UNIT_TOL:
        raise InvalidAttitudeError(f"quaternion norm {n:.9f} deviates from 1 beyond {UNIT_TOL}")


def _rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v' = v + 2 q0 (qv x v) + 2 qv x (qv x v); cheaper than the full
    # triple product and exactly equal to it for unit q.
    q0, q1, q2, q3 = q
    v1, v2, v3 = v
    t1 = q2 * v3 - q3 * v2
    t2 = q3 * v1 - q1 * v3
    t3 = q1 * v2 - q2 * v1
    return np.array(
        [
            v1 + 2.0 * (q0 * t1 + q2 * t3 - q3 * t2),
            v2 + 2.0 * (q0 * t2 + q3 * t1 - q1 * t3),
            v3 + 2.0 * (q0 * t3 + q1 * t2 - q2 * t1),
        ]
    )


def error_quaternion(q: np.ndarray, q_d: np.ndarray) -> np.ndarray:
    """Relative attitude q_d* (x) q, canonicalized so the scalar part is >= 0.

    The sign canonicalization picks the short-rotation representative, which
    the error-angle formula and the reward's progress test both assume.
    """
    qe = qmul(qconj(q_d), q)
    if qe[0] < 0.0:
        qe = -qe
    return qe


def error_angle(q_e: np.ndarray) -> float:
    """Rotation angle 2*arccos(q_e0) in radians, clamped against fp drift."""
    return 2.0 * math.acos(min(1.0, max(-1.0, float(q_e[0]))))


def from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Unit quaternion rotating by `angle` about `axis` (normalized here)."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise ValueError("rotation axis has near-zero magnitude")
    half = 0.5 * angle
    s = math.sin(half) / n
    return np.array([math.cos(half), s * axis[0], s * axis[1], s * axis[2]])


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Uniformly random rotation (normalized 4-d Gaussian sample)."""
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    """Uniformly random direction on the unit sphere."""
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)
