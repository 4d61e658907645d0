"""Keep-out cone geometry.

The cone is an inertial direction n (unit) with half-angle theta_F that the
body-fixed boresight r (unit) must not enter:

    r_I . n - cos(theta_F) < 0        (angle form)
    q^T M q < 0                       (quadratic form in the attitude)

where M is the constant 4x4 symmetric matrix

    M = [ r.n - cos(theta_F)   (r x n)^T                          ]
        [ r x n                r n^T + n r^T - (r.n + cos(theta_F)) I3 ]

built from the body boresight r and inertial avoid direction n. The two
forms are equal for every unit quaternion under the body-to-inertial
rotation convention of quatmath (verified by test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quatmath import rotate_to_body, rotate_to_inertial

# Below this separation the relative avoidance direction is undefined
# (boresight sitting exactly on the avoid direction).
DEGENERATE_TOL = 1e-9


def build_mf(r_body: np.ndarray, n_inertial: np.ndarray, half_angle: float) -> np.ndarray:
    """Assemble the 4x4 cone matrix from unit r (body), unit n (inertial)."""
    r = np.asarray(r_body, dtype=float)
    n = np.asarray(n_inertial, dtype=float)
    c = math.cos(half_angle)
    rn = float(r @ n)
    cross = np.cross(r, n)
    m = np.empty((4, 4))
    m[0, 0] = rn - c
    m[0, 1:] = cross
    m[1:, 0] = cross
    m[1:, 1:] = np.outer(r, n) + np.outer(n, r) - (rn + c) * np.eye(3)
    return m


@dataclass(frozen=True)
class KeepOutZone:
    """Immutable keep-out cone with its cached quadratic-form matrix.

    Construct via `create`, which normalizes the direction vectors and
    builds the matrix once; the cone is constant for an episode.
    """

    n_inertial: np.ndarray
    r_body: np.ndarray
    half_angle: float
    m: np.ndarray

    @classmethod
    def create(
        cls, n_inertial: np.ndarray, r_body: np.ndarray, half_angle: float
    ) -> "KeepOutZone":
        if not 0.0 < half_angle < math.pi / 2.0:
            raise ValueError(f"half angle must lie in (0, pi/2), got {half_angle}")
        n = np.asarray(n_inertial, dtype=float)
        r = np.asarray(r_body, dtype=float)
        nn = np.linalg.norm(n)
        nr = np.linalg.norm(r)
        if nn < 1e-12 or nr < 1e-12:
            raise ValueError("direction vectors must be nonzero")
        n = n / nn
        r = r / nr
        m = build_mf(r, n, half_angle)
        for arr in (n, r, m):
            arr.setflags(write=False)
        return cls(n_inertial=n, r_body=r, half_angle=half_angle, m=m)


def kappa(q: np.ndarray, zone: KeepOutZone) -> float:
    """Quadratic-form cone gap q^T M q; negative iff the boresight is outside."""
    return float(q @ zone.m @ q)


def theta_and_margin(q: np.ndarray, zone: KeepOutZone) -> tuple[float, float]:
    """Angle between boresight and avoid direction, and its margin above the cone."""
    r_inertial = rotate_to_inertial(q, zone.r_body)
    d = min(1.0, max(-1.0, float(r_inertial @ zone.n_inertial)))
    theta = math.acos(d)
    return theta, theta - zone.half_angle


def delta_n_body(q: np.ndarray, zone: KeepOutZone) -> tuple[np.ndarray, bool]:
    """Unit body-frame direction from the boresight toward the avoid vector.

    Returns (vector, degenerate). When the boresight coincides with the
    avoid direction the difference has no direction; the zero vector plus a
    degenerate flag is returned so observations stay well-defined mid-episode.
    """
    n_body = rotate_to_body(q, zone.n_inertial)
    d = n_body - zone.r_body
    norm = float(np.linalg.norm(d))
    if norm < DEGENERATE_TOL:
        return np.zeros(3), True
    return d / norm, False
