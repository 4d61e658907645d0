"""Rigid-body rotational kinematics and dynamics with fixed-step propagation.

State evolves by

    q_dot     = 1/2 q (x) [0, w]
    I w_dot   = -w x (I w) + tau

with w and tau in the body frame. Propagation uses classical fixed-step RK4
with the torque held constant over the step (zero-order hold), followed by
quaternion renormalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quatmath import qnormalize

# Spacecraft moment of inertia used as the simulation default (kg m^2).
DEFAULT_INERTIA = np.array(
    [
        [60.0, 5.0, 1.0],
        [5.0, 50.0, 2.0],
        [1.0, 2.0, 70.0],
    ]
)


@dataclass(frozen=True)
class InertiaMatrix:
    """Symmetric positive-definite inertia tensor with its cached inverse."""

    matrix: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "InertiaMatrix":
        m = np.asarray(matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got {m.shape}")
        if not np.all(np.abs(m - m.T) <= 1e-12):
            raise ValueError("inertia matrix must be symmetric within 1e-12")
        eigvals = np.linalg.eigvalsh(m)
        if np.any(eigvals <= 0.0):
            raise ValueError(f"inertia matrix must be positive definite, eigenvalues {eigvals}")
        inv = np.linalg.inv(m)
        m.setflags(write=False)
        inv.setflags(write=False)
        return cls(matrix=m, inverse=inv)

    @classmethod
    def default(cls) -> "InertiaMatrix":
        return cls.from_matrix(DEFAULT_INERTIA)


@dataclass
class RigidBodyState:
    """Attitude quaternion, body angular rate (rad/s), and time (s)."""

    q: np.ndarray
    omega: np.ndarray
    t: float = 0.0

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(q=self.q.copy(), omega=self.omega.copy(), t=self.t)


def state_derivative(
    state: RigidBodyState, tau: np.ndarray, inertia: InertiaMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (q_dot, omega_dot) at the given state and torque."""
    y = np.concatenate([state.q, state.omega])
    dy = _deriv(y, tau, inertia.matrix, inertia.inverse)
    return dy[:4], dy[4:]


def _deriv(y: np.ndarray, tau: np.ndarray, im: np.ndarray, iminv: np.ndarray) -> np.ndarray:
    q0, q1, q2, q3, w1, w2, w3 = y
    # q_dot = 1/2 q (x) [0, w]
    dq0 = -0.5 * (q1 * w1 + q2 * w2 + q3 * w3)
    dq1 = 0.5 * (q0 * w1 + q2 * w3 - q3 * w2)
    dq2 = 0.5 * (q0 * w2 + q3 * w1 - q1 * w3)
    dq3 = 0.5 * (q0 * w3 + q1 * w2 - q2 * w1)
    # h = I w; gyroscopic term w x h
    h1 = im[0, 0] * w1 + im[0, 1] * w2 + im[0, 2] * w3
    h2 = im[1, 0] * w1 + im[1, 1] * w2 + im[1, 2] * w3
    h3 = im[2, 0] * w1 + im[2, 1] * w2 + im[2, 2] * w3
    r1 = tau[0] - (w2 * h3 - w3 * h2)
    r2 = tau[1] - (w3 * h1 - w1 * h3)
    r3 = tau[2] - (w1 * h2 - w2 * h1)
    dw1 = iminv[0, 0] * r1 + iminv[0, 1] * r2 + iminv[0, 2] * r3
    dw2 = iminv[1, 0] * r1 + iminv[1, 1] * r2 + iminv[1, 2] * r3
    dw3 = iminv[2, 0] * r1 + iminv[2, 1] * r2 + iminv[2, 2] * r3
    return np.array([dq0, dq1, dq2, dq3, dw1, dw2, dw3])


def _rk4_raw(y: np.ndarray, tau: np.ndarray, im: np.ndarray, iminv: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step without renormalization (exposed for drift diagnostics)."""
    k1 = _deriv(y, tau, im, iminv)
    k2 = _deriv(y + (0.5 * dt) * k1, tau, im, iminv)
    k3 = _deriv(y + (0.5 * dt) * k2, tau, im, iminv)
    k4 = _deriv(y + dt * k3, tau, im, iminv)
    return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def step_zoh(
    state: RigidBodyState, tau: np.ndarray, inertia: InertiaMatrix, dt: float
) -> RigidBodyState:
    """Advance the state by dt with the torque held constant over the step."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    y = np.concatenate([state.q, state.omega])
    y = _rk4_raw(y, tau, inertia.matrix, inertia.inverse, dt)
    return RigidBodyState(q=qnormalize(y[:4]), omega=y[4:], t=state.t + dt)
