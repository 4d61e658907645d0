"""Sampled-data control-barrier-function safety filter for the keep-out cone.

Let kappa(q) = q^T M q be the cone gap (negative outside the zone) and

    h = kappa + kappa_dot*|kappa_dot| / (2*mu)

the barrier that additionally penalizes approach speed. With psi(x, tau)
the torque-affine certain part of kappa's second derivative, the filter
enforces, at the controller period T,

    p_kappa(T) = kappa + kappa_dot*T + (psi + m2_pos)*T^2/2 + m3_pos*T^3/6
               <= -kappa_margin
    p_h(T)     = p_kappa(T) + ssq(z)/(2*mu) <= -h_margin

where ssq(l) = l*|l| and z collects the first-order evolution of
kappa_dot. Both are affine in tau apart from the signed square, so the
minimal-deviation problem splits into two convex branches on the sign of
z: z >= 0 keeps the exact quadratic (convex_branch), z <= 0 drops the
then-nonpositive signed square and conservatively tightens p_kappa to
-h_margin (conservative_branch). If neither branch is feasible the filter
commands full braking torque against psi's torque gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .activeset import solve_min_deviation
from .dynamics import InertiaMatrix, RigidBodyState
from .keepout import KeepOutZone, kappa

PASSTHROUGH = "passthrough"
CONVEX_BRANCH = "convex_branch"
CONSERVATIVE_BRANCH = "conservative_branch"
FALLBACK_BRAKING = "fallback_braking"

# z as printed keeps the kappa_dot*dt product inside the signed square;
# h_recovering replaces it with kappa_dot so p_h -> h as dt -> 0.
PH_FORMS = ("as_printed", "h_recovering")


def ssq(x: float) -> float:
    """Signed square x*|x|."""
    return x * abs(x)


@dataclass
class SafetyFilterParams:
    """Filter tuning: period, evolution bounds, barrier parameter, margins."""

    period: float = 0.1
    m2_pos: float = 1.64e-5
    m2_neg: float = -1.64e-5
    m3_pos: float = 6.2e-4
    m3_neg: float = -6.2e-4
    mu: float = 0.0025
    kappa_margin: float = 3.18e-6
    h_margin: float = 3.18e-6
    tau_max: float = 2.0
    solver_tol: float = 1e-9
    ph_form: str = "h_recovering"

    def __post_init__(self) -> None:
        if not 0.0 < self.mu <= 0.0025:
            raise ValueError(f"mu must lie in (0, 0.0025], got {self.mu}")
        for name in ("kappa_margin", "h_margin", "period", "tau_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.m2_neg <= 0.0 <= self.m2_pos:
            raise ValueError("m2 bounds must bracket zero")
        if not self.m3_neg <= 0.0 <= self.m3_pos:
            raise ValueError("m3 bounds must bracket zero")
        if self.ph_form not in PH_FORMS:
            raise ValueError(f"ph_form must be one of {PH_FORMS}")


@dataclass
class FilterOutcome:
    """Certified torque plus the constraint residuals it achieves."""

    tau_safe: np.ndarray
    modified: bool
    branch: str
    p_kappa_residual: float
    p_h_residual: float


def kappa_dot(state: RigidBodyState, zone: KeepOutZone) -> float:
    """First time derivative 2 q^T M q_dot of the cone gap."""
    q = state.q
    w = state.omega
    qd = _qdot(q, w)
    return 2.0 * float((zone.m @ q) @ qd)


def psi_affine(
    state: RigidBodyState, zone: KeepOutZone, inertia: InertiaMatrix
) -> tuple[float, np.ndarray]:
    """Certain part of kappa's second derivative as psi(tau) = a + b . tau.

    kappa_ddot = 2 q_dot^T M q_dot + 2 q^T M q_ddot with
    q_ddot = (q_dot (x) [0,w] + q (x) [0,w_dot]) / 2; the torque enters
    linearly through w_dot = I^-1 (tau - w x I w).
    """
    q = state.q
    w = state.omega
    qd = _qdot(q, w)
    mq = zone.m @ q
    mqd = zone.m @ qd

    # 2 q_dot^T M q_dot + q^T M (q_dot (x) [0, w])
    term1 = 2.0 * float(qd @ mqd)
    term2 = float(mq @ _quat_times_vec(qd, w))

    # Gradient of kappa along body-axis rotations: g_j = q^T M (q (x) e_j).
    g = _vec_channel(q) @ mq

    h_ang = inertia.matrix @ w
    gyro = np.array(
        [
            w[1] * h_ang[2] - w[2] * h_ang[1],
            w[2] * h_ang[0] - w[0] * h_ang[2],
            w[0] * h_ang[1] - w[1] * h_ang[0],
        ]
    )
    wdot_free = inertia.inverse @ (-gyro)

    a = term1 + term2 + float(g @ wdot_free)
    b = inertia.inverse.T @ g
    return a, b


def h_value(state: RigidBodyState, zone: KeepOutZone, params: SafetyFilterParams) -> float:
    """Barrier value kappa + ssq(kappa_dot)/(2*mu)."""
    kap = kappa(state.q, zone)
    kd = kappa_dot(state, zone)
    return kap + ssq(kd) / (2.0 * params.mu)


def p_kappa(
    state: RigidBodyState,
    zone: KeepOutZone,
    inertia: InertiaMatrix,
    tau: np.ndarray,
    dt: float,
    params: SafetyFilterParams,
) -> float:
    """Polynomial upper bound on the cone gap dt ahead, affine in tau."""
    c, d, _, _ = _poly_coeffs(state, zone, inertia, dt, params)
    return c + float(d @ tau)


def p_h(
    state: RigidBodyState,
    zone: KeepOutZone,
    inertia: InertiaMatrix,
    tau: np.ndarray,
    dt: float,
    params: SafetyFilterParams,
) -> float:
    """Polynomial upper bound on the barrier dt ahead."""
    c, d, e, f = _poly_coeffs(state, zone, inertia, dt, params)
    return c + float(d @ tau) + ssq(e + float(f @ tau)) / (2.0 * params.mu)


def _qdot(q: np.ndarray, w: np.ndarray) -> np.ndarray:
    return 0.5 * _quat_times_vec(q, w)


def _quat_times_vec(q: np.ndarray, u: np.ndarray) -> np.ndarray:
    """q (x) [0, u] for a 3-vector u."""
    q0, q1, q2, q3 = q
    u1, u2, u3 = u
    return np.array(
        [
            -q1 * u1 - q2 * u2 - q3 * u3,
            q0 * u1 + q2 * u3 - q3 * u2,
            q0 * u2 + q3 * u1 - q1 * u3,
            q0 * u3 + q1 * u2 - q2 * u1,
        ]
    )


def _vec_channel(q: np.ndarray) -> np.ndarray:
    """3x4 matrix whose row j is (q (x) [0, e_j])^T."""
    q0, q1, q2, q3 = q
    return np.array(
        [
            [-q1, q0, q3, -q2],
            [-q2, -q3, q0, q1],
            [-q3, q2, -q1, q0],
        ]
    )


def _poly_coeffs(
    state: RigidBodyState,
    zone: KeepOutZone,
    inertia: InertiaMatrix,
    dt: float,
    params: SafetyFilterParams,
) -> tuple[float, np.ndarray, float, np.ndarray]:
    """(c, d, e, f): p_kappa = c + d.tau and the ssq argument z = e + f.tau."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    kap = kappa(state.q, zone)
    kd = kappa_dot(state, zone)
    a, b = psi_affine(state, zone, inertia)
    c = kap + kd * dt + 0.5 * (a + params.m2_pos) * dt * dt + params.m3_pos * dt**3 / 6.0
    d = (0.5 * dt * dt) * b
    drift = (a + params.m2_pos + 0.5 * params.m3_pos * dt) * dt
    if params.ph_form == "as_printed":
        e = kd * dt + drift
    else:
        e = kd + drift
    f = dt * b
    return c, d, e, f


def filter_torque(
    state: RigidBodyState,
    zone: KeepOutZone,
    inertia: InertiaMatrix,
    tau_rl: np.ndarray,
    params: SafetyFilterParams,
) -> FilterOutcome:
    """Minimal-deviation certified torque for a commanded torque.

    Passes tau_rl through untouched whenever it already satisfies the box
    and both polynomial constraints; otherwise solves the two convex
    branches and returns the feasible one closer to tau_rl. With neither
    branch feasible, commands the box torque that decreases psi fastest.
    """
    tau_rl = np.asarray(tau_rl, dtype=float)
    c, d, e, f = _poly_coeffs(state, zone, inertia, params.period, params)
    inv_2mu = 1.0 / (2.0 * params.mu)
    lim = params.tau_max

    def residuals(tau: np.ndarray) -> tuple[float, float]:
        pk = c + float(d @ tau)
        return pk, pk + ssq(e + float(f @ tau)) * inv_2mu

    pk_rl, ph_rl = residuals(tau_rl)
    if (
        np.all(np.abs(tau_rl) <= lim)
        and pk_rl <= -params.kappa_margin
        and ph_rl <= -params.h_margin
    ):
        return FilterOutcome(tau_rl, False, PASSTHROUGH, pk_rl, ph_rl)

    lo = np.full(3, -lim)
    hi = np.full(3, lim)

    # Branch A: z >= 0, exact signed square becomes a convex quadratic.
    sol_a = solve_min_deviation(
        tau_rl,
        lo,
        hi,
        affine_a=np.array([d, -f]),
        affine_b=np.array([-params.kappa_margin - c, e]),
        quad=(inv_2mu, e, f, c + params.h_margin, d),
        tol=params.solver_tol,
    )
    # Branch B: z <= 0, signed square is nonpositive; tighten p_kappa to
    # cover the h constraint (never optimistic).
    sol_b = solve_min_deviation(
        tau_rl,
        lo,
        hi,
        affine_a=np.array([d, f]),
        affine_b=np.array([min(-params.kappa_margin, -params.h_margin) - c, -e]),
        quad=None,
        tol=params.solver_tol,
    )

    best: Optional[np.ndarray] = None
    branch = FALLBACK_BRAKING
    if sol_a is not None:
        best = sol_a
        branch = CONVEX_BRANCH
    if sol_b is not None and (
        best is None or _obj(sol_b, tau_rl) < _obj(best, tau_rl)
    ):
        best = sol_b
        branch = CONSERVATIVE_BRANCH

    if best is None:
        _, b = psi_affine(state, zone, inertia)
        best = -lim * np.sign(b)

    pk, ph = residuals(best)
    return FilterOutcome(best, True, branch, pk, ph)


def _obj(tau: np.ndarray, tau_rl: np.ndarray) -> float:
    diff = tau - tau_rl
    return float(diff @ diff)


def verify_outcome(outcome: FilterOutcome, params: SafetyFilterParams) -> bool:
    """Post-hoc check that the residuals meet both margins within tolerance."""
    return (
        outcome.p_kappa_residual <= -params.kappa_margin + params.solver_tol
        and outcome.p_h_residual <= -params.h_margin + params.solver_tol
    )
