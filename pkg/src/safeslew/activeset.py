"""Exact small-scale solver for minimal-deviation torque problems.

Solves, in 3 variables,

    min ||x - target||^2
    s.t.  lo <= x <= hi                     (box)
          A x <= b                          (affine rows)
          scale*(e + f.x)^2 + c + d.x <= 0  (optional convex quadratic)

by exhaustive active-set enumeration: every combination of active
constraints yields a small KKT system (linear, or cubic in the quadratic
constraint's multiplier), and any KKT point of this convex program is the
global optimum. Candidates are tried smallest active set first so the
common cases exit early.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

_ZERO_NORMAL = 1e-14


def solve_min_deviation(
    target: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    affine_a: np.ndarray,
    affine_b: np.ndarray,
    quad: tuple[float, float, np.ndarray, float, np.ndarray] | None = None,
    tol: float = 1e-9,
) -> np.ndarray | None:
    """Return the minimizer, or None when the constraint set is infeasible.

    `quad`, when given, is (scale, e, f, c, d) encoding
    scale*(e + f.x)^2 + c + d.x <= 0 with scale > 0.
    """
    target = np.asarray(target, dtype=float)
    n = target.size

    # Box faces as affine rows: x_i <= hi_i and -x_i <= -lo_i.
    rows = []
    rhs = []
    eye = np.eye(n)
    for i in range(n):
        rows.append(eye[i])
        rhs.append(hi[i])
        rows.append(-eye[i])
        rhs.append(-lo[i])
    for a_row, b_val in zip(np.atleast_2d(affine_a), np.atleast_1d(affine_b)):
        norm = np.linalg.norm(a_row)
        if norm <= _ZERO_NORMAL:
            if b_val < -tol:
                return None  # constant constraint 0 <= b violated
            continue
        rows.append(np.asarray(a_row, dtype=float))
        rhs.append(float(b_val))

    # A quadratic with no x-dependence in its square term is affine.
    if quad is not None:
        scale, e, f, c, d = quad
        f = np.asarray(f, dtype=float)
        d = np.asarray(d, dtype=float)
        if np.linalg.norm(f) <= _ZERO_NORMAL:
            const = scale * e * e + c
            if np.linalg.norm(d) <= _ZERO_NORMAL:
                if const > tol:
                    return None
            else:
                rows.append(d)
                rhs.append(-const)
            quad = None
        else:
            quad = (float(scale), float(e), f, float(c), d)

    a_mat = np.array(rows)
    b_vec = np.array(rhs)
    m = len(rows)

    best_x = None
    best_obj = np.inf
    indices = range(m)
    for size in range(n + 1):
        for combo in combinations(indices, size):
            for x in _candidates(target, a_mat, b_vec, combo, quad, quad_active=False):
                x, strict = _verify(x, target, a_mat, b_vec, combo, quad, False, tol)
                if x is None:
                    continue
                if strict:
                    return x
                obj = float((x - target) @ (x - target))
                if obj < best_obj:
                    best_obj, best_x = obj, x
            if quad is not None and size < n:
                for x in _candidates(target, a_mat, b_vec, combo, quad, quad_active=True):
                    x, strict = _verify(x, target, a_mat, b_vec, combo, quad, True, tol)
                    if x is None:
                        continue
                    if strict:
                        return x
                    obj = float((x - target) @ (x - target))
                    if obj < best_obj:
                        best_obj, best_x = obj, x
    return best_x


def _candidates(target, a_mat, b_vec, combo, quad, quad_active):
    """Stationary points for one active set (affine rows `combo` tight)."""
    act = a_mat[list(combo)]
    if len(combo) > 0:
        gram = act @ act.T
        if abs(np.linalg.det(gram)) < 1e-12:
            return  # linearly dependent active normals
    if not quad_active:
        if len(combo) == 0:
            yield target.copy()
            return
        lam = np.linalg.solve(gram, act @ target - b_vec[list(combo)])
        yield target - act.T @ lam
        return

    # Quadratic constraint active: reduce to the affine active set's
    # nullspace, where stationarity plus the tight constraint give a cubic
    # in the quadratic constraint's multiplier.
    scale, e, f, c, d = quad
    if len(combo) == 0:
        x0 = np.zeros_like(target)
        null = np.eye(target.size)
    else:
        x0 = act.T @ np.linalg.solve(gram, b_vec[list(combo)])
        _, s, vt = np.linalg.svd(act)
        rank = int(np.sum(s > 1e-12 * s[0]))
        null = vt[rank:].T
        if null.shape[1] == 0:
            return
    y_hat = null.T @ (target - x0)
    e1 = e + float(f @ x0)
    f1 = null.T @ f
    c1 = c + float(d @ x0)
    d1 = null.T @ d

    u0 = e1 + float(f1 @ y_hat)
    big_b = scale * float(f1 @ f1)
    aco = 0.5 * float(f1 @ d1)
    big_d = 0.5 * float(d1 @ d1)
    c_tot = c1 + float(d1 @ y_hat)

    p0 = scale * u0 * u0 + c_tot
    p1 = -4.0 * scale * u0 * aco - big_d + 2.0 * c_tot * big_b
    p2 = 3.0 * scale * aco * aco - 2.0 * scale * aco * u0 * big_b - 2.0 * big_d * big_b + c_tot * big_b * big_b
    p3 = 2.0 * scale * aco * aco * big_b - big_d * big_b * big_b

    coeffs = np.array([p3, p2, p1, p0])
    mag = np.max(np.abs(coeffs))
    if mag == 0.0:
        return
    coeffs = coeffs / mag
    nz = np.nonzero(np.abs(coeffs) > 1e-14)[0]
    if nz.size == 0:
        return
    coeffs = coeffs[nz[0] :]
    if coeffs.size == 1:
        return
    for root in np.roots(coeffs):
        if abs(root.imag) > 1e-8 * (1.0 + abs(root.real)):
            continue
        lam = float(root.real)
        if lam < -1e-9:
            continue
        u = (u0 - aco * lam) / (1.0 + big_b * lam)
        y = y_hat - lam * (scale * u * f1 + 0.5 * d1)
        yield x0 + null @ y


def _verify(x, target, a_mat, b_vec, combo, quad, quad_active, tol):
    """Feasibility plus KKT check. Returns (x or None, strict_kkt)."""
    if not np.all(np.isfinite(x)):
        return None, False
    slack = a_mat @ x - b_vec
    if np.max(slack) > tol:
        return None, False
    grads = [a_mat[i] for i in combo]
    if quad is not None:
        scale, e, f, c, d = quad
        u = e + float(f @ x)
        gq = scale * u * u + c + float(d @ x)
        if gq > tol:
            return None, False
        if quad_active:
            grads.append(2.0 * scale * u * f + d)
    if not grads:
        return x, True  # unconstrained stationary point: x == target
    gmat = np.array(grads).T
    grad_obj = 2.0 * (x - target)
    lam, res, *_ = np.linalg.lstsq(gmat, -grad_obj, rcond=None)
    residual = np.linalg.norm(gmat @ lam + grad_obj)
    scale_ref = 1.0 + np.linalg.norm(grad_obj)
    strict = residual <= 1e-8 * scale_ref and np.all(lam >= -1e-7 * (1.0 + np.max(np.abs(lam))))
    return x, bool(strict)
