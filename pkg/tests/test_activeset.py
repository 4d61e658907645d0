import numpy as np

from safeslew.activeset import solve_min_deviation

BOX = np.full(3, 2.0)
NO_A = np.zeros((0, 3))
NO_B = np.zeros(0)


def _feasible(x, lo, hi, a, b, quad, tol=1e-9):
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        return False
    if a.size and np.any(a @ x > b + tol):
        return False
    if quad is not None:
        scale, e, f, c, d = quad
        if scale * (e + f @ x) ** 2 + c + d @ x > tol:
            return False
    return True


def test_unconstrained_interior_returns_target():
    t = np.array([0.5, -1.0, 1.5])
    x = solve_min_deviation(t, -BOX, BOX, NO_A, NO_B)
    assert np.array_equal(x, t)


def test_box_clipping():
    t = np.array([3.0, -5.0, 0.25])
    x = solve_min_deviation(t, -BOX, BOX, NO_A, NO_B)
    assert np.max(np.abs(x - np.array([2.0, -2.0, 0.25]))) <= 1e-12


def test_halfspace_projection_hand_computed():
    # project (1,1,1) onto {x : [1,1,0].x <= 0}: subtract the normal component
    t = np.ones(3)
    a = np.array([[1.0, 1.0, 0.0]])
    b = np.array([0.0])
    x = solve_min_deviation(t, -BOX, BOX, a, b)
    assert np.max(np.abs(x - np.array([0.0, 0.0, 1.0]))) <= 1e-12


def test_infeasible_returns_none():
    a = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    b = np.array([-5.0, -5.0])  # x0 <= -5 and x0 >= 5
    assert solve_min_deviation(np.zeros(3), -BOX, BOX, a, b) is None


def test_zero_normal_rows():
    a = np.array([[0.0, 0.0, 0.0]])
    assert solve_min_deviation(np.zeros(3), -BOX, BOX, a, np.array([1.0])) is not None
    assert solve_min_deviation(np.zeros(3), -BOX, BOX, a, np.array([-1.0])) is None


def test_quadratic_constraint_active():
    # (x0 - target) pulled onto the parabola-type set (e + f.x)^2 <= -c - d.x
    quad = (1.0, 0.0, np.array([1.0, 0.0, 0.0]), -1.0, np.zeros(3))  # x0^2 <= 1
    t = np.array([3.0, 0.5, 0.0])
    x = solve_min_deviation(t, -BOX, BOX, NO_A, NO_B, quad=quad)
    assert np.max(np.abs(x - np.array([1.0, 0.5, 0.0]))) <= 1e-9


def test_random_problems_against_sampling_oracle():
    rng = np.random.default_rng(0)
    checked = 0
    for trial in range(300):
        t = rng.uniform(-3.0, 3.0, 3)
        n_rows = rng.integers(0, 3)
        a = rng.standard_normal((n_rows, 3))
        b = rng.uniform(-1.0, 1.0, n_rows)
        quad = None
        if rng.random() < 0.6:
            scale = rng.uniform(0.2, 50.0)
            e = rng.uniform(-1.0, 1.0)
            f = rng.standard_normal(3) * rng.uniform(0.0, 1.0)
            c = rng.uniform(-2.0, 0.5)
            d = rng.standard_normal(3) * 0.3
            quad = (scale, e, f, c, d)
        x = solve_min_deviation(t, -BOX, BOX, a, b, quad=quad)
        samples = rng.uniform(-2.0, 2.0, (3000, 3))
        mask = np.ones(len(samples), dtype=bool)
        if n_rows:
            mask &= np.all(samples @ a.T <= b, axis=1)
        if quad is not None:
            scale, e, f, c, d = quad
            mask &= scale * (e + samples @ f) ** 2 + c + samples @ d <= 0.0
        if x is None:
            # solver says infeasible: no sampled point may be feasible
            assert not mask.any()
            continue
        assert _feasible(x, -BOX, BOX, a, b, quad)
        if mask.any():
            checked += 1
            best = np.min(np.sum((samples[mask] - t) ** 2, axis=1))
            assert np.sum((x - t) ** 2) <= best + 1e-9
    assert checked > 150
