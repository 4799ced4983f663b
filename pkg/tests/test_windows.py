from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wstlspg.burgers_fom import BurgersModel, Parameters, SpatialGrid
from wstlspg.models import LinearModel, zero_model
from wstlspg.windows import (BDF1, BDF2, SCHEMES, LmmScheme, WindowPlan,
                             assemble_window_jacobian, assemble_window_residual,
                             build_window_operators, scheme_by_name, temporal_coefficients)


class DenseBasis:
    """Explicit space-time basis matrix with the row-block interface."""

    def __init__(self, matrix, n_space):
        self.matrix, self.n_space = np.asarray(matrix, dtype=float), n_space
        self.n_st = self.matrix.shape[1]

    def row_block(self, c):
        return self.matrix[c * self.n_space:(c + 1) * self.n_space]


def test_scheme_coefficients():
    assert BDF1.alpha == (1.0, -1.0) and BDF1.beta == (1.0, 0.0) and BDF1.width == 1
    assert BDF2.alpha == (1.5, -2.0, 0.5) and BDF2.beta == (1.0, 0.0, 0.0) and BDF2.width == 2
    for s in SCHEMES.values():
        assert sum(Fraction(a) for a in s.alpha) == 0 and s.alpha[0] != 0
    assert scheme_by_name("bdf2") is BDF2
    with pytest.raises(ValueError):
        scheme_by_name("RK4")
    with pytest.raises(ValueError):
        LmmScheme("bad", (1.0, -0.5), (1.0, 0.0))
    with pytest.raises(ValueError):
        LmmScheme("bad", (0.0, 0.0), (1.0, 0.0))


def test_phi_zeta_examples():
    plan = WindowPlan.uniform(256, 0.1, 6.4, 3.2)
    assert plan.phi(0) == 1 and plan.phi(1) == 65 and plan.phi(3) == 193
    assert plan.zeta(0, 0) == 1 and plan.zeta(1, 1) == 97
    single = WindowPlan.single(256, 0.1)
    assert single.zeta(0, 0) == 1 and single.n_windows == 1 and single.n_sub(0) == 1
    with pytest.raises(IndexError):
        plan.phi(4)
    with pytest.raises(IndexError):
        plan.zeta(0, 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(1, 6), min_size=1, max_size=4), min_size=1, max_size=5))
def test_index_maps_properties(windows):
    plan = WindowPlan(0.1, tuple(tuple(w) for w in windows))
    assert plan.n_time_total == sum(map(sum, windows))
    phis = [plan.phi(k) for k in range(plan.n_windows)]
    assert all(a < b for a, b in zip(phis, phis[1:]))
    for k in range(plan.n_windows):
        z = [plan.zeta(k, m) for m in range(plan.n_sub(k))]
        assert z[0] == plan.phi(k)
        assert all(a < b for a, b in zip(z, z[1:]))
        assert sum(plan.sub_steps(k, m) for m in range(plan.n_sub(k))) == plan.window_steps(k)


def test_plan_divisibility_errors():
    with pytest.raises(ValueError):
        WindowPlan.uniform(256, 0.1, 25.6, 0.3)
    with pytest.raises(ValueError):
        WindowPlan.uniform(256, 0.1, 10.0, 0.1)
    with pytest.raises(ValueError):
        WindowPlan.uniform(256, 0.1, 0.1, 0.2)
    with pytest.raises(ValueError):
        WindowPlan.uniform(256, 0.1, 0.15, 0.15)
    plan = WindowPlan.uniform(256, 0.1, 25.6, 0.1)
    assert plan.n_windows == 1 and plan.n_sub(0) == 256
    assert abs(plan.window_length - 25.6) < 1e-12 and abs(plan.subwindow_length - 0.1) < 1e-12


def test_temporal_coefficients_restart_bdf1():
    Ac, Bc = temporal_coefficients(BDF2, 3)
    assert np.allclose(Ac, [[-1, 1, 0, 0], [0.5, -2, 1.5, 0], [0, 0.5, -2, 1.5]])
    assert np.allclose(Bc, [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def test_residual_examples():
    r = assemble_window_residual(zero_model(1), [[2.0]], [1.0], BDF1, 1.0)
    assert np.allclose(r, [[1.0]])
    V = np.full((3, 4), 2.5)
    assert np.allclose(assemble_window_residual(zero_model(3), V, V[:, 0], BDF2, 0.1), 0.0)
    with pytest.raises(ValueError):
        assemble_window_residual(zero_model(3), V, np.zeros(2), BDF1, 0.1)
    with pytest.raises(ValueError):
        assemble_window_residual(zero_model(3), np.zeros((2, 4)), np.zeros(3), BDF1, 0.1)


def test_jacobian_examples():
    J = assemble_window_jacobian(zero_model(1), np.zeros((1, 2)), np.zeros(1), BDF1, 0.1,
                                 DenseBasis(np.eye(2), 1))
    assert np.allclose(J, [[1, 0], [-1, 1]])
    model = BurgersModel(Parameters(3, 0.015), SpatialGrid(5, 0, 2.5))
    J = assemble_window_jacobian(model, np.ones((5, 3)), np.ones(5), BDF2, 0.1,
                                 DenseBasis(np.zeros((15, 4)), 5))
    assert J.shape == (15, 4) and not np.any(J)


@pytest.mark.parametrize("scheme", [BDF1, BDF2])
def test_jacobian_finite_differences(scheme, rng):
    ns, nt, nb = 6, 5, 7
    model = BurgersModel(Parameters(3.3, 0.017), SpatialGrid(ns, 0, 3))
    basis = DenseBasis(rng.standard_normal((ns * nt, nb)), ns)
    inc = rng.uniform(1, 3, ns)
    y = 0.1 * rng.standard_normal(nb)

    def r(y):
        V = inc[:, None] + (basis.matrix @ y).reshape(nt, ns).T
        return assemble_window_residual(model, V, inc, scheme, 0.1).ravel(order="F")

    V = inc[:, None] + (basis.matrix @ y).reshape(nt, ns).T
    J = assemble_window_jacobian(model, V, inc, scheme, 0.1, basis)
    h = 1e-6
    Jfd = np.column_stack([(r(y + h * e) - r(y - h * e)) / (2 * h) for e in np.eye(nb)])
    assert np.linalg.norm(J - Jfd) <= 1e-5 * np.linalg.norm(Jfd)


def test_operator_examples():
    ops = build_window_operators(BDF1, 2, 1)
    assert np.allclose(ops.A, [[1, 0], [-1, 1]]) and np.allclose(ops.B, np.eye(2))
    assert np.allclose(ops.A_IC, [[-1], [0]]) and np.allclose(ops.B_IC, 0)
    ops = build_window_operators(BDF2, 4, 1)
    assert np.allclose(np.diag(ops.A), [1, 1.5, 1.5, 1.5])
    assert np.allclose(np.diag(ops.A, -1), [-2, -2, -2])
    assert np.allclose(ops.A_IC[:, 0], [-1, 0.5, 0, 0])
    assert np.allclose(np.diag(ops.A, -2), [0.5, 0.5])
    assert np.allclose(ops.B, np.eye(4))


@pytest.mark.parametrize("scheme", [BDF1, BDF2])
@pytest.mark.parametrize("n_steps", [1, 2, 7])
def test_operator_identity(scheme, n_steps, rng):
    ns = 4
    model = BurgersModel(Parameters(3, 0.015), SpatialGrid(ns, 0, 2))
    ops = build_window_operators(scheme, n_steps, ns)
    for _ in range(20):
        V, u0 = rng.uniform(-1, 4, (ns, n_steps)), rng.uniform(-1, 4, ns)
        v = V.ravel(order="F")
        fv = model.velocity(V).ravel(order="F")
        lhs = (ops.A @ v - 0.1 * ops.B @ fv + ops.A_IC @ u0
               - 0.1 * ops.B_IC @ model.velocity(u0))
        rhs = assemble_window_residual(model, V, u0, scheme, 0.1).ravel(order="F")
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1, np.linalg.norm(rhs))
    blocks = [ops.A[i * ns:(i + 1) * ns, i * ns:(i + 1) * ns] for i in range(n_steps)]
    assert all(np.allclose(b, b[0, 0] * np.eye(ns)) and b[0, 0] != 0 for b in blocks)
    assert np.allclose(np.triu(ops.A, 1), 0)


def test_linear_model_residual():
    M = np.array([[-1.0, 0.5], [0.0, -2.0]])
    model = LinearModel(M, [0.1, 0.2])
    V, u0 = np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([0.5, 0.5])
    r = assemble_window_residual(model, V, u0, BDF1, 0.1)
    expected = np.column_stack([V[:, 0] - u0 - 0.1 * (M @ V[:, 0] + [0.1, 0.2]),
                                V[:, 1] - V[:, 0] - 0.1 * (M @ V[:, 1] + [0.1, 0.2])])
    assert np.allclose(r, expected)
