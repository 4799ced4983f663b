import numpy as np
import pytest

from conftest import SMALL_GRID, TEST_MU
from wstlspg.burgers_fom import BurgersModel, march
from wstlspg.metrics import mse
from wstlspg.models import LinearModel, scalar_decay
from wstlspg.solver import (GaussNewtonConfig, RankDeficientWindow, WindowDivergence,
                            WindowProblem, gauss_newton, reconstruct_state, solve_st_lspg,
                            solve_wst_lspg, window_reference_state)
from wstlspg.subspaces import (SubwindowBasis, WindowBasis, fit_initial_guess,
                               identity_window_bases, train_window_bases)
from wstlspg.windows import BDF1, BDF2, WindowPlan

TIGHT = GaussNewtonConfig(tol=1e-8)


def test_config_validation():
    for bad in (dict(tol=0), dict(max_iters=0), dict(line_search="wolfe"), dict(shrink=1.0)):
        with pytest.raises(ValueError):
            GaussNewtonConfig(**bad)


def test_reference_state():
    assert np.allclose(window_reference_state([1, 2], 3), [1, 2, 1, 2, 1, 2])
    assert not np.any(window_reference_state(np.zeros(4), 2))
    assert np.allclose(window_reference_state(np.ones(200), 16), 1.0)


def test_reconstruct_state(rng):
    basis = WindowBasis([SubwindowBasis(np.linalg.qr(rng.standard_normal((4, 2)))[0],
                                        [np.linalg.qr(rng.standard_normal((3, 2)))[0]] * 2)])
    ref = rng.standard_normal(4)
    assert np.allclose(reconstruct_state(basis, ref, np.zeros(4)), ref[:, None])
    X = rng.standard_normal((4, 3))
    P = basis.matrix()
    y = P.T @ (X - ref[:, None]).ravel(order="F")
    V = reconstruct_state(basis, ref, y)
    resid = (X - V).ravel(order="F")
    assert np.allclose(P.T @ resid, 0, atol=1e-12)
    ident = identity_window_bases(WindowPlan.single(3, 1.0), 4)[0]
    y = rng.standard_normal(12)
    assert np.allclose(reconstruct_state(ident, ref, y), ref[:, None] + y.reshape(4, 3))


def test_linear_full_basis_one_step(rng):
    M = -np.diag(rng.uniform(0.5, 2, 3)) + 0.1 * rng.standard_normal((3, 3))
    model = LinearModel(M, rng.standard_normal(3))
    plan = WindowPlan.single(4, 0.1)
    Q = np.linalg.qr(rng.standard_normal((12, 12)))[0]
    basis = WindowBasis([SubwindowBasis(np.eye(3), [Q[:4, :4]] * 3)])
    problem = WindowProblem(model, basis, rng.standard_normal(3), BDF1, 0.1)
    y, rep = gauss_newton(problem, np.zeros(basis.n_st), TIGHT)
    assert rep.converged and rep.iterations <= 2
    assert np.linalg.norm(problem.residual(y)) <= 1e-10


@pytest.mark.parametrize("l_w", [0.1, 0.4, 1.6])
def test_scalar_decay_closed_form(l_w):
    plan = WindowPlan.uniform(16, 0.1, l_w, 0.1)
    sol = solve_wst_lspg(scalar_decay(), identity_window_bases(plan, 1), plan, np.ones(1),
                         cfg=TIGHT)
    assert np.allclose(sol.trajectory.states[0], (1 / 1.1) ** np.arange(1, 17), atol=1e-9)


def test_optimal_guess_single_iteration():
    plan = WindowPlan.single(5, 0.1)
    bases = identity_window_bases(plan, 1)
    exact = (1 / 1.1) ** np.arange(1, 6) - 1.0

    class Exact:
        def predict(self, k, p):
            return exact

    sol = solve_wst_lspg(scalar_decay(), bases, plan, np.ones(1), guess=Exact(), params=0,
                         cfg=TIGHT)
    rep = sol.reports[0]
    assert rep.converged and rep.iterations == 1 and rep.step_norms[0] < 1e-12


def test_rank_deficient_window_raises():
    plan = WindowPlan.single(2, 0.1)
    dup = SubwindowBasis(np.ones((1, 1)), [np.array([[1.0, 1.0], [0.0, 0.0]])])
    with pytest.raises(RankDeficientWindow) as err:
        solve_wst_lspg(scalar_decay(), [WindowBasis([dup])], plan, np.ones(1))
    assert err.value.window == 0


def test_divergence_policy(small_fom):
    model = BurgersModel(TEST_MU, SMALL_GRID)
    plan = WindowPlan.uniform(64, 0.1, 1.6, 1.6)
    bases = identity_window_bases(plan, 50)
    cfg = GaussNewtonConfig(tol=1e-8, max_iters=1)
    with pytest.raises(WindowDivergence) as err:
        solve_wst_lspg(model, bases, plan, small_fom.initial, cfg=cfg)
    assert err.value.report.window == 0
    sol = solve_wst_lspg(model, bases, plan, small_fom.initial,
                         cfg=GaussNewtonConfig(tol=1e-8, max_iters=1, allow_nonconverged=True))
    assert not sol.converged and len(sol.reports) == plan.n_windows


def test_plan_mismatch_rejected(small_fom):
    plan = WindowPlan.uniform(64, 0.1, 1.6, 1.6)
    bases = identity_window_bases(WindowPlan.uniform(64, 0.1, 0.8, 0.8), 50)
    with pytest.raises(ValueError):
        solve_wst_lspg(BurgersModel(TEST_MU, SMALL_GRID), bases, plan, small_fom.initial)


@pytest.fixture(scope="module")
def trained(small_training):
    plan = WindowPlan.uniform(64, 0.1, 0.8, 0.2)
    bases = train_window_bases(small_training.trajectories, plan, 0.999, 0.999)
    guess = fit_initial_guess(bases, small_training.trajectories, small_training.params, plan)
    return plan, bases, guess


def test_backtracking_monotone_and_certificate(trained, small_fom):
    plan, bases, guess = trained
    model = BurgersModel(TEST_MU, SMALL_GRID)
    cfg = GaussNewtonConfig(tol=1e-7, line_search="backtracking")
    sol = solve_wst_lspg(model, bases, plan, small_fom.initial, BDF1, None, None, cfg)
    assert sol.converged
    for rep in sol.reports:
        r = np.array(rep.residual_norms)
        assert np.all(np.diff(r) <= 1e-12 * r[0] + 1e-15)
        assert rep.gradient_norms[-1] <= cfg.tol * max(1.0, rep.gradient_norms[0])


def test_window_continuity(trained, small_fom):
    plan, bases, guess = trained
    model = BurgersModel(TEST_MU, SMALL_GRID)
    sol = solve_wst_lspg(model, bases, plan, small_fom.initial, BDF1, guess, TEST_MU, TIGHT)
    full = sol.trajectory.full
    for k in range(1, plan.n_windows):
        start = plan.phi(k)
        V = bases[k].reconstruct(full[:, start - 1], sol.coords[k])
        assert np.array_equal(V, full[:, start:start + plan.window_steps(k)])
    rows = sol.convergence_rows()
    assert len(rows) == sum(r.iterations for r in sol.reports) and rows[0][:2] == (0, 0)


def test_training_point_full_energy_one_step_windows(small_training):
    plan = WindowPlan.uniform(64, 0.1, 0.1, 0.1)
    bases = train_window_bases(small_training.trajectories, plan, 1.0, 1.0)
    model = BurgersModel(TEST_MU, SMALL_GRID)
    fom = small_training.trajectories[-1]
    sol = solve_wst_lspg(model, bases, plan, fom.initial, cfg=TIGHT)
    assert mse(sol.trajectory, fom) <= 1e-6


def test_bdf2_identity_basis_matches_fom():
    model = BurgersModel(TEST_MU, SMALL_GRID)
    fom = march(model, np.ones(50), 0.1, 16, BDF2)
    plan = WindowPlan.single(16, 0.1)
    sol = solve_wst_lspg(model, identity_window_bases(plan, 50), plan, np.ones(50), BDF2,
                         cfg=TIGHT)
    assert mse(sol.trajectory, fom) <= 1e-8


def test_global_path_matches_windowed(small_training, small_fom):
    plan = WindowPlan.single(64, 0.1)
    bases = train_window_bases(small_training.trajectories, plan, 0.99, 0.99)
    model = BurgersModel(TEST_MU, SMALL_GRID)
    sol = solve_wst_lspg(model, bases, plan, small_fom.initial, cfg=TIGHT)
    y, rep, states = solve_st_lspg(model, bases[0].matrix(), small_fom.initial, BDF1, 0.1,
                                   cfg=TIGHT)
    assert np.linalg.norm(sol.coords[0] - y) <= 1e-12 * max(1, np.linalg.norm(y))
    assert np.allclose(rep.gradient_norms, sol.reports[0].gradient_norms, rtol=1e-8, atol=1e-12)
    assert np.allclose(states, sol.trajectory.states, atol=1e-12)
