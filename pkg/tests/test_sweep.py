import math

import pytest

from conftest import TEST_MU
from wstlspg.solver import GaussNewtonConfig
from wstlspg.sweep import (COLUMNS, SweepConfig, method_label, pareto_front, pareto_sweep,
                           read_rows, timed_median, write_rows)
from wstlspg.windows import WindowPlan

GN = GaussNewtonConfig(tol=1e-6)


def row(e, t, **kw):
    return dict(mse=e, relative_wall_time=t, **kw)


def test_pareto_front_examples():
    single = [row(1, 1)]
    assert pareto_front(single) == single
    assert pareto_front([row(1, 1), row(2, 2)]) == [row(1, 1)]
    both = [row(1, 2), row(2, 1)]
    assert pareto_front(both) == both
    ties = [row(1, 1, id=0), row(1, 1, id=1)]
    assert pareto_front(ties) == ties
    assert pareto_front([row(math.nan, 1), row(3, 3)]) == [row(3, 3)]
    with pytest.raises(ValueError):
        pareto_front([])


def test_labels():
    assert method_label(WindowPlan.single(64, 0.1)) == "ST-LSPG"
    assert method_label(WindowPlan.single(64, 0.1), gnat=True) == "ST-GNAT"
    assert method_label(WindowPlan.uniform(64, 0.1, 6.4, 0.1)) == "WST-LSPG"
    assert method_label(WindowPlan.uniform(64, 0.1, 0.8, 0.8), gnat=True) == "WST-GNAT"


def test_window_pairs_filter():
    cfg = SweepConfig(l_w=(0.1, 0.8, 6.4, 0.3), l_s=(0.1, 0.8))
    assert cfg.window_pairs(6.4, 0.1) == [(0.1, 0.1), (0.8, 0.1), (0.8, 0.8), (6.4, 0.1),
                                         (6.4, 0.8)]
    with pytest.raises(ValueError):
        SweepConfig(repetitions=0)


def test_timed_median():
    calls = []
    out, t = timed_median(lambda: calls.append(1) or len(calls), 3)
    assert out == 3 and t >= 0


def test_sweep_rows(small_training):
    cfg = SweepConfig(l_w=(6.4, 0.8), l_s=(6.4, 0.4), energies=((0.9, 0.9), (0.999, 0.9)),
                      gnat=True, residual_energies=((1.0, 1.0),), z_t=(8,), z_s=(50,),
                      repetitions=1)
    rows = pareto_sweep(cfg, [TEST_MU], small_training, GN)
    assert all(set(r) == set(COLUMNS) for r in rows)
    st = [r for r in rows if r["method"] == "ST-LSPG"]
    assert len(st) == 2 and all(r["converged"] for r in st)
    lspg = [r for r in rows if r["method"].endswith("LSPG")]
    for lw, ls in cfg.window_pairs(6.4, 0.1):
        pair = sorted((r for r in lspg if r["l_w"] == lw and r["l_s"] == ls), key=lambda r: r["e_s"])
        assert pair[0]["n_st"] <= pair[1]["n_st"]
    for r in rows:
        if r["converged"]:
            assert r["imse"] <= r["mse"] and r["relative_wall_time"] > 0
        else:
            assert r["error"]
    gnat = [r for r in rows if r["method"].endswith("GNAT")]
    assert gnat and any(r["converged"] for r in gnat)
    assert any(not r["converged"] for r in gnat)  # the 64-step windows need more samples


def test_sweep_errors_and_csv(small_training, tmp_path):
    with pytest.raises(ValueError):
        pareto_sweep(SweepConfig(repetitions=1), [], small_training)
    rows = pareto_sweep(SweepConfig(l_w=(6.4,), l_s=(6.4,), energies=((0.9, 0.9),),
                                    repetitions=1), [TEST_MU], small_training, GN)
    path = tmp_path / "rows.csv"
    write_rows(path, rows)
    back = read_rows(path)
    assert back[0]["method"] == "ST-LSPG" and back[0]["converged"] is True
    assert back[0]["mse"] == rows[0]["mse"] and math.isnan(back[0]["z_t"])
