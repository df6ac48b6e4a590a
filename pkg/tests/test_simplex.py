import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from storefleet import _kernels
from storefleet.oracle.simplex import linprog


def random_lp(rng):
    n = int(rng.integers(2, 9))
    m1 = int(rng.integers(1, 9))
    m2 = int(rng.integers(0, 3))
    c = rng.integers(-5, 6, n).astype(float)
    A_ub = rng.integers(-3, 5, (m1, n)).astype(float)
    b_ub = rng.integers(-2, 12, m1).astype(float)
    A_eq = rng.integers(-2, 4, (m2, n)).astype(float)
    b_eq = rng.integers(0, 6, m2).astype(float)
    # box the variables so most LPs are bounded
    A_ub = np.vstack([A_ub, np.eye(n)])
    b_ub = np.concatenate([b_ub, rng.integers(1, 8, n)])
    return c, A_ub, b_ub, A_eq, b_eq


def test_textbook_lp():
    # max 3x + 2y st x + y <= 4, x + 3y <= 6, x <= 3
    r = linprog([-3, -2], [[1, 1], [1, 3], [1, 0]], [4, 6, 3])
    assert r.ok
    np.testing.assert_allclose(r.x, [3, 1], atol=1e-12)
    assert r.fun == pytest.approx(-11)


def test_infeasible_and_unbounded():
    assert linprog([1, 1], [[1, 1]], [-1]).status == "infeasible"
    assert linprog([1], A_eq=[[1]], b_eq=[2], A_ub=[[1]], b_ub=[1]).status == "infeasible"
    assert linprog([-1, 0], [[0, 1]], [1]).status == "unbounded"


def test_redundant_equalities():
    r = linprog([1, 2], A_eq=[[1, 1], [2, 2]], b_eq=[2, 4])
    assert r.ok and r.fun == pytest.approx(2)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook Dantzig rule without anti-cycling
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    b = [0, 0, 1]
    r = linprog(c, A, b)
    assert r.ok and r.fun == pytest.approx(-0.05)


def test_unknown_rule():
    with pytest.raises(ValueError):
        linprog([1], [[1]], [1], rule="steepest")


@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_agrees_with_highs(rule):
    rng = np.random.default_rng(5)
    for _ in range(150):
        c, A_ub, b_ub, A_eq, b_eq = random_lp(rng)
        ours = linprog(c, A_ub, b_ub, A_eq if len(b_eq) else None, b_eq if len(b_eq) else None, rule=rule)
        ref = scipy_linprog(
            c, A_ub, b_ub, A_eq if len(b_eq) else None, b_eq if len(b_eq) else None, bounds=(0, None), method="highs"
        )
        if ref.status == 2:
            assert ours.status == "infeasible"
            continue
        assert ref.status == 0
        assert ours.ok
        assert ours.fun == pytest.approx(ref.fun, abs=1e-7)
        assert ours.residual <= 1e-9


@pytest.mark.skipif(_kernels.simplex_iterate_nb is None, reason="numba not installed")
def test_numba_and_numpy_kernels_agree():
    rng = np.random.default_rng(9)
    saved = _kernels.simplex_iterate
    try:
        for _ in range(60):
            lp = random_lp(rng)
            out = []
            for k in (_kernels.simplex_iterate_py, _kernels.simplex_iterate_nb):
                _kernels.simplex_iterate = k
                out.append(linprog(*lp))
            a, b = out
            assert a.status == b.status and a.iterations == b.iterations
            if a.ok:
                np.testing.assert_allclose(a.x, b.x, atol=1e-12)
    finally:
        _kernels.simplex_iterate = saved


def test_backend_flag(monkeypatch):
    import importlib

    monkeypatch.setenv("STOREFLEET_DISABLE_NUMBA", "1")
    mod = importlib.reload(_kernels)
    try:
        assert mod.backend() == "numpy"
        assert mod.simplex_iterate is mod.simplex_iterate_py
    finally:
        monkeypatch.delenv("STOREFLEET_DISABLE_NUMBA")
        importlib.reload(_kernels)
