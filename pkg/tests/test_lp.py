import io
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from mfot.lp import (
    LinearProgram,
    SizeLimitExceeded,
    Tolerances,
    read_mps,
    solve,
    solve_exact,
    verify_farkas,
    write_mps,
)


def _random_lp(rng, feasible=True):
    r, n = int(rng.integers(1, 6)), int(rng.integers(2, 9))
    A = rng.integers(-4, 5, size=(r, n)).astype(float)
    if feasible:
        b = A @ rng.integers(0, 3, size=n)
    else:
        b = rng.integers(-4, 5, size=r).astype(float)
    c = rng.integers(0, 6, size=n).astype(float)
    return LinearProgram.from_dense(c, A, b)


@pytest.mark.parametrize("seed", range(8))
def test_matches_exact_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(25):
        lp = _random_lp(rng, feasible=rng.random() < 0.7)
        fl, ex = solve(lp), solve_exact(lp)
        assert fl.status == ex.status
        if fl.optimal:
            assert fl.objective == pytest.approx(float(ex.objective), abs=1e-8)
            assert np.abs(lp.A @ fl.x - lp.b).max() <= 1e-9
            assert fl.x.min() >= 0
        elif fl.status == "infeasible":
            assert verify_farkas(lp.A, lp.b, fl.farkas)
            assert verify_farkas(lp.A, lp.b, [float(v) for v in ex.farkas])


def test_matches_scipy_highs(rng):
    for _ in range(40):
        r, n = 6, 20
        A = rng.random((r, n))
        b = A @ rng.random(n)
        c = rng.random(n)
        ours = solve(LinearProgram.from_dense(c, A, b))
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        assert ours.objective == pytest.approx(ref.fun, rel=1e-9, abs=1e-10)


def test_duals_certify_optimality(rng):
    A = rng.random((5, 12))
    b = A @ rng.random(12)
    c = rng.random(12)
    lp = LinearProgram.from_dense(c, A, b)
    res = solve(lp)
    assert res.gap <= 1e-8
    assert (c - A.T @ res.y).min() >= -1e-9
    assert res.info["dual_infeasibility"] <= 1e-9


def test_textbook_instance():
    # min -x1 - x2, x1 + 2 x2 + s1 = 4, 3 x1 + x2 + s2 = 6
    lp = LinearProgram.from_dense([-1, -1, 0, 0], [[1, 2, 1, 0], [3, 1, 0, 1]], [4, 6])
    res = solve(lp)
    assert res.objective == pytest.approx(-2.8)
    assert np.allclose(res.x[:2], [1.6, 1.2])


def test_beale_cycling_example_terminates():
    # classic instance on which textbook Dantzig pricing cycles
    c = [-0.75, 150, -0.02, 6, 0, 0, 0]
    A = [
        [0.25, -60, -0.04, 9, 1, 0, 0],
        [0.5, -90, -0.02, 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    res = solve(LinearProgram.from_dense(c, A, [0, 0, 1]))
    assert res.objective == pytest.approx(-0.05)
    assert float(solve_exact(LinearProgram.from_dense(c, A, [0, 0, 1])).objective) == pytest.approx(-0.05)


def test_unbounded():
    lp = LinearProgram.from_dense([-1, 0], [[1, -1]], [0])
    assert solve(lp).status == "unbounded"
    assert solve_exact(lp).status == "unbounded"


def test_infeasible_with_certificate():
    lp = LinearProgram.from_dense([0, 0], [[1, 1], [1, 1]], [1, 2])
    res = solve(lp)
    assert res.status == "infeasible"
    y = res.farkas
    assert (lp.A.T @ y).max() <= 1e-9 and lp.b @ y > 1e-7
    assert np.abs(y).max() == pytest.approx(1.0)
    assert not res.marginal


def test_negative_rhs_and_scaling():
    lp = LinearProgram.from_dense([1, 2], [[-1, -1], [1000, 0]], [-3, 1000])
    for scale in (False, True):
        res = solve(lp, scale_rows=scale)
        assert res.objective == pytest.approx(5.0)


def test_infinite_cost_columns_are_dropped():
    lp = LinearProgram.from_dense([np.inf, 1.0], [[1, 1]], [1])
    res = solve(lp)
    assert res.objective == 1.0 and res.x[0] == 0 and res.info["dropped"] == 1
    bad = LinearProgram.from_dense([np.inf, 1.0], [[1, 0]], [1])
    assert solve(bad).status == "infeasible"


def test_redundant_rows():
    A = np.array([[1.0, 1, 1], [1, 1, 1], [2, 2, 2]])
    res = solve(LinearProgram.from_dense([1, 2, 3], A, [1, 1, 2]))
    assert res.objective == pytest.approx(1.0)


def test_validation_errors():
    with pytest.raises(ValueError):
        LinearProgram.from_dense([1, 2], [[1, 1]], [1, 2])
    with pytest.raises(ValueError):
        LinearProgram.from_dense([-np.inf, 0], [[1, 1]], [1])
    with pytest.raises(ValueError):
        LinearProgram.from_dense([0, 0], [[np.nan, 1]], [1])


def test_exact_size_limit():
    lp = LinearProgram(np.zeros(6001), sp.csc_matrix(np.ones((1, 6001))), np.ones(1))
    with pytest.raises(SizeLimitExceeded):
        solve_exact(lp)


def test_exact_accepts_fractions():
    res = solve_exact(c=[Fraction(1, 3), Fraction(1, 2)], A=[[1, 1]], b=[Fraction(2, 3)])
    assert res.objective == Fraction(2, 9)


def test_tolerance_override():
    tight = Tolerances(feas=1e-12, gap=1e-12, farkas=1e-10)
    res = solve(LinearProgram.from_dense([1, 1], [[1, 2]], [2]), tol=tight)
    assert res.objective == pytest.approx(1.0)


class TestMps:
    def test_round_trip(self, rng):
        A = rng.normal(size=(4, 7))
        A[np.abs(A) < 0.5] = 0
        lp = LinearProgram.from_dense(rng.normal(size=7), A, rng.normal(size=4), name="RT")
        text = write_mps(lp, io.StringIO())
        back = read_mps(text)
        assert np.allclose(back.A.toarray(), lp.A.toarray(), rtol=1e-11)
        assert np.allclose(back.c, lp.c, rtol=1e-11)
        assert np.allclose(back.b, lp.b, rtol=1e-11)
        a, b = solve(lp), solve(back)
        assert a.status == b.status
        if a.optimal:
            assert b.objective == pytest.approx(a.objective)

    def test_fixed_columns(self):
        lp = LinearProgram.from_dense([1.5, 0], [[1, 2]], [3], name="FIX")
        lines = write_mps(lp, io.StringIO()).splitlines()
        assert lines[0].startswith("NAME") and lines[0][14:] == "FIX"
        col = next(l for l in lines if l.startswith("    X"))
        assert col[4:12].strip() == "X0000000"
        assert col[14:22].strip() == "COST"
        assert col[24:36].strip() == "1.5"
        assert col[39:47].strip() == "R0000000"
        assert lines[-1] == "ENDATA"

    def test_infinite_cost_commented(self, tmp_path):
        lp = LinearProgram.from_dense([np.inf, 1], [[1, 1]], [1])
        p = tmp_path / "x.mps"
        text = write_mps(lp, p)
        assert "* X0000000 has infinite cost" in text
        assert p.read_text() == text
        assert read_mps(text).A.shape == (1, 1)
