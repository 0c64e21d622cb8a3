import math

import numpy as np
import pytest

from mfot.costs import (
    classify_positive_definite,
    constant,
    coulomb,
    coulomb_cell,
    coulomb_regularized,
    gaussian,
    load_tabulated_csv,
    make_cost,
    multiset_pair_sums,
    nbody_cost,
    pair_cost_integral,
    parse_cost,
    quadratic,
    sample_on_torus,
    tabulated,
    truncated_quadratic,
)
from mfot.measures import DiscreteMeasure, NBodyMeasure, SupportGrid, outer, product
from mfot.mmot import mean_field_value


def test_gaussian_values(gauss):
    assert gauss(np.array([[1.0]]))[0] == pytest.approx(math.exp(-1))
    assert gauss(np.array([[0.0]]))[0] == 1.0


def test_coulomb_singular():
    c = coulomb()
    assert c(np.array([[0.0]]))[0] == np.inf
    assert c(np.array([[3.0, 4.0]]))[0] == pytest.approx(0.2)


def test_regularized_and_cell():
    assert coulomb_regularized(0.25)(np.array([[0.1]]))[0] == 4.0
    assert coulomb_cell(0.5, 2.0)(np.array([[0.0], [2.0]])).tolist() == [4.0, 0.5]
    with pytest.raises(ValueError):
        coulomb_regularized(0.0)


def test_truncated_quadratic_sup_and_zero():
    c = truncated_quadratic(2.0)
    assert c(np.zeros((1, 1)))[0] == 0.0
    r = np.linspace(0, 5, 20001)[:, None]
    assert c.sup == pytest.approx(c(r).max(), rel=1e-8)
    assert c(np.array([[1.0]]))[0] == pytest.approx(math.exp(-1 / 8) - math.exp(-2))
    with pytest.raises(ValueError):
        truncated_quadratic(1.0)


def test_mean_field_two_point(uniform2, gauss):
    assert mean_field_value(uniform2, gauss) == pytest.approx((1 + math.exp(-1)) / 2, abs=1e-15)


def test_infinite_times_zero_is_zero(two_points):
    # all mass on one atom: coulomb self-interaction is infinite
    d = DiscreteMeasure.dirac(two_points, 0)
    assert mean_field_value(d, coulomb()) == math.inf
    # product of two separated diracs never touches the diagonal
    g = SupportGrid.line([0.0, 1.0])
    W = np.array([[0.0, 0.5], [0.5, 0.0]])
    from mfot.measures import PairMeasure

    assert pair_cost_integral(coulomb(), PairMeasure(g, W)) == 1.0


def test_coulomb_triangle():
    g = SupportGrid([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    w = np.zeros(10)
    # the multiset {0, 1, 2}
    from mfot.multiset import rank_sorted

    w[rank_sorted([[0, 1, 2]], 3)[0]] = 1.0
    assert nbody_cost(coulomb(), NBodyMeasure(g, 3, w)) == pytest.approx(3.0)


def test_multiset_pair_sums_vs_dense(rng, gauss):
    g = SupportGrid.line(np.arange(3.0))
    mu = DiscreteMeasure(g, rng.dirichlet(np.ones(3)))
    gam = product(mu, 4)
    # a product measure: each of the 6 pairs sees mu (x) mu
    assert nbody_cost(gauss, gam) == pytest.approx(6 * pair_cost_integral(gauss, outer(mu, mu)))
    assert nbody_cost(gauss, gam.to_dense()) == pytest.approx(nbody_cost(gauss, gam))
    assert multiset_pair_sums(gauss, g, 2).shape == (6,)


def test_parse_and_spec_round_trip():
    c = parse_cost("gaussian:s=0.5")
    assert c.params == {"s": 0.5}
    assert parse_cost(c.spec()).params == c.params
    assert make_cost("constant", value=2.0)(np.zeros((3, 1))).tolist() == [2.0] * 3
    with pytest.raises(ValueError):
        parse_cost("nope")
    with pytest.raises(ValueError):
        parse_cost("gaussian:s")


def test_tabulated_evenness(tmp_path):
    c = tabulated({(1.0,): 2.0, (0.0,): 0.0})
    assert c(np.array([[-1.0]]))[0] == 2.0
    with pytest.raises(ValueError):
        tabulated({(1.0,): 2.0, (-1.0,): 3.0})
    p = tmp_path / "t.csv"
    p.write_text("dz,value\n0,1\n1,0.5\n")
    c = load_tabulated_csv(p)
    assert c(np.array([[-1.0], [0.0]])).tolist() == [0.5, 1.0]
    with pytest.raises(ValueError):
        c(np.array([[2.0]]))


class TestDefiniteness:
    def test_gaussian_strictly_positive(self):
        assert classify_positive_definite(gaussian(1.0), SupportGrid.torus(32, 16.0)).label == "strictly_positive"

    def test_truncated_quadratic_indefinite(self):
        rep = classify_positive_definite(truncated_quadratic(2.0), SupportGrid.torus(64, 16.0))
        assert rep.label == "indefinite" and rep.min_coefficient < 0

    def test_constant_positive(self):
        rep = classify_positive_definite(constant(1.0), SupportGrid.torus(8, 4.0))
        assert rep.label == "positive"
        # only the zero frequency carries mass: value * L
        assert rep.max_coefficient == pytest.approx(4.0)

    def test_quadratic_indefinite(self):
        assert classify_positive_definite(quadratic(), SupportGrid.torus(16, 4.0)).label == "indefinite"

    def test_rejects_singular_and_nontorus(self):
        with pytest.raises(ValueError):
            sample_on_torus(coulomb(), SupportGrid.torus(8, 4.0))
        with pytest.raises(ValueError):
            sample_on_torus(gaussian(), SupportGrid.line([0.0, 1.0]))

    def test_images_sum_copies(self):
        g = SupportGrid.torus(4, 2.0)
        base = sample_on_torus(gaussian(1.0), g)
        per = sample_on_torus(gaussian(1.0), g, images=1)
        assert np.all(per > base)
