import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import digamma, polygamma

from cfprod import series
from cfprod.cf import continuant, cylinder_length, tail_measure
from cfprod.errors import DomainError, ValidationError
from cfprod.measure import (CertifiedMeasure, an_bound, full_pair_measure, hn_measures, jk_measure,
                            jtilde_measure, product_tail_measure, series_bracket, series_partial)
from cfprod.phi import parse_phi, require_unbounded


def _affine(f):
    """Slope and intercept of an integer function known to be affine on a >= 1."""
    slope = f(2) - f(1)
    return slope, f(1) - slope


def _row_tail(a, b, g, d, m):
    """sum_{y >= m} 1/((a y + b)(g y + d)) via digamma, vectorised over rows."""
    bb, dd = b / a, d / g
    return (digamma(m + dd) - digamma(m + bb)) / (a * g * (dd - bb))


def digamma_jk(u, v, l, X=400_000):
    """Independent estimate of sum_{x y >= l} |I(u x y v)| by per-x closed forms."""
    cl = math.ceil(l)
    xs = np.arange(1, X + 1, dtype=np.float64)
    # |I(w)| = 1/(K(w) (K(w) + K(w^-))); both factors are affine in y
    s1, c1 = _affine(lambda y: continuant(u + (1, y) + v))
    s2, c2 = _affine(lambda y: continuant(u + (2, y) + v))
    t1, e1 = _affine(lambda y: continuant(u + (1, y) + v) + continuant(u + (1, y) + v[:-1]))
    t2, e2 = _affine(lambda y: continuant(u + (2, y) + v) + continuant(u + (2, y) + v[:-1]))
    # each coefficient is itself affine in x
    a = s1 + (s2 - s1) * (xs - 1)
    b = c1 + (c2 - c1) * (xs - 1)
    g = t1 + (t2 - t1) * (xs - 1)
    d = e1 + (e2 - e1) * (xs - 1)
    m = np.maximum(np.ceil(l / xs), 1.0)
    rows = _row_tail(a, b, g, d, m)
    total = math.fsum(rows)
    # remaining x behave like c / (slope x + intercept)^2
    sa, ca = s2 - s1, s1 - (s2 - s1)
    c = rows[-1] * (sa * X + ca) ** 2
    total += c / sa ** 2 * float(polygamma(1, X + 1 + ca / sa))
    return total


def test_bracket_algebra():
    b = series.Bracket(1.0, 2.0, 3) + series.Bracket(0.5, 0.5, 1)
    assert (b.lo, b.hi, b.terms) == (1.5, 2.5, 4)
    with pytest.raises(ValidationError):
        CertifiedMeasure(Fraction(2), Fraction(1))
    with pytest.raises(ValidationError):
        CertifiedMeasure(Fraction(1), Fraction(2), exact=True)


@pytest.mark.parametrize("row", [(1, 1, 1, 2, 1), (3, 1, 6, 5, 4), (7, 2, 14, 9, 40), (1, 0, 1, 1, 1)])
def test_infinite_row_contains_digamma(row):
    a, b, g, d, m = row
    br = series.infinite_rows([a], [b], [g], [d], [m], rel_tol=1e-10)
    ref = float(_row_tail(a, b, g, d, m)) if a * d != b * g else float(polygamma(1, m + b / a)) / (a * g)
    assert br.lo <= ref <= br.hi
    assert br.rel_width <= 1e-10


def test_finite_rows_match_exact():
    br = series.finite_rows([3, 5], [1, 2], [6, 10], [4, 7], [1, 2], [40, 90])
    exact = series.exact_row_sum(3, 1, 6, 4, 1, 40) + series.exact_row_sum(5, 2, 10, 7, 2, 90)
    assert br.lo <= exact <= br.hi


@given(st.lists(st.integers(1, 9), max_size=6).map(tuple), st.integers(1, 60))
def test_tail_bracket_encloses(prefix, K):
    q, qm = continuant(prefix), continuant(prefix[:-1]) if prefix else 0
    lo, hi = series.tail_bracket([q], [qm], [q], [q + qm], [K])
    assert lo[0] <= float(tail_measure(prefix, K)) * (1 + 1e-12)
    assert float(tail_measure(prefix, K)) <= hi[0] * (1 + 1e-12)


def test_product_tail_examples():
    assert product_tail_measure((), 1) == 1
    assert product_tail_measure((), 2) == Fraction(5, 6)
    assert product_tail_measure((1,), 2) == Fraction(13, 30)
    assert product_tail_measure((), Fraction(5, 2)) == product_tail_measure((), 3)


@given(st.lists(st.integers(1, 6), max_size=4).map(tuple), st.integers(1, 40))
def test_product_tail_complement_by_enumeration(u, l):
    direct = sum((cylinder_length(u + (x, y)) for x in range(1, l) for y in range(1, l) if x * y < l), Fraction(0))
    assert product_tail_measure(u, l) + direct == (cylinder_length(u) if u else 1)
    assert jtilde_measure(u, (), l).lower == direct


def test_jk_empty_suffix_is_product_tail():
    m = jk_measure((), (), 2)
    assert m.exact and Fraction(5, 6) in m


@pytest.mark.parametrize("l", [300, 1000, Fraction(4001, 3)])
def test_jk_float_path_contains_exact(l):
    for u in [(), (2,), (1, 3)]:
        m = jk_measure(u, (), l, tol=1e-9)
        assert not m.exact
        assert product_tail_measure(u, l) in m
        assert m.rel_width <= 1e-9


@pytest.mark.parametrize("u, v, l", [((1,), (1,), 10), ((2, 1), (3,), 37), ((), (1, 2), Fraction(23, 2))])
def test_jk_suffix_against_digamma_oracle(u, v, l):
    m = jk_measure(u, v, l, tol=1e-9)
    ref = digamma_jk(u, v, float(l))
    lo, hi = m.as_floats()
    assert lo * (1 - 1e-9) <= ref <= hi * (1 + 1e-9)
    assert m.rel_width <= 1e-9


def test_jk_spec_ratio_band():
    m = jk_measure((1,), (1,), 10, tol=1e-6)
    ratio = m.mid / float(cylinder_length((1, 1)))
    band = math.log(10) / 10
    assert 0.2 * band <= ratio <= 5 * band


def test_jk_vacuous_threshold():
    for u in [(), (1,), (3, 2)]:
        assert jk_measure(u, (), 1).lower == (cylinder_length(u) if u else 1)


@pytest.mark.parametrize("u, v, l", [((1,), (1,), 10), ((), (2,), 50), ((3,), (1, 1), 7)])
def test_complementarity(u, v, l):
    both = jk_measure(u, v, l, 1e-9) + jtilde_measure(u, v, l, 1e-9)
    assert both.overlaps(full_pair_measure(u, v, 1e-9))


def test_full_pair_with_suffix_is_shadow_not_prefix():
    # the sum over all (x, y) of |I(u x y v)| is the measure of points whose
    # later digits spell v, which is smaller than |I(u)| once v is nonempty
    m = full_pair_measure((1,), (1,))
    assert m.upper < Fraction(1, 2)


def test_hn_tilde_trivial():
    assert hn_measures((), 1, variant="H-tilde").upper == 0


def _h_oracle(u, l, tilde):
    """Direct sum with the z-sum done exactly and the x-sum done by closed form."""
    l = float(l)
    cl = math.ceil(l)
    total = []
    for y in range(1, cl + (0 if tilde else 1)):
        m = math.ceil(l / y) if y < cl else cl
        if not tilde and y == cl:
            # y >= cl: no constraint on x, z >= 1 in general but y z >= l forces nothing
            pass
        def q(x, yy=y):
            return continuant(u + (x, yy))
        def qm(x):
            return continuant(u + (x,))
        if tilde:
            for x in range(1, m if y < cl else 1):
                if x * y < l:
                    total.append(1.0 / (q(x) * (math.ceil(l / y) * q(x) + qm(x))))
            continue
        # tail(u x y, m) = 1 / (q (m q + q')) with q, q' affine in x
        sa, ca = _affine(q)
        sb, cb = _affine(lambda x: m * q(x) + qm(x))
        start = math.ceil(l / y) if y < cl else 1
        if y < cl:
            total.append(float(_row_tail(sa, ca, sb, cb, start)))
        else:
            # every y >= cl: sum over y of sum over x of |I(u x y)| = sum over x of tail(u x, cl)
            sa, ca = _affine(qm)
            sb, cb = _affine(lambda x: cl * qm(x) + continuant(u))
            total.append(float(_row_tail(sa, ca, sb, cb, 1)))
    return math.fsum(total)


@pytest.mark.parametrize("u, l", [((), 100), ((2,), 100), ((1, 1), 37)])
def test_hn_against_oracle(u, l):
    h = hn_measures(u, l, 1e-9, "H")
    ht = hn_measures(u, l, 1e-9, "H-tilde")
    ref_h, ref_t = _h_oracle(u, l, False), _h_oracle(u, l, True)
    assert h.as_floats()[0] * (1 - 1e-12) <= ref_h <= h.as_floats()[1] * (1 + 1e-12)
    assert math.isclose(ht.mid, ref_t, rel_tol=1e-12)


def test_hn_spec_bands():
    l = 100
    assert 0.1 <= l * hn_measures((), l).mid <= 10
    assert 0.1 <= l / math.log(l) * hn_measures((), l, variant="H-tilde").mid <= 10


@pytest.mark.parametrize("l", [10**2, 10**3, 10**4])
def test_measure_shapes(l):
    j = jk_measure((), (), l, 1e-9)
    h = hn_measures((), l, 1e-9, "H")
    ht = hn_measures((), l, 1e-9, "H-tilde")
    for m in (j, h, ht):
        assert m.rel_width <= 1e-6
    assert -5 <= l * j.mid - math.log(l) <= 5
    assert 0.05 <= l * h.mid <= 20
    assert 0.05 <= l / math.log(l) * ht.mid <= 20


@given(st.lists(st.integers(1, 5), min_size=1, max_size=4).map(tuple), st.integers(2, 200))
def test_prefix_scaling(w, l):
    base = float(product_tail_measure((), l))
    scaled = float(product_tail_measure(w, l) / cylinder_length(w))
    assert 1 / 16 <= scaled / base <= 16
    hb = hn_measures((), l, 1e-8).mid
    hw = hn_measures(w, l, 1e-8).mid / float(cylinder_length(w))
    assert 1 / 16 <= hw / hb <= 16


def test_an_bound_examples():
    assert an_bound(100, 100) == pytest.approx(100 * math.log(100) ** 2 / 1e4 + 0.01, rel=1e-15)
    assert an_bound(1, math.e) == pytest.approx(math.e ** -2 + 1 / math.e, rel=1e-15)
    vals = [an_bound(10, 2.0 ** k) for k in range(4, 40)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_series_partial_families():
    lo, hi = series_bracket(parse_phi("n^2"), 1000)
    assert lo < hi < 5
    # phi(1) = log 2 < 1; raising finitely many values to 1 cannot change divergence
    full = series_partial(np.maximum(parse_phi("n*log(n+1)^1").table(10**6), 1.0)).total
    assert full[-1] > full[999] + 1
    assert math.isinf(series_bracket(parse_phi("n^0.4"), 100)[1])


def test_series_partial_constant_and_validation():
    s = series_partial(np.ones(50))
    assert s.total[-1] == 50  # log(1) = 0, so only the 1/phi part survives
    with pytest.raises(ValidationError):
        require_unbounded(parse_phi("1"))
    with pytest.raises(ValidationError, match="n=3"):
        series_partial([1.0, 2.0, 0.5])
    with pytest.raises(ValidationError, match="phi\\(3\\) < phi\\(2\\)"):
        series_partial([1.0, 3.0, 2.0])


@pytest.mark.parametrize("text, kind", [("n^2", "power"), ("n", "power"), ("n*log(n+1)^1.5", "nlog"),
                                        ("2^n", "geometric"), ("5", "const")])
def test_parse_phi(text, kind):
    assert parse_phi(text).kind == kind
    assert parse_phi(parse_phi(text).spec) == parse_phi(text)


@pytest.mark.parametrize("bad", ["n^-1", "1^n", "x^2", "0.5", ""])
def test_parse_phi_rejects(bad):
    with pytest.raises(ValidationError):
        parse_phi(bad)


def test_budget_guard():
    from cfprod.errors import BudgetExceeded

    with pytest.raises(BudgetExceeded):
        series.infinite_rows([1], [1], [1], [2], [1], rel_tol=1e-12, budget=10)
    with pytest.raises(DomainError):
        series.infinite_rows([1], [1], [1], [2], [1], rel_tol=1e-15)


def test_many_rows_reach_tight_tolerance():
    # 10^5 positive rows: the rounding margin must not grow with the row count
    n = 100_000
    a = list(range(1, n + 1))
    br = series.infinite_rows(a, [1] * n, a, [2] * n, [1] * n, rel_tol=1e-9)
    assert br.rel_width <= 1e-9


@settings(max_examples=25)
@given(st.lists(st.integers(1, 5), max_size=3).map(tuple), st.lists(st.integers(1, 5), min_size=1, max_size=3).map(tuple),
       st.integers(1, 60))
def test_jk_random_suffixes_against_oracle(u, v, l):
    m = jk_measure(u, v, l, tol=1e-8)
    ref = digamma_jk(u, v, float(l), X=100_000)
    lo, hi = m.as_floats()
    assert lo * (1 - 1e-9) <= ref <= hi * (1 + 1e-9)
