from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, strategies as st

from dofcast.analysis import (DoFPoint, SystemConfig, bounds_tight, channel_aggregation_sum_dof,
                              dm_star, f_a, f_b, f_p, f_q, full_csit_sum_dof, gamma_star,
                              in_region, lower_bound_sum_dof, q_l_point, q_o_point,
                              time_share, two_user_region, two_user_sum_dof,
                              upper_bound_sum_dof)
from dofcast.errors import DomainError

from strategies import configs

C3 = SystemConfig(3, 1, 1, 0)


def cfg(K=3, N=1, g=1, d=0, M=None):
    return SystemConfig(K, N, F(g), F(d), M)


# -- independent oracle: the same expressions in sympy -------------------

def _R(x):
    x = F(x)
    return sympy.Rational(x.numerator, x.denominator)


def _H(n):
    return sum((sympy.Rational(1, k) for k in range(1, n + 1)), sympy.Integer(0))


def oracle_fa(L, K, N, g, d):
    K, N, g, d = map(_R, (K, N, g, d))
    num = K * (K - L + 2) * (K - L + 1) * d + K * N * g * (K + 1) * (K - L + 1)
    den = (K - L + 2) * L + (K + 1) * (K - L + 1) * _H(int(K) - L)
    return num / den + K * N * (1 - g)


def oracle_fp(L, K, N, g, d):
    K, N, g, d = map(_R, (K, N, g, d))
    return (K ** 2 * d + K ** 2 * N * L + K * N * L * (K - L) * (1 - g)) / (K * L + L * (K - L))


def _f(x):
    x = sympy.Rational(x)
    return F(int(x.p), int(x.q))


@given(configs())
def test_formulas_match_symbolic_oracle(c):
    for L in range(1, c.K + 1):
        assert f_a(L, c) == _f(oracle_fa(L, c.K, c.N, c.gamma, c.d_m))
        assert f_p(L, c) == _f(oracle_fp(L, c.K, c.N, c.gamma, c.d_m))


# -- worked values ------------------------------------------------------------

def test_golden_values():
    assert f_p(3, cfg(d=5)) == 3 + 5
    assert f_q(3, C3) == 6
    assert f_a(1, C3) == F(18, 11)
    assert f_b(2, C3) == F(2, 9)
    assert f_b(3, C3) == 1
    assert gamma_star(cfg(K=2, d=1)) == F(1, 2)
    assert dm_star(C3) == 6
    assert two_user_region(cfg(K=2)).corners["C"].d == (F(2, 3), F(2, 3))


@pytest.mark.parametrize("d,lo,up", [
    (0, F(18, 11), F(18, 11)), (F(2, 9), 2, 2), (1, 3, F(36, 11)),
    (F(7, 2), 6, F(99, 16)), (6, 9, 9), (8, 11, 11),
])
def test_three_user_bounds(d, lo, up):
    c = cfg(d=d)
    assert lower_bound_sum_dof(c).value == lo
    assert upper_bound_sum_dof(c).value == up


def test_two_user_sum():
    assert two_user_sum_dof(cfg(K=2, d=1)).value == F(8, 3)
    assert two_user_sum_dof(cfg(K=2, d=2)).value == 4
    assert two_user_sum_dof(cfg(K=2, d=3)).value == 5


def test_points():
    assert q_o_point(C3) == (6, 9)
    assert q_l_point(1, C3) == (1, 3)
    assert q_l_point(2, C3) == (F(2, 9), 2)
    assert q_l_point(3, C3) == (0, F(18, 11))
    assert channel_aggregation_sum_dof(cfg(K=2, d=2)) == F(10, 3)
    assert full_csit_sum_dof(cfg(d=2)) == 5


def test_region_shapes():
    r = two_user_region(cfg(K=2, d=2))
    assert [v.d for v in r.vertices] == [(0, 0), (3, 0), (2, 2), (0, 3)]
    sq = two_user_region(cfg(K=2, g=0))
    assert [v.d for v in sq.vertices] == [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert sq.max_sum() == 2
    r = two_user_region(cfg(K=2, d=3))
    assert r.corners["E"].d == (2, 3) and r.corners["F"].d == (3, 2)


def test_validation():
    for bad in [dict(K=1), dict(N=0), dict(g=F(3, 2)), dict(g=-1), dict(d=-1)]:
        with pytest.raises(DomainError):
            cfg(**bad)
    with pytest.raises(DomainError):
        f_a(0, C3)
    with pytest.raises(DomainError):
        f_p(4, C3)
    with pytest.raises(DomainError):
        two_user_region(C3)
    with pytest.raises(DomainError):
        time_share((1, 1), (1, 2), 1)
    with pytest.raises(DomainError):
        DoFPoint((F(-1), 0))


def test_antenna_warning():
    c = cfg(K=3, N=2, M=4)
    assert c.antenna_warning
    assert lower_bound_sum_dof(c).warnings
    assert cfg().antenna_warning is None


# -- properties ---------------------------------------------------------------

@given(configs())
def test_dominance(c):
    lo, up = lower_bound_sum_dof(c).value, upper_bound_sum_dof(c).value
    assert lo <= up
    assert channel_aggregation_sum_dof(c) <= lo
    assert up <= full_csit_sum_dof(c)


@given(configs())
def test_tight_exactly_in_matching_regimes(c):
    in_regime = c.d_m <= f_b(2, c) or c.d_m >= dm_star(c) or c.K == 2 or c.gamma == 0
    assert bounds_tight(c) == in_regime


@given(configs(K=st.just(2)))
def test_two_user_consistency(c):
    assert lower_bound_sum_dof(c).value == two_user_sum_dof(c).value
    assert upper_bound_sum_dof(c).value == two_user_sum_dof(c).value
    assert two_user_region(c).max_sum() == two_user_sum_dof(c).value
    for v in two_user_region(c).vertices:
        assert in_region(v, c)


@given(configs(), st.builds(F, st.integers(1, 20), st.integers(1, 7)))
def test_monotone_in_pipe(c, step):
    more = SystemConfig(c.K, c.N, c.gamma, c.d_m + step)
    assert lower_bound_sum_dof(more).value >= lower_bound_sum_dof(c).value
    assert upper_bound_sum_dof(more).value >= upper_bound_sum_dof(c).value


@given(configs(), st.builds(F, st.integers(1, 12), st.just(12)))
def test_staleness_never_helps(c, dg):
    if c.gamma + dg > 1:
        return
    worse = SystemConfig(c.K, c.N, c.gamma + dg, c.d_m)
    assert lower_bound_sum_dof(worse).value <= lower_bound_sum_dof(c).value
    assert upper_bound_sum_dof(worse).value <= upper_bound_sum_dof(c).value


@given(configs())
def test_aggregation_gap(c):
    gap = lower_bound_sum_dof(c).value - channel_aggregation_sum_dof(c)
    if c.gamma > 0 and c.d_m > 0:
        assert gap > 0
    else:
        assert gap == 0


@pytest.mark.parametrize("K", range(2, 7))
@pytest.mark.parametrize("N,g", [(1, F(1)), (2, F(1, 2)), (3, F(2, 3))])
def test_breakpoint_continuity(K, N, g):
    base = SystemConfig(K, N, g, 0)
    points = [f_q(L, base) for L in range(1, K + 1)] + [f_b(L, base) for L in range(1, K + 1)]
    points.append(dm_star(base))
    for d in points:
        at = SystemConfig(K, N, g, d)
        eps = F(1, 10 ** 9)
        for fn in (lower_bound_sum_dof, upper_bound_sum_dof):
            v = fn(at).value
            # the two neighbouring pieces meet at the breakpoint
            left = fn(SystemConfig(K, N, g, max(d - eps, 0))).value
            right = fn(SystemConfig(K, N, g, d + eps)).value
            assert abs(v - left) <= 100 * eps * K * K and abs(v - right) <= 100 * eps * K * K


@pytest.mark.parametrize("K", range(2, 7))
def test_pieces_agree_at_breakpoints(K):
    c = SystemConfig(K, 1, 1, 0)
    for L in range(1, K):
        d = f_q(L + 1, c)
        assert f_p(L, c, d) == f_p(L + 1, c, d)
        d = f_b(L + 1, c)
        assert f_a(L, c, d) == f_a(L + 1, c, d)
    # the time-sharing segment starts and ends on the neighbouring pieces
    d1 = f_b(K, c)
    ts = F(2 * K, 2 * K - 1) * d1 + K - F(K * (K - 1), 2 * K - 1)
    assert ts == f_a(K - 1, c, d1)
    d2 = dm_star(c)
    assert F(2 * K, 2 * K - 1) * d2 + K - F(K * (K - 1), 2 * K - 1) == K + d2


@given(configs())
def test_lower_bound_on_chord_of_points(c):
    if c.gamma == 0:
        return
    pts = sorted([q_l_point(L, c) for L in range(1, c.K + 1)] + [q_o_point(c)])
    for a, b in zip(pts, pts[1:]):
        if a[0] <= c.d_m <= b[0] and a[0] < b[0]:
            assert time_share(a, b, c.d_m) == lower_bound_sum_dof(c).value


@given(configs())
def test_points_collinear_with_lower_bound(c):
    for L in range(1, c.K + 1):
        d, s = q_l_point(L, c)
        assert lower_bound_sum_dof(SystemConfig(c.K, c.N, c.gamma, d)).value == s
        assert f_b(c.K + 1 - L, c) == d
