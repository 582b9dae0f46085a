"""Closed-form DoF expressions for the MIMO BC with a parallel multicast pipe.

Every quantity is evaluated with :class:`fractions.Fraction`, so regime
breakpoints and coincidences between corner points are exact equalities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError
from .exact import harmonic, to_fraction

__all__ = [
    "SystemConfig", "DoFPoint", "DoFRegion2", "SumDofBound",
    "f_p", "f_q", "f_a", "f_b",
    "upper_bound_sum_dof", "lower_bound_sum_dof",
    "two_user_region", "two_user_sum_dof", "gamma_star", "dm_star",
    "channel_aggregation_sum_dof", "full_csit_sum_dof",
    "q_o_point", "q_l_point", "time_share", "in_region", "bounds_tight",
]


@dataclass(frozen=True)
class SystemConfig:
    """``K`` users with ``N`` receive antennas, ``M`` transmit antennas.

    ``gamma`` is the fraction of each coherence block during which the
    transmitter has no knowledge of the current channel; ``d_m`` is the
    multicast pipe capacity in units of ``log P``. ``M`` defaults to ``K*N``.
    """

    K: int
    N: int = 1
    gamma: Fraction = Fraction(1)
    d_m: Fraction = Fraction(0)
    M: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", to_fraction(self.gamma))
        object.__setattr__(self, "d_m", to_fraction(self.d_m))
        if self.M is None:
            object.__setattr__(self, "M", self.K * self.N)
        if int(self.K) != self.K or self.K < 2:
            raise DomainError(f"K must be an integer >= 2, got {self.K}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be an integer >= 1, got {self.N}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M}")
        if not 0 <= self.gamma <= 1:
            raise DomainError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.d_m < 0:
            raise DomainError(f"d_m must be nonnegative, got {self.d_m}")

    @property
    def antenna_warning(self) -> str | None:
        if self.M < self.K * self.N:
            return (f"M={self.M} < K*N={self.K * self.N}: achievability is "
                    "only established for M >= K*N")
        return None


@dataclass(frozen=True)
class DoFPoint:
    d: tuple

    def __post_init__(self):
        d = tuple(to_fraction(v) for v in self.d)
        if any(v < 0 for v in d):
            raise DomainError(f"DoF entries must be nonnegative: {d}")
        object.__setattr__(self, "d", d)

    def __iter__(self):
        return iter(self.d)

    def __len__(self):
        return len(self.d)

    def __getitem__(self, i):
        return self.d[i]

    @property
    def total(self) -> Fraction:
        return sum(self.d, Fraction(0))


@dataclass(frozen=True)
class SumDofBound:
    value: Fraction
    regime: str
    L: int | None = None
    warnings: tuple = ()


@dataclass(frozen=True)
class DoFRegion2:
    """Two-user optimal DoF polygon.

    ``vertices`` run counterclockwise from the origin with repeated points
    removed; ``corners`` keeps the named corner points (A, B and either C or
    E, F) even when they coincide.
    """

    vertices: tuple
    corners: dict
    inequalities: tuple = field(default=())

    def max_sum(self) -> Fraction:
        return max(v.total for v in self.vertices)


def _check_L(L: int, cfg: SystemConfig) -> None:
    if int(L) != L or not 1 <= L <= cfg.K:
        raise DomainError(f"L must be an integer in [1, {cfg.K}], got {L}")


def f_p(L: int, cfg: SystemConfig, d_m=None) -> Fraction:
    _check_L(L, cfg)
    K, N, g = cfg.K, cfg.N, cfg.gamma
    d = cfg.d_m if d_m is None else to_fraction(d_m)
    num = K * K * d + K * K * N * L + K * N * L * (K - L) * (1 - g)
    return Fraction(num) / (K * L + L * (K - L))


def f_q(L: int, cfg: SystemConfig) -> Fraction:
    _check_L(L, cfg)
    K = cfg.K
    return cfg.N * cfg.gamma * L * (L - 1) / Fraction(2 * K - 2 * L + 1)


def f_a(L: int, cfg: SystemConfig, d_m=None) -> Fraction:
    _check_L(L, cfg)
    K, N, g = cfg.K, cfg.N, cfg.gamma
    d = cfg.d_m if d_m is None else to_fraction(d_m)
    num = K * (K - L + 2) * (K - L + 1) * d + K * N * g * (K + 1) * (K - L + 1)
    den = (K - L + 2) * L + (K + 1) * (K - L + 1) * harmonic(K - L)
    return num / den + K * N * (1 - g)


def f_b(L: int, cfg: SystemConfig) -> Fraction:
    _check_L(L, cfg)
    K = cfg.K
    return cfg.N * cfg.gamma * (L - 1) / ((K - L + 2) * harmonic(K - L + 1))


def _warnings(cfg: SystemConfig) -> tuple:
    w = cfg.antenna_warning
    return (w,) if w else ()


def upper_bound_sum_dof(cfg: SystemConfig) -> SumDofBound:
    """Piecewise outer bound on the sum DoF.

    The active ``L`` is the first bracket ``f_q(L) <= d_m <= f_q(L+1)``
    (scanning upward), falling back to ``L = K`` once ``d_m >= f_q(K)``.
    """
    K, d = cfg.K, cfg.d_m
    chosen = K
    for L in range(1, K):
        if f_q(L, cfg) <= d <= f_q(L + 1, cfg):
            chosen = L
            break
    p = f_p(chosen, cfg)
    a = f_a(1, cfg)
    if p <= a:
        return SumDofBound(p, f"f_p(L={chosen})", chosen, _warnings(cfg))
    return SumDofBound(a, f"f_a(1) [L={chosen}]", chosen, _warnings(cfg))


def lower_bound_sum_dof(cfg: SystemConfig) -> SumDofBound:
    """Achievable sum DoF (three-regime piecewise formula)."""
    K, N, g, d = cfg.K, cfg.N, cfg.gamma, cfg.d_m
    w = _warnings(cfg)
    threshold = dm_star(cfg)
    for L in range(1, K):
        if f_b(L, cfg) <= d <= f_b(L + 1, cfg):
            return SumDofBound(f_a(L, cfg), f"f_a(L={L})", L, w)
    if f_b(K, cfg) <= d <= threshold:
        val = Fraction(2 * K, 2 * K - 1) * d + K * N - K * (K - 1) * N * g / Fraction(2 * K - 1)
        return SumDofBound(val, "timeshare(Q_1,Q_o)", None, w)
    return SumDofBound(K * N + d, "full overload", None, w)


def bounds_tight(cfg: SystemConfig) -> bool:
    return lower_bound_sum_dof(cfg).value == upper_bound_sum_dof(cfg).value


def _require_two_users(cfg: SystemConfig) -> None:
    if cfg.K != 2:
        raise DomainError(f"two-user formula called with K={cfg.K}")


def two_user_sum_dof(cfg: SystemConfig) -> SumDofBound:
    _require_two_users(cfg)
    N, g, d = cfg.N, cfg.gamma, cfg.d_m
    if d >= 2 * N * g:
        return SumDofBound(2 * N + d, "d_m >= 2N*gamma", None, _warnings(cfg))
    val = (4 * (d + N) + 2 * N * (1 - g)) / Fraction(3)
    return SumDofBound(val, "d_m <= 2N*gamma", None, _warnings(cfg))


def _region_lhs(d1, d2):
    return (d1, d2, d1 + d2, 2 * d1 + d2, d1 + 2 * d2)


def _region_rhs(cfg: SystemConfig):
    N, g, d = cfg.N, cfg.gamma, cfg.d_m
    tri = 2 * (d + N) + N * (1 - g)
    return (d + N, d + N, d + 2 * N, tri, tri)


def region_inequalities(cfg: SystemConfig) -> tuple:
    """The five half-planes as ``(a1, a2, rhs)`` with ``a1*d1 + a2*d2 <= rhs``."""
    coeffs = ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2))
    return tuple((a1, a2, r) for (a1, a2), r in zip(coeffs, _region_rhs(cfg)))


def two_user_region(cfg: SystemConfig) -> DoFRegion2:
    _require_two_users(cfg)
    N, g, d = cfg.N, cfg.gamma, cfg.d_m
    A = DoFPoint((N * (1 - g), d + N))
    B = DoFPoint((d + N, N * (1 - g)))
    corners = {"A": A, "B": B}
    if d <= 2 * N * g:
        c = (2 * (d + N) + N * (1 - g)) / Fraction(3)
        corners["C"] = DoFPoint((c, c))
        middle = [corners["C"]]
    if d >= 2 * N * g:
        corners["E"] = DoFPoint((N * (1 + g), d + N * (1 - g)))
        corners["F"] = DoFPoint((d + N * (1 - g), N * (1 + g)))
        middle = [corners["F"], corners["E"]]
    ring = [DoFPoint((0, 0)), DoFPoint((d + N, 0)), B, *middle, A, DoFPoint((0, d + N))]
    vertices = []
    for v in ring:
        if not vertices or vertices[-1] != v:
            vertices.append(v)
    if len(vertices) > 1 and vertices[-1] == vertices[0]:
        vertices.pop()
    return DoFRegion2(tuple(vertices), corners, region_inequalities(cfg))


def in_region(point, cfg: SystemConfig) -> bool:
    _require_two_users(cfg)
    p = point if isinstance(point, DoFPoint) else DoFPoint(tuple(point))
    if len(p) != 2:
        raise DomainError("two-user region needs a 2-coordinate point")
    return all(l <= r for l, r in zip(_region_lhs(*p.d), _region_rhs(cfg)))


def gamma_star(cfg: SystemConfig) -> Fraction:
    K, N = cfg.K, cfg.N
    return min(cfg.d_m / (K * (K - 1) * N), Fraction(1))


def dm_star(cfg: SystemConfig) -> Fraction:
    K = cfg.K
    return K * (K - 1) * cfg.N * cfg.gamma


def full_csit_sum_dof(cfg: SystemConfig) -> Fraction:
    return cfg.K * cfg.N + cfg.d_m


def channel_aggregation_sum_dof(cfg: SystemConfig) -> Fraction:
    K, N, g = cfg.K, cfg.N, cfg.gamma
    return K * N * g / harmonic(K) + K * N * (1 - g) + cfg.d_m


def q_o_point(cfg: SystemConfig) -> tuple:
    d = dm_star(cfg)
    return d, cfg.K * cfg.N + d


def q_l_point(L: int, cfg: SystemConfig) -> tuple:
    _check_L(L, cfg)
    K, N, g = cfg.K, cfg.N, cfg.gamma
    d = (K - L) * N * g / ((L + 1) * harmonic(L))
    total = K * N * g / harmonic(L) + (1 - g) * K * N
    return d, total


def time_share(qa: Sequence, qb: Sequence, d_m) -> Fraction:
    """Sum DoF on the segment joining two achievable ``(d_m, dsum)`` points."""
    da, sa = map(to_fraction, qa)
    db, sb = map(to_fraction, qb)
    d = to_fraction(d_m)
    if da == db:
        raise DomainError("time sharing between points with equal d_m")
    if da > db:
        raise DomainError("time_share expects qa.d_m < qb.d_m")
    if not da <= d <= db:
        raise DomainError(f"d_m={d} outside [{da}, {db}]")
    return sa + (d - da) * (sb - sa) / (db - da)
