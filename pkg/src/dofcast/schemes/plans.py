"""Block plans: how one coherence block is split between transmission modes.

A plan is a list of segments, each occupying a rational share of the
channel uses and a rational share of the multicast pipe (both per channel
use, pipe shares in units of ``log2 P``). Segments that need no current
CSI sit in the first ``gamma`` share of the block; zero forcing sits in
the remaining ``1 - gamma``. Whatever pipe capacity the segments leave
unused carries an independent stream to one user.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..analysis import (SystemConfig, channel_aggregation_sum_dof, dm_star, f_b,
                        lower_bound_sum_dof, q_l_point, two_user_sum_dof)
from ..channel import csit_at
from ..errors import CausalityError, DomainError, InfeasiblePlan
from ..exact import harmonic
from .mat import pending_rate_formula
from .params import CORNER_TARGET, SchemeParams, solve_params

KINDS = ("zf", "overload", "mat", "single", "common")

# kinds that run without current-block CSI
BLIND = {"overload", "mat", "single", "common"}


@dataclass(frozen=True)
class Segment:
    kind: str
    weight: Fraction
    pipe: Fraction = Fraction(0)
    L: int | None = None
    target: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown segment kind {self.kind!r}")
        object.__setattr__(self, "weight", Fraction(self.weight))
        object.__setattr__(self, "pipe", Fraction(self.pipe))
        if self.weight <= 0 or self.pipe < 0:
            raise DomainError("segment weight must be positive and pipe share nonnegative")
        if self.kind == "mat" and self.L is None:
            raise DomainError("a mat segment needs L")
        if self.kind == "single" and self.target is None:
            raise DomainError("a single-user segment needs a target")


def segment_dof(seg: Segment, cfg: SystemConfig) -> tuple:
    """Per-user DoF contributed by a segment (per channel use of the whole block)."""
    K, N, w = cfg.K, cfg.N, seg.weight
    if seg.kind == "zf":
        return tuple(N * w for _ in range(K))
    if seg.kind == "overload":
        return tuple(K * N * w for _ in range(K))
    if seg.kind == "mat":
        return tuple(N * w / harmonic(seg.L) for _ in range(K))
    if seg.kind == "single":
        return tuple(N * w if k == seg.target else Fraction(0) for k in range(K))
    return tuple(Fraction(0) for _ in range(K))


def segment_pipe_need(seg: Segment, cfg: SystemConfig) -> Fraction:
    """Pipe share a segment needs so its side information costs log2 P bits per scalar."""
    K, N = cfg.K, cfg.N
    if seg.kind == "overload":
        return K * (K - 1) * N * seg.weight
    if seg.kind == "mat":
        return pending_rate_formula(seg.L, SystemConfig(K, N)) * seg.weight
    return Fraction(0)


@dataclass(frozen=True)
class Plan:
    name: str
    cfg: SystemConfig
    segments: tuple
    stream_to: int = 0
    params: SchemeParams | None = None
    notes: tuple = field(default=())

    def __post_init__(self):
        cfg = self.cfg
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        total = sum((s.weight for s in segs), Fraction(0))
        blind = sum((s.weight for s in segs if s.kind in BLIND), Fraction(0))
        if total > 1:
            raise InfeasiblePlan(f"segments occupy {total} of the block")
        if blind > cfg.gamma:
            raise InfeasiblePlan(f"CSI-free segments need {blind} of the block but only "
                                 f"gamma={cfg.gamma} precedes the CSI")
        if sum((s.weight for s in segs if s.kind == "zf"), Fraction(0)) > 1 - cfg.gamma:
            raise InfeasiblePlan("zero forcing only runs once the current CSI is known")
        if self.pipe_used > cfg.d_m:
            raise InfeasiblePlan(f"segments need pipe {self.pipe_used} > d_m={cfg.d_m}")
        if any(s.kind in ("zf", "overload") for s in segs) and cfg.M < cfg.K * cfg.N:
            raise InfeasiblePlan(f"needs M >= K*N = {cfg.K * cfg.N}")
        for s in segs:
            if s.kind == "mat" and not 1 <= s.L <= cfg.K:
                raise InfeasiblePlan(f"L={s.L} outside [1, {cfg.K}]")
            if s.kind in ("overload", "mat") and s.pipe + self.common_share(s) < segment_pipe_need(s, cfg):
                raise InfeasiblePlan(f"{s.kind} segment gets too little side-info capacity")
        if not 0 <= self.stream_to < cfg.K:
            raise DomainError("stream_to out of range")

    @property
    def pipe_used(self) -> Fraction:
        return sum((s.pipe for s in self.segments), Fraction(0))

    @property
    def pipe_left(self) -> Fraction:
        return self.cfg.d_m - self.pipe_used

    def common_share(self, seg: Segment) -> Fraction:
        """BC capacity (in N log P units) of common-message segments feeding ``seg``."""
        if seg.kind != "overload":
            return Fraction(0)
        return sum((s.weight * self.cfg.N for s in self.segments if s.kind == "common"),
                   Fraction(0))

    def predicted_per_user(self) -> tuple:
        K = self.cfg.K
        acc = [Fraction(0)] * K
        for s in self.segments:
            for k, v in enumerate(segment_dof(s, self.cfg)):
                acc[k] += v
        acc[self.stream_to] += self.pipe_left
        return tuple(acc)

    @property
    def predicted_sum(self) -> Fraction:
        return sum(self.predicted_per_user(), Fraction(0))

    @property
    def T_c(self) -> int:
        """Shortest block giving every segment an integral number of uses."""
        dens = [self.cfg.gamma.denominator] + [s.weight.denominator for s in self.segments]
        return math.lcm(*dens)

    def use_counts(self, T_c: int | None = None) -> list:
        T_c = self.T_c if T_c is None else T_c
        counts = [s.weight * T_c for s in self.segments]
        if any(c.denominator != 1 for c in counts):
            raise DomainError(f"T_c={T_c} does not split the block integrally")
        return [int(c) for c in counts]

    def layout(self, T_c: int | None = None) -> list:
        """Segment index of every use in one block, in transmission order."""
        T_c = self.T_c if T_c is None else T_c
        order = sorted(range(len(self.segments)),
                       key=lambda i: self.segments[i].kind not in BLIND)
        counts = self.use_counts(T_c)
        out = []
        for i in order:
            out.extend([i] * counts[i])
        return out

    def check_causality(self, T_c: int | None = None) -> None:
        """Every zero-forcing use must fall after the current CSI arrives.

        Blind segments are placed first so the later uses are left for
        zero forcing.
        """
        T_c = self.T_c if T_c is None else T_c
        for t, i in enumerate(self.layout(T_c)):
            view = csit_at(t, self.cfg.gamma, T_c)
            if self.segments[i].kind == "zf" and not view.current_known:
                raise CausalityError(f"zero-forcing use {t} precedes the current CSI")

    def describe(self) -> list:
        rows = []
        for s in self.segments:
            extra = f" L={s.L}" if s.L else ""
            extra += f" to user {s.target + 1}" if s.target is not None else ""
            rows.append(f"{s.kind}{extra}: share {s.weight}, pipe {s.pipe}")
        if self.pipe_left:
            rows.append(f"independent pipe stream to user {self.stream_to + 1}: {self.pipe_left}")
        return rows


def _seg(kind, weight, **kw):
    weight = Fraction(weight)
    return Segment(kind, weight, **kw) if weight > 0 else None


def _build(name, cfg, segments, **kw) -> Plan:
    return Plan(name, cfg, tuple(s for s in segments if s is not None), **kw)


def zf_plan(cfg: SystemConfig) -> Plan:
    """Zero forcing once CSI is known, single-user transmission before."""
    g = cfg.gamma
    return _build("zf", cfg, [_seg("single", g, target=0), _seg("zf", 1 - g)])


def overload_plan(cfg: SystemConfig) -> Plan:
    """Full overload for the whole CSI-free share, side info on the pipe."""
    g = cfg.gamma
    need = dm_star(cfg)
    if cfg.d_m < need:
        raise InfeasiblePlan(f"full overload needs d_m >= K(K-1)N*gamma = {need}")
    return _build("overload", cfg, [_seg("overload", g, pipe=need), _seg("zf", 1 - g)])


def mat_plan(cfg: SystemConfig, L: int) -> Plan:
    """Order-j transmission up to order ``L``, order-(L+1) symbols on the pipe."""
    g = cfg.gamma
    pipe = q_l_point(L, cfg)[0]
    if cfg.d_m < pipe:
        raise InfeasiblePlan(f"L={L} needs d_m >= {pipe}")
    return _build(f"mat(L={L})", cfg, [_seg("mat", g, pipe=pipe, L=L), _seg("zf", 1 - g)])


def aggregation_schedule(cfg: SystemConfig) -> Plan:
    """Independent coding: full order-K transmission on the BC, pipe as its own stream."""
    g = cfg.gamma
    plan = _build("aggregation", cfg, [_seg("mat", g, L=cfg.K), _seg("zf", 1 - g)])
    assert plan.predicted_sum == channel_aggregation_sum_dof(cfg)
    return plan


def corner_plan(cfg: SystemConfig, corner: str) -> Plan:
    """Two-user schedule reaching one corner of the DoF region."""
    p = solve_params(cfg, corner)
    corner = corner.upper()
    g, d = cfg.gamma, cfg.d_m
    target = CORNER_TARGET[corner]
    if corner in ("A", "B"):
        segs = [_seg("single", g, target=target), _seg("zf", 1 - g)]
    else:
        segs = [_seg("overload", p.delta, pipe=p.eta * d), _seg("common", p.theta),
                _seg("zf", 1 - g)]
    return _build(f"corner {corner}", cfg, segs, stream_to=target or 0, params=p)


def timeshare_plan(cfg: SystemConfig) -> Plan:
    """Time sharing between neighbouring achievable points for any K."""
    K, g, d = cfg.K, cfg.gamma, cfg.d_m
    if g == 0:
        return _build("timeshare", cfg, [_seg("zf", 1)])
    zf = _seg("zf", 1 - g)
    star = dm_star(cfg)
    if d >= star:
        plan = _build("timeshare", cfg, [_seg("overload", g, pipe=star), zf])
    else:
        for L in range(1, K):
            lo, hi = f_b(L, cfg), f_b(L + 1, cfg)
            if lo <= d <= hi:
                # between the order-(K+1-L) and order-(K-L) points
                a, b = K + 1 - L, K - L
                lam = (d - lo) / (hi - lo)
                segs = [_seg("mat", g * (1 - lam), pipe=(1 - lam) * q_l_point(a, cfg)[0], L=a),
                        _seg("mat", g * lam, pipe=lam * q_l_point(b, cfg)[0], L=b), zf]
                break
        else:
            lo, hi = q_l_point(1, cfg)[0], star
            lam = (d - lo) / (hi - lo)
            segs = [_seg("mat", g * (1 - lam), pipe=(1 - lam) * lo, L=1),
                    _seg("overload", g * lam, pipe=lam * star), zf]
        plan = _build("timeshare", cfg, segs)
    assert plan.predicted_sum == lower_bound_sum_dof(cfg).value, plan
    return plan


def optimal_plan(cfg: SystemConfig) -> Plan:
    """Best known joint-coding plan: the sum-optimal corner for K=2, time sharing otherwise."""
    if cfg.K == 2:
        corner = "C" if cfg.d_m <= 2 * cfg.N * cfg.gamma else "E"
        plan = corner_plan(cfg, corner)
        assert plan.predicted_sum == two_user_sum_dof(cfg).value
        return Plan("optimal", cfg, plan.segments, plan.stream_to, plan.params,
                    (f"two-user corner {corner}",))
    plan = timeshare_plan(cfg)
    return Plan("optimal", cfg, plan.segments, plan.stream_to, None, ("time sharing",))


SCHEMES = ("optimal", "overload", "mat", "aggregation", "zf", "corner", "timeshare")


def make_plan(cfg: SystemConfig, scheme: str, L: int | None = None,
              corner: str | None = None) -> Plan:
    scheme = scheme.lower()
    if scheme == "optimal":
        return optimal_plan(cfg)
    if scheme == "overload":
        return overload_plan(cfg)
    if scheme == "mat":
        if L is None:
            raise DomainError("scheme 'mat' needs L")
        return mat_plan(cfg, int(L))
    if scheme == "aggregation":
        return aggregation_schedule(cfg)
    if scheme == "zf":
        return zf_plan(cfg)
    if scheme == "corner":
        if corner is None:
            raise DomainError("scheme 'corner' needs a corner (A, B, C, E or F)")
        return corner_plan(cfg, corner)
    if scheme == "timeshare":
        return timeshare_plan(cfg)
    raise DomainError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
