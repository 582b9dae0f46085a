"""Block-fraction parameters of the two-user scheduler."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..analysis import SystemConfig
from ..errors import DomainError
from ..exact import to_fraction

CORNERS = ("A", "B", "C", "E", "F")

# single-user stream beneficiary per corner (0-based user index)
CORNER_TARGET = {"A": 1, "E": 1, "B": 0, "F": 0, "C": None}


@dataclass(frozen=True)
class SchemeParams:
    """``delta``: overloaded share of a block; ``theta``: share spent multicasting
    side info over the BC; ``eta``: share of the pipe carrying side info;
    ``L``: partial-overload depth."""

    delta: Fraction = Fraction(0)
    theta: Fraction = Fraction(0)
    eta: Fraction = Fraction(0)
    L: int = 1

    def __post_init__(self):
        for name in ("delta", "theta", "eta"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        if self.delta < 0 or self.theta < 0:
            raise DomainError("delta and theta must be nonnegative")
        if not 0 <= self.eta <= 1:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if self.eta < 1 and self.theta != 0:
            raise DomainError("theta must be 0 unless the pipe is fully used (eta = 1)")
        if int(self.L) != self.L or self.L < 1:
            raise DomainError("L must be a positive integer")

    def fits(self, cfg: SystemConfig) -> bool:
        return self.delta + self.theta <= cfg.gamma and self.L <= cfg.K

    def design_balance(self, cfg: SystemConfig) -> Fraction:
        """Side info produced minus side info delivered, per block (0 when balanced)."""
        N = cfg.N
        return 2 * N * self.delta - (N * self.theta + self.eta * cfg.d_m)


def solve_params(cfg: SystemConfig, corner: str) -> SchemeParams:
    if cfg.K != 2:
        raise DomainError("the corner scheduler is defined for K = 2")
    corner = str(corner).upper()
    if corner not in CORNERS:
        raise DomainError(f"corner must be one of {', '.join(CORNERS)}")
    N, g, d = cfg.N, cfg.gamma, cfg.d_m
    if corner in ("A", "B"):
        p = SchemeParams()
    elif corner == "C":
        if d > 2 * N * g:
            raise DomainError(f"corner C needs d_m <= 2*N*gamma = {2 * N * g}")
        p = SchemeParams((N * g + d) / (3 * N), (2 * N * g - d) / (3 * N), Fraction(1))
    else:
        if d < 2 * N * g:
            raise DomainError(f"corner {corner} needs d_m >= 2*N*gamma = {2 * N * g}")
        eta = Fraction(0) if d == 0 else 2 * N * g / d
        p = SchemeParams(g, Fraction(0), eta)
    assert p.design_balance(cfg) == 0 and p.fits(cfg)
    return p
