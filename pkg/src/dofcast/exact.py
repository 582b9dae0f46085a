"""Exact rational helpers: parsing, JSON form, and small linear algebra.

The linear algebra routines operate on numpy object arrays holding
:class:`fractions.Fraction` entries and are used by the noiseless
decodability checks.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import DomainError, SingularDecodeError


def to_fraction(value) -> Fraction:
    """Convert an int, Fraction, ``"p/q"`` or decimal string exactly.

    Floats are rejected unless they are integral, because their binary
    expansion is rarely what the user typed.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DomainError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value.is_integer():
            return Fraction(int(value))
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse {value!r} as a rational") from exc
    raise DomainError(f"cannot interpret {value!r} as a rational")


def fraction_to_json(value: Fraction) -> dict:
    value = Fraction(value)
    return {
        "num": str(value.numerator),
        "den": str(value.denominator),
        "decimal": float(value),
    }


def fraction_from_json(obj) -> Fraction:
    if isinstance(obj, dict):
        return Fraction(int(obj["num"]), int(obj["den"]))
    return to_fraction(obj)


def fmt(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@lru_cache(maxsize=None)
def harmonic(n: int) -> Fraction:
    """Sum of 1/k for k = 1..n (zero for n <= 0)."""
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def binom(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n else 0


# -- exact linear algebra over object arrays --------------------------------

def as_exact(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr


def _rref(a: np.ndarray):
    a = a.copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if a[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = a[r] / a[r, c]
        for i in range(rows):
            if i != r and a[i, c] != 0:
                a[i] = a[i] - a[i, c] * a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def exact_rank(a) -> int:
    return len(_rref(as_exact(np.atleast_2d(a)))[1])


def exact_solve(a, b) -> np.ndarray:
    """Solve a square system ``a @ x = b`` exactly; ``b`` may be 1-D or 2-D."""
    a = as_exact(a)
    b = as_exact(b)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DomainError(f"expected a square matrix, got {a.shape}")
    vec = b.ndim == 1
    rhs = b.reshape(n, -1)
    aug, pivots = _rref(np.concatenate([a, rhs], axis=1))
    if pivots[:n] != list(range(n)):
        raise SingularDecodeError("exact system is singular")
    x = aug[:, n:]
    return x[:, 0] if vec else x


def exact_null_space(a) -> np.ndarray:
    """Basis of the right null space of ``a`` as columns (exact)."""
    a = as_exact(np.atleast_2d(a))
    rows, cols = a.shape
    red, pivots = _rref(a)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((cols, len(free)), dtype=object)
    basis[...] = Fraction(0)
    for j, f in enumerate(free):
        basis[f, j] = Fraction(1)
        for i, p in enumerate(pivots):
            basis[p, j] = -red[i, f]
    return basis
