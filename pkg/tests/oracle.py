"""Brute-force linear-system oracle built on sympy, independent of the package solvers."""
from fractions import Fraction

import sympy


def to_sympy(a):
    def conv(v):
        v = Fraction(v)
        return sympy.Rational(v.numerator, v.denominator)
    return sympy.Matrix([[conv(v) for v in row] for row in a])


def determined_values(A, y, idx):
    """Values of the unknowns ``idx`` in ``A x = y`` if they are uniquely determined.

    Returns None when the observations leave any of them ambiguous.
    """
    A = to_sympy(A)
    y = to_sympy([[v] for v in y])
    keep = [c for c in range(A.cols) if c not in idx]
    if A.rank() != A[:, keep].rank() + len(idx):
        return None
    sol, params = A.gauss_jordan_solve(y)
    sol = sol.subs({p: 0 for p in params})
    return [Fraction(int(sympy.Rational(sol[i]).p), int(sympy.Rational(sol[i]).q)) for i in idx]
