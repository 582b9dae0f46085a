"""Linear algebra that works on complex floats or exact Fraction arrays."""
import numpy as np

from ..errors import SingularDecodeError
from ..exact import exact_null_space, exact_solve


def is_exact(a) -> bool:
    return np.asarray(a).dtype == object


def solve(a, b):
    if is_exact(a) or is_exact(b):
        return exact_solve(a, b)
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularDecodeError(str(exc)) from exc


def null_space(a, tol: float = 1e-10):
    """Columns spanning the right null space (orthonormal for floats)."""
    if is_exact(a):
        return exact_null_space(a)
    a = np.atleast_2d(a)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > tol * (s[0] if s.size else 1.0)))
    return np.conj(vh[rank:]).T
