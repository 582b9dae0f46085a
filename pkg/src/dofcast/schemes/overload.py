"""Full transmit overload with multicast side information.

Each of the ``K`` users gets ``K*N`` fresh symbols per overloaded channel
use. The sum of all users' symbol vectors goes out on the first ``K*N``
antennas; afterwards the cross terms ``H_i u_j`` (``i != j``) are rebuilt
from delayed CSI and multicast, letting user ``k`` cancel its interference
and gain ``(K-1)*N`` extra observations of its own symbols.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..channel import ChannelBlock, CsitView
from ..errors import DomainError, SingularDecodeError
from ._linalg import is_exact, solve

COND_LIMIT = 1e8


class IllConditioned(SingularDecodeError):
    """Decode matrix condition number beyond the resampling guard."""


def side_info_pairs(K: int) -> list:
    return [(i, j) for i in range(K) for j in range(K) if i != j]


@dataclass(frozen=True)
class SideInfo:
    """Cross terms ``s[(i, j)] = H_i @ u_j`` stacked in ``pairs`` order.

    ``values`` has shape ``(..., len(pairs), N)``.
    """

    pairs: tuple
    values: np.ndarray

    def __getitem__(self, pair):
        return self.values[..., self.pairs.index(tuple(pair)), :]

    def for_user(self, k: int):
        """(interference pairs to cancel, extra-observation pairs) for user ``k``."""
        K = 1 + max(i for i, _ in self.pairs)
        cancel = [(k, j) for j in range(K) if j != k]
        extra = [(i, k) for i in range(K) if i != k]
        return cancel, extra


def symbol_scale(K: int, N: int, P) -> float:
    return 1 if P is None else math.sqrt(P / (K * K * N))


def _user_vectors(symbols, M: int, scale):
    symbols = np.asarray(symbols)
    K, n = symbols.shape[-2:]
    if n > M:
        raise DomainError(f"{n} symbols per user need M >= {n}, got M={M}")
    pad = np.zeros(symbols.shape[:-1] + (M - n,), dtype=symbols.dtype)
    if symbols.dtype == object:
        pad[...] = 0
    u = np.concatenate([symbols, pad], axis=-1)
    return u if scale == 1 else u * scale


def overload_encode(symbols, M: int, P=None) -> np.ndarray:
    """Transmit vector carrying every user's ``K*N`` symbols superposed."""
    symbols = np.asarray(symbols)
    if symbols.ndim < 2:
        raise DomainError("symbols must be shaped (K, K*N)")
    K, n = symbols.shape[-2:]
    if n % K:
        raise DomainError(f"each user needs K*N symbols, got {n} for K={K}")
    N = n // K
    u = _user_vectors(symbols, M, symbol_scale(K, N, P))
    return u.sum(axis=-2)


def side_info_from_h(h, symbols, P=None) -> SideInfo:
    """All ``K(K-1)`` cross terms for channel array ``h`` of shape (..., K, N, M)."""
    h = np.asarray(h)
    K, N, M = h.shape[-3:]
    symbols = np.asarray(symbols)
    if symbols.shape[-2:] != (K, K * N):
        raise DomainError(f"expected symbols shaped (K, K*N)=({K}, {K * N})")
    u = _user_vectors(symbols, M, symbol_scale(K, N, P))
    # s[..., i, j, :] = H_i @ u_j
    s = np.einsum("...inm,...jm->...ijn", h, u) if not is_exact(h) else \
        np.array([[h[i] @ u[j] for j in range(K)] for i in range(K)], dtype=object)
    pairs = side_info_pairs(K)
    vals = np.stack([s[..., i, j, :] for i, j in pairs], axis=-2)
    return SideInfo(tuple(pairs), vals)


def compute_side_info(view: CsitView, block: ChannelBlock, symbols, P=None) -> SideInfo:
    """Regenerate the cross terms of ``block``; needs the block to be visible."""
    h = view.read(block)
    return side_info_from_h(h, symbols, P)


def stacked_matrix(h, k: int) -> np.ndarray:
    """``[H_k; H_i for i != k]`` restricted to the first ``K*N`` antennas."""
    h = np.asarray(h)
    K, N = h.shape[-3:-1]
    rows = [h[..., k, :, :]] + [h[..., i, :, :] for i in range(K) if i != k]
    return np.concatenate(rows, axis=-2)[..., : K * N]


def effective_noise(quant_var, k: int, K: int, N: int) -> np.ndarray:
    """Diagonal of the effective noise covariance seen by user ``k``.

    ``quant_var`` has shape (..., K, K, N) with entry ``[i, j]`` the error
    variance of the reconstructed ``s_(i,j)``.
    """
    quant_var = np.asarray(quant_var, dtype=float)
    own = 1.0 + sum(quant_var[..., k, j, :] for j in range(K) if j != k)
    extra = [quant_var[..., i, k, :] for i in range(K) if i != k]
    return np.concatenate([own] + extra, axis=-1)


def overload_rates(h, p_sym: float, quant_var=None) -> np.ndarray:
    """Per-user mutual information (bits per overloaded use).

    ``h`` is (..., K, N, M). The quantization error is modelled as
    independent Gaussian noise with variance ``quant_var``; ``None``
    means unit effective noise on every stacked row.
    """
    h = np.asarray(h)
    K, N = h.shape[-3:-1]
    out = []
    for k in range(K):
        G = stacked_matrix(h, k)
        if quant_var is None:
            sigma = np.ones(G.shape[:-1])
        else:
            sigma = effective_noise(quant_var, k, K, N)
        gram = p_sym * (G @ np.conj(np.swapaxes(G, -1, -2)))
        idx = np.arange(K * N)
        gram[..., idx, idx] += sigma
        out.append(kernels.logdet_hpd(gram) - np.sum(np.log2(sigma), axis=-1))
    return np.stack(out, axis=-1)


def condition_numbers(h) -> np.ndarray:
    """Worst stacked-matrix condition number over users, shape ``h.shape[:-3]``."""
    h = np.asarray(h)
    K = h.shape[-3]
    return np.max(np.stack([np.linalg.cond(stacked_matrix(h, k)) for k in range(K)],
                           axis=-1), axis=-1)


def stacked_decode(y, k: int, side: SideInfo, h, P=None, quant_var=None,
                   check_condition: bool = True):
    """Decode user ``k``'s ``K*N`` symbols from its output and the side info.

    Returns ``(estimates, rate)``; ``rate`` is the Gaussian mutual information
    in bits (``None`` for exact arithmetic).
    """
    h = np.asarray(h)
    K, N = h.shape[-3:-1]
    cancel, extra = side.for_user(k)
    y_eff = y - sum(side[p] for p in cancel)
    rhs = np.concatenate([y_eff] + [side[p] for p in extra], axis=-1)
    G = stacked_matrix(h, k)
    scale = symbol_scale(K, N, P)
    if is_exact(G):
        est = solve(G, rhs)
        return (est if scale == 1 else est / scale), None
    if check_condition and np.linalg.cond(G) > COND_LIMIT:
        raise IllConditioned(f"stacked matrix for user {k} is ill-conditioned")
    est = np.linalg.solve(G, rhs) / scale
    p_sym = 1.0 if P is None else P / (K * K * N)
    rate = None
    if P is not None:
        qv = None if quant_var is None else quant_var
        rate = float(overload_rates(h[None], p_sym, None if qv is None else np.asarray(qv)[None])[0, k])
    return est, rate
