"""Zero-forcing, single-user and common-message transmission over the BC."""
from __future__ import annotations

import math

import numpy as np

from .. import kernels
from ..channel import ChannelBlock, CsitView
from ..errors import CausalityError, DomainError
from ._linalg import is_exact, null_space


def _others(h, k):
    K = h.shape[-3]
    return np.concatenate([h[..., i, :, :] for i in range(K) if i != k], axis=-2)


def zf_precoders(h) -> np.ndarray:
    """Precoders ``V`` of shape (..., K, M, N) with ``H_i V_k = 0`` for ``i != k``.

    Float channels get orthonormal columns chosen to maximise the user's own
    gain inside the null space; exact channels get a rational null basis.
    """
    h = np.asarray(h)
    K, N, M = h.shape[-3:]
    if M < K * N:
        raise DomainError(f"zero forcing needs M >= K*N ({K * N}), got M={M}")
    if is_exact(h):
        if h.ndim != 3:
            raise DomainError("exact precoders are built one block at a time")
        return np.stack([null_space(_others(h, k))[:, :N] for k in range(K)])
    out = []
    for k in range(K):
        _, _, vh = np.linalg.svd(_others(h, k), full_matrices=True)
        basis = np.conj(np.swapaxes(vh[..., (K - 1) * N:, :], -1, -2))
        own = h[..., k, :, :] @ basis
        _, _, vh_own = np.linalg.svd(own, full_matrices=True)
        w = np.conj(np.swapaxes(vh_own[..., :N, :], -1, -2))
        out.append(basis @ w)
    return np.stack(out, axis=-3)


def zf_transmit(symbols, view: CsitView, block: ChannelBlock, P=None) -> np.ndarray:
    """Transmit vector for ``K`` users' ``N`` streams each, interference-free.

    The current block must already be visible to the transmitter.
    """
    if not view.current_known or view.current_block != block.block_index:
        raise CausalityError("zero forcing needs the current block's CSI")
    h = view.read(block)
    K, N, M = h.shape
    symbols = np.asarray(symbols)
    if symbols.shape != (K, N):
        raise DomainError(f"expected symbols shaped ({K}, {N})")
    V = zf_precoders(h)
    scale = 1 if P is None else math.sqrt(P / (K * N))
    x = sum(V[k] @ symbols[k] for k in range(K))
    return x if scale == 1 else x * scale


def zf_rates(h, P: float) -> np.ndarray:
    """Per-user rate (bits/use) with ``P/(K N)`` per stream, shape (..., K)."""
    h = np.asarray(h)
    K, N, _ = h.shape[-3:]
    V = zf_precoders(h)
    eff = np.einsum("...knm,...kmj->...knj", h, V)
    gram = (P / (K * N)) * (eff @ np.conj(np.swapaxes(eff, -1, -2)))
    gram = gram + np.eye(N)
    return kernels.logdet_hpd(gram)


def single_user_rate(h_user, P: float) -> np.ndarray:
    """Isotropic transmission to one user, no CSIT: ``log2 det(I + P/M H H^H)``."""
    h_user = np.asarray(h_user)
    N, M = h_user.shape[-2:]
    gram = (P / M) * (h_user @ np.conj(np.swapaxes(h_user, -1, -2))) + np.eye(N)
    return kernels.logdet_hpd(gram)


def common_rate(h, P: float) -> np.ndarray:
    """Rate of a message every user must decode (worst user), shape ``h.shape[:-3]``."""
    h = np.asarray(h)
    return np.min(single_user_rate(h, P), axis=-1)
