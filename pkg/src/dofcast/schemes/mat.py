"""Retrospective (order-j symbol) transmission with the top phase on the multicast pipe.

Phase ``j`` serves every user subset ``S`` of size ``j`` with ``(K+1-j)N``
order-``j`` symbols per channel use. Each of the ``K-j`` users outside ``S``
overhears ``N`` equations that the members of ``S`` are missing. For every
subset ``S'`` of size ``j+1`` the transmitter gathers, from one round of
phase ``j``, the ``(j+1)N`` overheard equations (user ``u`` overhearing the
use aimed at ``S' - {u}``) and forms ``jN`` order-``(j+1)`` symbols as fixed
generic combinations ``beta_j``. Phases ``1..L`` run over the BC; the
order-``(L+1)`` symbols are quantized and multicast.

Phase ``j`` needs ``r_j = r_1 / C(K-1, j-1)`` rounds so the symbol counts
chain exactly; ``r_1`` is the least common multiple of those binomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from ..analysis import SystemConfig
from ..errors import DomainError, SingularDecodeError
from ..exact import binom, harmonic
from ._linalg import is_exact, solve


# -- ledger (normalised per-round accounting) ------------------------------

@dataclass(frozen=True)
class OrderSymbolLedger:
    K: int
    N: int
    L: int
    gamma: Fraction
    T_u: tuple
    phi_s: tuple
    phi_g: tuple

    @property
    def pending(self) -> Fraction:
        """Order-(L+1) symbols left for the multicast pipe."""
        return self.phi_g[-1]

    @property
    def block_length(self) -> Fraction:
        """Channel uses of one block including the zero-forcing share."""
        if self.gamma == 0:
            return Fraction(0)
        return sum(self.T_u, Fraction(0)) / self.gamma

    @property
    def pending_rate(self) -> Fraction:
        if self.gamma == 0:
            return Fraction(0)
        return self.pending / self.block_length

    def chain_holds(self) -> bool:
        return all(self.phi_g[j] == self.phi_s[j + 1] for j in range(self.L - 1))


def mat_partial_schedule(L: int, cfg: SystemConfig) -> OrderSymbolLedger:
    K, N, g = cfg.K, cfg.N, cfg.gamma
    if int(L) != L or not 1 <= L <= K:
        raise DomainError(f"L must be an integer in [1, {K}], got {L}")
    T_u, phi_s, phi_g = [], [], []
    for j in range(1, L + 1):
        norm = binom(K - 1, j - 1)
        T_u.append(g * Fraction(binom(K, j), norm))
        phi_s.append((K + 1 - j) * N * g * Fraction(binom(K, j), norm))
        phi_g.append(j * N * g * Fraction(binom(K, j + 1), norm))
    return OrderSymbolLedger(K, N, L, g, tuple(T_u), tuple(phi_s), tuple(phi_g))


def pending_rate_formula(L: int, cfg: SystemConfig) -> Fraction:
    K, N, g = cfg.K, cfg.N, cfg.gamma
    return N * g * (K - L) / ((L + 1) * harmonic(L))


# -- explicit symbol schedule ----------------------------------------------

@dataclass(frozen=True)
class Use:
    index: int
    order: int
    subset: tuple
    symbols: tuple
    round: int


@dataclass(frozen=True)
class Group:
    """``jN`` order-(j+1) symbols built from one round of phase ``j``."""

    order: int
    subset: tuple
    round: int
    term_uses: dict  # member -> index of the use it overheard
    symbols: tuple


@dataclass
class MatStructure:
    K: int
    N: int
    L: int
    rounds: tuple
    uses: list = field(default_factory=list)
    groups: list = field(default_factory=list)
    n_data: int = 0
    n_symbols: int = 0
    data_of: dict = field(default_factory=dict)  # user -> data ids (order-1 symbol ids)

    @property
    def n_uses(self) -> int:
        return len(self.uses)

    @property
    def multicast_groups(self) -> list:
        return [g for g in self.groups if g.order == self.L + 1]

    @property
    def multicast_symbols(self) -> list:
        return [s for g in self.multicast_groups for s in g.symbols]

    def uses_of_order(self, j: int) -> list:
        return [u for u in self.uses if u.order == j]

    def group_for(self, subset: tuple, round_: int, order: int) -> Group:
        return self._group_index[(order, tuple(subset), round_)]

    def finish(self):
        self._group_index = {(g.order, g.subset, g.round): g for g in self.groups}
        return self


def phase_rounds(K: int, L: int) -> tuple:
    r1 = math.lcm(*(binom(K - 1, j - 1) for j in range(1, L + 1)))
    return tuple(r1 // binom(K - 1, j - 1) for j in range(1, L + 1))


def build_structure(K: int, N: int, L: int) -> MatStructure:
    if not 1 <= L <= K:
        raise DomainError(f"L must be in [1, {K}]")
    rounds = phase_rounds(K, L)
    st = MatStructure(K, N, L, rounds)
    next_id = 0

    def new_ids(n):
        nonlocal next_id
        ids = tuple(range(next_id, next_id + n))
        next_id += n
        return ids

    # order-1 symbols are the data and take the first ids
    for rho in range(rounds[0]):
        for k in range(K):
            ids = new_ids(K * N)
            st.data_of.setdefault(k, []).extend(ids)
            st.uses.append(Use(len(st.uses), 1, (k,), ids, rho))
    st.n_data = next_id

    for j in range(1, L + 1):
        if j + 1 > K:
            break
        phase = {(u.round, u.subset): u.index for u in st.uses if u.order == j}
        for rho in range(rounds[j - 1]):
            for sub in combinations(range(K), j + 1):
                terms = {m: phase[(rho, tuple(x for x in sub if x != m))] for m in sub}
                st.groups.append(Group(j + 1, sub, rho, terms, new_ids(j * N)))
        if j + 1 <= L:
            per_use = (K - j) * N
            for c in range(rounds[j]):
                for sub in combinations(range(K), j + 1):
                    pool = [s for g in st.groups if g.order == j + 1 and g.subset == sub
                            for s in g.symbols]
                    chunk = tuple(pool[c * per_use:(c + 1) * per_use])
                    assert len(chunk) == per_use
                    st.uses.append(Use(len(st.uses), j + 1, sub, chunk, c))
    st.n_symbols = next_id
    return st.finish()


# -- combining constants -------------------------------------------------------

def check_beta(beta, N: int) -> None:
    """Every member must be able to solve for the others' terms."""
    beta = np.asarray(beta)
    rows, cols = beta.shape
    members = cols // N
    for m in range(members):
        keep = [c for c in range(cols) if not m * N <= c < (m + 1) * N]
        sub = beta[:, keep]
        if is_exact(sub):
            from ..exact import exact_rank
            ok = exact_rank(sub) == rows
        else:
            ok = np.linalg.matrix_rank(sub) == rows and np.linalg.cond(sub) < 1e10
        if not ok:
            raise SingularDecodeError(
                f"combining matrix is degenerate: dropping member {m} leaves a singular system")


def draw_betas(seed: int, K: int, N: int, L: int, exact: bool = False) -> dict:
    """Shared combining matrices ``beta[j]`` of shape (jN, (j+1)N), ``j = 1..min(L, K-1)``."""
    from ..channel import stream
    rng = stream(seed, "beta", 0, 0)
    betas = {}
    for j in range(1, min(L, K - 1) + 1):
        shape = (j * N, (j + 1) * N)
        if exact:
            b = np.empty(shape, dtype=object)
            for ix in np.ndindex(shape):
                b[ix] = Fraction(int(rng.integers(1, 10)) * int(rng.choice([-1, 1])),
                                 int(rng.integers(1, 10)))
        else:
            # unit-modulus phases: generic with probability one and well conditioned
            b = np.exp(2j * np.pi * rng.random(shape))
        check_beta(b, N)
        betas[j] = b
    return betas


def mat_order_combine(terms, beta) -> np.ndarray:
    """Higher-order symbols ``beta @ terms`` from stacked overheard equations."""
    beta = np.asarray(beta)
    terms = np.asarray(terms)
    if terms.shape[-1] != beta.shape[1] and terms.shape[-2] == beta.shape[1]:
        return beta @ terms
    return terms @ beta.T if terms.ndim > 1 else beta @ terms


def mat_order_recover(values, own_terms, member: int, beta, N: int) -> np.ndarray:
    """Solve for the other members' terms given one member's own ``N`` terms.

    Returns all ``(j+1)N`` terms with the member's block filled in.
    """
    beta = np.asarray(beta)
    cols = beta.shape[1]
    own = slice(member * N, (member + 1) * N)
    keep = [c for c in range(cols) if not own.start <= c < own.stop]
    rhs = np.asarray(values) - beta[:, own] @ np.asarray(own_terms)
    sub = beta[:, keep]
    if not is_exact(sub) and np.linalg.cond(sub) > 1e10:
        raise SingularDecodeError("combining matrix is singular for this member")
    others = solve(sub, rhs)
    out = np.empty((cols,) + np.shape(rhs)[1:], dtype=others.dtype)
    out[own] = own_terms
    out[keep] = others
    return out


# -- linear forms over the data vector -------------------------------------------

@dataclass
class MatForms:
    """All signals as linear forms over the order-1 data vector.

    ``rx[..., t, u]`` is (N, n_data): user ``u``'s noiseless output at use ``t``.
    ``alpha[..., s]`` is the transmit scaling of symbol ``s``; ``sym[s]`` is its form.
    """

    structure: MatStructure
    rx: np.ndarray
    mc: np.ndarray
    alpha: np.ndarray
    sym: dict
    h: np.ndarray = None


def _unit(n, i, exact):
    v = np.zeros(n, dtype=object if exact else float)
    if exact:
        v[...] = Fraction(0)
        v[i] = Fraction(1)
    else:
        v[i] = 1.0
    return v


def build_forms(st: MatStructure, h, betas: dict, normalize: bool = True) -> MatForms:
    """Propagate linear forms through the schedule.

    ``h`` has shape (..., U, K, N, M) with one channel realization per use.
    With ``normalize`` each transmitted symbol is scaled to unit average power
    split over the active antennas (total power 1); powers scale out of the
    mutual information as ``P``.
    """
    h = np.asarray(h)
    exact = is_exact(h)
    batch = h.shape[:-4]
    K, N, M = st.K, st.N, h.shape[-1]
    if h.shape[-4] != st.n_uses or h.shape[-3:-1] != (K, N):
        raise DomainError(f"channel array must be (..., {st.n_uses}, {K}, {N}, M)")
    if M < K * N:
        raise DomainError(f"need M >= K*N = {K * N} transmit antennas")
    nd = st.n_data
    dtype = object if exact else np.complex128
    sym = {}
    for s in range(nd):
        sym[s] = np.broadcast_to(_unit(nd, s, exact), batch + (nd,))
    alpha = np.ones(batch + (st.n_symbols,), dtype=object if exact else float)
    rx = np.zeros(batch + (st.n_uses, K, N, nd), dtype=dtype)
    groups_after = {}
    for g in st.groups:
        groups_after.setdefault(g.order - 1, []).append(g)

    def emit_groups(order):
        for g in groups_after.get(order, []):
            terms = np.concatenate([rx[..., g.term_uses[m], m, :, :] for m in g.subset], axis=-2)
            vals = np.asarray(betas[order]).astype(dtype) @ terms
            for i, s in enumerate(g.symbols):
                sym[s] = vals[..., i, :]

    for j in range(1, st.L + 1):
        for use in st.uses_of_order(j):
            nA = len(use.symbols)
            forms = np.stack([sym[s] for s in use.symbols], axis=-2)  # (..., nA, nd)
            if normalize and not exact:
                norms = np.linalg.norm(forms, axis=-1)
                a = 1.0 / (math.sqrt(nA) * norms)
            else:
                a = np.ones(batch + (nA,), dtype=alpha.dtype)
            alpha[..., list(use.symbols)] = a
            x = forms * a[..., :, None]
            hh = h[..., use.index, :, :, :nA]  # (..., K, N, nA)
            rx[..., use.index, :, :, :] = hh @ x[..., None, :, :]
        emit_groups(j)

    if st.L < K:
        mc = np.stack([sym[s] for s in st.multicast_symbols], axis=-2)
    else:
        mc = np.zeros(batch + (0, nd), dtype=dtype)
    return MatForms(st, rx, mc, alpha, sym, h)


def user_observation_matrix(forms: MatForms, k: int) -> np.ndarray:
    """Rows: user ``k``'s outputs at every use, then every multicast symbol."""
    st = forms.structure
    rx = forms.rx[..., :, k, :, :]
    rx = rx.reshape(rx.shape[:-3] + (st.n_uses * st.N, st.n_data))
    return np.concatenate([rx, forms.mc], axis=-2)


# -- receiver-side decode chain -----------------------------------------------

def mat_decode(forms: MatForms, k: int, received: np.ndarray, multicast: np.ndarray,
               betas: dict) -> np.ndarray:
    """Recover user ``k``'s order-1 symbols by peeling orders ``L+1 .. 1``.

    ``received`` is (U, N) with the user's outputs; ``multicast`` holds the
    order-(L+1) symbol values in ``structure.multicast_symbols`` order. Works
    on a single realization (no batch dimension).
    """
    st = forms.structure
    N, K = st.N, st.K
    known = dict(zip(st.multicast_symbols, np.asarray(multicast)))
    for j in range(st.L, 0, -1):
        for use in st.uses_of_order(j):
            if k not in use.subset:
                continue
            nA = len(use.symbols)
            h_rows = [forms_h(forms, use.index, k, nA)]
            rhs = [received[use.index]]
            for u in range(K):
                if u in use.subset:
                    continue
                sup = tuple(sorted(use.subset + (u,)))
                g = st.group_for(sup, use.round, j + 1)
                vals = np.array([known[s] for s in g.symbols])
                member = sup.index(k)
                own = received[g.term_uses[k]]
                terms = mat_order_recover(vals, own, member, betas[j], N)
                pos = sup.index(u)
                rhs.append(terms[pos * N:(pos + 1) * N])
                h_rows.append(forms_h(forms, use.index, u, nA))
            A = np.concatenate(h_rows, axis=0)
            z = solve(A, np.concatenate(rhs))
            a = forms.alpha[list(use.symbols)]
            for s, zi, ai in zip(use.symbols, z, a):
                known[s] = zi / ai
    return np.array([known[s] for s in st.data_of[k]])


def forms_h(forms: MatForms, t: int, u: int, nA: int):
    return forms.h[t, u, :, :nA]


def normalized_multicast(forms: MatForms) -> np.ndarray:
    """Multicast forms scaled to unit norm (the transmitter rescales before quantizing)."""
    mc = forms.mc
    if mc.shape[-2] == 0:
        return mc
    return mc / np.linalg.norm(mc, axis=-1, keepdims=True)


def mat_rates(forms: MatForms, P: float, quant_var=None) -> np.ndarray:
    """Per-user mutual information over one schedule, shape (..., K), in bits.

    Outputs carry unit noise; each normalized multicast symbol carries
    ``quant_var`` (scalar or per-symbol) of quantization error.
    """
    from .. import kernels
    st = forms.structure
    mc = normalized_multicast(forms)
    n_q = mc.shape[-2]
    batch = forms.rx.shape[:-4]
    sigma = np.ones(batch + (st.n_uses * st.N + n_q,))
    if n_q:
        qv = 0.0 if quant_var is None else np.asarray(quant_var, dtype=float)
        qv = np.broadcast_to(np.asarray(qv)[..., None] if np.ndim(qv) == len(batch) else qv,
                             batch + (n_q,))
        sigma[..., st.n_uses * st.N:] = np.maximum(qv, 1e-12)
    idx = np.arange(sigma.shape[-1])
    out = []
    for k in range(st.K):
        rx = forms.rx[..., :, k, :, :].reshape(batch + (st.n_uses * st.N, st.n_data))
        A = np.concatenate([rx, mc], axis=-2)
        full = P * (A @ np.conj(np.swapaxes(A, -1, -2)))
        A_int = A.copy()
        A_int[..., list(st.data_of[k])] = 0
        part = P * (A_int @ np.conj(np.swapaxes(A_int, -1, -2)))
        full[..., idx, idx] += sigma
        part[..., idx, idx] += sigma
        out.append(kernels.logdet_hpd(full) - kernels.logdet_hpd(part))
    return np.stack(out, axis=-1)
