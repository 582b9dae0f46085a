"""Block-fading MIMO broadcast channel, delayed CSIT window and multicast pipe.

All randomness is drawn from counter-based streams keyed by
``(master seed, stream label, user, index)`` so any draw can be reproduced
in isolation and trials can run in any order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import SystemConfig
from .errors import CausalityError, DomainError, MulticastOverflow

STREAMS = {"channel": 0, "noise": 1, "data": 2, "beta": 3, "common": 4}

DEFAULT_SEED = 12345


def stream(seed: int, label: str, *index: int) -> np.random.Generator:
    """Independent Philox generator for one ``(label, *index)`` cell."""
    key = (STREAMS[label], *(int(i) for i in index))
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: independent real and imaginary parts of variance 1/2."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


@dataclass(frozen=True)
class ChannelBlock:
    h: np.ndarray  # (K, N, M)
    block_index: int

    @property
    def K(self):
        return self.h.shape[0]

    def stacked(self, users=None) -> np.ndarray:
        users = range(self.K) if users is None else users
        return np.concatenate([self.h[u] for u in users], axis=0)


def gen_block(seed: int, block_index: int, cfg: SystemConfig) -> ChannelBlock:
    h = np.stack([
        complex_normal(stream(seed, "channel", user, block_index), (cfg.N, cfg.M))
        for user in range(cfg.K)
    ])
    h.setflags(write=False)
    return ChannelBlock(h, int(block_index))


def gen_rational_block(seed: int, block_index: int, cfg: SystemConfig,
                       spread: int = 9) -> ChannelBlock:
    """Block with small nonzero random rational entries, for exact decodability checks."""
    rng = stream(seed, "channel", 0, block_index)
    num = rng.integers(1, spread + 1, size=(cfg.K, cfg.N, cfg.M))
    num = num * rng.choice([-1, 1], size=num.shape)
    den = rng.integers(1, spread + 1, size=(cfg.K, cfg.N, cfg.M))
    h = np.empty(num.shape, dtype=object)
    for ix in np.ndindex(num.shape):
        h[ix] = Fraction(int(num[ix]), int(den[ix]))
    return ChannelBlock(h, int(block_index))


@dataclass(frozen=True)
class NoiseSample:
    z: np.ndarray  # (K, N) per channel use


def gen_noise(seed: int, use_index: int, cfg: SystemConfig) -> NoiseSample:
    z = np.stack([complex_normal(stream(seed, "noise", u, use_index), cfg.N)
                  for u in range(cfg.K)])
    return NoiseSample(z)


def apply_channel(x, block: ChannelBlock, user: int, noise: NoiseSample | None = None):
    """Received signal ``H_user @ x + z_user``."""
    x = np.asarray(x)
    M = block.h.shape[2]
    if x.shape != (M,):
        raise DomainError(f"transmit vector must have {M} entries, got {x.shape}")
    if not 0 <= user < block.K:
        raise DomainError(f"user index {user} out of range")
    y = block.h[user] @ x
    if noise is not None:
        z = noise.z[user]
        if z.shape != y.shape:
            raise DomainError("noise dimension does not match receive antennas")
        y = y + z
    return y


def delay_uses(gamma, T_c: int) -> int:
    """Channel uses that must elapse in a block before its CSI is known."""
    g = Fraction(gamma)
    return math.ceil(g * T_c)


@dataclass(frozen=True)
class CsitView:
    """What the transmitter may read at channel use ``t``.

    Blocks with index ``< horizon`` are visible; ``current_known`` says
    whether the in-progress block has also become visible.
    """

    t: int
    current_block: int
    current_known: bool

    @property
    def horizon(self) -> int:
        return self.current_block + (1 if self.current_known else 0)

    @property
    def known_blocks(self) -> range:
        return range(self.horizon)

    def sees(self, block_index: int) -> bool:
        return block_index < self.horizon

    def read(self, block: ChannelBlock) -> np.ndarray:
        if not self.sees(block.block_index):
            raise CausalityError(
                f"block {block.block_index} is not visible at t={self.t} "
                f"(visible blocks < {self.horizon})")
        return block.h


def csit_at(t: int, gamma, T_c: int) -> CsitView:
    if t < 0:
        raise DomainError("channel-use index must be nonnegative")
    if T_c < 1:
        raise DomainError("T_c must be a positive integer")
    block, offset = divmod(int(t), int(T_c))
    return CsitView(int(t), block, offset >= delay_uses(gamma, T_c))


def view_after(block_index: int) -> CsitView:
    """View at the first use of the next block: everything up to ``block_index``."""
    return CsitView(-1, block_index + 1, False)


def view_during(block_index: int) -> CsitView:
    """View inside ``block_index`` once its CSI has arrived."""
    return CsitView(-1, block_index, True)


# -- multicast pipe --------------------------------------------------------

@dataclass(frozen=True)
class Delivery:
    bits: str
    uses: int
    receivers: tuple

    def at(self, user: int) -> str:
        return self.receivers[user]


@dataclass
class MulticastPipe:
    """Noiseless pipe carrying ``d_m * log2(P)`` bits per use to all users."""

    capacity_bits_per_use: float
    K: int
    queue: list = field(default_factory=list)
    delivered_bits: int = 0
    uses: int = 0

    @classmethod
    def for_power(cls, d_m, P: float, K: int) -> "MulticastPipe":
        return cls(float(d_m) * math.log2(P), K)

    def send(self, bits: str, uses: int) -> Delivery:
        if uses < 1:
            raise DomainError("a transmission needs at least one channel use")
        if any(b not in "01" for b in bits):
            raise DomainError("bits must be a string of '0'/'1'")
        budget = uses * self.capacity_bits_per_use
        if len(bits) > budget + 1e-9:
            raise MulticastOverflow(
                f"{len(bits)} bits exceed {budget:.3f} available over {uses} uses")
        self.queue.append(bits)
        delivered = self.queue.pop(0)
        self.delivered_bits += len(delivered)
        self.uses += uses
        return Delivery(delivered, uses, tuple(delivered for _ in range(self.K)))


def multicast_send(pipe: MulticastPipe, bits: str, uses: int) -> Delivery:
    return pipe.send(bits, uses)
