"""Uniform scalar quantizer for side information sent over the multicast pipe."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import DomainError

CLIP = 4.0


@dataclass(frozen=True)
class QuantizedSideInfo:
    bits: str
    reconstruction: np.ndarray
    clip_range: float
    step: float
    levels: int
    n_clipped: int

    @property
    def error_bound(self) -> float:
        """Worst-case error per real dimension for unclipped inputs."""
        return self.step / 2


def levels_for_bits(bits_per_scalar: float) -> int:
    """Cells per real dimension when a complex scalar gets ``bits_per_scalar`` bits."""
    if bits_per_scalar < 2:
        raise DomainError("need at least 2 bits per complex scalar")
    return max(2, int(math.floor(2.0 ** (bits_per_scalar / 2) + 1e-9)))


def packed_length(levels: int, n_digits: int) -> int:
    """Bits needed to store ``n_digits`` base-``levels`` digits as one integer."""
    if n_digits == 0:
        return 0
    if levels & (levels - 1) == 0:
        return n_digits * (levels.bit_length() - 1)
    return (levels ** n_digits - 1).bit_length()


def _iroot(x: int, n: int) -> int:
    """Largest integer ``r`` with ``r**n <= x`` (Newton from above)."""
    if x < 2:
        return x
    r = 1 << -(-x.bit_length() // n)
    while True:
        y = ((n - 1) * r + x // r ** (n - 1)) // n
        if y >= r:
            return r
        r = y


def levels_for_budget(total_bits: float, n_digits: int, amortized: bool = False) -> int:
    """Largest cell count whose index stream fits in ``total_bits``.

    By default the indices of one message are packed into a whole number of
    bits, so ``levels**n_digits <= 2**floor(total_bits)``. ``amortized``
    instead charges ``log2(levels)`` per digit, which is what a long stream
    of messages packed back to back costs per message.
    """
    if n_digits == 0:
        return 2
    if amortized:
        return max(2, int(math.floor(2.0 ** ((total_bits + 1e-9) / n_digits))))
    return max(2, _iroot(1 << int(math.floor(total_bits + 1e-9)), n_digits))


def pack(indices: np.ndarray, levels: int) -> str:
    digits = [int(v) for v in np.asarray(indices).ravel()]
    n = packed_length(levels, len(digits))
    if n == 0:
        return ""
    if levels & (levels - 1) == 0:
        width = levels.bit_length() - 1
        return "".join(format(d, f"0{width}b") for d in digits)
    value = 0
    for d in reversed(digits):
        value = value * levels + d
    return format(value, f"0{n}b")


def unpack(bits: str, levels: int, n_digits: int) -> np.ndarray:
    if n_digits == 0:
        return np.zeros(0, dtype=np.int64)
    if levels & (levels - 1) == 0:
        width = levels.bit_length() - 1
        return np.array([int(bits[i * width:(i + 1) * width], 2)
                         for i in range(n_digits)], dtype=np.int64)
    value = int(bits, 2)
    out = np.empty(n_digits, dtype=np.int64)
    for i in range(n_digits):
        value, out[i] = divmod(value, levels)
    return out


def _to_real(s: np.ndarray) -> np.ndarray:
    return np.stack([s.real, s.imag], axis=-1)


def quantize(s, bits_per_scalar: float, P: float, clip: float = CLIP,
             levels: int | None = None, encode: bool = True) -> QuantizedSideInfo:
    """Quantize complex values of per-scalar power about ``P``.

    ``P`` is the power of the values themselves, not the transmit power.

    Real and imaginary parts each get half the bits, over the clip range
    ``[-clip*sqrt(P), clip*sqrt(P)]``. Inputs beyond the range saturate and
    are counted in ``n_clipped``.
    """
    s = np.asarray(s, dtype=np.complex128)
    if levels is None:
        levels = levels_for_bits(bits_per_scalar)
    c = clip * math.sqrt(P)
    idx, rec, n_clipped = kernels.uniform_quantize(_to_real(s), c, int(levels))
    recon = rec[..., 0] + 1j * rec[..., 1]
    bits = pack(idx, levels) if encode else ""
    return QuantizedSideInfo(bits, recon, c, 2 * c / levels, int(levels), n_clipped)


def dequantize(bits: str, shape, levels: int, clip_range: float) -> np.ndarray:
    """Receiver-side reconstruction from the delivered bit string."""
    n = int(np.prod(shape, dtype=np.int64)) * 2
    idx = unpack(bits, levels, n).reshape(*shape, 2)
    step = 2 * clip_range / levels
    rec = -clip_range + (idx + 0.5) * step
    return rec[..., 0] + 1j * rec[..., 1]
