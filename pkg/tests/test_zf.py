from fractions import Fraction as F

import numpy as np
import pytest

from dofcast.analysis import SystemConfig
from dofcast.channel import csit_at, gen_block, gen_rational_block, view_during
from dofcast.errors import CausalityError, DomainError
from dofcast.schemes.zf import common_rate, single_user_rate, zf_precoders, zf_rates, zf_transmit

from oracle import determined_values


@pytest.mark.parametrize("K,N", [(2, 1), (3, 2), (4, 1)])
def test_cross_talk_vanishes(K, N):
    cfg = SystemConfig(K, N, 0, 0)
    blk = gen_block(5, 0, cfg)
    V = zf_precoders(blk.h)
    for k in range(K):
        own = np.linalg.norm(blk.h[k] @ V[k])
        for j in range(K):
            if j != k:
                assert np.linalg.norm(blk.h[j] @ V[k]) <= 1e-9 * own


def test_transmit_needs_current_csi():
    cfg = SystemConfig(2, 1, F(1, 2), 0)
    blk = gen_block(1, 0, cfg)
    s = np.ones((2, 1))
    x = zf_transmit(s, csit_at(1, cfg.gamma, 2), blk, P=2.0)
    V = zf_precoders(blk.h)
    assert np.allclose(blk.h[0] @ x, blk.h[0] @ V[0] @ s[0])
    with pytest.raises(CausalityError):
        zf_transmit(s, csit_at(0, cfg.gamma, 2), blk)
    with pytest.raises(DomainError):
        zf_transmit(np.ones((2, 2)), view_during(0), blk)


def test_exact_zf_decodes():
    cfg = SystemConfig(3, 2, 0, 0)
    blk = gen_rational_block(4, 0, cfg)
    s = np.array([[F(i * 2 + r + 1) for r in range(2)] for i in range(3)], dtype=object)
    x = zf_transmit(s, view_during(0), blk)
    V = zf_precoders(blk.h)
    for k in range(3):
        y = blk.h[k] @ x
        # oracle: user k's outputs as equations in all 6 streams
        rows = [[v for j in range(3) for v in (blk.h[k] @ V[j])[r]] for r in range(2)]
        assert determined_values(rows, list(y), [2 * k, 2 * k + 1]) == list(s[k])


def test_rates():
    rng = np.random.default_rng(0)
    h = (rng.standard_normal((2000, 2, 1, 2)) + 1j * rng.standard_normal((2000, 2, 1, 2))) / np.sqrt(2)
    r = [zf_rates(h, P).mean(axis=0) for P in (1e5, 1e7)]
    assert np.allclose((r[1] - r[0]) / np.log2(100), 1, atol=0.03)
    su = [single_user_rate(h[:, 0], P).mean() for P in (1e5, 1e7)]
    assert (su[1] - su[0]) / np.log2(100) == pytest.approx(1, abs=0.03)
    assert np.all(common_rate(h, 1e3) <= single_user_rate(h[:, 0], 1e3) + 1e-12)


def test_needs_enough_antennas():
    with pytest.raises(DomainError):
        zf_precoders(np.ones((2, 1, 1)))
