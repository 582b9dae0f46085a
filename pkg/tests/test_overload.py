from fractions import Fraction as F

import numpy as np
import pytest

from dofcast.analysis import SystemConfig
from dofcast.channel import gen_block, gen_rational_block, view_after, view_during, csit_at
from dofcast.errors import CausalityError, DomainError
from dofcast.schemes.overload import (IllConditioned, compute_side_info, effective_noise,
                                      overload_encode, overload_rates, side_info_from_h,
                                      side_info_pairs, stacked_decode, stacked_matrix)

from oracle import determined_values


def _rational(rng, shape):
    a = np.empty(shape, dtype=object)
    for ix in np.ndindex(shape):
        a[ix] = F(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
    return a


def test_encode_two_users():
    a = np.array([1 + 1j, 2])
    b = np.array([3, -1j])
    assert np.allclose(overload_encode(np.stack([a, b]), 2), a + b)
    assert np.allclose(overload_encode(np.stack([a, b]), 2, P=4.0), (a + b) * np.sqrt(4 / 4))
    assert np.allclose(overload_encode(np.zeros((2, 2)), 2), 0)


def test_encode_three_users_pads_and_scales():
    rng = np.random.default_rng(0)
    s = rng.standard_normal((3, 6))
    x = overload_encode(s, 8, P=18.0)
    assert x.shape == (8,)
    assert np.allclose(x[:6], s.sum(axis=0)) and np.allclose(x[6:], 0)


def test_encode_rejects_bad_counts():
    with pytest.raises(DomainError):
        overload_encode(np.zeros((2, 3)), 4)
    with pytest.raises(DomainError):
        overload_encode(np.zeros((2, 4)), 3)
    with pytest.raises(DomainError):
        overload_encode(np.zeros(4), 4)


def test_side_info_two_users():
    h = np.array([[[1.0, 0.0]], [[0.5, 2.0]]])  # h_1 = e_1
    a, b = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    s = side_info_from_h(h, np.stack([a, b]))
    assert s[(0, 1)] == pytest.approx([3.0])     # s_1 = h_1 . b = b1
    assert s[(1, 0)] == pytest.approx([4.5])     # s_2 = h_2 . a
    zero_b = side_info_from_h(h, np.stack([a, 0 * b]))
    assert zero_b[(0, 1)] == pytest.approx([0.0])


def test_side_info_three_users_count_and_causality():
    cfg = SystemConfig(3, 2, 1, 12)
    blk = gen_block(1, 0, cfg)
    syms = np.ones((3, 6))
    s = compute_side_info(view_after(0), blk, syms)
    assert s.values.shape == (6, 2) and len(side_info_pairs(3)) == 6
    with pytest.raises(CausalityError):
        compute_side_info(csit_at(0, F(1), 1), blk, syms)
    cancel, extra = s.for_user(1)
    assert cancel == [(1, 0), (1, 2)] and extra == [(0, 1), (2, 1)]


@pytest.mark.parametrize("K,N", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_exact_decode_matches_oracle(K, N):
    cfg = SystemConfig(K, N, 1, K * (K - 1) * N)
    rng = np.random.default_rng(K * 10 + N)
    for trial in range(2):
        h = gen_rational_block(trial + 11, trial, cfg).h
        syms = _rational(rng, (K, K * N))
        x = overload_encode(syms, cfg.M)
        side = side_info_from_h(h, syms)
        for k in range(K):
            y = h[k] @ x
            est, rate = stacked_decode(y, k, side, h)
            assert rate is None
            assert list(est) == list(syms[k])
            # oracle: everything user k sees, as equations in all K*K*N symbols
            rows, rhs = [], []
            n = K * N
            for r in range(N):
                rows.append([h[k][r][m] for _ in range(K) for m in range(n)])
                rhs.append(y[r])
            for (i, j), val in zip(side.pairs, side.values):
                for r in range(N):
                    row = [F(0)] * (K * n)
                    for m in range(n):
                        row[j * n + m] = h[i][r][m]
                    rows.append(row)
                    rhs.append(val[r])
            idx = list(range(k * n, (k + 1) * n))
            assert determined_values(rows, rhs, idx) == list(syms[k])


def test_float_decode_and_rate():
    cfg = SystemConfig(2, 1, 1, 2)
    blk = gen_block(3, 0, cfg)
    rng = np.random.default_rng(1)
    syms = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    P = 1e6
    x = overload_encode(syms, 2, P)
    side = side_info_from_h(blk.h, syms, P)
    est, rate = stacked_decode(blk.h[0] @ x, 0, side, blk.h, P)
    assert np.allclose(est, syms[0])
    G = stacked_matrix(blk.h, 0)
    ref = np.log2(np.linalg.det(np.eye(2) + P / 4 * G @ G.conj().T).real)
    assert rate == pytest.approx(ref)


def test_rate_slope_with_exact_side_info():
    rng = np.random.default_rng(2)
    h = (rng.standard_normal((4000, 2, 1, 2)) + 1j * rng.standard_normal((4000, 2, 1, 2))) / np.sqrt(2)
    r = [overload_rates(h, P / 4).mean(axis=0) for P in (1e5, 1e7)]
    slope = (r[1] - r[0]) / np.log2(100)
    assert np.allclose(slope, 2, atol=0.05)


def test_uncancelled_interference_caps_slope():
    # without side info a user sees its own symbols buried in the other user's
    rng = np.random.default_rng(3)
    h = (rng.standard_normal((4000, 2, 1, 2)) + 1j * rng.standard_normal((4000, 2, 1, 2))) / np.sqrt(2)
    rates = []
    for P in (1e5, 1e7):
        own = np.abs(h[:, 0, 0, :]) ** 2
        total = np.log2(1 + P / 4 * 2 * own.sum(axis=1))
        rates.append(total.mean())
    assert (rates[1] - rates[0]) / np.log2(100) <= 1.05


def test_effective_noise_layout():
    qv = np.arange(2 * 2 * 1, dtype=float).reshape(2, 2, 1)
    sig = effective_noise(qv, 0, 2, 1)
    assert sig.tolist() == [1 + qv[0, 1, 0], qv[1, 0, 0]]


def test_condition_guard():
    h = np.array([[[1.0, 1.0]], [[1.0, 1.0 + 1e-12]]])
    side = side_info_from_h(h, np.ones((2, 2)))
    with pytest.raises(IllConditioned):
        stacked_decode(np.zeros(1), 0, side, h, P=10.0)
