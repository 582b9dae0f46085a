"""Compare the compiled kernels against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dofcast import _kernels_py

try:
    from dofcast import _kernels
except ImportError:  # extension not built
    _kernels = None


def _hpd_batch(rng, n, dim):
    a = rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))
    return np.eye(dim) + a @ np.conj(np.swapaxes(a, -1, -2))


def cases(rng):
    yield "logdet_hpd 20000x2x2", "logdet_hpd", (_hpd_batch(rng, 20000, 2),)
    yield "logdet_hpd 20000x6x6", "logdet_hpd", (_hpd_batch(rng, 20000, 6),)
    vals = rng.standard_normal((200000, 2)) * 100.0
    yield "uniform_quantize 400k reals", "uniform_quantize", (vals, 400.0, 4096)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<30} {'python ms':>10} {'cython ms':>10} {'speedup':>8}  agree")
    for name, fn, fargs in cases(rng):
        py = getattr(_kernels_py, fn)
        t_py = min(timeit.repeat(lambda: py(*fargs), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:<30} {t_py:>10.2f} {'n/a':>10} {'':>8}  extension not built")
            continue
        cy = getattr(_kernels, fn)
        t_cy = min(timeit.repeat(lambda: cy(*fargs), number=1, repeat=args.repeat)) * 1e3
        a, b = py(*fargs), cy(*fargs)
        if isinstance(a, tuple):
            agree = all(np.allclose(x, y) for x, y in zip(a, b))
        else:
            agree = np.allclose(a, b)
        print(f"{name:<30} {t_py:>10.2f} {t_cy:>10.2f} {t_py / t_cy:>7.2f}x  {agree}")


if __name__ == "__main__":
    main()
