"""Pure numpy versions of the compiled kernels (same contracts)."""
import numpy as np


def logdet_hpd(a):
    a = np.asarray(a, dtype=np.complex128)
    chol = np.linalg.cholesky(a)
    diag = np.real(np.diagonal(chol, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log2(diag), axis=-1)


def uniform_quantize(values, clip, levels):
    v = np.asarray(values, dtype=np.float64)
    step = 2.0 * clip / levels
    idx = np.clip(np.floor((v + clip) / step), 0, levels - 1).astype(np.int64)
    rec = -clip + (idx + 0.5) * step
    return idx, rec, int(np.count_nonzero(np.abs(v) > clip))
