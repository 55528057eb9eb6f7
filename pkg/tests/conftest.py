import numpy as np

from andkit.memory import FeatureBank
from andkit.numerics import SeededRng, l2_normalize_rows


def finite_difference(f, x, step=1e-6):
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xp[idx] += step
        xm = x.copy()
        xm[idx] -= step
        grad[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return grad


def max_rel_error(analytic, numeric):
    """Elementwise |a - n| / max(1, |a|, |n|), reduced to the worst entry."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))


def random_unit(d, seed):
    v = SeededRng(seed).normals(d)
    return v / np.linalg.norm(v)


def random_bank(n, d, seed, eta=0.5):
    return FeatureBank(features=l2_normalize_rows(SeededRng(seed).normals((n, d))), eta=eta)
