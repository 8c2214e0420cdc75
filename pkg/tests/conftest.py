import numpy as np
import pytest

import monoglot.tensor as T


@pytest.fixture(autouse=True)
def finite_checks():
    """Every forward op in the suite must produce finite values."""
    old = T.CHECK_FINITE
    T.CHECK_FINITE = True
    yield
    T.CHECK_FINITE = old


def finite_difference(f, x, h=1e-3):
    """Central finite-difference gradient of scalar f at float64 array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return np.linalg.norm(a - b) / denom
