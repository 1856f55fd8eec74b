import numpy as np
import pytest

from eitdsm import backend, kernels_numpy

try:
    from eitdsm import _kernels
except ImportError:
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def test_backend_selected():
    assert backend.name in ("numpy", "cython")
    for fn in ("cg_solve", "fv_matvec", "maxpool2_fwd", "maxpool2_bwd"):
        assert callable(getattr(backend, fn))


@needs_ext
def test_fv_matvec_parity(rng):
    n1, n2 = 13, 9
    cx = rng.uniform(0.5, 2.0, size=(n2, n1 - 1))
    cy = rng.uniform(0.5, 2.0, size=(n2 - 1, n1))
    u = rng.normal(size=(n2, n1))
    a = kernels_numpy.fv_matvec(cx, cy, u)
    b = _kernels.fv_matvec(cx, cy, u)
    np.testing.assert_allclose(a, b, atol=1e-13)


@needs_ext
def test_cg_solve_parity(rng):
    n1 = n2 = 9
    cx = rng.uniform(0.5, 2.0, size=(n2, n1 - 1))
    cy = rng.uniform(0.5, 2.0, size=(n2 - 1, n1))
    diag = np.zeros((n2, n1))
    diag[:, :-1] += cx
    diag[:, 1:] += cx
    diag[:-1, :] += cy
    diag[1:, :] += cy
    inv_diag = 1.0 / diag
    active = np.ones((n2, n1))
    b = rng.normal(size=(n2, n1))
    b -= b.mean()
    b = np.ascontiguousarray(b)
    xa, ia, ra = kernels_numpy.cg_solve(cx, cy, b, inv_diag, active, 1e-11, 2000)
    xb, ib, rb = _kernels.cg_solve(cx, cy, b, inv_diag, active, 1e-11, 2000)
    assert ra <= 1e-11 and rb <= 1e-11
    # both backends solve the same SPD system; solutions agree to solver tol
    np.testing.assert_allclose(xa, xb, atol=1e-8)


@needs_ext
def test_maxpool_parity(rng):
    x = np.ascontiguousarray(rng.normal(size=(2, 6, 8, 3)))
    ya, aa = kernels_numpy.maxpool2_fwd(x)
    yb, ab = _kernels.maxpool2_fwd(x)
    np.testing.assert_array_equal(ya, yb)
    np.testing.assert_array_equal(aa, ab)
    gy = np.ascontiguousarray(rng.normal(size=ya.shape))
    ga = kernels_numpy.maxpool2_bwd(gy, aa)
    gb = _kernels.maxpool2_bwd(gy, ab)
    np.testing.assert_array_equal(ga, gb)


@needs_ext
def test_maxpool_tie_parity():
    # equal values inside a window must route to the same argmax in both
    x = np.zeros((1, 4, 4, 1))
    _, aa = kernels_numpy.maxpool2_fwd(x)
    _, ab = _kernels.maxpool2_fwd(x)
    np.testing.assert_array_equal(aa, ab)
