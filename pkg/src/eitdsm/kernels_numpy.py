"""Pure numpy implementations of the performance-critical kernels.

The compiled extension ``eitdsm._kernels`` provides the same three entry
points with identical semantics; ``eitdsm.backend`` picks one set at import
time.  Keep the two in sync: tests compare them on random inputs.

Array layout: interior fields are (n2, n1) C-contiguous float64, row j is the
line of constant x2.  ``cx`` holds conductances of faces between horizontal
neighbours, shape (n2, n1-1); ``cy`` between vertical neighbours, shape
(n2-1, n1).
"""

import numpy as np


def fv_matvec(cx, cy, u):
    """Apply the five-point flux operator u -> sum_faces c*(u_i - u_nbr)."""
    out = np.zeros_like(u)
    t = cx * (u[:, :-1] - u[:, 1:])
    out[:, :-1] += t
    out[:, 1:] -= t
    t = cy * (u[:-1, :] - u[1:, :])
    out[:-1, :] += t
    out[1:, :] -= t
    return out


def cg_solve(cx, cy, b, inv_diag, active, tol, max_iter):
    """Jacobi-preconditioned conjugate gradients for the flux operator.

    b must already be projected onto mean zero over the active nodes;
    inv_diag is 1/diag(A) on active nodes and 0 elsewhere.  Returns
    (x, iterations, relative_residual); x is NOT re-centered (the caller owns
    the gauge).  The residual is re-projected every 128 iterations to shed
    rounding drift along the constant null vector.
    """
    n_active = float(active.sum())
    b_norm = float(np.sqrt((b * b).sum()))
    x = np.zeros_like(b)
    if b_norm == 0.0:
        return x, 0, 0.0
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float((r * z).sum())
    rel = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        ap = fv_matvec(cx, cy, p)
        pap = float((p * ap).sum())
        if pap <= 0.0:
            # operator lost positivity on the search direction: bail out and
            # let the caller report the residual
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        if it % 128 == 0:
            r -= active * (float((r * active).sum()) / n_active)
        rel = float(np.sqrt((r * r).sum())) / b_norm
        if rel <= tol:
            break
        z = inv_diag * r
        rz_new = float((r * z).sum())
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    return x, it, rel


def maxpool2_fwd(x):
    """2x2 non-overlapping max over (B, H, W, C); returns (y, argmax in 0..3).

    The argmax index is row-major within the 2x2 window; ties take the first
    position, which keeps the backward routing deterministic.
    """
    b, h, w, c = x.shape
    x4 = (
        x.reshape(b, h // 2, 2, w // 2, 2, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(b, h // 2, w // 2, c, 4)
    )
    arg = x4.argmax(axis=4).astype(np.int32)
    y = np.take_along_axis(x4, arg[..., None].astype(np.intp), axis=4)[..., 0]
    return np.ascontiguousarray(y), arg


def maxpool2_bwd(gy, arg):
    """Scatter pooled gradients back to the argmax positions."""
    b, hh, wh, c = gy.shape
    g4 = np.zeros((b, hh, wh, c, 4), dtype=gy.dtype)
    np.put_along_axis(g4, arg[..., None].astype(np.intp), gy[..., None], axis=4)
    gx = (
        g4.reshape(b, hh, wh, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(b, 2 * hh, 2 * wh, c)
    )
    return np.ascontiguousarray(gx)
