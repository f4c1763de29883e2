"""Central finite-difference gradient oracle shared by the test modules.

Kept independent of the autodiff engine's backward machinery: it only calls
the forward path, perturbing raw numpy buffers one element at a time.
"""

import numpy as np

from denselabel.autodiff import Tensor

H = 1e-4
REL_TOL = 1e-4


def numeric_grad(fn, arrays, wrt, h=H):
    """d fn / d arrays[wrt] by central differences on float64 copies.

    ``fn`` maps a list of ndarrays to a float. Returns an array shaped like
    ``arrays[wrt]``.
    """
    arrays = [np.asarray(a, dtype=np.float64).copy() for a in arrays]
    target = arrays[wrt]
    grad = np.zeros_like(target)
    flat = target.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = fn(arrays)
        flat[i] = orig - h
        down = fn(arrays)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def rel_error(a, b):
    """Scale-normalized distance between two gradient arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-8)
    return np.linalg.norm(a - b) / denom


def check_gradients(build_loss, arrays, h=H, tol=REL_TOL):
    """Compare analytic and numeric gradients for every input array.

    ``build_loss`` maps a list of Tensors to a scalar Tensor. All inputs are
    promoted to float64 and marked as requiring gradients. Returns the worst
    relative error observed.
    """
    tensors = [Tensor(np.asarray(a, dtype=np.float64), requires_grad=True) for a in arrays]
    loss = build_loss(tensors)
    loss.backward()

    def forward_only(raw):
        return float(build_loss([Tensor(r) for r in raw]).data)

    worst = 0.0
    for i, t in enumerate(tensors):
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        numeric = numeric_grad(forward_only, [t.data for t in tensors], i, h=h)
        err = rel_error(analytic, numeric)
        worst = max(worst, err)
        assert err < tol, f"gradient mismatch on input {i}: rel err {err:.3e} >= {tol}"
    return worst
