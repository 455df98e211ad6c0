"""Dense real linear-algebra kernels used by the moment solvers.

Matrices and vectors are plain float64 numpy arrays; ``as_matrix`` and
``as_vector`` are the validation entry points. Only elementwise numpy
arithmetic is used here so the elimination and norm routines stay
self-contained.
"""
import numpy as np

from .exceptions import SingularSystem

PIVOT_RTOL = 1e-14
NORM_RTOL = 1e-12
NORM_MAX_ITER = 10_000


def as_matrix(m, name="matrix", square=False):
    """Validate and return ``m`` as a finite 2-D float64 array (a copy)."""
    arr = np.array(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def as_vector(v, name="vector", dim=None):
    arr = np.array(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} must have {dim} entries, got {arr.shape[0]}")
    return arr


def kron(a, b):
    """Kronecker product: block (i, j) of the result is ``a[i, j] * b``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    m, n = a.shape
    p, q = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(m * p, n * q)


def vec(m):
    """Stack the columns of a square matrix, column 0 first.

    With this ordering ``vec(A @ M @ A.T) == kron(A, A) @ vec(M)``.
    """
    m = as_matrix(m, "m", square=True)
    return m.reshape(-1, order="F")


def unvec(v, d):
    v = as_vector(v, "v")
    if v.shape[0] != d * d:
        raise ValueError(f"vector of length {v.shape[0]} cannot be unvec'd to {d}x{d}")
    return v.reshape((d, d), order="F")


def solve(m, rhs):
    """Solve ``m @ x = rhs`` by Gaussian elimination with partial pivoting.

    Raises SingularSystem when the chosen pivot is smaller than
    ``PIVOT_RTOL`` times the largest magnitude its row had on entry.
    """
    a = as_matrix(m, "m", square=True)
    n = a.shape[0]
    x = as_vector(rhs, "rhs", dim=n)
    scale = np.max(np.abs(a), axis=1)

    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if not abs(a[p, k]) > PIVOT_RTOL * scale[p] or scale[p] == 0.0:
            raise SingularSystem(f"pivot {a[p, k]:.3e} in column {k} is negligible")
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
            scale[[k, p]] = scale[[p, k]]
        if k + 1 < n:
            factors = a[k + 1:, k] / a[k, k]
            a[k + 1:, k:] -= np.outer(factors, a[k, k:])
            x[k + 1:] -= factors * x[k]

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def residual_inf(m, x, rhs):
    return float(np.max(np.abs(np.asarray(m) @ np.asarray(x) - np.asarray(rhs))))


def _power_iterate(gram, v):
    lam = 0.0
    for _ in range(NORM_MAX_ITER):
        w = gram @ v
        norm_w = np.sqrt(w @ w)
        if norm_w == 0.0:
            return lam, False
        v = w / norm_w
        lam_new = float(v @ (gram @ v))
        if abs(lam_new - lam) < NORM_RTOL * abs(lam_new):
            return lam_new, True
        lam = lam_new
    return lam, False


def spectral_norm(m):
    """Largest singular value of a square matrix, by power iteration on m^T m."""
    m = as_matrix(m, "m", square=True)
    gram = m.T @ m
    if not np.any(gram):
        return 0.0
    d = m.shape[0]
    lam, converged = _power_iterate(gram, np.full(d, 1.0 / np.sqrt(d)))
    if not converged:
        # all-ones start can be orthogonal to the top singular vector
        v = np.random.default_rng(0).standard_normal(d)
        lam2, _ = _power_iterate(gram, v / np.sqrt(v @ v))
        lam = max(lam, lam2)
    return float(np.sqrt(max(lam, 0.0)))
