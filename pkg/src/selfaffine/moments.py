"""Exact first and second moments of self-affine measures.

Integrating ``x`` and ``x x^T`` against the invariance identity gives two
linear systems. For the mean::

    (I - sum_k p_k A_k) EX = sum_k p_k b_k

and for the second-moment matrix ``S = E[X X^T]`` (vectorized column-major)::

    (I - sum_k p_k A_k (x) A_k) vec(S)
        = vec(sum_k p_k [b_k (A_k EX)^T + (A_k EX) b_k^T + b_k b_k^T])

When every map shares the linear part ``A`` the covariance obeys the
discrete Lyapunov equation ``C - A C A^T = Cov(B)`` directly, where ``B`` is
the offset drawn with the map weights. ``covariance_by_iteration`` reaches
the same numbers by pushing moments forward until they stop moving; it
shares no code with the solvers and serves as their oracle.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import linalg
from .exceptions import IndexOutOfRange, InvalidModel, NoConvergence, PreconditionError
from .model import CONTRACTION_MARGIN, b_stats, uniform_linear_part, validate

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
PSD_TOL = 1e-9


class Path(str, Enum):
    EQUAL_LINEAR = "EqualLinearFastPath"
    GENERAL = "GeneralKroneckerPath"
    ITERATION = "FixedPointIteration"


@dataclass(frozen=True, eq=False)
class MomentReport:
    mean: np.ndarray
    second_moment: np.ndarray
    cov: np.ndarray
    path: Path
    residual: float
    iterations: Optional[int] = None

    @property
    def min_eigenvalue(self):
        return float(np.min(np.linalg.eigvalsh(self.cov)))

    @property
    def is_psd(self):
        return self.min_eigenvalue >= -PSD_TOL

    def to_dict(self):
        return {
            "path": self.path.value,
            "mean": self.mean.tolist(),
            "second_moment": self.second_moment.tolist(),
            "cov": self.cov.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            mean=np.asarray(doc["mean"], dtype=float),
            second_moment=np.asarray(doc["second_moment"], dtype=float),
            cov=np.asarray(doc["cov"], dtype=float),
            path=Path(doc["path"]),
            residual=float(doc["residual"]),
            iterations=doc.get("iterations"),
        )


def _symmetrize(s):
    return 0.5 * (s + s.T)


def _require_valid(m):
    report = validate(m)
    if not report.passed:
        raise InvalidModel(report)


def _mean(m):
    d = m.dim
    system = np.eye(d) - np.einsum("k,kij->ij", np.asarray(m.weights), m.linears)
    rhs = b_stats(m).mean
    ex = linalg.solve(system, rhs)
    return ex, linalg.residual_inf(system, ex, rhs)


def _second_moment(m, ex):
    d = m.dim
    system = np.eye(d * d)
    rhs = np.zeros((d, d))
    for amap, p in zip(m.maps, m.weights):
        system -= p * linalg.kron(amap.linear, amap.linear)
        a_ex = amap.linear @ ex
        b = amap.offset
        rhs += p * (np.outer(b, a_ex) + np.outer(a_ex, b) + np.outer(b, b))
    rhs_vec = linalg.vec(rhs)
    sol = linalg.solve(system, rhs_vec)
    return _symmetrize(linalg.unvec(sol, d)), linalg.residual_inf(system, sol, rhs_vec)


def _lyapunov(a, b_cov):
    d = a.shape[0]
    system = np.eye(d * d) - linalg.kron(a, a)
    rhs_vec = linalg.vec(b_cov)
    sol = linalg.solve(system, rhs_vec)
    return _symmetrize(linalg.unvec(sol, d)), linalg.residual_inf(system, sol, rhs_vec)


def mean(m):
    """Exact mean of the invariant measure."""
    _require_valid(m)
    return _mean(m)[0]


def second_moment(m):
    """Exact ``E[X X^T]``; entry (i, j) is ``E[x_i x_j]``."""
    _require_valid(m)
    ex, _ = _mean(m)
    return _second_moment(m, ex)[0]


def covariance_equal_linear(a, b_cov):
    """Covariance for maps sharing linear part ``a``, given the offset covariance.

    Solves ``(I - a (x) a) vec(C) = vec(b_cov)``, i.e. ``C - a C a^T = b_cov``.
    """
    a = linalg.as_matrix(a, "a", square=True)
    b_cov = linalg.as_matrix(b_cov, "b_cov", square=True)
    if b_cov.shape != a.shape:
        raise ValueError(f"b_cov shape {b_cov.shape} does not match a {a.shape}")
    if linalg.spectral_norm(a) >= 1.0 - CONTRACTION_MARGIN:
        raise PreconditionError("a is not a contraction")
    return _lyapunov(a, b_cov)[0]


def covariance(m, path="auto"):
    """Exact mean, second moment and covariance.

    ``path`` is ``"auto"`` (fast path whenever all linear parts agree),
    ``"fast"`` or ``"general"``. Asking for ``"fast"`` on a model with
    differing linear parts raises PreconditionError.
    """
    if path not in ("auto", "fast", "general"):
        raise ValueError(f"unknown path {path!r}")
    _require_valid(m)
    a = uniform_linear_part(m) if path != "general" else None
    if path == "fast" and a is None:
        raise PreconditionError("fast path needs all maps to share one linear part")

    ex, r_mean = _mean(m)
    if a is not None:
        cov, r_cov = _lyapunov(a, b_stats(m).cov)
        return MomentReport(
            mean=ex,
            second_moment=cov + np.outer(ex, ex),
            cov=cov,
            path=Path.EQUAL_LINEAR,
            residual=max(r_mean, r_cov),
        )
    second, r_second = _second_moment(m, ex)
    return MomentReport(
        mean=ex,
        second_moment=second,
        cov=second - np.outer(ex, ex),
        path=Path.GENERAL,
        residual=max(r_mean, r_second),
    )


def covariance_by_iteration(m, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Moments by fixed-point iteration of the moment pushforward.

    Starting from zero, applies
    ``mean <- sum p_k (A_k mean + b_k)`` and
    ``S <- sum p_k (A_k S A_k^T + (A_k mean) b_k^T + b_k (A_k mean)^T + b_k b_k^T)``
    until neither changes by ``tol`` or more in the max norm.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    _require_valid(m)
    p = np.asarray(m.weights)
    a = m.linears
    b = m.offsets
    bb = np.einsum("k,ki,kj->ij", p, b, b)
    d = m.dim

    ex = np.zeros(d)
    s = np.zeros((d, d))
    delta = np.inf
    for it in range(1, max_iter + 1):
        a_ex = np.einsum("kij,j->ki", a, ex)
        cross = np.einsum("k,ki,kj->ij", p, a_ex, b)
        ex_new = p @ (a_ex + b)
        s_new = np.einsum("k,kia,ab,kjb->ij", p, a, s, a) + cross + cross.T + bb
        delta = max(np.max(np.abs(ex_new - ex)), np.max(np.abs(s_new - s)))
        ex, s = ex_new, s_new
        if delta < tol:
            break
    else:
        s = _symmetrize(s)
        partial = MomentReport(ex, s, s - np.outer(ex, ex), Path.ITERATION, float(delta), max_iter)
        raise NoConvergence(
            f"no convergence after {max_iter} iterations (last step {delta:.3e})", partial
        )
    s = _symmetrize(s)
    return MomentReport(
        mean=ex,
        second_moment=s,
        cov=s - np.outer(ex, ex),
        path=Path.ITERATION,
        residual=float(delta),
        iterations=it,
    )


@dataclass(frozen=True)
class UncorrelatedResult:
    cov_x_ij: float
    cov_b_ij: float
    x_uncorrelated: bool
    b_uncorrelated: bool
    corollary_applicable: bool

    def to_dict(self):
        return dict(self.__dict__)


def uncorrelated_test(m, i, j, tol=1e-10):
    """Compare correlation of coordinates ``i``, ``j`` under the measure and under the offsets.

    With a shared diagonal linear part the two are uncorrelated together or
    not at all; ``corollary_applicable`` says whether that holds for ``m``.
    """
    d = m.dim
    for idx in (i, j):
        if not 0 <= idx < d:
            raise IndexOutOfRange(f"coordinate {idx} out of range for dimension {d}")
    cov_x = float(covariance(m).cov[i, j])
    cov_b = float(b_stats(m).cov[i, j])
    a = uniform_linear_part(m)
    diagonal = a is not None and np.max(np.abs(a - np.diag(np.diag(a))), initial=0.0) <= 1e-14
    return UncorrelatedResult(
        cov_x_ij=cov_x,
        cov_b_ij=cov_b,
        x_uncorrelated=abs(cov_x) < tol,
        b_uncorrelated=abs(cov_b) < tol,
        corollary_applicable=bool(diagonal),
    )

