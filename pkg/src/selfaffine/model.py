"""IFS model definition, the JSON file format, validation, and the offset law.

An IFS is a list of affine maps ``S_k(x) = A_k x + b_k`` chosen with
probabilities ``p_k``. The invariant measure itself is never materialised;
everything downstream works from the maps and weights.
"""
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ParseError
from .linalg import as_matrix, as_vector, spectral_norm

CONTRACTION_MARGIN = 1e-12
WEIGHT_SUM_TOL = 1e-12
LINEAR_PART_ATOL = 1e-14


def _frozen(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffineMap:
    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        linear = as_matrix(self.linear, "linear", square=True)
        offset = as_vector(self.offset, "offset", dim=linear.shape[0])
        object.__setattr__(self, "linear", _frozen(linear))
        object.__setattr__(self, "offset", _frozen(offset))

    @property
    def dim(self):
        return self.offset.shape[0]

    def __call__(self, x):
        return self.linear @ x + self.offset


@dataclass(frozen=True, eq=False)
class IfsModel:
    """Affine maps plus probability weights; defines the invariant measure.

    Construction checks only structure (shapes, finiteness, matching
    lengths). Contraction and stochasticity are checked by :func:`validate`
    so that a bad model can still be loaded and reported on.
    """

    maps: tuple
    weights: tuple

    def __post_init__(self):
        maps = tuple(m if isinstance(m, AffineMap) else AffineMap(*m) for m in self.maps)
        weights = tuple(float(w) for w in self.weights)
        if not maps:
            raise ValueError("an IFS needs at least one map")
        if len(weights) != len(maps):
            raise ValueError(f"{len(maps)} maps but {len(weights)} weights")
        if not all(math.isfinite(w) for w in weights):
            raise ValueError("weights must be finite")
        d = maps[0].dim
        for k, m in enumerate(maps):
            if m.dim != d:
                raise ValueError(f"map {k} has dimension {m.dim}, expected {d}")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_arrays(cls, linears, offsets, weights):
        return cls(tuple(AffineMap(a, b) for a, b in zip(linears, offsets, strict=True)), tuple(weights))

    @property
    def dim(self):
        return self.maps[0].dim

    @property
    def n_maps(self):
        return len(self.maps)

    @property
    def linears(self):
        return np.stack([m.linear for m in self.maps])

    @property
    def offsets(self):
        return np.stack([m.offset for m in self.maps])

    def with_offsets(self, offsets):
        return IfsModel.from_arrays([m.linear for m in self.maps], offsets, self.weights)

    def to_dict(self):
        return {
            "dim": self.dim,
            "maps": [
                {"A": m.linear.tolist(), "b": m.offset.tolist(), "p": p}
                for m, p in zip(self.maps, self.weights)
            ],
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


# -- parsing -----------------------------------------------------------------

_TOP_KEYS = {"dim", "maps", "weights"}
_MAP_KEYS = {"A", "b", "p"}


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"expected a number, got {type(x).__name__}", field=where)
    if not math.isfinite(x):
        raise ParseError("number is not finite", field=where)
    return float(x)


def _number_list(x, n, where):
    if not isinstance(x, list):
        raise ParseError(f"expected an array of {n} numbers", field=where)
    if len(x) != n:
        raise ParseError(f"expected {n} entries, got {len(x)}", field=where)
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(x)]


def parse_ifs(text):
    """Parse an IFS JSON document into an (unvalidated) :class:`IfsModel`.

    The document is ``{"dim": d, "maps": [{"A": [[...]], "b": [...], "p": w}, ...]}``.
    Weights may instead be given once as a top-level ``"weights"`` array, in
    which case the maps carry no ``"p"``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ParseError(f"unknown key(s) {unknown}", field=unknown[0])
    for key in ("dim", "maps"):
        if key not in doc:
            raise ParseError("missing required key", field=key)

    d = doc["dim"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ParseError("dim must be a positive integer", field="dim")
    raw_maps = doc["maps"]
    if not isinstance(raw_maps, list) or not raw_maps:
        raise ParseError("maps must be a non-empty array", field="maps")

    shared_weights = None
    if "weights" in doc:
        shared_weights = doc["weights"]
        if not isinstance(shared_weights, list):
            raise ParseError("weights must be an array", field="weights")
        if len(shared_weights) != len(raw_maps):
            raise ParseError(
                f"{len(shared_weights)} weights for {len(raw_maps)} maps", field="weights"
            )
        shared_weights = [_number(w, f"weights[{k}]") for k, w in enumerate(shared_weights)]

    maps, weights = [], []
    for k, raw in enumerate(raw_maps):
        where = f"maps[{k}]"
        if not isinstance(raw, dict):
            raise ParseError("each map must be an object", field=where)
        unknown = sorted(set(raw) - _MAP_KEYS)
        if unknown:
            raise ParseError(f"unknown key(s) {unknown}", field=f"{where}.{unknown[0]}")
        required = ("A", "b") if shared_weights is not None else ("A", "b", "p")
        for key in required:
            if key not in raw:
                raise ParseError("missing required key", field=f"{where}.{key}")
        if shared_weights is not None and "p" in raw:
            raise ParseError("weight given both per map and in 'weights'", field=f"{where}.p")

        rows = raw["A"]
        if not isinstance(rows, list) or len(rows) != d:
            raise ParseError(f"A must have {d} rows", field=f"{where}.A")
        linear = [_number_list(row, d, f"{where}.A[{i}]") for i, row in enumerate(rows)]
        offset = _number_list(raw["b"], d, f"{where}.b")
        maps.append(AffineMap(linear, offset))
        weights.append(shared_weights[k] if shared_weights is not None else _number(raw["p"], f"{where}.p"))

    return IfsModel(tuple(maps), tuple(weights))


def load_ifs(path):
    with open(path, encoding="utf-8") as fh:
        return parse_ifs(fh.read())


# -- validation --------------------------------------------------------------

@dataclass
class MapCheck:
    index: int
    norm: float
    passed: bool


@dataclass
class ValidationReport:
    maps: list
    weight_sum: float
    weights_nonnegative: bool
    weight_sum_ok: bool
    norm_kind: str = "spectral"
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = (
            all(c.passed for c in self.maps) and self.weights_nonnegative and self.weight_sum_ok
        )

    def failures(self):
        out = [
            f"map {c.index}: {self.norm_kind} norm {c.norm!r} is not < 1"
            for c in self.maps
            if not c.passed
        ]
        if not self.weights_nonnegative:
            out.append("negative weight")
        if not self.weight_sum_ok:
            out.append(f"weights sum to {self.weight_sum!r}, not 1")
        return out

    def to_dict(self):
        return {
            "passed": self.passed,
            "norm_kind": self.norm_kind,
            "maps": [{"index": c.index, "norm": c.norm, "passed": c.passed} for c in self.maps],
            "norms": [c.norm for c in self.maps],
            "weight_sum": self.weight_sum,
            "weights_nonnegative": self.weights_nonnegative,
            "weight_sum_ok": self.weight_sum_ok,
            "failures": self.failures(),
        }


def validate(m):
    """Check contraction of every map and stochasticity of the weights.

    Never raises; failures are recorded in the returned report.
    """
    checks = []
    for k, amap in enumerate(m.maps):
        norm = spectral_norm(amap.linear)
        checks.append(MapCheck(k, norm, norm < 1.0 - CONTRACTION_MARGIN))
    total = math.fsum(m.weights)
    return ValidationReport(
        maps=checks,
        weight_sum=total,
        weights_nonnegative=all(w >= 0.0 for w in m.weights),
        weight_sum_ok=abs(total - 1.0) <= WEIGHT_SUM_TOL,
    )


# -- the discrete offset variable ------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteStats:
    """Moments of the random offset: ``b_k`` with probability ``p_k``."""

    mean: np.ndarray
    cov: np.ndarray
    second_moment: np.ndarray


def b_stats(m):
    # fsum is exactly rounded, so the result cannot depend on map order
    p = m.weights
    b = m.offsets
    d = m.dim
    mean = np.array([math.fsum(pk * bk[i] for pk, bk in zip(p, b)) for i in range(d)])
    second = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            second[i, j] = second[j, i] = math.fsum(pk * bk[i] * bk[j] for pk, bk in zip(p, b))
    cov = second - np.outer(mean, mean)
    return DiscreteStats(mean=mean, cov=cov, second_moment=second)


def uniform_linear_part(m) -> Optional[np.ndarray]:
    """Shared linear part of all maps, or None if any two differ by more than 1e-14."""
    first = m.maps[0].linear
    for amap in m.maps[1:]:
        if np.max(np.abs(amap.linear - first)) > LINEAR_PART_ATOL:
            return None
    return first.copy()
