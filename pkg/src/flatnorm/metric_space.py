"""Point domains, distances, set distances and metric combinators.

Points are plain Python values:

* ``euclidean(1)`` and ``unit_interval``: floats,
* ``euclidean(n)`` for ``n >= 2``: tuples of floats,
* ``discrete_naturals``: nonnegative ints,
* ``matrix``: integer indices into the label table (labels are accepted on
  input and translated).

Every space also works on batches: :meth:`MetricSpace.as_array` turns a list
of points into an ndarray (shape ``(N,)`` or ``(N, dim)``) and
:meth:`MetricSpace.pairwise` / :meth:`MetricSpace.dist_to` operate on those.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np

POINT_TOL = 1e-12

KINDS = ("euclidean", "unit_interval", "discrete_naturals", "matrix")


class SpaceError(ValueError):
    """Invalid point, space description or space mismatch."""


@dataclass(frozen=True, eq=False)
class MetricSpace:
    kind: str
    dim: int = 1
    labels: tuple = ()
    distances: tuple = ()
    # combinator wrappers: d(x, y) = max(base, join(x, y), |augment(x) - augment(y)|)
    join_with: MetricSpace | None = None
    augment: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    tol: float = POINT_TOL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpaceError(f"unknown space kind {self.kind!r}")
        if self.kind == "euclidean" and (int(self.dim) != self.dim or self.dim < 1):
            raise SpaceError(f"euclidean dimension must be a positive integer, got {self.dim}")
        if self.kind == "matrix":
            d = np.asarray(self.distances, dtype=float)
            n = len(self.labels)
            if d.shape != (n, n):
                raise SpaceError(f"distance matrix shape {d.shape} does not match {n} labels")
        if self.kind != "euclidean" and self.kind != "matrix" and self.dim != 1:
            raise SpaceError(f"{self.kind} is one-dimensional")

    # -- constructors -------------------------------------------------------

    @classmethod
    def euclidean(cls, dim: int = 1) -> MetricSpace:
        return cls("euclidean", dim=dim)

    @classmethod
    def unit_interval(cls) -> MetricSpace:
        return cls("unit_interval")

    @classmethod
    def naturals(cls) -> MetricSpace:
        return cls("discrete_naturals")

    @classmethod
    def from_matrix(cls, distances, labels: Sequence | None = None) -> MetricSpace:
        d = np.asarray(distances, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise SpaceError("distance matrix must be square")
        if labels is None:
            labels = range(d.shape[0])
        return cls("matrix", labels=tuple(labels), distances=tuple(map(tuple, d.tolist())))

    # -- structure ------------------------------------------------------------

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.array(self.distances, dtype=float)
        m.setflags(write=False)
        return m

    @property
    def is_coordinate(self) -> bool:
        return self.kind in ("euclidean", "unit_interval")

    @property
    def is_scalar(self) -> bool:
        """Points are plain numbers (not tuples)."""
        return self.kind != "euclidean" or self.dim == 1

    @property
    def base(self) -> MetricSpace:
        """The underlying point domain with combinators stripped."""
        if self.join_with is None and self.augment is None:
            return self
        return MetricSpace(self.kind, self.dim, self.labels, self.distances, tol=self.tol)

    def same_domain(self, other: MetricSpace) -> bool:
        a, b = self.base, other.base
        if a.kind != b.kind or a.dim != b.dim:
            return False
        if a.kind == "matrix":
            return a.labels == b.labels
        return True

    def __eq__(self, other):
        if not isinstance(other, MetricSpace):
            return NotImplemented
        return (
            self.same_domain(other)
            and self.distances == other.distances
            and self.join_with == other.join_with
            and self.augment is other.augment
        )

    def __hash__(self):
        return hash((self.kind, self.dim, self.labels))

    def describe(self) -> dict:
        """JSON description of the base domain."""
        if self.kind == "euclidean":
            return {"kind": "euclidean", "dim": self.dim}
        if self.kind == "matrix":
            return {"kind": "matrix", "points": list(self.labels),
                    "distances": [list(r) for r in self.distances]}
        return {"kind": self.kind}

    # -- points ---------------------------------------------------------------

    def point(self, x: Any):
        """Validate ``x`` and return its canonical form."""
        if self.kind == "matrix":
            if isinstance(x, (bool, np.bool_)):
                raise SpaceError(f"invalid matrix point {x!r}")
            if isinstance(x, (int, np.integer)):
                if not 0 <= x < len(self.labels):
                    raise SpaceError(f"point index {x} out of range for {len(self.labels)} points")
                return int(x)
            if x in self.labels:
                return self.labels.index(x)
            raise SpaceError(f"unknown point label {x!r}")
        if self.kind == "discrete_naturals":
            if isinstance(x, (float, np.floating)) and float(x).is_integer():
                x = int(x)
            if not isinstance(x, (int, np.integer)) or isinstance(x, bool) or x < 0:
                raise SpaceError(f"{x!r} is not a natural number")
            return int(x)
        if self.is_scalar:
            if isinstance(x, (list, tuple, np.ndarray)):
                if len(x) != 1:
                    raise SpaceError(f"dimension mismatch: expected 1 coordinate, got {len(x)}")
                x = x[0]
            x = float(x)
            if self.kind == "unit_interval" and not -self.tol <= x <= 1 + self.tol:
                raise SpaceError(f"{x} lies outside [0, 1]")
            return x
        coords = tuple(float(c) for c in np.ravel(x))
        if len(coords) != self.dim:
            raise SpaceError(f"dimension mismatch: expected {self.dim} coordinates, got {len(coords)}")
        return coords

    def as_array(self, points) -> np.ndarray:
        """Batch of points as an ndarray (validated)."""
        if isinstance(points, np.ndarray) and points.dtype != object:
            arr = points
            if self.is_scalar and arr.ndim == 2 and arr.shape[1] == 1:
                arr = arr[:, 0]
            if not self.is_scalar and (arr.ndim != 2 or arr.shape[1] != self.dim):
                raise SpaceError(f"dimension mismatch: expected (N, {self.dim}) array")
            if self.kind in ("matrix", "discrete_naturals"):
                arr = arr.astype(np.int64)
                if arr.size and arr.min() < 0:
                    raise SpaceError("negative point index")
                if self.kind == "matrix" and arr.size and arr.max() >= len(self.labels):
                    raise SpaceError("point index out of range")
            return arr
        pts = [self.point(p) for p in points]
        if self.kind in ("matrix", "discrete_naturals"):
            return np.array(pts, dtype=np.int64)
        if self.is_scalar:
            return np.array(pts, dtype=float)
        return np.array(pts, dtype=float).reshape(len(pts), self.dim)

    def unpack(self, arr: np.ndarray) -> list:
        """Inverse of :meth:`as_array`: ndarray back to canonical points."""
        if self.kind in ("matrix", "discrete_naturals"):
            return [int(v) for v in arr]
        if self.is_scalar:
            return [float(v) for v in arr]
        return [tuple(float(c) for c in row) for row in arr]

    def equal(self, x, y) -> bool:
        """Point equality: exact for integer kinds, ``tol`` for coordinates."""
        x, y = self.point(x), self.point(y)
        if not self.is_coordinate:
            return x == y
        return bool(np.max(np.abs(np.subtract(x, y))) <= self.tol)

    # -- distances ------------------------------------------------------------

    def _base_pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        if self.kind == "matrix":
            return self.matrix[np.ix_(X, Y)]
        if self.is_scalar:
            return np.abs(X[:, None].astype(float) - Y[None, :].astype(float))
        diff = X[:, None, :] - Y[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def pairwise(self, X, Y=None) -> np.ndarray:
        """Distance matrix between two batches of points."""
        X = self.as_array(X)
        Y = X if Y is None else self.as_array(Y)
        D = self._base_pairwise(X, Y)
        if self.join_with is not None:
            D = np.maximum(D, self.join_with.pairwise(X, Y))
        if self.augment is not None:
            fx = np.asarray(self.augment(X), dtype=float)
            fy = np.asarray(self.augment(Y), dtype=float)
            D = np.maximum(D, np.abs(fx[:, None] - fy[None, :]))
        return D

    def dist_to(self, X, A) -> np.ndarray:
        """d(x, A) for every x in the batch ``X``."""
        A = self.as_array(A)
        if len(A) == 0:
            raise SpaceError("distance to an empty set is undefined")
        return self.pairwise(X, A).min(axis=1)


def euclidean(dim: int = 1) -> MetricSpace:
    return MetricSpace.euclidean(dim)


def unit_interval() -> MetricSpace:
    return MetricSpace.unit_interval()


def naturals() -> MetricSpace:
    return MetricSpace.naturals()


def matrix_space(distances, labels=None) -> MetricSpace:
    return MetricSpace.from_matrix(distances, labels)


def space_from_json(desc: dict) -> MetricSpace:
    try:
        kind = desc["kind"]
    except (KeyError, TypeError):
        raise SpaceError("space description needs a 'kind' field") from None
    if kind == "euclidean":
        return MetricSpace.euclidean(int(desc.get("dim", 1)))
    if kind == "unit_interval":
        return MetricSpace.unit_interval()
    if kind == "discrete_naturals":
        return MetricSpace.naturals()
    if kind == "matrix":
        if "distances" not in desc:
            raise SpaceError("matrix space needs a 'distances' field")
        return MetricSpace.from_matrix(desc["distances"], desc.get("points"))
    raise SpaceError(f"unknown space kind {kind!r}")


@dataclass(frozen=True)
class PointSet:
    """A finite set of points in one space (duplicates allowed)."""

    space: MetricSpace
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.space.point(p) for p in self.points))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def array(self) -> np.ndarray:
        return self.space.as_array(self.points)

    def duplicates(self) -> list[tuple[int, int]]:
        """Index pairs (i, j), i < j, of points that coincide."""
        out = []
        for i in range(len(self.points)):
            for j in range(i + 1, len(self.points)):
                if self.space.equal(self.points[i], self.points[j]):
                    out.append((i, j))
        return out

    def canonical(self) -> PointSet:
        """Drop duplicates (first occurrence wins), keep order."""
        dropped = {j for _, j in self.duplicates()}
        return PointSet(self.space, tuple(p for i, p in enumerate(self.points) if i not in dropped))


def point_set(space: MetricSpace, points) -> PointSet:
    if isinstance(points, PointSet):
        if not points.space.same_domain(space):
            raise SpaceError("point set lives in a different space")
        return points
    return PointSet(space, tuple(points))


def _nonempty(space, A, what="set"):
    A = point_set(space, A)
    if len(A) == 0:
        raise SpaceError(f"empty {what}")
    return A


def distance(space: MetricSpace, x, y) -> float:
    X = space.as_array([x])
    Y = space.as_array([y])
    return float(space.pairwise(X, Y)[0, 0])


def set_distance(space: MetricSpace, x, A) -> float:
    A = _nonempty(space, A)
    return float(space.dist_to([x], A.array)[0])


def hausdorff_semidistance(space: MetricSpace, C, C2) -> float:
    """sup over x in C of d(x, C2)."""
    C = _nonempty(space, C)
    C2 = _nonempty(space, C2)
    return float(space.pairwise(C.array, C2.array).min(axis=1).max())


def hausdorff_distance(space: MetricSpace, C, C2) -> float:
    return max(hausdorff_semidistance(space, C, C2), hausdorff_semidistance(space, C2, C))


def set_separation(space: MetricSpace, K1, K2) -> float:
    """min over pairs of d(x, y)."""
    K1 = _nonempty(space, K1)
    K2 = _nonempty(space, K2)
    return float(space.pairwise(K1.array, K2.array).min())


def metric_join(space: MetricSpace, other: MetricSpace) -> MetricSpace:
    """Pointwise maximum of two metrics on the same point domain."""
    if not space.same_domain(other):
        raise SpaceError("metric_join needs both metrics on the same point domain")
    if space.kind == "matrix" and other.join_with is None and other.augment is None:
        if space.join_with is None and space.augment is None:
            return MetricSpace.from_matrix(np.maximum(space.matrix, other.matrix), space.labels)
    if space == other:
        return space
    return MetricSpace(space.kind, space.dim, space.labels, space.distances,
                       join_with=_chain_join(space.join_with, other), augment=space.augment,
                       tol=space.tol)


def _chain_join(existing, new):
    if existing is None:
        return new
    return metric_join(existing, new)


def metric_from_function(space: MetricSpace, f) -> MetricSpace:
    """The metric max(d(x, y), |f(x) - f(y)|).

    ``f`` is a :class:`~flatnorm.lipschitz.LipFunction` or any callable
    taking a batch of points (ndarray) to an array of values.
    """
    evaluator = getattr(f, "evaluate_many", f)
    if not callable(evaluator):
        raise SpaceError("metric_from_function needs a callable")

    def augment(X, _ev=evaluator):
        try:
            return np.asarray(_ev(X), dtype=float)
        except Exception as exc:
            raise SpaceError(f"function evaluation failed: {exc}") from exc

    if space.augment is None:
        return MetricSpace(space.kind, space.dim, space.labels, space.distances,
                           join_with=space.join_with, augment=augment, tol=space.tol)
    # already augmented: stack the new function as a joined metric
    extra = MetricSpace(space.kind, space.dim, space.labels, space.distances,
                        augment=augment, tol=space.tol)
    return MetricSpace(space.kind, space.dim, space.labels, space.distances,
                       join_with=_chain_join(space.join_with, extra),
                       augment=space.augment, tol=space.tol)


@dataclass(frozen=True)
class Violation:
    kind: str  # "shape" | "nonnegativity" | "diagonal" | "symmetry" | "triangle"
    indices: tuple
    detail: str

    def __str__(self):
        return f"{self.kind} violation at {self.indices}: {self.detail}"


def validate_metric(space_or_matrix, tol: float = 1e-12) -> list[Violation]:
    """All metric-axiom violations of a finite distance matrix.

    O(n^3); an empty list means the matrix is a (pseudo-free) metric.
    """
    if isinstance(space_or_matrix, MetricSpace):
        if space_or_matrix.kind != "matrix":
            raise SpaceError("validate_metric needs a matrix space")
        D = space_or_matrix.pairwise(np.arange(len(space_or_matrix.labels)))
    else:
        D = np.asarray(space_or_matrix, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        return [Violation("shape", D.shape, "matrix is not square")]
    n = D.shape[0]
    out: list[Violation] = []
    for i in range(n):
        if D[i, i] != 0:
            out.append(Violation("diagonal", (i, i), f"d = {D[i, i]} != 0"))
    for i in range(n):
        for j in range(n):
            if i != j and D[i, j] < 0:
                out.append(Violation("nonnegativity", (i, j), f"d = {D[i, j]} < 0"))
            if i != j and D[i, j] == 0:
                out.append(Violation("diagonal", (i, j), "distinct points at distance 0"))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(D[i, j] - D[j, i]) > tol:
                out.append(Violation("symmetry", (i, j), f"{D[i, j]} != {D[j, i]}"))
    # d(i, k) > d(i, j) + d(j, k)
    excess = D[:, None, :] - (D[:, :, None] + D[None, :, :])
    for i, j, k in zip(*np.nonzero(excess > tol)):
        if len({int(i), int(j), int(k)}) == 3 and (i < k or abs(D[i, k] - D[k, i]) > tol):
            out.append(Violation("triangle", (int(i), int(j), int(k)),
                                 f"{D[i, k]} > {D[i, j]} + {D[j, k]}"))
    return out
