"""Bounded Lipschitz functions with tracked norm bounds.

A :class:`LipFunction` carries a vectorized evaluator together with
*declared* bounds on its sup norm and Lipschitz constant.  The bounds are
conservative and propagate through every combinator; they are never
recomputed from the evaluator.  :func:`empirical_lipschitz` is the only
place where the evaluator is probed, and it only yields a lower bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .metric_space import MetricSpace, PointSet, SpaceError, point_set, set_separation


class LipschitzError(ValueError):
    """Invalid construction parameters or incompatible data."""


TAGS = ("constant", "hat", "tent", "mcshane", "sup", "disjoint_sum", "composed",
        "piecewise_linear_1d", "custom", "combination")


@dataclass(frozen=True, eq=False)
class LipFunction:
    space: MetricSpace
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    declared_sup: float
    declared_lip: float
    tag: str = "custom"
    # f vanishes outside support[0]^support[1]
    support: tuple[PointSet, float] | None = None
    # exact 1-D piecewise-linear representation, interpolated with constant
    # extension beyond the end points
    breakpoints: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.declared_sup >= 0 or not self.declared_lip >= 0:
            raise LipschitzError("declared bounds must be nonnegative")

    def evaluate_many(self, X) -> np.ndarray:
        X = self.space.as_array(X)
        return np.asarray(self.evaluator(X), dtype=float)

    def __call__(self, x) -> float:
        return float(self.evaluate_many([x])[0])

    @property
    def bl_bound(self) -> float:
        return self.declared_sup + self.declared_lip

    @property
    def fm_bound(self) -> float:
        return max(self.declared_sup, self.declared_lip)

    # linear structure; bounds follow the triangle inequality

    def scaled(self, c: float) -> LipFunction:
        c = float(c)
        bp = None
        if self.breakpoints is not None:
            bp = self.breakpoints * np.array([1.0, c])
        return LipFunction(self.space, lambda X, _f=self.evaluator: c * _f(X),
                           abs(c) * self.declared_sup, abs(c) * self.declared_lip,
                           tag="combination", support=self.support, breakpoints=bp)

    def __neg__(self) -> LipFunction:
        return self.scaled(-1.0)

    def __add__(self, other: LipFunction) -> LipFunction:
        return linear_combination([(1.0, self), (1.0, other)])

    def __sub__(self, other: LipFunction) -> LipFunction:
        return linear_combination([(1.0, self), (-1.0, other)])


def _union_support(fs: Sequence[LipFunction]):
    if not fs or any(f.support is None for f in fs):
        return None
    space = fs[0].space
    pts = tuple(p for f in fs for p in f.support[0].points)
    return PointSet(space, pts), max(f.support[1] for f in fs)


def _check_same_space(fs: Sequence[LipFunction]) -> MetricSpace:
    space = fs[0].space
    for f in fs[1:]:
        if not f.space.same_domain(space):
            raise SpaceError("functions live on different spaces")
    return space


def _merged_breakpoints(fs: Sequence[LipFunction]):
    if any(f.breakpoints is None for f in fs):
        return None
    xs = np.unique(np.concatenate([f.breakpoints[:, 0] for f in fs]))
    return xs


def linear_combination(terms: Sequence[tuple[float, LipFunction]]) -> LipFunction:
    """Sum of c_k f_k with bounds sum |c_k| * bound_k."""
    if not terms:
        raise LipschitzError("empty linear combination")
    coeffs = [float(c) for c, _ in terms]
    fs = [f for _, f in terms]
    space = _check_same_space(fs)

    def ev(X, _c=coeffs, _fs=[f.evaluator for f in fs]):
        out = np.zeros(len(X))
        for c, g in zip(_c, _fs):
            if c != 0.0:
                out = out + c * g(X)
        return out

    sup = sum(abs(c) * f.declared_sup for c, f in terms)
    lip = sum(abs(c) * f.declared_lip for c, f in terms)
    xs = _merged_breakpoints(fs)
    bp = None
    if xs is not None and space.is_scalar and space.is_coordinate:
        bp = np.column_stack([xs, ev(xs)])
    return LipFunction(space, ev, sup, lip, tag="combination",
                       support=_union_support(fs), breakpoints=bp)


def constant(space: MetricSpace, value: float = 1.0) -> LipFunction:
    value = float(value)
    bp = None
    if space.is_coordinate and space.is_scalar:
        bp = np.array([[0.0, value], [1.0, value]])
    return LipFunction(space, lambda X: np.full(len(X), value), abs(value), 0.0,
                       tag="constant", breakpoints=bp)


def custom(space: MetricSpace, fn: Callable, sup: float, lip: float,
           vectorized: bool = False) -> LipFunction:
    """Wrap a user function; ``fn`` maps one point (or a batch if vectorized)."""
    if vectorized:
        ev = fn
    else:
        def ev(X, _fn=fn, _sp=space):
            return np.array([_fn(p) for p in _sp.unpack(X)], dtype=float)
    return LipFunction(space, ev, float(sup), float(lip), tag="custom")


def _positive(lam, name="lambda") -> float:
    lam = float(lam)
    if not lam > 0:
        raise LipschitzError(f"{name} must be positive, got {lam}")
    return lam


def _tent_breakpoints(centers: np.ndarray, amps: np.ndarray, lam: float) -> np.ndarray:
    """Exact breakpoints of max_y a_y [1 - |x - y| / lam]^+ on the line."""
    keep = amps > 0
    c, a = centers[keep], amps[keep]
    if len(c) == 0:
        return np.array([[0.0, 0.0], [1.0, 0.0]])
    cand = [c, c - lam, c + lam]
    # lines a (1 + s (x - y) / lam), s = +-1; pairwise intersections
    slopes, icepts = [], []
    for s in (1.0, -1.0):
        slopes.append(s * a / lam)
        icepts.append(a - s * a * c / lam)
    m = np.concatenate(slopes)
    q = np.concatenate(icepts)
    dm = m[:, None] - m[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = (q[None, :] - q[:, None]) / dm
    xi = xi[np.isfinite(xi)]
    lo, hi = c.min() - lam, c.max() + lam
    xs = np.concatenate(cand + [xi[(xi > lo) & (xi < hi)]])
    xs = np.unique(xs)
    vals = _tent_values(xs, c, a, lam)
    return np.column_stack([xs, vals])


def _tent_values(X: np.ndarray, centers: np.ndarray, amps: np.ndarray, lam: float) -> np.ndarray:
    D = np.abs(X[:, None] - centers[None, :])
    return np.max(amps[None, :] * np.clip(1.0 - D / lam, 0.0, None), axis=1, initial=0.0)


def hat_function(space: MetricSpace, lam: float, C) -> LipFunction:
    """[1 - d(x, C) / lam]^+ : equal to 1 on C, vanishing outside C^lam."""
    lam = _positive(lam)
    C = point_set(space, C)
    if len(C) == 0:
        raise LipschitzError("hat function needs a nonempty center set")
    Carr = C.array

    def ev(X, _sp=space, _C=Carr):
        return np.clip(1.0 - _sp.pairwise(X, _C).min(axis=1) / lam, 0.0, None)

    bp = None
    if space.is_coordinate and space.is_scalar and space.join_with is None and space.augment is None:
        bp = _tent_breakpoints(Carr, np.ones(len(Carr)), lam)
    return LipFunction(space, ev, 1.0, 1.0 / lam, tag="hat", support=(C, lam), breakpoints=bp)


def tent_family_function(space: MetricSpace, F, a, lam) -> LipFunction:
    """max over y in F of a(y) [1 - d(x, y) / lam]^+."""
    lam = _positive(lam)
    F = point_set(space, F)
    if len(F) == 0:
        raise LipschitzError("tent family needs a nonempty point set")
    amps = np.array([float(v) for v in a], dtype=float)
    if len(amps) != len(F):
        raise LipschitzError("one amplitude per point required")
    if np.any(amps < 0) or np.any(amps > 1):
        raise LipschitzError("amplitudes must lie in [0, 1]")
    Farr = F.array

    def ev(X, _sp=space, _F=Farr, _a=amps):
        D = _sp.pairwise(X, _F)
        return np.max(_a[None, :] * np.clip(1.0 - D / lam, 0.0, None), axis=1, initial=0.0)

    bp = None
    if space.is_coordinate and space.is_scalar and space.join_with is None and space.augment is None:
        bp = _tent_breakpoints(Farr, amps, lam)
    top = float(amps.max())
    return LipFunction(space, ev, top, top / lam, tag="tent", support=(F, lam), breakpoints=bp)


def piecewise_linear_1d(space: MetricSpace, breakpoints) -> LipFunction:
    """Linear interpolation through (x, y) pairs, constant beyond the ends."""
    if not (space.is_coordinate and space.is_scalar):
        raise SpaceError("piecewise_linear_1d needs a one-dimensional coordinate space")
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 2 or bp.shape[1] != 2 or len(bp) == 0:
        raise LipschitzError("breakpoints must be a nonempty list of [x, y] pairs")
    bp = bp[np.argsort(bp[:, 0], kind="stable")]
    if np.any(np.diff(bp[:, 0]) <= 0):
        raise LipschitzError("breakpoint abscissae must be distinct")
    slopes = np.abs(np.diff(bp[:, 1]) / np.diff(bp[:, 0])) if len(bp) > 1 else np.zeros(1)
    bp.setflags(write=False)
    xs, ys = bp[:, 0], bp[:, 1]
    return LipFunction(space, lambda X: np.interp(X, xs, ys), float(np.abs(ys).max()),
                       float(slopes.max(initial=0.0)), tag="piecewise_linear_1d", breakpoints=bp)


def _samples(space, samples):
    if not samples:
        raise LipschitzError("no samples")
    pts = space.as_array([p for p, _ in samples])
    ys = np.array([float(y) for _, y in samples])
    return pts, ys


def check_compatible(space: MetricSpace, pts, ys, L: float, tol: float = 1e-12):
    """Raise if some pair violates |y_i - y_j| <= L d(x_i, x_j)."""
    D = space.pairwise(pts)
    gap = np.abs(ys[:, None] - ys[None, :]) - L * D
    slack = tol * (1.0 + np.abs(ys[:, None]) + np.abs(ys[None, :]))
    bad = np.argwhere(gap > slack)
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise LipschitzError(
            f"samples {i} and {j} are not {L}-Lipschitz compatible: "
            f"|{ys[i]} - {ys[j]}| > {L} * {D[i, j]}")


def mcshane_extend(space: MetricSpace, samples, L: float, tol: float = 1e-12) -> LipFunction:
    """Clamped McShane extension of point data with Lipschitz constant L.

    ``samples`` is a list of ``(point, value)`` pairs.  The extension
    ``min_i (y_i + L d(x, x_i))`` is clipped to ``[min y, max y]`` so the
    sup norm of the data is preserved.
    """
    L = float(L)
    if L < 0:
        raise LipschitzError("Lipschitz constant must be nonnegative")
    pts, ys = _samples(space, samples)
    check_compatible(space, pts, ys, L, tol)
    lo, hi = float(ys.min()), float(ys.max())

    def ev(X, _sp=space, _p=pts, _y=ys):
        raw = np.min(_y[None, :] + L * _sp.pairwise(X, _p), axis=1)
        return np.clip(raw, lo, hi)

    return LipFunction(space, ev, float(np.abs(ys).max()), L, tag="mcshane")


def extend_with_compact_support(space: MetricSpace, samples, L: float, lam: float, K) -> LipFunction:
    """McShane extension times the hat h_{lam, K}.

    Agrees with the data on K and vanishes outside K^lam.
    """
    lam = _positive(lam)
    K = point_set(space, K)
    base = mcshane_extend(space, samples, L)
    hat = hat_function(space, lam, K)

    def ev(X, _b=base.evaluator, _h=hat.evaluator):
        return _b(X) * _h(X)

    sup = base.declared_sup
    return LipFunction(space, ev, sup, float(L) + sup / lam, tag="mcshane", support=(K, lam))


def sup_family(fs: Sequence[LipFunction]) -> LipFunction:
    """Pointwise maximum; |sup|_L <= max |f|_L."""
    if not fs:
        raise LipschitzError("empty family")
    space = _check_same_space(fs)
    if len(fs) == 1:
        return fs[0]
    evs = [f.evaluator for f in fs]

    def ev(X, _evs=evs):
        return np.max(np.stack([g(X) for g in _evs]), axis=0)

    return LipFunction(space, ev, max(f.declared_sup for f in fs), max(f.declared_lip for f in fs),
                       tag="sup", support=_union_support(fs))


def disjoint_sum(fs: Sequence[LipFunction]) -> LipFunction:
    """Sum of functions with pairwise disjoint supports.

    Support hints are mandatory.  The Lipschitz bound is twice the largest
    member bound, also for a single summand.
    """
    if not fs:
        raise LipschitzError("empty family")
    space = _check_same_space(fs)
    for k, f in enumerate(fs):
        if f.support is None:
            raise LipschitzError(f"function {k} has no support hint")
    for i, j in itertools.combinations(range(len(fs)), 2):
        (Ki, ri), (Kj, rj) = fs[i].support, fs[j].support
        if not set_separation(space, Ki, Kj) > ri + rj:
            raise LipschitzError(f"supports of functions {i} and {j} overlap")
    evs = [f.evaluator for f in fs]

    def ev(X, _evs=evs):
        return np.sum(np.stack([g(X) for g in _evs]), axis=0)

    return LipFunction(space, ev, max(f.declared_sup for f in fs),
                       2.0 * max(f.declared_lip for f in fs), tag="disjoint_sum",
                       support=_union_support(fs))


@dataclass(frozen=True, eq=False)
class LipschitzMap:
    """A map of ``space`` into itself with declared Lipschitz constant."""

    space: MetricSpace
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lip: float
    name: str = "map"
    # (a, b) for 1-D affine maps a x + b
    affine: tuple[float, float] | None = None

    def __call__(self, X) -> np.ndarray:
        X = self.space.as_array(X)
        Y = np.asarray(self.fn(X))
        _check_codomain(self.space, Y, self.name)
        return Y

    def compose(self, inner: LipschitzMap) -> LipschitzMap:
        """self o inner."""
        if not inner.space.same_domain(self.space):
            raise SpaceError("maps live on different spaces")
        aff = None
        if self.affine and inner.affine:
            a1, b1 = self.affine
            a2, b2 = inner.affine
            aff = (a1 * a2, a1 * b2 + b1)
        if aff is not None:
            return affine_map(self.space, *aff)
        return LipschitzMap(self.space, lambda X, _f=self.fn, _g=inner.fn: _f(_g(X)),
                            self.lip * inner.lip, f"{self.name}o{inner.name}")

    def power(self, n: int) -> LipschitzMap:
        out = identity_map(self.space)
        for _ in range(n):
            out = self.compose(out)
        return out


def _check_codomain(space: MetricSpace, Y: np.ndarray, name: str):
    if space.kind == "unit_interval":
        if Y.size and (Y.min() < -space.tol or Y.max() > 1 + space.tol):
            raise SpaceError(f"map {name} leaves [0, 1]")
    elif space.kind in ("discrete_naturals", "matrix"):
        if Y.size and (np.any(Y != np.round(Y)) or Y.min() < 0):
            raise SpaceError(f"map {name} leaves the point domain")
        if space.kind == "matrix" and Y.size and Y.max() >= len(space.labels):
            raise SpaceError(f"map {name} leaves the point domain")
    elif not space.is_scalar and (Y.ndim != 2 or Y.shape[1] != space.dim):
        raise SpaceError(f"map {name} has the wrong codomain dimension")


def affine_map(space: MetricSpace, a: float, b: float = 0.0) -> LipschitzMap:
    """x -> a x + b on a one-dimensional coordinate space."""
    if not (space.is_coordinate and space.is_scalar):
        raise SpaceError("affine maps need a one-dimensional coordinate space")
    a, b = float(a), float(b)
    return LipschitzMap(space, lambda X: a * X + b, abs(a), f"{a:g}x+{b:g}", affine=(a, b))


def identity_map(space: MetricSpace) -> LipschitzMap:
    if space.is_coordinate and space.is_scalar:
        return affine_map(space, 1.0, 0.0)
    return LipschitzMap(space, lambda X: X, 1.0, "id")


def constant_map(space: MetricSpace, c) -> LipschitzMap:
    c = space.point(c)
    arr = space.as_array([c])
    if space.is_coordinate and space.is_scalar:
        return affine_map(space, 0.0, c)
    return LipschitzMap(space, lambda X: np.repeat(arr, len(X), axis=0), 0.0, f"const{c}")


def compose_with_map(f: LipFunction, phi: LipschitzMap) -> LipFunction:
    """f o phi with Lipschitz bound |f|_L * L_phi."""
    if not phi.space.same_domain(f.space):
        raise SpaceError("map codomain does not match the function's space")

    def ev(X, _f=f.evaluator, _phi=phi):
        return _f(_phi(X))

    if phi.affine == (1.0, 0.0):
        return f
    return LipFunction(f.space, ev, f.declared_sup, f.declared_lip * phi.lip, tag="composed")


def _rational_grid(levels: int) -> list[Fraction]:
    return [Fraction(k, levels) for k in range(1, levels + 1)]


def dictionary(space: MetricSpace, centers, lambdas, amplitude_levels: int,
               max_subset: int = 2) -> list[LipFunction]:
    """Deterministic finite slice of the countable tent dictionary.

    Base tents range over center subsets of size <= ``max_subset``, nonzero
    amplitudes k / amplitude_levels, and every lambda (plus the zero
    function).  The result is [1, 0, then f_i - f_j for i != j].
    """
    centers = point_set(space, centers)
    if len(centers) == 0:
        raise LipschitzError("dictionary needs at least one center")
    if amplitude_levels < 1:
        raise LipschitzError("amplitude_levels must be a positive integer")
    lams = [_positive(l) for l in lambdas]
    if not lams:
        raise LipschitzError("no lambda values")
    grid = _rational_grid(amplitude_levels)
    zero = constant(space, 0.0)
    base = [zero]
    pts = centers.points
    for size in range(1, min(max_subset, len(pts)) + 1):
        for subset in itertools.combinations(range(len(pts)), size):
            for amps in itertools.product(grid, repeat=size):
                for lam in lams:
                    base.append(tent_family_function(space, [pts[i] for i in subset],
                                                     [float(a) for a in amps], lam))
    out = [constant(space, 1.0), zero]
    for i, fi in enumerate(base):
        for j, fj in enumerate(base):
            if i == j:
                continue
            # f_i, f_j >= 0 with sup <= 1, so |f_i - f_j| <= max of the sups
            g = fi - fj
            out.append(replace(g, declared_sup=max(fi.declared_sup, fj.declared_sup)))
    return out


def base_tent_count(n_centers: int, levels: int, n_lambdas: int, max_subset: int) -> int:
    """Number of base tents (including zero) that :func:`dictionary` enumerates."""
    total = 1
    for size in range(1, min(max_subset, n_centers) + 1):
        n_sub = len(list(itertools.combinations(range(n_centers), size)))
        total += n_sub * levels ** size * n_lambdas
    return total


def empirical_lipschitz(f: LipFunction, space: MetricSpace, sample_pairs) -> float:
    """max |f(x) - f(y)| / d(x, y) over the given pairs; a lower bound on |f|_L."""
    pairs = list(sample_pairs)
    if not pairs:
        return 0.0
    X = space.as_array([p for p, _ in pairs])
    Y = space.as_array([q for _, q in pairs])
    if space.is_scalar:
        d = np.abs(X - Y).astype(float) if space.kind != "matrix" else space.matrix[X, Y]
        if space.join_with is not None or space.augment is not None:
            d = np.array([space.pairwise(X[k:k + 1], Y[k:k + 1])[0, 0] for k in range(len(X))])
    else:
        d = np.array([space.pairwise(X[k:k + 1], Y[k:k + 1])[0, 0] for k in range(len(X))])
    if np.any(d <= 0):
        raise LipschitzError("coincident sample pair")
    fx = f.evaluate_many(X)
    fy = f.evaluate_many(Y)
    return float(np.max(np.abs(fx - fy) / d))


# -- serialization -------------------------------------------------------------


def function_from_json(obj: dict, space: MetricSpace) -> LipFunction:
    """Parse a function description (hat, tent, piecewise_linear_1d, constant)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise LipschitzError("function JSON needs a 'kind' field")
    kind = obj["kind"]

    def need(key):
        if key not in obj:
            raise LipschitzError(f"{kind} function needs a '{key}' field")
        return obj[key]

    def pts(key):
        raw = need(key)
        if not isinstance(raw, list):
            raise LipschitzError(f"'{key}' must be a list")
        try:
            return [space.point(p) for p in raw]
        except SpaceError as exc:
            raise LipschitzError(f"{key}: {exc}") from None

    try:
        if kind == "hat":
            return hat_function(space, float(need("lambda")), pts("centers"))
        if kind == "tent":
            return tent_family_function(space, pts("centers"), need("amplitudes"), float(need("lambda")))
        if kind == "piecewise_linear_1d":
            return piecewise_linear_1d(space, need("breakpoints"))
        if kind == "constant":
            return constant(space, float(need("value")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (LipschitzError, SpaceError)):
            raise
        raise LipschitzError(f"{kind} function: {exc}") from None
    raise LipschitzError(f"unknown function kind {kind!r}")
