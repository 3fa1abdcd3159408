"""Finitely supported signed measures and sinusoidal density measures on [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Callable

import numpy as np

from .lipschitz import LipFunction, LipschitzError, LipschitzMap, piecewise_linear_1d
from .metric_space import MetricSpace, SpaceError, point_set, space_from_json


class MeasureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteSignedMeasure:
    """Atoms (points[k], weights[k]) in one space.

    Construction does not merge atoms; use :func:`consolidate` for the
    canonical form.  The zero measure has no atoms.
    """

    space: MetricSpace
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = self.space.as_array(self.points)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise MeasureError("points and weights differ in length")
        if not np.all(np.isfinite(w)):
            raise MeasureError("weights must be finite")
        pts = np.array(pts, copy=True)
        w = np.array(w, copy=True)
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def atoms(self) -> list[tuple]:
        return list(zip(self.space.unpack(self.points), (float(w) for w in self.weights)))

    def __len__(self):
        return len(self.weights)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return subtract(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __rmul__(self, c):
        return scale(self, c)

    def __repr__(self):
        body = ", ".join(f"{w:+g}@{p}" for p, w in self.atoms)
        return f"DiscreteSignedMeasure([{body}])"


def measure(space: MetricSpace, atoms) -> DiscreteSignedMeasure:
    """Build a measure from ``[(point, weight), ...]`` (no consolidation)."""
    atoms = list(atoms)
    pts = space.as_array([p for p, _ in atoms]) if atoms else _empty_points(space)
    return DiscreteSignedMeasure(space, pts, [float(w) for _, w in atoms])


def dirac(space: MetricSpace, x, weight: float = 1.0) -> DiscreteSignedMeasure:
    return measure(space, [(x, weight)])


def zero_measure(space: MetricSpace) -> DiscreteSignedMeasure:
    return DiscreteSignedMeasure(space, _empty_points(space), np.zeros(0))


def _empty_points(space):
    if space.kind in ("matrix", "discrete_naturals"):
        return np.zeros(0, dtype=np.int64)
    if space.is_scalar:
        return np.zeros(0)
    return np.zeros((0, space.dim))


def _group_labels(space: MetricSpace, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group equal points; return (representative order, group label per atom).

    Exact for integer kinds.  Coordinate kinds merge points whose
    coordinates agree within ``space.tol`` (sliding window on the first
    coordinate of a lexicographic sort).
    """
    n = len(pts)
    if not space.is_coordinate:
        uniq, labels = np.unique(pts, return_inverse=True)
        return np.arange(len(uniq)), labels.reshape(-1)
    P = pts.reshape(n, -1)
    order = np.lexsort(P.T[::-1])
    labels = np.full(n, -1)
    reps: list[int] = []  # atom index of each group representative
    window: list[int] = []  # representative group ids with first coord close
    tol = space.tol
    for idx in order:
        x = P[idx]
        window = [g for g in window if x[0] - P[reps[g]][0] <= tol]
        for g in window:
            if np.max(np.abs(P[reps[g]] - x)) <= tol:
                labels[idx] = g
                break
        else:
            reps.append(idx)
            labels[idx] = len(reps) - 1
            window.append(len(reps) - 1)
    return np.array(reps), labels


def consolidate(mu: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    """Merge atoms at equal points and drop zero weights; sorted by point."""
    if len(mu) == 0:
        return mu
    space = mu.space
    reps, labels = _group_labels(space, mu.points)
    sums = np.zeros(labels.max() + 1)
    np.add.at(sums, labels, mu.weights)
    if space.is_coordinate:
        rep_pts = mu.points[reps]
    else:
        rep_pts = np.unique(mu.points)
    keep = sums != 0.0
    rep_pts, sums = rep_pts[keep], sums[keep]
    if len(sums) == 0:
        return zero_measure(space)
    if space.is_coordinate:
        P = rep_pts.reshape(len(rep_pts), -1)
        order = np.lexsort(P.T[::-1])
        rep_pts, sums = rep_pts[order], sums[order]
    return DiscreteSignedMeasure(space, rep_pts, sums)


def is_canonical(mu: DiscreteSignedMeasure) -> bool:
    c = consolidate(mu)
    return len(c) == len(mu) and not np.any(mu.weights == 0)


def jordan(mu: DiscreteSignedMeasure) -> tuple[DiscreteSignedMeasure, DiscreteSignedMeasure]:
    """(mu+, mu-) with mu = mu+ - mu- and disjoint atom sets."""
    c = consolidate(mu)
    pos = c.weights > 0
    neg = c.weights < 0
    return (DiscreteSignedMeasure(c.space, c.points[pos], c.weights[pos]),
            DiscreteSignedMeasure(c.space, c.points[neg], -c.weights[neg]))


def tv_norm(mu) -> float:
    if isinstance(mu, DensityMeasure1D):
        return mu.total_variation()
    return float(np.abs(consolidate(mu).weights).sum())


def total_mass(mu: DiscreteSignedMeasure) -> float:
    """Signed total mass mu(S)."""
    return float(np.sum(mu.weights))


def is_positive(mu: DiscreteSignedMeasure) -> bool:
    return bool(np.all(consolidate(mu).weights > 0))


def pair(mu: DiscreteSignedMeasure, f: LipFunction) -> float:
    """<mu, f> = sum of w_k f(x_k)."""
    if isinstance(mu, DensityMeasure1D):
        return pair_density(mu, f)
    if not mu.space.same_domain(f.space):
        raise SpaceError("measure and function live on different spaces")
    if len(mu) == 0:
        return 0.0
    return float(np.dot(mu.weights, f.evaluate_many(mu.points)))


def _same_space(mu, nu):
    if not mu.space.same_domain(nu.space):
        raise SpaceError("measures live on different spaces")


def add(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    _same_space(mu, nu)
    pts = np.concatenate([mu.points, nu.points])
    return consolidate(DiscreteSignedMeasure(mu.space, pts, np.concatenate([mu.weights, nu.weights])))


def scale(mu: DiscreteSignedMeasure, c: float) -> DiscreteSignedMeasure:
    return consolidate(DiscreteSignedMeasure(mu.space, mu.points, float(c) * mu.weights))


def subtract(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    _same_space(mu, nu)
    pts = np.concatenate([mu.points, nu.points])
    return consolidate(DiscreteSignedMeasure(mu.space, pts, np.concatenate([mu.weights, -nu.weights])))


def pushforward(mu: DiscreteSignedMeasure, phi) -> DiscreteSignedMeasure:
    """Image measure: each atom (x, w) moves to (phi(x), w)."""
    if isinstance(phi, LipschitzMap):
        if not phi.space.same_domain(mu.space):
            raise SpaceError("map and measure live on different spaces")
        Y = phi(mu.points) if len(mu) else mu.points
    else:
        Y = mu.space.as_array([phi(p) for p in mu.space.unpack(mu.points)]) if len(mu) else mu.points
    return consolidate(DiscreteSignedMeasure(mu.space, Y, mu.weights))


def mass_outside_neighborhood(mu: DiscreteSignedMeasure, K, lam: float) -> float:
    """|mu|(S minus K^lam): total |weight| of atoms with d(x, K) > lam."""
    K = point_set(mu.space, K)
    if len(K) == 0:
        raise SpaceError("empty set K")
    if lam < 0:
        raise MeasureError("lambda must be nonnegative")
    if len(mu) == 0:
        return 0.0
    d = mu.space.dist_to(mu.points, K.array)
    return float(np.abs(mu.weights[d > lam]).sum())


def mass_in_neighborhood(mu: DiscreteSignedMeasure, K, lam: float) -> float:
    """mu(K^lam) (signed)."""
    K = point_set(mu.space, K)
    if len(K) == 0:
        raise SpaceError("empty set K")
    if len(mu) == 0:
        return 0.0
    d = mu.space.dist_to(mu.points, K.array)
    return float(mu.weights[d <= lam].sum())


# -- serialization -----------------------------------------------------------


def _json_point(space, p):
    if space.kind == "euclidean":
        return [p] if space.dim == 1 else list(p)
    if space.kind == "unit_interval":
        return [p]
    return p


def measure_to_json(mu: DiscreteSignedMeasure) -> dict:
    return {
        "space": mu.space.describe(),
        "atoms": [{"point": _json_point(mu.space, p), "weight": repr(w)} for p, w in mu.atoms],
    }


def measure_from_json(obj: dict) -> DiscreteSignedMeasure:
    if not isinstance(obj, dict):
        raise MeasureError("measure JSON must be an object")
    if "space" not in obj:
        raise MeasureError("measure JSON needs a 'space' field")
    space = space_from_json(obj["space"])
    atoms = obj.get("atoms")
    if not isinstance(atoms, list):
        raise MeasureError("measure JSON needs an 'atoms' list")
    parsed = []
    for k, atom in enumerate(atoms):
        if not isinstance(atom, dict) or "point" not in atom or "weight" not in atom:
            raise MeasureError(f"atoms[{k}] needs 'point' and 'weight'")
        try:
            w = float(Decimal(str(atom["weight"])))
        except Exception:
            raise MeasureError(f"atoms[{k}].weight is not a number: {atom['weight']!r}") from None
        try:
            p = space.point(atom["point"])
        except SpaceError as exc:
            raise MeasureError(f"atoms[{k}].point: {exc}") from None
        parsed.append((p, w))
    return measure(space, parsed)


# -- density measures on [0, 1] ------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityMeasure1D:
    """A measure density(x) dx on [0, 1].

    The sinusoid family ``amplitude * sin(2 pi k x)`` is handled in closed
    form; a generic density needs ``frequency_hint`` (oscillations per
    unit length) to size the quadrature.
    """

    density: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    amplitude: float | None = None
    frequency: float | None = None
    frequency_hint: float | None = None
    quad_order: int = 8
    panels_per_period: int = 64

    @property
    def is_sinusoid(self) -> bool:
        return self.amplitude is not None and self.frequency is not None

    def total_variation(self) -> float:
        """int_0^1 |density|, exact per half period for the sinusoid family."""
        if self.is_sinusoid:
            a, k = self.amplitude, self.frequency
            if k == 0 or a == 0:
                return 0.0
            w = 2 * math.pi * k
            # zeros of sin(w x) at multiples of 1/(2k)
            cuts = np.arange(0.0, 1.0, 1.0 / (2 * abs(k)))
            edges = np.append(cuts, 1.0)
            lo, hi = edges[:-1], edges[1:]
            seg = np.abs(np.cos(w * lo) - np.cos(w * hi)) / w
            return float(abs(a) * seg.sum())
        return float(_quadrature(lambda x: np.abs(self.density(x)), self._period(), 1e-10,
                                 self.quad_order, self.panels_per_period))

    def _period(self) -> float:
        freq = self.frequency if self.frequency is not None else self.frequency_hint
        if freq is None:
            raise MeasureError("generic density needs a frequency hint for quadrature")
        return 1.0 / max(abs(freq), 1.0)


def sinusoid_density(n: int, amplitude: float | None = None) -> DensityMeasure1D:
    """d mu = a sin(2 pi n x) dx, with a = n unless given."""
    a = float(n if amplitude is None else amplitude)
    w = 2 * math.pi * n
    return DensityMeasure1D(lambda x: a * np.sin(w * x), amplitude=a, frequency=float(n))


def _segment_integrals(x0, x1, y0, y1, a, w):
    """int_{x0}^{x1} (alpha x + beta) a sin(w x) dx for each linear segment."""
    alpha = (y1 - y0) / (x1 - x0)
    beta = y0 - alpha * x0

    def anti(x):
        # int (alpha x + beta) sin(w x) dx
        return alpha * (np.sin(w * x) / w ** 2 - x * np.cos(w * x) / w) - beta * np.cos(w * x) / w

    return a * (anti(x1) - anti(x0))


def _restricted_breakpoints(bp: np.ndarray) -> np.ndarray:
    """Breakpoints of a constant-extended PL function restricted to [0, 1]."""
    xs = bp[:, 0]
    inner = xs[(xs > 0.0) & (xs < 1.0)]
    grid = np.concatenate([[0.0], inner, [1.0]])
    return np.column_stack([grid, np.interp(grid, xs, bp[:, 1])])


def _gauss_legendre(fn, edges, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1], edges[1:]
    half = (b - a) / 2
    mid = (a + b) / 2
    X = mid[:, None] + half[:, None] * nodes[None, :]
    vals = fn(X.ravel()).reshape(X.shape)
    return float(np.sum(half * (vals @ weights)))


def _quadrature(fn, period, tol, order=8, panels_per_period=64, max_panels=2 ** 21):
    panels = max(int(math.ceil(panels_per_period / period)), panels_per_period)
    prev = _gauss_legendre(fn, np.linspace(0.0, 1.0, panels + 1), order)
    while panels < max_panels:
        panels *= 2
        cur = _gauss_legendre(fn, np.linspace(0.0, 1.0, panels + 1), order)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise MeasureError(f"quadrature did not reach tolerance {tol}")


def pair_density(mu: DensityMeasure1D, f: LipFunction, tol: float = 1e-10,
                 method: str = "auto") -> float:
    """int_0^1 f(x) density(x) dx.

    ``method="auto"`` integrates segment by segment in closed form when the
    density is a sinusoid and ``f`` carries a piecewise-linear
    representation; otherwise (or with ``method="quadrature"``) composite
    Gauss-Legendre with at least 64 panels per oscillation period, doubled
    until successive estimates agree within ``tol``.
    """
    if not tol > 0:
        raise MeasureError("tol must be positive")
    if not (f.space.is_coordinate and f.space.is_scalar):
        raise SpaceError("density pairing needs a function on a one-dimensional space")
    if method not in ("auto", "exact", "quadrature"):
        raise MeasureError(f"unknown method {method!r}")
    exact_ok = mu.is_sinusoid and f.breakpoints is not None
    if method == "exact" and not exact_ok:
        raise MeasureError("exact pairing needs a sinusoid density and a piecewise-linear f")
    if exact_ok and method != "quadrature":
        bp = _restricted_breakpoints(f.breakpoints)
        w = 2 * math.pi * mu.frequency
        if w == 0:
            return 0.0
        x, y = bp[:, 0], bp[:, 1]
        return float(np.sum(_segment_integrals(x[:-1], x[1:], y[:-1], y[1:], mu.amplitude, w)))
    period = mu._period()

    def integrand(X):
        return f.evaluator(np.clip(X, 0.0, 1.0)) * mu.density(X)

    return _quadrature(integrand, period, tol, mu.quad_order, mu.panels_per_period)


def sawtooth_g(n: int) -> LipFunction:
    """Piecewise-linear sawtooth with slopes +-1, peaks +-1/(4n) at odd multiples of 1/(4n)."""
    if int(n) != n or n < 1:
        raise LipschitzError("n must be a positive integer")
    n = int(n)
    xs = np.arange(4 * n + 1) / (4 * n)
    ys = np.zeros(4 * n + 1)
    ys[1::4] = 1.0 / (4 * n)
    ys[3::4] = -1.0 / (4 * n)
    f = piecewise_linear_1d(MetricSpace.unit_interval(), np.column_stack([xs, ys]))
    return replace(f, declared_sup=1.0 / (4 * n), declared_lip=1.0)
