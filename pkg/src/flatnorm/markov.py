"""Regular Markov operators on discrete measures and equicontinuity probes.

Three operator kinds are supported: the push-forward along one map, a
finite mixture of push-forwards (an iterated function system with
probabilities), and a row-stochastic kernel on a finite matrix space.
Each acts on measures (:func:`apply`) and, dually, on functions
(:func:`dual_apply`) so that <P mu, f> = <mu, U f>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .flat_norm import bl_distance, bl_dual_norm, h
from .lipschitz import LipFunction, LipschitzMap, affine_map, compose_with_map, identity_map
from .measures import (DiscreteSignedMeasure, consolidate, dirac, is_positive, pair,
                       pushforward, subtract)
from .metric_space import MetricSpace, SpaceError

DEFAULT_ATOM_CAP = 10 ** 6


class MarkovError(ValueError):
    pass


class MarkovOperator:
    """Base class; subclasses implement the measure and function actions."""

    space: MetricSpace
    label: str

    def apply(self, mu: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
        raise NotImplementedError

    def dual(self, f: LipFunction) -> LipFunction:
        raise NotImplementedError

    def _check(self, space):
        if not space.same_domain(self.space):
            raise SpaceError(f"operator {self.label} and argument live on different spaces")


@dataclass(frozen=True, eq=False)
class PushForward(MarkovOperator):
    phi: LipschitzMap
    label: str = "pushforward"

    @property
    def space(self):
        return self.phi.space

    def apply(self, mu):
        self._check(mu.space)
        return pushforward(mu, self.phi)

    def dual(self, f):
        self._check(f.space)
        return compose_with_map(f, self.phi)


@dataclass(frozen=True, eq=False)
class IFS(MarkovOperator):
    """Mixture sum_i p_i (phi_i)_# of push-forwards."""

    maps: tuple[LipschitzMap, ...]
    probs: tuple[float, ...]
    label: str = "ifs"

    def __post_init__(self):
        if not self.maps or len(self.maps) != len(self.probs):
            raise MarkovError("an IFS needs one probability per map")
        p = np.asarray(self.probs, dtype=float)
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise MarkovError("IFS probabilities must be positive and sum to 1")
        space = self.maps[0].space
        for phi in self.maps[1:]:
            if not phi.space.same_domain(space):
                raise SpaceError("IFS maps live on different spaces")

    @property
    def space(self):
        return self.maps[0].space

    def apply(self, mu):
        self._check(mu.space)
        if len(mu) == 0:
            return mu
        pts = np.concatenate([phi(mu.points) for phi in self.maps])
        w = np.concatenate([p * mu.weights for p in self.probs])
        return consolidate(DiscreteSignedMeasure(mu.space, pts, w))

    def dual(self, f):
        self._check(f.space)
        maps, probs = self.maps, self.probs

        def ev(X, _f=f.evaluator):
            # one call on all images keeps iterated duals at n calls, not k^n
            vals = _f(np.concatenate([phi(X) for phi in maps]))
            vals = vals.reshape((len(maps), len(X)) + vals.shape[1:])
            return np.tensordot(np.asarray(probs), vals, axes=1)

        lip = f.declared_lip * sum(p * phi.lip for phi, p in zip(maps, probs))
        return LipFunction(f.space, ev, f.declared_sup, lip, tag="composed")


@dataclass(frozen=True, eq=False)
class StochasticKernel(MarkovOperator):
    """K[i, j] = probability of moving from point i to point j."""

    space: MetricSpace
    matrix: np.ndarray = field(repr=False)
    label: str = "kernel"

    def __post_init__(self):
        if self.space.kind != "matrix":
            raise MarkovError("a kernel needs a finite matrix space")
        K = np.array(self.matrix, dtype=float)
        n = len(self.space.labels)
        if K.shape != (n, n):
            raise MarkovError(f"kernel shape {K.shape} does not match {n} points")
        if np.any(K < 0) or np.any(np.abs(K.sum(axis=1) - 1.0) > 1e-12):
            raise MarkovError("kernel is not row-stochastic")
        K.setflags(write=False)
        object.__setattr__(self, "matrix", K)

    def apply(self, mu):
        self._check(mu.space)
        n = len(self.space.labels)
        dense = np.zeros(n)
        np.add.at(dense, mu.points, mu.weights)
        out = dense @ self.matrix
        idx = np.flatnonzero(out)
        return DiscreteSignedMeasure(mu.space, idx, out[idx])

    def dual(self, f):
        self._check(f.space)
        n = len(self.space.labels)
        g = self.matrix @ f.evaluate_many(np.arange(n))
        D = self.space.matrix
        off = ~np.eye(n, dtype=bool)
        # exact constants on a finite space
        lip = float((np.abs(g[:, None] - g[None, :])[off] / D[off]).max()) if n > 1 else 0.0
        sup = float(np.abs(g).max()) if n else 0.0
        return LipFunction(f.space, lambda X, _g=g: _g[X], min(sup, f.declared_sup), lip,
                           tag="composed")


@dataclass(frozen=True, eq=False)
class Iterated(MarkovOperator):
    """P^n as an operator in its own right (for families of iterates)."""

    base: MarkovOperator
    n: int
    atom_cap: int = DEFAULT_ATOM_CAP

    @property
    def space(self):
        return self.base.space

    @property
    def label(self):
        return f"{self.base.label}^{self.n}"

    def apply(self, mu):
        return iterate(self.base, mu, self.n, self.atom_cap)

    def dual(self, f):
        return dual_iterate(self.base, f, self.n)


def pushforward_operator(phi: LipschitzMap, label: str = "pushforward") -> PushForward:
    return PushForward(phi, label)


def ifs_operator(maps: Sequence[LipschitzMap], probs: Sequence[float], label: str = "ifs") -> IFS:
    return IFS(tuple(maps), tuple(float(p) for p in probs), label)


def kernel_operator(space: MetricSpace, matrix, label: str = "kernel") -> StochasticKernel:
    return StochasticKernel(space, np.asarray(matrix, dtype=float), label)


def identity_operator(space: MetricSpace) -> PushForward:
    return PushForward(identity_map(space), "identity")


def apply(P: MarkovOperator, mu: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    return P.apply(mu)


def dual_apply(P: MarkovOperator, f: LipFunction) -> LipFunction:
    return P.dual(f)


def iterate(P: MarkovOperator, mu: DiscreteSignedMeasure, n: int,
            atom_cap: int = DEFAULT_ATOM_CAP) -> DiscreteSignedMeasure:
    if n < 0:
        raise MarkovError("n must be nonnegative")
    for _ in range(n):
        if isinstance(P, IFS) and len(mu) * len(P.maps) > atom_cap:
            raise MarkovError(f"iterate would exceed the atom cap {atom_cap}")
        mu = P.apply(mu)
    return mu


def _power_pushforward(P: PushForward, n: int) -> PushForward:
    return PushForward(P.phi.power(n), f"{P.label}^{n}")


def dual_iterate(P: MarkovOperator, f: LipFunction, n: int) -> LipFunction:
    if n < 0:
        raise MarkovError("n must be nonnegative")
    if isinstance(P, PushForward):
        return _power_pushforward(P, n).dual(f) if n else f
    for _ in range(n):
        f = P.dual(f)
    return f


def power(P: MarkovOperator, n: int) -> MarkovOperator:
    if isinstance(P, PushForward):
        return _power_pushforward(P, n)
    return Iterated(P, n)


def ifs_from_affine(space: MetricSpace, coeffs: Sequence[tuple[float, float]],
                    probs: Sequence[float]) -> IFS:
    """IFS of 1-D affine maps a x + b."""
    return ifs_operator([affine_map(space, a, b) for a, b in coeffs], probs)


# -- probes ------------------------------------------------------------------


@dataclass
class ModulusTable:
    center: object
    radii: list[float]
    omega: list[float]
    samples: list[int]
    argmax_member: list[str]
    seed: int | None = None

    def rows(self):
        return list(zip(self.radii, self.omega, self.samples))

    def to_json(self) -> dict:
        return {"center": self.center, "radius": self.radii, "omega": self.omega,
                "samples": self.samples, "argmax_member": self.argmax_member, "seed": self.seed}


def _ball_samples(space: MetricSpace, x0, delta: float, k: int, rng: np.random.Generator):
    """Points within distance delta of x0 (x0 excluded from the count)."""
    if space.kind in ("discrete_naturals",):
        lo, hi = max(0, math.ceil(x0 - delta)), math.floor(x0 + delta)
        return np.arange(lo, hi + 1, dtype=np.int64)
    if space.kind == "matrix":
        d = space.pairwise([x0], np.arange(len(space.labels)))[0]
        return np.flatnonzero(d <= delta)
    if space.is_scalar:
        lo, hi = x0 - delta, x0 + delta
        if space.kind == "unit_interval":
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        pts = np.concatenate([[lo, hi], rng.uniform(lo, hi, size=k)])
        return pts
    x0 = np.asarray(x0, dtype=float)
    dirs = rng.normal(size=(k, space.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = delta * rng.uniform(size=(k, 1)) ** (1.0 / space.dim)
    pts = x0 + radii * dirs
    if space.join_with is not None or space.augment is not None:
        pts = pts[space.pairwise(pts, [tuple(x0)])[:, 0] <= delta]
    return pts


def eproperty_probe(family: Sequence[MarkovOperator], f: LipFunction, x0, radii,
                    samples_per_radius: int = 32, seed: int = 0) -> ModulusTable:
    """Estimate omega(delta) = sup_P sup_{d(x, x0) <= delta} |U_P f(x) - U_P f(x0)|.

    Samples are drawn per radius (plus the interval end points in 1-D)
    from a generator seeded with ``seed``; omega is reported as a running
    maximum over increasing radii so it is nondecreasing by construction
    (samples of smaller balls lie in larger ones).
    """
    if not family:
        raise MarkovError("empty operator family")
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise MarkovError("radii must be positive and strictly increasing")
    space = f.space
    x0 = space.point(x0)
    rng = np.random.default_rng(seed)
    samples = [space.as_array(_ball_samples(space, x0, r, samples_per_radius, rng)) for r in radii]
    if any(len(s) == 0 for s in samples):
        raise MarkovError("sampling produced no points")
    X0 = space.as_array([x0])
    allpts = np.concatenate([X0] + samples)
    bounds = np.cumsum([1] + [len(s) for s in samples])
    # per member, per radius: max deviation from the value at x0
    dev = np.zeros((len(family), len(radii)))
    for m, P in enumerate(family):
        vals = P.dual(f).evaluate_many(allpts)
        gap = np.abs(vals - vals[0])
        for k in range(len(radii)):
            dev[m, k] = gap[bounds[k]:bounds[k + 1]].max()
    omega, who = [], []
    running, running_who = 0.0, ""
    for k in range(len(radii)):
        m = int(np.argmax(dev[:, k]))
        if dev[m, k] > running:
            running, running_who = float(dev[m, k]), family[m].label
        omega.append(running)
        who.append(running_who)
    counts = [len(s) for s in samples]
    return ModulusTable(x0, radii, omega, counts, who, seed)


@dataclass
class EquicontinuityRow:
    input_distance: float
    output_distance: float
    argmax_member: str


def measure_equicontinuity_probe(family: Sequence[MarkovOperator], mu0: DiscreteSignedMeasure,
                                 perturbations: Sequence[DiscreteSignedMeasure]) -> list[EquicontinuityRow]:
    """Rows (||mu - mu0||*_BL, max_P ||P mu - P mu0||*_BL), sorted by input distance."""
    if not family:
        raise MarkovError("empty operator family")
    if not is_positive(mu0):
        raise MarkovError("mu0 must be a positive measure")
    images0 = [P.apply(mu0) for P in family]
    rows = []
    for k, mu in enumerate(perturbations):
        if len(consolidate(mu)) and not is_positive(mu):
            raise MarkovError(f"perturbation {k} has negative weights")
        if not mu.space.same_domain(mu0.space):
            raise SpaceError("perturbations live on a different space")
        d_in = bl_distance(mu, mu0)
        best, best_who = 0.0, ""
        for P, img0 in zip(family, images0):
            v = bl_distance(P.apply(mu), img0)
            if v > best:
                best, best_who = v, P.label
        rows.append(EquicontinuityRow(d_in, best, best_who))
    rows.sort(key=lambda r: r.input_distance)
    return rows


@dataclass
class DiracRow:
    radius: float
    x: object
    input_distance: float
    image_distance: float | None  # d(phi(x), phi(x0)) for push-forwards
    bl_output: float
    h_of_image: float | None
    identity_residual: float


def dirac_continuity_check(P: MarkovOperator, x0, radii, f: LipFunction | None = None,
                           tol: float = 1e-12) -> list[DiracRow]:
    """Compare |Uf(x) - Uf(x0)| with |<P delta_x - P delta_x0, f>| at x = x0 + radius.

    Raises if the identity fails by more than ``tol`` (relative to the
    magnitude of the values).  Also tabulates ||P delta_x - P delta_x0||*_BL
    and, for push-forwards, h(d(phi(x), phi(x0))).
    """
    space = P.space
    x0 = space.point(x0)
    if f is None:
        from .lipschitz import hat_function

        f = hat_function(space, 1.0, [x0])
    Uf = P.dual(f)
    rows = []
    for r in radii:
        x = _offset_point(space, x0, float(r))
        lhs = abs(Uf(x) - Uf(x0))
        diff = subtract(P.apply(dirac(space, x)), P.apply(dirac(space, x0)))
        rhs = abs(pair(diff, f))
        resid = abs(lhs - rhs)
        if resid > tol * max(1.0, abs(lhs)):
            raise MarkovError(f"duality identity fails at radius {r}: {lhs} vs {rhs}")
        img_d = h_img = None
        if isinstance(P, PushForward):
            Y = P.phi(space.as_array([x, x0]))
            img_d = float(space.pairwise(Y[:1], Y[1:])[0, 0])
            h_img = h(img_d)
        rows.append(DiracRow(float(r), x, float(space.pairwise([x], [x0])[0, 0]), img_d,
                             bl_dual_norm(diff).value, h_img, resid))
    return rows


def _offset_point(space, x0, r):
    if space.kind == "discrete_naturals":
        return int(x0 + round(r))
    if space.kind == "matrix":
        d = space.pairwise([x0], np.arange(len(space.labels)))[0]
        inside = np.flatnonzero(d <= r)
        return int(inside[np.argmax(d[inside])])
    if space.is_scalar:
        x = x0 + r
        if space.kind == "unit_interval" and x > 1.0:
            x = x0 - r
        return x
    return tuple(np.asarray(x0) + np.r_[r, np.zeros(space.dim - 1)])


# -- serialization -------------------------------------------------------------


def _map_from_json(space: MetricSpace, obj: dict) -> LipschitzMap:
    if not isinstance(obj, dict) or "affine" not in obj:
        raise MarkovError("map JSON must be {\"affine\": {\"a\": ..., \"b\": ...}}")
    aff = obj["affine"]
    try:
        return affine_map(space, float(aff["a"]), float(aff.get("b", 0.0)))
    except (KeyError, TypeError, ValueError):
        raise MarkovError("affine map needs numeric 'a' (and optional 'b')") from None


def operator_from_json(obj: dict, space: MetricSpace | None = None) -> MarkovOperator:
    """Parse an operator description; affine maps default to the real line."""
    from .metric_space import euclidean, space_from_json

    if not isinstance(obj, dict) or "kind" not in obj:
        raise MarkovError("operator JSON needs a 'kind' field")
    if "space" in obj:
        space = space_from_json(obj["space"])
    kind = obj["kind"]
    if kind == "ifs":
        space = space or euclidean(1)
        maps = obj.get("maps")
        if not isinstance(maps, list) or not maps:
            raise MarkovError("ifs operator needs a nonempty 'maps' list")
        try:
            probs = [float(m["p"]) for m in maps]
        except (KeyError, TypeError, ValueError):
            raise MarkovError("every ifs map needs a probability 'p'") from None
        return ifs_operator([_map_from_json(space, m) for m in maps], probs)
    if kind == "pushforward":
        space = space or euclidean(1)
        if "map" not in obj:
            raise MarkovError("pushforward operator needs a 'map' field")
        return pushforward_operator(_map_from_json(space, obj["map"]))
    if kind == "kernel":
        if "matrix" not in obj:
            raise MarkovError("kernel operator needs a 'matrix' field")
        K = np.asarray(obj["matrix"], dtype=float)
        if space is None:
            raise MarkovError("kernel operator needs a matrix 'space'")
        return kernel_operator(space, K)
    raise MarkovError(f"unknown operator kind {kind!r}")
