"""Finite-scale experiments around weak versus norm convergence of measures.

Every experiment returns an :class:`ExperimentReport`: named column tables
plus summary numbers, serialized deterministically.  Reports carry
evidence only; limit statements are never turned into verdicts.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .flat_norm import bl_distance, bl_dual_norm, h
from .lipschitz import LipFunction, hat_function, tent_family_function
from .measures import (DensityMeasure1D, DiscreteSignedMeasure, consolidate, dirac,
                       is_positive, jordan, mass_in_neighborhood, mass_outside_neighborhood,
                       measure, pair, pair_density, sawtooth_g, sinusoid_density, subtract,
                       tv_norm)
from .metric_space import MetricSpace, PointSet, euclidean, naturals, point_set, set_separation


class ExperimentError(ValueError):
    pass


def fmt(x: float) -> float:
    """Round to 12 significant digits (stable report output)."""
    if x is None or not math.isfinite(x):
        return x
    return float(f"{x:.12g}")


def _clean(obj):
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, (np.floating,)):
        return fmt(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


@dataclass
class ExperimentReport:
    name: str
    params: dict
    tables: dict[str, dict[str, list]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        return _clean({"name": self.name, "params": self.params, "seed": self.seed,
                       "tables": self.tables, "summary": self.summary})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def to_csv(self, table: str | None = None) -> str:
        names = [table] if table else list(self.tables)
        chunks = []
        for name in names:
            cols = self.tables[name]
            keys = list(cols)
            lines = [f"# {self.name}:{name}", ",".join(keys)]
            for row in zip(*(cols[k] for k in keys)):
                lines.append(",".join(_csv_cell(v) for v in row))
            chunks.append("\n".join(lines))
        return "\n\n".join(chunks) + "\n"


def _csv_cell(v):
    v = _clean(v)
    if isinstance(v, list):
        return '"' + json.dumps(v) + '"'
    return "" if v is None else str(v)


@dataclass
class MeasureSequence:
    """n -> mu_n for n in ``indices``; ``tv_bound=None`` means unbounded."""

    generator: Callable[[int], DiscreteSignedMeasure | DensityMeasure1D]
    indices: range
    tv_bound: float | None = None

    def __call__(self, n: int):
        return self.generator(n)

    def check(self) -> list[int]:
        """Indices violating the declared TV bound (or space mismatch)."""
        bad = []
        space = None
        for n in self.indices:
            mu = self(n)
            if isinstance(mu, DiscreteSignedMeasure):
                if space is None:
                    space = mu.space
                elif not mu.space.same_domain(space):
                    bad.append(n)
                    continue
            if self.tv_bound is not None and tv_norm(mu) > self.tv_bound + 1e-12:
                bad.append(n)
        return bad


# -- sequences used by the demos ---------------------------------------------------


def dirac_drift_sequence(n_max: int) -> MeasureSequence:
    """delta_n - delta_{n + 1/n} on the real line."""
    R = euclidean(1)
    return MeasureSequence(lambda n: measure(R, [(n, 1.0), (n + 1.0 / n, -1.0)]),
                           range(1, n_max + 1), tv_bound=2.0)


def alternating_dirac_sequence(n_max: int) -> MeasureSequence:
    R = euclidean(1)
    return MeasureSequence(lambda n: dirac(R, (-1.0) ** n), range(1, n_max + 1), tv_bound=1.0)


def sinusoid_sequence(n_max: int) -> MeasureSequence:
    return MeasureSequence(sinusoid_density, range(1, n_max + 1), tv_bound=None)


# -- experiments ---------------------------------------------------------------


def _window(indices, n_max):
    window = [n for n in indices if n_max // 2 <= n <= n_max]
    return window or [n for n in indices if n <= n_max]


def dictionary_convergence_scan(seq: MeasureSequence, dictionary: Sequence[LipFunction],
                                n_max: int | None = None, flat_tail: bool = True) -> ExperimentReport:
    """Tail oscillation of <mu_n, f> over the window [n_max / 2, n_max], per f.

    For discrete sequences also the flat-distance tail
    max ||mu_n - mu_m||*_BL over the same window.
    """
    if not dictionary:
        raise ExperimentError("empty dictionary")
    n_max = max(seq.indices) if n_max is None else n_max
    window = _window(seq.indices, n_max)
    measures = {n: seq(n) for n in window}
    pairings = np.array([[pair(measures[n], f) for n in window] for f in dictionary])
    osc = pairings.max(axis=1) - pairings.min(axis=1)
    summary = {"max_oscillation": float(osc.max()), "window": [window[0], window[-1]]}
    tables = {"oscillation": {"f_index": list(range(len(dictionary))),
                              "tag": [f.tag for f in dictionary],
                              "oscillation": osc.tolist()}}
    discrete = all(isinstance(m, DiscreteSignedMeasure) for m in measures.values())
    if flat_tail and discrete:
        tail = 0.0
        for a, b in itertools.combinations(window, 2):
            tail = max(tail, bl_distance(measures[a], measures[b]))
        summary["flat_tail"] = tail
        tables["norms"] = {"n": window,
                           "bl_norm": [bl_dual_norm(measures[n]).value for n in window],
                           "tv_norm": [tv_norm(measures[n]) for n in window]}
    return ExperimentReport("dictionary_convergence_scan",
                            {"n_max": n_max, "dictionary_size": len(dictionary)},
                            tables, summary)


def escaping_mass_profile(seq: MeasureSequence, center, radii, n_max: int | None = None) -> ExperimentReport:
    """R -> sup_{n <= n_max} |mu_n|(S minus B(center, R))."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ExperimentError("radii must be positive and increasing")
    n_max = max(seq.indices) if n_max is None else n_max
    ns = [n for n in seq.indices if n <= n_max]
    measures = [seq(n) for n in ns]
    profile = []
    argmax = []
    for R in radii:
        masses = [mass_outside_neighborhood(mu, [center], R) for mu in measures]
        k = int(np.argmax(masses))
        profile.append(masses[k])
        argmax.append(ns[k])
    return ExperimentReport("escaping_mass_profile",
                            {"center": center, "n_max": n_max},
                            {"profile": {"radius": radii, "escaping_mass": profile, "argmax_n": argmax}},
                            {"final_escaping_mass": profile[-1]})


# -- finite cluster and subsequence detectors ----------------------------------


@dataclass
class ClusterWitness:
    index: int
    cluster: PointSet
    mass: float


def _clusters(mu: DiscreteSignedMeasure, eps: float) -> list[tuple[np.ndarray, float]]:
    """Single-linkage eps-components of the support: (atom indices, mass)."""
    m = len(mu)
    if m == 0:
        return []
    D = mu.space.pairwise(mu.points)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(*np.nonzero(np.triu(D <= eps, 1))):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return [(np.array(g), float(mu.weights[g].sum())) for _, g in sorted(groups.items())]


def find_separated_clusters(measures: Sequence[DiscreteSignedMeasure], eps: float):
    """Greedy search for clusters K_k of mass >= eps, pairwise more than eps apart.

    Measures are scanned in order.  From each, among the eps-connected
    support clusters of mass >= eps that are farther than eps from every
    cluster chosen so far, the one recurring in the fewest other measures is
    taken (then heaviest, then first): mass that stays put cannot supply
    infinitely many separated clusters, escaping mass can.  Returns None
    when fewer than two witnesses are found.
    """
    if not eps > 0:
        raise ExperimentError("eps must be positive")
    measures = [consolidate(mu) for mu in measures]
    for k, mu in enumerate(measures):
        if len(mu) and not is_positive(mu):
            raise ExperimentError(f"measure {k} is not positive")
    if not measures:
        return None
    space = measures[0].space
    per_measure = [_clusters(mu, eps) for mu in measures]
    heavy = [[(mu.points[idx], mass) for idx, mass in cl if mass >= eps]
             for mu, cl in zip(measures, per_measure)]

    def recurrence(pts, k):
        count = 0
        for j, others in enumerate(heavy):
            if j == k:
                continue
            if any(set_separation(space, pts, q) <= eps for q, _ in others):
                count += 1
        return count

    chosen: list[ClusterWitness] = []
    for k, candidates in enumerate(heavy):
        eligible = []
        for order, (pts, mass) in enumerate(candidates):
            if all(set_separation(space, pts, w.cluster.array) > eps for w in chosen):
                eligible.append((recurrence(pts, k), -mass, order, pts, mass))
        if eligible:
            _, _, _, pts, mass = min(eligible, key=lambda t: t[:3])
            chosen.append(ClusterWitness(k, PointSet(space, tuple(space.unpack(pts))), mass))
    if len(chosen) < 2:
        return None
    return chosen


def verify_separated_clusters(measures: Sequence[DiscreteSignedMeasure], witnesses, eps: float) -> list[str]:
    """Independent check of mu_{n_k}(K_k) >= eps and dist(K_k, K_m) > eps."""
    problems = []
    idx = [w.index for w in witnesses]
    if idx != sorted(set(idx)):
        problems.append("indices are not strictly increasing")
    for w in witnesses:
        mu = measures[w.index]
        pts = w.cluster.array
        # mass of mu on the finite set K: atoms coinciding with cluster points
        d = mu.space.pairwise(mu.points, pts).min(axis=1) if len(mu) else np.zeros(0)
        mass = float(mu.weights[d == 0].sum()) if len(mu) else 0.0
        if not mass >= eps:
            problems.append(f"measure {w.index} has mass {mass} < {eps} on its cluster")
    for a, b in itertools.combinations(witnesses, 2):
        sep = set_separation(a.cluster.space, a.cluster, b.cluster)
        if not sep > eps:
            problems.append(f"clusters {a.index} and {b.index} are {sep} <= {eps} apart")
    return problems


def _set_masses(measures, sets) -> np.ndarray:
    """M[i, j] = mu_i(E_j) with E_j = K_j^{r_j}."""
    M = np.zeros((len(measures), len(sets)))
    for i, mu in enumerate(measures):
        for j, (K, r) in enumerate(sets):
            M[i, j] = mass_in_neighborhood(mu, K, r)
    return M


def _check_disjoint(space, sets):
    for i, j in itertools.combinations(range(len(sets)), 2):
        (Ki, ri), (Kj, rj) = sets[i], sets[j]
        if not set_separation(space, Ki, Kj) > ri + rj:
            raise ExperimentError(f"sets {i} and {j} overlap")


def select_sparse_subsequence(measures: Sequence[DiscreteSignedMeasure], sets, eps: float) -> list[int]:
    """Indices n_1 < n_2 < ... with mu_{n_i}(union_{j != i} E_{n_j}) < eps.

    ``sets[k] = (K_k, r_k)`` stands for the closed neighbourhood K_k^{r_k};
    the sets must be pairwise disjoint.  Stage s uses the tolerance
    eta = eps / 2^s: the head m of the remaining candidates keeps only
    later indices n with mu_n(E_m) < eta, then drops the n with the largest
    mu_m(E_n) until mu_m(union of the kept E_n) < eta.  The head with the
    most survivors is selected (ties to the smaller index) and the
    survivors become the next candidate list.  Selected measures charge
    earlier sets with less than sum_{j<i} eps/2^j and later sets with less
    than eps/2^i, so each selection passes the check.
    """
    if len(measures) != len(sets):
        raise ExperimentError("one set per measure required")
    if not eps > 0:
        raise ExperimentError("eps must be positive")
    if not measures:
        return []
    sets = [(point_set(measures[0].space, K), float(r)) for K, r in sets]
    _check_disjoint(measures[0].space, sets)
    for k, mu in enumerate(measures):
        if len(consolidate(mu)) and not is_positive(mu):
            raise ExperimentError(f"measure {k} is not positive")
    M = _set_masses(measures, sets)
    remaining = list(range(len(measures)))
    selected = []
    stage = 1
    while remaining:
        eta = eps / 2 ** stage
        best = None
        for pos, m in enumerate(remaining):
            later = [n for n in remaining[pos + 1:] if M[n, m] < eta]
            later.sort(key=lambda n: (M[m, n], n))
            while later and M[m, later].sum() >= eta:
                later.pop()  # largest charge of mu_m
            later.sort()
            if best is None or len(later) > len(best[1]):
                best = (m, later)
        m, survivors = best
        selected.append(m)
        remaining = survivors
        stage += 1
    return selected


def verify_sparse_subsequence(measures, sets, selection, eps: float) -> list[str]:
    """Independent check of mu_{n_i}(union_{j != i} E_{n_j}) < eps."""
    problems = []
    if selection != sorted(set(selection)):
        problems.append("selection is not strictly increasing")
    for i in selection:
        mu = consolidate(measures[i])
        if len(mu) == 0:
            continue
        inside = np.zeros(len(mu), dtype=bool)
        for j in selection:
            if j == i:
                continue
            K, r = sets[j]
            inside |= mu.space.dist_to(mu.points, point_set(mu.space, K).array) <= r
        charge = float(mu.weights[inside].sum())
        if not charge < eps:
            problems.append(f"measure {i} puts {charge} >= {eps} on the other sets")
    return problems


# -- named demos -------------------------------------------------------------------


def fixed_test_functions() -> list[LipFunction]:
    """Three fixed functions on [0, 1] used in the sinusoid decay table.

    All vanish at both endpoints (so the pairings tend to zero) and none is
    symmetric about 1/2 (which would make every pairing exactly zero).
    """
    from .metric_space import unit_interval

    I = unit_interval()
    return [hat_function(I, 0.3, [0.37]),
            tent_family_function(I, [0.21, 0.66], [1.0, 0.5], 0.17),
            hat_function(I, 0.2, [0.29])]


def counterexample_3_2(n_values: Sequence[int]) -> ExperimentReport:
    """Sinusoid densities n sin(2 pi n x) dx on [0, 1] against the sawtooth g_n."""
    ns = [int(n) for n in n_values]
    if any(n < 1 for n in ns):
        raise ExperimentError("n must be >= 1")
    fs = fixed_test_functions()
    cols = {"n": ns, "pairing": [], "g_bl_norm": [], "bl_lower_bound": [], "tv_norm": [],
            "tv_closed_form": []}
    decay = {f"f{k}": [] for k in range(len(fs))}
    for n in ns:
        mu = sinusoid_density(n)
        g = sawtooth_g(n)
        p = pair_density(mu, g)
        cols["pairing"].append(p)
        cols["g_bl_norm"].append(g.bl_bound)
        cols["bl_lower_bound"].append(p / g.bl_bound)
        cols["tv_norm"].append(tv_norm(mu))
        cols["tv_closed_form"].append(2 * n / math.pi)
        for k, f in enumerate(fs):
            decay[f"f{k}"].append(pair_density(mu, f))
    summary = {
        "target_pairing": 1 / math.pi ** 2,
        "max_pairing_error": max(abs(p - 1 / math.pi ** 2) for p in cols["pairing"]),
        "min_bl_lower_bound": min(cols["bl_lower_bound"]),
    }
    return ExperimentReport("counterexample-3-2", {"n": ns},
                            {"pairing": cols, "decay": {"n": ns, **decay}}, summary)


def dirac_drift_demo(n_max: int) -> ExperimentReport:
    """mu_n = delta_n - delta_{n+1/n}: norm -> 0 while the Jordan parts escape."""
    if n_max < 1:
        raise ExperimentError("n_max must be >= 1")
    seq = dirac_drift_sequence(n_max)
    R = seq(1).space
    f = hat_function(R, 1.0, [0.0])
    ns = list(range(1, n_max + 1))
    cols = {"n": ns, "bl_norm": [], "closed_form": [], "tv_norm": [], "pos_pairing": [],
            "neg_pairing": [], "signed_pairing": [], "pos_tv": []}
    for n in ns:
        mu = seq(n)
        plus, minus = jordan(mu)
        cols["bl_norm"].append(bl_dual_norm(mu).value)
        cols["closed_form"].append(2.0 / (2 * n + 1))
        cols["tv_norm"].append(tv_norm(mu))
        cols["pos_pairing"].append(pair(plus, f))
        cols["neg_pairing"].append(pair(minus, f))
        cols["signed_pairing"].append(pair(mu, f))
        cols["pos_tv"].append(tv_norm(plus))
    err = max(abs(a - b) for a, b in zip(cols["bl_norm"], cols["closed_form"]))
    return ExperimentReport("dirac-drift", {"n_max": n_max}, {"drift": cols},
                            {"max_closed_form_error": err})


def random_signed_measure(space: MetricSpace, points, rng: np.random.Generator,
                          low: float = -1.0, high: float = 1.0) -> DiscreteSignedMeasure:
    w = rng.uniform(low, high, size=len(points))
    return consolidate(measure(space, list(zip(points, w))))


def discrete_l1_demo(m: int, trials: int, seed: int = 0, cap: int | None = None) -> ExperimentReport:
    """Ratio ||mu||*_BL / ||mu||_TV for random signed measures on {0, ..., m-1}."""
    from .flat_norm import SupportSizeError, default_cap

    cap = default_cap() if cap is None else cap
    if m > cap:
        raise SupportSizeError(f"support size {m} exceeds LP cap {cap}")
    N = naturals()
    rng = np.random.default_rng(seed)
    ratios = []
    named = {
        "delta0": measure(N, [(0, 1.0)]),
        "delta0_minus_delta1": measure(N, [(0, 1.0), (1, -1.0)]),
        "alternating4": measure(N, [(k, (-1.0) ** k) for k in range(4)]),
    }
    named_ratio = {k: bl_dual_norm(mu, cap).value / tv_norm(mu) for k, mu in named.items()}
    for _ in range(trials):
        size = int(rng.integers(1, m + 1))
        pts = sorted(rng.choice(m, size=size, replace=False).tolist())
        mu = random_signed_measure(N, pts, rng)
        if len(mu) == 0:
            continue
        ratios.append(bl_dual_norm(mu, cap).value / tv_norm(mu))
    summary = {"min_ratio": min(ratios), "max_ratio": max(ratios), "lower_bound": 1 / 3,
               **{f"ratio_{k}": v for k, v in named_ratio.items()}}
    if summary["min_ratio"] < 1 / 3 - 1e-9:
        raise ExperimentError(f"ratio {summary['min_ratio']} below 1/3")
    return ExperimentReport("discrete-l1", {"m": m, "trials": trials}, {"ratios": {"ratio": ratios}},
                            summary, seed)


def clusters_demo(n_max: int = 5, eps: float = 1.0, spacing: float = 3.0) -> ExperimentReport:
    """Cluster detector on mu_n = delta_{spacing * n}."""
    R = euclidean(1)
    measures = [dirac(R, spacing * n) for n in range(1, n_max + 1)]
    found = find_separated_clusters(measures, eps) or []
    cols = {"index": [w.index + 1 for w in found], "cluster": [list(w.cluster.points) for w in found],
            "mass": [w.mass for w in found]}
    seps = [set_separation(R, a.cluster, b.cluster) for a, b in itertools.combinations(found, 2)]
    return ExperimentReport("clusters", {"n_max": n_max, "epsilon": eps, "spacing": spacing},
                            {"clusters": cols},
                            {"witnesses": len(found), "min_separation": min(seps) if seps else None,
                             "verification_problems": verify_separated_clusters(measures, found, eps)
                             if found else []})


def scan_demo(n_max: int = 64) -> ExperimentReport:
    """Tail scan of the drifting Dirac pair against a small tent dictionary."""
    from .lipschitz import dictionary

    R = euclidean(1)
    dic = dictionary(R, [0.0, 1.0, 2.0], [0.5, 1.0], 1, max_subset=1)
    return dictionary_convergence_scan(dirac_drift_sequence(n_max), dic, n_max)
