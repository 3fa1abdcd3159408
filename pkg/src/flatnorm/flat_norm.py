"""Dual bounded-Lipschitz and Fortet-Mourier norms of discrete measures.

For a measure with atoms (x_i, w_i) the norm is

    sup { sum_i w_i f_i :  |f_i| <= u,  f_i - f_j <= v d(x_i, x_j),
                           u + v <= 1 (BL)  or  u <= 1, v <= 1 (FM) }

Any feasible vector f extends to the whole space with the same sup norm and
Lipschitz constant (clamped McShane extension), so the supremum over
functions on S equals this finite-dimensional LP.

The LP is solved through its dual, a transport problem with m + 2 rows:
unmatched mass (alpha_i, beta_i) is paid against the sup-norm budget and
moved mass (gamma_ij) against the Lipschitz budget.  The optimal simplex
multipliers of that dual are the witness values f_i, u and v.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lipschitz import LipFunction, mcshane_extend
from .measures import DiscreteSignedMeasure, consolidate, subtract
from .simplex import solve_standard_form

DEFAULT_CAP = 300
LP_TOL = 1e-9
BALLS = ("bl", "fm")


class NormError(ValueError):
    pass


class SupportSizeError(NormError):
    """Support exceeds the configured LP cap."""


class DegenerateDistanceError(NormError):
    """Distinct canonical atoms at distance zero."""


def default_cap() -> int:
    env = os.environ.get("FLATNORM_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise NormError(f"FLATNORM_CAP must be an integer, got {env!r}") from None
    return DEFAULT_CAP


def h(d):
    """BL* distance of two unit Diracs at distance d: 2d / (2 + d)."""
    d = np.asarray(d, dtype=float)
    out = 2 * d / (2 + d)
    return float(out) if out.ndim == 0 else out


@dataclass
class NormResult:
    value: float
    witness: list[tuple] = field(default_factory=list)  # (point, f value)
    ball: str = "bl"
    solver_status: str = "optimal"
    sup_part: float = 0.0  # u
    lip_part: float = 0.0  # v
    iterations: int = 0

    @property
    def witness_values(self) -> np.ndarray:
        return np.array([f for _, f in self.witness])

    def to_json(self) -> dict:
        return {"ball": self.ball, "value": self.value,
                "witness": [{"point": p, "f": f} for p, f in self.witness],
                "status": self.solver_status}


def _prepare(mu: DiscreteSignedMeasure, cap):
    mu = consolidate(mu)
    cap = default_cap() if cap is None else int(cap)
    m = len(mu)
    if m > cap:
        raise SupportSizeError(f"support size {m} exceeds LP cap {cap}")
    D = mu.space.pairwise(mu.points) if m else np.zeros((0, 0))
    off = ~np.eye(m, dtype=bool)
    if m and np.any(D[off] <= 0):
        raise DegenerateDistanceError("distinct atoms at distance zero; consolidation bug or pseudometric")
    return mu, D


def _transport_lp(w: np.ndarray, D: np.ndarray, ball: str):
    """Build the dual (transport) LP in standard form."""
    m = len(w)
    pairs = [(i, j) for i, j in itertools.permutations(range(m), 2)
             if ball == "bl" or D[i, j] < 2.0]
    n_pairs = len(pairs)
    n_tau = 1 if ball == "bl" else 2
    # columns: alpha (m), beta (m), gamma (n_pairs), tau (n_tau), s_u, s_v
    n = 2 * m + n_pairs + n_tau + 2
    ru, rv = m, m + 1
    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for i in range(m):
        put(i, i, 1.0)
        put(ru, i, 1.0)
        put(i, m + i, -1.0)
        put(ru, m + i, 1.0)
    for k, (i, j) in enumerate(pairs):
        c = 2 * m + k
        put(i, c, 1.0)
        put(j, c, -1.0)
        put(rv, c, D[i, j])
    t0 = 2 * m + n_pairs
    if ball == "bl":
        put(ru, t0, -1.0)
        put(rv, t0, -1.0)
    else:
        put(ru, t0, -1.0)
        put(rv, t0 + 1, -1.0)
    put(ru, t0 + n_tau, 1.0)
    put(rv, t0 + n_tau + 1, 1.0)
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m + 2, n))
    b = np.concatenate([w, [0.0, 0.0]])
    cost = np.zeros(n)
    cost[t0:t0 + n_tau] = 1.0
    return cost, A, b


def dual_norm(mu: DiscreteSignedMeasure, ball: str = "bl", cap: int | None = None,
              rule: str = "bland") -> NormResult:
    if ball not in BALLS:
        raise NormError(f"unknown ball {ball!r}; expected 'bl' or 'fm'")
    mu, D = _prepare(mu, cap)
    if len(mu) == 0:
        return NormResult(0.0, [], ball)
    w = mu.weights
    cost, A, b = _transport_lp(w, D, ball)
    res = solve_standard_form(cost, A, b, tol=LP_TOL, rule=rule)
    if res.status != "optimal":
        return NormResult(float("nan"), [], ball, "infeasible_data", iterations=res.iterations)
    m = len(w)
    f = res.y[:m]
    u, v = -res.y[m], -res.y[m + 1]
    witness = list(zip(mu.space.unpack(mu.points), (float(x) for x in f)))
    return NormResult(float(res.objective), witness, ball, "optimal", float(u), float(v),
                      res.iterations)


def bl_dual_norm(mu: DiscreteSignedMeasure, cap: int | None = None, rule: str = "bland") -> NormResult:
    return dual_norm(mu, "bl", cap, rule)


def fm_dual_norm(mu: DiscreteSignedMeasure, cap: int | None = None, rule: str = "bland") -> NormResult:
    return dual_norm(mu, "fm", cap, rule)


def bl_distance(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure, cap: int | None = None) -> float:
    return bl_dual_norm(subtract(mu, nu), cap).value


def fm_distance(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure, cap: int | None = None) -> float:
    return fm_dual_norm(subtract(mu, nu), cap).value


def witness_violation(result: NormResult, space) -> float:
    """How far the witness is outside its ball (<= 0 means feasible)."""
    if not result.witness:
        return 0.0
    pts = space.as_array([p for p, _ in result.witness])
    f = result.witness_values
    sup = float(np.abs(f).max())
    if len(f) > 1:
        D = space.pairwise(pts)
        off = ~np.eye(len(f), dtype=bool)
        lip = float((np.abs(f[:, None] - f[None, :])[off] / D[off]).max())
    else:
        lip = 0.0
    if result.ball == "bl":
        return sup + lip - 1.0
    return max(sup - 1.0, lip - 1.0)


def witness_extension(result: NormResult, space) -> LipFunction:
    """Clamped McShane extension of the witness to the whole space."""
    if not result.witness:
        from .lipschitz import constant

        return constant(space, 0.0)
    pts = space.as_array([p for p, _ in result.witness])
    f = result.witness_values
    L = 0.0
    if len(f) > 1:
        D = space.pairwise(pts)
        off = ~np.eye(len(f), dtype=bool)
        L = float((np.abs(f[:, None] - f[None, :])[off] / D[off]).max())
    return mcshane_extend(space, list(zip(space.unpack(pts), f)), L, tol=1e-9)


# -- independent oracle --------------------------------------------------------


def _vertex_bases(D: np.ndarray):
    """Candidate vertices f = u a + v b of {|f_i| <= u, f_i - f_j <= v d_ij}.

    Returns (G, hu, hv, a, b) where rows of G f <= u hu + v hv are the
    constraints and (a, b) stack the vertex coefficients of every
    nonsingular choice of k active constraints.
    """
    k = len(D)
    G, hu, hv = [], [], []
    for i in range(k):
        for s in (1.0, -1.0):
            row = np.zeros(k)
            row[i] = s
            G.append(row)
            hu.append(1.0)
            hv.append(0.0)
    for i, j in itertools.permutations(range(k), 2):
        row = np.zeros(k)
        row[i], row[j] = 1.0, -1.0
        G.append(row)
        hu.append(0.0)
        hv.append(D[i, j])
    G, hu, hv = np.array(G), np.array(hu), np.array(hv)
    combos = np.array(list(itertools.combinations(range(len(G)), k)))
    M = G[combos]  # (n_combos, k, k)
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-10
    M, combos = M[ok], combos[ok]
    rhs = np.stack([hu[combos], hv[combos]], axis=-1)  # (n, k, 2)
    sol = np.linalg.solve(M, rhs)
    return G, hu, hv, sol[..., 0], sol[..., 1]


def brute_force_norm(mu: DiscreteSignedMeasure, ball: str = "bl", grid_resolution: int = 1000) -> float:
    """Grid-search oracle for small supports (at most 4 atoms).

    The ball is split into a sup-norm budget u and a Lipschitz budget v.
    For BL, u runs over the grid {0, 1/R, ..., 1} with v = 1 - u; for FM the
    ball is the product u = v = 1 and needs no grid.  For each budget the
    inner maximum over f is taken exactly by enumerating every vertex of the
    polytope {|f_i| <= u, f_i - f_j <= v d_ij} (all nonsingular choices of
    active constraints), so the result approaches the norm from below as R
    grows and shares no code with the simplex route.
    """
    if ball not in BALLS:
        raise NormError(f"unknown ball {ball!r}")
    if grid_resolution < 1:
        raise NormError("grid_resolution must be positive")
    mu = consolidate(mu)
    k = len(mu)
    if k > 4:
        raise SupportSizeError("brute force oracle supports at most 4 atoms")
    if k == 0:
        return 0.0
    w = mu.weights
    D = mu.space.pairwise(mu.points)
    G, hu, hv, a, b = _vertex_bases(D)
    tol = 1e-12
    if ball == "fm":
        f = a + b
        feas = np.all(f @ G.T <= hu + hv + tol, axis=1)
        return float((f[feas] @ w).max())
    # f(u) = b + u (a - b), constraint r: u * p_r <= q_r
    ab = a - b
    p = ab @ G.T - hu + hv
    q = hv - b @ G.T + tol
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = q / p
    upper = np.where(p > 0, bound, np.inf).min(axis=1)
    lower = np.where(p < 0, bound, -np.inf).max(axis=1)
    never = np.any((p == 0) & (q < 0), axis=1)
    lo = np.maximum(lo, lower)
    hi = np.minimum(hi, upper)
    R = grid_resolution
    t_lo = np.ceil(lo * R - 1e-9)
    t_hi = np.floor(hi * R + 1e-9)
    valid = (t_lo <= t_hi) & ~never
    if not valid.any():
        return 0.0
    best = -np.inf
    slope = ab[valid] @ w
    base = b[valid] @ w
    for t in (t_lo[valid], t_hi[valid]):
        u = np.clip(t / R, 0.0, 1.0)
        best = max(best, float((base + u * slope).max()))
    return best
