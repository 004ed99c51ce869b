"""Finite policy classes, version spaces, projections, and packing numbers."""

from __future__ import annotations

import csv
from typing import List, Optional, Sequence

import numpy as np

from .spaces import CUBE, GRID, RING, ActionSpace

TABULAR = "tabular"
CONSTANT = "constant"
LINEAR_SPHERE = "linear_sphere"


class PolicyClass:
    """A finite set of deterministic context -> action maps.

    Representations:

    * Constant: |Pi| fixed actions, context ignored (the non-contextual
      class "x0 -> a").
    * Tabular: an (n_contexts x |Pi|) table of actions, contexts addressed
      by integer index.
    * LinearSphere: unit-norm weight vectors w; pi_w(x) = <w, x>, optionally
      rescaled to [0,1] via u = (1 + <w,x>)/2 so outputs live in the unit
      cube (set rescale=True when driving the algorithms).
    """

    def __init__(self, space: ActionSpace, representation: str,
                 actions: Optional[np.ndarray] = None,
                 table: Optional[np.ndarray] = None,
                 weights: Optional[np.ndarray] = None,
                 rescale: bool = False):
        self.space = space
        self.representation = representation
        self.rescale = rescale
        if representation == CONSTANT:
            self.actions = np.asarray(actions, dtype=float)
            self.size = self.actions.shape[0]
        elif representation == TABULAR:
            self.table = np.asarray(table, dtype=float)
            self.size = self.table.shape[1]
        elif representation == LINEAR_SPHERE:
            w = np.asarray(weights, dtype=float)
            norms = np.linalg.norm(w, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("linear-sphere weights must have unit norm")
            self.weights = w
            self.size = w.shape[0]
        else:
            raise ValueError(f"unknown representation: {representation!r}")
        if self.size < 1:
            raise ValueError("policy class must be nonempty")

    # -- constructors --------------------------------------------------

    @staticmethod
    def constant(space: ActionSpace, actions) -> "PolicyClass":
        return PolicyClass(space, CONSTANT, actions=actions)

    @staticmethod
    def tabular(space: ActionSpace, table) -> "PolicyClass":
        return PolicyClass(space, TABULAR, table=table)

    @staticmethod
    def linear_sphere(space: ActionSpace, weights,
                      rescale: bool = False) -> "PolicyClass":
        return PolicyClass(space, LINEAR_SPHERE, weights=weights,
                           rescale=rescale)

    @staticmethod
    def from_csv(space: ActionSpace, path: str) -> "PolicyClass":
        """Load a tabular class: rows = contexts, columns = policies."""
        with open(path, newline="") as f:
            rows = [[float(c) for c in row] for row in csv.reader(f) if row]
        return PolicyClass.tabular(space, np.asarray(rows))

    # -- evaluation ----------------------------------------------------

    def act(self, policy_index: int, x=None):
        if not 0 <= policy_index < self.size:
            raise IndexError("policy index out of range")
        if self.representation == CONSTANT:
            a = self.actions[policy_index]
        elif self.representation == TABULAR:
            a = self.table[int(x), policy_index]
        else:
            z = float(np.dot(self.weights[policy_index], np.asarray(x)))
            z = min(1.0, max(-1.0, z))
            a = (1.0 + z) / 2.0 if self.rescale else z
        return float(a) if np.ndim(a) == 0 else np.asarray(a, dtype=float)

    def actions_at(self, x=None) -> np.ndarray:
        """All policies' actions at context x, shape (|Pi|,) or (|Pi|, d)."""
        if self.representation == CONSTANT:
            return self.actions
        if self.representation == TABULAR:
            return self.table[int(x)]
        z = np.clip(self.weights @ np.asarray(x, dtype=float), -1.0, 1.0)
        return (1.0 + z) / 2.0 if self.rescale else z


class VersionSpace:
    """Subset of a policy class surviving elimination, by membership mask."""

    def __init__(self, pc: PolicyClass, mask: Optional[np.ndarray] = None,
                 m: int = 1):
        self.pc = pc
        self.mask = (np.ones(pc.size, dtype=bool) if mask is None
                     else np.asarray(mask, dtype=bool).copy())
        if not self.mask.any():
            raise ValueError("version space must be nonempty")
        self.m = m

    @property
    def indices(self) -> np.ndarray:
        return np.nonzero(self.mask)[0]

    def __len__(self) -> int:
        return int(self.mask.sum())


def projected_actions(subset: VersionSpace, x=None) -> np.ndarray:
    """Deduplicated actions of the surviving policies at context x."""
    acts = subset.pc.actions_at(x)[subset.mask]
    if acts.ndim == 1:
        return np.unique(acts)
    return np.unique(acts, axis=0)


def packing_number(space: ActionSpace, points, delta: float) -> int:
    """Size of a maximal greedy delta-packing of the given points.

    Points are sorted lexicographically, then added greedily whenever at
    distance >= delta from everything kept so far.  The result is maximal
    (nothing else can be added) but not necessarily maximum.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    if pts.ndim == 1:
        pts = pts[np.lexsort((pts,))]
    else:
        pts = pts[np.lexsort(pts.T[::-1])]
    kept: List = []
    for p in pts:
        if all(space.distance(p, q) >= delta for q in kept):
            kept.append(p)
    return len(kept)


def exact_max_packing(space: ActionSpace, points, delta: float) -> int:
    """Brute-force maximum delta-packing; only for <= 20 points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if space.d > 1 else pts
    n = len(pts)
    if n > 20:
        raise ValueError("brute-force packing limited to 20 points")
    ok = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            ok[i, j] = i == j or space.distance(pts[i], pts[j]) >= delta

    best = 0

    def grow(chosen: List[int], candidates: List[int]) -> None:
        nonlocal best
        best = max(best, len(chosen))
        for k, c in enumerate(candidates):
            if len(chosen) + len(candidates) - k <= best:
                return
            if all(ok[c, d] for d in chosen):
                grow(chosen + [c], candidates[k + 1:])

    grow([], list(range(n)))
    return best


def union_ball_volume(subset: VersionSpace, x=None, h: float = 0.1,
                      n_mc: int = 10 ** 5,
                      rng: Optional[np.random.Generator] = None) -> float:
    """nu of the union of h-balls at the surviving policies' actions.

    Exact interval arithmetic on 1-d spaces and the finite grid; Monte Carlo
    with n_mc uniform draws on the cube for d >= 2 (standard error of the
    estimate is sqrt(p(1-p)/n_mc)).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    space = subset.pc.space
    acts = subset.pc.actions_at(x)[subset.mask]
    if space.kind == GRID:
        pts = space.grid_points()
        member = np.zeros(len(pts), dtype=bool)
        for a in np.atleast_1d(acts):
            member |= np.abs(pts - a) <= h + 1e-12
        return float(member.sum()) / space.M
    if space.kind == RING or space.d == 1:
        intervals = []
        for a in np.atleast_1d(acts):
            intervals.extend(space.ball_intervals(a, h))
        intervals.sort()
        total, cur_lo, cur_hi = 0.0, None, None
        for lo, hi in intervals:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        if cur_hi is not None:
            total += cur_hi - cur_lo
        return min(1.0, total)
    rng = rng or np.random.default_rng(0)
    draws = rng.uniform(0.0, 1.0, size=(n_mc, space.d))
    acts2 = np.atleast_2d(acts)
    hit = np.zeros(n_mc, dtype=bool)
    for a in acts2:
        hit |= np.max(np.abs(draws - a), axis=1) <= h
    return float(hit.mean())
