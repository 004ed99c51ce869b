"""Metric action spaces with uniform base measures.

Three kinds are supported:

* ``Ring``: the unit circle represented as [0,1) with wraparound distance
  min(|a-b|, 1-|a-b|).  Diameter 1/2.
* ``Cube``: [0,1]^d with the sup norm.  Diameter 1.
* ``FiniteGrid``: the M points {i/M : i = 1..M} with |a-b| distance and the
  uniform counting measure.

The base measure is always a probability measure, so ball volumes live in
(0, 1].
"""

from __future__ import annotations

from typing import Iterable, List, Tuple

import numpy as np

RING = "ring"
CUBE = "cube"
GRID = "grid"


class ActionSpace:
    """A metric space of actions plus ball geometry helpers.

    Immutable after construction; safe to share between threads.
    """

    def __init__(self, kind: str, d: int = 1, M: int = 0):
        if kind not in (RING, CUBE, GRID):
            raise ValueError(f"unknown action space kind: {kind!r}")
        if kind == CUBE and d < 1:
            raise ValueError("cube dimension must be >= 1")
        if kind == GRID and M < 1:
            raise ValueError("grid size must be >= 1")
        self.kind = kind
        self.d = d if kind == CUBE else 1
        self.M = M if kind == GRID else 0

    # -- constructors -------------------------------------------------

    @staticmethod
    def ring() -> "ActionSpace":
        return ActionSpace(RING)

    @staticmethod
    def cube(d: int = 1) -> "ActionSpace":
        return ActionSpace(CUBE, d=d)

    @staticmethod
    def grid(M: int) -> "ActionSpace":
        return ActionSpace(GRID, M=M)

    def __repr__(self) -> str:
        if self.kind == RING:
            return "ActionSpace(ring)"
        if self.kind == CUBE:
            return f"ActionSpace(cube, d={self.d})"
        return f"ActionSpace(grid, M={self.M})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ActionSpace)
            and self.kind == other.kind
            and self.d == other.d
            and self.M == other.M
        )

    # -- geometry ------------------------------------------------------

    @property
    def diameter(self) -> float:
        if self.kind == RING:
            return 0.5
        if self.kind == CUBE:
            return 1.0
        return (self.M - 1) / self.M if self.M > 1 else 0.0

    def grid_points(self) -> np.ndarray:
        if self.kind != GRID:
            raise ValueError("grid_points only defined for FiniteGrid")
        return np.arange(1, self.M + 1) / self.M

    def _as_array(self, a) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(a, dtype=float))
        if arr.shape[-1] != self.d:
            raise ValueError(
                f"action has dimension {arr.shape[-1]}, space has {self.d}"
            )
        return arr

    def contains(self, a) -> bool:
        arr = self._as_array(a)
        if self.kind == RING:
            return bool(np.all(arr >= 0) and np.all(arr < 1))
        if self.kind == CUBE:
            return bool(np.all(arr >= 0) and np.all(arr <= 1))
        i = np.round(arr * self.M)
        return bool(
            np.all(np.abs(arr * self.M - i) < 1e-12)
            and np.all(i >= 1)
            and np.all(i <= self.M)
        )

    def distance(self, a, b) -> float:
        """Metric distance between two actions."""
        x = self._as_array(a)
        y = self._as_array(b)
        if self.kind == RING:
            dd = abs(float(x[0]) - float(y[0]))
            return min(dd, 1.0 - dd)
        if self.kind == CUBE:
            return float(np.max(np.abs(x - y)))
        return abs(float(x[0]) - float(y[0]))

    def distances(self, centers: np.ndarray, a) -> np.ndarray:
        """Vectorized distance from many centers to one action.

        ``centers`` has shape (n,) for 1-d kinds or (n, d) for the cube.
        """
        arr = self._as_array(a)
        c = np.asarray(centers, dtype=float)
        if self.kind == RING:
            dd = np.abs(c - arr[0])
            return np.minimum(dd, 1.0 - dd)
        if self.kind == CUBE:
            c2 = c.reshape(-1, self.d)
            return np.max(np.abs(c2 - arr), axis=1)
        return np.abs(c - arr[0])

    def ball_volume(self, a, r: float) -> float:
        """Base measure of the closed ball B(a, r)."""
        if r < 0:
            raise ValueError("radius must be nonnegative")
        arr = self._as_array(a)
        if self.kind == RING:
            return min(1.0, 2.0 * r)
        if self.kind == CUBE:
            lo = np.maximum(0.0, arr - r)
            hi = np.minimum(1.0, arr + r)
            return float(np.prod(hi - lo))
        pts = self.grid_points()
        return float(np.sum(np.abs(pts - arr[0]) <= r + 1e-12)) / self.M

    def ball_volumes(self, centers: np.ndarray, r: float) -> np.ndarray:
        """Vectorized ball_volume over an array of centers."""
        if r < 0:
            raise ValueError("radius must be nonnegative")
        c = np.asarray(centers, dtype=float)
        if self.kind == RING:
            return np.full(c.shape[0] if c.ndim else 1, min(1.0, 2.0 * r))
        if self.kind == CUBE:
            c2 = c.reshape(-1, self.d)
            lo = np.maximum(0.0, c2 - r)
            hi = np.minimum(1.0, c2 + r)
            return np.prod(hi - lo, axis=1)
        pts = self.grid_points()
        c1 = c.reshape(-1, 1)
        return np.sum(np.abs(pts[None, :] - c1) <= r + 1e-12, axis=1) / self.M

    def ball_intervals(self, a, r: float) -> List[Tuple[float, float]]:
        """The ball B(a, r) as a list of disjoint subintervals of [0, 1].

        Only defined for 1-d continuous kinds (ring and 1-d cube); the ring
        ball may wrap around 0 and then splits into two pieces.
        """
        if self.kind == GRID or (self.kind == CUBE and self.d > 1):
            raise ValueError("ball_intervals needs a 1-d continuous space")
        c = float(self._as_array(a)[0])
        if self.kind == CUBE:
            return [(max(0.0, c - r), min(1.0, c + r))]
        if 2.0 * r >= 1.0:
            return [(0.0, 1.0)]
        lo, hi = c - r, c + r
        if lo < 0.0:
            return [(0.0, hi), (lo + 1.0, 1.0)]
        if hi > 1.0:
            return [(0.0, hi - 1.0), (lo, 1.0)]
        return [(lo, hi)]

    def sample_uniform(self, rng: np.random.Generator, size: int = None):
        """Draw from the base measure nu."""
        n = 1 if size is None else size
        if self.kind == RING:
            out = rng.uniform(0.0, 1.0, size=n)
        elif self.kind == CUBE:
            out = rng.uniform(0.0, 1.0, size=(n, self.d))
            if self.d == 1:
                out = out[:, 0]
        else:
            out = rng.integers(1, self.M + 1, size=n) / self.M
        if size is None:
            return float(out[0]) if out.ndim == 1 else out[0]
        return out

    def sample_ball(self, center, r: float, rng: np.random.Generator,
                    size: int = None):
        """Draw uniformly (under nu) from the closed ball B(center, r)."""
        n = 1 if size is None else size
        if self.kind == RING:
            c0 = center if isinstance(center, float) else \
                float(self._as_array(center)[0])
            if 2.0 * r >= 1.0:
                out = rng.uniform(0.0, 1.0, size=n)
            else:
                out = np.mod(c0 + rng.uniform(-r, r, size=n), 1.0)
            if size is None:
                return float(out[0])
            return out
        arr = self._as_array(center)
        if self.kind == CUBE:
            lo = np.maximum(0.0, arr - r)
            hi = np.minimum(1.0, arr + r)
            out = rng.uniform(lo, hi, size=(n, self.d))
            if self.d == 1:
                out = out[:, 0]
        else:
            pts = self.grid_points()
            members = pts[np.abs(pts - arr[0]) <= r + 1e-12]
            out = members[rng.integers(0, len(members), size=n)]
        if size is None:
            return float(out[0]) if out.ndim == 1 else out[0]
        return out

    # -- diagnostics ---------------------------------------------------

    def estimate_uniformity(self, hs: Iterable[float],
                            grid_resolution: int = 64) -> float:
        """Grid estimate of sup_{a,a',h} nu(B(a,2h)) / nu(B(a',h)).

        A lower bound on the true constant (the sup is only taken over the
        grid of centers).
        """
        hs = list(hs)
        if not hs:
            raise ValueError("hs must be nonempty")
        if any(h <= 0 for h in hs):
            raise ValueError("bandwidths must be positive")
        if grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")
        if self.kind == GRID:
            centers = self.grid_points()
        elif self.kind == RING:
            centers = np.linspace(0.0, 1.0, grid_resolution, endpoint=False)
        else:
            axis = np.linspace(0.0, 1.0, grid_resolution)
            if self.d == 1:
                centers = axis
            else:
                mesh = np.meshgrid(*([axis] * self.d))
                centers = np.stack([m.ravel() for m in mesh], axis=1)
        best = 0.0
        for h in hs:
            big = self.ball_volumes(centers, 2.0 * h)
            small = self.ball_volumes(centers, h)
            best = max(best, float(np.max(big) / np.min(small)))
        return best
