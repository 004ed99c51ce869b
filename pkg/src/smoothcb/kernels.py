"""Rectangular smoothing kernels and the discretized bandwidth grid.

A kernel with bandwidth h turns an action a into the uniform distribution
over the metric ball B(a, h).  Its density sup, kappa, acts as the effective
number of actions.  The bandwidth grid holds the multiples of 1/D that the
snapping rule maps arbitrary bandwidths onto; it is kept virtual because its
cardinality grows like D = d * 2^(d+2) * T^2.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy import integrate as _sciint

from .losses import (CallableLoss, LossFunction, PiecewiseConstantLoss,
                     PiecewiseLinearLoss, SeparableProductLoss)
from .spaces import CUBE, GRID, RING, ActionSpace


class RectKernel:
    """Uniform-over-ball smoothing kernel on an action space.

    h = 0 is a Dirac diagnostic kernel: density queries error out and
    smoothed_loss returns the loss at the center.  Algorithms reject h = 0.
    """

    def __init__(self, space: ActionSpace, h: float):
        if h < 0 or h > 1:
            raise ValueError("bandwidth must lie in [0, 1]")
        self.space = space
        self.h = float(h)

    def __repr__(self) -> str:
        return f"RectKernel({self.space!r}, h={self.h})"

    def density(self, center, a) -> float:
        if self.h == 0.0:
            raise ValueError("Dirac kernel has no density")
        if self.space.distance(center, a) <= self.h:
            return 1.0 / self.space.ball_volume(center, self.h)
        return 0.0

    def densities(self, centers: np.ndarray, a) -> np.ndarray:
        """Vectorized density over many centers at a single action."""
        if self.h == 0.0:
            raise ValueError("Dirac kernel has no density")
        if self.space.kind == RING:
            aa = float(a) if isinstance(a, float) else \
                float(np.asarray(a).reshape(-1)[0])
            dd = np.abs(np.asarray(centers, dtype=float) - aa)
            np.minimum(dd, 1.0 - dd, out=dd)
            return np.where(dd <= self.h, 1.0 / min(1.0, 2.0 * self.h), 0.0)
        dist = self.space.distances(centers, a)
        vols = self.space.ball_volumes(centers, self.h)
        tol = 1e-12 if self.space.kind == GRID else 0.0
        return np.where(dist <= self.h + tol, 1.0 / vols, 0.0)

    def kappa(self) -> float:
        """sup over centers and points of the kernel density."""
        if self.h == 0.0:
            return math.inf
        sp = self.space
        if sp.kind == RING:
            return 1.0 / min(1.0, 2.0 * self.h)
        if sp.kind == CUBE:
            return min(1.0, self.h) ** (-sp.d)
        pts = sp.grid_points()
        counts = np.sum(
            np.abs(pts[:, None] - pts[None, :]) <= self.h + 1e-12, axis=1)
        return float(sp.M / counts.min())

    def sample(self, center, rng: np.random.Generator, size: Optional[int] = None):
        if self.h == 0.0:
            return center if size is None else np.repeat(
                np.atleast_1d(center)[None, :] if self.space.d > 1
                else np.atleast_1d(center), size, axis=0)
        return self.space.sample_ball(center, self.h, rng, size=size)

    def smoothed_loss(self, center, loss: LossFunction) -> float:
        """<K_h(center), loss>: the mean loss of a uniform ball draw."""
        if self.h == 0.0:
            return float(np.atleast_1d(loss(center))[0])
        sp = self.space
        vol = sp.ball_volume(center, self.h)
        if sp.kind == GRID:
            pts = sp.grid_points()
            members = pts[np.abs(pts - float(np.atleast_1d(center)[0]))
                          <= self.h + 1e-12]
            val = float(np.mean(np.atleast_1d(loss(members))))
        elif sp.kind == CUBE and sp.d > 1:
            c = np.atleast_1d(np.asarray(center, dtype=float))
            lo = np.maximum(0.0, c - self.h)
            hi = np.minimum(1.0, c + self.h)
            if isinstance(loss, SeparableProductLoss):
                val = loss.integrate_box(lo, hi) / vol
            else:
                res, _ = _sciint.nquad(
                    lambda *a: float(np.atleast_1d(loss(np.array(a)))[0]),
                    list(zip(lo, hi)), opts={"epsabs": 1e-9})
                val = res / vol
        else:
            val = loss.integrate_intervals(
                sp.ball_intervals(center, self.h)) / vol
        if val < -1e-9 or val > 1.0 + 1e-9:
            raise ValueError("loss violated its [0,1] range contract")
        return min(1.0, max(0.0, val))


class BandwidthGrid:
    """Multiples of 1/D with kappa between 1 and 2^(ceil(log2 T)+1).

    D = d * 2^(d+2) * T^2.  The member list is materialized only when small;
    membership, extremes, and snapping work without materialization.
    """

    MATERIALIZE_CAP = 10 ** 6

    def __init__(self, d: int, T: int):
        if T < 2:
            raise ValueError("horizon must be >= 2")
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.d = d
        self.T = T
        self.D = d * 2 ** (d + 2) * T * T
        self.kappa_cap = 2.0 ** (math.ceil(math.log2(T)) + 1)
        # smallest multiple of 1/D with h^(-d) <= kappa_cap
        self.min_h = math.ceil(self.D * self.kappa_cap ** (-1.0 / d)) / self.D
        self.max_h = 1.0

    def contains(self, h: float) -> bool:
        k = h * self.D
        if abs(k - round(k)) > 1e-9:
            return False
        return self.min_h - 1e-15 <= h <= 1.0 and h ** (-self.d) >= 1.0 - 1e-12

    def __len__(self) -> int:
        return self.D - math.ceil(self.D * self.kappa_cap ** (-1.0 / self.d)) + 1

    @property
    def H(self) -> np.ndarray:
        n = len(self)
        if n > self.MATERIALIZE_CAP:
            raise ValueError(
                f"bandwidth grid has {n} members; too large to materialize")
        start = round(self.min_h * self.D)
        return np.arange(start, self.D + 1) / self.D

    def snap(self, h: float) -> float:
        """Largest grid multiple below h; keeps kappa within a factor 2.

        Requires h >= T^(-1/d) (below that the caller should fall back to
        the trivial regret bound).
        """
        if h < self.T ** (-1.0 / self.d) - 1e-12:
            raise ValueError("bandwidth below T^(-1/d); snapping undefined")
        snapped = math.floor(h * self.D + 1e-12) / self.D
        snapped = min(snapped, 1.0)
        return snapped


def snap_bandwidth(grid: BandwidthGrid, h: float) -> float:
    return grid.snap(h)
