"""Loss generators: stochastic environments, named instances, benchmarks."""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .kernels import RectKernel
from .losses import (BernoulliRealization, CallableLoss, LossFunction,
                     PiecewiseConstantLoss, PiecewiseLinearLoss)
from .policies import PolicyClass
from .spaces import ActionSpace

BERNOULLI = "bernoulli"
DETERMINISTIC = "deterministic"
GAUSSIAN = "gaussian"


class FiniteContexts:
    """Enumerated context set with known weights (exact expectations)."""

    def __init__(self, values: Sequence, weights: Optional[Sequence[float]] = None):
        self.values = list(values)
        n = len(self.values)
        self.weights = (np.full(n, 1.0 / n) if weights is None
                        else np.asarray(weights, dtype=float))
        if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise ValueError("weights must form a probability vector")

    def sample(self, rng: np.random.Generator):
        if len(self.values) == 1:
            return self.values[0]
        i = min(int(np.searchsorted(np.cumsum(self.weights), rng.random())),
                len(self.values) - 1)
        return self.values[i]

    def panel(self, n_ctx: int, rng: np.random.Generator):
        return self.values, self.weights


class SamplerContexts:
    """Context sampler; expectations are Monte Carlo over a fixed panel."""

    def __init__(self, draw: Callable[[np.random.Generator], object]):
        self.draw = draw

    def sample(self, rng: np.random.Generator):
        return self.draw(rng)

    def panel(self, n_ctx: int, rng: np.random.Generator):
        vals = [self.draw(rng) for _ in range(n_ctx)]
        return vals, np.full(n_ctx, 1.0 / n_ctx)


class _LazyNoisyRealization(LossFunction):
    """Point-evaluated noisy realization with per-point caching."""

    def __init__(self, mean: LossFunction, rng: np.random.Generator,
                 sigma: float):
        self.mean = mean
        self.rng = rng
        self.sigma = sigma
        self._cache: Dict = {}

    def _one(self, a) -> float:
        key = float(a) if np.ndim(a) == 0 else tuple(np.asarray(a).ravel())
        if key not in self._cache:
            mu = float(np.atleast_1d(self.mean(a))[0])
            self._cache[key] = float(np.clip(
                mu + self.sigma * self.rng.standard_normal(), 0.0, 1.0))
        return self._cache[key]

    def __call__(self, a):
        arr = np.asarray(a, dtype=float)
        if arr.ndim == 0:
            return self._one(arr)
        return np.array([self._one(v) for v in arr])


class StochasticEnv:
    """i.i.d. (context, loss) generator with closed-form mean losses.

    ``mean_loss_of`` maps a context to a LossFunction in [0,1].  Noise models:
    Bernoulli (exactly mean-preserving), Deterministic, and additive clipped
    Gaussian (mean-preserving only away from the boundary; documented bias).
    """

    def __init__(self, space: ActionSpace, contexts,
                 mean_loss_of: Callable[[object], LossFunction],
                 noise: str = DETERMINISTIC, sigma: float = 0.1,
                 lipschitz_constant: Optional[float] = None,
                 name: str = "custom", metadata: Optional[Dict] = None):
        if noise not in (BERNOULLI, DETERMINISTIC, GAUSSIAN):
            raise ValueError(f"unknown noise model: {noise!r}")
        self.space = space
        self.contexts = contexts
        self.mean_loss_of = mean_loss_of
        self.noise = noise
        self.sigma = sigma
        self.lipschitz_constant = lipschitz_constant
        self.name = name
        self.metadata = metadata or {}

    # -- sampling -------------------------------------------------------

    def draw_round(self, rng: np.random.Generator):
        x = self.contexts.sample(rng)
        mean = self.mean_loss_of(x)
        if self.noise == DETERMINISTIC:
            return x, mean
        if self.noise == BERNOULLI:
            if isinstance(mean, PiecewiseConstantLoss):
                vals = (rng.random(len(mean.values)) < mean.values).astype(float)
                return x, PiecewiseConstantLoss(mean.breaks, vals)
            return x, BernoulliRealization(mean, rng)
        return x, _LazyNoisyRealization(mean, rng, self.sigma)

    def realize_at(self, x, a, rng: np.random.Generator) -> float:
        """Realized loss at a single action (fast path for run loops).

        Distributionally identical to drawing the full realized loss and
        evaluating it once at ``a``.
        """
        mv = self.mean_loss_of(x)(a)
        mu = mv if isinstance(mv, float) else float(np.atleast_1d(mv)[0])
        if self.noise == DETERMINISTIC:
            return mu
        if self.noise == BERNOULLI:
            return float(rng.random() < mu)
        return float(np.clip(mu + self.sigma * rng.standard_normal(), 0.0, 1.0))

    # -- benchmarks -------------------------------------------------------

    def context_panel(self, n_ctx: int = 2000,
                      rng: Optional[np.random.Generator] = None):
        rng = rng or np.random.default_rng(0)
        return self.contexts.panel(n_ctx, rng)

    def smoothed_policy_losses(self, pc: PolicyClass, h: float,
                               n_ctx: int = 2000,
                               rng: Optional[np.random.Generator] = None,
                               panel=None) -> np.ndarray:
        """lambda_h(pi) for every policy (h = 0 gives unsmoothed values)."""
        kern = RectKernel(self.space, h)
        xs, ws = panel if panel is not None else self.context_panel(n_ctx, rng)
        out = np.zeros(pc.size)
        for x, w in zip(xs, ws):
            mean = self.mean_loss_of(x)
            acts = np.atleast_1d(pc.actions_at(x))
            if acts.ndim == 1 and pc.space.d > 1:
                acts = acts[None, :]
            for i in range(pc.size):
                a = acts[i] if acts.ndim > 1 else float(acts[i])
                out[i] += w * kern.smoothed_loss(a, mean)
        return out

    def smoothed_benchmark(self, pc: PolicyClass, h: float,
                           n_ctx: int = 2000,
                           rng: Optional[np.random.Generator] = None,
                           panel=None) -> Tuple[float, int]:
        vals = self.smoothed_policy_losses(pc, h, n_ctx=n_ctx, rng=rng,
                                           panel=panel)
        # ties (within float jitter) resolve to the lowest policy index
        idx = int(np.argmax(vals <= vals.min() + 1e-12))
        return float(vals[idx]), idx


class AdversarialSequence:
    """Pre-generated oblivious sequence of (context, loss) pairs."""

    def __init__(self, space: ActionSpace, rounds: List[Tuple[object, LossFunction]]):
        self.space = space
        self.rounds = rounds
        self._t = 0

    def draw_round(self, rng: np.random.Generator):
        x, loss = self.rounds[self._t]
        self._t += 1
        return x, loss

    def benchmark(self, pc: PolicyClass, h: float) -> Tuple[float, int]:
        """min over policies of the average smoothed loss of the sequence."""
        kern = RectKernel(self.space, h)
        totals = np.zeros(pc.size)
        for x, loss in self.rounds:
            acts = np.atleast_1d(pc.actions_at(x))
            for i in range(pc.size):
                a = acts[i] if acts.ndim > 1 else float(acts[i])
                totals[i] += kern.smoothed_loss(a, loss)
        totals /= len(self.rounds)
        idx = int(np.argmin(totals))
        return float(totals[idx]), idx


# ---------------------------------------------------------------------------
# named instances
# ---------------------------------------------------------------------------


def _single_context(space: ActionSpace) -> FiniteContexts:
    return FiniteContexts([None], [1.0])


def _discontinuous(ap: float = 0.7, noise: str = BERNOULLI) -> StochasticEnv:
    """V-shaped mean loss on the ring with an isolated dip at a single point.

    lambda0(a) = 1/4 + 1.5 * ringdist(a, 1/2) except lambda0(ap) = 0.1.
    The point dip has measure zero, so every smoothed benchmark sits at the
    center of the V: lambda_h(1/2) = 1/4 + 0.75 h.
    """
    space = ActionSpace.ring()
    mean = PiecewiseLinearLoss([0.0, 0.5, 1.0], [1.0, 0.25, 1.0],
                               special_points={ap: 0.1})
    return StochasticEnv(
        space, _single_context(space), lambda x: mean, noise=noise,
        name="discontinuous",
        metadata={"ap": ap, "astar_h": 0.5,
                  "benchmark_of_h": lambda h: 0.25 + 0.75 * h})


def _absolute(astar: float = 0.5, noise: str = BERNOULLI) -> StochasticEnv:
    """lambda(a) = |a - astar| on the ring; 1-Lipschitz, benign zooming."""
    if not 0.0 < astar < 1.0:
        raise ValueError("astar must be interior")
    space = ActionSpace.ring()
    mean = PiecewiseLinearLoss([0.0, astar, 1.0], [astar, 0.0, 1.0 - astar])
    return StochasticEnv(
        space, _single_context(space), lambda x: mean, noise=noise,
        lipschitz_constant=1.0, name="absolute",
        metadata={"astar": astar})


def _linear_sphere(d_ctx: int = 2, wstar: Optional[Sequence[float]] = None,
                   L: float = 4.0, L0: float = 1.0,
                   noise: str = BERNOULLI) -> StochasticEnv:
    """Linear policies on the sphere; mean loss is a clipped V around <w*,x>.

    Actions live on [0,1] via the affine map u = (1+z)/2 of the raw value
    z in [-1,1]; the mean loss in u-coordinates is f(2u - 1 - <w*,x>) with
    f(t) = min(1, 1/4 + L0|t| + (L - L0)(|t| - 1/4)_+), so the effective
    Lipschitz constant on the unit interval is 2L.
    """
    if L < L0 or L0 <= 0:
        raise ValueError("need L >= L0 > 0")
    w = np.zeros(d_ctx)
    w[0] = 1.0
    wstar = np.asarray(wstar, dtype=float) if wstar is not None else w
    wstar = wstar / np.linalg.norm(wstar)
    space = ActionSpace.cube(1)

    def f(t: np.ndarray) -> np.ndarray:
        t = np.abs(t)
        return np.minimum(1.0, 0.25 + L0 * t + (L - L0) * np.maximum(0.0, t - 0.25))

    def mean_loss_of(x) -> PiecewiseLinearLoss:
        zstar = float(np.clip(np.dot(wstar, x), -1.0, 1.0))
        # kinks of t -> f(t - zstar) mapped into u = (1 + t)/2
        t_sat = 0.75 / L0 if 0.75 / L0 <= 0.25 else 0.25 + 0.5 / L
        kinks_t = [zstar - t_sat, zstar - 0.25, zstar, zstar + 0.25,
                   zstar + t_sat]
        us = sorted({0.0, 1.0, *((1.0 + t) / 2.0 for t in kinks_t
                                 if -1.0 < t < 1.0)})
        knots = [float(f(np.array(2.0 * u - 1.0 - zstar))) for u in us]
        return PiecewiseLinearLoss(us, knots)

    def draw_ctx(rng: np.random.Generator):
        v = rng.standard_normal(d_ctx)
        return v / np.linalg.norm(v)

    return StochasticEnv(
        space, SamplerContexts(draw_ctx), mean_loss_of, noise=noise,
        lipschitz_constant=2.0 * L, name="linear_sphere",
        metadata={"wstar": wstar, "L": L, "L0": L0, "d_ctx": d_ctx})


def _needle_h(h: float = 0.125, R: float = 10.0, d: int = 1, index: int = 0,
              noise: str = BERNOULLI) -> StochasticEnv:
    """Hidden-needle field for stress-testing bandwidth-adaptive learners.

    N disjoint candidate pockets of radius h sit in [0, 1/2]; the safe
    half S = [1/2, 1] gives 1/2 - Delta/2, the selected pocket (index >= 1)
    gives 1/2 - Delta, everything else 1/2.  Delta = min(N / (40 R), 1/4)
    where R is the opposing learner's regret budget at smoothing 1/4.
    """
    if not 0 < h <= 0.25:
        raise ValueError("needle_h needs h in (0, 1/4]")
    N = int(math.floor(1.0 / (4.0 * h))) ** d
    delta = min(N / (40.0 * R), 0.25)
    if d == 1:
        cells = np.array([h * (2 * s - 1) for s in range(1, N + 1)])
    else:
        side = int(round(N ** (1.0 / d)))
        axes = [np.array([h * (2 * s - 1) for s in range(1, side + 1)])] * d
        mesh = np.meshgrid(*axes)
        cells = np.stack([m.ravel() for m in mesh], axis=1)
    if not 0 <= index <= N:
        raise ValueError("needle index out of range")
    space = ActionSpace.cube(d)
    if d == 1:
        breaks = [0.0, 0.5, 1.0]
        vals = [0.5, 0.5 - delta / 2.0]
        if index >= 1:
            c = cells[index - 1]
            lo, hi = c - h, c + h
            breaks = sorted({0.0, lo, hi, 0.5, 1.0})
            vals = []
            for b0, b1 in zip(breaks[:-1], breaks[1:]):
                mid = (b0 + b1) / 2.0
                if lo <= mid <= hi:
                    vals.append(0.5 - delta)
                elif mid >= 0.5:
                    vals.append(0.5 - delta / 2.0)
                else:
                    vals.append(0.5)
        mean = PiecewiseConstantLoss(breaks, vals)
    else:
        ci = cells[index - 1] if index >= 1 else None

        def phi(a):
            a = np.asarray(a, dtype=float).reshape(-1, d)
            out = np.full(a.shape[0], 0.5)
            out[np.min(a, axis=1) >= 0.5] = 0.5 - delta / 2.0
            if ci is not None:
                out[np.max(np.abs(a - ci), axis=1) <= h] = 0.5 - delta
            return out

        mean = CallableLoss(phi, d=d)
    return StochasticEnv(
        space, _single_context(space), lambda x: mean, noise=noise,
        name="needle_h",
        metadata={"h": h, "R": R, "delta": delta, "N": N, "cells": cells,
                  "index": index, "c0": np.full(d, 0.75) if d > 1 else 0.75})


def _needle_L(L: float = 4.0, R: float = 10.0, d: int = 1, index: int = 0,
              noise: str = BERNOULLI) -> StochasticEnv:
    """Hidden-tent field for stress-testing Lipschitz-adaptive learners.

    A shallow 1-Lipschitz tent of depth Delta/2 at 3/4 is always present;
    policy index >= 1 adds an L-Lipschitz tent of depth Delta at one of N
    pockets in [0, 1/2].  Delta = min((L^d / (40 R 8^d))^(1/(d+1)), 1/8).
    """
    if d != 1:
        raise ValueError("needle_L is built for d = 1")
    if L < 1:
        raise ValueError("needle_L needs L >= 1")
    delta = min((L / (40.0 * R * 8.0)) ** 0.5, 0.125)
    N = int(math.floor(L / (4.0 * delta)))
    cells = np.array([(delta / L) * (2 * s - 1) for s in range(1, N + 1)])
    if not 0 <= index <= N:
        raise ValueError("needle index out of range")
    space = ActionSpace.cube(1)
    c0 = 0.75
    breaks = {0.0, 1.0, c0, c0 - delta / 2.0, c0 + delta / 2.0}
    if index >= 1:
        ci = float(cells[index - 1])
        breaks |= {ci, ci - delta / L, ci + delta / L}
    bs = sorted(b for b in breaks if 0.0 <= b <= 1.0)

    def phi(a: float) -> float:
        v = 0.5 - max(0.0, delta / 2.0 - abs(a - c0))
        if index >= 1:
            v -= max(0.0, delta - L * abs(a - float(cells[index - 1])))
        return v

    mean = PiecewiseLinearLoss(bs, [phi(b) for b in bs])
    return StochasticEnv(
        space, _single_context(space), lambda x: mean, noise=noise,
        lipschitz_constant=L if index >= 1 else 1.0, name="needle_L",
        metadata={"L": L, "R": R, "delta": delta, "N": N, "cells": cells,
                  "index": index, "c0": c0})


_NAMED = {
    "discontinuous": _discontinuous,
    "absolute": _absolute,
    "linear_sphere": _linear_sphere,
    "needle_h": _needle_h,
    "needle_L": _needle_L,
}


def make_named_instance(name: str, **params) -> StochasticEnv:
    if name not in _NAMED:
        raise ValueError(f"unknown instance name: {name!r}")
    return _NAMED[name](**params)
