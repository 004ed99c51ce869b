"""Epoch-based policy elimination with minimax exploration.

Each epoch solves a convex program for the exploration distribution over the
surviving policies, plays a mixture of uniform exploration and smoothed
policy draws, estimates every survivor's smoothed loss by importance
weighting with median-of-means aggregation across batches, and prunes
policies that fall behind the empirical best by more than the epoch radius
allows.

Two schedules: the fixed-bandwidth variant keeps h_m = h and halves the
radius r_m = 2^-m; the Lipschitz variant halves the bandwidth h_m = 2^-m
with radius r_m = L * 2^-m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .environments import (BERNOULLI, DETERMINISTIC, GAUSSIAN, FiniteContexts,
                           StochasticEnv)
from .estimators import IWSample, iw_estimate, median_of_means
from .kernels import RectKernel
from .policies import PolicyClass, VersionSpace, union_ball_volume
from .spaces import CUBE, GRID, RING

VARIANT_S = "s"
VARIANT_L = "l"


class SolverFailure(RuntimeError):
    """Raised when the exploration program misses its certificate."""

    def __init__(self, value: float, target: float):
        super().__init__(
            f"exploration solver reached {value:.6g} > certificate {target:.6g}")
        self.value = value
        self.target = target


@dataclass
class ElimConfig:
    variant: str  # "s" (fixed bandwidth) or "l" (Lipschitz)
    T: int
    h: Optional[float] = None
    L: Optional[float] = None
    tol: float = 1e-3
    n_ctx: int = 2000
    iter_cap: int = 5000

    def __post_init__(self):
        if self.variant not in (VARIANT_S, VARIANT_L):
            raise ValueError("variant must be 's' or 'l'")
        if self.variant == VARIANT_S and not (self.h and 0 < self.h <= 1):
            raise ValueError("s-variant needs h in (0,1]")
        if self.variant == VARIANT_L and not (self.L and self.L >= 1):
            raise ValueError("l-variant needs L >= 1")
        if self.T < 2:
            raise ValueError("horizon must be >= 2")

    def delta_T(self, n_policies: int) -> int:
        """Batch count: 5 * ceil(ln(T * |Pi| * log2 T))."""
        return 5 * math.ceil(math.log(self.T * n_policies * math.log2(self.T)))


@dataclass
class EpochState:
    m: int
    vs: VersionSpace
    h_m: float
    r_m: float
    mu_m: float
    V_m: float
    kappa: float
    tilde_n_m: int
    n_m: int
    Q: np.ndarray  # over the survivors, in support order
    solver_value: float
    solver_iters: int


# ---------------------------------------------------------------------------
# exploration program
# ---------------------------------------------------------------------------


class _ContextGeometry:
    """Per-context piecewise structure of the smoothing mixture.

    Partitions the space into segments on which every survivor's kernel
    density is constant, so integrals of functions of the mixture density
    are exact sums.  1-d spaces get exact segments; the cube in d >= 2 gets
    a Monte Carlo panel of 10^4 actions (documented bias).
    """

    N_MC = 10 ** 4

    def __init__(self, space, centers: np.ndarray, h: float,
                 rng: Optional[np.random.Generator] = None):
        self.space = space
        self.h = h
        self.centers = centers
        k = centers.shape[0]
        if space.kind == GRID:
            pts = space.grid_points()
            self.meas = np.full(space.M, 1.0 / space.M)
            self.A = np.abs(pts[None, :] - centers[:, None]) <= h + 1e-12
            self.mids = pts
        elif space.kind == RING or space.d == 1:
            cuts = {0.0, 1.0}
            for c in centers:
                for lo, hi in space.ball_intervals(c, h):
                    cuts.add(lo)
                    cuts.add(hi)
            bs = np.array(sorted(cuts))
            self.meas = np.diff(bs)
            mids = (bs[:-1] + bs[1:]) / 2.0
            keep = self.meas > 1e-15
            self.meas = self.meas[keep]
            self.mids = mids[keep]
            if space.kind == RING:
                dd = np.abs(centers[:, None] - self.mids[None, :])
                dist = np.minimum(dd, 1.0 - dd)
            else:
                dist = np.abs(centers[:, None] - self.mids[None, :])
            self.A = dist <= h
        else:
            rng = rng or np.random.default_rng(0)
            draws = rng.uniform(0.0, 1.0, size=(self.N_MC, space.d))
            self.meas = np.full(self.N_MC, 1.0 / self.N_MC)
            c2 = centers.reshape(k, 1, -1)
            dist = np.max(np.abs(c2 - draws[None, :, :]), axis=2)
            self.A = dist <= h
            self.mids = draws
        self.vols = space.ball_volumes(centers, h)
        # density of each survivor's kernel on each segment
        self.dens = self.A / self.vols[:, None]

    def mixture(self, Q: np.ndarray, mu: float) -> np.ndarray:
        return mu + (1.0 - mu) * (Q @ self.dens)

    def objective_terms(self, Q: np.ndarray, mu: float) -> np.ndarray:
        """E_{a ~ K_h(center_pi)}[1/q] for every survivor pi."""
        q = self.mixture(Q, mu)
        return (self.dens * self.meas[None, :]) @ (1.0 / q)



def solve_variance_program(
        pc: PolicyClass, vs: VersionSpace, h: float, mu: float,
        panel, tol: float = 1e-3, iter_cap: int = 5000,
        rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, float, int]:
    """Minimize max_pi E_x E_{a~K_h(pi(x))}[1/q(a|x)] over simplex weights Q.

    q(a|x) = mu + (1-mu) sum_j Q_j K_h(pi_j(x))(a).  Entropic mirror ascent
    toward the worst-off policy, with the exact max-pi objective evaluated
    each iteration; stops once the value reaches V/(1-mu)*(1+tol), the
    certified optimum bound.  Returns (Q, value at Q, iterations).  Raises
    SolverFailure when the cap is hit and the best value still exceeds
    V/(1-mu)*(1+10*tol).
    """
    if not 0.0 < mu <= 0.5:
        raise ValueError("mu must lie in (0, 1/2]")
    xs, ws = panel
    support = vs.indices
    k = len(support)
    space = pc.space
    kappa = RectKernel(space, h).kappa()
    geoms = []
    V = 0.0
    for x, w in zip(xs, ws):
        centers = np.atleast_1d(pc.actions_at(x))[support]
        geoms.append((w, _ContextGeometry(space, centers, h, rng=rng)))
        V += w * union_ball_volume(vs, x, h, rng=rng)
    target = V / (1.0 - mu) * (1.0 + tol)
    hard_target = V / (1.0 - mu) * (1.0 + 10.0 * tol)

    def terms_at(Q):
        terms = np.zeros(k)
        for w, g in geoms:
            terms += w * g.objective_terms(Q, mu)
        return terms

    # Self-play entropic ascent: weight flows toward the worst-off policy,
    # which raises the mixture density on its ball and lowers its term.  The
    # running average of the iterates is the certified solution; plain
    # subgradient descent on the max stalls when mu is small.
    Q = np.full(k, 1.0 / k)
    Q_sum = np.zeros(k)
    best_Q, best_val = Q.copy(), math.inf
    iters = 0
    for iters in range(1, iter_cap + 1):
        terms = terms_at(Q)
        value = float(terms.max())
        if value < best_val:
            best_val, best_Q = value, Q.copy()
        if value <= target:
            return Q, value, iters
        Q_sum += Q
        if iters % 10 == 0:
            Q_bar = Q_sum / iters
            val_bar = float(terms_at(Q_bar).max())
            if val_bar < best_val:
                best_val, best_Q = val_bar, Q_bar.copy()
            if val_bar <= target:
                return Q_bar, val_bar, iters
        eta = 0.5 / value
        logq = np.log(np.maximum(Q, 1e-300)) + eta * terms
        logq -= logq.max()
        Q = np.exp(logq)
        Q = Q / Q.sum()
    if best_val > hard_target:
        raise SolverFailure(best_val, hard_target)
    return best_Q, best_val, iters


# ---------------------------------------------------------------------------
# the algorithm
# ---------------------------------------------------------------------------


class SmoothPolicyElimination:

    def __init__(self, env: StochasticEnv, pc: PolicyClass,
                 config: ElimConfig):
        self.env = env
        self.pc = pc
        self.config = config
        self.delta_T = config.delta_T(pc.size)
        self.max_epochs = math.ceil(math.log2(config.T))

    def schedule(self, m: int) -> Tuple[float, float]:
        """(h_m, r_m) for epoch m (1-based)."""
        if self.config.variant == VARIANT_S:
            return self.config.h, 2.0 ** (-m)
        return 2.0 ** (-m), self.config.L * 2.0 ** (-m)

    # -- single-round interface (reference implementation) ---------------

    def start_epoch(self, m: int, vs: VersionSpace, panel,
                    rng: Optional[np.random.Generator] = None) -> EpochState:
        h_m, r_m = self.schedule(m)
        mu_m = min(0.5, r_m)
        xs, ws = panel
        V_m = sum(w * union_ball_volume(vs, x, h_m, rng=rng)
                  for x, w in zip(xs, ws))
        kappa = RectKernel(self.pc.space, h_m).kappa()
        Q, value, iters = solve_variance_program(
            self.pc, vs, h_m, mu_m, panel, tol=self.config.tol,
            iter_cap=self.config.iter_cap, rng=rng)
        tilde_n = math.ceil(320.0 * kappa * V_m / (r_m * r_m))
        return EpochState(m=m, vs=vs, h_m=h_m, r_m=r_m, mu_m=mu_m, V_m=V_m,
                          kappa=kappa, tilde_n_m=tilde_n,
                          n_m=tilde_n * self.delta_T, Q=Q,
                          solver_value=value, solver_iters=iters)

    def propensity(self, state: EpochState, x, a) -> float:
        kern = RectKernel(self.pc.space, state.h_m)
        centers = np.atleast_1d(self.pc.actions_at(x))[state.vs.indices]
        dens = kern.densities(centers, a)
        return float(state.mu_m + (1.0 - state.mu_m) * np.dot(state.Q, dens))

    def act(self, state: EpochState, x, rng: np.random.Generator):
        """One mixed-exploration draw; returns (action, propensity)."""
        space = self.pc.space
        if rng.random() < state.mu_m:
            a = space.sample_uniform(rng)
        else:
            j = int(rng.choice(len(state.Q), p=state.Q))
            center = self.pc.act(int(state.vs.indices[j]), x)
            a = space.sample_ball(center, state.h_m, rng)
        return a, self.propensity(state, x, a)

    def end_epoch(self, state: EpochState,
                  samples: Sequence[IWSample]) -> VersionSpace:
        """Median-of-means scores, threshold pruning, next version space."""
        if len(samples) != state.n_m:
            raise ValueError("end_epoch needs exactly n_m samples")
        kern = RectKernel(self.pc.space, state.h_m)
        support = state.vs.indices
        scores = np.empty(len(support))
        for out_i, pi in enumerate(support):
            ests = [iw_estimate(kern, self.pc, int(pi), s) for s in samples]
            scores[out_i] = median_of_means(ests, k=self.delta_T)
        return self._prune(state, scores)

    def _prune(self, state: EpochState, scores: np.ndarray) -> VersionSpace:
        thresh = scores.min() + 3.0 * state.r_m
        new_mask = np.zeros(self.pc.size, dtype=bool)
        new_mask[state.vs.indices[scores <= thresh]] = True
        return VersionSpace(self.pc, new_mask, m=state.m + 1)

    # -- full run (vectorized where the geometry allows) -----------------

    def run(self, rng: np.random.Generator,
            rng_env: Optional[np.random.Generator] = None) -> dict:
        """Full horizon; ``rng_env`` (defaults to ``rng``) drives contexts
        and loss noise so the environment stream is reproducible on its own.
        """
        cfg = self.config
        env = self.env
        T = cfg.T
        rng_env = rng_env or rng
        panel = env.context_panel(cfg.n_ctx, rng)
        vs = VersionSpace(self.pc)
        actions: List = []
        losses: List[np.ndarray] = []
        mean_losses: List[np.ndarray] = []
        epoch_rows = []
        t = 0
        m = 1
        state = None
        while t < T:
            if m <= self.max_epochs or state is None:
                state = self.start_epoch(min(m, self.max_epochs), vs, panel,
                                         rng=rng)
            n_play = min(state.n_m, T - t)
            a_arr, loss_arr, mean_arr, est = self._play_epoch(
                state, n_play, rng, rng_env)
            actions.append(a_arr)
            losses.append(loss_arr)
            mean_losses.append(mean_arr)
            full = n_play == state.n_m and m <= self.max_epochs
            epoch_rows.append({
                "m": state.m, "h_m": state.h_m, "r_m": state.r_m,
                "V_m": state.V_m, "survivors": len(state.vs),
                "n_m": state.n_m, "played": n_play,
                "solver_value": state.solver_value,
                "solver_iters": state.solver_iters,
                "eliminated": full,
            })
            t += n_play
            if full:
                scores = self._mom_scores(est)
                vs = self._prune(state, scores)
            m += 1
        return {
            "actions": np.concatenate(actions) if self.pc.space.d == 1
            else np.concatenate(actions, axis=0),
            "losses": np.concatenate(losses),
            "mean_losses": np.concatenate(mean_losses),
            "epochs": epoch_rows,
            "final_version_space": vs,
        }

    def _mom_scores(self, est: np.ndarray) -> np.ndarray:
        k, n = est.shape
        batch_means = est.reshape(k, self.delta_T, -1).mean(axis=2)
        batch_means.sort(axis=1)
        return batch_means[:, (self.delta_T - 1) // 2]

    def _play_epoch(self, state: EpochState, n: int,
                    rng: np.random.Generator, rng_env: np.random.Generator):
        """Play n rounds; returns (actions, losses, mean losses, estimates).

        estimates has shape (survivors, n): the per-round IW estimate of
        each survivor's smoothed loss.
        """
        env = self.env
        space = self.pc.space
        fast = (isinstance(env.contexts, FiniteContexts)
                and space.kind in (RING, CUBE) and space.d == 1)
        if not fast:
            return self._play_epoch_slow(state, n, rng, rng_env)
        ctx_vals = env.contexts.values
        ctx_idx = (np.zeros(n, dtype=int) if len(ctx_vals) == 1 else
                   rng_env.choice(len(ctx_vals), size=n,
                                  p=env.contexts.weights))
        acts_all = np.stack([np.atleast_1d(self.pc.actions_at(x))
                             for x in ctx_vals])  # (n_x, |Pi|)
        support = state.vs.indices
        h, mu = state.h_m, state.mu_m

        explore = rng.random(n) < mu
        pi_pick = rng.choice(len(state.Q), size=n, p=state.Q)
        centers_picked = acts_all[ctx_idx, support[pi_pick]]
        u_explore = rng.uniform(0.0, 1.0, size=n)
        u_ball = rng.uniform(-h, h, size=n)
        if space.kind == RING:
            if 2 * h < 1.0:
                ball = np.mod(centers_picked + u_ball, 1.0)
            else:
                ball = rng.uniform(0.0, 1.0, size=n)
        else:
            lo = np.maximum(0.0, centers_picked - h)
            hi = np.minimum(1.0, centers_picked + h)
            ball = lo + (u_ball + h) / (2 * h) * (hi - lo)
        a = np.where(explore, u_explore, ball)

        # propensities and per-survivor densities
        cent_sup = acts_all[:, support]  # (n_x, k)
        cent_rounds = cent_sup[ctx_idx]  # (n, k)
        dd = np.abs(cent_rounds - a[:, None])
        if space.kind == RING:
            dist = np.minimum(dd, 1.0 - dd)
            vols = np.full_like(cent_rounds, min(1.0, 2 * h))
        else:
            dist = dd
            vols = (np.minimum(1.0, cent_rounds + h)
                    - np.maximum(0.0, cent_rounds - h))
        dens = np.where(dist <= h, 1.0 / vols, 0.0)  # (n, k)
        q = mu + (1.0 - mu) * dens @ state.Q

        loss_arr, mean_arr = self._realize_losses(ctx_vals, ctx_idx, a, rng_env)
        est = dens.T * (loss_arr / q)[None, :]
        return a, loss_arr, mean_arr, est

    def _realize_losses(self, ctx_vals, ctx_idx, a, rng):
        env = self.env
        n = len(a)
        means = np.empty(n)
        for ci, x in enumerate(ctx_vals):
            sel = ctx_idx == ci
            if np.any(sel):
                mean = env.mean_loss_of(x)
                means[sel] = np.atleast_1d(mean(a[sel]))
        if env.noise == DETERMINISTIC:
            return means, means
        if env.noise == BERNOULLI:
            return (rng.random(n) < means).astype(float), means
        noisy = np.clip(means + env.sigma * rng.standard_normal(n), 0.0, 1.0)
        return noisy, means

    def _play_epoch_slow(self, state: EpochState, n: int,
                         rng: np.random.Generator,
                         rng_env: np.random.Generator):
        kern = RectKernel(self.pc.space, state.h_m)
        support = state.vs.indices
        a_list, loss_list, mean_list = [], [], []
        est = np.zeros((len(support), n))
        for i in range(n):
            x = self.env.contexts.sample(rng_env)
            a, q = self.act(state, x, rng)
            loss = self.env.realize_at(x, a, rng_env)
            a_list.append(a)
            loss_list.append(loss)
            mean_list.append(float(np.atleast_1d(
                self.env.mean_loss_of(x)(a))[0]))
            centers = np.atleast_1d(self.pc.actions_at(x))
            if centers.ndim == 1 and self.pc.space.d > 1:
                centers = centers[None, :]
            centers = centers[support]
            est[:, i] = kern.densities(centers, a) * loss / q
        return (np.asarray(a_list), np.asarray(loss_list),
                np.asarray(mean_list), est)
