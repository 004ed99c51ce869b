"""Exponential-weights learning over smoothing-kernel policy classes.

The learner maintains weights over a finite class of stochastic policies
xi = K(pi(x)): a base policy pi composed with a rectangular smoothing kernel
K.  Each round it samples a policy from the weight distribution, samples an
action from that policy's ball, and updates every policy's weight with the
importance-weighted loss estimate built from the mixture propensity.

A restart-based stable variant tolerates externally importance-weighted
losses (as fed by a corralling master): whenever the revealing probability
drops below the current range guess, the guess doubles and the learner
restarts with a re-tuned learning rate.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .kernels import RectKernel
from .policies import PolicyClass


class Exp4State:
    """Mutable exponential-weights state over a stochastic policy class.

    ``kernels`` and ``policy_indices`` together define Xi: member j plays
    kernels[j] centered at pc.act(policy_indices[j], x).
    """

    def __init__(self, pc: PolicyClass, kernels: Sequence[RectKernel],
                 policy_indices: Sequence[int], T: int,
                 eta: Optional[float] = None):
        if T < 1:
            raise ValueError("horizon must be >= 1")
        if len(kernels) != len(policy_indices) or len(kernels) == 0:
            raise ValueError("kernels and policy_indices must align, nonempty")
        if any(k.h == 0.0 for k in kernels):
            raise ValueError("algorithms reject the Dirac kernel h=0")
        self.pc = pc
        self.kernels = list(kernels)
        self.policy_indices = np.asarray(policy_indices, dtype=int)
        self.T = T
        self.n = len(self.kernels)
        self.kappa = max(k.kappa() for k in self.kernels)
        if eta is None:
            eta = (0.0 if self.n == 1 else
                   math.sqrt(2.0 * math.log(self.n) / (T * self.kappa)))
        self.eta = eta
        self.logw = np.zeros(self.n)
        self.t = 0
        self._pending: Optional[Tuple] = None
        # group members by kernel so densities vectorize per group
        self._groups: List[Tuple[RectKernel, np.ndarray]] = []
        seen = {}
        for j, k in enumerate(self.kernels):
            seen.setdefault((id(k.space), k.h), (k, []))[1].append(j)
        for k, idxs in seen.values():
            self._groups.append((k, np.asarray(idxs, dtype=int)))

    @staticmethod
    def for_kernel(kernel: RectKernel, pc: PolicyClass, T: int,
                   eta: Optional[float] = None) -> "Exp4State":
        """All base policies under a single smoothing kernel."""
        return Exp4State(pc, [kernel] * pc.size, np.arange(pc.size), T, eta)

    # -- weights --------------------------------------------------------

    @property
    def P(self) -> np.ndarray:
        w = np.exp(self.logw - self.logw.max())
        return w / w.sum()

    def density_vector(self, x, a) -> np.ndarray:
        """xi(a|x) for every member of Xi."""
        acts = np.atleast_1d(self.pc.actions_at(x))
        if acts.ndim == 1 and self.pc.space.d > 1:
            acts = acts[None, :]
        out = np.zeros(self.n)
        for kernel, idxs in self._groups:
            centers = acts[self.policy_indices[idxs]]
            out[idxs] = kernel.densities(centers, a)
        return out

    # -- protocol ---------------------------------------------------------

    def step(self, x, rng: np.random.Generator):
        """Sample xi ~ P_t then a ~ xi(.|x); return (a, mixture propensity)."""
        if self.t >= self.T:
            raise RuntimeError("horizon exhausted")
        P = self.P
        j = min(int(np.searchsorted(np.cumsum(P), rng.random())), self.n - 1)
        center = self.pc.act(int(self.policy_indices[j]), x)
        a = self.kernels[j].sample(center, rng)
        dens = self.density_vector(x, a)
        p = float(np.dot(P, dens))
        self._pending = (self.t, x, a, p, dens)
        return a, p

    def update(self, x, a, observed_loss: float,
               propensity: Optional[float] = None) -> np.ndarray:
        """Multiplicative update with the IW estimates; returns them.

        With propensity=None the action must come from the immediately
        preceding step (double updates rejected); an explicit propensity
        allows replaying a logged action against the current weights.
        """
        if propensity is None:
            if self._pending is None or (self._pending[2] is not a and
                                         not np.array_equal(self._pending[2], a)):
                raise RuntimeError("update must follow its matching step")
            _, _, _, p, dens = self._pending
        else:
            p = propensity
            dens = self.density_vector(x, a)
        if p <= 0:
            raise ValueError("propensity must be positive")
        est = dens * (observed_loss / p)
        self.logw = self.logw - self.eta * est
        self.logw -= self.logw.max()
        self.t += 1
        self._pending = None
        return est


class StableExp4:
    """Exp4 under importance-weighted feeding, with doubling restarts.

    ``rho_hat`` guesses the range parameter max_t 1/p_t of the revealing
    probabilities; learning rate sqrt(2 ln|Xi| / (T kappa rho_hat)).  When a
    round's 1/p_t exceeds the guess, it doubles (repeatedly) and the inner
    state restarts before absorbing that round.
    """

    def __init__(self, pc: PolicyClass, kernels: Sequence[RectKernel],
                 policy_indices: Sequence[int], T: int,
                 rho_hat: float = 1.0):
        if rho_hat < 1.0:
            raise ValueError("rho_hat must be >= 1")
        self._args = (pc, list(kernels), np.asarray(policy_indices, int), T)
        self.rho_hat = float(rho_hat)
        self.restart_count = 0
        self.inner = self._fresh()

    def _fresh(self) -> Exp4State:
        pc, kernels, idxs, T = self._args
        n = len(kernels)
        kappa = max(k.kappa() for k in kernels)
        eta = (0.0 if n == 1 else
               math.sqrt(2.0 * math.log(n) / (T * kappa * self.rho_hat)))
        return Exp4State(pc, kernels, idxs, T, eta=eta)

    @property
    def kappa(self) -> float:
        return self.inner.kappa

    def step(self, x, rng: np.random.Generator):
        return self.inner.step(x, rng)

    def stable_update(self, x, a, iw_loss_value: float, p_t: float) -> None:
        """Absorb one round of the importance-weighted protocol.

        ``p_t`` is the revealing probability; ``iw_loss_value`` is the
        already importance-weighted scalar (zero on unrevealed rounds).
        ``a`` may be None when this learner took no action this round; the
        estimate is then identically zero and only the restart check runs.
        """
        if p_t <= 0 or p_t > 1:
            raise ValueError("revealing probability must lie in (0,1]")
        pending = self.inner._pending
        if 1.0 / p_t > self.rho_hat:
            while 1.0 / p_t > self.rho_hat:
                self.rho_hat *= 2.0
            t_kept = self.inner.t
            self.inner = self._fresh()
            self.inner.t = t_kept
            self.restart_count += 1
            if a is not None:
                if pending is None:
                    raise RuntimeError("no pending step to update")
                self.inner.update(x, a, iw_loss_value, propensity=pending[3])
            else:
                self.inner.t += 1
            return
        if a is None:
            self.inner.t += 1
            self.inner._pending = None
            return
        self.inner.update(x, a, iw_loss_value)
