"""Experiment orchestration: runs, regret accounting, diagnostics, output.

One root seed per run; child streams for the environment and the algorithm
are split off the root with numpy's SeedSequence spawning (documented
counter-splitting), so each component is independently reproducible.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import corral as corral_mod
from .elimination import ElimConfig, SmoothPolicyElimination
from .environments import StochasticEnv, make_named_instance
from .exp4 import Exp4State
from .kernels import BandwidthGrid, RectKernel
from .policies import (PolicyClass, VersionSpace, packing_number,
                       projected_actions)

ALGORITHMS = ("exp4", "pe-s", "pe-l", "corral-uniform-h", "corral-lipschitz")


@dataclass
class RunConfig:
    alg: str
    env_name: str
    T: int
    env_params: Dict = field(default_factory=dict)
    h: Optional[float] = None
    L: Optional[float] = None
    beta: float = 1.0
    seeds: Sequence[int] = (0,)
    n_policies: int = 64
    n_ctx: int = 2000
    eta: Optional[float] = None
    policy_csv: Optional[str] = None

    def __post_init__(self):
        if self.alg not in ALGORITHMS:
            raise ValueError(f"unknown algorithm: {self.alg!r}")
        if self.alg in ("exp4", "pe-s") and not self.h:
            raise ValueError(f"{self.alg} needs --h")
        if self.alg == "pe-l" and not self.L:
            raise ValueError("pe-l needs --L")


@dataclass
class RegretTrace:
    seed: int
    actions: np.ndarray
    losses: np.ndarray
    benchmark: float
    benchmark_h: Optional[float]
    regret: float
    pseudo_regret: Optional[float]
    walltime: float
    epochs: Optional[List[dict]] = None
    annotations: Dict = field(default_factory=dict)

    @property
    def cumloss(self) -> np.ndarray:
        return np.cumsum(self.losses)


def _rngs(seed: int):
    env_ss, alg_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(env_ss), np.random.default_rng(alg_ss)


def default_policy_class(env: StochasticEnv, n: int,
                         csv_path: Optional[str] = None) -> PolicyClass:
    """Constant class on an n-point grid of the env's space (or CSV table)."""
    if csv_path:
        return PolicyClass.from_csv(env.space, csv_path)
    space = env.space
    if space.kind == "grid":
        return PolicyClass.constant(space, space.grid_points())
    if space.d > 1:
        side = max(2, int(round(n ** (1.0 / space.d))))
        axis = (np.arange(side) + 0.5) / side
        mesh = np.meshgrid(*([axis] * space.d))
        return PolicyClass.constant(
            space, np.stack([m.ravel() for m in mesh], axis=1))
    if space.kind == "ring":
        return PolicyClass.constant(space, np.arange(n) / n)
    return PolicyClass.constant(space, (np.arange(n) + 0.5) / n)


# ---------------------------------------------------------------------------
# single-run loops
# ---------------------------------------------------------------------------


def _loop_exp4(env: StochasticEnv, pc: PolicyClass, h: float, T: int,
               env_rng, alg_rng, eta=None):
    state = Exp4State.for_kernel(RectKernel(env.space, h), pc, T, eta=eta)
    actions = np.empty(T) if env.space.d == 1 else np.empty((T, env.space.d))
    losses = np.empty(T)
    means = np.empty(T)
    for t in range(T):
        x = env.contexts.sample(env_rng)
        a, _ = state.step(x, alg_rng)
        loss = env.realize_at(x, a, env_rng)
        state.update(x, a, loss)
        actions[t] = a
        losses[t] = loss
        means[t] = float(np.atleast_1d(env.mean_loss_of(x)(a))[0])
    return actions, losses, means, None


def _loop_corral(env: StochasticEnv, pc: PolicyClass, T: int, beta: float,
                 mode: str, env_rng, alg_rng, h: Optional[float] = None,
                 eta=None):
    if mode == "single":
        master = corral_mod.build([RectKernel(env.space, h)], pc, T,
                                  beta=beta, mode=corral_mod.GENERIC, eta=eta)
    else:
        master = corral_mod.build(None, pc, T, beta=beta, mode=mode, eta=eta)
    actions = np.empty(T) if env.space.d == 1 else np.empty((T, env.space.d))
    losses = np.empty(T)
    means = np.empty(T)
    for t in range(T):
        x = env.contexts.sample(env_rng)
        a, rec = master.round(x, lambda aa: env.realize_at(x, aa, env_rng),
                              alg_rng)
        actions[t] = a
        losses[t] = rec["loss"]
        means[t] = float(np.atleast_1d(env.mean_loss_of(x)(a))[0])
    return actions, losses, means, master


def _loop_elim(env: StochasticEnv, pc: PolicyClass, cfg: RunConfig,
               variant: str, env_rng, alg_rng):
    econf = ElimConfig(variant=variant, T=cfg.T, h=cfg.h, L=cfg.L,
                       n_ctx=cfg.n_ctx)
    alg = SmoothPolicyElimination(env, pc, econf)
    out = alg.run(alg_rng, rng_env=env_rng)
    actions = out["actions"]
    losses = out["losses"]
    means = out.get("mean_losses")
    return actions, losses, means, out


def run_one(config: RunConfig, seed: int, env: Optional[StochasticEnv] = None,
            pc: Optional[PolicyClass] = None) -> RegretTrace:
    env = env or make_named_instance(config.env_name, **config.env_params)
    pc = pc or default_policy_class(env, config.n_policies, config.policy_csv)
    env_rng, alg_rng = _rngs(seed)
    t0 = time.time()
    epochs = None
    if config.alg == "exp4":
        actions, losses, means, _ = _loop_exp4(
            env, pc, config.h, config.T, env_rng, alg_rng, eta=config.eta)
        bench_h = config.h
    elif config.alg in ("pe-s", "pe-l"):
        variant = "s" if config.alg == "pe-s" else "l"
        actions, losses, means, out = _loop_elim(
            env, pc, config, variant, env_rng, alg_rng)
        epochs = out["epochs"]
        bench_h = config.h if config.alg == "pe-s" else 0.0
    elif config.alg == "corral-uniform-h":
        actions, losses, means, master = _loop_corral(
            env, pc, config.T, config.beta, corral_mod.UNIFORM_H,
            env_rng, alg_rng, eta=config.eta)
        bench_h = (BandwidthGrid(env.space.d, config.T).snap(config.h)
                   if config.h else None)
    else:
        actions, losses, means, master = _loop_corral(
            env, pc, config.T, config.beta, corral_mod.LIPSCHITZ_ADAPTIVE,
            env_rng, alg_rng, eta=config.eta)
        bench_h = 0.0
    if bench_h == 0.0 and env.lipschitz_constant is None:
        raise ValueError("Lipschitz regret needs an env with L metadata")
    if bench_h is not None:
        panel = env.context_panel(config.n_ctx, np.random.default_rng(0))
        bench, _ = env.smoothed_benchmark(pc, bench_h, panel=panel)
    else:
        bench = float("nan")
    total = float(np.sum(losses))
    regret = total - config.T * bench
    pseudo = (float(np.sum(means)) - config.T * bench
              if means is not None else None)
    return RegretTrace(
        seed=seed, actions=actions, losses=losses, benchmark=bench,
        benchmark_h=bench_h, regret=regret, pseudo_regret=pseudo,
        walltime=time.time() - t0, epochs=epochs)


def run_experiment(config: RunConfig,
                   out_dir: Optional[str] = None) -> List[RegretTrace]:
    """One trace per seed; optionally writes CSVs plus summary.json."""
    env = make_named_instance(config.env_name, **config.env_params)
    pc = default_policy_class(env, config.n_policies, config.policy_csv)
    traces = [run_one(config, s, env=env, pc=pc) for s in config.seeds]
    if out_dir:
        write_outputs(config, traces, out_dir)
    return traces


# ---------------------------------------------------------------------------
# output formats
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def trace_csv_lines(trace: RegretTrace) -> List[str]:
    lines = ["t,action,loss,cumloss"]
    cum = 0.0
    for t in range(len(trace.losses)):
        a = trace.actions[t]
        a_txt = (_fmt(float(a)) if np.ndim(a) == 0
                 else ";".join(_fmt(float(v)) for v in a))
        cum += float(trace.losses[t])
        lines.append(f"{t + 1},{a_txt},{_fmt(float(trace.losses[t]))},{_fmt(cum)}")
    return lines


def write_outputs(config: RunConfig, traces: List[RegretTrace],
                  out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for tr in traces:
        path = os.path.join(out_dir, f"run_seed{tr.seed}.csv")
        with open(path, "w") as f:
            f.write("\n".join(trace_csv_lines(tr)) + "\n")
        if tr.epochs:
            epath = os.path.join(out_dir, f"epochs_seed{tr.seed}.csv")
            cols = list(tr.epochs[0].keys())
            with open(epath, "w") as f:
                f.write(",".join(cols) + "\n")
                for row in tr.epochs:
                    f.write(",".join(str(row[c]) for c in cols) + "\n")
    regs = np.array([tr.regret for tr in traces])
    summary = {
        "config": {k: (list(v) if isinstance(v, (tuple, range)) else v)
                   for k, v in vars(config).items()},
        "benchmark": traces[0].benchmark,
        "benchmark_h": traces[0].benchmark_h,
        "regret_mean": float(regs.mean()),
        "regret_std": float(regs.std(ddof=1)) if len(regs) > 1 else 0.0,
        "pseudo_regret_mean": (
            float(np.mean([tr.pseudo_regret for tr in traces]))
            if traces[0].pseudo_regret is not None else None),
        "runtime_total": float(sum(tr.walltime for tr in traces)),
        "seeds": [tr.seed for tr in traces],
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2, default=str)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticsReport:
    table: List[dict]
    theta_h: Optional[float]
    psi_L: Optional[float]
    z_hat: Optional[float]
    fit_residual: Optional[float]
    alpha_unif: float


def _expected_packing(env: StochasticEnv, pc: PolicyClass, panel,
                      level_vals: np.ndarray, eps_opt: float,
                      delta_pack: float) -> float:
    """E_x over the panel of the packing number of the eps_opt-optimal set.

    Packing at scale delta means disjoint closed delta-balls, so centers
    must be strictly more than 2*delta apart.
    """
    mask = level_vals <= level_vals.min() + eps_opt + 1e-12
    vs = VersionSpace(pc, mask)
    xs, ws = panel
    total = 0.0
    for x, w in zip(xs, ws):
        pts = projected_actions(vs, x)
        total += w * packing_number(pc.space, pts,
                                    2.0 * delta_pack + 1e-12)
    return total


def diagnose(env: StochasticEnv, pc: PolicyClass, h: Optional[float] = None,
             L: Optional[float] = None,
             epsilon_grid: Optional[Sequence[float]] = None,
             n_ctx: int = 2000) -> DiagnosticsReport:
    """Packing-number table and smoothing/zooming coefficients.

    For each epsilon: M_h(12 eps, h) over the 12*eps-optimal set under the
    h-smoothed losses (when h is given), and M_0(12 L eps, eps) under the
    unsmoothed losses (when L is given).  theta_h and psi_L are the suprema
    of M/eps over the grid; the zooming exponent is the log-log slope of
    M_0(12 L eps, eps) against 1/eps.
    """
    if epsilon_grid is None:
        epsilon_grid = np.geomspace(1e-3, 0.5, 16)
    panel = env.context_panel(n_ctx, np.random.default_rng(0))
    vals_h = (env.smoothed_policy_losses(pc, h, panel=panel)
              if h is not None else None)
    vals_0 = (env.smoothed_policy_losses(pc, 0.0, panel=panel)
              if L is not None else None)
    table = []
    for eps in epsilon_grid:
        row = {"eps": float(eps)}
        if vals_h is not None:
            row["M_h"] = _expected_packing(env, pc, panel, vals_h,
                                           12.0 * eps, h)
        if vals_0 is not None:
            row["M_0"] = _expected_packing(env, pc, panel, vals_0,
                                           12.0 * L * eps, eps)
        table.append(row)
    theta = (max(r["M_h"] / r["eps"] for r in table)
             if vals_h is not None else None)
    psi = (max(r["M_0"] / r["eps"] for r in table)
           if vals_0 is not None else None)
    z_hat = resid = None
    if vals_0 is not None:
        xs = np.log(1.0 / np.asarray([r["eps"] for r in table]))
        ys = np.log(np.maximum(1e-12, [r["M_0"] for r in table]))
        slope, intercept = np.polyfit(xs, ys, 1)
        z_hat = float(slope)
        resid = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    hs = [x for x in (h, 2.0 ** -4) if x]
    alpha = env.space.estimate_uniformity(hs)
    return DiagnosticsReport(table=table, theta_h=theta, psi_L=psi,
                             z_hat=z_hat, fit_residual=resid,
                             alpha_unif=alpha)
