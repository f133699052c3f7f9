"""Box-constrained Nelder-Mead and the maximum-likelihood fitting driver."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .likelihood import Objective, param_length, unpack_params
from .model import EventSequence, HawkesModel

logger = logging.getLogger(__name__)


class FitError(RuntimeError):
    pass


class EmptyDimensionError(ValueError):
    """A dimension without arrivals cannot be fitted."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for :func:`nelder_mead` and :func:`fit`.

    The default box ``[1e-12, 10]`` and iteration cap of 10000 follow the
    original estimation run on USDT/BTC data.
    """

    lower_bound: float = 1e-12
    upper_bound: float = 10.0
    max_iterations: int = 10000
    x_tolerance: float = 1e-8
    f_tolerance: float = 1e-8
    restarts: int = 4
    seed: int = 0
    polish_rounds: int = 25
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5

    def __post_init__(self):
        if not 0 < self.lower_bound < self.upper_bound:
            raise ValueError(
                f"need 0 < lower_bound < upper_bound, got {self.lower_bound}, {self.upper_bound}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        if self.polish_rounds < 0:
            raise ValueError("polish_rounds must be >= 0")
        if self.x_tolerance < 0 or self.f_tolerance < 0:
            raise ValueError("tolerances must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown optimizer settings: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    n_evaluations: int


def _clip(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def nelder_mead(objective: Callable[[np.ndarray], float], x0, config: OptimizerConfig = OptimizerConfig(),
                callback: Optional[Callable[[int, np.ndarray, float], None]] = None) -> SimplexResult:
    """Minimize ``objective`` over the box ``[lower_bound, upper_bound]^n``.

    Trial points from reflection, expansion, contraction and shrink steps are
    clamped into the box before evaluation, so ``objective`` is never called
    outside it. Iteration stops once every vertex lies within ``x_tolerance``
    (max-norm) of the best one and the objective spread is below
    ``f_tolerance``, or after ``max_iterations``.

    ``callback(iteration, x_best, f_best)`` is invoked after each iteration.
    Non-finite objective values are treated as ``+inf``.
    """
    lo, hi = config.lower_bound, config.upper_bound
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    n = x0.size
    if n == 0:
        raise ValueError("x0 must be nonempty")
    if np.any(x0 < lo) or np.any(x0 >= hi):
        raise ValueError(f"x0 must lie in [{lo}, {hi})")

    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        v = float(objective(x))
        return v if np.isfinite(v) else np.inf

    f0 = f(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at x0")

    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        v = x0.copy()
        v[i] = x0[i] + max(0.05 * abs(x0[i]), 0.01)
        sim[i + 1] = _clip(v, lo, hi)
    fsim = np.empty(n + 1)
    fsim[0] = f0
    for i in range(1, n + 1):
        fsim[i] = f(sim[i])

    rho, chi = config.reflection, config.expansion
    gamma, sigma = config.contraction, config.shrink
    converged = False
    it = 0
    while it < config.max_iterations:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if (np.max(np.abs(sim[1:] - sim[0])) <= config.x_tolerance
                and np.max(np.abs(fsim[1:] - fsim[0])) <= config.f_tolerance):
            converged = True
            break
        it += 1

        centroid = sim[:-1].mean(axis=0)
        xr = _clip(centroid + rho * (centroid - sim[-1]), lo, hi)
        fr = f(xr)
        do_shrink = False
        if fr < fsim[0]:
            xe = _clip(centroid + chi * (xr - centroid), lo, hi)
            fe = f(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-1]:
            xc = _clip(centroid + gamma * (xr - centroid), lo, hi)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
            else:
                do_shrink = True
        else:
            xcc = _clip(centroid + gamma * (sim[-1] - centroid), lo, hi)
            fcc = f(xcc)
            if fcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fcc
            else:
                do_shrink = True
        if do_shrink:
            for i in range(1, n + 1):
                sim[i] = _clip(sim[0] + sigma * (sim[i] - sim[0]), lo, hi)
                fsim[i] = f(sim[i])

        if callback is not None:
            b = int(np.argmin(fsim))
            callback(it, sim[b].copy(), float(fsim[b]))

    b = int(np.argmin(fsim))
    return SimplexResult(sim[b].copy(), float(fsim[b]), it, converged, nfev)


BOUND_LOWER = "lower"
BOUND_UPPER = "upper"
BOUND_INTERIOR = "interior"


@dataclass
class FitResult:
    """Outcome of :func:`fit`.

    ``bound_hits`` has one flag per packed parameter (alpha row-major, beta
    row-major, mu): ``"lower"``, ``"upper"`` or ``"interior"``.
    """

    model: HawkesModel
    neg_log_likelihood: float
    iterations: int
    converged: bool
    bound_hits: list[str]
    restarts_used: int
    start_log_likelihoods: list[float] = field(default_factory=list)
    config: Optional[OptimizerConfig] = None

    @property
    def log_likelihood(self) -> float:
        return -self.neg_log_likelihood

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "log_likelihood": self.log_likelihood,
            "neg_log_likelihood": self.neg_log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "bound_hits": list(self.bound_hits),
            "restarts_used": self.restarts_used,
            "start_log_likelihoods": list(self.start_log_likelihoods),
            "config": None if self.config is None else self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        cfg = d.get("config")
        return cls(
            model=HawkesModel.from_dict(d["model"]),
            neg_log_likelihood=d["neg_log_likelihood"],
            iterations=d["iterations"],
            converged=d["converged"],
            bound_hits=list(d["bound_hits"]),
            restarts_used=d["restarts_used"],
            start_log_likelihoods=list(d.get("start_log_likelihoods", [])),
            config=None if cfg is None else OptimizerConfig.from_dict(cfg),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def bound_flags(x, config: OptimizerConfig) -> list[str]:
    flags = []
    for v in np.asarray(x, dtype=np.float64):
        if v - config.lower_bound <= config.x_tolerance:
            flags.append(BOUND_LOWER)
        elif config.upper_bound - v <= config.x_tolerance:
            flags.append(BOUND_UPPER)
        else:
            flags.append(BOUND_INTERIOR)
    return flags


def start_points(n: int, config: OptimizerConfig) -> np.ndarray:
    """Log-uniform draws on ``[0.01, upper_bound / 2]``, one row per start."""
    rng = np.random.default_rng(config.seed)
    lo, hi = np.log(0.01), np.log(config.upper_bound / 2)
    if hi <= lo:
        raise ValueError("upper_bound too small for the start-point range")
    return np.exp(rng.uniform(lo, hi, size=(1 + config.restarts, n)))


def _run_start(objective, x0, config: OptimizerConfig) -> SimplexResult:
    # Nelder-Mead can stall on a collapsed simplex; restarting from the best
    # vertex with a fresh simplex until the value stops improving fixes that.
    res = nelder_mead(objective, x0, config)
    iterations, nfev = res.iterations, res.n_evaluations
    below_upper = np.nextafter(config.upper_bound, 0.0)
    for _ in range(config.polish_rounds):
        nxt = nelder_mead(objective, np.minimum(res.x, below_upper), config)
        iterations += nxt.iterations
        nfev += nxt.n_evaluations
        improved = res.fun - nxt.fun
        if nxt.fun < res.fun:
            res = nxt
        if improved <= config.f_tolerance:
            break
    return SimplexResult(res.x, res.fun, iterations, res.converged, nfev)


def fit(events: EventSequence, config: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Maximum-likelihood fit of an exponential Hawkes model by multi-start
    Nelder-Mead on the negative log-likelihood.

    Each start is followed by up to ``polish_rounds`` Nelder-Mead restarts
    from its best point. The best final value over all starts wins; ties go
    to the earlier start. Raises :class:`EmptyDimensionError` when any
    dimension has no arrivals.
    """
    empty = [k for k, c in enumerate(events.counts) if c == 0]
    if empty:
        raise EmptyDimensionError(
            f"dimension(s) {empty} have no events; their background rate and "
            "excitation are not identifiable")
    m = events.dim
    objective = Objective(events)

    starts = start_points(param_length(m), config)
    best = None
    start_lls = []
    for s, x0 in enumerate(starts):
        f0 = objective(x0)
        start_lls.append(-f0)
        if not np.isfinite(f0):
            logger.warning("start %d: objective not finite, skipped", s)
            continue
        res = _run_start(objective, x0, config)
        logger.info("start %d: nll=%.6f iterations=%d converged=%s",
                    s, res.fun, res.iterations, res.converged)
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError("objective was not finite at any start point")

    return FitResult(
        model=unpack_params(best.x, m),
        neg_log_likelihood=best.fun,
        iterations=best.iterations,
        converged=best.converged,
        bound_hits=bound_flags(best.x, config),
        restarts_used=len(starts),
        start_log_likelihoods=start_lls,
        config=config,
    )
