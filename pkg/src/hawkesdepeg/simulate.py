"""Ogata thinning simulation and time-rescaling residuals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .likelihood import compute_r_table
from .model import DimensionError, EventSequence, HawkesModel, branching_matrix


class ExplosiveModelError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    model: HawkesModel
    horizon: float
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        rho = branching_matrix(self.model).spectral_radius
        if rho >= 1.0:
            raise ExplosiveModelError(
                f"branching matrix spectral radius {rho:.6g} >= 1; the process is explosive")


def simulate(config: SimulationConfig) -> EventSequence:
    """Draw one realisation on ``[0, horizon]`` by Ogata's thinning.

    The dominating rate is the total intensity just after the current time;
    since every kernel decays between events, it bounds the intensity until
    the next accepted event. It is refreshed at each candidate.
    """
    model, T = config.model, float(config.horizon)
    rng = np.random.default_rng(config.seed)
    m = model.dim
    mu = model.mu.tolist()
    alpha = model.alpha.tolist()
    beta = model.beta.tolist()
    # excite[j][k]: current contribution of dimension-k history to lambda_j
    excite = [[0.0] * m for _ in range(m)]
    out = [[] for _ in range(m)]
    t = 0.0
    while True:
        lam_bar = sum(mu) + sum(map(sum, excite))
        t_new = t + rng.exponential(1.0 / lam_bar)
        if t_new > T:
            break
        dt = t_new - t
        for j in range(m):
            row, brow = excite[j], beta[j]
            for k in range(m):
                if row[k]:
                    row[k] *= math.exp(-brow[k] * dt)
        t = t_new
        lams = [mu[j] + sum(excite[j]) for j in range(m)]
        lam_t = sum(lams)
        u = rng.uniform() * lam_bar
        if u <= lam_t:
            # pick the dimension by the same uniform
            k = 0
            acc = lams[0]
            while u > acc and k < m - 1:
                k += 1
                acc += lams[k]
            out[k].append(t)
            for j in range(m):
                excite[j][k] += alpha[j][k]
    return EventSequence(tuple(out), T)


def compensator_transform(model: HawkesModel, events: EventSequence, j: int) -> np.ndarray:
    """Integrated intensity of dimension ``j`` between consecutive arrivals.

    Returns ``Lambda_j(t_i) - Lambda_j(t_{i-1})`` with ``t_0 = 0``. Under the
    generating model these are i.i.d. unit exponentials.
    """
    if model.dim != events.dim:
        raise DimensionError(f"model has dim {model.dim} but events have dim {events.dim}")
    if not 0 <= j < model.dim:
        raise DimensionError(f"dimension index {j} out of range for dim={model.dim}")
    tj = events.arrivals[j]
    if tj.size == 0:
        return np.empty(0)
    # Lambda_j(t) = mu_j t + sum_k (a/b) * (#{t^k < t} - sum_{t^k < t} exp(-b (t - t^k)))
    lam_int = model.mu[j] * tj
    for k in range(model.dim):
        a, b = model.alpha[j, k], model.beta[j, k]
        if a == 0.0:
            continue
        r = compute_r_table(events, j, k, b)[1:]
        n_before = np.searchsorted(events.arrivals[k], tj, side="left")
        lam_int = lam_int + (a / b) * (n_before - r)
    return np.diff(lam_int, prepend=0.0)


def ks_exponential(residuals):
    """Kolmogorov-Smirnov test of residuals against the unit exponential."""
    return stats.kstest(np.asarray(residuals), "expon")
