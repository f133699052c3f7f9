"""Exact log-likelihood of exponential-kernel Hawkes models.

:func:`log_likelihood` runs the O(n) recursion over the excitation sums
``R[j, l](i)``; :func:`naive_log_likelihood` evaluates the intensity at every
arrival by brute force and is kept independent of the recursion so it can
serve as a test oracle.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .model import DimensionError, EventSequence, HawkesModel, ParameterError


def param_length(m: int) -> int:
    return 2 * m * m + m


def dim_from_length(n: int) -> int:
    m = int(round((math.sqrt(1 + 8 * n) - 1) / 4))
    if m < 1 or param_length(m) != n:
        raise DimensionError(f"parameter vector of length {n} is not 2m^2+m for any m")
    return m


def pack_params(model: HawkesModel) -> np.ndarray:
    """Flatten a model to ``(alpha row-major, beta row-major, mu)``."""
    return np.concatenate([model.alpha.ravel(), model.beta.ravel(), model.mu])


def unpack_params(theta, dim: int | None = None) -> HawkesModel:
    """Inverse of :func:`pack_params`. Raises ParameterError on an invalid domain."""
    theta = np.asarray(theta, dtype=np.float64).ravel()
    m = dim_from_length(theta.size) if dim is None else dim
    if theta.size != param_length(m):
        raise DimensionError(f"expected {param_length(m)} parameters for dim={m}, got {theta.size}")
    mm = m * m
    return HawkesModel(theta[2 * mm:], theta[:mm].reshape(m, m),
                       theta[mm:2 * mm].reshape(m, m))


def _as_model(theta) -> HawkesModel:
    if isinstance(theta, HawkesModel):
        return theta
    return unpack_params(theta)


@njit(cache=True)
def _accumulate(decay, window, contrib):
    # r[i] = decay[i-1] * r[i-1] + sum of contrib[p] over p with window[p] == i-1
    n = decay.shape[0]
    r = np.zeros(n + 1)
    p = 0
    nl = window.shape[0]
    for i in range(1, n + 1):
        acc = decay[i - 1] * r[i - 1]
        while p < nl and window[p] == i - 1:
            acc += contrib[p]
            p += 1
        r[i] = acc
    return r


class _Windows:
    """Beta-independent bookkeeping for the recursion of one (j, l) pair.

    Source arrival ``t_n^(l)`` lands in window ``i`` when
    ``t_(i-1)^(j) <= t_n^(l) < t_i^(j)``, with ``t_0^(j) = 0``. Sources at or
    after the last target arrival belong to no window.
    """

    __slots__ = ("gaps", "window", "lag")

    def __init__(self, tj: np.ndarray, tl: np.ndarray):
        self.gaps = np.diff(tj, prepend=0.0)
        window = np.searchsorted(tj, tl, side="right")
        keep = window < tj.size
        self.window = window[keep]
        self.lag = tj[self.window] - tl[keep]

    def r_table(self, beta: float) -> np.ndarray:
        return _accumulate(np.exp(-beta * self.gaps), self.window, np.exp(-beta * self.lag))


def compute_r_table(events: EventSequence, j: int, l: int, beta_jl: float) -> np.ndarray:
    """Excitation sums of dimension ``l`` seen at each arrival of ``j``.

    Returns an array of length ``n_j + 1``. Entry 0 is the initial condition
    (always 0); entry ``i`` is obtained from entry ``i - 1`` by decaying it
    over ``[t_(i-1)^(j), t_i^(j))`` and adding the kernel terms of the
    ``l``-arrivals inside that window. Unrolled, entry ``i`` equals
    ``sum over t_n^(l) < t_i^(j) of exp(-beta_jl * (t_i^(j) - t_n^(l)))``.
    """
    m = events.dim
    for idx in (j, l):
        if not 0 <= idx < m:
            raise DimensionError(f"dimension index {idx} out of range for dim={m}")
    if not beta_jl > 0:
        raise ParameterError(f"beta must be > 0, got {beta_jl}")
    return _Windows(events.arrivals[j], events.arrivals[l]).r_table(float(beta_jl))


class Objective:
    """Negative log-likelihood as a function of the packed parameter vector
    ``(alpha row-major, beta row-major, mu)``.

    The recursion windows are computed once, so repeated evaluation during
    optimisation only pays for the exponentials. Points outside the parameter
    domain evaluate to ``inf``.
    """

    def __init__(self, events: EventSequence):
        self.events = events
        self.dim = m = events.dim
        self.horizon = T = events.horizon
        arr = events.arrivals
        self._windows = [[_Windows(arr[j], arr[l]) for l in range(m)] for j in range(m)]
        # arrivals at exactly T contribute no log term
        self._n_log = [int(np.searchsorted(arr[j], T, side="left")) for j in range(m)]
        self._to_horizon = [T - a for a in arr]

    def log_likelihood(self, mu, alpha, beta) -> float:
        m = self.dim
        total = 0.0
        for j in range(m):
            comp = mu[j] * self.horizon
            for k in range(m):
                if alpha[j, k] != 0.0 and self._to_horizon[k].size:
                    comp += alpha[j, k] / beta[j, k] * np.sum(
                        -np.expm1(-beta[j, k] * self._to_horizon[k]))
            n = self._n_log[j]
            if n:
                lam = np.full(n, mu[j])
                for l in range(m):
                    if alpha[j, l] != 0.0:
                        lam += alpha[j, l] * self._windows[j][l].r_table(beta[j, l])[1:n + 1]
                total += np.sum(np.log(lam))
            total -= comp
        return float(total)

    def __call__(self, theta) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        m = self.dim
        mm = m * m
        if theta.size != param_length(m):
            raise DimensionError(f"expected {param_length(m)} parameters, got {theta.size}")
        alpha = theta[:mm].reshape(m, m)
        beta = theta[mm:2 * mm].reshape(m, m)
        mu = theta[2 * mm:]
        if np.any(mu <= 0) or np.any(beta <= 0) or np.any(alpha < 0):
            return np.inf
        return -self.log_likelihood(mu, alpha, beta)


def log_likelihood(theta, events: EventSequence) -> float:
    """Log-likelihood of ``events`` on ``[0, T]``.

    ``theta`` is a packed parameter vector (see :func:`pack_params`) or a
    :class:`HawkesModel`; invalid parameters raise :class:`ParameterError`.
    The compensator is evaluated in closed form.
    """
    model = _as_model(theta)
    if events.dim != model.dim:
        raise DimensionError(f"model has dim {model.dim} but events have dim {events.dim}")
    return Objective(events).log_likelihood(model.mu, model.alpha, model.beta)


def naive_log_likelihood(theta, events: EventSequence) -> float:
    """Brute-force log-likelihood: sum of log-intensities at arrivals minus
    the closed-form integrated intensity. O(n^2); intended for testing."""
    model = _as_model(theta)
    m = model.dim
    if events.dim != m:
        raise DimensionError(f"model has dim {m} but events have dim {events.dim}")
    T = events.horizon
    total = 0.0
    for j in range(m):
        tj = events.arrivals[j]
        tj = tj[tj < T]
        lam = np.full(tj.size, model.mu[j])
        integral = model.mu[j] * T
        for k in range(m):
            tk = events.arrivals[k]
            a, b = model.alpha[j, k], model.beta[j, k]
            if tj.size and tk.size:
                lag = tj[:, None] - tk[None, :]
                before = lag > 0
                kern = np.where(before, np.exp(-b * np.where(before, lag, 0.0)), 0.0)
                lam = lam + a * kern.sum(axis=1)
            integral += (a / b) * np.sum(1.0 - np.exp(-b * (T - tk)))
        total += np.sum(np.log(lam)) - integral
    return float(total)
