"""Exponential-kernel multivariate Hawkes model and event containers.

Times are in hours throughout. ``alpha[j, k]`` is the excitation applied to
dimension ``j`` by an event of dimension ``k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """Raised when model parameters fall outside their domain."""


class DimensionError(ValueError):
    """Raised on mismatched or out-of-range dimensions."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HawkesModel:
    """Parameters of an m-variate Hawkes process with kernel
    ``alpha[j, k] * exp(-beta[j, k] * s)``.

    Parameters
    ----------
    mu : array_like, shape (m,)
        Background intensities (events per hour), strictly positive.
    alpha : array_like, shape (m, m)
        Excitation jump sizes, nonnegative. Zero entries are allowed.
    beta : array_like, shape (m, m)
        Decay rates (per hour), strictly positive.
    """

    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        m = mu.shape[0]
        alpha = np.asarray(self.alpha, dtype=np.float64).reshape(-1)
        beta = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        if mu.ndim != 1 or m == 0:
            raise DimensionError("mu must be a nonempty vector")
        if alpha.size != m * m or beta.size != m * m:
            raise DimensionError(
                f"alpha and beta must be {m}x{m} for dim={m}, got sizes "
                f"{alpha.size} and {beta.size}")
        alpha = alpha.reshape(m, m)
        beta = beta.reshape(m, m)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(alpha))
                and np.all(np.isfinite(beta))):
            raise ParameterError("parameters must be finite")
        if np.any(mu <= 0):
            raise ParameterError(f"mu must be > 0, got {mu.tolist()}")
        if np.any(alpha < 0):
            raise ParameterError("alpha must be >= 0")
        if np.any(beta <= 0):
            raise ParameterError("beta must be > 0")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "beta", _frozen(beta))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "mu": self.mu.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesModel":
        model = cls(d["mu"], d["alpha"], d["beta"])
        if "dim" in d and int(d["dim"]) != model.dim:
            raise DimensionError(
                f"declared dim {d['dim']} does not match mu of length {model.dim}")
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "HawkesModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class EventSequence:
    """Per-dimension arrival times on ``[0, horizon]``.

    Each dimension is sorted non-decreasing; ties are allowed since binned
    market data produces them.
    """

    arrivals: tuple
    horizon: float

    def __post_init__(self):
        horizon = float(self.horizon)
        if not np.isfinite(horizon) or horizon <= 0:
            raise ValueError(f"horizon must be a positive finite number, got {self.horizon}")
        if len(self.arrivals) == 0:
            raise DimensionError("an event sequence needs at least one dimension")
        arrs = []
        for k, a in enumerate(self.arrivals):
            a = np.asarray(a, dtype=np.float64).reshape(-1)
            if a.size:
                if not np.all(np.isfinite(a)):
                    raise ValueError(f"dimension {k}: non-finite arrival time")
                if np.any(np.diff(a) < 0):
                    raise ValueError(f"dimension {k}: arrivals must be sorted")
                if a[0] < 0 or a[-1] > horizon:
                    raise ValueError(
                        f"dimension {k}: arrivals must lie in [0, {horizon}]")
            arrs.append(_frozen(a))
        object.__setattr__(self, "arrivals", tuple(arrs))
        object.__setattr__(self, "horizon", horizon)

    @property
    def dim(self) -> int:
        return len(self.arrivals)

    @property
    def counts(self) -> list[int]:
        return [a.size for a in self.arrivals]

    def to_dict(self) -> dict:
        return {"horizon": self.horizon,
                "arrivals": [a.tolist() for a in self.arrivals]}

    @classmethod
    def from_dict(cls, d: dict) -> "EventSequence":
        return cls(tuple(d["arrivals"]), d["horizon"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EventSequence":
        return cls.from_dict(json.loads(text))


def _check_dim(index: int, m: int, what: str = "dimension") -> None:
    if not 0 <= index < m:
        raise DimensionError(f"{what} index {index} out of range for dim={m}")


def intensity(model: HawkesModel, events: EventSequence, j: int, t: float) -> float:
    """Conditional intensity of dimension ``j`` at time ``t``.

    Only events strictly before ``t`` contribute, so the returned value is
    left-continuous at arrivals. Dimensions are 0-based.
    """
    if model.dim != events.dim:
        raise DimensionError(
            f"model has dim {model.dim} but events have dim {events.dim}")
    _check_dim(j, model.dim)
    if not 0 <= t <= events.horizon:
        raise ValueError(f"t={t} outside [0, {events.horizon}]")
    # fsum makes the result independent of dimension ordering
    terms = [float(model.mu[j])]
    for k, tk in enumerate(events.arrivals):
        past = tk[tk < t]
        if past.size:
            terms.append(float(model.alpha[j, k] * np.sum(np.exp(-model.beta[j, k] * (t - past)))))
    return math.fsum(terms)


@dataclass(frozen=True)
class BranchingMatrix:
    matrix: np.ndarray
    spectral_radius: float

    @property
    def explosive(self) -> bool:
        return self.spectral_radius >= 1.0


def branching_matrix(model: HawkesModel) -> BranchingMatrix:
    """Mean offspring matrix ``alpha / beta`` and its spectral radius.

    A radius of 1 or more means the process is not stationary. This is a
    diagnostic only; fitting does not reject such models.
    """
    b = model.alpha / model.beta
    rho = float(np.max(np.abs(np.linalg.eigvals(b))))
    return BranchingMatrix(b, rho)


def count_before(events: EventSequence, k: int, t: float) -> int:
    """Number of arrivals in dimension ``k`` at or before ``t``."""
    _check_dim(k, events.dim)
    return int(np.searchsorted(events.arrivals[k], t, side="right"))


def permute(model: HawkesModel, events: EventSequence | None,
            perm: Sequence[int]) -> tuple[HawkesModel, EventSequence | None]:
    """Relabel dimensions so that new dimension ``i`` is old ``perm[i]``."""
    p = np.asarray(perm, dtype=int)
    if sorted(p.tolist()) != list(range(model.dim)):
        raise DimensionError(f"{list(perm)} is not a permutation of range({model.dim})")
    pm = HawkesModel(model.mu[p], model.alpha[np.ix_(p, p)], model.beta[np.ix_(p, p)])
    if events is None:
        return pm, None
    pe = EventSequence(tuple(events.arrivals[i] for i in p), events.horizon)
    return pm, pe
