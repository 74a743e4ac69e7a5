"""Intensity functions consumed by the thinning samplers.

Each intensity is an immutable value with two methods: ``evaluate(t)`` (scalar
or array) and ``upper_bound(T)``, a constant dominating the intensity on
``[0, T]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError, ObservationError


class Intensity(Protocol):
    def evaluate(self, t): ...

    def upper_bound(self, horizon: float) -> float: ...


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not (v >= 0) or math.isinf(v):
            raise ValueError(f"{name} must be finite and nonnegative, got {v}")


@dataclass(frozen=True)
class ConstantIntensity:
    rate: float

    def __post_init__(self):
        _check_nonneg(rate=self.rate)

    def evaluate(self, t):
        if np.ndim(t) == 0:
            return float(self.rate)
        return np.full(np.shape(t), float(self.rate))

    def upper_bound(self, horizon: float) -> float:
        return float(self.rate)


@dataclass(frozen=True)
class RbfComponent:
    phi: float
    alpha: float
    tau: float

    def __post_init__(self):
        _check_nonneg(phi=self.phi, alpha=self.alpha, tau=self.tau)


@dataclass(frozen=True)
class RbfMixtureIntensity:
    """Sum of radial bumps ``phi * exp(-alpha * (t - tau)**2)``.

    ``form="literal"`` switches every component to ``phi * exp(-alpha * (t - tau))``,
    which is monotone decreasing and peaks at ``t = 0`` on the half line.
    """

    components: tuple[RbfComponent, ...]
    form: str = "gaussian"
    _params: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.form not in ("gaussian", "literal"):
            raise ValueError(f"unknown rbf form {self.form!r}")
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_params", tuple(
            np.array([getattr(c, k) for c in comps], dtype=float) for k in ("phi", "alpha", "tau")))

    def _arrays(self):
        return self._params

    def evaluate(self, t):
        phi, alpha, tau = self._arrays()
        tt = np.asarray(t, dtype=float)[..., None]
        if self.form == "gaussian":
            z = -alpha * (tt - tau) ** 2
        else:
            z = -alpha * (tt - tau)
        out = (phi * np.exp(z)).sum(axis=-1)
        return float(out) if np.ndim(t) == 0 else out

    def upper_bound(self, horizon: float) -> float:
        phi, alpha, tau = self._arrays()
        if self.form == "gaussian":
            return float(phi.sum())
        return float((phi * np.exp(alpha * tau)).sum())

    def with_amplitude(self, index: int, phi: float) -> "RbfMixtureIntensity":
        comps = list(self.components)
        c = comps[index]
        comps[index] = RbfComponent(max(phi, 0.0), c.alpha, c.tau)
        return RbfMixtureIntensity(tuple(comps), self.form)


@dataclass(frozen=True)
class HawkesParams:
    mu: float
    alpha: float
    omega: float

    def __post_init__(self):
        _check_nonneg(mu=self.mu, alpha=self.alpha)
        if not self.omega > 0 or math.isinf(self.omega):
            raise ValueError(f"omega must be positive, got {self.omega}")

    def kernel(self, dt):
        """Triggering kernel exp(-omega * dt), zero for negative lags."""
        dt = np.asarray(dt, dtype=float)
        out = np.where(dt >= 0, np.exp(-self.omega * np.maximum(dt, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def branching_ratio(self) -> float:
        return self.alpha / self.omega

    def peak(self) -> float:
        return max(self.mu, self.alpha)


@dataclass(frozen=True)
class BranchKernel:
    """One branch of the Hawkes cluster representation.

    The background branch has intensity ``mu``; an offspring branch rooted at
    ``parent_time`` has intensity ``alpha * exp(-omega * (t - parent_time))``
    for ``t >= parent_time`` and zero before.
    """

    params: HawkesParams
    parent_time: float | None = None

    @property
    def is_background(self) -> bool:
        return self.parent_time is None

    def evaluate(self, t):
        if self.parent_time is None:
            return ConstantIntensity(self.params.mu).evaluate(t)
        return self.params.alpha * self.params.kernel(np.asarray(t, dtype=float) - self.parent_time)

    def upper_bound(self, horizon: float) -> float:
        return self.params.mu if self.parent_time is None else self.params.alpha


@dataclass(frozen=True)
class SirEdgeKernel:
    """Per-edge infection pressure from one infectious node.

    Rate ``beta`` on ``[start, end)`` and zero elsewhere.  An optional switch
    changes the rate to ``beta_after`` from ``switch_time`` on, which is how
    threshold-activated interventions act on an edge.  ``include_end`` closes
    the interval on the right; it is used for an edge whose observed
    transmission happened exactly at ``end``.
    """

    beta: float
    start: float
    end: float
    switch_time: float = math.inf
    beta_after: float | None = None
    include_end: bool = False

    def __post_init__(self):
        _check_nonneg(beta=self.beta)
        if self.beta_after is not None:
            _check_nonneg(beta_after=self.beta_after)

    def evaluate(self, t):
        tt = np.asarray(t, dtype=float)
        inside = (tt >= self.start) & ((tt <= self.end) if self.include_end else (tt < self.end))
        rate = self.beta
        if self.beta_after is not None:
            rate = np.where(tt >= self.switch_time, self.beta_after, self.beta)
        out = np.where(inside, rate, 0.0)
        return float(out) if out.ndim == 0 else out

    def upper_bound(self, horizon: float) -> float:
        return max(self.beta, self.beta_after or 0.0)


def hawkes_total_intensity(params: HawkesParams, history: Sequence[float], t: float) -> float:
    """``mu + alpha * sum(g(t - t_i))`` over history events strictly before ``t``."""
    h = np.asarray(history, dtype=float)
    if h.size > 1 and np.any(np.diff(h) < 0):
        raise ObservationError("history must be sorted")
    past = h[h < t]
    return float(params.mu + params.alpha * np.exp(-params.omega * (t - past)).sum())


def intensity_from_config(cfg: dict, rbf_form: str | None = None):
    """Build an intensity from its JSON form (see README for the schema)."""
    kind = cfg.get("kind")
    try:
        if kind == "constant":
            return ConstantIntensity(float(cfg["rate"]))
        if kind == "rbf":
            comps = tuple(RbfComponent(float(c["phi"]), float(c["alpha"]), float(c["tau"]))
                          for c in cfg["components"])
            return RbfMixtureIntensity(comps, rbf_form or cfg.get("rbf_form", "gaussian"))
        if kind == "hawkes":
            return HawkesParams(float(cfg["mu"]), float(cfg["alpha"]), float(cfg["omega"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed {kind!r} intensity config: {exc}") from exc
    raise ConfigError(f"unknown intensity kind {kind!r}")


def intensity_to_config(obj) -> dict:
    if isinstance(obj, ConstantIntensity):
        return {"kind": "constant", "rate": obj.rate}
    if isinstance(obj, RbfMixtureIntensity):
        return {"kind": "rbf", "rbf_form": obj.form,
                "components": [{"phi": c.phi, "alpha": c.alpha, "tau": c.tau} for c in obj.components]}
    if isinstance(obj, HawkesParams):
        return {"kind": "hawkes", "mu": obj.mu, "alpha": obj.alpha, "omega": obj.omega}
    raise TypeError(f"cannot serialize {type(obj).__name__}")
