"""Gumbel-Max structural causal model of a single thinning decision.

A candidate event at time t is accepted (X = 1) when

    log p(X=1) + U_1 >= log p(X=0) + U_0,    p(X=1) = lambda(t) / lambda_max,

with U_0, U_1 i.i.d. standard Gumbel.  Given an observed decision, the noise
posterior is sampled top-down (max first, then a truncated Gumbel for the
other outcome), and re-evaluating the argmax under a different intensity gives
a counterfactual decision.  Because the model is binary and monotone, the
counterfactual acceptance probability also has a closed form, which is what the
samplers use by default.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DominatingRateError, ObservationError
from .randomness import Stream

# relative slack for intensities that equal lambda_max up to rounding
_RTOL = 1e-12


def _check_rates(lam, lam_max, name="intensity"):
    if not lam_max > 0:
        raise DominatingRateError(f"dominating rate must be positive, got {lam_max}")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or np.any(np.isnan(lam)):
        raise ValueError(f"{name} must be nonnegative")
    if np.any(lam > lam_max * (1 + _RTOL)):
        worst = float(np.max(lam))
        raise DominatingRateError(
            f"{name} {worst:.6g} exceeds dominating rate {lam_max:.6g}")
    return np.minimum(lam, lam_max)


def thinning_prob(lam: float, lam_max: float) -> float:
    lam = _check_rates(lam, lam_max)
    return float(lam / lam_max) if lam.ndim == 0 else lam / lam_max


def _log(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf


def _logp(p: float) -> tuple[float, float]:
    """(log p(X=0), log p(X=1))."""
    return _log(1.0 - p), _log(p)


def _argmax(s0, s1):
    # ties go to acceptance
    return (np.asarray(s1) >= np.asarray(s0)).astype(np.int8)


def sample_factual(lam: float, lam_max: float, stream: Stream) -> int:
    """Draw one thinning decision through the Gumbel-Max mechanism."""
    p = thinning_prob(lam, lam_max)
    l0, l1 = _logp(p)
    u0, u1 = stream.gumbel(), stream.gumbel()
    return int(l1 + u1 >= l0 + u0)


@dataclass(frozen=True)
class ThinningDecision:
    t: float
    x_obs: int
    lambda_obs: float
    lambda_max: float

    def __post_init__(self):
        if self.x_obs not in (0, 1):
            raise ValueError("x_obs must be 0 or 1")
        _check_rates(self.lambda_obs, self.lambda_max)


@dataclass(frozen=True)
class PosteriorNoise:
    u0: float
    u1: float

    def decide(self, lam: float, lam_max: float) -> int:
        l0, l1 = _logp(thinning_prob(lam, lam_max))
        return int(l1 + self.u1 >= l0 + self.u0)


def abduct_noise_batch(x_obs: int, lam_obs: float, lam_max: float, stream: Stream, size: int):
    """``size`` posterior draws of (U_0, U_1) given one observed decision.

    Returns two arrays.  The outcome that was observed carries the maximum
    Gumbel value; the other is a Gumbel truncated above at that maximum.  An
    outcome with probability zero under the factual intensity is unconstrained
    by the observation and keeps its prior.
    """
    p = thinning_prob(lam_obs, lam_max)
    logs = _logp(p)
    if logs[x_obs] == -math.inf:
        raise ObservationError(
            f"observed decision x={x_obs} has zero likelihood at intensity {lam_obs} (lambda_max {lam_max})")
    other = 1 - x_obs
    top = stream.gumbel(size)  # location log(p + (1 - p)) = 0
    g = [None, None]
    g[x_obs] = top
    phi = logs[other]
    if phi == -math.inf:
        noise_other = stream.gumbel(size)
    else:
        u = stream.uniform(size)
        g_other = phi - np.log(np.exp(-(top - phi)) - np.log(u))
        noise_other = g_other - phi
    noise_obs = top - logs[x_obs]
    return (noise_obs, noise_other) if x_obs == 0 else (noise_other, noise_obs)


def abduct_noise(decision: ThinningDecision, stream: Stream) -> PosteriorNoise:
    u0, u1 = abduct_noise_batch(decision.x_obs, decision.lambda_obs, decision.lambda_max, stream, 1)
    return PosteriorNoise(float(u0[0]), float(u1[0]))


def counterfactual_prob_exact(x_obs, lam_obs, lam_cf, lam_max):
    """P(X' = 1 | X = x_obs, Lambda = lam_obs; do(Lambda = lam_cf)).

    Accepted stays accepted when the intensity does not drop, and survives a
    drop with probability lam_cf / lam_obs.  Rejected stays rejected when the
    intensity does not rise, and flips with probability
    (lam_cf - lam_obs) / (lam_max - lam_obs) otherwise.  Vectorized over all
    arguments except ``lam_max``.
    """
    lo = _check_rates(lam_obs, lam_max, "factual intensity")
    lc = _check_rates(lam_cf, lam_max, "counterfactual intensity")
    x = np.asarray(x_obs)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        up = np.where(lc > lo, (lc - lo) / (lam_max - lo), 0.0)
        down = np.where(lc < lo, lc / lo, 1.0)
    out = np.where(x == 1, down, up)
    return float(out) if out.ndim == 0 else out


def counterfactual_prob_montecarlo(x_obs: int, lam_obs: float, lam_cf: float, lam_max: float,
                                   stream: Stream, k: int = 100) -> float:
    """Average of counterfactual argmax indicators over ``k`` abducted noise draws."""
    lc = float(_check_rates(lam_cf, lam_max, "counterfactual intensity"))
    u0, u1 = abduct_noise_batch(x_obs, lam_obs, lam_max, stream, k)
    l0, l1 = _logp(lc / lam_max)
    return float(_argmax(l0 + u0, l1 + u1).mean())


def counterfactual_sample(x_obs: int, lam_obs: float, lam_cf: float, lam_max: float,
                          stream: Stream, mode: str = "exact", k: int = 100) -> int:
    if mode == "exact":
        p = counterfactual_prob_exact(x_obs, lam_obs, lam_cf, lam_max)
    elif mode == "montecarlo":
        p = counterfactual_prob_montecarlo(x_obs, lam_obs, lam_cf, lam_max, stream, k)
    else:
        raise ValueError(f"unknown counterfactual mode {mode!r}")
    return int(stream.uniform() < p)


def counterfactual_decisions(x_obs, lam_obs, lam_cf, lam_max: float, stream: Stream,
                             mode: str = "exact", k: int = 100) -> np.ndarray:
    """Vectorized counterfactual decisions for a batch of candidates, in order.

    Exact mode consumes one uniform per candidate.  Monte-Carlo mode consumes
    the abduction draws of each candidate in turn, then one uniform.
    """
    x_obs = np.asarray(x_obs, dtype=np.int8)
    lam_obs = np.asarray(lam_obs, dtype=float)
    lam_cf = np.asarray(lam_cf, dtype=float)
    if mode == "exact":
        p = np.atleast_1d(counterfactual_prob_exact(x_obs, lam_obs, lam_cf, lam_max))
        return stream.bernoulli(p, len(p)).astype(np.int8)
    if mode != "montecarlo":
        raise ValueError(f"unknown counterfactual mode {mode!r}")
    out = np.empty(len(x_obs), dtype=np.int8)
    for i in range(len(x_obs)):
        out[i] = counterfactual_sample(int(x_obs[i]), float(lam_obs[i]), float(lam_cf[i]),
                                       lam_max, stream, "montecarlo", k)
    return out
