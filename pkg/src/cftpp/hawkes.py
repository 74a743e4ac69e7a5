"""Linear Hawkes processes through their branching (cluster) representation.

A Hawkes process with exponential kernel is a superposition of a background
Poisson process of rate ``mu`` and, for every event ``t_i``, an offspring
process of intensity ``alpha * exp(-omega * (t - t_i))``.  All of these are
dominated by ``max(mu, alpha)``, so each branch can be thinned and
counterfactually re-thinned on its own with one shared ``lambda_max``.

The per-branch loops work on Python floats: branches hold a handful of
candidates, where array overhead would dominate.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import CftppError, DominatingRateError, ObservationError
from .gumbel_scm import counterfactual_sample
from .intensity import HawkesParams
from .randomness import Stream
from .thinning import EventSequence

BACKGROUND = -1
DEFAULT_EVENT_CAP = 100_000
ORIGINS = ("kept", "background_new", "offspring_of_kept", "offspring_of_new")
KEPT, BACKGROUND_NEW, OFFSPRING_OF_KEPT, OFFSPRING_OF_NEW = range(4)


@dataclass(frozen=True)
class BranchAssignment:
    """``parents[i]`` is the index of the event that caused event ``i``, or -1 for background."""

    parents: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.parents, dtype=np.int64)
        if np.any(p >= np.arange(p.size)) or np.any(p < BACKGROUND):
            raise ValueError("every parent must be background or an earlier event")
        object.__setattr__(self, "parents", p)

    def children(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.parents == i)

    def as_map(self, times) -> dict[float, float | None]:
        times = np.asarray(times)
        return {float(times[i]): (None if p == BACKGROUND else float(times[p]))
                for i, p in enumerate(self.parents)}


def _check_dominating(lambda_max: float, *params: HawkesParams) -> None:
    need = max(p.peak() for p in params)
    if not lambda_max >= need:
        raise DominatingRateError(
            f"lambda_max {lambda_max} below the largest branch intensity {need}")


def _thin_offspring(alpha: float, omega: float, s: float, lam_max: float, horizon: float,
                    stream: Stream) -> list[float]:
    """Lewis thinning of ``alpha * exp(-omega (t - s))`` on (s, horizon]."""
    out = []
    if alpha <= 0.0:
        return out
    u = stream.uniform
    t = s
    ratio = alpha / lam_max
    while True:
        t -= math.log(u()) / lam_max
        if t > horizon:
            return out
        if u() <= ratio * math.exp(-omega * (t - s)):
            out.append(t)


def _thin_constant(rate: float, s: float, lam_max: float, horizon: float, stream: Stream) -> list[float]:
    out = []
    if rate <= 0.0:
        return out
    u = stream.uniform
    t = s
    p = rate / lam_max
    while True:
        t -= math.log(u()) / lam_max
        if t > horizon:
            return out
        if u() <= p:
            out.append(t)


def sample_hawkes(params: HawkesParams, lambda_max: float, horizon: float, stream: Stream,
                  event_cap: int = DEFAULT_EVENT_CAP) -> tuple[EventSequence, BranchAssignment]:
    """Sample a Hawkes realization on [0, horizon] with its true parentage."""
    _check_dominating(lambda_max, params)
    times = _thin_constant(params.mu, 0.0, lambda_max, horizon, stream)
    parent = [BACKGROUND] * len(times)
    heap = [(t, i) for i, t in enumerate(times)]
    heapq.heapify(heap)
    while heap:
        t_i, i = heapq.heappop(heap)
        for c in _thin_offspring(params.alpha, params.omega, t_i, lambda_max, horizon, stream):
            times.append(c)
            parent.append(i)
            heapq.heappush(heap, (c, len(times) - 1))
        if len(times) > event_cap:
            raise CftppError(f"Hawkes realization exceeded the event cap of {event_cap}")
    return _sorted_with_parents(times, parent, horizon)


def _sorted_with_parents(times, parent, horizon):
    t = np.asarray(times, dtype=float)
    order = np.argsort(t, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    p = np.asarray(parent, dtype=np.int64)[order]
    p = np.where(p == BACKGROUND, BACKGROUND, rank[np.maximum(p, 0)])
    return EventSequence(_strictly_increasing(t[order]), horizon), BranchAssignment(p)


def _strictly_increasing(t: np.ndarray) -> np.ndarray:
    # equal times from different branches have probability zero; keep the set valid anyway
    if t.size > 1 and np.any(np.diff(t) <= 0):
        t = t.copy()
        for i in range(1, t.size):
            if t[i] <= t[i - 1]:
                t[i] = np.nextafter(t[i - 1], np.inf)
    return t


def attribution_weights(observed: EventSequence, params: HawkesParams, i: int) -> np.ndarray:
    """Probability that each branch caused event ``i``: index 0 is background, k+1 is event k."""
    t = observed.times
    w = np.empty(i + 1)
    w[0] = params.mu
    w[1:] = params.alpha * np.exp(-params.omega * (t[i] - t[:i]))
    total = w.sum()
    if not total > 0:
        raise ObservationError(f"zero intensity at observed event t={t[i]}")
    return w / total


def assign(observed: EventSequence, params: HawkesParams, stream: Stream) -> BranchAssignment:
    """Sample the cause of every observed event in proportion to the branch intensities."""
    t = observed.times
    parents = np.empty(t.size, dtype=np.int64)
    for i in range(t.size):
        w = params.alpha * np.exp(-params.omega * (t[i] - t[:i])) if i else np.empty(0)
        cum = np.cumsum(w)
        total = params.mu + (cum[-1] if i else 0.0)
        if not total > 0:
            raise ObservationError(f"zero intensity at observed event t={t[i]}")
        r = stream.uniform() * total
        if r < params.mu or i == 0:
            parents[i] = BACKGROUND
        else:
            parents[i] = min(int(np.searchsorted(cum, r - params.mu, side="right")), i - 1)
    return BranchAssignment(parents)


def _cf_prob(x: int, lo: float, lc: float, lam_max: float) -> float:
    if x:
        return 1.0 if lc >= lo else lc / lo
    return 0.0 if lc <= lo else (lc - lo) / (lam_max - lo)


def _cf_branch(observed: list[float], s: float, gm, gcf, lam_max: float, horizon: float,
               stream: Stream, mode: str, k: int) -> tuple[list[bool], list[float]]:
    """Counterfactual re-thinning of one branch whose observed events are ``observed``.

    ``gm``/``gcf`` are the factual and counterfactual branch intensities as
    scalar callables.  Returns the survival flag of each observed event and the
    newly accepted candidate times.
    """
    u = stream.uniform
    rejected = []
    t = s
    while True:
        t -= math.log(u()) / lam_max
        if t > horizon:
            break
        if u() <= (lam_max - gm(t)) / lam_max:
            rejected.append(t)
    obs_set = set(observed)
    cands = [(o, 1, i) for i, o in enumerate(observed)]
    for r in rejected:
        while r in obs_set:
            r = math.nextafter(r, math.inf)
        cands.append((r, 0, -1))
    cands.sort()
    survived = [False] * len(observed)
    new = []
    for tc, x, idx in cands:
        lo, lc = gm(tc), gcf(tc)
        if lo > lam_max * (1 + 1e-12) or lc > lam_max * (1 + 1e-12):
            raise DominatingRateError(f"branch intensity exceeds lambda_max {lam_max} at t={tc}")
        if mode == "exact":
            keep = u() < _cf_prob(x, min(lo, lam_max), min(lc, lam_max), lam_max)
        else:
            keep = counterfactual_sample(x, min(lo, lam_max), min(lc, lam_max), lam_max, stream, mode, k) == 1
        if keep:
            if x:
                survived[idx] = True
            else:
                new.append(tc)
    return survived, new


@dataclass(frozen=True)
class HawkesCounterfactual:
    events: EventSequence
    origin: np.ndarray  # codes into ORIGINS, aligned with events.times
    truncated: bool = False

    def origin_labels(self) -> list[str]:
        return [ORIGINS[o] for o in self.origin]


def counterfactual_hawkes_trace(params_m: HawkesParams, params_cf: HawkesParams,
                                observed: EventSequence, lambda_max: float, horizon: float,
                                stream: Stream, mode: str = "exact", k: int = 100,
                                event_cap: int = DEFAULT_EVENT_CAP,
                                assignment: BranchAssignment | None = None) -> HawkesCounterfactual:
    """Counterfactual Hawkes realization with per-event provenance.

    Observed events are first attributed to branches.  The background branch
    and then, in chronological order, the offspring branch of every observed
    event that survives are re-thinned counterfactually.  Events that are new
    in the counterfactual spawn fresh offspring under ``params_cf``, in global
    time order.  Past ``event_cap`` events the realization is truncated and
    flagged.
    """
    _check_dominating(lambda_max, params_m, params_cf)
    t_obs = observed.times
    if len(t_obs) and t_obs[-1] > horizon:
        raise ValueError("observed events extend past the horizon")
    if assignment is None:
        assignment = assign(observed, params_m, stream)
    parents = assignment.parents
    children = [[] for _ in range(t_obs.size)]
    roots = []
    for i, p in enumerate(parents.tolist()):
        (roots if p == BACKGROUND else children[p]).append(i)
    obs_list = t_obs.tolist()

    mu_m, mu_cf = params_m.mu, params_cf.mu
    a_m, w_m, a_cf, w_cf = params_m.alpha, params_m.omega, params_cf.alpha, params_cf.omega

    alive = [False] * t_obs.size
    out_t, out_o = [], []
    surv, new = _cf_branch([obs_list[i] for i in roots], 0.0, lambda t: mu_m, lambda t: mu_cf,
                           lambda_max, horizon, stream, mode, k)
    for i, s in zip(roots, surv):
        alive[i] = s
    out_t.extend(new)
    out_o.extend([BACKGROUND_NEW] * len(new))

    for j in range(t_obs.size):
        if not alive[j]:
            continue
        out_t.append(obs_list[j])
        out_o.append(KEPT)
        tj = obs_list[j]
        kids = children[j]
        surv, new = _cf_branch([obs_list[i] for i in kids], tj,
                               lambda t: a_m * math.exp(-w_m * (t - tj)),
                               lambda t: a_cf * math.exp(-w_cf * (t - tj)),
                               lambda_max, horizon, stream, mode, k)
        for i, s in zip(kids, surv):
            alive[i] = s
        out_t.extend(new)
        out_o.extend([OFFSPRING_OF_KEPT] * len(new))

    truncated = False
    heap = [t for t, o in zip(out_t, out_o) if o != KEPT]
    heapq.heapify(heap)
    while heap:
        if len(out_t) > event_cap:
            truncated = True
            break
        tk = heapq.heappop(heap)
        for c in _thin_offspring(a_cf, w_cf, tk, lambda_max, horizon, stream):
            out_t.append(c)
            out_o.append(OFFSPRING_OF_NEW)
            heapq.heappush(heap, c)

    t = np.asarray(out_t, dtype=float)
    order = np.argsort(t, kind="stable")
    return HawkesCounterfactual(EventSequence(_strictly_increasing(t[order]), horizon),
                                np.asarray(out_o, dtype=np.int8)[order], truncated)


def counterfactual_hawkes(params_m: HawkesParams, params_cf: HawkesParams, observed: EventSequence,
                          lambda_max: float, horizon: float, stream: Stream, mode: str = "exact",
                          k: int = 100, event_cap: int = DEFAULT_EVENT_CAP) -> EventSequence:
    return counterfactual_hawkes_trace(params_m, params_cf, observed, lambda_max, horizon, stream,
                                       mode, k, event_cap).events


def parse_params(text: str) -> HawkesParams:
    """``"mu,alpha,omega"`` -> HawkesParams."""
    try:
        mu, alpha, omega = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise ValueError(f"expected mu,alpha,omega, got {text!r}") from exc
    return HawkesParams(mu, alpha, omega)
