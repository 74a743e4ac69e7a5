"""Counterfactuals for inhomogeneous Poisson processes from observed events.

Real event data carries no rejected candidates.  By superposition, a thinning
run that accepted exactly the observed events would have rejected a Poisson
process with intensity ``lambda_max - lambda_m(t)``; sampling it supplies the
missing half of the trace, after which the counterfactual acceptance pass
applies unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ObservationError
from .gumbel_scm import _check_rates
from .randomness import Stream
from .thinning import (EventSequence, ThinningRecord, counterfactual_candidates, lewis_sample,
                       merge_candidates)


@dataclass(frozen=True)
class ResidualIntensity:
    """``lambda_max - base(t)``: the intensity of the rejected candidates."""

    base: object
    lambda_max: float

    def evaluate(self, t):
        lam = _check_rates(self.base.evaluate(t), self.lambda_max)
        out = self.lambda_max - lam
        return float(out) if np.ndim(out) == 0 else out

    def upper_bound(self, horizon: float) -> float:
        return self.lambda_max


def _check_observed(lambda_m, observed: EventSequence, lambda_max: float) -> None:
    lam = _check_rates(lambda_m.evaluate(observed.times), lambda_max, "factual intensity")
    if np.any(np.asarray(lam) <= 0):
        bad = observed.times[np.asarray(lam) <= 0][0]
        raise ObservationError(f"observed event at t={bad} has zero factual intensity")


def sample_plausible_rejections(lambda_m, observed: EventSequence, lambda_max: float,
                                horizon: float, stream: Stream, start: float = 0.0) -> EventSequence:
    record = lewis_sample(ResidualIntensity(lambda_m, lambda_max), lambda_max, horizon, stream, start)
    return record.accepted


def abduce_record(lambda_m, observed: EventSequence, lambda_max: float, horizon: float,
                  stream: Stream) -> ThinningRecord:
    """A plausible full thinning trace whose accepted events are ``observed``."""
    _check_observed(lambda_m, observed, lambda_max)
    rej = sample_plausible_rejections(lambda_m, observed, lambda_max, horizon, stream).times
    t, x = merge_candidates(observed.times, rej)
    return ThinningRecord(EventSequence(t[x == 1], horizon), EventSequence(t[x == 0], horizon), lambda_max)


def counterfactual_poisson(lambda_m, lambda_cf, observed: EventSequence, lambda_max: float,
                           horizon: float, stream: Stream, mode: str = "exact", k: int = 100,
                           rejections: EventSequence | None = None) -> EventSequence:
    """One counterfactual realization of the observed sequence under ``lambda_cf``.

    ``rejections`` reuses a previously sampled rejection set instead of drawing
    a fresh one (the ``share_rejections`` variance study).
    """
    if len(observed) and observed.times[-1] > horizon:
        raise ValueError("observed events extend past the horizon")
    _check_observed(lambda_m, observed, lambda_max)
    if rejections is None:
        rejections = sample_plausible_rejections(lambda_m, observed, lambda_max, horizon, stream)
    t, x = merge_candidates(observed.times, rejections.times)
    keep = counterfactual_candidates(lambda_m, lambda_cf, t, x, lambda_max, stream, mode, k)
    return EventSequence(t[keep], horizon)
