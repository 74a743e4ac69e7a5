"""Lewis thinning and the counterfactual acceptance pass over a thinning trace."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gumbel_scm import _check_rates, counterfactual_decisions
from .randomness import Stream


@dataclass(frozen=True, eq=False)
class EventSequence:
    """Strictly increasing event times on ``[0, horizon]``."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ValueError("event times must be strictly increasing")
            if t[0] < 0 or t[-1] > self.horizon:
                raise ValueError(f"event times must lie in [0, {self.horizon}]")

    def __len__(self):
        return self.times.size

    def __iter__(self):
        return iter(self.times.tolist())

    def __eq__(self, other):
        if not isinstance(other, EventSequence):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.times, other.times)

    def count(self, t) -> np.ndarray:
        """Right-continuous counting process N(t) = #{t_i <= t}."""
        return np.searchsorted(self.times, t, side="right")

    def issubset(self, other: "EventSequence") -> bool:
        return bool(np.isin(self.times, other.times).all())

    def to_list(self) -> list[float]:
        return self.times.tolist()


def _sequence(times, horizon) -> EventSequence:
    return EventSequence(np.sort(np.asarray(times, dtype=float)), horizon)


@dataclass(frozen=True)
class ThinningRecord:
    accepted: EventSequence
    rejected: EventSequence
    lambda_max: float

    def __post_init__(self):
        if not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")
        if np.intersect1d(self.accepted.times, self.rejected.times).size:
            raise ValueError("accepted and rejected events overlap")

    @property
    def horizon(self) -> float:
        return self.accepted.horizon

    def candidates(self) -> tuple[np.ndarray, np.ndarray]:
        """All candidate times in order and their acceptance flags."""
        t = np.concatenate([self.accepted.times, self.rejected.times])
        x = np.concatenate([np.ones(len(self.accepted), np.int8), np.zeros(len(self.rejected), np.int8)])
        order = np.argsort(t, kind="stable")
        return t[order], x[order]

    def to_dict(self) -> dict:
        return {"accepted": self.accepted.to_list(), "rejected": self.rejected.to_list(),
                "lambda_max": self.lambda_max, "horizon": self.horizon}

    @classmethod
    def from_dict(cls, d: dict) -> "ThinningRecord":
        T = float(d.get("horizon") or max([*d["accepted"], *d["rejected"], 1.0]))
        return cls(_sequence(d["accepted"], T), _sequence(d["rejected"], T), float(d["lambda_max"]))


def poisson_candidates(rate: float, start: float, horizon: float, stream: Stream) -> np.ndarray:
    """Arrival times of a homogeneous Poisson(rate) process on (start, horizon].

    Inter-arrival gaps are -log(u)/rate, drawn in blocks.
    """
    if not rate > 0:
        raise ValueError(f"dominating rate must be positive, got {rate}")
    if start >= horizon:
        return np.empty(0)
    mean = rate * (horizon - start)
    block = int(mean + 4.0 * math.sqrt(mean) + 8)
    out = []
    s = start
    while True:
        arrivals = s + np.cumsum(stream.exponential(rate, block))
        inside = arrivals[arrivals <= horizon]
        out.append(inside)
        if inside.size < block:
            break
        s = arrivals[-1]
    return out[0] if len(out) == 1 else np.concatenate(out)


def lewis_sample(intensity, lambda_max: float, horizon: float, stream: Stream,
                 start: float = 0.0) -> ThinningRecord:
    """Lewis' thinning: Poisson(lambda_max) candidates, each kept w.p. lambda(s)/lambda_max.

    ``start`` skips candidates before a time where the intensity is known to
    vanish (offspring kernels); candidates there would all be rejected.
    """
    cand = poisson_candidates(lambda_max, start, horizon, stream)
    lam = _check_rates(intensity.evaluate(cand), lambda_max)
    keep = stream.uniform(cand.size) <= lam / lambda_max
    return ThinningRecord(EventSequence(cand[keep], horizon), EventSequence(cand[~keep], horizon), lambda_max)


def merge_candidates(observed: np.ndarray, rejected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge observed (accepted) and sampled rejected times into one ordered trace.

    A rejected time exactly equal to an observed one is nudged up by one ulp so
    the merged candidate set stays strictly increasing.
    """
    rejected = np.asarray(rejected, dtype=float)
    if observed.size and rejected.size:
        obs_set = set(observed.tolist())
        while True:
            clash = np.fromiter((r in obs_set for r in rejected.tolist()), bool, rejected.size)
            if not clash.any():
                break
            rejected = np.where(clash, np.nextafter(rejected, np.inf), rejected)
    t = np.concatenate([observed, rejected])
    x = np.concatenate([np.ones(observed.size, np.int8), np.zeros(rejected.size, np.int8)])
    order = np.argsort(t, kind="stable")
    return t[order], x[order]


def counterfactual_acceptance(lambda_m, lambda_cf, record: ThinningRecord, stream: Stream,
                              mode: str = "exact", k: int = 100) -> EventSequence:
    """Re-decide every candidate of ``record`` under ``lambda_cf``."""
    t, x = record.candidates()
    return EventSequence(
        t[counterfactual_candidates(lambda_m, lambda_cf, t, x, record.lambda_max, stream, mode, k)],
        record.horizon)


def counterfactual_candidates(lambda_m, lambda_cf, t, x, lambda_max, stream, mode="exact", k=100):
    """Boolean mask of candidates accepted in the counterfactual."""
    if t.size == 0:
        return np.zeros(0, bool)
    lam_m = lambda_m.evaluate(t)
    lam_cf = lambda_cf.evaluate(t)
    return counterfactual_decisions(x, lam_m, lam_cf, lambda_max, stream, mode, k).astype(bool)


# serialization ---------------------------------------------------------------

def write_events_csv(path, seq: EventSequence | np.ndarray) -> None:
    times = seq.times if isinstance(seq, EventSequence) else np.asarray(seq)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"])
        for v in times.tolist():
            w.writerow([repr(v)])


def read_events_csv(path, horizon: float | None = None) -> EventSequence:
    """Read the ``t`` column of a CSV; other columns are ignored."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and "t" not in rows[0]:
        raise ValueError(f"{path}: missing 't' column")
    times = np.array([float(r["t"]) for r in rows], dtype=float)
    times.sort()
    T = horizon if horizon is not None else (float(times[-1]) if times.size else 1.0)
    return EventSequence(times, T)


def events_to_json(seq: EventSequence) -> str:
    return json.dumps(seq.to_list())


def events_from_json(text: str, horizon: float) -> EventSequence:
    return _sequence(json.loads(text), horizon)


def write_record_json(path, record: ThinningRecord) -> None:
    Path(path).write_text(json.dumps(record.to_dict(), indent=1))


def read_record_json(path) -> ThinningRecord:
    return ThinningRecord.from_dict(json.loads(Path(path).read_text()))
