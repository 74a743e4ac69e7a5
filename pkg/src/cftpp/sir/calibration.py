"""Basic reproduction numbers by simulation, and grid-search calibration of the SBM."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, replace

import numpy as np

from ..randomness import Label, Stream
from .epidemic import SirParams, sample_outbreak
from .network import COUNTRIES, ContactNetwork, Geography, SbmProbabilities, generate_network

WHO_R0 = {"GN": 1.71, "LB": 1.83, "SL": 2.02}


def estimate_r0(network: ContactNetwork, params: SirParams, n_runs: int, stream: Stream,
                horizon: float = math.inf) -> dict[str, tuple[float, float, float]]:
    """Per-country R0 as ``(mean, ci_low, ci_high)`` with a 95% normal interval.

    Each run seeds one uniformly chosen node per country at time zero and
    counts the infections each seed causes directly.
    """
    if n_runs < 30:
        raise ValueError("n_runs must be at least 30")
    country = network.node_country()
    present = [c for c in COUNTRIES if np.any(country == c)]
    pools = {c: np.flatnonzero(country == c) for c in present}
    samples = {c: np.empty(n_runs) for c in present}
    for r in range(n_runs):
        s = stream.child(Label.REALIZATION, r)
        seeds = {c: int(pools[c][s.integers(pools[c].size)]) for c in present}
        ob = sample_outbreak(network, params, list(seeds.values()), horizon, s, stop_after_seeds=True)
        for c, node in seeds.items():
            samples[c][r] = np.count_nonzero(ob.infector == node)
    out = {}
    for c in present:
        x = samples[c]
        half = 1.96 * x.std(ddof=1) / math.sqrt(n_runs)
        out[c] = (float(x.mean()), float(x.mean() - half), float(x.mean() + half))
    return out


def calibrate(geo: Geography, targets: dict[str, float], grid: dict[str, list[float]],
              stream: Stream, params: SirParams = SirParams(), n_runs: int = 200,
              base: SbmProbabilities = SbmProbabilities()) -> tuple[SbmProbabilities, list[dict]]:
    """Exhaustive grid search over SBM probabilities matching per-country R0 targets.

    Every grid point reuses the same network and seeding streams, so the
    comparison between points is not blurred by independent noise.  Returns
    the best probabilities and one record per grid point.
    """
    fields = list(grid)
    unknown = set(fields) - set(asdict(base))
    if unknown:
        raise ValueError(f"unknown probability fields {sorted(unknown)}")
    if not fields or any(len(grid[f]) == 0 for f in fields):
        raise ValueError("grid must be nonempty")
    net_key = stream.child(Label.NETWORK, 0)
    runs_key = stream.child(Label.REPLICATE, 0)
    best, best_loss, table = None, math.inf, []
    for values in itertools.product(*(grid[f] for f in fields)):
        probs = replace(base, **dict(zip(fields, map(float, values))))
        net = generate_network(geo, probs, Stream(net_key.key))
        r0 = estimate_r0(net, params, n_runs, Stream(runs_key.key))
        loss = sum((r0[c][0] - t) ** 2 for c, t in targets.items() if c in r0)
        table.append({**asdict(probs), **{f"r0_{c}": r0[c][0] for c in r0}, "loss": loss})
        if loss < best_loss:
            best, best_loss = probs, loss
    return best, table
